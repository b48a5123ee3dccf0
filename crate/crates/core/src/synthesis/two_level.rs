//! Rotations between two arbitrary computational states.
//!
//! States are ordered by index `2j + α`, which makes consecutive indices
//! alternate between carrier pairs (even lower index) and sideband pairs
//! (odd lower index). Distant pairs are brought together with a chain of
//! `iσx` swaps along this path.

use nalgebra::Matrix2;

use crate::error::{invalid, Result};
use crate::pulses::{apply_sequence, inverse_pulses, BasisState, Pulse, PulseSequence, QoQuditDims};
use crate::rotations::{Su2Matrix, C64};

use super::{CleaningOptions, ElementarySigma, Synthesizer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelTarget {
    pub bra: BasisState,
    pub ket: BasisState,
    /// Action on `(bra, ket)` in that order.
    pub gate: Su2Matrix,
}

impl Synthesizer {
    fn check_state(&self, s: &BasisState) -> Result<()> {
        if s.alpha > 1 || s.level > self.n {
            return invalid(format!("{s} is outside the computational space (n={})", self.n));
        }
        Ok(())
    }

    /// `w` on the adjacent index pair `(e, e+1)`.
    fn edge_rotation(&self, e: usize, w: &Su2Matrix) -> Result<Vec<Pulse>> {
        if e % 2 == 0 {
            self.cqm_rotation(e / 2, w)
        } else {
            // Sideband blocks list |0,j⟩ (index e+1) before |1,j−1⟩ (index e).
            let sx = Su2Matrix::x();
            self.sqm_rotation((e + 1) / 2, &(sx * *w * sx.adjoint()))
        }
    }

    fn edge_swap(&self, e: usize) -> Result<Vec<Pulse>> {
        if e % 2 == 1 {
            let el = self.elementary((e + 1) / 2, ElementarySigma::X)?;
            if el.is_clean() {
                return Ok(el.sequence.pulses);
            }
        }
        self.edge_rotation(e, &Su2Matrix::x())
    }

    pub fn two_level(&self, target: &TwoLevelTarget) -> Result<Vec<Pulse>> {
        self.check_state(&target.bra)?;
        self.check_state(&target.ket)?;
        let (mut a, mut b) = (target.bra.index(), target.ket.index());
        let mut gate = target.gate;
        if a == b {
            return invalid("two-level target needs two distinct states");
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
            let sx = Su2Matrix::x();
            gate = sx * gate * sx.adjoint();
        }
        let mut chain = Vec::new();
        for e in (a + 1..b).rev() {
            chain.extend(self.edge_swap(e)?);
        }
        // The chain sends |a⟩ to c_a|a⟩ and |b⟩ to c_b|a+1⟩; rephase the gate to match.
        let r = if chain.is_empty() {
            gate
        } else {
            let dims = QoQuditDims::new(self.n, 1)?;
            let t = apply_sequence(&PulseSequence::from_pulses(self.n, "chain", chain.clone()), dims)?;
            let ca = t.matrix[(a, a)];
            let cb = t.matrix[(a + 1, b)];
            let d = Matrix2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), cb / ca);
            Su2Matrix::new(d * gate.matrix() * d.adjoint())?
        };
        let mut out = chain.clone();
        out.extend(self.edge_rotation(a, &r)?);
        out.extend(inverse_pulses(&chain));
        Ok(out)
    }
}

pub fn synthesize_two_level(n: usize, target: &TwoLevelTarget, opts: &CleaningOptions) -> Result<PulseSequence> {
    let s = Synthesizer::new(n, opts.clone())?;
    Ok(PulseSequence::from_pulses(n, format!("two-level {}-{}", target.bra, target.ket), s.two_level(target)?))
}
