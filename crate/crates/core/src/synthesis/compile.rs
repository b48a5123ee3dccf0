//! Compiling an arbitrary unitary on the computational space into pulses.
//!
//! The target is reduced to the identity by Givens rotations on adjacent
//! index pairs, each of which is a single carrier or sideband block.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{invalid, Result};
use crate::pulses::{BasisState, PulseSequence};
use crate::rotations::{Su2Matrix, C64};

use super::two_level::TwoLevelTarget;
use super::{CleaningOptions, Synthesizer};

/// A two-level gate on indices `(lower, lower + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelFactor {
    pub lower: usize,
    pub gate: Su2Matrix,
}

#[derive(Debug, Clone)]
pub struct CompiledUnitary {
    pub sequence: PulseSequence,
    /// In application order.
    pub factors: Vec<TwoLevelFactor>,
    /// The target equals `exp(i global_phase)` times the realized unitary.
    pub global_phase: f64,
}

const SKIP_TOL: f64 = 1e-14;

/// Two-level factors whose product, in application order, equals `u`.
/// `u` must be special unitary.
pub fn givens_factors(u: &DMatrix<C64>) -> Vec<TwoLevelFactor> {
    let d = u.nrows();
    let mut w = u.clone();
    let mut elim = Vec::new();
    for c in 0..d.saturating_sub(1) {
        for r in (c + 1..d).rev() {
            let (x, y) = (w[(r - 1, c)], w[(r, c)]);
            // The last rotation of a column also clears the phase left on the diagonal.
            if y.norm() < SKIP_TOL && (r != c + 1 || (x - C64::new(1.0, 0.0)).norm() < SKIP_TOL) {
                continue;
            }
            let rho = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let g = Matrix2::new(x.conj(), y.conj(), -y, x) / C64::new(rho, 0.0);
            for col in 0..d {
                let (a, b) = (w[(r - 1, col)], w[(r, col)]);
                w[(r - 1, col)] = g[(0, 0)] * a + g[(0, 1)] * b;
                w[(r, col)] = g[(1, 0)] * a + g[(1, 1)] * b;
            }
            elim.push((r - 1, g));
        }
    }
    // G_m ... G_1 u = I, so u = G_1† ... G_m† and G_m† acts first.
    elim.into_iter()
        .rev()
        .map(|(lower, g)| TwoLevelFactor { lower, gate: Su2Matrix::new(g.adjoint()).expect("unitary 2x2 with unit determinant") })
        .collect()
}

fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let e = u.adjoint() * u - DMatrix::<C64>::identity(u.nrows(), u.ncols());
    e.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl Synthesizer {
    pub fn compile(&self, target: &DMatrix<C64>) -> Result<CompiledUnitary> {
        let d = 2 * (self.n + 1);
        if target.nrows() != d || target.ncols() != d {
            return invalid(format!("target is {}x{}, expected {d}x{d} for n={}", target.nrows(), target.ncols(), self.n));
        }
        if target.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("target has non-finite entries");
        }
        let err = unitarity_error(target);
        if err > 1e-10 {
            return invalid(format!("target is not unitary (error {err:.3e})"));
        }
        let det = target.determinant();
        let global_phase = det.arg() / d as f64;
        let su = target * C64::from_polar(1.0, -global_phase);
        let factors = givens_factors(&su);
        let mut seq = PulseSequence::new(self.n, "compiled unitary");
        for f in &factors {
            let t = TwoLevelTarget {
                bra: BasisState::from_index(f.lower),
                ket: BasisState::from_index(f.lower + 1),
                gate: f.gate,
            };
            seq.append(&self.two_level(&t)?);
        }
        Ok(CompiledUnitary { sequence: seq, factors, global_phase })
    }
}

pub fn compile_unitary(n: usize, target: &DMatrix<C64>, opts: &CleaningOptions) -> Result<CompiledUnitary> {
    Synthesizer::new(n, opts.clone())?.compile(target)
}
