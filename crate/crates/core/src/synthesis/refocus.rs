//! Arbitrary clean rotations by refocusing: `V P† V P` with `P` a pattern
//! that anticommutes with in-plane rotations on every block but one.

use crate::error::{invalid, Error, Result};
use crate::pulses::{inverse_pulses, Pulse, PulseSequence};
use crate::rotations::{su2_in_plane_factors, Su2Matrix};

use super::translate::eq22_signs;
use super::{CleaningOptions, ElementarySigma, Synthesizer};

impl Synthesizer {
    /// `X_j` then `Y_j` on every subspace of the range except `k`; each
    /// block other than `k` ends up proportional to `σz`.
    pub fn z_pattern(&self, k: usize) -> Result<Vec<Pulse>> {
        let range = self.range_max();
        if k < 1 || k > range {
            return invalid(format!("k={k} outside 1..={range}"));
        }
        let mut out = Vec::new();
        for j in (1..=range).filter(|&j| j != k) {
            out.extend_from_slice(&self.elementary(j, ElementarySigma::X)?.sequence.pulses);
            out.extend_from_slice(&self.elementary(j, ElementarySigma::Y)?.sequence.pulses);
        }
        Ok(out)
    }

    /// Clean rotation `w` on sideband subspace `k`.
    pub fn sqm_rotation(&self, k: usize, w: &Su2Matrix) -> Result<Vec<Pulse>> {
        let factors = su2_in_plane_factors(w, 0.0);
        if factors.is_empty() {
            return Ok(Vec::new());
        }
        let pattern = self.z_pattern(k)?;
        let scale = 2.0 * (k as f64).sqrt();
        Ok(refocused(&pattern, factors.iter().rev().map(|(axis, a)| Pulse::sideband(a / scale, axis.y.atan2(axis.x)))))
    }

    /// Sideband signs `−I` on the listed subspaces, `+I` elsewhere.
    pub fn sign_pattern(&self, signs: &[i8]) -> Result<Vec<Pulse>> {
        let mut out = Vec::new();
        for (idx, &s) in signs.iter().enumerate() {
            if s >= 0 {
                continue;
            }
            let j = idx + 1;
            if j > self.range_max() {
                return Err(Error::Synthesis(format!(
                    "sign pattern needs subspace {j}, outside the cleaning range; enable boundary cleaning"
                )));
            }
            let e = self.elementary(j, ElementarySigma::MinusI)?;
            debug_assert!(e.is_clean());
            out.extend_from_slice(&e.sequence.pulses);
        }
        Ok(out)
    }

    /// Clean rotation `w` on carrier block `k`.
    pub fn cqm_rotation(&self, k: usize, w: &Su2Matrix) -> Result<Vec<Pulse>> {
        if k > self.n {
            return invalid(format!("carrier block {k} outside 0..={}", self.n));
        }
        let factors = su2_in_plane_factors(w, 0.0);
        if factors.is_empty() {
            return Ok(Vec::new());
        }
        let pattern = self.sign_pattern(&eq22_signs(self.n, k))?;
        Ok(refocused(&pattern, factors.iter().rev().map(|(axis, a)| Pulse::carrier(a / 2.0, axis.y.atan2(axis.x)))))
    }
}

/// `P, V, P⁻¹, V` per pulse `V`, in application order.
fn refocused(pattern: &[Pulse], pulses: impl Iterator<Item = Pulse>) -> Vec<Pulse> {
    let inv = inverse_pulses(pattern);
    let mut out = Vec::new();
    for v in pulses {
        out.extend_from_slice(pattern);
        out.push(v);
        out.extend_from_slice(&inv);
        out.push(v);
    }
    out
}

pub fn synthesize_z_pattern(n: usize, k: usize, opts: &CleaningOptions) -> Result<PulseSequence> {
    let s = Synthesizer::new(n, opts.clone())?;
    Ok(PulseSequence::from_pulses(n, format!("z pattern except {k}"), s.z_pattern(k)?))
}

pub fn synthesize_sqm_rotation(n: usize, k: usize, w: &Su2Matrix, opts: &CleaningOptions) -> Result<PulseSequence> {
    if k < 1 || k > n {
        return invalid(format!("k={k} outside 1..={n}"));
    }
    let s = Synthesizer::new(n, opts.clone())?;
    Ok(PulseSequence::from_pulses(n, format!("sideband rotation on {k}"), s.sqm_rotation(k, w)?))
}

pub fn synthesize_cqm_rotation(n: usize, k: usize, w: &Su2Matrix, opts: &CleaningOptions) -> Result<PulseSequence> {
    let s = Synthesizer::new(n, opts.clone())?;
    Ok(PulseSequence::from_pulses(n, format!("carrier rotation on {k}"), s.cqm_rotation(k, w)?))
}
