//! Angle bookkeeping for recursive cleaning and the choices built on it.

use std::f64::consts::PI;

use crate::pulses::{block_product, Pulse, PulseKind};
use crate::rotations::{axis_angle_of, su2_from_axis_angle, su2_in_plane_factors, Su2Matrix, Vec3};

use super::elementary::SynthesisState;

/// SU(2) angle of `Ω_k` after the four-pulse base sequence.
pub fn base_case_angle(k: usize, mu1: usize, mu2: usize) -> f64 {
    let r1 = (k as f64 / mu1 as f64).sqrt();
    let r2 = (k as f64 / mu2 as f64).sqrt();
    let c = 0.5 * (1.0 + (2.0 * PI * r1).cos() - 2.0 * (PI * r2).cos() * (PI * r1).sin().powi(2));
    2.0 * c.clamp(-1.0, 1.0).acos()
}

/// SU(2) angle of two in-plane rotations composed on subspace `k`; the
/// pulses belong to a conjugator built for subspace `mu`.
pub fn composed_angle(a: &Vec3, theta_a: f64, b: &Vec3, theta_b: f64, k: usize, mu: usize) -> f64 {
    let s = (k as f64 / mu as f64).sqrt();
    let (ha, hb) = (0.5 * theta_a * s, 0.5 * theta_b * s);
    let c = ha.cos() * hb.cos() - a.dot(b) * ha.sin() * hb.sin();
    2.0 * c.clamp(-1.0, 1.0).acos()
}

/// `k_j · k_ab` for the axis of `C U C†` on subspace `k`.
pub fn conjugated_axis_overlap(k_axis: &Vec3, r_ab: &Vec3, theta_ab: f64) -> f64 {
    let p = k_axis.dot(r_ab);
    p * p + (1.0 - p * p) * theta_ab.cos()
}

/// SU(2) angle of `Ω_k (C Ω_k C†)` given the overlap of the two axes.
pub fn next_angle(theta_k: f64, overlap: f64) -> f64 {
    let c = 0.5 * (1.0 - overlap + (1.0 + overlap) * theta_k.cos());
    2.0 * c.clamp(-1.0, 1.0).acos()
}

/// Sufficient conditions keeping `θ_k ≥ π/t` after a cleaning step:
/// `(threshold on cos θ_ab, threshold on |k·r_ab|)`.
pub fn step_thresholds(theta_k: f64, t: f64) -> (f64, f64) {
    let c = (PI / (2.0 * t)).cos();
    let den = 1.0 - theta_k.cos();
    let cos_ab = (1.0 + theta_k.cos() - 2.0 * c) / den;
    let overlap = ((1.0 - c) / den).sqrt();
    (cos_ab, overlap)
}

/// Folds an SU(2) angle into the SO(3) range [0, π].
pub fn so3_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        2.0 * PI - t
    } else {
        t
    }
}

/// Pulses of kind `kind` whose product on block `j` equals `u`.
pub fn realize_on_block(u: &Su2Matrix, j: usize, free_angle: f64, kind: PulseKind) -> Vec<Pulse> {
    let scale = match kind {
        PulseKind::Carrier => 1.0,
        PulseKind::RedSideband => (j as f64).sqrt(),
    };
    su2_in_plane_factors(u, free_angle)
        .into_iter()
        .rev()
        .map(|(axis, a)| {
            let phi = axis.y.atan2(axis.x);
            match kind {
                PulseKind::Carrier => Pulse::carrier(a / scale, phi),
                PulseKind::RedSideband => Pulse::sideband(a / scale, phi),
            }
        })
        .collect()
}

/// Unit vector perpendicular to `axis`, parameterized by `psi`.
pub fn perpendicular(axis: &Vec3, psi: f64) -> Vec3 {
    let e = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let p1 = axis.cross(&e).normalize();
    let p2 = axis.cross(&p1);
    p1 * psi.cos() + p2 * psi.sin()
}

/// The two-pulse conjugator `C` realizing a π rotation about an axis
/// perpendicular to the rotation axis of `omega_mu`.
pub fn conjugator(omega_mu: &Su2Matrix, mu: usize, psi: f64, free_angle: f64) -> Vec<Pulse> {
    let axis = axis_angle_of(omega_mu).axis;
    let perp = perpendicular(&axis, psi);
    let c = su2_from_axis_angle(&perp, PI).expect("unit axis");
    realize_on_block(&c, mu, free_angle, PulseKind::RedSideband)
}

/// Predicted SU(2) angle on subspace `k` after cleaning with `c`.
pub fn predict_step_angle(omega_k: &Su2Matrix, c: &[Pulse], k: usize, mu: usize) -> f64 {
    let kk = axis_angle_of(omega_k);
    let ck = block_product(c, k);
    let ab = axis_angle_of(&ck);
    let theta_ab = match c {
        [] => 0.0,
        [p] => (k as f64).sqrt() * p.theta.abs(),
        [p, q, ..] => {
            let s = (mu as f64).sqrt();
            let a = Vec3::new(p.phi.cos(), p.phi.sin(), 0.0);
            let b = Vec3::new(q.phi.cos(), q.phi.sin(), 0.0);
            composed_angle(&a, p.theta * s, &b, q.theta * s, k, mu)
        }
    };
    let overlap = conjugated_axis_overlap(&kk.axis, &ab.axis, theta_ab);
    next_angle(kk.angle, overlap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepChoice {
    pub mu: usize,
    pub psi: f64,
    pub free_angle: f64,
    /// Predicted SO(3) angle on subspace `k` after the step.
    pub predicted: f64,
    pub warning: Option<String>,
}

/// Picks the next subspace to clean and its conjugator parameters.
pub fn cleaning_order_heuristic(state: &SynthesisState, t_floor: u32, grid: usize) -> Option<StepChoice> {
    let todo = state.uncleaned();
    let k = state.k;
    let omega_k = state.block(k);
    let mut best: Vec<StepChoice> = Vec::new();
    for &mu in &todo {
        let omega_mu = state.block(mu);
        let mut top: Option<StepChoice> = None;
        for ia in 0..grid {
            let psi = PI * ia as f64 / grid as f64;
            for ib in 0..grid {
                let phi = 2.0 * PI * ib as f64 / grid as f64;
                let c = conjugator(&omega_mu, mu, psi, phi);
                let predicted = so3_angle(predict_step_angle(&omega_k, &c, k, mu));
                if top.as_ref().is_none_or(|t| predicted > t.predicted) {
                    top = Some(StepChoice { mu, psi, free_angle: phi, predicted, warning: None });
                }
            }
        }
        best.extend(top);
    }
    let floor = PI / t_floor as f64 - 1e-12;
    let ratio = |mu: usize| {
        let r = mu as f64 / k as f64;
        r.max(1.0 / r)
    };
    let pick = best
        .iter()
        .filter(|c| c.predicted >= floor)
        .fold(None::<&StepChoice>, |acc, c| match acc {
            Some(a) if ratio(a.mu) >= ratio(c.mu) => Some(a),
            _ => Some(c),
        });
    match pick {
        Some(c) => Some(c.clone()),
        None => best.into_iter().next().map(|mut c| {
            c.warning = Some(format!(
                "no subspace keeps the angle on {k} above pi/{t_floor}; cleaning {} (predicted {:.4})",
                c.mu, c.predicted
            ));
            c
        }),
    }
}

/// Estimated final length when the base step leaves `uncleaned` subspaces.
pub fn estimated_count(uncleaned: usize, theta_k: f64) -> usize {
    let base = (1usize << (uncleaned + 3)) - 4;
    let l = if uncleaned == 0 { final_power(so3_angle(theta_k)) } else { 1 };
    (l + 1) * base + 8
}

/// `l = ⌈π/θ⌉ − 1` for an SO(3) angle θ ∈ (0, π].
pub fn final_power(theta: f64) -> usize {
    ((PI / theta).ceil() as usize).saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::block_product;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worst_case_thresholds() {
        let t = 16.0;
        let (c, o) = step_thresholds(PI / t, t);
        assert!((c + 0.5).abs() < 2e-3, "{c}");
        assert!((o - 0.5).abs() < 2e-3, "{o}");
        let (c, o) = step_thresholds(2.0 * PI / t, t);
        assert!((c + 0.873).abs() < 1e-3 && (o - 0.26).abs() < 1e-2, "{c} {o}");
        let (c, o) = step_thresholds(4.0 * PI / t, t);
        assert!((c + 0.967).abs() < 1e-3 && (o - 0.128).abs() < 1e-3, "{c} {o}");
    }

    #[test]
    fn thresholds_are_sufficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = 6.0;
        for _ in 0..2000 {
            let theta = rng.gen_range(PI / t..PI);
            let (cab, ov) = step_thresholds(theta, t);
            let p: f64 = rng.gen_range(-1.0..1.0);
            let theta_ab: f64 = rng.gen_range(0.0..2.0 * PI);
            if theta_ab.cos() >= cab || p.abs() >= ov {
                let x = p * p + (1.0 - p * p) * theta_ab.cos();
                assert!(next_angle(theta, x) >= PI / t - 1e-9);
            }
        }
    }

    #[test]
    fn base_angle_matches_product() {
        for (k, m1, m2) in [(3, 2, 1), (5, 2, 3), (7, 3, 5), (2, 3, 1)] {
            let s = |mu: usize| (mu as f64).sqrt();
            let pulses = [
                Pulse::sideband(-PI / s(m2), PI / 2.0),
                Pulse::sideband(2.0 * PI / s(m1), 0.0),
                Pulse::sideband(PI / s(m2), PI / 2.0),
                Pulse::sideband(2.0 * PI / s(m1), 0.0),
            ];
            let a = axis_angle_of(&block_product(&pulses, k)).angle;
            assert!((a - base_case_angle(k, m1, m2)).abs() < 1e-10);
        }
    }

    #[test]
    fn final_power_rule() {
        assert_eq!(final_power(PI / 2.0), 1);
        assert_eq!(final_power(PI), 0);
        assert_eq!(final_power(PI / 3.0 - 1e-3), 3);
    }

    #[test]
    fn realize_exact() {
        let u = su2_from_axis_angle(&Vec3::new(0.2, -0.4, 0.8).normalize(), 2.2).unwrap();
        for j in [1, 2, 5] {
            let p = realize_on_block(&u, j, 0.3, PulseKind::RedSideband);
            assert!(block_product(&p, j).distance(&u) < 1e-12);
        }
        let p = realize_on_block(&u, 0, 0.3, PulseKind::Carrier);
        assert!(block_product(&p, 4).distance(&u) < 1e-12);
    }
}
