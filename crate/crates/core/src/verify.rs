//! Simulation metrics and Lie-algebraic oracles.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::pulses::{apply_sequence, BasisState, Manifold, PulseSequence, QoQuditDims};
use crate::rotations::{Mat2, C64};
use crate::synthesis::Elementary;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockError {
    pub manifold: Manifold,
    pub j: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    /// Largest population pushed out of the computational space by any
    /// computational input.
    pub leakage: f64,
    /// Spectral norm of each block's rows of `U − e^{iφ} T`, with the global
    /// phase `φ` taken from the overlap.
    pub per_block_error: Vec<BlockError>,
    /// `|tr(T† U)| / d` on the computational block.
    pub global_fidelity: f64,
    /// Diagonal entries at `|0,0⟩` and `|1,n⟩`.
    pub boundary_phases: Vec<(BasisState, (f64, f64))>,
    pub unitarity_error: f64,
}

impl FidelityReport {
    pub fn max_block_error(&self, manifold: Manifold) -> f64 {
        self.per_block_error.iter().filter(|b| b.manifold == manifold).map(|b| b.error).fold(0.0, f64::max)
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.global_fidelity
    }
}

/// Rows belonging to block `j` of `manifold`, clipped to the computational space.
fn block_rows(manifold: Manifold, j: usize, d: usize) -> Vec<usize> {
    let rows = match manifold {
        Manifold::Cqm => vec![2 * j, 2 * j + 1],
        Manifold::Sqm if j == 0 => vec![0],
        Manifold::Sqm => vec![2 * j - 1, 2 * j],
    };
    rows.into_iter().filter(|&r| r < d).collect()
}

pub fn fidelity_report(seq: &PulseSequence, dims: QoQuditDims, target: &DMatrix<C64>) -> Result<FidelityReport> {
    let d = dims.computational_dim();
    if target.nrows() != d || target.ncols() != d {
        return invalid(format!("target is {}x{}, expected {d}x{d}", target.nrows(), target.ncols()));
    }
    let u = apply_sequence(seq, dims)?;
    let full = &u.matrix;
    let dim = full.nrows();
    let leakage = (0..d)
        .map(|c| (d..dim).map(|r| full[(r, c)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    let comp = u.computational_block();
    let overlap = (target.adjoint() * &comp).trace();
    let global_fidelity = overlap.norm() / d as f64;
    let phase = if overlap.norm() > 1e-300 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let diff = &comp - target * phase;
    let n = dims.n;
    let mut per_block_error = Vec::new();
    for (manifold, js) in [(Manifold::Sqm, 0..=n + 1), (Manifold::Cqm, 0..=n)] {
        for j in js {
            let rows = block_rows(manifold, j, d);
            let sub = DMatrix::from_fn(rows.len(), d, |i, c| diff[(rows[i], c)]);
            let error = sub.singular_values().iter().cloned().fold(0.0, f64::max);
            per_block_error.push(BlockError { manifold, j, error });
        }
    }
    let at = |s: BasisState| {
        let z = comp[(s.index(), s.index())];
        (s, (z.re, z.im))
    };
    Ok(FidelityReport {
        leakage,
        per_block_error,
        global_fidelity,
        boundary_phases: vec![at(BasisState::new(0, 0)), at(BasisState::new(1, n))],
        unitarity_error: u.unitarity_error(),
    })
}

/// Generalized Gell-Mann matrices, indices 1-based as in the usual definition.
#[derive(Debug, Clone)]
pub struct GgmBasis {
    pub d: usize,
    /// `M^Z_j` for `j = 2..=d`.
    pub z_type: Vec<DMatrix<C64>>,
    /// `M^X_{jk}` for `1 ≤ j < k ≤ d`, lexicographic.
    pub x_type: Vec<DMatrix<C64>>,
    pub y_type: Vec<DMatrix<C64>>,
}

fn unit(d: usize, j: usize, k: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(d, d);
    m[(j - 1, k - 1)] = C64::new(1.0, 0.0);
    m
}

fn ggm_z(d: usize, j: usize) -> DMatrix<C64> {
    let c = (2.0 / (j * (j - 1)) as f64).sqrt();
    let mut m = DMatrix::zeros(d, d);
    for k in 1..j {
        m[(k - 1, k - 1)] = C64::new(c, 0.0);
    }
    m[(j - 1, j - 1)] = C64::new(-c * (j - 1) as f64, 0.0);
    m
}

/// `E_jk + E_kj` for any pair; `2E_jj` on the diagonal.
fn ggm_x(d: usize, j: usize, k: usize) -> DMatrix<C64> {
    unit(d, j, k) + unit(d, k, j)
}

/// `−iE_jk + iE_kj`; antisymmetric in `(j, k)`.
fn ggm_y(d: usize, j: usize, k: usize) -> DMatrix<C64> {
    (unit(d, k, j) - unit(d, j, k)) * C64::i()
}

pub fn ggm_basis(d: usize) -> Result<GgmBasis> {
    if d < 2 {
        return invalid(format!("GGM basis needs d >= 2, got {d}"));
    }
    let pairs: Vec<(usize, usize)> = (1..=d).flat_map(|j| (j + 1..=d).map(move |k| (j, k))).collect();
    Ok(GgmBasis {
        d,
        z_type: (2..=d).map(|j| ggm_z(d, j)).collect(),
        x_type: pairs.iter().map(|&(j, k)| ggm_x(d, j, k)).collect(),
        y_type: pairs.iter().map(|&(j, k)| ggm_y(d, j, k)).collect(),
    })
}

impl GgmBasis {
    pub fn len(&self) -> usize {
        self.z_type.len() + self.x_type.len() + self.y_type.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all(&self) -> Vec<DMatrix<C64>> {
        self.z_type.iter().chain(&self.x_type).chain(&self.y_type).cloned().collect()
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (1..=d).flat_map(|j| (j + 1..=d).map(move |k| (j, k))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GgmViolation {
    pub family: &'static str,
    pub indices: Vec<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GgmCheckReport {
    pub d: usize,
    pub relations_checked: usize,
    pub max_residual: f64,
    pub violations: Vec<GgmViolation>,
}

impl GgmCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a * b - b * a
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn delta(a: usize, b: usize) -> C64 {
    C64::new(if a == b { 1.0 } else { 0.0 }, 0.0)
}

/// Checks every commutation family of the basis against its closed form.
pub fn ggm_commutator_check(basis: &GgmBasis, tol: f64) -> GgmCheckReport {
    let d = basis.d;
    let i = C64::i();
    let x = |a: usize, b: usize| ggm_x(d, a, b);
    let y = |a: usize, b: usize| ggm_y(d, a, b);
    let zero = || DMatrix::<C64>::zeros(d, d);
    let mut report = GgmCheckReport { d, relations_checked: 0, max_residual: 0.0, violations: Vec::new() };
    let mut check = |family: &'static str, indices: Vec<usize>, lhs: DMatrix<C64>, rhs: DMatrix<C64>| {
        let r = max_abs(&(lhs - rhs));
        report.relations_checked += 1;
        report.max_residual = report.max_residual.max(r);
        if r > tol {
            report.violations.push(GgmViolation { family, indices, residual: r });
        }
    };
    let pairs = basis.pairs();
    for j in 2..=d {
        let zj = ggm_z(d, j);
        let c = i * (2.0 / (j * (j - 1)) as f64).sqrt();
        for k in 2..=d {
            check("[Z,Z]", vec![j, k], commutator(&zj, &ggm_z(d, k)), zero());
        }
        for &(l, m) in &pairs {
            let mut rx = zero();
            let mut ry = zero();
            for k in 1..j {
                rx += y(k, l) * delta(k, m) + y(k, m) * delta(l, k);
                ry += x(k, l) * delta(m, k) - x(m, k) * delta(l, k);
            }
            let jm = C64::new((j - 1) as f64, 0.0);
            rx -= (y(j, l) * delta(m, j) + y(j, m) * delta(l, j)) * jm;
            ry -= (x(j, l) * delta(m, j) - x(m, j) * delta(l, j)) * jm;
            check("[Z,X]", vec![j, l, m], commutator(&zj, &x(l, m)), rx * c);
            check("[Z,Y]", vec![j, l, m], commutator(&zj, &y(l, m)), ry * c);
        }
    }
    for &(j, k) in &pairs {
        for &(l, m) in &pairs {
            let rxx = (y(j, m) * delta(k, l) + y(k, m) * delta(j, l) + y(k, l) * delta(m, j) + y(j, l) * delta(m, k)) * i;
            check("[X,X]", vec![j, k, l, m], commutator(&x(j, k), &x(l, m)), rxx);
            let ryy = (y(j, m) * delta(k, l) - y(j, l) * delta(k, m) - y(k, m) * delta(j, l) + y(k, l) * delta(j, m)) * (-i);
            check("[Y,Y]", vec![j, k, l, m], commutator(&y(j, k), &y(l, m)), ryy);
            let rxy = (x(j, l) * delta(k, m) - x(k, m) * delta(j, l) + x(k, l) * delta(m, j) - x(m, j) * delta(l, k)) * i;
            check("[X,Y]", vec![j, k, l, m], commutator(&x(j, k), &y(l, m)), rxy);
        }
    }
    report
}

fn is_hermitian(h: &DMatrix<C64>, tol: f64) -> bool {
    h.is_square() && max_abs(&(h - h.adjoint())) <= tol
}

/// Real coordinates of a Hermitian matrix; the Euclidean product matches
/// `Re tr(A B)` up to a factor on the off-diagonal entries, which does not
/// change ranks.
fn hermitian_coords(h: &DMatrix<C64>) -> DVector<f64> {
    let d = h.nrows();
    let mut v = Vec::with_capacity(d * d);
    for r in 0..d {
        v.push(h[(r, r)].re);
        for c in r + 1..d {
            v.push(h[(r, c)].re * std::f64::consts::SQRT_2);
            v.push(h[(r, c)].im * std::f64::consts::SQRT_2);
        }
    }
    DVector::from_vec(v)
}

const CLOSURE_REL_TOL: f64 = 1e-9;

/// Dimension of the real Lie algebra generated by `i H` for the given
/// Hermitian generators.
pub fn lie_closure_dimension(generators: &[DMatrix<C64>]) -> Result<usize> {
    let Some(first) = generators.first() else {
        return Ok(0);
    };
    let d = first.nrows();
    for (idx, g) in generators.iter().enumerate() {
        if g.nrows() != d || !is_hermitian(g, 1e-12) {
            return invalid(format!("generator {idx} is not a {d}x{d} Hermitian matrix"));
        }
    }
    let scale = generators.iter().map(max_abs).fold(0.0, f64::max).max(1e-300);
    let mut elems: Vec<DMatrix<C64>> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    let mut try_add = |h: DMatrix<C64>, elems: &mut Vec<DMatrix<C64>>| {
        let v = hermitian_coords(&h);
        let norm = v.norm();
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &ortho {
                r -= q * q.dot(&r);
            }
        }
        if r.norm() > CLOSURE_REL_TOL * norm.max(scale) {
            ortho.push(r.normalize());
            elems.push(h);
        }
    };
    for g in generators {
        try_add(g.clone(), &mut elems);
    }
    let mut a = 0;
    while a < elems.len() {
        for b in 0..a {
            let h = commutator(&elems[a], &elems[b]) * (-C64::i());
            try_add(h, &mut elems);
        }
        a += 1;
    }
    // Final rank from the Gram matrix of the collected elements.
    let vs: Vec<DVector<f64>> = elems.iter().map(|h| hermitian_coords(h).normalize()).collect();
    let k = vs.len();
    let gram = DMatrix::from_fn(k, k, |r, c| vs[r].dot(&vs[c]));
    let sv = gram.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s > CLOSURE_REL_TOL * top).count())
}

/// Generators of carrier pulses and of closing-angle sideband pulses on the
/// computational block of dimension `2(n+1)`.
///
/// A sideband at `θ = 2π/√(n+1)` acts on `|1,n⟩` as the phase `−1`; its
/// logarithm on the computational block is the sideband generator on blocks
/// `1..=n` (block angles stay below π) plus `π |1,n⟩⟨1,n|`, made traceless.
/// Without that diagonal term `n = 1` only reaches a 10-dimensional algebra.
pub fn qudit_generators(n: usize) -> Vec<DMatrix<C64>> {
    let d = 2 * (n + 1);
    let mut cx = DMatrix::<C64>::zeros(d, d);
    let mut cy = DMatrix::<C64>::zeros(d, d);
    for j in 0..=n {
        cx += ggm_x(d, 2 * j + 1, 2 * j + 2);
        cy += ggm_y(d, 2 * j + 1, 2 * j + 2);
    }
    let half = C64::new(PI / ((n + 1) as f64).sqrt(), 0.0);
    let mut sx = DMatrix::<C64>::zeros(d, d);
    let mut sy = DMatrix::<C64>::zeros(d, d);
    for j in 1..=n {
        // Rows (|0,j⟩, |1,j−1⟩) at indices (2j, 2j−1).
        let s = C64::new((j as f64).sqrt(), 0.0);
        sx += ggm_x(d, 2 * j + 1, 2 * j) * s * half;
        sy += ggm_y(d, 2 * j + 1, 2 * j) * s * half;
    }
    let mut boundary = unit(d, d, d) * C64::new(PI, 0.0);
    boundary -= DMatrix::identity(d, d) * C64::new(PI / d as f64, 0.0);
    vec![cx, cy, sx + &boundary, sy + boundary]
}

/// `w` placed on block `j` of `manifold`, identity elsewhere, as a
/// computational-space matrix for `n`.
pub fn embed_block(n: usize, manifold: Manifold, j: usize, w: &Mat2) -> Result<DMatrix<C64>> {
    let d = 2 * (n + 1);
    let (a, b) = match manifold {
        Manifold::Cqm if j <= n => (2 * j, 2 * j + 1),
        Manifold::Sqm if (1..=n).contains(&j) => (2 * j, 2 * j - 1),
        _ => return invalid(format!("block {j} is not inside the computational space for n={n}")),
    };
    let mut t = DMatrix::identity(d, d);
    t[(a, a)] = w[(0, 0)];
    t[(a, b)] = w[(0, 1)];
    t[(b, a)] = w[(1, 0)];
    t[(b, b)] = w[(1, 1)];
    Ok(t)
}

/// Computational-space target of an elementary rotation, including the
/// recorded block signs.
pub fn elementary_target(n: usize, e: &Elementary) -> DMatrix<C64> {
    let d = 2 * (n + 1);
    let mut t = DMatrix::identity(d, d);
    for j in 1..=n {
        let w = if j == e.k { *e.sigma.target().matrix() } else { Mat2::identity() };
        let w = w * C64::new(e.phase(j), 0.0);
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let (a, b) = ([2 * j, 2 * j - 1][r], [2 * j, 2 * j - 1][c]);
            t[(a, b)] = w[(r, c)];
        }
    }
    if e.range_max > n {
        t[(d - 1, d - 1)] = C64::new(e.phase(n + 1), 0.0);
    }
    t
}

/// Haar-random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary(d: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(d, d, |_, _| {
        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        C64::new(re, im)
    });
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let x = r[(i, i)];
            if x.norm() > 0.0 { x / x.norm() } else { C64::new(1.0, 0.0) }
        } else {
            C64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Random special unitary: `random_unitary` divided by a root of its determinant.
pub fn random_special_unitary(d: usize, seed: u64) -> DMatrix<C64> {
    let u = random_unitary(d, seed);
    let ph = u.determinant().arg() / d as f64;
    u * C64::from_polar(1.0, -ph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{closing_angle, Pulse};
    use crate::rotations::{pauli_x, pauli_y, pauli_z};

    fn to_d(m: nalgebra::Matrix2<C64>) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
    }

    #[test]
    fn qubit_basis_is_pauli() {
        let b = ggm_basis(2).unwrap();
        assert_eq!(b.len(), 3);
        assert!(max_abs(&(&b.x_type[0] - to_d(pauli_x()))) < 1e-15);
        assert!(max_abs(&(&b.y_type[0] - to_d(pauli_y()))) < 1e-15);
        // M^Z_2 = diag(1, -1)
        assert!(max_abs(&(&b.z_type[0] - to_d(pauli_z()))) < 1e-15);
    }

    #[test]
    fn basis_counts_and_orthonormality() {
        assert!(ggm_basis(1).is_err());
        for d in 2..=8 {
            let b = ggm_basis(d).unwrap();
            assert_eq!(b.len(), d * d - 1);
            let all = b.all();
            for (p, m) in all.iter().enumerate() {
                assert!(is_hermitian(m, 0.0));
                assert!(m.trace().norm() < 1e-12);
                for (q, w) in all.iter().enumerate() {
                    let t = (m * w).trace();
                    let want = if p == q { 2.0 } else { 0.0 };
                    assert!((t - C64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
        assert_eq!(ggm_basis(8).unwrap().len(), 63);
    }

    #[test]
    fn commutators_match_closed_forms() {
        for d in 2..=6 {
            let r = ggm_commutator_check(&ggm_basis(d).unwrap(), 1e-12);
            assert!(r.passed(), "d={d}: {:?}", r.violations.first());
        }
    }

    #[test]
    fn closure_of_span() {
        let b = ggm_basis(4).unwrap();
        let all = b.all();
        for p in &all {
            for q in &all {
                let c = commutator(p, q) * (-C64::i());
                let mut r = c.clone();
                for m in &all {
                    let coef = (m * &c).trace() / 2.0;
                    r -= m * coef;
                }
                assert!(max_abs(&r) < 1e-10);
            }
        }
    }

    #[test]
    fn closure_dimension_examples() {
        assert_eq!(lie_closure_dimension(&ggm_basis(3).unwrap().all()).unwrap(), 8);
        assert_eq!(lie_closure_dimension(&[ggm_x(3, 1, 2)]).unwrap(), 1);
        assert_eq!(lie_closure_dimension(&qudit_generators(2)).unwrap(), 35);
        assert_eq!(lie_closure_dimension(&qudit_generators(1)).unwrap(), 15);
        let bad = unit(2, 1, 2);
        assert!(lie_closure_dimension(&[bad]).is_err());
    }

    #[test]
    fn closing_generator_exponentiates_to_pulse() {
        for n in 1..5 {
            let d = 2 * (n + 1);
            let g = &qudit_generators(n)[2];
            let u = (g * C64::i()).exp() * C64::from_polar(1.0, PI / d as f64);
            let p = Pulse::sideband(closing_angle(n as i64).unwrap(), 0.0);
            let sim = apply_sequence(&PulseSequence::from_pulses(n, "", vec![p]), QoQuditDims::new(n, 1).unwrap()).unwrap();
            assert!(max_abs(&(u - sim.computational_block())) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn empty_sequence_report() {
        let dims = QoQuditDims::new(3, 1).unwrap();
        let r = fidelity_report(&PulseSequence::new(3, "empty"), dims, &DMatrix::identity(8, 8)).unwrap();
        assert_eq!(r.leakage, 0.0);
        assert!((r.global_fidelity - 1.0).abs() < 1e-15);
        assert!(fidelity_report(&PulseSequence::new(3, "empty"), dims, &DMatrix::identity(6, 6)).is_err());
    }

    #[test]
    fn leakage_of_single_sideband() {
        for n in 1..8 {
            let dims = QoQuditDims::new(n, 2).unwrap();
            let d = dims.computational_dim();
            let closed = Pulse::sideband(closing_angle(n as i64).unwrap(), 0.3);
            let seq = PulseSequence::from_pulses(n, "closing", vec![closed]);
            let r = fidelity_report(&seq, dims, &DMatrix::identity(d, d)).unwrap();
            assert!(r.leakage <= 1e-24, "n={n}: {}", r.leakage);
            let theta = 0.7;
            let seq = PulseSequence::from_pulses(n, "generic", vec![Pulse::sideband(theta, 0.0)]);
            let r = fidelity_report(&seq, dims, &DMatrix::identity(d, d)).unwrap();
            let want = ((n as f64 + 1.0).sqrt() * theta / 2.0).sin().powi(2);
            assert!((r.leakage - want).abs() < 1e-10);
        }
    }
}
