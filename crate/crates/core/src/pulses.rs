//! Carrier and red-sideband pulses on a guarded qubit ⊗ Fock space.
//!
//! Basis order interleaves the qubit within each Fock level:
//! `|0,0⟩, |1,0⟩, |0,1⟩, |1,1⟩, …`, so `|α,j⟩` sits at index `2j + α`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rotations::{max_abs, su2_from_axis_angle, Mat2, Su2Matrix, Vec3, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Carrier,
    RedSideband,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub kind: PulseKind,
    pub theta: f64,
    pub phi: f64,
}

/// Folds an angle into (−π, π].
pub fn canonical_phi(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let r = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

impl Pulse {
    pub fn new(kind: PulseKind, theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return invalid("pulse angles must be finite");
        }
        Ok(Self { kind, theta, phi: canonical_phi(phi) })
    }

    pub fn carrier(theta: f64, phi: f64) -> Self {
        debug_assert!(theta.is_finite() && phi.is_finite());
        Self { kind: PulseKind::Carrier, theta, phi: canonical_phi(phi) }
    }

    pub fn sideband(theta: f64, phi: f64) -> Self {
        debug_assert!(theta.is_finite() && phi.is_finite());
        Self { kind: PulseKind::RedSideband, theta, phi: canonical_phi(phi) }
    }

    pub fn inverse(&self) -> Self {
        Self { theta: -self.theta, ..*self }
    }

    /// 2×2 action on carrier block `j` or sideband block `j`.
    ///
    /// Sideband blocks are ordered `(|0,j⟩, |1,j−1⟩)`; block 0 does not exist
    /// for sidebands and is returned as the identity.
    pub fn block(&self, j: usize) -> Su2Matrix {
        let scale = match self.kind {
            PulseKind::Carrier => 1.0,
            PulseKind::RedSideband => (j as f64).sqrt(),
        };
        let axis = Vec3::new(self.phi.cos(), self.phi.sin(), 0.0);
        su2_from_axis_angle(&axis, scale * self.theta).expect("in-plane axis has unit norm")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceMeta {
    pub n: usize,
    pub construction: String,
}

/// Pulses in application order: index 0 acts first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
    pub meta: SequenceMeta,
}

impl PulseSequence {
    pub fn new(n: usize, construction: impl Into<String>) -> Self {
        Self { pulses: Vec::new(), meta: SequenceMeta { n, construction: construction.into() } }
    }

    pub fn from_pulses(n: usize, construction: impl Into<String>, pulses: Vec<Pulse>) -> Self {
        Self { pulses, meta: SequenceMeta { n, construction: construction.into() } }
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn push(&mut self, p: Pulse) {
        self.pulses.push(p);
    }

    pub fn append(&mut self, pulses: &[Pulse]) {
        self.pulses.extend_from_slice(pulses);
    }

    /// Reversed order with negated angles.
    pub fn inverse(&self) -> Self {
        Self { pulses: inverse_pulses(&self.pulses), meta: self.meta.clone() }
    }

    pub fn sideband_only(&self) -> bool {
        self.pulses.iter().all(|p| p.kind == PulseKind::RedSideband)
    }

    /// Product of the per-pulse blocks for sideband block `j` (or carrier
    /// block `j`) when every pulse is of the matching kind.
    pub fn block(&self, j: usize) -> Su2Matrix {
        block_product(&self.pulses, j)
    }
}

pub fn inverse_pulses(pulses: &[Pulse]) -> Vec<Pulse> {
    pulses.iter().rev().map(Pulse::inverse).collect()
}

/// Operator product of single-kind pulses on block `j`.
pub fn block_product(pulses: &[Pulse], j: usize) -> Su2Matrix {
    debug_assert!(pulses.windows(2).all(|w| w[0].kind == w[1].kind));
    pulses.iter().fold(Su2Matrix::identity(), |acc, p| p.block(j) * acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QoQuditDims {
    pub n: usize,
    pub guards: usize,
}

impl QoQuditDims {
    pub fn new(n: usize, guards: usize) -> Result<Self> {
        if n < 1 {
            return invalid("n must be at least 1");
        }
        if guards < 1 {
            return invalid("at least one guard level is required to observe leakage");
        }
        Ok(Self { n, guards })
    }

    /// Number of simulated Fock levels.
    pub fn levels(&self) -> usize {
        self.n + 1 + self.guards
    }

    pub fn dim(&self) -> usize {
        2 * self.levels()
    }

    pub fn computational_dim(&self) -> usize {
        2 * (self.n + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub alpha: u8,
    pub level: usize,
}

impl BasisState {
    pub fn new(alpha: u8, level: usize) -> Self {
        Self { alpha, level }
    }

    pub fn index(&self) -> usize {
        2 * self.level + self.alpha as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self { alpha: (i % 2) as u8, level: i / 2 }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.alpha, self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Manifold {
    /// Sideband blocks `{|0,j⟩, |1,j−1⟩}`.
    Sqm,
    /// Carrier blocks `{|0,j⟩, |1,j⟩}`.
    Cqm,
}

/// Row/column indices of block `j` in the given manifold.
pub fn block_indices(manifold: Manifold, j: usize) -> (usize, usize) {
    match manifold {
        Manifold::Sqm => (2 * j, 2 * j - 1),
        Manifold::Cqm => (2 * j, 2 * j + 1),
    }
}

/// Unitary on the guarded space.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockUnitary {
    pub dims: QoQuditDims,
    pub matrix: DMatrix<C64>,
}

impl BlockUnitary {
    pub fn identity(dims: QoQuditDims) -> Self {
        let d = dims.dim();
        Self { dims, matrix: DMatrix::identity(d, d) }
    }

    /// Left-multiplies by the pulse unitary.
    pub fn apply_pulse(&mut self, p: &Pulse) {
        let levels = self.dims.levels();
        match p.kind {
            PulseKind::Carrier => {
                let b = p.block(0);
                for j in 0..levels {
                    self.rotate_rows(2 * j, 2 * j + 1, b.matrix());
                }
            }
            PulseKind::RedSideband => {
                // |1, levels−1⟩ would couple to |0, levels⟩, which is not simulated.
                for j in 1..levels {
                    let b = p.block(j);
                    self.rotate_rows(2 * j, 2 * j - 1, b.matrix());
                }
            }
        }
    }

    fn rotate_rows(&mut self, a: usize, b: usize, m: &Mat2) {
        let d = self.matrix.ncols();
        for c in 0..d {
            let (x, y) = (self.matrix[(a, c)], self.matrix[(b, c)]);
            self.matrix[(a, c)] = m[(0, 0)] * x + m[(0, 1)] * y;
            self.matrix[(b, c)] = m[(1, 0)] * x + m[(1, 1)] * y;
        }
    }

    /// Top-left `d×d` block over the computational states.
    pub fn computational_block(&self) -> DMatrix<C64> {
        let d = self.dims.computational_dim();
        self.matrix.view((0, 0), (d, d)).into_owned()
    }

    pub fn unitarity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let p = self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(d, d);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn element(&self, row: BasisState, col: BasisState) -> C64 {
        self.matrix[(row.index(), col.index())]
    }
}

pub fn carrier_unitary(p: &Pulse, dims: QoQuditDims) -> Result<BlockUnitary> {
    if p.kind != PulseKind::Carrier {
        return invalid("carrier_unitary requires a carrier pulse");
    }
    let mut u = BlockUnitary::identity(dims);
    u.apply_pulse(p);
    Ok(u)
}

pub fn sideband_unitary(p: &Pulse, dims: QoQuditDims) -> Result<BlockUnitary> {
    if p.kind != PulseKind::RedSideband {
        return invalid("sideband_unitary requires a red sideband pulse");
    }
    if dims.guards < 1 {
        return invalid("sideband simulation requires at least one guard level");
    }
    let mut u = BlockUnitary::identity(dims);
    u.apply_pulse(p);
    Ok(u)
}

/// Sideband angle that returns the `n+1` block to `−I`.
pub fn closing_angle(n: i64) -> Result<f64> {
    if n < 0 {
        return invalid("closing_angle requires n >= 0");
    }
    Ok(2.0 * PI / ((n + 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivePhysicalParams {
    /// Drive area `μBt/ħ`.
    pub mu_b_t_over_hbar: f64,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    /// Sideband order: 0 carrier, 1 first red sideband.
    pub m: u32,
    /// Drive phase.
    pub drive_phase: f64,
}

pub fn physical_pulse_params(d: &DrivePhysicalParams) -> Result<(f64, f64)> {
    if !(d.eta >= 0.0) {
        return invalid("eta must be non-negative");
    }
    if d.m > 1 {
        return invalid("only carrier (m=0) and first red sideband (m=1) are modelled");
    }
    let factorial = (1..=d.m).product::<u32>() as f64;
    let theta = -d.mu_b_t_over_hbar * d.eta.powi(d.m as i32) / (2.0 * factorial);
    let phi = d.drive_phase + (d.m % 4) as f64 * FRAC_PI_2;
    Ok((theta, phi))
}

pub fn apply_sequence(seq: &PulseSequence, dims: QoQuditDims) -> Result<BlockUnitary> {
    if dims.guards < 1 {
        return invalid("simulation requires at least one guard level");
    }
    let mut u = BlockUnitary::identity(dims);
    for p in &seq.pulses {
        u.apply_pulse(p);
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub manifold: Manifold,
    /// `(j, block)` in the manifold's block order.
    pub blocks: Vec<(usize, Mat2)>,
    /// Diagonal entries of states outside every block.
    pub fixed_phases: Vec<(BasisState, C64)>,
    /// Largest magnitude outside the block structure.
    pub residual: f64,
}

pub fn block_decompose(u: &BlockUnitary, manifold: Manifold) -> BlockDecomposition {
    let levels = u.dims.levels();
    let dim = u.dims.dim();
    let mut group = vec![usize::MAX; dim];
    let mut blocks = Vec::new();
    let mut fixed_phases = Vec::new();
    let range = match manifold {
        Manifold::Sqm => 1..levels,
        Manifold::Cqm => 0..levels,
    };
    for j in range {
        let (a, b) = block_indices(manifold, j);
        group[a] = j;
        group[b] = j;
        let m = &u.matrix;
        blocks.push((j, Mat2::new(m[(a, a)], m[(a, b)], m[(b, a)], m[(b, b)])));
    }
    for (i, g) in group.iter_mut().enumerate() {
        if *g == usize::MAX {
            *g = usize::MAX - 1 - i;
            fixed_phases.push((BasisState::from_index(i), u.matrix[(i, i)]));
        }
    }
    let mut residual: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            if group[r] != group[c] {
                residual = residual.max(u.matrix[(r, c)].norm());
            }
        }
    }
    BlockDecomposition { manifold, blocks, fixed_phases, residual }
}

impl BlockDecomposition {
    pub fn block(&self, j: usize) -> Option<&Mat2> {
        self.blocks.iter().find(|(i, _)| *i == j).map(|(_, m)| m)
    }

    pub fn block_distance(&self, j: usize, target: &Mat2) -> Option<f64> {
        self.block(j).map(|m| max_abs(&(m - target)))
    }
}
