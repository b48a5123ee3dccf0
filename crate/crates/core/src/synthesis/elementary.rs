use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::pulses::{apply_sequence, block_decompose, inverse_pulses, Manifold, Pulse, PulseKind, PulseSequence, QoQuditDims};
use crate::rotations::{axis_angle_of, max_abs, su2_from_axis_angle, Su2Matrix, Vec3, C64};

use super::heuristic::{
    base_case_angle, cleaning_order_heuristic, conjugator, estimated_count, final_power, realize_on_block, so3_angle,
};
use super::{CleaningOptions, CleaningOrder, ElementarySigma};

/// Blocks closer than this to ±I count as cleaned without extra pulses.
const SCALAR_TOL: f64 = 1e-11;
const ANGLE_FLOOR: f64 = 1e-6;
const BLOCK_TOL: f64 = 1e-8;

/// Working set of the recursive cleaning.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisState {
    pub n: usize,
    pub k: usize,
    /// Highest subspace in the cleaning range.
    pub range_max: usize,
    pub cleaned: BTreeSet<usize>,
    /// Application-order pulses of `U_j`.
    pub sequence: Vec<Pulse>,
    /// `blocks[j]` is `(U_j)_j` for `j` in `1..=range_max`.
    pub blocks: Vec<Su2Matrix>,
    pub k_axis: Vec3,
    pub k_angle: f64,
    pub mu_pair: (usize, usize),
    /// Recursion depth `j` in `U_j` (2 after the base step).
    pub depth: usize,
    pub warnings: Vec<String>,
}

impl SynthesisState {
    pub fn block(&self, j: usize) -> Su2Matrix {
        self.blocks[j]
    }

    pub fn uncleaned(&self) -> Vec<usize> {
        (1..=self.range_max).filter(|j| *j != self.k && !self.cleaned.contains(j)).collect()
    }

    fn from_sequence(n: usize, k: usize, range_max: usize, sequence: Vec<Pulse>, mu_pair: (usize, usize)) -> Self {
        let blocks = (0..=range_max).map(|j| crate::pulses::block_product(&sequence, j)).collect();
        let mut s = Self {
            n,
            k,
            range_max,
            cleaned: BTreeSet::new(),
            sequence,
            blocks,
            k_axis: Vec3::x(),
            k_angle: 0.0,
            mu_pair,
            depth: 2,
            warnings: Vec::new(),
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        for j in 1..=self.range_max {
            if j != self.k && self.blocks[j].sign_if_scalar(SCALAR_TOL).is_some() {
                self.cleaned.insert(j);
            }
        }
        let aa = axis_angle_of(&self.blocks[self.k]);
        self.k_axis = aa.axis;
        self.k_angle = aa.angle;
    }
}

/// Sequence realizing an elementary clean rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct Elementary {
    pub sequence: PulseSequence,
    pub k: usize,
    pub sigma: ElementarySigma,
    pub range_max: usize,
    /// Repetition count of the final step; 0 for direct constructions.
    pub l: usize,
    /// `(j, ±1)`: block `j` equals the sign times its target.
    pub phases: Vec<(usize, f64)>,
    pub warnings: Vec<String>,
}

impl Elementary {
    /// True when every block in the range matches its target without a sign.
    pub fn is_clean(&self) -> bool {
        self.phases.iter().all(|(_, p)| *p == 1.0)
    }

    pub fn phase(&self, j: usize) -> f64 {
        self.phases.iter().find(|(i, _)| *i == j).map_or(1.0, |(_, p)| *p)
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

fn pair_allowed(k: usize, mu: usize) -> bool {
    mu != k && !is_integer((k as f64 / mu as f64).sqrt())
}

fn base_pulses(mu1: usize, mu2: usize) -> Vec<Pulse> {
    let s1 = (mu1 as f64).sqrt();
    let s2 = (mu2 as f64).sqrt();
    vec![
        Pulse::sideband(-PI / s2, FRAC_PI_2),
        Pulse::sideband(2.0 * PI / s1, 0.0),
        Pulse::sideband(PI / s2, FRAC_PI_2),
        Pulse::sideband(2.0 * PI / s1, 0.0),
    ]
}

pub(crate) fn base_case_in_range(n: usize, range_max: usize, k: usize, opts: &CleaningOptions) -> Result<SynthesisState> {
    if range_max < 3 {
        return invalid("the recursive construction needs at least three subspaces");
    }
    if k < 1 || k > range_max {
        return invalid(format!("k={k} outside 1..={range_max}"));
    }
    if let Some((mu1, mu2)) = opts.mu_pair {
        for mu in [mu1, mu2] {
            if mu < 1 || mu > range_max || mu == k {
                return invalid(format!("mu={mu} must lie in 1..={range_max} and differ from k={k}"));
            }
            if !pair_allowed(k, mu) {
                return invalid(format!("sqrt(k/mu) = sqrt({k}/{mu}) is an integer"));
            }
        }
        if mu1 == mu2 {
            return invalid("mu pair entries must differ");
        }
        let s = SynthesisState::from_sequence(n, k, range_max, base_pulses(mu1, mu2), (mu1, mu2));
        if so3_angle(s.k_angle) < ANGLE_FLOOR {
            return Err(Error::Synthesis(format!("mu pair ({mu1}, {mu2}) leaves subspace {k} trivial")));
        }
        return Ok(s);
    }
    let candidates: Vec<usize> = (1..=range_max).filter(|&mu| pair_allowed(k, mu)).collect();
    let mut best: Option<((usize, f64), SynthesisState)> = None;
    for &mu1 in &candidates {
        for &mu2 in &candidates {
            if mu1 == mu2 {
                continue;
            }
            let theta = so3_angle(base_case_angle(k, mu1, mu2));
            if theta < ANGLE_FLOOR {
                continue;
            }
            let s = SynthesisState::from_sequence(n, k, range_max, base_pulses(mu1, mu2), (mu1, mu2));
            let est = estimated_count(s.uncleaned().len(), s.k_angle);
            let better = match &best {
                None => true,
                Some(((e, t), _)) => est < *e || (est == *e && theta > *t + 1e-12),
            };
            if better {
                best = Some(((est, theta), s));
            }
        }
    }
    best.map(|(_, s)| s).ok_or_else(|| {
        Error::Synthesis(format!(
            "no pair (mu1, mu2) in 1..={range_max} with sqrt(k/mu) non-integer leaves subspace {k} nontrivial"
        ))
    })
}

/// Four-pulse base sequence cleaning two subspaces.
pub fn base_case(n: usize, k: usize, opts: &CleaningOptions) -> Result<SynthesisState> {
    opts.validate()?;
    base_case_in_range(n, opts.range_max(n), k, opts)
}

/// One cleaning step on subspace `mu` with default conjugator parameters.
pub fn clean_step(state: &SynthesisState, mu: usize) -> Result<SynthesisState> {
    clean_step_with(state, mu, 0.0, 0.0)
}

/// `U_{j+1} = U_j C U_j C†` with `C` a π rotation perpendicular to `Ω_μ`.
///
/// `psi` selects the perpendicular axis and `free_angle` the xy split of `C`.
pub fn clean_step_with(state: &SynthesisState, mu: usize, psi: f64, free_angle: f64) -> Result<SynthesisState> {
    if mu < 1 || mu > state.range_max || mu == state.k {
        return invalid(format!("mu={mu} is not a cleanable subspace"));
    }
    if state.cleaned.contains(&mu) {
        return invalid(format!("subspace {mu} is already cleaned"));
    }
    let mut next = state.clone();
    if state.blocks[mu].sign_if_scalar(SCALAR_TOL).is_some() {
        next.cleaned.insert(mu);
        return Ok(next);
    }
    let c = conjugator(&state.blocks[mu], mu, psi, free_angle);
    let c_inv = inverse_pulses(&c);
    let mut seq = Vec::with_capacity(2 * state.sequence.len() + 2 * c.len());
    seq.extend_from_slice(&c_inv);
    seq.extend_from_slice(&state.sequence);
    seq.extend_from_slice(&c);
    seq.extend_from_slice(&state.sequence);
    for j in 1..=state.range_max {
        let cj = crate::pulses::block_product(&c, j);
        let u = state.blocks[j];
        next.blocks[j] = u * cj * u * cj.adjoint();
    }
    next.sequence = seq;
    next.depth += 1;
    next.cleaned.insert(mu);
    next.refresh();
    let err = next.blocks[mu].distance(&Su2Matrix::identity());
    if err > 1e-10 {
        return Err(Error::Synthesis(format!("cleaning subspace {mu} left error {err:.3e}")));
    }
    Ok(next)
}

/// Turns a cleaned state into `Σ_k` with every other block ±I.
pub fn final_step(state: &SynthesisState, sigma: ElementarySigma, beta_free: f64) -> Result<Elementary> {
    if !state.uncleaned().is_empty() {
        return invalid(format!("subspaces {:?} are not cleaned yet", state.uncleaned()));
    }
    if sigma == ElementarySigma::MinusI {
        let e = final_step(state, ElementarySigma::X, beta_free)?;
        return double_to_minus_identity(e);
    }
    let k = state.k;
    let aa = axis_angle_of(&state.blocks[k]);
    if aa.angle < ANGLE_FLOOR || aa.angle > 2.0 * PI - ANGLE_FLOOR {
        return Err(Error::Synthesis(format!(
            "rotation on subspace {k} is below the numeric floor; retry the base case with another mu pair"
        )));
    }
    // Ω_k = sign · su2(n, θ) with θ ∈ (0, π].
    let (theta, n_axis, sign) = if aa.angle > PI { (2.0 * PI - aa.angle, -aa.axis, -1.0) } else { (aa.angle, aa.axis, 1.0) };
    let l = final_power(theta);
    let (alpha, beta) = final_axes(theta, l, sigma, beta_free)?;
    let flip = if sign < 0.0 && (l + 1) % 2 == 1 { Some(Su2Matrix::z()) } else { None };
    let conj = |t: &Vec3| -> Vec<Pulse> {
        let g = align(&n_axis, t);
        let g = match flip {
            Some(z) => z * g,
            None => g,
        };
        realize_on_block(&g, k, 0.0, PulseKind::RedSideband)
    };
    let ga = conj(&alpha);
    let mut seq = Vec::new();
    seq.extend(inverse_pulses(&ga));
    seq.extend_from_slice(&state.sequence);
    seq.extend_from_slice(&ga);
    if l > 0 {
        let gb = conj(&beta);
        seq.extend(inverse_pulses(&gb));
        for _ in 0..l {
            seq.extend_from_slice(&state.sequence);
        }
        seq.extend_from_slice(&gb);
    }
    let phases = check_blocks(&seq, state.range_max, k, &sigma.target())?;
    Ok(Elementary {
        sequence: PulseSequence::from_pulses(state.n, format!("elementary {sigma} on {k}"), seq),
        k,
        sigma,
        range_max: state.range_max,
        l,
        phases,
        warnings: state.warnings.clone(),
    })
}

/// Axes `(α̂, β̂)` with `su2(β̂, lθ) su2(α̂, θ) = Σ`.
fn final_axes(theta: f64, l: usize, sigma: ElementarySigma, beta_free: f64) -> Result<(Vec3, Vec3)> {
    if l == 0 {
        let t = match sigma {
            ElementarySigma::Y => Vec3::y(),
            _ => Vec3::x(),
        };
        return Ok((t, t));
    }
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let (cl, sl) = ((0.5 * l as f64 * theta).cos(), (0.5 * l as f64 * theta).sin());
    let bound = (1.0 - c * c / (sl * sl)).max(0.0).sqrt();
    if beta_free.abs() > bound + 1e-12 {
        return invalid(format!("free axis component {beta_free} exceeds the admissible bound {bound:.6}"));
    }
    let root = (-c * c + (1.0 - beta_free * beta_free) * sl * sl).max(0.0).sqrt();
    let (alpha, beta) = match sigma {
        ElementarySigma::Y => (
            Vec3::new(-root / s, cl / s, beta_free * sl / s),
            Vec3::new(beta_free, c / sl, root / sl),
        ),
        _ => (
            Vec3::new(cl / s, root / s, -beta_free * sl / s),
            Vec3::new(c / sl, beta_free, root / sl),
        ),
    };
    Ok((alpha.normalize(), beta.normalize()))
}

/// Element rotating the axis `from` onto `to` under the adjoint action.
fn align(from: &Vec3, to: &Vec3) -> Su2Matrix {
    let cross = from.cross(to);
    let dot = from.dot(to).clamp(-1.0, 1.0);
    if cross.norm() < 1e-12 {
        if dot > 0.0 {
            return Su2Matrix::identity();
        }
        let e = if from.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        return su2_from_axis_angle(&from.cross(&e).normalize(), PI).expect("unit axis");
    }
    su2_from_axis_angle(&cross.normalize(), -dot.acos()).expect("unit axis")
}

fn double_to_minus_identity(mut e: Elementary) -> Result<Elementary> {
    let pulses = e.sequence.pulses.clone();
    e.sequence.pulses.extend(pulses);
    e.sequence.meta.construction = format!("elementary -I on {}", e.k);
    e.sigma = ElementarySigma::MinusI;
    e.phases = check_blocks(&e.sequence.pulses, e.range_max, e.k, &Su2Matrix::minus_identity())?;
    Ok(e)
}

/// Checks every block of the range: `k` must equal `target`, the rest ±I.
fn check_blocks(seq: &[Pulse], range_max: usize, k: usize, target: &Su2Matrix) -> Result<Vec<(usize, f64)>> {
    let mut phases = Vec::with_capacity(range_max);
    for j in 1..=range_max {
        let b = crate::pulses::block_product(seq, j);
        if j == k {
            let err = b.distance(target);
            if err > BLOCK_TOL {
                return Err(Error::Synthesis(format!("block {k} misses its target by {err:.3e}")));
            }
            phases.push((j, 1.0));
        } else {
            let sign = b.sign_if_scalar(1e-9).ok_or_else(|| {
                Error::Synthesis(format!("block {j} is not ±I (error {:.3e})", b.distance(&Su2Matrix::identity())))
            })?;
            phases.push((j, sign));
        }
    }
    Ok(phases)
}

fn small_range_pulses(range_max: usize, k: usize) -> Vec<Pulse> {
    match (range_max, k) {
        (1, _) => vec![Pulse::sideband(PI, 0.0)],
        (2, 1) => {
            let phi = (1.0 / (PI / SQRT_2).tan()).acos();
            vec![
                Pulse::sideband(-FRAC_PI_2, 0.0),
                Pulse::sideband(SQRT_2 * PI, phi),
                Pulse::sideband(FRAC_PI_2, 0.0),
                Pulse::sideband(SQRT_2 * PI, phi),
            ]
        }
        _ => {
            let phi = (1.0 / (SQRT_2 * PI).tan()).acos();
            let t = PI / (2.0 * SQRT_2);
            vec![
                Pulse::sideband(-t, 0.0),
                Pulse::sideband(2.0 * PI, phi),
                Pulse::sideband(t, 0.0),
                Pulse::sideband(2.0 * PI, phi),
            ]
        }
    }
}

fn rotate_phases(pulses: &mut [Pulse], by: f64) {
    for p in pulses.iter_mut() {
        *p = Pulse::sideband(p.theta, p.phi + by);
    }
}

/// Closed-form sequences for one or two subspaces.
pub fn direct_small_n(n: usize, k: usize, sigma: ElementarySigma) -> Result<PulseSequence> {
    if !(1..=2).contains(&n) {
        return invalid("direct constructions cover n = 1 and n = 2");
    }
    if k < 1 || k > n {
        return invalid(format!("k={k} outside 1..={n}"));
    }
    Ok(small_range(n, n, k, sigma)?.sequence)
}

fn small_range(n: usize, range_max: usize, k: usize, sigma: ElementarySigma) -> Result<Elementary> {
    let mut pulses = small_range_pulses(range_max, k);
    match sigma {
        ElementarySigma::X => {}
        ElementarySigma::Y => rotate_phases(&mut pulses, FRAC_PI_2),
        ElementarySigma::MinusI => {
            let p = pulses.clone();
            pulses.extend(p);
        }
    }
    let phases = check_blocks(&pulses, range_max, k, &sigma.target())?;
    Ok(Elementary {
        sequence: PulseSequence::from_pulses(n, format!("elementary {sigma} on {k}"), pulses),
        k,
        sigma,
        range_max,
        l: 0,
        phases,
        warnings: Vec::new(),
    })
}

pub(crate) fn synthesize_in_range(
    n: usize,
    range_max: usize,
    k: usize,
    sigma: ElementarySigma,
    opts: &CleaningOptions,
) -> Result<Elementary> {
    if k < 1 || k > range_max {
        return invalid(format!("k={k} outside 1..={range_max}"));
    }
    if range_max <= 2 {
        return small_range(n, range_max, k, sigma);
    }
    let mut state = base_case_in_range(n, range_max, k, opts)?;
    let mut step = 0usize;
    loop {
        let todo = state.uncleaned();
        if todo.is_empty() {
            break;
        }
        let (mu, psi, phi) = match &opts.order {
            CleaningOrder::Explicit(order) => {
                let mu = order.iter().copied().find(|m| todo.contains(m)).ok_or_else(|| {
                    Error::InvalidArgument(format!("explicit order does not cover subspaces {todo:?}"))
                })?;
                (mu, 0.0, opts.free_angles.get(step).copied().unwrap_or(0.0))
            }
            CleaningOrder::Heuristic => {
                let choice = cleaning_order_heuristic(&state, opts.t_floor, opts.grid).expect("todo is nonempty");
                if let Some(w) = &choice.warning {
                    state.warnings.push(w.clone());
                }
                let phi = opts.free_angles.get(step).copied().unwrap_or(choice.free_angle);
                (choice.mu, choice.psi, phi)
            }
        };
        state = clean_step_with(&state, mu, psi, phi)?;
        step += 1;
    }
    final_step(&state, sigma, opts.beta_free)
}

/// Elementary clean rotation `I ⊕ … ⊕ Σ_k ⊕ … ⊕ I`, verified by simulation.
pub fn synthesize_elementary(n: usize, k: usize, sigma: ElementarySigma, opts: &CleaningOptions) -> Result<Elementary> {
    opts.validate()?;
    if k < 1 || k > n {
        return invalid(format!("k={k} outside 1..={n}"));
    }
    let e = synthesize_in_range(n, opts.range_max(n), k, sigma, opts)?;
    verify_by_simulation(&e, n)?;
    Ok(e)
}

fn verify_by_simulation(e: &Elementary, n: usize) -> Result<()> {
    let dims = QoQuditDims::new(n, 1)?;
    let u = apply_sequence(&e.sequence, dims)?;
    let dec = block_decompose(&u, Manifold::Sqm);
    if dec.residual > 1e-12 {
        return Err(Error::Synthesis(format!("sideband structure broken (residual {:.3e})", dec.residual)));
    }
    for &(j, phase) in &e.phases {
        let target = if j == e.k { *e.sigma.target().matrix() } else { *Su2Matrix::identity().matrix() * C64::new(phase, 0.0) };
        let err = max_abs(&(dec.block(j).expect("simulated block") - target));
        if err > BLOCK_TOL {
            return Err(Error::Synthesis(format!("simulated block {j} misses its target by {err:.3e}")));
        }
    }
    Ok(())
}
