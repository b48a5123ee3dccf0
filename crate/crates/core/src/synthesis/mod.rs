//! Analytic synthesis of clean sideband and carrier rotations.
//!
//! Everything is built from red-sideband and carrier pulses only. Elementary
//! rotations come from recursive cleaning, arbitrary rotations from
//! refocusing those elementaries, and full unitaries from two-level factors.

mod compile;
mod elementary;
pub mod heuristic;
mod refocus;
mod translate;
mod two_level;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use crate::error::{invalid, Error, Result};
use crate::rotations::Su2Matrix;

pub use compile::{compile_unitary, givens_factors, CompiledUnitary, TwoLevelFactor};
pub use elementary::{
    base_case, clean_step, clean_step_with, direct_small_n, final_step, synthesize_elementary, Elementary,
    SynthesisState,
};
pub use refocus::{synthesize_cqm_rotation, synthesize_sqm_rotation, synthesize_z_pattern};
pub use translate::{cqm_pattern_of_signs, eq22_signs, sqm_sign_pattern_for_cqm, CarrierSign};
pub use two_level::{synthesize_two_level, TwoLevelTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementarySigma {
    /// `iσx`
    X,
    /// `iσy`
    Y,
    MinusI,
}

impl ElementarySigma {
    pub fn target(&self) -> Su2Matrix {
        match self {
            Self::X => Su2Matrix::x(),
            Self::Y => Su2Matrix::y(),
            Self::MinusI => Su2Matrix::minus_identity(),
        }
    }
}

impl fmt::Display for ElementarySigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::X => "X",
            Self::Y => "Y",
            Self::MinusI => "-I",
        })
    }
}

impl FromStr for ElementarySigma {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Self::X),
            "Y" | "y" => Ok(Self::Y),
            "-I" | "-i" | "minus_i" | "MinusI" | "mI" => Ok(Self::MinusI),
            _ => invalid(format!("unknown elementary rotation '{s}' (expected X, Y or -I)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum CleaningOrder {
    #[default]
    Heuristic,
    /// Subspaces in the order they are cleaned; skipped when already ±I.
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleaningOptions {
    pub order: CleaningOrder,
    /// Free xy-decomposition angle per cleaning step; overrides the search.
    pub free_angles: Vec<f64>,
    pub mu_pair: Option<(usize, usize)>,
    /// Target lower bound `θ_k ≥ π/t_floor` used by the ordering heuristic.
    pub t_floor: u32,
    /// Include subspace `n+1` in the cleaning range.
    pub clean_boundary: bool,
    /// Free component of the final-step axes (β₂ for X, β₁ for Y).
    pub beta_free: f64,
    /// Grid resolution of the ordering search.
    pub grid: usize,
}

impl Default for CleaningOptions {
    fn default() -> Self {
        Self {
            order: CleaningOrder::Heuristic,
            free_angles: Vec::new(),
            mu_pair: None,
            t_floor: 4,
            clean_boundary: true,
            beta_free: 0.0,
            grid: 8,
        }
    }
}

impl CleaningOptions {
    pub fn literal() -> Self {
        Self { clean_boundary: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((a, b)) = self.mu_pair {
            if a == b {
                return invalid("mu pair entries must differ");
            }
        }
        if self.t_floor < 1 {
            return invalid("t_floor must be positive");
        }
        if self.grid < 1 {
            return invalid("grid must be positive");
        }
        if !self.beta_free.is_finite() {
            return invalid("beta_free must be finite");
        }
        Ok(())
    }

    /// Highest sideband subspace driven to a definite value.
    pub fn range_max(&self, n: usize) -> usize {
        if self.clean_boundary {
            n + 1
        } else {
            n
        }
    }
}

/// Synthesis front end with a cache of elementary sequences.
#[derive(Debug)]
pub struct Synthesizer {
    pub n: usize,
    pub opts: CleaningOptions,
    cache: Mutex<HashMap<(usize, ElementarySigma), Elementary>>,
}

impl Synthesizer {
    pub fn new(n: usize, opts: CleaningOptions) -> Result<Self> {
        if n < 1 {
            return invalid("n must be at least 1");
        }
        opts.validate()?;
        Ok(Self { n, opts, cache: Mutex::new(HashMap::new()) })
    }

    pub fn range_max(&self) -> usize {
        self.opts.range_max(self.n)
    }

    /// Elementary rotation on sideband subspace `k` of the cleaning range.
    pub fn elementary(&self, k: usize, sigma: ElementarySigma) -> Result<Elementary> {
        if let Some(e) = self.cache.lock().expect("cache lock").get(&(k, sigma)) {
            return Ok(e.clone());
        }
        let e = elementary::synthesize_in_range(self.n, self.range_max(), k, sigma, &self.opts)?;
        self.cache.lock().expect("cache lock").insert((k, sigma), e.clone());
        Ok(e)
    }
}
