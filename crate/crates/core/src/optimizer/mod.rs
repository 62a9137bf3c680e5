//! Joint time allocation and phase-1 reflection design.
//!
//! The relaying problem is solved by alternating between the closed-form
//! time allocation and a relaxed reflection subproblem. The relaxation lifts
//! `θ̄ = [θ₁; t]` to a unit-diagonal PSD matrix `Ψ = V V^H`, which is
//! searched directly in factored form (see [`elliptope`]); bisection on the
//! rate target turns the max-min into a sequence of feasibility checks and
//! Gaussian randomization recovers a unit-modulus vector.

mod alpha;
mod ao;
mod bisection;
mod brute;
pub mod elliptope;
mod lifted;
mod randomization;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;
use crate::rate::{PhaseVector, RateError};

pub use alpha::{best_alpha, check_prop1, check_prop2, optimal_alpha, prop2_alpha_interval};
pub use ao::{ao_solve, relay_without_irs, solve_fixed_alpha};
pub use bisection::{bisection_p31, bisection_p31_from, BisectionResult};
pub use brute::{brute_force_p1, BRUTE_FORCE_MAX_ELEMENTS};
pub use elliptope::{
    elliptope_maxmin, p32_thresholds, sdp_feasible, sdp_feasible_from, FeasResult, MaxMinResult,
};
pub use lifted::{build_lifted, LiftedMatrices};
pub use randomization::gaussian_randomization;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("time allocation {0} is outside the admissible range")]
    AlphaOutOfRange(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("brute force supports at most {max} IRS elements, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Solver settings for the alternating optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AOConfig {
    /// Bisection stops once the bracket is narrower than this (bps/Hz).
    pub bisection_eps: f64,
    pub max_ao_iters: usize,
    /// Number of fixed-α reflection solves used to seed the alternation;
    /// 0 leaves only the θ₁,C⋆ and θ₁,U⋆ starts.
    pub alpha_scan_points: usize,
    /// Golden-section refinements of the best scanned α.
    pub alpha_refine_iters: usize,
    /// AO stops when an iteration improves the rate by less than this.
    pub ao_rate_tol: f64,
    pub randomization_count: usize,
    /// Factor rank; `None` means `ceil(sqrt(M + 1)) + 1`.
    pub bm_rank: Option<usize>,
    pub bm_max_iters: usize,
    /// Initial ascent step of the factored solver.
    pub bm_step: f64,
    /// Smoothing temperature schedule: start, floor and per-stage factor.
    pub bm_tau_start: f64,
    pub bm_tau_min: f64,
    pub bm_tau_decay: f64,
    pub feasibility_slack_tol: f64,
    /// Diagonal shift for the Cholesky factor used in randomization.
    pub cholesky_shift: f64,
}

impl Default for AOConfig {
    fn default() -> Self {
        Self {
            bisection_eps: 1e-4,
            max_ao_iters: 30,
            alpha_scan_points: 8,
            alpha_refine_iters: 10,
            ao_rate_tol: 1e-4,
            randomization_count: 200,
            bm_rank: None,
            bm_max_iters: 2000,
            bm_step: 1.0,
            bm_tau_start: 0.05,
            bm_tau_min: 1e-5,
            bm_tau_decay: 0.5,
            feasibility_slack_tol: 1e-7,
            cholesky_shift: 1e-9,
        }
    }
}

impl AOConfig {
    pub fn rank_for(&self, m: usize) -> usize {
        self.bm_rank
            .unwrap_or_else(|| ((m + 1) as f64).sqrt().ceil() as usize + 1)
            .max(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("bisection_eps", self.bisection_eps),
            ("ao_rate_tol", self.ao_rate_tol),
            ("bm_step", self.bm_step),
            ("bm_tau_start", self.bm_tau_start),
            ("bm_tau_min", self.bm_tau_min),
            ("bm_tau_decay", self.bm_tau_decay),
            ("feasibility_slack_tol", self.feasibility_slack_tol),
            ("cholesky_shift", self.cholesky_shift),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("solver.{name} must be positive, got {v}"));
            }
        }
        if !(self.bm_tau_decay < 1.0) {
            return Err(format!("solver.bm_tau_decay must be below 1, got {}", self.bm_tau_decay));
        }
        if self.bm_tau_min > self.bm_tau_start {
            return Err("solver.bm_tau_min exceeds solver.bm_tau_start".into());
        }
        let counts = [
            ("max_ao_iters", self.max_ao_iters),
            ("randomization_count", self.randomization_count),
            ("bm_max_iters", self.bm_max_iters),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(format!("solver.{name} must be positive"));
            }
        }
        if self.bm_rank == Some(0) {
            return Err("solver.bm_rank must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Relaying,
    Conventional,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Relaying => "relaying",
            Mode::Conventional => "conventional",
        }
    }
}

/// Outcome of one optimization.
///
/// `Conventional` always carries `alpha = 1` and `rate = c2_star`;
/// `Relaying` carries the C₁ of its `(theta1, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub mode: Mode,
    pub theta1: PhaseVector,
    pub theta2: PhaseVector,
    pub alpha: f64,
    pub rate: f64,
    pub iterations: usize,
    pub rate_trace: Vec<f64>,
    /// Best relaying-case C₁ found, even when the conventional mode won.
    pub relay_rate: f64,
    pub c2_star: f64,
}
