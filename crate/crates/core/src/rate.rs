//! SNRs, rates and the closed-form phase alignments.
//!
//! All quantities are linear; rates are in bps/Hz.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{cascade, CascadedChannels, ChannelSet};
use crate::numerics::{inner, l1_norm, phase, unit, CScalar, CVec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("dimension mismatch: expected {expected} elements, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time allocation {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("reflection coefficient {index} has magnitude {magnitude}, expected 1")]
    NotUnitModulus { index: usize, magnitude: f64 },
    #[error("invalid power budget: {0}")]
    InvalidPower(String),
}

/// Unit-modulus IRS reflection vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector(CVec);

impl PhaseVector {
    pub const UNIT_TOL: f64 = 1e-12;

    pub fn new(theta: CVec) -> Result<Self, RateError> {
        for (index, z) in theta.iter().enumerate() {
            let magnitude = z.norm();
            if !((magnitude - 1.0).abs() <= Self::UNIT_TOL) {
                return Err(RateError::NotUnitModulus { index, magnitude });
            }
        }
        Ok(Self(theta))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); m])
    }

    pub fn from_phases(phases: &[f64]) -> Self {
        Self(phases.iter().map(|&p| unit(p)).collect())
    }

    /// Element-wise phase projection `e^{j∠z}`, with `∠0 = 0`.
    pub fn project(v: &[Complex64]) -> Self {
        Self(v.iter().map(|&z| unit(phase(z))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.arg()).collect()
    }
}

/// Transmit powers and noise power, all linear and in the same unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_a: f64,
    pub p_c: f64,
    pub p_max: f64,
    pub sigma2: f64,
}

impl PowerBudget {
    /// Equal AP and controller power at the budget.
    pub fn equal(p: f64, sigma2: f64) -> Result<Self, RateError> {
        let pb = Self {
            p_a: p,
            p_c: p,
            p_max: p,
            sigma2,
        };
        pb.validate()?;
        Ok(pb)
    }

    pub fn validate(&self) -> Result<(), RateError> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(RateError::InvalidPower(format!("sigma2 = {}", self.sigma2)));
        }
        if !(self.p_max.is_finite()) {
            return Err(RateError::InvalidPower(format!("p_max = {}", self.p_max)));
        }
        for (name, p) in [("p_a", self.p_a), ("p_c", self.p_c)] {
            if !(p > 0.0 && p <= self.p_max) {
                return Err(RateError::InvalidPower(format!(
                    "{name} = {p} must lie in (0, p_max = {}]",
                    self.p_max
                )));
            }
        }
        Ok(())
    }
}

pub fn rate_of(snr: f64) -> f64 {
    (1.0 + snr).log2()
}

fn check_len(expected: usize, got: usize) -> Result<(), RateError> {
    if expected != got {
        return Err(RateError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), RateError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RateError::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// `power * |h + q^H θ| ^2 / σ²`.
fn snr(power: f64, sigma2: f64, h: CScalar, q: &[Complex64], theta: &PhaseVector) -> Result<f64, RateError> {
    check_len(q.len(), theta.len())?;
    Ok(power * (h + inner(q, theta.as_slice())).norm_sqr() / sigma2)
}

/// User SNR in phase 1: `P_A |h_AU + q_U^H θ₁|² / σ²`.
pub fn snr_user_phase1(
    pb: &PowerBudget,
    h_au: CScalar,
    q_u: &[Complex64],
    theta1: &PhaseVector,
) -> Result<f64, RateError> {
    snr(pb.p_a, pb.sigma2, h_au, q_u, theta1)
}

/// Controller SNR in phase 1: `P_A |h_AC + q_C^H θ₁|² / σ²`.
pub fn snr_controller_phase1(
    pb: &PowerBudget,
    h_ac: CScalar,
    q_c: &[Complex64],
    theta1: &PhaseVector,
) -> Result<f64, RateError> {
    snr(pb.p_a, pb.sigma2, h_ac, q_c, theta1)
}

/// User SNR in phase 2: `P_C |h_CU + q̃_U^H θ₂|² / σ²`.
pub fn snr_user_phase2(
    pb: &PowerBudget,
    g_cu: CScalar,
    q_tilde_u: &[Complex64],
    theta2: &PhaseVector,
) -> Result<f64, RateError> {
    snr(pb.p_c, pb.sigma2, g_cu, q_tilde_u, theta2)
}

/// `θ_m = e^{j(∠h + ∠q_m)}`, which makes `|h + q^H θ| = |h| + ‖q‖₁`.
pub fn align_phases(h: CScalar, q: &[Complex64]) -> PhaseVector {
    let base = phase(h);
    PhaseVector(q.iter().map(|&z| unit(base + phase(z))).collect())
}

/// Closed-form maximum of `|h + q^H θ|²` over unit-modulus θ.
pub fn aligned_gain(h: CScalar, q: &[Complex64]) -> f64 {
    (h.norm() + l1_norm(q)).powi(2)
}

/// θ₁-dependent rates together with the closed-form optima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub r_u: f64,
    pub r_c: f64,
    pub r_u_tilde_star: f64,
    pub c2_star: f64,
    pub rho_u: f64,
    pub rho_c: f64,
    pub rho_u_tilde_star: f64,
    pub rho_u_star: f64,
    pub rho_c_star: f64,
}

impl RateBreakdown {
    pub fn r_c_star(&self) -> f64 {
        rate_of(self.rho_c_star)
    }

    pub fn c1(&self, alpha: f64) -> Result<f64, RateError> {
        rate_c1(self.r_u, self.r_c, self.r_u_tilde_star, alpha)
    }

    pub fn gap(&self, alpha: f64) -> Result<RateGap, RateError> {
        rate_gap(self.r_u, self.r_c, self.r_u_tilde_star, self.c2_star, alpha)
    }

    /// Same closed forms, different θ₁-dependent SNRs.
    pub fn with_phase1(&self, rho_u: f64, rho_c: f64) -> Self {
        Self {
            rho_u,
            rho_c,
            r_u: rate_of(rho_u),
            r_c: rate_of(rho_c),
            ..*self
        }
    }
}

pub fn rate_breakdown(
    pb: &PowerBudget,
    cs: &ChannelSet,
    casc: &CascadedChannels,
    theta1: &PhaseVector,
) -> Result<RateBreakdown, RateError> {
    let m = cs.num_elements();
    check_len(m, casc.q_u.len())?;
    check_len(m, casc.q_c.len())?;
    check_len(m, casc.q_tilde_u.len())?;
    let rho_u = snr_user_phase1(pb, cs.h_au, &casc.q_u, theta1)?;
    let rho_c = snr_controller_phase1(pb, cs.h_ac, &casc.q_c, theta1)?;
    let rho_u_tilde_star = pb.p_c * aligned_gain(cs.g_cu, &casc.q_tilde_u) / pb.sigma2;
    let rho_u_star = pb.p_a * aligned_gain(cs.h_au, &casc.q_u) / pb.sigma2;
    let rho_c_star = pb.p_a * aligned_gain(cs.h_ac, &casc.q_c) / pb.sigma2;
    Ok(RateBreakdown {
        r_u: rate_of(rho_u),
        r_c: rate_of(rho_c),
        r_u_tilde_star: rate_of(rho_u_tilde_star),
        c2_star: rate_of(rho_u_star),
        rho_u,
        rho_c,
        rho_u_tilde_star,
        rho_u_star,
        rho_c_star,
    })
}

/// `C₁ = min{α R_U + (1-α) R̃_U⋆, α R_C}`.
pub fn rate_c1(r_u: f64, r_c: f64, r_u_tilde_star: f64, alpha: f64) -> Result<f64, RateError> {
    check_alpha(alpha)?;
    Ok((alpha * r_u + (1.0 - alpha) * r_u_tilde_star).min(alpha * r_c))
}

/// `Δ = C₁ - C₂⋆` split into its two branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGap {
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
}

pub fn rate_gap(
    r_u: f64,
    r_c: f64,
    r_u_tilde_star: f64,
    c2_star: f64,
    alpha: f64,
) -> Result<RateGap, RateError> {
    check_alpha(alpha)?;
    let delta1 = alpha * (r_u - r_u_tilde_star) + r_u_tilde_star - c2_star;
    let delta2 = alpha * r_c - c2_star;
    Ok(RateGap {
        delta: delta1.min(delta2),
        delta1,
        delta2,
    })
}

/// Channels, their cascades and the power budget for one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub channels: ChannelSet,
    pub cascaded: CascadedChannels,
    pub power: PowerBudget,
}

impl Instance {
    pub fn new(channels: ChannelSet, power: PowerBudget) -> Self {
        let cascaded = cascade(&channels);
        Self {
            channels,
            cascaded,
            power,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.channels.num_elements()
    }

    pub fn breakdown(&self, theta1: &PhaseVector) -> Result<RateBreakdown, RateError> {
        rate_breakdown(&self.power, &self.channels, &self.cascaded, theta1)
    }

    pub fn rho_u(&self, theta1: &PhaseVector) -> Result<f64, RateError> {
        snr_user_phase1(&self.power, self.channels.h_au, &self.cascaded.q_u, theta1)
    }

    pub fn rho_c(&self, theta1: &PhaseVector) -> Result<f64, RateError> {
        snr_controller_phase1(&self.power, self.channels.h_ac, &self.cascaded.q_c, theta1)
    }

    /// θ₁,U⋆: maximizes the phase-1 user SNR.
    pub fn theta_user_star(&self) -> PhaseVector {
        align_phases(self.channels.h_au, &self.cascaded.q_u)
    }

    /// θ₁,C⋆: maximizes the phase-1 controller SNR.
    pub fn theta_controller_star(&self) -> PhaseVector {
        align_phases(self.channels.h_ac, &self.cascaded.q_c)
    }

    /// θ₂⋆: maximizes the phase-2 user SNR.
    pub fn theta2_star(&self) -> PhaseVector {
        align_phases(self.channels.g_cu, &self.cascaded.q_tilde_u)
    }
}
