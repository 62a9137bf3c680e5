use crate::rate::RateBreakdown;

use super::OptimizerError;

/// Closed-form time allocation `α⋆ = R̃_U⋆ / (R_C + R̃_U⋆ - R_U)`.
///
/// Requires `r_c > r_u` (the controller hears the AP better than the user
/// does) and `r_u_tilde_star > r_u`; under those conditions the two
/// branches of C₁ cross exactly once inside (0, 1).
pub fn optimal_alpha(r_u: f64, r_c: f64, r_u_tilde_star: f64) -> Result<f64, OptimizerError> {
    if !(r_c > r_u) {
        return Err(OptimizerError::PreconditionViolated(format!(
            "controller rate {r_c} does not exceed user rate {r_u}"
        )));
    }
    if !(r_u_tilde_star > r_u) {
        return Err(OptimizerError::PreconditionViolated(format!(
            "phase-2 rate {r_u_tilde_star} does not exceed phase-1 user rate {r_u}"
        )));
    }
    Ok(r_u_tilde_star / (r_c + r_u_tilde_star - r_u))
}

/// Maximizer of C₁ over `α ∈ [0, 1]` without the relaying precondition.
///
/// Falls back to `α = 1` whenever the crossing point leaves the interval.
pub fn best_alpha(r_u: f64, r_c: f64, r_u_tilde_star: f64) -> f64 {
    if r_u_tilde_star <= r_u {
        return 1.0;
    }
    let denom = r_c + r_u_tilde_star - r_u;
    if denom <= 0.0 {
        return 1.0;
    }
    (r_u_tilde_star / denom).min(1.0)
}

/// Sufficient condition for relaying to be useless:
/// `min{ρ̃_U⋆, ρ_C⋆} ≤ ρ_U⋆`.
pub fn check_prop1(rb: &RateBreakdown) -> bool {
    rb.rho_u_tilde_star.min(rb.rho_c_star) <= rb.rho_u_star
}

/// Sufficient condition for relaying to strictly win, evaluated at the θ₁
/// that produced `rb`: `ρ̃_U⋆ > ρ_U⋆` and
/// `R_C(θ₁) > (R̃_U⋆ - R_U(θ₁)) / (R̃_U⋆ - C₂⋆) · C₂⋆`.
pub fn check_prop2(rb: &RateBreakdown) -> bool {
    if !(rb.rho_u_tilde_star > rb.rho_u_star) {
        return false;
    }
    let excess = rb.r_u_tilde_star - rb.c2_star;
    if !(excess > 0.0) {
        return false;
    }
    rb.r_c > (rb.r_u_tilde_star - rb.r_u) / excess * rb.c2_star
}

/// Open interval of α on which C₁ strictly exceeds C₂⋆ when
/// [`check_prop2`] holds.
pub fn prop2_alpha_interval(rb: &RateBreakdown) -> Option<(f64, f64)> {
    if !check_prop2(rb) {
        return None;
    }
    let lo = rb.c2_star / rb.r_c;
    let hi = (rb.r_u_tilde_star - rb.c2_star) / (rb.r_u_tilde_star - rb.r_u);
    Some((lo, hi))
}
