use std::f64::consts::PI;

use crate::rate::{Instance, PhaseVector};

use super::{Mode, OptimizerError, Solution};

/// Largest IRS the exhaustive search accepts.
pub const BRUTE_FORCE_MAX_ELEMENTS: usize = 4;

/// Exhaustive search over `phase_grid_points` phases per element and
/// `alpha_grid_points` values of α evenly spaced on `[0, 1]`.
///
/// Relaying candidates must satisfy `ρ_C > ρ_U`; the result is compared
/// against the closed-form conventional rate C₂⋆. Intended as a test
/// oracle for tiny arrays.
pub fn brute_force_p1(
    instance: &Instance,
    phase_grid_points: usize,
    alpha_grid_points: usize,
) -> Result<Solution, OptimizerError> {
    let m = instance.num_elements();
    if m > BRUTE_FORCE_MAX_ELEMENTS {
        return Err(OptimizerError::TooLarge {
            max: BRUTE_FORCE_MAX_ELEMENTS,
            got: m,
        });
    }
    if phase_grid_points == 0 || alpha_grid_points < 2 {
        return Err(OptimizerError::PreconditionViolated(
            "grids need at least one phase and two values of alpha".into(),
        ));
    }
    let theta_u = instance.theta_user_star();
    let rb_u = instance.breakdown(&theta_u)?;

    let step = 2.0 * PI / phase_grid_points as f64;
    let mut idx = vec![0usize; m];
    let mut best: Option<(f64, f64, PhaseVector)> = None;
    loop {
        let phases: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        let theta = PhaseVector::from_phases(&phases);
        let rb = instance.breakdown(&theta)?;
        if rb.rho_c > rb.rho_u {
            for a in 0..alpha_grid_points {
                let alpha = a as f64 / (alpha_grid_points - 1) as f64;
                let c1 = rb.c1(alpha)?;
                if best.as_ref().is_none_or(|b| c1 > b.0) {
                    best = Some((c1, alpha, theta.clone()));
                }
            }
        }
        // odometer increment over the phase grid
        let mut pos = 0;
        while pos < m {
            idx[pos] += 1;
            if idx[pos] < phase_grid_points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == m {
            break;
        }
    }

    let relay_rate = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
    Ok(match best {
        Some((rate, alpha, theta1)) if rate > rb_u.c2_star => Solution {
            mode: Mode::Relaying,
            theta1,
            theta2: instance.theta2_star(),
            alpha,
            rate,
            iterations: 0,
            rate_trace: vec![],
            relay_rate,
            c2_star: rb_u.c2_star,
        },
        _ => Solution {
            mode: Mode::Conventional,
            theta1: theta_u,
            theta2: instance.theta2_star(),
            alpha: 1.0,
            rate: rb_u.c2_star,
            iterations: 0,
            rate_trace: vec![],
            relay_rate,
            c2_star: rb_u.c2_star,
        },
    })
}
