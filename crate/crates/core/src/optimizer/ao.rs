use crate::numerics::{CMatrix, RngStream};
use crate::rate::{rate_of, Instance, PhaseVector, RateBreakdown};

use super::randomization::gaussian_randomization;
use super::{
    best_alpha, bisection_p31_from, build_lifted, check_prop1, optimal_alpha, AOConfig, LiftedMatrices, Mode,
    OptimizerError, Solution,
};

fn conventional(instance: &Instance, rb_u: &RateBreakdown, relay_rate: f64, iterations: usize, trace: Vec<f64>) -> Solution {
    Solution {
        mode: Mode::Conventional,
        theta1: instance.theta_user_star(),
        theta2: instance.theta2_star(),
        alpha: 1.0,
        rate: rb_u.c2_star,
        iterations,
        rate_trace: trace,
        relay_rate,
        c2_star: rb_u.c2_star,
    }
}

/// Picks the final mode for a relaying candidate `(theta, rb)`.
///
/// Relaying is reported only when it strictly beats C₂⋆ and the controller
/// decodes at least as well as the user; its α is then the closed-form
/// crossing point, which exists because `best_alpha < 1` in that regime.
fn finalize(
    instance: &Instance,
    rb_u: &RateBreakdown,
    theta: PhaseVector,
    rb: &RateBreakdown,
    iterations: usize,
    trace: Vec<f64>,
) -> Result<Solution, OptimizerError> {
    let relay_rate = rb.c1(best_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star))?;
    if relay_rate > rb.c2_star && rb.rho_c > rb.rho_u {
        let alpha = optimal_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star)?;
        return Ok(Solution {
            mode: Mode::Relaying,
            theta1: theta,
            theta2: instance.theta2_star(),
            alpha,
            rate: rb.c1(alpha)?,
            iterations,
            rate_trace: trace,
            relay_rate,
            c2_star: rb.c2_star,
        });
    }
    Ok(conventional(instance, rb_u, relay_rate, iterations, trace))
}

struct Run {
    theta: PhaseVector,
    rb: RateBreakdown,
    iterations: usize,
    trace: Vec<f64>,
}

fn alternate(
    instance: &Instance,
    lm: &LiftedMatrices,
    init: PhaseVector,
    cfg: &AOConfig,
    rng: &mut RngStream,
) -> Result<Run, OptimizerError> {
    let mut theta = init;
    let mut rb = instance.breakdown(&theta)?;
    let mut alpha = best_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star);
    let mut objective = rb.c1(alpha)?;
    let mut trace = vec![objective];
    let mut factor: Option<CMatrix> = None;
    let mut iterations = 0;

    while iterations < cfg.max_ao_iters {
        iterations += 1;
        let bis = bisection_p31_from(alpha, lm, &rb, &instance.power, cfg, factor.as_ref())?;
        let candidate = gaussian_randomization(&bis.psi_star, alpha, instance, &rb, cfg, rng)?;
        factor = Some(bis.factor);
        let cand_rb = instance.breakdown(&candidate)?;
        // The incumbent stays unless the candidate is better at the current α,
        // which keeps the trace non-decreasing.
        if cand_rb.c1(alpha)? > rb.c1(alpha)? {
            theta = candidate;
            rb = cand_rb;
        }
        alpha = best_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star);
        let next = rb.c1(alpha)?;
        trace.push(next);
        let gain = next - objective;
        objective = next;
        if gain < cfg.ao_rate_tol {
            break;
        }
    }
    log::debug!("ao: {iterations} iterations, C1 = {objective:.6}");
    Ok(Run {
        theta,
        rb,
        iterations,
        trace,
    })
}

/// One fixed-α reflection solve: bisection, then randomization; the value
/// is C₁ of the recovered θ₁ at its own best α.
fn profile_point(
    instance: &Instance,
    lm: &LiftedMatrices,
    rb0: &RateBreakdown,
    alpha: f64,
    cfg: &AOConfig,
    rng: &mut RngStream,
    warm: &mut Option<CMatrix>,
) -> Result<(PhaseVector, f64), OptimizerError> {
    let bis = bisection_p31_from(alpha, lm, rb0, &instance.power, cfg, warm.as_ref())?;
    let theta = gaussian_randomization(&bis.psi_star, alpha, instance, rb0, cfg, rng)?;
    *warm = Some(bis.factor);
    let rb = instance.breakdown(&theta)?;
    let value = rb.c1(best_alpha(rb.r_u, rb.r_c, rb.r_u_tilde_star))?;
    Ok((theta, value))
}

/// Coarse scan of the fixed-α optimum over `α = k/K`, refined by golden
/// section around the best grid point. Returns the best θ₁ seen.
///
/// Pure alternation stalls wherever both branches of C₁ are active at the
/// current α, because neither coordinate step alone can raise a pointwise
/// min; seeding it from the scan avoids those points.
fn alpha_scan(
    instance: &Instance,
    lm: &LiftedMatrices,
    rb0: &RateBreakdown,
    cfg: &AOConfig,
    rng: &mut RngStream,
) -> Result<Option<PhaseVector>, OptimizerError> {
    let k = cfg.alpha_scan_points;
    if k == 0 {
        return Ok(None);
    }
    let mut warm = None;
    let mut best: Option<(PhaseVector, f64, f64)> = None;
    let keep = |theta: PhaseVector, value: f64, alpha: f64, best: &mut Option<(PhaseVector, f64, f64)>| {
        if best.as_ref().is_none_or(|b| value > b.1) {
            *best = Some((theta, value, alpha));
        }
    };
    for i in 1..=k {
        let alpha = i as f64 / k as f64;
        let (theta, value) = profile_point(instance, lm, rb0, alpha, cfg, rng, &mut warm)?;
        keep(theta, value, alpha, &mut best);
    }
    let centre = best.as_ref().map_or(1.0, |b| b.2);
    let step = 1.0 / k as f64;
    let (mut a, mut b) = ((centre - step).max(1e-3), (centre + step).min(1.0));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (t1, mut f1) = profile_point(instance, lm, rb0, x1, cfg, rng, &mut warm)?;
    keep(t1, f1, x1, &mut best);
    let (t2, mut f2) = profile_point(instance, lm, rb0, x2, cfg, rng, &mut warm)?;
    keep(t2, f2, x2, &mut best);
    for _ in 0..cfg.alpha_refine_iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            let (t, f) = profile_point(instance, lm, rb0, x1, cfg, rng, &mut warm)?;
            keep(t, f, x1, &mut best);
            f1 = f;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            let (t, f) = profile_point(instance, lm, rb0, x2, cfg, rng, &mut warm)?;
            keep(t, f, x2, &mut best);
            f2 = f;
        }
    }
    Ok(best.map(|b| b.0))
}

/// Joint design of θ₁ and α by alternating optimization.
///
/// Runs start from θ₁,C⋆, θ₁,U⋆ and the best point of a coarse scan over
/// fixed α; the best run is kept. When the necessary condition for
/// relaying fails, or the AP-to-controller channel vanishes, the
/// conventional design is returned without iterating.
pub fn ao_solve(instance: &Instance, cfg: &AOConfig, rng: &mut RngStream) -> Result<Solution, OptimizerError> {
    cfg.validate().map_err(OptimizerError::PreconditionViolated)?;
    let theta_u = instance.theta_user_star();
    let rb_u = instance.breakdown(&theta_u)?;
    let m = instance.num_elements();

    if m == 0 {
        return finalize(instance, &rb_u, theta_u, &rb_u, 0, vec![]);
    }
    if check_prop1(&rb_u) || rb_u.rho_c_star == 0.0 {
        let relay_rate = rb_u.c1(best_alpha(rb_u.r_u, rb_u.r_c, rb_u.r_u_tilde_star))?;
        return Ok(conventional(instance, &rb_u, relay_rate, 0, vec![]));
    }

    let casc = &instance.cascaded;
    let lm = build_lifted(instance.channels.h_au, &casc.q_u, instance.channels.h_ac, &casc.q_c)?;
    let mut inits = vec![instance.theta_controller_star(), theta_u];
    if let Some(theta) = alpha_scan(instance, &lm, &rb_u, cfg, rng)? {
        inits.push(theta);
    }
    let mut best: Option<Run> = None;
    for init in inits {
        let run = alternate(instance, &lm, init, cfg, rng)?;
        let better = match &best {
            None => true,
            Some(b) => run.trace.last() > b.trace.last(),
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one initialization");
    finalize(instance, &rb_u, run.theta, &run.rb, run.iterations, run.trace)
}

/// θ₁ design at a fixed time split; used for the equal-allocation baseline.
///
/// The reported rate is C₁ at that split whenever the controller decodes
/// better than the user, even if it falls below C₂⋆; otherwise the
/// conventional design is reported.
pub fn solve_fixed_alpha(
    instance: &Instance,
    alpha: f64,
    cfg: &AOConfig,
    rng: &mut RngStream,
) -> Result<Solution, OptimizerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(OptimizerError::AlphaOutOfRange(alpha));
    }
    cfg.validate().map_err(OptimizerError::PreconditionViolated)?;
    let theta_u = instance.theta_user_star();
    let rb_u = instance.breakdown(&theta_u)?;
    let m = instance.num_elements();

    let (theta, rb) = if m == 0 || rb_u.rho_c_star == 0.0 {
        (theta_u.clone(), rb_u)
    } else {
        let casc = &instance.cascaded;
        let lm = build_lifted(instance.channels.h_au, &casc.q_u, instance.channels.h_ac, &casc.q_c)?;
        let bis = bisection_p31_from(alpha, &lm, &rb_u, &instance.power, cfg, None)?;
        let theta = gaussian_randomization(&bis.psi_star, alpha, instance, &rb_u, cfg, rng)?;
        let rb = instance.breakdown(&theta)?;
        (theta, rb)
    };
    let rate = rb.c1(alpha)?;
    if rb.rho_c > rb.rho_u {
        Ok(Solution {
            mode: Mode::Relaying,
            theta1: theta,
            theta2: instance.theta2_star(),
            alpha,
            rate,
            iterations: 1,
            rate_trace: vec![rate],
            relay_rate: rate,
            c2_star: rb_u.c2_star,
        })
    } else {
        Ok(conventional(instance, &rb_u, rate, 1, vec![rate]))
    }
}

/// Decode-and-forward over the direct links only, with the IRS absent.
///
/// Uses `ρ_U = P_A|h_AU|²/σ²`, `ρ_C = P_A|h_AC|²/σ²` and
/// `ρ̃_U = P_C|h_CU|²/σ²` with the closed-form α; falls back to direct
/// transmission at `α = 1` when relaying does not help.
pub fn relay_without_irs(instance: &Instance) -> Solution {
    let pb = &instance.power;
    let cs = &instance.channels;
    let rho_u = pb.p_a * cs.h_au.norm_sqr() / pb.sigma2;
    let rho_c = pb.p_a * cs.h_ac.norm_sqr() / pb.sigma2;
    let rho_t = pb.p_c * cs.g_cu.norm_sqr() / pb.sigma2;
    let (r_u, r_c, r_t) = (rate_of(rho_u), rate_of(rho_c), rate_of(rho_t));
    let empty = PhaseVector::ones(0);
    let direct = Solution {
        mode: Mode::Conventional,
        theta1: empty.clone(),
        theta2: empty.clone(),
        alpha: 1.0,
        rate: r_u,
        iterations: 0,
        rate_trace: vec![],
        relay_rate: r_u,
        c2_star: r_u,
    };
    match optimal_alpha(r_u, r_c, r_t) {
        Ok(alpha) => {
            let c1 = (alpha * r_u + (1.0 - alpha) * r_t).min(alpha * r_c);
            if c1 > r_u {
                Solution {
                    mode: Mode::Relaying,
                    alpha,
                    rate: c1,
                    relay_rate: c1,
                    ..direct
                }
            } else {
                direct
            }
        }
        Err(_) => direct,
    }
}
