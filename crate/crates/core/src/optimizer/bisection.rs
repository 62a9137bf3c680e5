use crate::numerics::{CMatrix, HermMatrix};
use crate::rate::{PowerBudget, RateBreakdown};

use super::elliptope::sdp_feasible_from;
use super::{AOConfig, LiftedMatrices, OptimizerError};

/// Largest rate target certified feasible by bisection, with its witness.
#[derive(Debug, Clone)]
pub struct BisectionResult {
    pub delta_star: f64,
    pub psi_star: HermMatrix,
    pub factor: CMatrix,
    pub steps: usize,
}

/// Bisection on the rate target δ of the relaxed reflection subproblem at
/// fixed α.
///
/// The bracket starts at `[0, min{α R_C⋆, α C₂⋆ + (1-α) R̃_U⋆}]`; both
/// branches of C₁ are bounded by their closed-form optima, and δ = 0 is
/// met by every reflection vector.
pub fn bisection_p31(
    alpha: f64,
    lm: &LiftedMatrices,
    rb: &RateBreakdown,
    pb: &PowerBudget,
    cfg: &AOConfig,
) -> Result<BisectionResult, OptimizerError> {
    bisection_p31_from(alpha, lm, rb, pb, cfg, None)
}

/// [`bisection_p31`] with a warm-start factor, typically the witness of the
/// previous alternating step.
pub fn bisection_p31_from(
    alpha: f64,
    lm: &LiftedMatrices,
    rb: &RateBreakdown,
    pb: &PowerBudget,
    cfg: &AOConfig,
    start: Option<&CMatrix>,
) -> Result<BisectionResult, OptimizerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(OptimizerError::AlphaOutOfRange(alpha));
    }
    let mut lo = 0.0;
    let mut hi = (alpha * rb.r_c_star()).min(alpha * rb.c2_star + (1.0 - alpha) * rb.r_u_tilde_star);

    let base = sdp_feasible_from(lo, alpha, lm, rb, pb, cfg, start)?;
    if !base.feasible {
        return Err(OptimizerError::PreconditionViolated(format!(
            "zero rate target reported infeasible (slack {})",
            base.achieved_slack
        )));
    }
    let mut best = base;
    let mut steps = 0;
    while hi - lo > cfg.bisection_eps {
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let res = sdp_feasible_from(mid, alpha, lm, rb, pb, cfg, Some(&best.factor))?;
        if res.feasible {
            lo = mid;
            best = res;
        } else {
            hi = mid;
        }
    }
    log::trace!("bisection: alpha={alpha:.4} delta*={lo:.6} after {steps} steps");
    Ok(BisectionResult {
        delta_star: lo,
        psi_star: best.psi,
        factor: best.factor,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cascade, ChannelSet};
    use crate::numerics::{inner, sample_cn, unit, RngStream};
    use crate::optimizer::build_lifted;
    use crate::rate::{rate_breakdown, PhaseVector};
    use std::f64::consts::PI;

    fn instance(rng: &mut RngStream, m: usize) -> (ChannelSet, PowerBudget) {
        let cs = ChannelSet {
            h_au: rng.cn() * 0.3,
            h_ai: sample_cn(rng, m).unwrap(),
            h_ac: rng.cn(),
            h_ic: sample_cn(rng, m).unwrap(),
            g_iu: sample_cn(rng, m).unwrap(),
            g_cu: rng.cn() * 2.0,
        };
        (cs, PowerBudget::equal(10.0, 1.0).unwrap())
    }

    fn setup(cs: &ChannelSet, pb: &PowerBudget) -> (LiftedMatrices, RateBreakdown) {
        let casc = cascade(cs);
        let lm = build_lifted(cs.h_au, &casc.q_u, cs.h_ac, &casc.q_c).unwrap();
        let rb = rate_breakdown(pb, cs, &casc, &PhaseVector::ones(cs.num_elements())).unwrap();
        (lm, rb)
    }

    /// Best C₁ at fixed α over a phase grid on each element of θ₁.
    fn grid_c1(cs: &ChannelSet, pb: &PowerBudget, rb: &RateBreakdown, alpha: f64, points: usize) -> f64 {
        let casc = cascade(cs);
        let mut best = f64::NEG_INFINITY;
        for i in 0..points {
            for j in 0..points {
                let th = [unit(2.0 * PI * i as f64 / points as f64), unit(2.0 * PI * j as f64 / points as f64)];
                let rho_u = pb.p_a * (cs.h_au + inner(&casc.q_u, &th)).norm_sqr() / pb.sigma2;
                let rho_c = pb.p_a * (cs.h_ac + inner(&casc.q_c, &th)).norm_sqr() / pb.sigma2;
                best = best.max(rb.with_phase1(rho_u, rho_c).c1(alpha).unwrap());
            }
        }
        best
    }

    #[test]
    fn symmetric_links_at_full_alpha_reach_the_aligned_rate() {
        // With identical AP→user and AP→controller links and α = 1, the
        // best target is C₂⋆ itself.
        let mut rng = RngStream::new(5);
        let (mut cs, pb) = instance(&mut rng, 3);
        cs.h_ac = cs.h_au;
        cs.h_ic = cs.g_iu.clone();
        let (lm, rb) = setup(&cs, &pb);
        let res = bisection_p31(1.0, &lm, &rb, &pb, &AOConfig::default()).unwrap();
        assert!((res.delta_star - rb.c2_star).abs() < 2e-3, "{} vs {}", res.delta_star, rb.c2_star);
    }

    #[test]
    fn result_stays_inside_bracket() {
        let mut rng = RngStream::new(6);
        let cfg = AOConfig::default();
        for _ in 0..3 {
            let (cs, pb) = instance(&mut rng, 4);
            let (lm, rb) = setup(&cs, &pb);
            for alpha in [0.25, 0.5, 0.9] {
                let res = bisection_p31(alpha, &lm, &rb, &pb, &cfg).unwrap();
                let hi = (alpha * rb.r_c_star()).min(alpha * rb.c2_star + (1.0 - alpha) * rb.r_u_tilde_star);
                assert!(res.delta_star >= 0.0 && res.delta_star <= hi);
                assert_eq!(res.psi_star.order(), 5);
            }
        }
    }

    #[test]
    fn dominates_rank_one_grid_at_two_elements() {
        let mut rng = RngStream::new(7);
        let cfg = AOConfig::default();
        for _ in 0..4 {
            let (cs, pb) = instance(&mut rng, 2);
            let (lm, rb) = setup(&cs, &pb);
            for alpha in [0.4, 0.7] {
                let res = bisection_p31(alpha, &lm, &rb, &pb, &cfg).unwrap();
                let oracle = grid_c1(&cs, &pb, &rb, alpha, 720);
                assert!(
                    res.delta_star >= oracle - 2.0 * cfg.bisection_eps,
                    "delta* {} oracle {}",
                    res.delta_star,
                    oracle
                );
            }
        }
    }

    #[test]
    fn rejects_zero_alpha() {
        let mut rng = RngStream::new(8);
        let (cs, pb) = instance(&mut rng, 2);
        let (lm, rb) = setup(&cs, &pb);
        let err = bisection_p31(0.0, &lm, &rb, &pb, &AOConfig::default());
        assert!(matches!(err, Err(OptimizerError::AlphaOutOfRange(_))));
    }
}
