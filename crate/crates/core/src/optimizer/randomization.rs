use num_complex::Complex64;

use crate::numerics::{cholesky_psd, herm_eig, phase, unit, HermMatrix, RngStream};
use crate::rate::{Instance, PhaseVector, RateBreakdown};

use super::{AOConfig, OptimizerError};

/// Recovers a unit-modulus θ₁ from a relaxed solution `Ψ` of order `M + 1`.
///
/// Draws `ξ ~ CN(0, Ψ)` through a Cholesky factor, maps each draw to
/// `θ_m = e^{j∠(ξ_m / ξ_{M+1})}`, and returns whichever candidate maximizes
/// C₁ at the given α. The pool also contains θ₁,U⋆, θ₁,C⋆ and the phase
/// projection of the dominant eigenvector, so a rank-one `Ψ` is recovered
/// exactly. Ties keep the earliest candidate.
pub fn gaussian_randomization(
    psi: &HermMatrix,
    alpha: f64,
    instance: &Instance,
    rb: &RateBreakdown,
    cfg: &AOConfig,
    rng: &mut RngStream,
) -> Result<PhaseVector, OptimizerError> {
    let m = instance.num_elements();
    if psi.order() != m + 1 {
        return Err(OptimizerError::DimensionMismatch {
            expected: m + 1,
            got: psi.order(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(OptimizerError::AlphaOutOfRange(alpha));
    }

    let eig = herm_eig(psi)?;
    if !eig.is_psd() {
        return Err(OptimizerError::Numerics(crate::numerics::NumericsError::NotPsd {
            index: 0,
            pivot: eig.values[0],
        }));
    }
    let lower = cholesky_psd(psi, cfg.cholesky_shift)?;

    let score = |theta: &PhaseVector| -> Result<f64, OptimizerError> {
        let rho_u = instance.rho_u(theta)?;
        let rho_c = instance.rho_c(theta)?;
        Ok(rb.with_phase1(rho_u, rho_c).c1(alpha)?)
    };

    let mut best = instance.theta_user_star();
    let mut best_score = score(&best)?;
    let consider = |theta: PhaseVector, best: &mut PhaseVector, best_score: &mut f64| -> Result<(), OptimizerError> {
        let s = score(&theta)?;
        if s > *best_score {
            *best_score = s;
            *best = theta;
        }
        Ok(())
    };

    consider(instance.theta_controller_star(), &mut best, &mut best_score)?;
    consider(to_phases(&eig.dominant_vector()), &mut best, &mut best_score)?;

    let n = m + 1;
    let mut xi = vec![Complex64::new(0.0, 0.0); n];
    let mut z = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.randomization_count {
        for zk in z.iter_mut() {
            *zk = rng.cn();
        }
        for (i, x) in xi.iter_mut().enumerate() {
            *x = lower.row(i)[..=i].iter().zip(&z).map(|(l, zk)| l * zk).sum();
        }
        consider(to_phases(&xi), &mut best, &mut best_score)?;
    }
    Ok(best)
}

/// `θ_m = e^{j∠(x_m / x_{M+1})}`, or the raw phases when the last entry
/// vanishes.
fn to_phases(x: &[Complex64]) -> PhaseVector {
    let (last, head) = x.split_last().expect("lifted vector has at least one entry");
    let reference = if last.norm() > 0.0 { phase(*last) } else { 0.0 };
    PhaseVector::new(head.iter().map(|&v| unit(phase(v) - reference)).collect())
        .expect("unit phasors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSet;
    use crate::numerics::sample_cn;
    use crate::optimizer::{bisection_p31, build_lifted};
    use crate::rate::PowerBudget;
    use std::f64::consts::PI;

    fn instance(rng: &mut RngStream, m: usize) -> Instance {
        let cs = ChannelSet {
            h_au: rng.cn() * 0.5,
            h_ai: sample_cn(rng, m).unwrap(),
            h_ac: rng.cn(),
            h_ic: sample_cn(rng, m).unwrap(),
            g_iu: sample_cn(rng, m).unwrap(),
            g_cu: rng.cn() * 2.0,
        };
        Instance::new(cs, PowerBudget::equal(4.0, 1.0).unwrap())
    }

    #[test]
    fn rank_one_input_is_recovered() {
        let mut rng = RngStream::new(11);
        let inst = instance(&mut rng, 5);
        let target: Vec<_> = (0..5).map(|k| unit(0.7 * k as f64 - 1.0)).collect();
        let mut bar = target.clone();
        bar.push(Complex64::new(1.0, 0.0));
        let psi = HermMatrix::outer(&bar);
        let rb = inst.breakdown(&PhaseVector::ones(5)).unwrap();
        let theta = to_phases(&bar);
        for (a, b) in theta.as_slice().iter().zip(&target) {
            assert!((a - b).norm() < 1e-12);
        }
        let c1 = |t: &PhaseVector| rb.with_phase1(inst.rho_u(t).unwrap(), inst.rho_c(t).unwrap()).c1(0.5).unwrap();
        let cfg = AOConfig { randomization_count: 5, ..AOConfig::default() };
        let out = gaussian_randomization(&psi, 0.5, &inst, &rb, &cfg, &mut rng).unwrap();
        assert!(c1(&out) >= c1(&theta));
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn single_element_matches_phase_sweep() {
        let mut rng = RngStream::new(12);
        let cfg = AOConfig::default();
        for _ in 0..10 {
            let inst = instance(&mut rng, 1);
            let rb = inst.breakdown(&PhaseVector::ones(1)).unwrap();
            let alpha = 0.3 + 0.6 * rng.uniform();
            let sweep = (0..100_000)
                .map(|k| {
                    let th = PhaseVector::from_phases(&[2.0 * PI * k as f64 / 100_000.0]);
                    rb.with_phase1(inst.rho_u(&th).unwrap(), inst.rho_c(&th).unwrap()).c1(alpha).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let casc = &inst.cascaded;
            let lm = build_lifted(inst.channels.h_au, &casc.q_u, inst.channels.h_ac, &casc.q_c).unwrap();
            let psi = bisection_p31(alpha, &lm, &rb, &inst.power, &cfg).unwrap().psi_star;
            let theta = gaussian_randomization(&psi, alpha, &inst, &rb, &cfg, &mut rng).unwrap();
            let got = rb
                .with_phase1(inst.rho_u(&theta).unwrap(), inst.rho_c(&theta).unwrap())
                .c1(alpha)
                .unwrap();
            assert!(got >= 0.999 * sweep, "{got} vs {sweep}");
        }
    }

    #[test]
    fn output_is_exactly_unit_modulus() {
        let mut rng = RngStream::new(13);
        let inst = instance(&mut rng, 8);
        let rb = inst.breakdown(&PhaseVector::ones(8)).unwrap();
        let psi = HermMatrix::identity(9);
        let theta = gaussian_randomization(&psi, 0.6, &inst, &rb, &AOConfig::default(), &mut rng).unwrap();
        for z in theta.as_slice() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let bad = gaussian_randomization(&HermMatrix::identity(4), 0.6, &inst, &rb, &AOConfig::default(), &mut rng);
        assert!(matches!(bad, Err(OptimizerError::DimensionMismatch { .. })));
    }
}
