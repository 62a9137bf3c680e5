//! Self-check suites run by the `verify` and `oracle-check` commands.
//!
//! Each suite draws its own random instances from a seeded stream and
//! reports how many cases met the property. Failures are counted, never
//! raised.

use std::f64::consts::PI;

use serde::Serialize;

use crate::channel::ChannelSet;
use crate::numerics::{inner, unit, RngStream};
use crate::optimizer::{
    ao_solve, bisection_p31, brute_force_p1, build_lifted, check_prop1, check_prop2, optimal_alpha, AOConfig,
    Mode,
};
use crate::rate::{align_phases, rate_c1, Instance, PhaseVector, PowerBudget};

/// Fraction of instances that must reach [`ORACLE_RATIO`] of brute force.
pub const ORACLE_PASS_FRACTION: f64 = 0.95;
pub const ORACLE_RATIO: f64 = 0.95;
/// Allowed shortfall of the bisection target below the rank-one phase-grid
/// optimum (bps/Hz).
pub const BISECTION_ORACLE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    pub ok: bool,
    pub detail: String,
}

impl SuiteReport {
    fn all(name: &'static str, passed: usize, total: usize, detail: String) -> Self {
        Self {
            name,
            passed,
            total,
            ok: passed == total,
            detail,
        }
    }
}

/// Random instance with link strengths spread over two decades, so that
/// both relaying and conventional regimes occur.
pub fn random_instance(rng: &mut RngStream, m: usize) -> Instance {
    let scale = |rng: &mut RngStream| 10f64.powf(2.0 * rng.uniform() - 1.0);
    let (s_au, s_ac, s_cu) = (scale(rng), scale(rng), scale(rng));
    let (s_ai, s_ic, s_iu) = (scale(rng), scale(rng), scale(rng));
    let cs = ChannelSet {
        h_au: rng.cn() * s_au,
        h_ai: (0..m).map(|_| rng.cn() * s_ai).collect(),
        h_ac: rng.cn() * s_ac,
        h_ic: (0..m).map(|_| rng.cn() * s_ic).collect(),
        g_iu: (0..m).map(|_| rng.cn() * s_iu).collect(),
        g_cu: rng.cn() * s_cu,
    };
    Instance::new(cs, PowerBudget::equal(4.0, 1.0).expect("positive power"))
}

fn phase_grid_c1(instance: &Instance, alpha: f64, points: usize) -> f64 {
    let rb = instance.breakdown(&instance.theta_user_star()).expect("valid instance");
    let m = instance.num_elements();
    let mut idx = vec![0usize; m];
    let mut best = f64::NEG_INFINITY;
    loop {
        let phases: Vec<f64> = idx.iter().map(|&k| 2.0 * PI * k as f64 / points as f64).collect();
        let th = PhaseVector::from_phases(&phases);
        let rho_u = instance.rho_u(&th).expect("matching sizes");
        let rho_c = instance.rho_c(&th).expect("matching sizes");
        best = best.max(rb.with_phase1(rho_u, rho_c).c1(alpha).expect("alpha in range"));
        let mut pos = 0;
        while pos < m {
            idx[pos] += 1;
            if idx[pos] < points {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == m {
            return best;
        }
    }
}

/// AO against exhaustive search at `m` elements, plus the bisection target
/// against the fixed-α phase grid.
pub fn oracle_suite(solver: &AOConfig, seed: u64, m: usize, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 1);
    let (grid, alpha_grid) = match m {
        0..=2 => (64, 1001),
        3 => (16, 201),
        _ => (8, 101),
    };
    let mut close = 0;
    let mut bisection_ok = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let inst = random_instance(&mut rng, m);
        let brute = brute_force_p1(&inst, grid, alpha_grid).expect("small instance");
        let sol = match ao_solve(&inst, solver, &mut rng) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let ratio = if brute.rate > 0.0 { sol.rate / brute.rate } else { 1.0 };
        worst = worst.min(ratio);
        if ratio >= ORACLE_RATIO {
            close += 1;
        }
        let casc = &inst.cascaded;
        let lm = build_lifted(inst.channels.h_au, &casc.q_u, inst.channels.h_ac, &casc.q_c).expect("sizes");
        let rb = inst.breakdown(&inst.theta_user_star()).expect("sizes");
        let reference = phase_grid_c1(&inst, 0.5, grid);
        if let Ok(b) = bisection_p31(0.5, &lm, &rb, &inst.power, solver) {
            if b.delta_star >= reference - BISECTION_ORACLE_TOL {
                bisection_ok += 1;
            }
        }
    }
    let need = (ORACLE_PASS_FRACTION * count as f64).ceil() as usize;
    SuiteReport {
        name: "oracle",
        passed: close.min(bisection_ok),
        total: count,
        ok: close >= need && bisection_ok == count,
        detail: format!(
            "{close}/{count} within {ORACLE_RATIO} of brute force (need {need}), worst ratio {worst:.4}; \
             bisection matches grid in {bisection_ok}/{count}"
        ),
    }
}

pub fn prop1_suite(solver: &AOConfig, seed: u64, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 2);
    let (mut passed, mut total) = (0, 0);
    while total < count {
        let m = 1 + (rng.uniform() * 8.0) as usize;
        let inst = random_instance(&mut rng, m);
        let rb = inst.breakdown(&inst.theta_user_star()).expect("sizes");
        if !check_prop1(&rb) {
            continue;
        }
        total += 1;
        if let Ok(sol) = ao_solve(&inst, solver, &mut rng) {
            if sol.rate <= rb.c2_star + 1e-9 {
                passed += 1;
            }
        }
    }
    SuiteReport::all("prop1", passed, total, "relaying never beats the conventional rate".into())
}

pub fn prop2_suite(solver: &AOConfig, seed: u64, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 3);
    let (mut passed, mut total) = (0, 0);
    while total < count {
        let m = 1 + (rng.uniform() * 8.0) as usize;
        let inst = random_instance(&mut rng, m);
        let rb = inst.breakdown(&inst.theta_controller_star()).expect("sizes");
        if !check_prop2(&rb) {
            continue;
        }
        total += 1;
        if let Ok(sol) = ao_solve(&inst, solver, &mut rng) {
            if sol.rate > rb.c2_star && sol.mode == Mode::Relaying {
                passed += 1;
            }
        }
    }
    SuiteReport::all("prop2", passed, total, "relaying strictly beats the conventional rate".into())
}

pub fn prop3_suite(seed: u64, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 4);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let r_u = 4.0 * rng.uniform();
        let r_c = r_u + 1e-3 + 6.0 * rng.uniform();
        let r_t = r_u + 1e-3 + 6.0 * rng.uniform();
        let a = optimal_alpha(r_u, r_c, r_t).expect("preconditions hold by construction");
        let best = rate_c1(r_u, r_c, r_t, a).expect("alpha in range");
        let grid = (0..=10_000)
            .map(|i| rate_c1(r_u, r_c, r_t, i as f64 / 10_000.0).expect("alpha in range"))
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(grid - best);
        if grid <= best + 1e-3 {
            passed += 1;
        }
    }
    SuiteReport::all("prop3", passed, count, format!("largest grid excess {worst:.2e}"))
}

pub fn ao_contract_suite(solver: &AOConfig, seed: u64, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 5);
    let (mut passed, mut total) = (0, 0);
    let mut attempts = 0;
    while total < count && attempts < 50 * count {
        attempts += 1;
        let m = 2 + (rng.uniform() * 10.0) as usize;
        let inst = random_instance(&mut rng, m);
        let Ok(sol) = ao_solve(&inst, solver, &mut rng) else {
            continue;
        };
        if sol.mode != Mode::Relaying {
            continue;
        }
        total += 1;
        let rb = inst.breakdown(&sol.theta1).expect("sizes");
        let bound = rb.r_u_tilde_star.min(rb.r_c_star()) + 1e-9;
        let monotone = sol.rate_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        let bounded = sol.rate_trace.iter().all(|&r| r <= bound);
        if monotone && bounded {
            passed += 1;
        }
    }
    SuiteReport::all("ao_contract", passed, total, "trace non-decreasing and bounded".into())
}

pub fn closed_form_suite(seed: u64, instances: usize, draws: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 6);
    let mut violations = 0;
    for _ in 0..instances {
        let m = 1 + (rng.uniform() * 16.0) as usize;
        let h = rng.cn();
        let q: Vec<_> = (0..m).map(|_| rng.cn()).collect();
        let best = (h + inner(&q, align_phases(h, &q).as_slice())).norm_sqr();
        for _ in 0..draws {
            let th: Vec<_> = (0..m).map(|_| unit(2.0 * PI * rng.uniform())).collect();
            if (h + inner(&q, &th)).norm_sqr() > best * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    SuiteReport {
        name: "closed_form",
        passed: instances * draws - violations,
        total: instances * draws,
        ok: violations == 0,
        detail: format!("{violations} random vectors beat the aligned phases"),
    }
}

pub fn lifting_suite(seed: u64, count: usize) -> SuiteReport {
    let mut rng = RngStream::with_stream(seed, 7);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let m = 1 + (rng.uniform() * 12.0) as usize;
        let (h_u, h_c) = (rng.cn(), rng.cn());
        let q_u: Vec<_> = (0..m).map(|_| rng.cn()).collect();
        let q_c: Vec<_> = (0..m).map(|_| rng.cn()).collect();
        let lm = build_lifted(h_u, &q_u, h_c, &q_c).expect("same sizes");
        let th: Vec<_> = (0..m).map(|_| unit(2.0 * PI * rng.uniform())).collect();
        let mut bar = th.clone();
        bar.push(unit(0.0));
        let err = (lm.b_u.quad_form(&bar) + lm.offset_u - (h_u + inner(&q_u, &th)).norm_sqr())
            .abs()
            .max((lm.b_c.quad_form(&bar) + lm.offset_c - (h_c + inner(&q_c, &th)).norm_sqr()).abs());
        worst = worst.max(err);
        if err <= 1e-12 {
            passed += 1;
        }
    }
    SuiteReport::all("lifting", passed, count, format!("largest error {worst:.2e}"))
}

/// Every suite at CLI-friendly sizes.
pub fn run_all(solver: &AOConfig, seed: u64) -> Vec<SuiteReport> {
    vec![
        oracle_suite(solver, seed, 2, 40),
        prop1_suite(solver, seed, 200),
        prop2_suite(solver, seed, 100),
        prop3_suite(seed, 200),
        ao_contract_suite(solver, seed, 40),
        closed_form_suite(seed, 100, 1000),
        lifting_suite(seed, 1000),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_suites_pass() {
        for r in [prop3_suite(1, 50), closed_form_suite(1, 20, 200), lifting_suite(1, 100)] {
            assert!(r.ok, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn solver_suites_pass_small() {
        let solver = AOConfig::default();
        for r in [
            oracle_suite(&solver, 3, 2, 8),
            prop1_suite(&solver, 3, 20),
            prop2_suite(&solver, 3, 10),
            ao_contract_suite(&solver, 3, 5),
        ] {
            assert!(r.ok, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn coarse_bisection_fails_the_oracle() {
        let solver = AOConfig {
            bisection_eps: 10.0,
            ..AOConfig::default()
        };
        let r = oracle_suite(&solver, 3, 2, 4);
        assert!(!r.ok, "{}", r.detail);
    }
}
