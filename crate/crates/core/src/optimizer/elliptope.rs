//! Max-min of two lifted quadratic forms over the elliptope.
//!
//! The relaxed reflection subproblem asks whether some unit-diagonal PSD
//! `Ψ` satisfies `a_u^H Ψ a_u ≥ c_u` and `a_c^H Ψ a_c ≥ c_c`. We search
//! `Ψ = V V^H` with `V` of shape `(M+1) × r` and unit-norm rows, so the
//! diagonal and PSD constraints hold by construction. The objective is the
//! smaller of the two normalized constraint margins
//!
//! `g_i(V) = (‖V^H a_i‖² - c_i) / (‖a_i‖₁)²`,
//!
//! maximized by Riemannian gradient ascent on a log-sum-exp smoothing of the
//! min, with the smoothing temperature annealed geometrically. The
//! normalization divides each margin by its unit-modulus maximum, so a
//! margin is dimensionless and never exceeds one; it does not change which
//! targets are feasible.

use num_complex::Complex64;

use crate::numerics::{CMatrix, HermMatrix};
use crate::rate::{PhaseVector, PowerBudget, RateBreakdown};

use super::{AOConfig, LiftedMatrices, OptimizerError};

/// Result of [`elliptope_maxmin`].
#[derive(Debug, Clone)]
pub struct MaxMinResult {
    /// `(M+1) × r` factor with unit-norm rows.
    pub factor: CMatrix,
    /// Exact (unsmoothed) min of the normalized margins at `factor`.
    pub slack: f64,
    pub iterations: usize,
    /// False when no ascent step improved on the starting point; the start
    /// is then returned with its own slack.
    pub improved: bool,
}

/// Feasibility check at a fixed rate target.
#[derive(Debug, Clone)]
pub struct FeasResult {
    pub feasible: bool,
    /// Witness `Ψ = V V^H`: unit diagonal and PSD.
    pub psi: HermMatrix,
    pub factor: CMatrix,
    pub achieved_slack: f64,
}

struct Margins<'a> {
    a: [&'a [Complex64]; 2],
    c: [f64; 2],
    inv_norm: [f64; 2],
}

impl<'a> Margins<'a> {
    fn new(lm: &'a LiftedMatrices, c_u: f64, c_c: f64) -> Self {
        let inv = |g: f64| if g > 0.0 { 1.0 / g } else { 1.0 };
        Self {
            a: [&lm.a_u, &lm.a_c],
            c: [c_u, c_c],
            inv_norm: [inv(lm.max_gain_u()), inv(lm.max_gain_c())],
        }
    }

    /// Largest value each margin can take anywhere on the elliptope.
    fn upper_bounds(&self) -> [f64; 2] {
        let ub = |i: usize| {
            let max_gain = if self.inv_norm[i] == 1.0 && self.a[i].iter().all(|z| z.norm() == 0.0) {
                0.0
            } else {
                1.0 / self.inv_norm[i]
            };
            (max_gain - self.c[i]) * self.inv_norm[i]
        };
        [ub(0), ub(1)]
    }

    /// Margins and the projections `y_i = V^H a_i`.
    fn eval(&self, v: &CMatrix, ys: &mut [Vec<Complex64>; 2]) -> [f64; 2] {
        let r = v.cols();
        let mut g = [0.0; 2];
        for i in 0..2 {
            let y = &mut ys[i];
            y.clear();
            y.resize(r, Complex64::new(0.0, 0.0));
            for (k, &ak) in self.a[i].iter().enumerate() {
                if ak == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (yj, vkj) in y.iter_mut().zip(v.row(k)) {
                    *yj += vkj.conj() * ak;
                }
            }
            let power: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            g[i] = (power - self.c[i]) * self.inv_norm[i];
        }
        g
    }
}

/// `-τ ln(e^{-g0/τ} + e^{-g1/τ})` and the weight on `g0`.
fn soft_min(g: [f64; 2], tau: f64) -> (f64, f64) {
    let lo = g[0].min(g[1]);
    let gap = (g[0] - g[1]).abs() / tau;
    let value = lo - tau * (-gap).exp().ln_1p();
    // weight on g0 = 1 / (1 + e^{(g0 - g1)/τ})
    let z = (g[0] - g[1]) / tau;
    let w0 = if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    };
    (value, w0)
}

fn normalize_rows(v: &mut CMatrix) {
    for k in 0..v.rows() {
        let row = v.row_mut(k);
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for z in row.iter_mut() {
                *z /= norm;
            }
        } else {
            row[0] = Complex64::new(1.0, 0.0);
        }
    }
}

/// Tangent-space ascent direction of the smoothed min.
fn riemannian_gradient(
    margins: &Margins,
    v: &CMatrix,
    ys: &[Vec<Complex64>; 2],
    w0: f64,
    grad: &mut CMatrix,
) -> f64 {
    let weights = [w0 * 2.0 * margins.inv_norm[0], (1.0 - w0) * 2.0 * margins.inv_norm[1]];
    let mut norm2 = 0.0;
    for k in 0..v.rows() {
        let gk = grad.row_mut(k);
        for z in gk.iter_mut() {
            *z = Complex64::new(0.0, 0.0);
        }
        for i in 0..2 {
            let coef = margins.a[i][k] * weights[i];
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (gz, yj) in gk.iter_mut().zip(&ys[i]) {
                *gz += coef * yj.conj();
            }
        }
        let vk = v.row(k);
        let radial: f64 = vk.iter().zip(gk.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        for (gz, vz) in gk.iter_mut().zip(vk) {
            *gz -= vz * radial;
        }
        norm2 += gk.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    norm2
}

/// Deterministic start: an even mix of the two single-constraint maximizers
/// plus a small fixed perturbation in the remaining columns.
pub(crate) fn default_start(lm: &LiftedMatrices, rank: usize) -> CMatrix {
    let n = lm.order();
    let rank = rank.max(2);
    let tc = PhaseVector::project(&lm.a_c);
    let tu = PhaseVector::project(&lm.a_u);
    let mut v = CMatrix::zeros(n, rank);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..n {
        v[(k, 0)] = tc.as_slice()[k] * half;
        v[(k, 1)] = tu.as_slice()[k] * half;
        for j in 2..rank {
            let angle = 2.399_963_229_728_653 * ((k + 1) * (j + 3)) as f64;
            v[(k, j)] = Complex64::from_polar(0.1, angle);
        }
    }
    normalize_rows(&mut v);
    v
}

fn resize_start(start: &CMatrix, n: usize, rank: usize) -> Option<CMatrix> {
    if start.rows() != n {
        return None;
    }
    if start.cols() == rank {
        return Some(start.clone());
    }
    let mut v = CMatrix::zeros(n, rank);
    for k in 0..n {
        for j in 0..rank.min(start.cols()) {
            v[(k, j)] = start[(k, j)];
        }
    }
    normalize_rows(&mut v);
    Some(v)
}

pub(crate) fn maxmin_from(
    lm: &LiftedMatrices,
    c_u: f64,
    c_c: f64,
    cfg: &AOConfig,
    start: Option<&CMatrix>,
    stop_when_nonnegative: bool,
) -> MaxMinResult {
    let n = lm.order();
    let rank = cfg.rank_for(n - 1).max(2);
    let mut v = start
        .and_then(|s| resize_start(s, n, rank))
        .unwrap_or_else(|| default_start(lm, rank));

    let margins = Margins::new(lm, c_u, c_c);
    let mut ys = [Vec::new(), Vec::new()];
    let mut g = margins.eval(&v, &mut ys);
    let start_slack = g[0].min(g[1]);
    let mut best_slack = start_slack;
    let mut best_v = v.clone();

    let ub = margins.upper_bounds();
    let hopeless = ub[0].min(ub[1]) < -cfg.feasibility_slack_tol || !ub.iter().all(|u| u.is_finite());
    if (stop_when_nonnegative && (start_slack >= 0.0 || hopeless)) || !start_slack.is_finite() {
        return MaxMinResult {
            factor: v,
            slack: start_slack,
            iterations: 0,
            improved: false,
        };
    }

    let mut tau = cfg.bm_tau_start;
    let mut step = cfg.bm_step;
    let (mut f, mut w0) = soft_min(g, tau);
    let mut grad = CMatrix::zeros(n, rank);
    let mut cand = CMatrix::zeros(n, rank);
    let mut cand_ys = [Vec::new(), Vec::new()];
    let mut iterations = 0;

    while iterations < cfg.bm_max_iters {
        iterations += 1;
        let gnorm2 = riemannian_gradient(&margins, &v, &ys, w0, &mut grad);

        let mut stage_done = gnorm2 < 1e-24;
        if !stage_done {
            let mut accepted = false;
            for _ in 0..40 {
                for k in 0..n {
                    let (vr, gr) = (v.row(k), grad.row(k));
                    for ((c, a), b) in cand.row_mut(k).iter_mut().zip(vr).zip(gr) {
                        *c = a + b * step;
                    }
                }
                normalize_rows(&mut cand);
                let cg = margins.eval(&cand, &mut cand_ys);
                let (cf, cw) = soft_min(cg, tau);
                if cf >= f + 1e-4 * step * gnorm2 {
                    let gain = cf - f;
                    std::mem::swap(&mut v, &mut cand);
                    std::mem::swap(&mut ys, &mut cand_ys);
                    g = cg;
                    f = cf;
                    w0 = cw;
                    accepted = true;
                    step = (step * 2.0).min(1e6);
                    let floor = if tau > cfg.bm_tau_min { 1e-4 * tau } else { 1e-12 };
                    stage_done = gain < floor;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                stage_done = true;
                step = cfg.bm_step;
            }
        }

        let slack = g[0].min(g[1]);
        if slack > best_slack {
            best_slack = slack;
            best_v.clone_from(&v);
        }
        if stop_when_nonnegative && best_slack >= 0.0 {
            break;
        }
        if stage_done {
            if tau <= cfg.bm_tau_min {
                break;
            }
            tau = (tau * cfg.bm_tau_decay).max(cfg.bm_tau_min);
            let (nf, nw) = soft_min(g, tau);
            f = nf;
            w0 = nw;
        }
    }

    MaxMinResult {
        factor: best_v,
        slack: best_slack,
        iterations,
        improved: best_slack > start_slack,
    }
}

/// Locally maximizes the smaller normalized margin over the factored
/// elliptope, starting from [`default_start`].
pub fn elliptope_maxmin(lm: &LiftedMatrices, c_u: f64, c_c: f64, cfg: &AOConfig) -> MaxMinResult {
    maxmin_from(lm, c_u, c_c, cfg, None, false)
}

/// Right-hand sides of the two lifted constraints at rate target `delta`:
/// `c_U = σ²/P_A (2^{δ/α - (1-α)/α R̃_U⋆} - 1)` and `c_C = σ²/P_A (2^{δ/α} - 1)`.
pub fn p32_thresholds(delta: f64, alpha: f64, r_u_tilde_star: f64, pb: &PowerBudget) -> (f64, f64) {
    let scale = pb.sigma2 / pb.p_a;
    let c_u = scale * ((delta / alpha - (1.0 - alpha) / alpha * r_u_tilde_star).exp2() - 1.0);
    let c_c = scale * ((delta / alpha).exp2() - 1.0);
    (c_u, c_c)
}

pub fn sdp_feasible(
    delta: f64,
    alpha: f64,
    lm: &LiftedMatrices,
    rb: &RateBreakdown,
    pb: &PowerBudget,
    cfg: &AOConfig,
) -> Result<FeasResult, OptimizerError> {
    sdp_feasible_from(delta, alpha, lm, rb, pb, cfg, None)
}

/// [`sdp_feasible`] with a warm-start factor.
pub fn sdp_feasible_from(
    delta: f64,
    alpha: f64,
    lm: &LiftedMatrices,
    rb: &RateBreakdown,
    pb: &PowerBudget,
    cfg: &AOConfig,
    start: Option<&CMatrix>,
) -> Result<FeasResult, OptimizerError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(OptimizerError::AlphaOutOfRange(alpha));
    }
    if !(delta >= 0.0) {
        return Err(OptimizerError::PreconditionViolated(format!(
            "rate target {delta} must be non-negative"
        )));
    }
    let (c_u, c_c) = p32_thresholds(delta, alpha, rb.r_u_tilde_star, pb);
    let res = maxmin_from(lm, c_u, c_c, cfg, start, true);
    Ok(FeasResult {
        feasible: res.slack >= -cfg.feasibility_slack_tol,
        psi: res.factor.gram_outer(),
        factor: res.factor,
        achieved_slack: res.slack,
    })
}
