use num_complex::Complex64;

use crate::numerics::{l1_norm, CScalar, CVec, HermMatrix};

use super::OptimizerError;

/// Lifted constraint matrices of the relaxed reflection subproblem.
///
/// `b_u = [[q_U q_U^H, h_AU q_U], [h_AU^* q_U^H, 0]]` and likewise for
/// `b_c`. Adding `|h|²` to the bottom-right corner turns each into the
/// rank-one matrix `a a^H` with `a = [q; h^*]`, so for `θ̄ = [θ; t]`
///
/// `θ̄^H B θ̄ + |h|² |t|² = |a^H θ̄|² = |h t + q^H θ|²`.
///
/// The solver works with the generators `a_u`, `a_c` directly.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrices {
    pub b_u: HermMatrix,
    pub b_c: HermMatrix,
    pub a_u: CVec,
    pub a_c: CVec,
    /// `|h_AU|²` and `|h_AC|²`.
    pub offset_u: f64,
    pub offset_c: f64,
}

impl LiftedMatrices {
    /// Order of the lifted problem, `M + 1`.
    pub fn order(&self) -> usize {
        self.a_u.len()
    }

    /// Upper bound on `|a_u^H θ̄|²` over unit-modulus θ̄, `(|h_AU| + ‖q_U‖₁)²`.
    pub fn max_gain_u(&self) -> f64 {
        l1_norm(&self.a_u).powi(2)
    }

    pub fn max_gain_c(&self) -> f64 {
        l1_norm(&self.a_c).powi(2)
    }
}

fn lift(h: CScalar, q: &[Complex64]) -> (HermMatrix, CVec) {
    let m = q.len();
    let n = m + 1;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..m {
        for j in 0..m {
            data[i * n + j] = q[i] * q[j].conj();
        }
        data[i * n + m] = h * q[i];
        data[m * n + i] = h.conj() * q[i].conj();
    }
    let b = HermMatrix::new(n, data).expect("lifted matrix is Hermitian by construction");
    let mut a = q.to_vec();
    a.push(h.conj());
    (b, a)
}

pub fn build_lifted(
    h_au: CScalar,
    q_u: &[Complex64],
    h_ac: CScalar,
    q_c: &[Complex64],
) -> Result<LiftedMatrices, OptimizerError> {
    if q_u.len() != q_c.len() {
        return Err(OptimizerError::DimensionMismatch {
            expected: q_u.len(),
            got: q_c.len(),
        });
    }
    let (b_u, a_u) = lift(h_au, q_u);
    let (b_c, a_c) = lift(h_ac, q_c);
    Ok(LiftedMatrices {
        b_u,
        b_c,
        a_u,
        a_c,
        offset_u: h_au.norm_sqr(),
        offset_c: h_ac.norm_sqr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{inner, sample_cn, unit, RngStream};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_element_hand_value() {
        let lm = build_lifted(c(1.0, 0.0), &[c(1.0, 0.0)], c(0.0, 0.0), &[c(0.0, 0.0)]).unwrap();
        let bar = [c(1.0, 0.0), c(1.0, 0.0)];
        let quad = lm.b_u.quad_form(&bar);
        assert!((quad - 3.0).abs() < 1e-15);
        assert!((quad + lm.offset_u - 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_direct_link_is_block_diagonal() {
        let mut rng = RngStream::new(2);
        let q = sample_cn(&mut rng, 3).unwrap();
        let lm = build_lifted(c(0.0, 0.0), &q, c(0.0, 0.0), &q).unwrap();
        for i in 0..4 {
            assert_eq!(lm.b_u.get(i, 3), c(0.0, 0.0));
            assert_eq!(lm.b_u.get(3, i), c(0.0, 0.0));
        }
        let theta: Vec<_> = (0..3).map(|k| unit(k as f64)).collect();
        let mut bar = theta.clone();
        bar.push(c(1.0, 0.0));
        assert!((lm.b_u.quad_form(&bar) - inner(&q, &theta).norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn identity_holds_on_random_points() {
        let mut rng = RngStream::new(4);
        let (h_u, h_c) = (rng.cn(), rng.cn());
        let q_u = sample_cn(&mut rng, 4).unwrap();
        let q_c = sample_cn(&mut rng, 4).unwrap();
        let lm = build_lifted(h_u, &q_u, h_c, &q_c).unwrap();
        for _ in 0..100 {
            let theta: Vec<_> = (0..4).map(|_| unit(rng.uniform() * 2.0 * PI)).collect();
            let mut bar = theta.clone();
            bar.push(c(1.0, 0.0));
            let lhs = lm.b_u.quad_form(&bar) + lm.offset_u;
            let rhs = (h_u + inner(&q_u, &theta)).norm_sqr();
            assert!((lhs - rhs).abs() < 1e-12);
            let lhs = lm.b_c.quad_form(&bar) + lm.offset_c;
            let rhs = (h_c + inner(&q_c, &theta)).norm_sqr();
            assert!((lhs - rhs).abs() < 1e-12);
            // generator form agrees with the dense form
            assert!((inner(&lm.a_u, &bar).norm_sqr() - (lm.b_u.quad_form(&bar) + lm.offset_u)).abs() < 1e-12);
        }
        let bad = build_lifted(h_u, &q_u, h_c, &q_c[..3]);
        assert!(matches!(bad, Err(OptimizerError::DimensionMismatch { .. })));
    }

    #[test]
    fn top_left_block_is_psd_and_corner_zero() {
        let mut rng = RngStream::new(6);
        let q = sample_cn(&mut rng, 5).unwrap();
        let lm = build_lifted(rng.cn(), &q, rng.cn(), &q).unwrap();
        assert_eq!(lm.b_u.get(5, 5), c(0.0, 0.0));
        let block: Vec<_> = (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).map(|(i, j)| lm.b_u.get(i, j)).collect();
        let eig = crate::numerics::herm_eig(&HermMatrix::new(5, block).unwrap()).unwrap();
        assert!(eig.is_psd());
    }
}
