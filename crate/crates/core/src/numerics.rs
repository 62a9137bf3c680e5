//! Dense complex linear algebra and seeded sampling.
//!
//! Everything here is sized for desk-scale problems (orders up to a few
//! hundred). Matrices are stored row-major.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Complex baseband scalar.
pub type CScalar = Complex64;

/// Complex vector. Length is fixed by whoever builds it.
pub type CVec = Vec<Complex64>;

/// Largest order accepted by [`herm_eig`].
pub const MAX_EIG_ORDER: usize = 4096;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian: entry ({row}, {col}) differs from its mirror by {deviation:e}")]
    NonHermitian { row: usize, col: usize, deviation: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("matrix is not positive semidefinite: pivot {index} is {pivot:e}")]
    NotPsd { index: usize, pivot: f64 },
    #[error("matrix order {0} is outside the supported range 1..={MAX_EIG_ORDER}")]
    BadOrder(usize),
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("cannot sample an empty vector")]
    EmptySample,
    #[error("shift must be non-negative, got {0}")]
    NegativeShift(f64),
}

/// Dense general complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVec {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = out.row_mut(i);
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> CVec {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self * self^H`, returned as a Hermitian matrix.
    pub fn gram_outer(&self) -> HermMatrix {
        let n = self.rows;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                let v: Complex64 = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .map(|(a, b)| a * b.conj())
                    .sum();
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
            data[i * n + i].im = 0.0;
        }
        HermMatrix { order: n, data }
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Dense Hermitian matrix.
///
/// Construction symmetrizes the input and zeroes the imaginary part of the
/// diagonal, so `entries[i][j] == conj(entries[j][i])` holds exactly
/// afterwards.
#[derive(Clone, PartialEq)]
pub struct HermMatrix {
    order: usize,
    data: Vec<Complex64>,
}

impl HermMatrix {
    /// Build from a row-major array. Rejects inputs whose mirror entries
    /// differ by more than `1e-12` (relative to the largest entry, floored
    /// at one).
    pub fn new(order: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if order == 0 {
            return Err(NumericsError::BadOrder(0));
        }
        if data.len() != order * order {
            return Err(NumericsError::ShapeMismatch {
                expected: order * order,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        let mut out = data;
        for i in 0..order {
            for j in i..order {
                let a = out[i * order + j];
                let b = out[j * order + i];
                let deviation = (a - b.conj()).norm();
                if deviation > tol {
                    return Err(NumericsError::NonHermitian { row: i, col: j, deviation });
                }
                let avg = (a + b.conj()) * 0.5;
                out[i * order + j] = avg;
                out[j * order + i] = avg.conj();
            }
            out[i * order + i].im = 0.0;
        }
        Ok(Self { order, data: out })
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self, NumericsError> {
        if m.rows != m.cols {
            return Err(NumericsError::ShapeMismatch {
                expected: m.rows * m.rows,
                got: m.rows * m.cols,
            });
        }
        Self::new(m.rows, m.data.clone())
    }

    pub fn identity(order: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); order * order];
        for i in 0..order {
            data[i * order + i] = Complex64::new(1.0, 0.0);
        }
        Self { order, data }
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, &v) in values.iter().enumerate() {
            data[i * n + i] = Complex64::new(v, 0.0);
        }
        Self { order: n, data }
    }

    /// `v v^H`.
    pub fn outer(v: &[Complex64]) -> Self {
        let n = v.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = v[i] * v[j].conj();
            }
            data[i * n + i].im = 0.0;
        }
        Self { order: n, data }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.order + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix {
            rows: self.order,
            cols: self.order,
            data: self.data.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.data[i * self.order + i].re).sum()
    }

    /// `x^H H x`, which is real for Hermitian `H`.
    pub fn quad_form(&self, x: &[Complex64]) -> f64 {
        assert_eq!(x.len(), self.order);
        let n = self.order;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let hx: Complex64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += x[i].conj() * hx;
        }
        acc.re
    }

    /// `tr(self * other)` for two Hermitian matrices of equal order.
    pub fn trace_product(&self, other: &HermMatrix) -> f64 {
        assert_eq!(self.order, other.order);
        let n = self.order;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.data[i * n + j] * other.data[j * n + i]).re;
            }
        }
        acc
    }

    /// Returns a copy with `shift` added to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.order {
            out.data[i * self.order + i].re += shift;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &HermMatrix) -> f64 {
        assert_eq!(self.order, other.order);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for HermMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermMatrix")
            .field("order", &self.order)
            .field("data", &self.to_matrix())
            .finish()
    }
}

/// Eigendecomposition `H = V diag(values) V^H` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// PSD test with a relative floor: every eigenvalue must be at least
    /// `-1e-9 * max|λ|`.
    pub fn is_psd(&self) -> bool {
        let floor = -1e-9 * self.max_abs_eigenvalue();
        self.values.iter().all(|&v| v >= floor)
    }

    /// Eigenvector of the largest eigenvalue.
    pub fn dominant_vector(&self) -> CVec {
        self.vectors.column(self.values.len() - 1)
    }

    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for i in 0..n {
            for (j, &lambda) in self.values.iter().enumerate() {
                scaled[(i, j)] *= lambda;
            }
        }
        scaled.matmul(&self.vectors.adjoint())
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn herm_eig(h: &HermMatrix) -> Result<HermEig, NumericsError> {
    let n = h.order;
    if n == 0 || n > MAX_EIG_ORDER {
        return Err(NumericsError::BadOrder(n));
    }
    let mut a = h.to_matrix();
    let mut v = CMatrix::identity(n);

    let frob: f64 = a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok(HermEig {
            values: vec![0.0; n],
            vectors: v,
        });
    }
    let tol = f64::EPSILON * frob;

    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)].norm_sqr();
            }
        }
        (2.0 * s).sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&a) > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericsError::NoConvergence {
                sweeps,
                off_norm: off_norm(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= f64::EPSILON * 1e-3 * frob {
                    continue;
                }
                let phase = apq / b;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Two-sided rotation G = diag(1, e^{-iφ}) * [[c, s], [-s, c]].
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph_conj = phase.conj();

                // Columns: A <- A G.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ph_conj * s;
                    a[(k, q)] = akp * s + akq * ph_conj * c;
                }
                // Rows: A <- G^H A.
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph_conj * s;
                    v[(k, q)] = vkp * s + vkq * ph_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(HermEig { values, vectors })
}

/// Cholesky factor `L` with `L L^H = H + shift I`.
///
/// Pivots in `[-1e-9, 0]` are treated as exact zeros (semidefinite input);
/// anything more negative is reported as [`NumericsError::NotPsd`].
pub fn cholesky_psd(h: &HermMatrix, shift: f64) -> Result<CMatrix, NumericsError> {
    if !(shift >= 0.0) {
        return Err(NumericsError::NegativeShift(shift));
    }
    let n = h.order;
    let a = h.shifted(shift);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -1e-9 {
            return Err(NumericsError::NotPsd { index: j, pivot: d });
        }
        if d <= 0.0 {
            // Zero pivot: the remainder of this column is zero for a PSD input.
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Seeded counter-based random stream.
///
/// A stream is identified by `(seed, stream)`; distinct stream ids under the
/// same seed are statistically independent, which is how Monte Carlo trials
/// get private substreams.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Fresh stream sharing this seed under a different stream id.
    pub fn substream(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// One CN(0, 1) draw.
    pub fn cn(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }
}

/// `n` i.i.d. circularly symmetric CN(0, 1) entries.
pub fn sample_cn(rng: &mut RngStream, n: usize) -> Result<CVec, NumericsError> {
    if n == 0 {
        return Err(NumericsError::EmptySample);
    }
    Ok((0..n).map(|_| rng.cn()).collect())
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn l1_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Phase of `z`, with the phase of zero defined as zero.
pub fn phase(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// `e^{j φ}`.
pub fn unit(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}
