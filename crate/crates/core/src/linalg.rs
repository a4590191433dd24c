//! Minimal dense linear algebra: row-major matrices, a regularized
//! least-squares solve, power-iteration spectral radius estimation, and the
//! finite-horizon Riccati recursion used for terminal costs and test oracles.
//!
//! Solves go through a Cholesky factorization; an explicit-inverse path
//! exists only inside test oracles.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error(
        "{op}: dimension mismatch, lhs is {lhs_rows}x{lhs_cols}, rhs is {rhs_rows}x{rhs_cols}"
    )]
    DimensionMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },
    #[error("{op}: matrix must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix dimensions must be at least 1x1")]
    Empty,
    #[error("{op}: non-finite value encountered")]
    NonFinite { op: &'static str },
    #[error("{op}: matrix is singular or not positive definite")]
    NotPositiveDefinite { op: &'static str },
    #[error("regularizer must be non-negative, got {beta}")]
    NegativeRegularizer { beta: f64 },
}

/// Dense row-major matrix of f64: `data[r * cols + c]` holds entry (r, c).
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "at least one row required");
        let cols = rows[0].len();
        assert!(cols > 0, "at least one column required");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Square matrix with the given diagonal.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Mat::zeros(entries.len(), entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Single-column matrix from a slice.
    pub fn column(v: &[f64]) -> Self {
        Mat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn scale(&self, factor: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, rhs: &Mat) -> Result<Mat, LinalgError> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Mat) -> Result<Mat, LinalgError> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    fn zip_with(
        &self,
        rhs: &Mat,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Mat, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch {
                op,
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Standard matrix product.
    pub fn matmul(&self, rhs: &Mat) -> Result<Mat, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: rhs.rows,
                rhs_cols: rhs.cols,
            });
        }
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in lhs_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if self.cols != v.len() {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                lhs_rows: self.rows,
                lhs_cols: self.cols,
                rhs_rows: v.len(),
                rhs_cols: 1,
            });
        }
        let out = self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm of the difference; errors on shape mismatch.
    pub fn max_abs_diff(&self, rhs: &Mat) -> Result<f64, LinalgError> {
        Ok(self.sub(rhs)?.max_abs())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    fn symmetrized(&self) -> Mat {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in 0..r {
                let avg = 0.5 * (self[(r, c)] + self[(c, r)]);
                out[(r, c)] = avg;
                out[(c, r)] = avg;
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
fn cholesky(g: &Mat, op: &'static str) -> Result<Mat, LinalgError> {
    if !g.is_square() {
        return Err(LinalgError::NotSquare {
            op,
            rows: g.rows,
            cols: g.cols,
        });
    }
    let n = g.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { op });
                }
                l[(i, i)] = libm::sqrt(sum);
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves G X = RHS for symmetric positive definite G via Cholesky.
pub fn solve_spd(g: &Mat, rhs: &Mat, op: &'static str) -> Result<Mat, LinalgError> {
    if g.rows != rhs.rows {
        return Err(LinalgError::DimensionMismatch {
            op,
            lhs_rows: g.rows,
            lhs_cols: g.cols,
            rhs_rows: rhs.rows,
            rhs_cols: rhs.cols,
        });
    }
    let l = cholesky(g, op)?;
    let n = g.rows;
    let m = rhs.cols;
    let mut x = rhs.clone();
    // forward: L y = rhs
    for col in 0..m {
        for i in 0..n {
            let mut sum = x[(i, col)];
            for k in 0..i {
                sum -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = sum / l[(i, i)];
        }
    }
    // backward: L^T x = y
    for col in 0..m {
        for i in (0..n).rev() {
            let mut sum = x[(i, col)];
            for k in (i + 1)..n {
                sum -= l[(k, i)] * x[(k, col)];
            }
            x[(i, col)] = sum / l[(i, i)];
        }
    }
    Ok(x)
}

/// Regularized least-squares readout solve.
///
/// For regressor columns S (d x T) and targets Y (n x T) returns
/// W = Y S^T (S S^T + beta I)^(-1) of shape (n x d), computed through a
/// Cholesky factorization of the regularized normal matrix.
pub fn ridge_solve(s_matrix: &Mat, y_matrix: &Mat, beta: f64) -> Result<Mat, LinalgError> {
    if beta < 0.0 || !beta.is_finite() {
        return Err(LinalgError::NegativeRegularizer { beta });
    }
    if s_matrix.cols != y_matrix.cols {
        return Err(LinalgError::DimensionMismatch {
            op: "ridge_solve",
            lhs_rows: s_matrix.rows,
            lhs_cols: s_matrix.cols,
            rhs_rows: y_matrix.rows,
            rhs_cols: y_matrix.cols,
        });
    }
    if !s_matrix.is_finite() || !y_matrix.is_finite() {
        return Err(LinalgError::NonFinite { op: "ridge_solve" });
    }
    let d = s_matrix.rows;
    // G = S S^T + beta I, exploiting symmetry.
    let mut g = Mat::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let mut acc = 0.0;
            let ri = &s_matrix.data[i * s_matrix.cols..(i + 1) * s_matrix.cols];
            let rj = &s_matrix.data[j * s_matrix.cols..(j + 1) * s_matrix.cols];
            for (a, b) in ri.iter().zip(rj) {
                acc += a * b;
            }
            g[(i, j)] = acc;
            g[(j, i)] = acc;
        }
        g[(i, i)] += beta;
    }
    let rhs = s_matrix.matmul(&y_matrix.transpose())?; // d x n
    let x = solve_spd(&g, &rhs, "ridge_solve")?;
    Ok(x.transpose())
}

/// Power-iteration estimate of the dominant eigenvalue magnitude.
#[derive(Clone, Copy, Debug)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Operator form of the spectral radius estimate: `apply` writes A*v into the
/// output slice. Tracks the last two iterates and fits the dominant 2x2
/// characteristic polynomial, so complex-conjugate dominant pairs converge as
/// well as real ones.
pub fn spectral_radius_op(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    max_iters: usize,
    tol: f64,
) -> SpectralEstimate {
    let mut rng = crate::rng::Rng::new(0x9D5F_31C2_A07B_4E11);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    normalize(&mut v);
    let mut prev: Option<(Vec<f64>, f64)> = None; // (previous unit iterate, ||A u||)
    let mut w = vec![0.0; dim];
    let mut rho_prev = f64::NAN;

    for iter in 1..=max_iters {
        apply(&v, &mut w);
        let norm_w = norm(&w);
        if !norm_w.is_finite() {
            return SpectralEstimate {
                value: f64::NAN,
                converged: false,
                iterations: iter,
            };
        }
        if norm_w < 1e-300 {
            return SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: iter,
            };
        }
        let rayleigh = dot(&v, &w);
        // residual of the rank-1 fit w ~ rayleigh * v
        let mut res = 0.0;
        for i in 0..dim {
            let d = w[i] - rayleigh * v[i];
            res += d * d;
        }
        let res = libm::sqrt(res);
        let mut rho = rayleigh.abs();
        if res <= 1e-13 * norm_w {
            // v is numerically an eigenvector
            return SpectralEstimate {
                value: rho,
                converged: true,
                iterations: iter,
            };
        }
        if let Some((u, scale)) = &prev {
            // fit w ~ a*v + b*u; the dominant pair satisfies m^2 = a*m + b*scale
            let c = dot(&v, u);
            let det = 1.0 - c * c;
            if det > 1e-12 {
                let vw = dot(&v, &w);
                let uw = dot(u, &w);
                let a = (vw - c * uw) / det;
                let b = (uw - c * vw) / det;
                let beta = b * scale;
                let disc = a * a + 4.0 * beta;
                rho = if disc >= 0.0 {
                    let sq = libm::sqrt(disc);
                    (0.5 * (a + sq)).abs().max((0.5 * (a - sq)).abs())
                } else {
                    libm::sqrt(-beta)
                };
            }
        }
        if (rho - rho_prev).abs() < tol * rho.abs().max(1.0) {
            return SpectralEstimate {
                value: rho,
                converged: true,
                iterations: iter,
            };
        }
        rho_prev = rho;
        let mut next = w.clone();
        for x in next.iter_mut() {
            *x /= norm_w;
        }
        prev = Some((core::mem::replace(&mut v, next), norm_w));
    }
    SpectralEstimate {
        value: rho_prev,
        converged: false,
        iterations: max_iters,
    }
}

/// Spectral radius of a square dense matrix.
pub fn spectral_radius(
    m: &Mat,
    max_iters: usize,
    tol: f64,
) -> Result<SpectralEstimate, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            op: "spectral_radius",
            rows: m.rows,
            cols: m.cols,
        });
    }
    Ok(spectral_radius_op(
        m.rows,
        |v, out| {
            for (row, slot) in m.data.chunks_exact(m.cols).zip(out.iter_mut()) {
                *slot = row.iter().zip(v).map(|(a, b)| a * b).sum();
            }
        },
        max_iters,
        tol,
    ))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

/// Convergence threshold of the Riccati backward recursion.
const RICCATI_TOL: f64 = 1e-10;

/// Iterates the discrete Riccati backward recursion from P = Q for `iters`
/// steps or until successive iterates differ by less than 1e-10 in max-norm.
/// The result is explicitly symmetrized each step.
pub fn riccati_recursion(
    a: &Mat,
    b: &Mat,
    q: &Mat,
    r: &Mat,
    iters: usize,
) -> Result<Mat, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            op: "riccati_recursion",
            rows: a.rows,
            cols: a.cols,
        });
    }
    if b.rows != a.rows || q.rows != a.rows || !q.is_square() || r.rows != b.cols || !r.is_square()
    {
        return Err(LinalgError::DimensionMismatch {
            op: "riccati_recursion",
            lhs_rows: a.rows,
            lhs_cols: a.cols,
            rhs_rows: b.rows,
            rhs_cols: b.cols,
        });
    }
    let a_t = a.transpose();
    let mut p = q.symmetrized();
    for _ in 0..iters {
        let next = riccati_map(&a_t, a, b, q, r, &p)?;
        if !next.is_finite() {
            return Err(LinalgError::NonFinite {
                op: "riccati_recursion",
            });
        }
        let diff = next.max_abs_diff(&p)?;
        p = next;
        if diff < RICCATI_TOL {
            break;
        }
    }
    Ok(p)
}

fn riccati_map(a_t: &Mat, a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<Mat, LinalgError> {
    let pb = p.matmul(b)?;
    let g = r.add(&b.transpose().matmul(&pb)?)?.symmetrized();
    let bt_pa = b.transpose().matmul(&p.matmul(a)?)?;
    let k = solve_spd(&g, &bt_pa, "riccati_recursion")?;
    let next = a_t
        .matmul(&p.matmul(a)?)?
        .sub(&bt_pa.transpose().matmul(&k)?)?
        .add(q)?;
    Ok(next.symmetrized())
}

/// LQR feedback gain K = (R + B'PB)^(-1) B'PA for a given cost-to-go P.
pub fn lqr_gain(a: &Mat, b: &Mat, r: &Mat, p: &Mat) -> Result<Mat, LinalgError> {
    let g = r.add(&b.transpose().matmul(&p.matmul(b)?)?)?.symmetrized();
    let bt_pa = b.transpose().matmul(&p.matmul(a)?)?;
    solve_spd(&g, &bt_pa, "lqr_gain")
}

/// Max-norm of the discrete algebraic Riccati equation residual at P.
pub fn dare_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, p: &Mat) -> Result<f64, LinalgError> {
    let mapped = riccati_map(&a.transpose(), a, b, q, r, p)?;
    mapped.max_abs_diff(p)
}
