//! Thin dense linear-algebra layer over `faer`.
//!
//! Everything in the crate goes through these helpers so that the choice of
//! backend stays in one place.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Par};

use crate::error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = Mat<f64>;
/// Dense complex matrix.
pub type CMatrix = Mat<c64>;

/// Builds a matrix from row slices. All rows must have `ncols` entries.
pub fn from_rows(nrows: usize, ncols: usize, rows: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Returns the rows of `m` as owned vectors.
pub fn to_rows(m: MatRef<'_, f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn is_finite(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].is_finite()))
}

pub fn is_zero(m: MatRef<'_, f64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)] == 0.0))
}

pub fn to_complex(m: MatRef<'_, f64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Real matrix product that tolerates empty inner dimensions.
pub fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Matrix {
    debug_assert_eq!(a.ncols(), b.nrows());
    if a.ncols() == 0 {
        return Matrix::zeros(a.nrows(), b.ncols());
    }
    a * b
}

pub fn cmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    debug_assert_eq!(a.ncols(), b.nrows());
    if a.ncols() == 0 {
        return CMatrix::zeros(a.nrows(), b.ncols());
    }
    a * b
}

/// Inverse of a small square matrix, or `None` when it is numerically singular.
pub fn inverse(a: MatRef<'_, f64>) -> Option<Matrix> {
    let n = a.nrows();
    if n == 0 {
        return Some(Matrix::zeros(0, 0));
    }
    let lu = a.full_piv_lu();
    let inv = lu.solve(Matrix::identity(n, n));
    is_finite(inv.as_ref()).then_some(inv)
}

/// Largest singular value of a real matrix (0 for empty matrices).
pub fn sigma_max(a: MatRef<'_, f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a.singular_values().map_err(|_| Error::SvdFailure)?;
    Ok(s[0])
}

/// Largest singular value of a complex matrix (0 for empty matrices).
pub fn csigma_max(a: MatRef<'_, c64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let s = a.singular_values().map_err(|_| Error::SvdFailure)?;
    Ok(s[0])
}

/// Leading singular triplet `(sigma_1, u, v, sigma_2)` of a complex matrix,
/// with `u^H A v = sigma_1`. `sigma_2` is 0 when there is no second value.
pub fn top_singular_triplet(a: MatRef<'_, c64>) -> Result<(f64, Vec<c64>, Vec<c64>, f64)> {
    let svd = a.thin_svd().map_err(|_| Error::SvdFailure)?;
    let s = svd.S().column_vector();
    let s1 = s[0].re;
    let s2 = if s.nrows() > 1 { s[1].re } else { 0.0 };
    let u = (0..a.nrows()).map(|i| svd.U()[(i, 0)]).collect();
    let v = (0..a.ncols()).map(|i| svd.V()[(i, 0)]).collect();
    Ok((s1, u, v, s2))
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues().map_err(|_| Error::EigenFailure)
}

/// Finite eigenvalues of the real pencil `A - lambda B`. Pairs with a
/// vanishing `B` coefficient (infinite eigenvalues) are dropped.
pub fn generalized_eigenvalues(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let gevd = a.generalized_eigen(b).map_err(|_| Error::EigenFailure)?;
    let (alpha, beta) = (gevd.S_a(), gevd.S_b());
    let scale = a.norm_max().max(b.norm_max()).max(f64::MIN_POSITIVE);
    let mut out = Vec::new();
    for k in 0..a.nrows() {
        let (num, den) = (alpha[k], beta[k]);
        if den.norm() > 1e3 * f64::EPSILON * num.norm().max(scale) {
            out.push(num / den);
        }
    }
    Ok(out)
}

/// Full eigendecomposition of a real matrix with right and left eigenvectors.
///
/// Column `k` of `right` satisfies `A x = λ_k x`; column `k` of `left`
/// satisfies `y^H A = λ_k y^H`.
pub struct EigenDecomposition {
    pub values: Vec<c64>,
    pub right: CMatrix,
    pub left: CMatrix,
}

pub fn eigen_left_right(a: MatRef<'_, f64>) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: Vec::new(),
            right: CMatrix::zeros(0, 0),
            left: CMatrix::zeros(0, 0),
        });
    }
    if !is_finite(a) {
        return Err(Error::EigenFailure);
    }
    let par = Par::Seq;
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let mut ul = Matrix::zeros(n, n);
    let mut ur = Matrix::zeros(n, n);
    let scratch = evd::evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    );
    evd::evd_real(
        a,
        s_re.as_mut(),
        s_im.as_mut(),
        Some(ul.as_mut()),
        Some(ur.as_mut()),
        par,
        MemStack::new(&mut MemBuffer::new(scratch)),
        Default::default(),
    )
    .map_err(|_| Error::EigenFailure)?;

    let s_re = s_re.column_vector();
    let s_im = s_im.column_vector();
    let mut values = vec![c64::new(0.0, 0.0); n];
    let mut right = CMatrix::zeros(n, n);
    let mut left = CMatrix::zeros(n, n);
    let mut j = 0;
    while j < n {
        if s_im[j] == 0.0 || j + 1 == n {
            values[j] = c64::new(s_re[j], 0.0);
            for i in 0..n {
                right[(i, j)] = c64::new(ur[(i, j)], 0.0);
                left[(i, j)] = c64::new(ul[(i, j)], 0.0);
            }
            j += 1;
        } else {
            values[j] = c64::new(s_re[j], s_im[j]);
            values[j + 1] = c64::new(s_re[j], -s_im[j]);
            for i in 0..n {
                right[(i, j)] = c64::new(ur[(i, j)], ur[(i, j + 1)]);
                right[(i, j + 1)] = c64::new(ur[(i, j)], -ur[(i, j + 1)]);
                left[(i, j)] = c64::new(ul[(i, j)], ul[(i, j + 1)]);
                left[(i, j + 1)] = c64::new(ul[(i, j)], -ul[(i, j + 1)]);
            }
            j += 2;
        }
    }
    Ok(EigenDecomposition { values, right, left })
}

/// LU factorization of `s I - A` for repeated resolvent solves at one point.
pub struct Resolvent {
    lu: faer::linalg::solvers::PartialPivLu<c64>,
    n: usize,
}

/// Reciprocal pivot growth below which `sI - A` is treated as singular.
const RESOLVENT_PIVOT_TOL: f64 = 1e-14;

impl Resolvent {
    pub fn new(a: MatRef<'_, f64>, s: c64) -> Result<Self> {
        let n = a.nrows();
        let m = CMatrix::from_fn(n, n, |i, j| {
            let d = if i == j { s } else { c64::new(0.0, 0.0) };
            d - c64::new(a[(i, j)], 0.0)
        });
        let lu = m.partial_piv_lu();
        if n > 0 {
            let u = lu.U();
            let mut max = 0.0f64;
            let mut min = f64::INFINITY;
            for k in 0..n {
                let d = u[(k, k)].norm();
                max = max.max(d);
                min = min.min(d);
            }
            let scale = max.max(s.norm());
            if !(min > RESOLVENT_PIVOT_TOL * scale) || !min.is_finite() {
                return Err(Error::SingularResolvent);
            }
        }
        Ok(Self { lu, n })
    }

    /// Solves `(sI - A) X = rhs`.
    pub fn solve(&self, rhs: MatRef<'_, c64>) -> CMatrix {
        if self.n == 0 || rhs.ncols() == 0 {
            return CMatrix::zeros(self.n, rhs.ncols());
        }
        self.lu.solve(rhs)
    }

    /// Solves `(sI - A)^T X = rhs` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, rhs: MatRef<'_, c64>) -> CMatrix {
        if self.n == 0 || rhs.ncols() == 0 {
            return CMatrix::zeros(self.n, rhs.ncols());
        }
        self.lu.solve_transpose(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_right(a: &Matrix, lambda: c64, x: &CMatrix, k: usize) -> f64 {
        let n = a.nrows();
        (0..n)
            .map(|i| {
                let ax: c64 = (0..n).map(|j| c64::new(a[(i, j)], 0.0) * x[(j, k)]).sum();
                (ax - lambda * x[(i, k)]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn residual_left(a: &Matrix, lambda: c64, y: &CMatrix, k: usize) -> f64 {
        let n = a.nrows();
        (0..n)
            .map(|j| {
                let ya: c64 = (0..n).map(|i| y[(i, k)].conj() * c64::new(a[(i, j)], 0.0)).sum();
                (ya - lambda * y[(j, k)].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn left_and_right_eigenvectors_satisfy_definitions() {
        let a = Matrix::from_fn(5, 5, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 0.5 } else { 0.0 }
        });
        let eig = eigen_left_right(a.as_ref()).unwrap();
        for k in 0..5 {
            let lam = eig.values[k];
            assert!(residual_right(&a, lam, &eig.right, k) < 1e-10);
            assert!(residual_left(&a, lam, &eig.left, k) < 1e-10);
        }
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let a = from_rows(2, 2, &[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let eig = eigen_left_right(a.as_ref()).unwrap();
        let mut im: Vec<f64> = eig.values.iter().map(|v| v.im).collect();
        im.sort_by(f64::total_cmp);
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn resolvent_detects_singularity() {
        let a = from_rows(1, 1, &[vec![-1.0]]);
        assert!(Resolvent::new(a.as_ref(), c64::new(-1.0, 0.0)).is_err());
        assert!(Resolvent::new(a.as_ref(), c64::new(0.0, 0.0)).is_ok());
    }
}
