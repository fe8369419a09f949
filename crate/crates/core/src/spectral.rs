//! Singular value decomposition of epoch data matrices.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math;

/// Full SVD X = U α Vᵀ of a K x T matrix.
///
/// `left` is K x K and `right` is T x T, both orthogonal. The first
/// min(K, T) columns pair with `singular_values`, which are sorted in
/// descending order. Each paired left vector has its largest-magnitude entry
/// positive (the sign of a dyad α u vᵀ does not depend on this choice).
///
/// The eigenvalues of X Xᵀ are the squared singular values (padded with
/// zeros up to K); W = (1/√T) U Λ^{1/2} follows from the same factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub left: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub right: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn rank_capacity(&self) -> usize {
        self.singular_values.len()
    }

    /// α_i u_i v_iᵀ.
    pub fn dyad(&self, i: usize) -> DMatrix<f64> {
        let u = self.left.column(i);
        let v = self.right.column(i);
        u * v.transpose() * self.singular_values[i]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let (k, t) = (self.left.nrows(), self.right.nrows());
        let mut out = DMatrix::zeros(k, t);
        for i in 0..self.singular_values.len() {
            out += self.dyad(i);
        }
        out
    }

    /// Eigenvalues of X Xᵀ, descending, length K.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.singular_values.iter().map(|s| s * s).collect();
        out.resize(self.left.nrows(), 0.0);
        out
    }

    /// True when the largest singular value is tied with the second within
    /// the given relative tolerance, so the top dyad is not unique.
    pub fn top_is_degenerate(&self, relative: f64) -> bool {
        match self.singular_values.as_slice() {
            [a, b, ..] => a - b <= relative * a,
            _ => false,
        }
    }
}

/// Sweep limit of the Jacobi iteration; cyclic Jacobi converges
/// quadratically, so this is only reached on pathological input.
const MAX_SWEEPS: usize = 80;

/// Full singular value decomposition with the sign convention above.
pub fn svd(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let thin = svd_thin(x)?;
    Ok(SpectralDecomposition {
        left: complete_basis(thin.left),
        singular_values: thin.singular_values,
        right: complete_basis(thin.right),
    })
}

/// Thin variant: `left` is K x r and `right` is T x r with r = min(K, T).
/// Same ordering and sign convention as [`svd`].
///
/// The matrix is brought to tall form (m ≥ n), reduced to its n x n
/// triangular factor by Householder QR, and the factor is diagonalized by
/// one-sided Jacobi rotations. Jacobi stays accurate when the matrix is
/// rank deficient, which row-centred epoch matrices always are for T ≤ K.
pub fn svd_thin(x: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let (k, t) = x.shape();
    if k == 0 || t == 0 {
        return Err(Error::InvalidArgument("matrix is empty"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries"));
    }
    let tall = k >= t;
    let w = if tall { x.clone() } else { x.transpose() };
    let qr = w.qr();
    let (q, r) = (qr.q(), qr.r());
    let (u_r, sigma, v) = jacobi_svd(r)?;
    let u = q * u_r;
    let (u, v) = if tall { (u, v) } else { (v, u) };
    let n = sigma.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));

    let mut left = DMatrix::zeros(k, n);
    let mut right = DMatrix::zeros(t, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut uc = u.column(src).into_owned();
        let mut vc = v.column(src).into_owned();
        if dominant_entry(&uc) < 0.0 {
            uc.neg_mut();
            vc.neg_mut();
        }
        left.set_column(dst, &uc);
        right.set_column(dst, &vc);
        singular_values.push(sigma[src]);
    }
    Ok(SpectralDecomposition {
        left,
        singular_values,
        right,
    })
}

/// One-sided Jacobi SVD of a square matrix: A = U diag(σ) Vᵀ, unsorted.
///
/// Column pairs of A are rotated until all are mutually orthogonal; the
/// column norms are then the singular values. Columns whose norm is at the
/// rounding level of the whole matrix carry no direction information; they
/// are not rotated, count as zero singular values and get left vectors from
/// an orthonormal completion.
fn jacobi_svd(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let n = a.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = 4.0 * f64::EPSILON * (n.max(1) as f64);
    let negligible = tol * a.norm();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..a.nrows() {
                    let (ap, aq) = (a[(i, p)], a[(i, q)]);
                    alpha += ap * ap;
                    beta += aq * aq;
                    gamma += ap * aq;
                }
                let (norm_p, norm_q) = (math::sqrt(alpha), math::sqrt(beta));
                if norm_p <= negligible || norm_q <= negligible || gamma.abs() <= tol * norm_p * norm_q {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let tan = if zeta.abs() > 1e150 {
                    0.5 / zeta
                } else {
                    let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (zeta.abs() + math::sqrt(1.0 + zeta * zeta))
                };
                let cos = 1.0 / math::sqrt(1.0 + tan * tan);
                let sin = cos * tan;
                rotate(&mut a, p, q, cos, sin);
                rotate(&mut v, p, q, cos, sin);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNonConvergence);
    }

    let sigma: Vec<f64> = (0..n)
        .map(|j| a.column(j).norm())
        .map(|s| if s <= negligible { 0.0 } else { s })
        .collect();
    let (nonzero, zero): (Vec<usize>, Vec<usize>) = (0..n).partition(|&j| sigma[j] > 0.0);
    let columns: Vec<DVector<f64>> = nonzero.iter().map(|&j| a.column(j) / sigma[j]).collect();
    let completed = complete_basis(if columns.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&columns)
    });
    // Columns of `completed` follow `nonzero` then `zero`; reorder V and σ to match.
    let order: Vec<usize> = nonzero.iter().chain(&zero).copied().collect();
    let v = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let sigma = order.iter().map(|&j| sigma[j]).collect();
    Ok((completed, sigma, v))
}

/// Applies the plane rotation (c, s) to columns p and q.
fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (mp, mq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * mp - s * mq;
        m[(i, q)] = s * mp + c * mq;
    }
}

fn dominant_entry(v: &DVector<f64>) -> f64 {
    let mut best = 0.0_f64;
    for &x in v.iter() {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    best
}

/// Extends orthonormal columns to a full orthonormal basis by
/// Gram–Schmidt against the standard basis vectors, always taking the one
/// with the largest remaining residual. Added columns follow the same sign
/// convention as the paired ones.
fn complete_basis(q: DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let have = q.ncols();
    if have == 0 && n == 0 {
        return q;
    }
    if have >= n {
        return q.columns(0, n).into_owned();
    }
    let mut basis: Vec<DVector<f64>> = (0..have).map(|j| q.column(j).into_owned()).collect();
    // residual[j] = squared norm of e_j after projecting out the basis.
    let mut residual: Vec<f64> = (0..n)
        .map(|j| 1.0 - basis.iter().map(|b| b[j] * b[j]).sum::<f64>())
        .collect();
    while basis.len() < n {
        let pick = (0..n)
            .max_by(|&a, &b| residual[a].total_cmp(&residual[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let mut v = DVector::zeros(n);
        v[pick] = 1.0;
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, 1.0);
            }
        }
        v /= math::sqrt(v.dot(&v));
        if dominant_entry(&v) < 0.0 {
            v.neg_mut();
        }
        for (r, x) in residual.iter_mut().zip(v.iter()) {
            *r -= x * x;
        }
        basis.push(v);
    }
    DMatrix::from_columns(&basis)
}
