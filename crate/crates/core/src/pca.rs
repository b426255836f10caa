//! Truncated left singular bases, classical PCA residuals and projection
//! errors: the separation-oracle kernel of the column selector.
//!
//! The singular value decomposition is computed through a dense symmetric
//! eigendecomposition of whichever Gram matrix is smaller: `A^T A` when the
//! matrix has at most as many columns as rows, `A A^T` otherwise. The selector
//! hot path works on `J_n x k_n` submatrices with small `k_n`, so this keeps
//! the eigenproblem at `k_n x k_n`. The eigensolver is Householder
//! tridiagonalization followed by implicitly shifted QL sweeps, capped at 64
//! sweeps per eigenvalue with a 1e-12 relative off-diagonal convergence test.
//!
//! Outputs are deterministic: eigenvalues are sorted nonincreasing (ties by
//! original position) and each basis vector is flipped so that its entry of
//! largest magnitude (ties: lowest index) is nonnegative.

use crate::select::Support;
use crate::tensor::Matrix;
use crate::{Error, Result};

const QL_SWEEP_CAP: usize = 64;
const QL_REL_TOL: f64 = 1e-12;

/// An orthonormal column basis with its singular values, `u^T u = I`.
#[derive(Clone, Debug)]
pub struct PcaBasis {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
}

impl PcaBasis {
    /// Number of basis columns.
    pub fn rank(&self) -> usize {
        self.u.cols()
    }
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// accumulated orthogonal transform left in `q` (column-major, n x n).
fn tridiagonalize(q: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let at = |buf: &[f64], i: usize, j: usize| buf[i + j * n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += at(q, i, k).abs();
            }
            if scale == 0.0 {
                e[i] = at(q, i, l);
            } else {
                for k in 0..=l {
                    q[i + k * n] /= scale;
                    h += at(q, i, k) * at(q, i, k);
                }
                let f = at(q, i, l);
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                q[i + l * n] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    q[j + i * n] = at(q, i, j) / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += at(q, j, k) * at(q, i, k);
                    }
                    for k in j + 1..=l {
                        g_acc += at(q, k, j) * at(q, i, k);
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * at(q, i, j);
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = at(q, i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        q[j + k * n] -= f * e[k] + g * at(q, i, k);
                    }
                }
            }
        } else {
            e[i] = at(q, i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += at(q, i, k) * at(q, k, j);
                }
                for k in 0..i {
                    q[k + j * n] -= g * at(q, k, i);
                }
            }
        }
        d[i] = at(q, i, i);
        q[i + i * n] = 1.0;
        for j in 0..i {
            q[j + i * n] = 0.0;
            q[i + j * n] = 0.0;
        }
    }
}

/// Implicitly shifted QL iteration on a symmetric tridiagonal matrix,
/// rotating the eigenvector accumulator `q` along.
fn ql_implicit(q: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= QL_REL_TOL * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > QL_SWEEP_CAP {
                return Err(Error::EigenNoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = q[k + (i + 1) * n];
                    q[k + (i + 1) * n] = s * q[k + i * n] + c * f;
                    q[k + i * n] = c * q[k + i * n] - s * f;
                }
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Flips a vector so its largest-magnitude entry (ties: lowest index) is
/// nonnegative.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues nonincreasing,
/// eigenvectors as orthonormal columns with the deterministic sign rule.
pub(crate) fn sym_eigen_desc(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimMismatch {
            context: "symmetric eigendecomposition",
            expected: n,
            got: a.cols(),
        });
    }
    let mut q = a.data().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        return Ok((vec![a.get(0, 0)], Matrix::identity(1)));
    }
    tridiagonalize(&mut q, &mut d, &mut e, n);
    ql_implicit(&mut q, &mut d, &mut e, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col: Vec<f64> = (0..n).map(|k| q[k + src * n]).collect();
        vectors.col_mut(dst).copy_from_slice(&col);
        fix_sign(vectors.col_mut(dst));
    }
    Ok((values, vectors))
}

/// `A^T A`, exploiting symmetry.
fn gram_cols(a: &Matrix) -> Matrix {
    let c = a.cols();
    let mut g = Matrix::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let dot: f64 = a.col(i).iter().zip(a.col(j)).map(|(x, y)| x * y).sum();
            g.set(i, j, dot);
            g.set(j, i, dot);
        }
    }
    g
}

/// `A A^T`, accumulated column by column.
fn gram_rows(a: &Matrix) -> Matrix {
    let r = a.rows();
    let mut g = Matrix::zeros(r, r);
    for c in 0..a.cols() {
        let col = a.col(c);
        for i in 0..r {
            let ci = col[i];
            if ci == 0.0 {
                continue;
            }
            for j in i..r {
                let v = g.get(i, j) + ci * col[j];
                g.set(i, j, v);
            }
        }
    }
    for i in 0..r {
        for j in 0..i {
            g.set(i, j, g.get(j, i));
        }
    }
    g
}

fn matvec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.rows()];
    for (c, &vc) in v.iter().enumerate() {
        if vc == 0.0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(a.col(c)) {
            *o += x * vc;
        }
    }
    out
}

/// Removes the components of `v` along the first `count` columns of `basis`
/// (one modified Gram-Schmidt pass) and returns the remaining norm.
fn orthogonalize_against(basis: &Matrix, count: usize, v: &mut [f64]) -> f64 {
    for c in 0..count {
        let col = basis.col(c);
        let dot: f64 = col.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
        for (vi, &bi) in v.iter_mut().zip(col) {
            *vi -= dot * bi;
        }
    }
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Deterministically extends a partial orthonormal basis by one column: the
/// standard basis vector with the largest residual (ties: lowest index),
/// re-orthogonalized and normalized.
fn complete_basis_column(basis: &mut Matrix, count: usize) {
    let n = basis.rows();
    let mut best_j = 0usize;
    let mut best_norm = -1.0;
    for j in 0..n {
        let mut probe = vec![0.0; n];
        probe[j] = 1.0;
        let norm = orthogonalize_against(basis, count, &mut probe);
        if norm > best_norm + 1e-12 {
            best_norm = norm;
            best_j = j;
        }
    }
    let mut v = vec![0.0; n];
    v[best_j] = 1.0;
    let norm = orthogonalize_against(basis, count, &mut v);
    for x in v.iter_mut() {
        *x /= norm;
    }
    basis.col_mut(count).copy_from_slice(&v);
}

/// Leading `r` left singular vectors of `a` with their singular values.
///
/// The returned basis maximizes `tr(U^T A A^T U)` over orthonormal `U` with
/// `r` columns; degenerate directions are completed deterministically.
pub fn truncated_left_svd(a: &Matrix, r: usize) -> Result<PcaBasis> {
    let max_r = a.rows().min(a.cols());
    if r == 0 || r > max_r {
        return Err(Error::RankOutOfRange { r, max: max_r });
    }
    if a.cols() <= a.rows() {
        let (lambda, v) = sym_eigen_desc(&gram_cols(a))?;
        let sigma_max = lambda[0].max(0.0).sqrt();
        let mut u = Matrix::zeros(a.rows(), r);
        let mut singular_values = Vec::with_capacity(r);
        for i in 0..r {
            let sigma = lambda[i].max(0.0).sqrt();
            singular_values.push(sigma);
            let mut w = matvec(a, v.col(i));
            let norm = orthogonalize_against(&u, i, &mut w);
            if sigma > sigma_max * 1e-12 && norm > sigma_max * 1e-12 {
                for x in w.iter_mut() {
                    *x /= norm;
                }
                u.col_mut(i).copy_from_slice(&w);
            } else {
                complete_basis_column(&mut u, i);
            }
            fix_sign(u.col_mut(i));
        }
        Ok(PcaBasis { u, singular_values })
    } else {
        let (lambda, q) = sym_eigen_desc(&gram_rows(a))?;
        let mut u = Matrix::zeros(a.rows(), r);
        let mut singular_values = Vec::with_capacity(r);
        for i in 0..r {
            singular_values.push(lambda[i].max(0.0).sqrt());
            u.col_mut(i).copy_from_slice(q.col(i));
            fix_sign(u.col_mut(i));
        }
        Ok(PcaBasis { u, singular_values })
    }
}

/// Leading `r` left singular vectors of the selected columns of `a`.
pub fn pca_basis_for_columns(a: &Matrix, support: &Support, r: usize) -> Result<PcaBasis> {
    if support.len() == 0 {
        return Err(Error::EmptySupport);
    }
    if support.total() != a.cols() {
        return Err(Error::DimMismatch {
            context: "support column count",
            expected: a.cols(),
            got: support.total(),
        });
    }
    let sub = a.gather_columns(support.indices())?;
    truncated_left_svd(&sub, r)
}

/// Squared Frobenius norm of `A - U U^T A`.
pub fn projection_error_sq(a: &Matrix, basis: &PcaBasis) -> Result<f64> {
    if basis.u.rows() != a.rows() {
        return Err(Error::DimMismatch {
            context: "projection basis rows",
            expected: a.rows(),
            got: basis.u.rows(),
        });
    }
    let r = basis.u.cols();
    let mut err = 0.0;
    let mut scratch = vec![0.0; a.rows()];
    for j in 0..a.cols() {
        scratch.copy_from_slice(a.col(j));
        for i in 0..r {
            let col = basis.u.col(i);
            let t: f64 = col.iter().zip(a.col(j)).map(|(x, y)| x * y).sum();
            for (s, &bi) in scratch.iter_mut().zip(col) {
                *s -= t * bi;
            }
        }
        err += scratch.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(err)
}

/// Residual of classical rank-`r` PCA: `A - V V^T A` with `V` the leading
/// left singular basis, plus the squared norm of every residual column.
pub fn pca_residual(a: &Matrix, r: usize) -> Result<(Matrix, Vec<f64>)> {
    let basis = truncated_left_svd(a, r)?;
    let mut residual = a.clone();
    let mut column_norms_sq = vec![0.0; a.cols()];
    for j in 0..a.cols() {
        for i in 0..r {
            let col = basis.u.col(i);
            let t: f64 = col.iter().zip(a.col(j)).map(|(x, y)| x * y).sum();
            let res_col = residual.col_mut(j);
            for (s, &bi) in res_col.iter_mut().zip(col) {
                *s -= t * bi;
            }
        }
        column_norms_sq[j] = residual.col(j).iter().map(|x| x * x).sum();
    }
    Ok((residual, column_norms_sq))
}

/// Max absolute deviation of `U^T U` from the identity; test helper.
pub fn orthonormality_defect(u: &Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..u.cols() {
        for j in 0..u.cols() {
            let dot: f64 = u.col(i).iter().zip(u.col(j)).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}
