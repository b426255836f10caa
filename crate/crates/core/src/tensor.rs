//! Dense tensor storage and the multilinear primitives everything else is
//! built on: mode-n unfolding and folding, mode products, Tucker
//! reconstruction, rank-1 outer products and Frobenius norms.
//!
//! Flat storage is mode-1-fastest: the first index varies fastest, so the
//! mode-1 fibers are contiguous and `unfold(x, 1)` is a plain reshape. The
//! unfold column map follows the standard convention: column
//! `j = 1 + sum_{k != n} (i_k - 1) * prod_{m < k, m != n} J_m` (1-based,
//! modes ascending). Matrices use the same element order (column-major).

use crate::{Error, Result};

/// Tensor dimensions `J_1 .. J_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    /// Validates `N >= 1`, every dimension positive, and that the element
    /// count does not overflow the address space.
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("tensor order must be at least 1".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!(
                "all dimensions must be positive, got {dims:?}"
            )));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.checked_mul(d).ok_or_else(|| {
                Error::InvalidShape(format!("element count overflows for {dims:?}"))
            })?;
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Tensor order N.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // validated: every dim >= 1
    }

    /// Product of all dimensions except `mode` (1-based): the column count of
    /// the mode-`mode` unfolding.
    pub fn co_mode_len(&self, mode: usize) -> Result<usize> {
        self.check_mode(mode)?;
        Ok(self.len() / self.dims[mode - 1])
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode == 0 || mode > self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }
}

/// Dense N-way array of finite 64-bit floats, mode-1-fastest element order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::DimMismatch {
                context: "tensor data length",
                expected: shape.len(),
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        let len = shape.len();
        Self {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Element accessor with 1-based multi-index, for tests and spot checks.
    pub fn get(&self, index: &[usize]) -> f64 {
        debug_assert_eq!(index.len(), self.shape.order());
        let mut flat = 0;
        let mut stride = 1;
        for (pos, &i) in index.iter().enumerate() {
            debug_assert!(i >= 1 && i <= self.shape.dims()[pos]);
            flat += (i - 1) * stride;
            stride *= self.shape.dims()[pos];
        }
        self.data[flat]
    }
}

/// Dense column-major matrix of finite 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                context: "matrix data length",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from rows of equal length; convenient in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = vec![0.0; r * c];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidShape("ragged rows".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                data[i + j * r] = v;
            }
        }
        Matrix::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + c * self.rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r + c * self.rows] = v;
    }

    /// Contiguous view of column `c` (0-based).
    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for c in 0..self.cols {
            for r in 0..self.rows {
                out.data[c + r * self.cols] = self.data[r + c * self.rows];
            }
        }
        out
    }

    /// `self * other`; errors on inner-dimension mismatch.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimMismatch {
                context: "matrix product inner dimension",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[k + j * other.rows];
                if b == 0.0 {
                    continue;
                }
                let a_col = &self.data[k * self.rows..(k + 1) * self.rows];
                for (o, &a) in out_col.iter_mut().zip(a_col) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Gathers the 1-based columns in `indices` into a new matrix.
    pub fn gather_columns(&self, indices: &[usize]) -> Result<Matrix> {
        if indices.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut out = Matrix::zeros(self.rows, indices.len());
        for (dst, &idx) in indices.iter().enumerate() {
            if idx == 0 || idx > self.cols {
                return Err(Error::IndexOutOfRange {
                    index: idx,
                    max: self.cols,
                });
            }
            out.col_mut(dst).copy_from_slice(self.col(idx - 1));
        }
        Ok(out)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn col_norm_sq(&self, c: usize) -> f64 {
        self.col(c).iter().map(|v| v * v).sum()
    }
}

/// Rearranges the mode-`n` fibers of `x` into the columns of a
/// `J_n x prod_{i != n} J_i` matrix.
pub fn unfold(x: &DenseTensor, n: usize) -> Result<Matrix> {
    x.shape().check_mode(n)?;
    let dims = x.shape().dims();
    let jn = dims[n - 1];
    let before: usize = dims[..n - 1].iter().product();
    let after: usize = dims[n..].iter().product();
    let mut out = Matrix::zeros(jn, before * after);
    // Flat tensor index b + i*before + a*before*jn maps to entry (i, b + a*before).
    for a in 0..after {
        for i in 0..jn {
            let src = (a * jn + i) * before;
            for b in 0..before {
                out.data[i + (b + a * before) * jn] = x.data[src + b];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`unfold`]: bit-exact, `fold(unfold(x, n), n, x.shape) == x`.
pub fn fold(m: &Matrix, n: usize, shape: &Shape) -> Result<DenseTensor> {
    shape.check_mode(n)?;
    let dims = shape.dims();
    let jn = dims[n - 1];
    if m.rows != jn {
        return Err(Error::DimMismatch {
            context: "fold row count",
            expected: jn,
            got: m.rows,
        });
    }
    let co = shape.co_mode_len(n)?;
    if m.cols != co {
        return Err(Error::DimMismatch {
            context: "fold column count",
            expected: co,
            got: m.cols,
        });
    }
    let before: usize = dims[..n - 1].iter().product();
    let after: usize = dims[n..].iter().product();
    let mut out = DenseTensor::zeros(shape.clone());
    for a in 0..after {
        for i in 0..jn {
            let dst = (a * jn + i) * before;
            for b in 0..before {
                out.data[dst + b] = m.data[i + (b + a * before) * jn];
            }
        }
    }
    Ok(out)
}

/// Multiplies every mode-`n` fiber by `u`: the unfolding of the result is
/// `u * unfold(x, n)`.
pub fn mode_product(x: &DenseTensor, n: usize, u: &Matrix) -> Result<DenseTensor> {
    x.shape().check_mode(n)?;
    let jn = x.shape().dims()[n - 1];
    if u.cols != jn {
        return Err(Error::DimMismatch {
            context: "mode product inner dimension",
            expected: jn,
            got: u.cols,
        });
    }
    let unfolded = unfold(x, n)?;
    let product = u.matmul(&unfolded)?;
    let mut dims = x.shape().dims().to_vec();
    dims[n - 1] = u.rows;
    fold(&product, n, &Shape::new(dims)?)
}

/// Applies the factor matrices to the core in ascending mode order:
/// `g x_1 U_1 x_2 U_2 ... x_N U_N`.
pub fn tucker_reconstruct(g: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != g.shape().order() {
        return Err(Error::DimMismatch {
            context: "factor count",
            expected: g.shape().order(),
            got: factors.len(),
        });
    }
    let mut out = g.clone();
    for (n, factor) in factors.iter().enumerate() {
        out = mode_product(&out, n + 1, factor).map_err(|e| Error::in_mode(n + 1, e))?;
    }
    Ok(out)
}

/// Weighted rank-1 tensor: entry `(i_1 .. i_N) = weight * prod_n v_n[i_n]`.
pub fn outer_rank1(weight: f64, vectors: &[Vec<f64>]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(Error::InvalidShape("outer product needs at least one vector".into()));
    }
    let dims: Vec<usize> = vectors.iter().map(Vec::len).collect();
    let shape = Shape::new(dims)?;
    let mut out = DenseTensor::zeros(shape);
    let order = vectors.len();
    let mut index = vec![0usize; order];
    for slot in out.data.iter_mut() {
        let mut v = weight;
        for (n, &i) in index.iter().enumerate() {
            v *= vectors[n][i];
        }
        *slot = v;
        // Odometer increment, first mode fastest.
        for n in 0..order {
            index[n] += 1;
            if index[n] < vectors[n].len() {
                break;
            }
            index[n] = 0;
        }
    }
    DenseTensor::new(out.shape.clone(), out.data)
}

/// Squared Frobenius norm: the sum of squared entries.
pub fn frobenius_norm_sq(x: &DenseTensor) -> f64 {
    x.data.iter().map(|v| v * v).sum()
}

/// Squared Frobenius distance between same-shape tensors.
pub fn frobenius_dist_sq(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch {
            context: "tensor difference",
            expected: a.shape().len(),
            got: b.shape().len(),
        });
    }
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}
