//! Dense and sparse containers plus the handful of BLAS-1 helpers the
//! solvers need.
//!
//! Dense matrices are row-major so that assembly can hand out disjoint row
//! blocks to workers and matrix-vector products can be parallel over rows
//! with a fixed, thread-count independent summation order.

use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

pub type C64 = Complex64;
pub type Vec3 = Vector3<f64>;
pub type CVec3 = Vector3<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const J: C64 = C64 { re: 0.0, im: 1.0 };

/// Rows per rayon task in matrix-vector products.
const ROW_CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }
}

impl DenseMatrix<C64> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { C64::new(1.0, 0.0) } else { ZERO })
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![ZERO; self.rows];
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                for (k, yi) in out.iter_mut().enumerate() {
                    let row = self.row(chunk * ROW_CHUNK + k);
                    *yi = cdot_u(row, x);
                }
            });
        y
    }

    /// `y += a * self * x`.
    pub fn matvec_acc(&self, a: C64, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                for (k, yi) in out.iter_mut().enumerate() {
                    let row = self.row(chunk * ROW_CHUNK + k);
                    *yi += a * cdot_u(row, x);
                }
            });
    }

    pub fn scale(&mut self, a: C64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: C64, other: &DenseMatrix<C64>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(s, o)| *s += a * o);
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, other: &DenseMatrix<C64>) -> DenseMatrix<C64> {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        out.data
            .par_chunks_mut(other.cols)
            .enumerate()
            .for_each(|(r, orow)| {
                for (k, a) in self.row(r).iter().enumerate() {
                    if *a == ZERO {
                        continue;
                    }
                    for (o, b) in orow.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            });
        out
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }
}

impl DenseMatrix<f64> {
    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn to_complex(&self) -> DenseMatrix<C64> {
        DenseMatrix::from_row_major(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| C64::new(v, 0.0)).collect(),
        )
    }
}

/// Compressed sparse row matrix with real entries; the Gram matrices have at
/// most five nonzeros per row on a closed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed
    /// and columns are sorted.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| self.row(r).fold(ZERO, |acc, (c, v)| acc + x[c] * v))
            .collect()
    }

    pub fn matvec_real(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| self.row(r).fold(0.0, |acc, (c, v)| acc + x[c] * v))
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m.set(r, c, v);
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Unconjugated dot product.
pub fn cdot_u(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    C64::new(re, im)
}

/// Hermitian inner product `a^H b`.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += a * x`.
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: C64, x: &[C64]) -> Vec<C64> {
    x.iter().map(|v| a * v).collect()
}

/// `‖a − b‖ / ‖b‖`, or `‖a‖` when `b` is zero.
pub fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let nb = norm2(b);
    let d = norm2(&sub(a, b));
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

pub fn to_cvec3(v: &Vec3) -> CVec3 {
    CVec3::new(v.x.into(), v.y.into(), v.z.into())
}

/// Complex vector scaled by a complex factor, from a real direction.
pub fn cscale(v: &Vec3, a: C64) -> CVec3 {
    CVec3::new(a * v.x, a * v.y, a * v.z)
}

pub fn cdot3(a: &CVec3, b: &Vec3) -> C64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

pub fn cross_rc(a: &Vec3, b: &CVec3) -> CVec3 {
    CVec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_sums_duplicates_and_sorts() {
        let m = CsrMatrix::from_rows(2, vec![vec![(1, 2.0), (0, 1.0), (1, 3.0)], vec![]]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 5.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.diagonal(), vec![1.0, 0.0]);
    }

    #[test]
    fn dense_matvec_matches_manual() {
        let m = DenseMatrix::from_fn(3, 3, |r, c| C64::new((r * 3 + c) as f64, 1.0));
        let x = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(2.0, -1.0)];
        let y = m.matvec(&x);
        for r in 0..3 {
            let want: C64 = (0..3).map(|c| m.get(r, c) * x[c]).sum();
            assert!((y[r] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_dot_is_conjugate_linear_in_first_argument() {
        let a = vec![C64::new(0.0, 1.0)];
        let b = vec![C64::new(0.0, 1.0)];
        assert_eq!(cdot(&a, &b), C64::new(1.0, 0.0));
        assert_eq!(cdot_u(&a, &b), C64::new(-1.0, 0.0));
    }
}
