//! Dense N-way tensors and matrices.
//!
//! Both types store their entries in a flat `Vec<f64>` with the *first index
//! fastest* (generalized column-major order): the entry at multi-index
//! `(i_1, ..., i_N)` lives at flat position
//! `i_1 + I_1*(i_2 + I_2*(i_3 + ...))`. A [`Matrix`] is the order-2 special
//! case, so its data layout is plain column-major.
//!
//! Values are immutable once constructed; every kernel returns a fresh value,
//! which keeps tensors safe to share across threads for concurrent reads.

pub mod io;
pub mod kernels;
pub mod linalg;

use crate::error::{CoreError, Result};

/// Divisor floor used by [`DenseTensor::elementwise_divide`] and the
/// multiplicative update rules.
pub const EPS_DIV: f64 = 1e-16;

fn check_finite(data: &[f64]) -> Result<()> {
    for (index, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(CoreError::NonFinite { index });
        }
    }
    Ok(())
}

/// Dense N-way tensor with first-index-fastest storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Builds a tensor from a shape and flat data in storage order.
    ///
    /// Rejects empty shapes, zero extents, length mismatches, and non-finite
    /// entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&e| e == 0) {
            return Err(CoreError::EmptyShape);
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(CoreError::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { shape, data })
    }

    /// Internal constructor for kernel outputs whose finiteness follows from
    /// finite inputs. Shape consistency is still checked in debug builds.
    pub(crate) fn from_vec_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        debug_assert!(!shape.is_empty() && shape.iter().all(|&e| e > 0));
        Self { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self::from_vec_unchecked(shape, vec![0.0; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Tensor order N (number of modes).
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat position of a multi-index (first index fastest).
    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let mut pos = 0;
        let mut stride = 1;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.shape[k]);
            pos += i * stride;
            stride *= self.shape[k];
        }
        pos
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let pos = self.linear_index(idx);
        self.data[pos] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Sum of absolute values of all entries.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn dot(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other, "dot")?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn hadamard(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "hadamard")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_vec_unchecked(self.shape.clone(), data))
    }

    /// Elementwise division with the denominator floored at [`EPS_DIV`].
    pub fn elementwise_divide(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "elementwise_divide")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a / b.max(EPS_DIV))
            .collect();
        Ok(Self::from_vec_unchecked(self.shape.clone(), data))
    }

    /// Elementwise max with zero. Idempotent.
    pub fn project_nonneg(&self) -> DenseTensor {
        let data = self.data.iter().map(|&x| x.max(0.0)).collect();
        Self::from_vec_unchecked(self.shape.clone(), data)
    }

    pub fn scale(&self, s: f64) -> DenseTensor {
        let data = self.data.iter().map(|x| x * s).collect();
        Self::from_vec_unchecked(self.shape.clone(), data)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_vec_unchecked(self.shape.clone(), data))
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other, "sub")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_vec_unchecked(self.shape.clone(), data))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    /// First flat index with a negative entry, if any.
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.data
            .iter()
            .enumerate()
            .find(|(_, &v)| v < 0.0)
            .map(|(i, &v)| (i, v))
    }

    fn check_same_shape(&self, other: &DenseTensor, op: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(CoreError::ShapeMismatch(format!(
                "{op}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

/// Dense matrix with column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(CoreError::EmptyShape);
        }
        if data.len() != rows * cols {
            return Err(CoreError::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        debug_assert!(rows > 0 && cols > 0);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from row-major literals; handy in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        if r == 0 || rows[0].is_empty() {
            return Err(CoreError::EmptyShape);
        }
        let c = rows[0].len();
        if rows.iter().any(|row| row.len() != c) {
            return Err(CoreError::ShapeMismatch("ragged rows".into()));
        }
        let mut data = vec![0.0; r * c];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[i + j * r] = v;
            }
        }
        Self::new(r, c, data)
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

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + j * self.rows] = v;
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "hadamard")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    /// Elementwise division with the denominator floored at [`EPS_DIV`].
    pub fn elementwise_divide(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "elementwise_divide")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a / b.max(EPS_DIV))
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn project_nonneg(&self) -> Matrix {
        let data = self.data.iter().map(|&x| x.max(0.0)).collect();
        Self::from_vec_unchecked(self.rows, self.cols, data)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let data = self.data.iter().map(|x| x * s).collect();
        Self::from_vec_unchecked(self.rows, self.cols, data)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "sub")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    /// Reinterprets the matrix as an order-2 tensor (same storage).
    pub fn to_tensor(&self) -> DenseTensor {
        DenseTensor::from_vec_unchecked(vec![self.rows, self.cols], self.data.clone())
    }

    fn check_same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CoreError::ShapeMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
