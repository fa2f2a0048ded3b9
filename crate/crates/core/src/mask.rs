//! Observation masks and the entrywise projections `P_Ω`, `P_Ω^⊥`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// The set Ω of observed `(row, col)` positions, stored as a dense boolean
/// grid in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl ObservationMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![false; rows * cols],
        }
    }

    /// Mask from an explicit list of observed positions.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut mask = Self::empty(rows, cols);
        for &(i, j) in pairs {
            if i >= rows || j >= cols {
                return Err(Error::invalid(format!(
                    "observed index ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if mask.is_observed(i, j) {
                return Err(Error::invalid(format!("duplicate observed index ({i}, {j})")));
            }
            mask.set(i, j, true);
        }
        Ok(mask)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut observed = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                observed.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            observed,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, observed: bool) {
        self.observed[i * self.cols + j] = observed;
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn missing_count(&self) -> usize {
        self.observed.len() - self.observed_count()
    }

    pub fn column_observed_count(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.is_observed(i, j)).count()
    }

    pub fn is_full(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    /// Observed positions in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_observed(i, j))
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            observed: self.observed.iter().map(|o| !o).collect(),
        }
    }

    /// Restriction to a subset of rows.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |i, j| self.is_observed(idx[i], j))
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if (rows, cols) != (self.rows, self.cols) {
            return Err(Error::invalid(format!(
                "mask is {}x{}, matrix is {rows}x{cols}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

pub(crate) fn observed_part(a: &DMatrix<f64>, m: &ObservationMask) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if m.is_observed(i, j) {
            a[(i, j)]
        } else {
            0.0
        }
    })
}

pub(crate) fn unobserved_part(a: &DMatrix<f64>, m: &ObservationMask) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if m.is_observed(i, j) {
            0.0
        } else {
            a[(i, j)]
        }
    })
}

/// Observed entries from `x`, the rest from `w`.
pub(crate) fn fill(x: &DMatrix<f64>, w: &DMatrix<f64>, m: &ObservationMask) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        if m.is_observed(i, j) {
            x[(i, j)]
        } else {
            w[(i, j)]
        }
    })
}

/// `P_Ω(a)`: observed entries kept, all others zero.
pub fn project_observed(a: &DenseMatrix, m: &ObservationMask) -> Result<DenseMatrix> {
    m.check_shape(a.rows(), a.cols())?;
    Ok(DenseMatrix::from_trusted(observed_part(a.as_matrix(), m)).labelled_like(a))
}

/// `P_Ω^⊥(a)`: unobserved entries kept, observed entries zero.
pub fn project_unobserved(a: &DenseMatrix, m: &ObservationMask) -> Result<DenseMatrix> {
    m.check_shape(a.rows(), a.cols())?;
    Ok(DenseMatrix::from_trusted(unobserved_part(a.as_matrix(), m)).labelled_like(a))
}

/// `P_Ω(x) + P_Ω^⊥(w)`.
pub fn fill_combine(x: &DenseMatrix, w: &DenseMatrix, m: &ObservationMask) -> Result<DenseMatrix> {
    m.check_shape(x.rows(), x.cols())?;
    m.check_shape(w.rows(), w.cols())?;
    Ok(DenseMatrix::from_trusted(fill(x.as_matrix(), w.as_matrix(), m)).labelled_like(x))
}
