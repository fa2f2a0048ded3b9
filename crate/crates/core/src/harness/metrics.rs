//! Error metrics used by the experiments.

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::DenseMatrix;

fn check_same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::invalid(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Mean squared error over the entries `mask` marks unobserved.
pub fn mse_missing_entries(x_true: &DenseMatrix, x_hat: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    check_same_shape(x_true, x_hat)?;
    mask.check_shape(x_true.rows(), x_true.cols())?;
    let (mut sum, mut count) = (0.0, 0usize);
    for (i, j) in mask.complement().pairs() {
        let e = x_true.get(i, j) - x_hat.get(i, j);
        sum += e * e;
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("no missing entries to evaluate"));
    }
    Ok(sum / count as f64)
}

/// Mean squared error over every entry of the new-location block.
pub fn mse_new_locations(x_true_new: &DenseMatrix, predicted: &DenseMatrix) -> Result<f64> {
    check_same_shape(x_true_new, predicted)?;
    let n = x_true_new.rows() * x_true_new.cols();
    if n == 0 {
        return Err(Error::invalid("no new-location entries to evaluate"));
    }
    Ok((x_true_new.as_matrix() - predicted.as_matrix()).norm_squared() / n as f64)
}

/// Predicts every new location by the observed column means of `x`.
pub fn column_mean_baseline(x: &DenseMatrix, mask: &ObservationMask, n_new: usize) -> Result<DenseMatrix> {
    mask.check_shape(x.rows(), x.cols())?;
    let means = (0..x.cols())
        .map(|j| {
            let rows: Vec<usize> = (0..x.rows()).filter(|&i| mask.is_observed(i, j)).collect();
            if rows.is_empty() {
                return Err(Error::invalid(format!("column {:?} has no observed entries", x.col_name(j))));
            }
            Ok(rows.iter().map(|&i| x.get(i, j)).sum::<f64>() / rows.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = (0..n_new).flat_map(|_| means.iter().copied()).collect();
    Ok(DenseMatrix::from_row_major(n_new, x.cols(), values)?.labelled_like(x))
}
