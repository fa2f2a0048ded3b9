//! A spatial fit reduced to what prediction needs, for saving to disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::lrmc::add_offsets;
use crate::smc::SmcFit;
use crate::spatial::{evaluate_design, Coordinates, DesignRecipe};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialModel {
    pub features: Vec<String>,
    pub recipe: DesignRecipe,
    /// `k × p` coefficients, one inner vector per design column.
    pub m_hat: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl SpatialModel {
    /// Fails for fits whose design was supplied as a plain matrix.
    pub fn from_fit(fit: &SmcFit) -> Result<Self> {
        let recipe = fit
            .recipe
            .clone()
            .ok_or_else(|| Error::invalid("fit has no design recipe; it was built from a raw design matrix"))?;
        let m = fit.m_hat.as_matrix();
        Ok(Self {
            features: fit.completion.x_hat.labels(),
            recipe,
            m_hat: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            offsets: fit.completion.offsets.clone(),
        })
    }

    /// `Z_new·M̂ + offsets` with `Z_new` evaluated from the stored recipe.
    pub fn predict(&self, coords: &Coordinates, covariates: Option<&DenseMatrix>) -> Result<DenseMatrix> {
        let z_new = evaluate_design(&self.recipe, coords, covariates)?;
        let m_hat = DenseMatrix::from_rows(&self.m_hat)?;
        let p = self.offsets.len();
        if m_hat.cols() != p || self.features.len() != p {
            return Err(Error::invalid("saved model is inconsistent: coefficient, offset and feature counts differ"));
        }
        if m_hat.rows() != z_new.cols() {
            return Err(Error::invalid(format!(
                "recipe yields {} design columns, model has {} coefficient rows",
                z_new.cols(),
                m_hat.rows()
            )));
        }
        let mut out = z_new.matrix.as_matrix() * m_hat.as_matrix();
        add_offsets(&mut out, &self.offsets);
        DenseMatrix::from_matrix(out)?.with_col_names(self.features.clone())
    }
}
