use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::family::GlmFamily;

/// A design matrix stored `p × n` (one column per unit) and its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    response: DVector<f64>,
}

impl Dataset {
    /// Builds a dataset, checking shapes, finiteness and `n ≥ p`.
    ///
    /// Rank is checked lazily by the fitting routines, which report
    /// [`Error::RankDeficient`].
    pub fn new(design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        if design.ncols() != response.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} units but response has {}",
                design.ncols(),
                response.len()
            )));
        }
        if design.nrows() == 0 {
            return Err(Error::invalid("design has no features"));
        }
        if design.ncols() < design.nrows() {
            return Err(Error::invalid(format!(
                "need at least as many units as features (n = {}, p = {})",
                design.ncols(),
                design.nrows()
            )));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design contains non-finite values"));
        }
        if response.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response contains non-finite values"));
        }
        Ok(Dataset { design, response })
    }

    /// Builds a dataset and checks the response lies in the family's support.
    pub fn for_family(
        family: GlmFamily,
        design: DMatrix<f64>,
        response: DVector<f64>,
    ) -> Result<Self> {
        let d = Dataset::new(design, response)?;
        d.check_family(family)?;
        Ok(d)
    }

    /// Builds a dataset from rows of features (one row per unit).
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>, intercept: bool) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged feature rows".into()));
        }
        let off = usize::from(intercept);
        let mut design = DMatrix::zeros(k + off, n);
        for (i, row) in rows.iter().enumerate() {
            if intercept {
                design[(0, i)] = 1.0;
            }
            for (j, v) in row.iter().enumerate() {
                design[(j + off, i)] = *v;
            }
        }
        Dataset::new(design, DVector::from_vec(response))
    }

    pub fn check_family(&self, family: GlmFamily) -> Result<()> {
        if let Some((i, y)) = self
            .response
            .iter()
            .enumerate()
            .find(|(_, y)| !family.valid_response(**y))
        {
            return Err(Error::invalid(format!(
                "response {y} at unit {i} is not valid for the {family} family"
            )));
        }
        Ok(())
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn n(&self) -> usize {
        self.design.ncols()
    }

    pub fn p(&self) -> usize {
        self.design.nrows()
    }

    /// Linear predictor `Xᵀβ`.
    pub fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.design.tr_mul(beta)
    }

    /// Reorders units; `order[k]` is the old index of the new unit `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n() {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let design = self.design.select_columns(order.iter());
        let response = DVector::from_iterator(order.len(), order.iter().map(|&i| self.response[i]));
        Dataset::new(design, response)
    }
}
