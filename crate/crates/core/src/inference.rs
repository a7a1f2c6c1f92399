//! Sandwich variances and large-sample intervals for the shrinkage estimator.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::linalg::{self, inf_norm};
use crate::mle::{self, MleFit};
use crate::shrink::{check_lambda, DialEstimate, SourceSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub level: f64,
    pub center: DVector<f64>,
    pub se: DVector<f64>,
}

impl IntervalSet {
    pub fn new(center: DVector<f64>, se: DVector<f64>, level: f64) -> Result<Self> {
        let z = normal_quantile_two_sided(level)?;
        let half = &se * z;
        Ok(IntervalSet {
            lower: &center - &half,
            upper: &center + &half,
            level,
            center,
            se,
        })
    }

    pub fn half_widths(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    /// Per-coordinate indicator that `truth` lies inside the interval.
    pub fn covers(&self, truth: &DVector<f64>) -> Vec<bool> {
        (0..truth.len())
            .map(|j| self.lower[j] <= truth[j] && truth[j] <= self.upper[j])
            .collect()
    }
}

/// `z_{α/2}` for a two-sided interval at `level`.
pub fn normal_quantile_two_sided(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must lie in (0, 1), got {level}")));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

/// `n₂⁻¹ d S⁻¹(β;λ) V₂(β) S⁻¹(β;λ)` at an arbitrary `β`.
pub fn sandwich_variance(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    beta: &DVector<f64>,
    lambda: f64,
    dispersion: f64,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    let v2 = mle::weighted_info(family, target, beta);
    let pen = source.penalty_hessian(family, beta)?;
    sandwich_from_parts(&v2, &pen, lambda, dispersion, target.n())
}

/// Sandwich variance at the target MLE, with the fitted dispersion.
pub fn sandwich_variance_with_fit(
    family: GlmFamily,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    let pen = source.penalty_hessian(family, &target_fit.beta_hat)?;
    sandwich_from_parts(
        &target_fit.info,
        &pen,
        lambda,
        target_fit.dispersion(),
        target_fit.n,
    )
}

fn sandwich_from_parts(
    v2: &DMatrix<f64>,
    pen: &DMatrix<f64>,
    lambda: f64,
    dispersion: f64,
    n2: usize,
) -> Result<DMatrix<f64>> {
    let s = v2 + pen * lambda;
    let s_inv = linalg::spd_inverse(&s, "penalized Hessian")?;
    let out = &s_inv * v2 * &s_inv * (dispersion / n2 as f64);
    Ok(linalg::symmetrize(&out))
}

/// `β̃₂ ± z·se` using the sandwich variance stored in the estimate.
pub fn confidence_intervals(estimate: &DialEstimate, level: f64) -> Result<IntervalSet> {
    if !estimate.converged {
        return Err(Error::invalid("estimate did not converge"));
    }
    IntervalSet::new(estimate.beta_tilde.clone(), estimate.standard_errors(), level)
}

/// Classical Wald intervals around the MLE.
pub fn wald_intervals(fit: &MleFit, level: f64) -> Result<IntervalSet> {
    IntervalSet::new(fit.beta_hat.clone(), fit.standard_errors()?, level)
}

/// `‖{I − λS⁻¹G₁}⁻¹S⁻¹G₂ − I‖∞` with `S = G₂ + λG₁`.
pub fn debias_identity_residual(g1: &DMatrix<f64>, g2: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let p = g1.nrows();
    let s = g2 + g1 * lambda;
    let chol = linalg::cholesky(&s, "penalized Hessian")?;
    let eye = DMatrix::<f64>::identity(p, p);
    let left = &eye - chol.solve(g1) * lambda;
    let right = chol.solve(g2);
    let m = left
        .lu()
        .solve(&right)
        .ok_or_else(|| Error::rank("debias factor"))?;
    Ok(inf_norm(&(m - eye)))
}
