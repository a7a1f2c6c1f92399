//! Evaluating the shrinkage estimator along a grid of dial values.

use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::mle::fit_mle;
use crate::select::PluginMse;
use crate::shrink::{solve_dial_estimate_with_fit, SourceSummary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    /// Empty when the fit at this `λ` failed.
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub est_mse: Option<f64>,
    pub error: Option<String>,
}

/// Fits the estimator at each `λ` in `grid`. Failures at individual grid
/// points are recorded in the row rather than aborting the sweep.
pub fn lambda_sweep(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::invalid(format!("grid value {bad} is not a finite nonnegative number")));
    }
    let fit = fit_mle(family, target)?;
    let curve = PluginMse::for_family(family, &fit, source)?;
    Ok(grid
        .iter()
        .map(|&lambda| {
            match solve_dial_estimate_with_fit(family, target, &fit, source, lambda) {
                Ok(est) => SweepPoint {
                    lambda,
                    beta: est.beta_tilde.iter().copied().collect(),
                    se: est.standard_errors().iter().copied().collect(),
                    est_mse: curve.eval(lambda).ok(),
                    error: None,
                },
                Err(e) => SweepPoint {
                    lambda,
                    beta: vec![],
                    se: vec![],
                    est_mse: curve.eval(lambda).ok(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// `k` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    match k {
        0 => vec![],
        1 => vec![lo],
        _ => (0..k)
            .map(|i| {
                if i == k - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (k - 1) as f64
                }
            })
            .collect(),
    }
}
