//! Comparison estimators: pooled MLE, Chen–Owen–Shi data enrichment and the
//! Zheng et al. weighted combination.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::linalg;
use crate::mle::{fit_mle, MleFit};
use crate::multi_source::concat_sources;
use crate::select::{self, delta_sq_hat, MseCurve};
use crate::shrink::{check_lambda, SourceSummary};

/// MLE of the concatenated target and source, i.e. assuming `β₂ = β₁`.
pub fn pooled_mle(family: GlmFamily, target: &Dataset, source_full: &Dataset) -> Result<MleFit> {
    let stacked = concat_sources(&[target.clone(), source_full.clone()])?;
    fit_mle(family, &stacked)
}

/// `W_λ = (X₁X₁ᵀ + λX₂X₂ᵀ + λX₁X₁ᵀ)⁻¹(X₁X₁ᵀ + λX₂X₂ᵀ)`.
pub fn chen_owen_shi_weight(
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    let a1 = &source.gram * source.n1 as f64;
    let a2 = &target_fit.gram * target_fit.n as f64;
    let num = &a1 + &a2 * lambda;
    let den = &num + &a1 * lambda;
    linalg::spd_solve_mat(&den, &num, "data-enriched weight")
}

/// `W_λβ̂₂ + (I − W_λ)β̂₁`.
pub fn chen_owen_shi(target_fit: &MleFit, source: &SourceSummary, lambda: f64) -> Result<DVector<f64>> {
    source.check(GlmFamily::Gaussian, target_fit.p)?;
    let w = chen_owen_shi_weight(target_fit, source, lambda)?;
    Ok(combine(&w, &target_fit.beta_hat, &source.beta1_hat))
}

/// Plug-in MSE of the data-enriched estimator at `λ`:
/// `σ̂²n₂⁻¹tr(WG₂⁻¹Wᵀ) + tr{(I−W)δ̂²(I−W)ᵀ}`.
pub fn chen_owen_shi_mse(
    target_fit: &MleFit,
    source: &SourceSummary,
    g2_inv: &DMatrix<f64>,
    delta_sq: &DMatrix<f64>,
    lambda: f64,
) -> Result<f64> {
    let w = chen_owen_shi_weight(target_fit, source, lambda)?;
    let p = w.nrows();
    let c = DMatrix::<f64>::identity(p, p) - &w;
    let var = target_fit.gamma_hat / target_fit.n as f64 * (&w * g2_inv * w.transpose()).trace();
    let bias = (&c * delta_sq * c.transpose()).trace();
    Ok(var + bias)
}

/// Minimizes [`chen_owen_shi_mse`] over the default bracket.
pub fn chen_owen_shi_lambda_hat(target_fit: &MleFit, source: &SourceSummary) -> Result<MseCurve> {
    chen_owen_shi_lambda_hat_in(target_fit, source, select::DEFAULT_BRACKET)
}

pub fn chen_owen_shi_lambda_hat_in(
    target_fit: &MleFit,
    source: &SourceSummary,
    bracket: (f64, f64),
) -> Result<MseCurve> {
    source.check(GlmFamily::Gaussian, target_fit.p)?;
    let g2_inv = linalg::spd_inverse(&target_fit.gram, "target gram")?;
    let dsq = delta_sq_hat(target_fit, source)?;
    let f = |l: f64| {
        chen_owen_shi_mse(target_fit, source, &g2_inv, &dsq, l).unwrap_or(f64::INFINITY)
    };
    select::select_lambda(f, bracket)
}

/// Zheng et al. weight
/// `[ddᵀ + (n₁v₁)⁻¹ + (n₂v₂)⁻¹]⁻¹[ddᵀ + (n₁v₁)⁻¹]` with `d = β̂₁ − β̂₂`.
pub fn zheng_weight(
    family: GlmFamily,
    target_fit: &MleFit,
    source: &SourceSummary,
) -> Result<DMatrix<f64>> {
    source.check(family, target_fit.p)?;
    if source.design().is_none() {
        return Err(Error::PayloadMismatch(
            "the weighted estimator needs the source design".into(),
        ));
    }
    let d = &source.beta1_hat - &target_fit.beta_hat;
    let ddt = &d * d.transpose();
    let v1 = source.info_at(family, &source.beta1_hat)? * source.n1 as f64;
    let v2 = &target_fit.info * target_fit.n as f64;
    let inv1 = linalg::spd_inverse(&v1, "source information")?;
    let inv2 = linalg::spd_inverse(&v2, "target information")?;
    let num = &ddt + &inv1;
    let den = &num + &inv2;
    linalg::spd_solve_mat(&den, &num, "weighted estimator")
}

pub fn zheng_weight_estimator(
    family: GlmFamily,
    target_fit: &MleFit,
    source: &SourceSummary,
) -> Result<DVector<f64>> {
    let w = zheng_weight(family, target_fit, source)?;
    Ok(combine(&w, &target_fit.beta_hat, &source.beta1_hat))
}

fn combine(w: &DMatrix<f64>, b2: &DVector<f64>, b1: &DVector<f64>) -> DVector<f64> {
    w * b2 + b1 - w * b1
}
