//! The KL-penalized objective and the information-shrinkage estimator.
//!
//! The source enters only through the penalty
//! `(λ/n₁) Σᵢ {b'(θ̂ᵢ)(θ̂ᵢ − θᵢ) + b(θᵢ) − b(θ̂ᵢ)}` with `θᵢ = X_{i1}ᵀβ`,
//! `θ̂ᵢ = X_{i1}ᵀβ̂₁`. Its gradient is `λ n₁⁻¹ X₁{μ₁(β) − μ₁(β̂₁)}` and its
//! Hessian `λ n₁⁻¹ X₁ A(X₁ᵀβ) X₁ᵀ`. For a Gaussian source these reduce to
//! quadratic forms in `G₁`, so a Gram matrix is enough.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{link_inverse, GlmFamily};
use crate::inference;
use crate::linalg::{self, cholesky, max_abs};
use crate::mle::{self, fit_mle, MleFit};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum SourcePayload {
    /// Individual-level source design, `p × n₁`.
    FullDesign { design: DMatrix<f64> },
    /// Scaled Gram matrix `G₁ = n₁⁻¹X₁X₁ᵀ`; Gaussian family only.
    GaussianGram,
}

/// What the penalty needs from the source data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSummary {
    pub family: GlmFamily,
    pub n1: usize,
    pub beta1_hat: DVector<f64>,
    pub gamma1_hat: f64,
    /// `G₁ = n₁⁻¹X₁X₁ᵀ`.
    pub gram: DMatrix<f64>,
    pub payload: SourcePayload,
}

impl SourceSummary {
    /// Summary carrying the full source design.
    pub fn from_fit(data: &Dataset, fit: &MleFit) -> Self {
        SourceSummary {
            family: fit.family,
            n1: data.n(),
            beta1_hat: fit.beta_hat.clone(),
            gamma1_hat: fit.gamma_hat,
            gram: fit.gram.clone(),
            payload: SourcePayload::FullDesign {
                design: data.design().clone(),
            },
        }
    }

    /// Fits the source MLE and wraps it with the full design.
    pub fn fit(family: GlmFamily, data: &Dataset) -> Result<Self> {
        let fit = fit_mle(family, data)?;
        Ok(SourceSummary::from_fit(data, &fit))
    }

    /// Gaussian summary from fitted coefficients, Gram matrix and dispersion.
    pub fn gaussian_gram(
        n1: usize,
        beta1_hat: DVector<f64>,
        gram: DMatrix<f64>,
        sigma2_hat: f64,
    ) -> Result<Self> {
        let p = beta1_hat.len();
        if gram.nrows() != p || gram.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "gram is {}x{} but beta1_hat has length {p}",
                gram.nrows(),
                gram.ncols()
            )));
        }
        if n1 < p {
            return Err(Error::invalid(format!("n1 = {n1} is smaller than p = {p}")));
        }
        if !(sigma2_hat >= 0.0) || !sigma2_hat.is_finite() {
            return Err(Error::invalid("sigma2_hat must be finite and nonnegative"));
        }
        cholesky(&gram, "source gram")?;
        Ok(SourceSummary {
            family: GlmFamily::Gaussian,
            n1,
            beta1_hat,
            gamma1_hat: sigma2_hat,
            gram: linalg::symmetrize(&gram),
            payload: SourcePayload::GaussianGram,
        })
    }

    pub fn p(&self) -> usize {
        self.beta1_hat.len()
    }

    pub fn design(&self) -> Option<&DMatrix<f64>> {
        match &self.payload {
            SourcePayload::FullDesign { design } => Some(design),
            SourcePayload::GaussianGram => None,
        }
    }

    /// Checks this summary can serve a penalty for `family` in dimension `p`.
    pub fn check(&self, family: GlmFamily, p: usize) -> Result<()> {
        if self.p() != p {
            return Err(Error::DimensionMismatch(format!(
                "source has {} coefficients, target has {p}",
                self.p()
            )));
        }
        if self.family != family {
            return Err(Error::PayloadMismatch(format!(
                "source was fitted as {} but target family is {family}",
                self.family
            )));
        }
        if !family.is_gaussian() && self.design().is_none() {
            return Err(Error::PayloadMismatch(format!(
                "a Gram-matrix summary cannot define the {family} penalty"
            )));
        }
        Ok(())
    }

    /// Raw penalty sum without the `1/d(γ₁)` factor.
    pub fn kl_raw(&self, family: GlmFamily, beta: &DVector<f64>) -> Result<f64> {
        self.check(family, beta.len())?;
        match self.design() {
            Some(x) if !family.is_gaussian() => {
                let theta = x.tr_mul(beta);
                let theta_hat = x.tr_mul(&self.beta1_hat);
                Ok(theta
                    .iter()
                    .zip(theta_hat.iter())
                    .map(|(&t, &th)| {
                        family.mean(th) * (th - t) + family.cumulant(t) - family.cumulant(th)
                    })
                    .sum::<f64>()
                    .max(0.0))
            }
            _ => {
                let d = &self.beta1_hat - beta;
                Ok(0.5 * self.n1 as f64 * (d.transpose() * &self.gram * &d)[(0, 0)].max(0.0))
            }
        }
    }

    /// `n₁⁻¹X₁{μ₁(β) − μ₁(β̂₁)}`.
    pub fn penalty_gradient(&self, family: GlmFamily, beta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(family, beta.len())?;
        match self.design() {
            Some(x) if !family.is_gaussian() => {
                let mu = link_inverse(family, &x.tr_mul(beta));
                let mu_hat = link_inverse(family, &x.tr_mul(&self.beta1_hat));
                Ok(x * (mu - mu_hat) / self.n1 as f64)
            }
            _ => Ok(&self.gram * (beta - &self.beta1_hat)),
        }
    }

    /// `n₁⁻¹X₁A(X₁ᵀβ)X₁ᵀ`.
    pub fn penalty_hessian(&self, family: GlmFamily, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(family, beta.len())?;
        match self.design() {
            Some(x) if !family.is_gaussian() => {
                let w = x.tr_mul(beta).map(|e| family.variance(e));
                Ok(linalg::weighted_cross(x, &w))
            }
            _ => Ok(self.gram.clone()),
        }
    }

    /// `v₁(β)`, the source information at `β`.
    pub fn info_at(&self, family: GlmFamily, beta: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.penalty_hessian(family, beta)
    }

    /// `X₁Δ(β) = X₁{h(X₁ᵀβ) − h(X₁ᵀβ̂₁)}`, unscaled.
    pub fn x1_delta(&self, family: GlmFamily, beta: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.penalty_gradient(family, beta)? * self.n1 as f64)
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

/// Literal KL divergence `KL_{n₁}(β; β̂₁, γ₁)`, including the `1/d(γ₁)` factor.
pub fn kl_divergence(family: GlmFamily, source: &SourceSummary, beta: &DVector<f64>) -> Result<f64> {
    let raw = source.kl_raw(family, beta)?;
    let d = family.dispersion(source.gamma1_hat);
    if raw == 0.0 {
        return Ok(0.0);
    }
    Ok(raw / d)
}

/// Penalized objective `n₂⁻¹Σ{yθ − b(θ)} − (λ/n₁)·raw KL`.
pub fn objective(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    beta: &DVector<f64>,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let ll = mle::log_likelihood(family, target, beta) / target.n() as f64;
    let pen = source.kl_raw(family, beta)?;
    Ok(ll - lambda * pen / source.n1 as f64)
}

/// `Ψ(β;λ) = n₂⁻¹X₂{y₂ − μ₂(β)} − λn₁⁻¹X₁{μ₁(β) − μ₁(β̂₁)}`.
pub fn estimating_function(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    beta: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    check_lambda(lambda)?;
    let s = mle::score(family, target, beta);
    Ok(s - source.penalty_gradient(family, beta)? * lambda)
}

/// `S(β;λ) = V₂(β) + λ n₁⁻¹X₁A(X₁ᵀβ)X₁ᵀ`.
pub fn penalized_hessian(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    beta: &DVector<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    let v2 = mle::weighted_info(family, target, beta);
    Ok(v2 + source.penalty_hessian(family, beta)? * lambda)
}

/// `W̃_λ = (G₂ + λG₁)⁻¹G₂`.
pub fn shrink_weight_matrix(
    target_gram: &DMatrix<f64>,
    source_gram: &DMatrix<f64>,
    lambda: f64,
) -> Result<DMatrix<f64>> {
    check_lambda(lambda)?;
    let s = target_gram + source_gram * lambda;
    linalg::spd_solve_mat(&s, target_gram, "shrinkage matrix")
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialEstimate {
    pub beta_tilde: DVector<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `S(β̃;λ)`.
    pub s_at_solution: DMatrix<f64>,
    /// `n₂⁻¹d(γ̂₂)S⁻¹V₂S⁻¹`, evaluated at the target MLE.
    pub sandwich_var: DMatrix<f64>,
    /// Target MLE `β̂₂`.
    pub beta_mle: DVector<f64>,
    /// Classical covariance of `β̂₂`.
    pub mle_var: DMatrix<f64>,
    /// `‖Ψ(β̃;λ)‖∞` at return.
    pub psi_norm: f64,
}

impl DialEstimate {
    pub fn standard_errors(&self) -> DVector<f64> {
        self.sandwich_var.diagonal().map(|v| v.max(0.0).sqrt())
    }

    pub fn mle_standard_errors(&self) -> DVector<f64> {
        self.mle_var.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Fits the target MLE, then solves for `β̃₂(λ)`.
pub fn solve_dial_estimate(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DialEstimate> {
    let fit = fit_mle(family, target)?;
    solve_dial_estimate_with_fit(family, target, &fit, source, lambda)
}

/// `β̃₂(λ)` given an already fitted target MLE. Gaussian problems use the
/// closed form; everything else runs the Newton iteration.
pub fn solve_dial_estimate_with_fit(
    family: GlmFamily,
    target: &Dataset,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DialEstimate> {
    check_lambda(lambda)?;
    source.check(family, target.p())?;
    let (beta, iterations) = if family.is_gaussian() {
        (gaussian_closed_form(target, target_fit, source, lambda)?, 0)
    } else {
        newton_path(family, target, &target_fit.beta_hat, source, lambda)?
    };
    finish(family, target, target_fit, source, lambda, beta, iterations)
}

/// Newton solve for any family, including Gaussian.
pub fn solve_dial_estimate_newton(
    family: GlmFamily,
    target: &Dataset,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DialEstimate> {
    check_lambda(lambda)?;
    source.check(family, target.p())?;
    let (beta, iterations) = newton_path(family, target, &target_fit.beta_hat, source, lambda)?;
    finish(family, target, target_fit, source, lambda, beta, iterations)
}

fn finish(
    family: GlmFamily,
    target: &Dataset,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
    beta: DVector<f64>,
    iterations: usize,
) -> Result<DialEstimate> {
    let s = penalized_hessian(family, target, source, &beta, lambda)?;
    let psi = estimating_function(family, target, source, &beta, lambda)?;
    let sandwich = inference::sandwich_variance_with_fit(family, target_fit, source, lambda)?;
    Ok(DialEstimate {
        beta_tilde: beta,
        lambda,
        iterations,
        converged: true,
        s_at_solution: s,
        sandwich_var: sandwich,
        beta_mle: target_fit.beta_hat.clone(),
        mle_var: target_fit.covariance()?,
        psi_norm: max_abs(&psi),
    })
}

/// `(G₂ + λG₁)⁻¹(n₂⁻¹X₂y₂ + λG₁β̂₁)`.
///
/// At `λ = 0` this performs the same Cholesky solve as the Gaussian MLE and
/// returns bitwise the same vector.
fn gaussian_closed_form(
    target: &Dataset,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<DVector<f64>> {
    let n2 = target.n() as f64;
    let s = &target_fit.gram + &source.gram * lambda;
    let rhs = target.design() * target.response() / n2 + &source.gram * &source.beta1_hat * lambda;
    linalg::spd_solve(&s, &rhs, "penalized Hessian")
}

fn newton_path(
    family: GlmFamily,
    target: &Dataset,
    start: &DVector<f64>,
    source: &SourceSummary,
    lambda: f64,
) -> Result<(DVector<f64>, usize)> {
    let mut beta = start.clone();
    let mut psi = estimating_function(family, target, source, &beta, lambda)?;
    let mut norm = max_abs(&psi);
    let mut last_step = f64::INFINITY;
    for iter in 0..NEWTON_MAX_ITER {
        if norm < NEWTON_TOL {
            return Ok((beta, iter));
        }
        let s = penalized_hessian(family, target, source, &beta, lambda)?;
        let step = linalg::spd_solve(&s, &psi, "penalized Hessian")?;
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..=crate::mle::MAX_HALVINGS {
            let cand = &beta + &step * t;
            let cand_psi = estimating_function(family, target, source, &cand, lambda)?;
            let cand_norm = max_abs(&cand_psi);
            if cand_norm <= norm {
                next = Some((cand, cand_psi, cand_norm));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cand_psi, cand_norm)) = next else {
            // No step reduces ‖Ψ‖; accept if already at round-off level.
            if norm < NEWTON_TOL * 1e3 {
                return Ok((beta, iter));
            }
            return Err(Error::NonConvergence {
                iterations: iter,
                last_step,
            });
        };
        last_step = max_abs(&(&cand - &beta));
        beta = cand;
        psi = cand_psi;
        norm = cand_norm;
    }
    if norm < NEWTON_TOL {
        return Ok((beta, NEWTON_MAX_ITER));
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        last_step,
    })
}
