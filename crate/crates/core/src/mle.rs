//! Maximum-likelihood fitting and information matrices.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{link_inverse, GlmFamily};
use crate::linalg::{self, cholesky, max_abs};

pub const IRLS_MAX_ITER: usize = 100;
pub const MAX_HALVINGS: usize = 30;
pub const SEPARATION_THRESHOLD: f64 = 1e6;
/// Newton steps below this size skip the line search.
pub const POLISH_MAX_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub family: GlmFamily,
    pub beta_hat: DVector<f64>,
    /// Dispersion parameter estimate: `σ̂²` for Gaussian, 1 for Bernoulli.
    pub gamma_hat: f64,
    /// `v(β̂) = n⁻¹ X A(Xᵀβ̂) Xᵀ`.
    pub info: DMatrix<f64>,
    /// `G = n⁻¹ X Xᵀ`.
    pub gram: DMatrix<f64>,
    pub n: usize,
    pub p: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Log-likelihood kernel after each accepted iterate, starting at the initial point.
    pub loglik_path: Vec<f64>,
}

impl MleFit {
    pub fn dispersion(&self) -> f64 {
        self.family.dispersion(self.gamma_hat)
    }

    /// Classical covariance `n⁻¹ d(γ̂) v(β̂)⁻¹`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let inv = linalg::spd_inverse(&self.info, "MLE information")?;
        Ok(inv * (self.dispersion() / self.n as f64))
    }

    pub fn standard_errors(&self) -> Result<DVector<f64>> {
        Ok(self.covariance()?.diagonal().map(|v| v.max(0.0).sqrt()))
    }
}

/// `n⁻¹ X Xᵀ`.
pub fn gram_matrix(data: &Dataset) -> Result<DMatrix<f64>> {
    let g = linalg::weighted_cross(data.design(), &DVector::from_element(data.n(), 1.0));
    cholesky(&g, "gram matrix")?;
    Ok(g)
}

/// `n⁻¹ X A(Xᵀβ) Xᵀ` with `A = diag{b''(X_iᵀβ)}`.
pub fn weighted_info(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> DMatrix<f64> {
    let eta = data.linear_predictor(beta);
    let w = eta.map(|e| family.variance(e));
    linalg::weighted_cross(data.design(), &w)
}

/// Log-likelihood kernel `Σ {y_i θ_i − b(θ_i)}` with `θ = Xᵀβ`.
pub fn log_likelihood(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> f64 {
    let eta = data.linear_predictor(beta);
    eta.iter()
        .zip(data.response().iter())
        .map(|(t, y)| y * t - family.cumulant(*t))
        .sum()
}

/// Score scaled by `n⁻¹`: `n⁻¹ X (y − μ(β))`.
pub fn score(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> DVector<f64> {
    let mu = link_inverse(family, &data.linear_predictor(beta));
    data.design() * (data.response() - mu) / data.n() as f64
}

pub fn fit_mle(family: GlmFamily, data: &Dataset) -> Result<MleFit> {
    data.check_family(family)?;
    let gram = gram_matrix(data)?;
    match family {
        GlmFamily::Gaussian => fit_gaussian(data, gram),
        GlmFamily::Bernoulli => fit_irls(family, data, gram),
    }
}

fn fit_gaussian(data: &Dataset, gram: DMatrix<f64>) -> Result<MleFit> {
    let n = data.n();
    let p = data.p();
    let rhs = data.design() * data.response() / n as f64;
    let beta = cholesky(&gram, "gram matrix")?.solve(&rhs);
    let resid = data.response() - data.linear_predictor(&beta);
    let sigma2 = if n > p {
        resid.norm_squared() / (n - p) as f64
    } else {
        0.0
    };
    let ll = log_likelihood(GlmFamily::Gaussian, data, &beta);
    Ok(MleFit {
        family: GlmFamily::Gaussian,
        beta_hat: beta,
        gamma_hat: sigma2,
        info: gram.clone(),
        gram,
        n,
        p,
        iterations: 1,
        converged: true,
        loglik_path: vec![ll],
    })
}

fn fully_fitted(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> bool {
    let mu = link_inverse(family, &data.linear_predictor(beta));
    (data.response() - mu).iter().all(|r| r.abs() < 1e-6)
}

fn fit_irls(family: GlmFamily, data: &Dataset, gram: DMatrix<f64>) -> Result<MleFit> {
    let n = data.n();
    let p = data.p();
    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(family, data, &beta);
    let mut path = vec![ll];
    let mut last_step = f64::INFINITY;

    for iter in 1..=IRLS_MAX_ITER {
        let info = weighted_info(family, data, &beta);
        let chol = match cholesky(&info, "IRLS information") {
            Ok(c) => c,
            Err(e) => {
                return Err(if fully_fitted(family, data, &beta) {
                    Error::Separation
                } else {
                    e
                })
            }
        };
        let step = chol.solve(&score(family, data, &beta));
        last_step = max_abs(&step);
        if last_step < POLISH_MAX_STEP {
            beta = polish(family, data, beta);
            let info = weighted_info(family, data, &beta);
            if cholesky(&info, "IRLS information").is_err() {
                return Err(Error::Separation);
            }
            return Ok(MleFit {
                family,
                beta_hat: beta,
                gamma_hat: 1.0,
                info,
                gram,
                n,
                p,
                iterations: iter,
                converged: true,
                loglik_path: path,
            });
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &beta + &step * t;
            let cand_ll = log_likelihood(family, data, &cand);
            if cand_ll >= ll {
                accepted = Some((cand, cand_ll));
                break;
            }
            t *= 0.5;
        }
        // No step length improves the likelihood.
        let Some((cand, cand_ll)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: iter,
                last_step,
            });
        };
        beta = cand;
        ll = cand_ll;
        path.push(ll);

        if max_abs(&beta) > SEPARATION_THRESHOLD {
            return Err(Error::Separation);
        }
    }
    if fully_fitted(family, data, &beta) {
        return Err(Error::Separation);
    }
    Err(Error::NonConvergence {
        iterations: IRLS_MAX_ITER,
        last_step,
    })
}

/// Full Newton steps near the optimum, where likelihood comparisons are
/// dominated by rounding. Stops as soon as a step fails to shrink.
fn polish(family: GlmFamily, data: &Dataset, mut beta: DVector<f64>) -> DVector<f64> {
    let mut prev = f64::INFINITY;
    for _ in 0..4 {
        let info = weighted_info(family, data, &beta);
        let Ok(chol) = cholesky(&info, "IRLS information") else {
            break;
        };
        let step = chol.solve(&score(family, data, &beta));
        let size = max_abs(&step);
        if !(size < prev) || size > POLISH_MAX_STEP {
            break;
        }
        beta += step;
        prev = size;
    }
    beta
}
