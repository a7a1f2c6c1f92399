//! Plug-in MSE curves, dial selection and the theoretical bounds on the
//! MSE-optimal dial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::linalg::{self, psd_part, sym_eigen};
use crate::mle::{self, MleFit};
use crate::shrink::{check_lambda, SourceSummary};

pub const GRID_POINTS: usize = 200;
pub const GRID_FLOOR: f64 = 1e-8;
pub const DEFAULT_BRACKET: (f64, f64) = (1e-8, 1e3);
pub const GOLDEN_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseCurve {
    pub lambda_grid: Vec<f64>,
    pub mse_values: Vec<f64>,
    pub lambda_tilde: f64,
    /// Curve value at `lambda_tilde`.
    pub mse_at_tilde: f64,
    pub lambda_lower_bound: Option<f64>,
    /// Curve value at `λ = 0`.
    pub at_zero: f64,
}

/// `(δ̂_pδ̂_pᵀ − σ̂²n₂⁻¹G₂⁻¹)₊`, or `δ̂_pδ̂_pᵀ` when every eigenvalue is negative.
pub fn delta_sq_hat(target_fit: &MleFit, source: &SourceSummary) -> Result<DMatrix<f64>> {
    let dp = &target_fit.beta_hat - &source.beta1_hat;
    let outer = &dp * dp.transpose();
    if target_fit.gamma_hat == 0.0 {
        return Ok(outer);
    }
    let g2_inv = linalg::spd_inverse(&target_fit.gram, "target gram")?;
    let raw = &outer - g2_inv * (target_fit.gamma_hat / target_fit.n as f64);
    let eig = sym_eigen(&raw);
    if eig.eigenvalues.iter().all(|&v| v < 0.0) {
        return Ok(outer);
    }
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return Ok(raw);
    }
    Ok(psd_part(&raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseParts {
    pub total: f64,
    pub variance: f64,
    pub bias: f64,
}

/// Exact MSE of the Gaussian estimator at fixed `λ` for known `σ²`, `δ`.
pub fn analytic_mse_gaussian(
    g1: &DMatrix<f64>,
    g2: &DMatrix<f64>,
    sigma2: f64,
    n2: usize,
    delta: &DVector<f64>,
    lambda: f64,
) -> Result<MseParts> {
    check_lambda(lambda)?;
    let s_inv = linalg::spd_inverse(&(g2 + g1 * lambda), "penalized Hessian")?;
    let variance = sigma2 / n2 as f64 * (&s_inv * g2 * &s_inv).trace();
    let b = &s_inv * g1 * delta * lambda;
    let bias = b.norm_squared();
    Ok(MseParts {
        total: variance + bias,
        variance,
        bias,
    })
}

/// Plug-in MSE evaluator with everything independent of `λ` precomputed.
#[derive(Debug, Clone, PartialEq)]
pub enum PluginMse {
    /// `n₂⁻¹σ̂²tr(S⁻²G₂) + λ²tr(S⁻¹G₁δ̂²G₁S⁻¹)`.
    Gaussian {
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
        sigma2: f64,
        n2: usize,
        delta_sq: DMatrix<f64>,
    },
    /// `d·tr(S⁻²V₂) + n₂n₁⁻²λ²‖S⁻¹X₁Δ‖²`, all at `β̂₂`.
    Glm {
        v2: DMatrix<f64>,
        v1: DMatrix<f64>,
        x1_delta: DVector<f64>,
        dispersion: f64,
        n1: usize,
        n2: usize,
    },
}

impl PluginMse {
    pub fn gaussian(target_fit: &MleFit, source: &SourceSummary) -> Result<Self> {
        source.check(GlmFamily::Gaussian, target_fit.p)?;
        Ok(PluginMse::Gaussian {
            g1: source.gram.clone(),
            g2: target_fit.gram.clone(),
            sigma2: target_fit.gamma_hat,
            n2: target_fit.n,
            delta_sq: delta_sq_hat(target_fit, source)?,
        })
    }

    pub fn glm(family: GlmFamily, target_fit: &MleFit, source: &SourceSummary) -> Result<Self> {
        source.check(family, target_fit.p)?;
        if source.design().is_none() {
            return Err(Error::PayloadMismatch(
                "the aMSE curve needs the source design".into(),
            ));
        }
        let b2 = &target_fit.beta_hat;
        Ok(PluginMse::Glm {
            v2: target_fit.info.clone(),
            v1: source.info_at(family, b2)?,
            x1_delta: source.x1_delta(family, b2)?,
            dispersion: target_fit.dispersion(),
            n1: source.n1,
            n2: target_fit.n,
        })
    }

    /// Gaussian curve for Gaussian targets, aMSE otherwise.
    pub fn for_family(family: GlmFamily, target_fit: &MleFit, source: &SourceSummary) -> Result<Self> {
        if family.is_gaussian() {
            PluginMse::gaussian(target_fit, source)
        } else {
            PluginMse::glm(family, target_fit, source)
        }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        match self {
            PluginMse::Gaussian {
                g1,
                g2,
                sigma2,
                n2,
                delta_sq,
            } => {
                let s_inv = linalg::spd_inverse(&(g2 + g1 * lambda), "penalized Hessian")?;
                let var = sigma2 / *n2 as f64 * (&s_inv * g2 * &s_inv).trace();
                let m = &s_inv * g1;
                let bias = lambda * lambda * (&m * delta_sq * m.transpose()).trace();
                Ok(var + bias)
            }
            PluginMse::Glm {
                v2,
                v1,
                x1_delta,
                dispersion,
                n1,
                n2,
            } => {
                let chol = linalg::cholesky(&(v2 + v1 * lambda), "penalized Hessian")?;
                let s_inv = chol.inverse();
                let var = dispersion * (&s_inv * v2 * &s_inv).trace();
                let b = chol.solve(x1_delta);
                let n1 = *n1 as f64;
                let bias = *n2 as f64 / (n1 * n1) * lambda * lambda * b.norm_squared();
                Ok(var + bias)
            }
        }
    }

    /// Curve value, with failures mapped to `+∞` so the search avoids them.
    pub fn eval_or_inf(&self, lambda: f64) -> f64 {
        self.eval(lambda).unwrap_or(f64::INFINITY)
    }

    /// Selects `λ̃` over `bracket`.
    pub fn select(&self, bracket: (f64, f64)) -> Result<MseCurve> {
        let mut curve = select_lambda(|l| self.eval_or_inf(l), bracket)?;
        curve.at_zero = self.eval(0.0)?;
        Ok(curve)
    }
}

pub fn estimated_mse_gaussian(target_fit: &MleFit, source: &SourceSummary, lambda: f64) -> Result<f64> {
    PluginMse::gaussian(target_fit, source)?.eval(lambda)
}

pub fn estimated_amse_glm(
    family: GlmFamily,
    target: &Dataset,
    target_fit: &MleFit,
    source: &SourceSummary,
    lambda: f64,
) -> Result<f64> {
    if target.n() != target_fit.n || target.p() != target_fit.p {
        return Err(Error::DimensionMismatch("target fit does not match target data".into()));
    }
    PluginMse::glm(family, target_fit, source)?.eval(lambda)
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == k - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (k - 1) as f64).exp()
            }
        })
        .collect()
}

/// Grid scan followed by golden-section refinement in `log λ`.
pub fn select_lambda(curve_fn: impl Fn(f64) -> f64, bracket: (f64, f64)) -> Result<MseCurve> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0) || !(hi > 0.0) || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid lambda bracket ({lo}, {hi})")));
    }
    let lo = lo.max(GRID_FLOOR);
    if lo >= hi {
        return Err(Error::invalid(format!("invalid lambda bracket ({lo}, {hi})")));
    }
    let grid = log_grid(lo, hi, GRID_POINTS);
    let values: Vec<f64> = grid.iter().map(|&l| curve_fn(l)).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(grid.len() - 1)];
    let (mut tilde, mut val) = (grid[best], values[best]);
    if values[best].is_finite() {
        let (x, fx) = golden_section(&curve_fn, a.ln(), b.ln());
        if fx < val {
            tilde = x;
            val = fx;
        }
    }
    Ok(MseCurve {
        lambda_grid: grid,
        mse_values: values,
        lambda_tilde: tilde,
        mse_at_tilde: val,
        lambda_lower_bound: None,
        at_zero: curve_fn(0.0),
    })
}

fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let g = |t: f64| f(t.exp());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    // An interval of width w in log λ is a relative tolerance of about w.
    while (b - a) > GOLDEN_RTOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = g(d);
        }
    }
    if fc <= fd {
        (c.exp(), fc)
    } else {
        (d.exp(), fd)
    }
}

/// `(σ²/n₂)·min_r(κ_r/g_r)/max_r δ_r²` from the two Gram matrices.
pub fn lambda_bound_from_grams(
    g1: &DMatrix<f64>,
    g2: &DMatrix<f64>,
    delta: &DVector<f64>,
    scale: f64,
) -> Result<f64> {
    let max_d2 = delta.iter().map(|d| d * d).fold(0.0, f64::max);
    if max_d2 == 0.0 {
        return Err(Error::ZeroDelta);
    }
    let g = linalg::sym_eigenvalues_sorted(g2);
    let root = linalg::sym_sqrt(g2);
    let g1_inv = linalg::spd_inverse(g1, "source information")?;
    let mut kappa = linalg::sym_eigenvalues_sorted(&(&root * g1_inv * &root));
    kappa.reverse();
    let ratio = kappa
        .iter()
        .zip(g.iter())
        .map(|(k, g)| k / g)
        .fold(f64::INFINITY, f64::min);
    Ok(scale * ratio / max_d2)
}

pub fn lambda_bound_gaussian(
    target_fit: &MleFit,
    source: &SourceSummary,
    delta: &DVector<f64>,
    sigma2: f64,
    n2: usize,
) -> Result<f64> {
    lambda_bound_from_grams(&source.gram, &target_fit.gram, delta, sigma2 / n2 as f64)
}

/// GLM analogue of the bound, evaluated at `beta_ref`.
pub fn lambda_bound_glm(
    family: GlmFamily,
    target: &Dataset,
    source: &SourceSummary,
    beta_ref: &DVector<f64>,
    dispersion: f64,
) -> Result<f64> {
    let v2 = mle::weighted_info(family, target, beta_ref);
    let v1 = source.info_at(family, beta_ref)?;
    let u = source.x1_delta(family, beta_ref)?;
    // max diag{v₁⁻¹uuᵀv₁⁻¹}/n₁² = max_r (v₁⁻¹u/n₁)_r².
    let w = linalg::spd_solve(&v1, &u, "source information")? / source.n1 as f64;
    lambda_bound_from_grams(&v1, &v2, &w, dispersion / target.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let c = select_lambda(|l| (l - 3.0).powi(2) + 1.0, (0.0, 10.0)).unwrap();
        assert!((c.lambda_tilde - 3.0).abs() < 1e-5);
        assert_eq!(c.at_zero, 10.0);
        assert_eq!(c.lambda_grid.len(), GRID_POINTS);
    }

    #[test]
    fn flat_curve_returns_smallest() {
        let c = select_lambda(|_| 2.0, (0.0, 10.0)).unwrap();
        assert_eq!(c.lambda_tilde, GRID_FLOOR);
    }

    #[test]
    fn identity_bound() {
        let i = DMatrix::<f64>::identity(3, 3);
        let mut d = DVector::zeros(3);
        d[0] = 1.0;
        let b = lambda_bound_from_grams(&i, &i, &d, 1.0 / 10.0).unwrap();
        assert!((b - 0.1).abs() < 1e-14);
        assert!((lambda_bound_from_grams(&i, &i, &(d * 2.0), 0.1).unwrap() - 0.025).abs() < 1e-14);
        assert_eq!(
            lambda_bound_from_grams(&i, &i, &DVector::zeros(3), 0.1),
            Err(Error::ZeroDelta)
        );
    }

    #[test]
    fn analytic_at_zero() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let m = analytic_mse_gaussian(&g, &g, 1.5, 20, &DVector::from_vec(vec![1.0, 1.0]), 0.0).unwrap();
        let want = 1.5 / 20.0 * linalg::spd_inverse(&g, "").unwrap().trace();
        assert!((m.total - want).abs() < 1e-14);
        assert_eq!(m.bias, 0.0);
    }
}
