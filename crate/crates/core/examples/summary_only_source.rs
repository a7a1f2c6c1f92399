//! Borrowing from a Gaussian source known only through its fitted
//! coefficients, Gram matrix and sample size.

use infoshrink::io::{parse_gaussian_summary, GaussianSummaryFile};
use infoshrink::prelude::*;
use nalgebra::{DMatrix, DVector};

fn main() -> Result<()> {
    let x = DMatrix::from_row_slice(2, 8, &[
        1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0,
    ]);
    let y = DVector::from_vec(vec![-2.1, -1.4, -0.2, 0.3, 1.2, 1.6, 2.9, 3.8]);
    let target = Dataset::new(x, y)?;

    let json = r#"{
        "n1": 400,
        "beta1_hat": [0.25, 1.5],
        "gram": [[1.0, 0.1], [0.1, 1.2]],
        "sigma2_hat": 1.1
    }"#;
    let summary = parse_gaussian_summary(json)?;

    let family = GlmFamily::Gaussian;
    let fit = fit_mle(family, &target)?;
    let curve = PluginMse::for_family(family, &fit, &summary)?
        .select(infoshrink::select::DEFAULT_BRACKET)?;
    let est = solve_dial_estimate_with_fit(family, &target, &fit, &summary, curve.lambda_tilde)?;
    println!("lambda {:.4}: {:.4?}", est.lambda, est.beta_tilde.as_slice());

    // A fitted target can itself be published as a summary.
    let out = GaussianSummaryFile::from_fit(&fit);
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}
