//! Competing transfer estimators on one data pair: target MLE, pooled MLE,
//! the data-enriched estimator and the weighted estimator.

use infoshrink::baselines::{chen_owen_shi, chen_owen_shi_lambda_hat, pooled_mle, zheng_weight_estimator};
use infoshrink::prelude::*;
use infoshrink::sim::rng::SimRng;
use nalgebra::{DMatrix, DVector};

fn draw(rng: &mut SimRng, n: usize, beta: &[f64]) -> Dataset {
    let p = beta.len();
    let x = DMatrix::from_fn(p, n, |j, _| if j == 0 { 1.0 } else { rng.normal() });
    let y = DVector::from_fn(n, |i, _| {
        (0..p).map(|j| x[(j, i)] * beta[j]).sum::<f64>() + rng.normal()
    });
    Dataset::new(x, y).unwrap()
}

fn main() -> Result<()> {
    let truth = DVector::from_vec(vec![0.5, 1.0, -1.0]);
    let mut rng = SimRng::new(29, 0, 0);
    let target = draw(&mut rng, 80, truth.as_slice());
    let source = draw(&mut rng, 400, &[0.5, 1.2, -1.0]);

    let family = GlmFamily::Gaussian;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    let lambda = PluginMse::for_family(family, &fit, &summary)?
        .select(infoshrink::select::DEFAULT_BRACKET)?
        .lambda_tilde;
    let cos_lambda = chen_owen_shi_lambda_hat(&fit, &summary)?.lambda_tilde;

    let rows = [
        ("mle", fit.beta_hat.clone()),
        ("pooled", pooled_mle(family, &target, &source)?.beta_hat),
        ("ise", solve_dial_estimate_with_fit(family, &target, &fit, &summary, lambda)?.beta_tilde),
        ("enriched", chen_owen_shi(&fit, &summary, cos_lambda)?),
        ("weighted", zheng_weight_estimator(family, &fit, &summary)?),
    ];
    for (name, b) in rows {
        println!("{name:<9} {:.4?}  squared error {:.5}", b.as_slice(), (&b - &truth).norm_squared());
    }
    Ok(())
}
