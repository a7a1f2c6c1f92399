//! Logistic regression with a KL penalty toward a source fit, solved by
//! Newton's method.

use infoshrink::prelude::*;
use infoshrink::shrink::kl_divergence;
use infoshrink::sim::rng::SimRng;
use nalgebra::{DMatrix, DVector};

fn draw(rng: &mut SimRng, n: usize, beta: &[f64]) -> Dataset {
    let p = beta.len();
    let x = DMatrix::from_fn(p, n, |j, _| if j == 0 { 1.0 } else { rng.normal() });
    let y = DVector::from_fn(n, |i, _| {
        let eta: f64 = (0..p).map(|j| x[(j, i)] * beta[j]).sum();
        rng.bernoulli(GlmFamily::Bernoulli.mean(eta))
    });
    Dataset::new(x, y).unwrap()
}

fn main() -> Result<()> {
    let mut rng = SimRng::new(11, 0, 0);
    let target = draw(&mut rng, 150, &[-0.5, 1.0, 0.5]);
    let source = draw(&mut rng, 1000, &[-0.5, 0.8, 0.5]);

    let family = GlmFamily::Bernoulli;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    let curve = PluginMse::for_family(family, &fit, &summary)?
        .select(infoshrink::select::DEFAULT_BRACKET)?;
    let est = solve_dial_estimate_with_fit(family, &target, &fit, &summary, curve.lambda_tilde)?;

    println!("target MLE   {:.4?}", fit.beta_hat.as_slice());
    println!("source fit   {:.4?}", summary.beta1_hat.as_slice());
    println!("lambda       {:.4}", est.lambda);
    println!("shrunk       {:.4?}", est.beta_tilde.as_slice());
    println!("Newton steps {}, |psi| {:.1e}", est.iterations, est.psi_norm);
    println!(
        "KL to source: MLE {:.4}, shrunk {:.4}",
        kl_divergence(family, &summary, &fit.beta_hat)?,
        kl_divergence(family, &summary, &est.beta_tilde)?
    );
    Ok(())
}
