//! Linear regression on a small target borrowing from a larger source with a
//! slightly different coefficient vector. Prints the path of β̃(λ) and the
//! selected dial.

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
    let mut rng = SimRng::new(7, 0, 0);
    let target = draw(&mut rng, 60, &[1.0, 0.5, -0.3]);
    let source = draw(&mut rng, 400, &[1.0, 0.6, -0.2]);

    let family = GlmFamily::Gaussian;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    println!("target MLE  {:.4?}", fit.beta_hat.as_slice());
    println!("source fit  {:.4?}", summary.beta1_hat.as_slice());

    for lambda in [0.0, 0.1, 1.0, 10.0, 1000.0] {
        let est = solve_dial_estimate_with_fit(family, &target, &fit, &summary, lambda)?;
        println!("lambda {lambda:>7}: {:.4?}", est.beta_tilde.as_slice());
    }

    let curve = PluginMse::for_family(family, &fit, &summary)?
        .select(infoshrink::select::DEFAULT_BRACKET)?;
    println!(
        "selected lambda {:.4}, estimated MSE {:.5} (MLE {:.5})",
        curve.lambda_tilde, curve.mse_at_tilde, curve.at_zero
    );
    Ok(())
}
