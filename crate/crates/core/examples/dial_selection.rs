//! The estimated MSE curve over the dial, its minimizer and the lower bound
//! on the range of dials that beat the target MLE.

use infoshrink::prelude::*;
use infoshrink::select::{lambda_bound_gaussian, log_grid, DEFAULT_BRACKET};
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
    let mut rng = SimRng::new(3, 0, 0);
    let target = draw(&mut rng, 80, &[0.0, 1.0, 1.0, -1.0]);
    let source = draw(&mut rng, 300, &[0.2, 1.0, 0.8, -1.0]);

    let family = GlmFamily::Gaussian;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    let plugin = PluginMse::for_family(family, &fit, &summary)?;

    for lambda in log_grid(1e-3, 1e2, 11) {
        println!("lambda {lambda:>9.4}  estimated MSE {:.6}", plugin.eval(lambda)?);
    }
    let curve = plugin.select(DEFAULT_BRACKET)?;
    println!("minimizer {:.4} at {:.6}", curve.lambda_tilde, curve.mse_at_tilde);
    let delta = &fit.beta_hat - &summary.beta1_hat;
    let bound = lambda_bound_gaussian(&fit, &summary, &delta, fit.gamma_hat, fit.n)?;
    println!("every lambda below {bound:.4} beats the MLE");
    Ok(())
}
