//! Shrinkage path for a logistic model: estimate, sandwich standard errors
//! and estimated MSE at each dial value.

use infoshrink::prelude::*;
use infoshrink::select::log_grid;
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
    let mut rng = SimRng::new(23, 0, 0);
    let target = draw(&mut rng, 200, &[0.3, 0.7]);
    let source = draw(&mut rng, 800, &[0.2, 0.9]);

    let family = GlmFamily::Bernoulli;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    let plugin = PluginMse::for_family(family, &fit, &summary)?;
    println!("lambda,beta0,beta1,se0,se1,est_mse");
    for lambda in log_grid(1e-2, 1e2, 9) {
        let est = solve_dial_estimate_with_fit(family, &target, &fit, &summary, lambda)?;
        let se = est.standard_errors();
        println!(
            "{lambda:.4},{:.4},{:.4},{:.4},{:.4},{:.3}",
            est.beta_tilde[0], est.beta_tilde[1], se[0], se[1], plugin.eval(lambda)?
        );
    }
    Ok(())
}
