//! Sandwich intervals around the shrunk estimate next to Wald intervals for
//! the target MLE.

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
    let mut rng = SimRng::new(5, 0, 0);
    let target = draw(&mut rng, 50, &[1.0, -0.5, 0.25]);
    let source = draw(&mut rng, 500, &[1.0, -0.5, 0.25]);

    let family = GlmFamily::Gaussian;
    let summary = SourceSummary::fit(family, &source)?;
    let fit = fit_mle(family, &target)?;
    let est = solve_dial_estimate_with_fit(family, &target, &fit, &summary, 1.0)?;

    let shrunk = confidence_intervals(&est, 0.95)?;
    let wald = wald_intervals(&fit, 0.95)?;
    for j in 0..fit.p {
        println!(
            "beta[{j}]  shrunk [{:+.3}, {:+.3}]  wald [{:+.3}, {:+.3}]",
            shrunk.lower[j], shrunk.upper[j], wald.lower[j], wald.upper[j]
        );
    }
    Ok(())
}
