//! Choosing among three candidate sources, their concatenation, or none.

use infoshrink::multi_source::{select_source_config, SelectionMode};
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
    let mut rng = SimRng::new(17, 0, 0);
    let target = draw(&mut rng, 60, &[1.0, 1.0, 1.0]);
    let sources = vec![
        draw(&mut rng, 200, &[1.0, 3.0, 1.0]),
        draw(&mut rng, 200, &[1.0, 1.0, -2.0]),
        draw(&mut rng, 200, &[1.0, 1.0, 1.1]),
    ];

    let sel = select_source_config(GlmFamily::Gaussian, &target, &sources, SelectionMode::SinglesAndFull)?;
    for r in &sel.report {
        match (r.min_mse, r.lambda_tilde) {
            (Some(m), Some(l)) => println!("{:<8} MSE {m:.5}  lambda {l:.4}", r.config.id),
            _ => println!("{:<8} failed: {}", r.config.id, r.error.as_deref().unwrap_or("")),
        }
    }
    println!("chosen {}", sel.winner().config.id);
    println!("{}", sel.warning);
    Ok(())
}
