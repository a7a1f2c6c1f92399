#![allow(dead_code)]

use infoshrink::data::Dataset;
use infoshrink::family::GlmFamily;
use infoshrink::sim::rng::SimRng;
use nalgebra::{DMatrix, DVector};

const X2: [[f64; 2]; 8] = [
    [0.5, -1.2],
    [-0.3, 0.8],
    [1.1, 0.4],
    [-1.4, -0.6],
    [0.2, 1.5],
    [0.9, -0.7],
    [-0.8, 0.1],
    [0.0, -0.2],
];
const X1: [[f64; 2]; 10] = [
    [0.3, -0.5],
    [-1.0, 0.9],
    [1.5, 0.2],
    [-0.6, -1.1],
    [0.7, 0.6],
    [-0.2, 1.3],
    [1.2, -0.9],
    [-1.3, 0.4],
    [0.4, 0.0],
    [-0.1, -0.4],
];

fn build(rows: &[[f64; 2]], y: &[f64]) -> Dataset {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    Dataset::from_rows(&rows, y.to_vec(), true).unwrap()
}

/// Small Gaussian target (n=8) and source (n=10), intercept plus two features.
pub fn gaussian_toy() -> (Dataset, Dataset) {
    (
        build(&X2, &[1.3, -0.4, 2.2, -1.9, 0.7, 1.8, -1.1, 0.3]),
        build(&X1, &[0.9, -1.5, 2.6, -1.0, 1.4, -0.2, 2.0, -2.1, 0.8, 0.1]),
    )
}

/// Binary outcomes on the same designs, chosen to avoid separation.
pub fn bernoulli_toy() -> (Dataset, Dataset) {
    (
        build(&X2, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
        build(&X1, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
    )
}

pub fn vec(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Intercept plus `p − 1` standard normal features, `p × n`.
pub fn random_design(rng: &mut SimRng, p: usize, n: usize, sd: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, n, |i, _| if i == 0 { 1.0 } else { sd * rng.normal() })
}

pub fn random_dataset(
    rng: &mut SimRng,
    family: GlmFamily,
    n: usize,
    beta: &DVector<f64>,
) -> Dataset {
    let x = random_design(rng, beta.len(), n, 1.0);
    let eta = x.tr_mul(beta);
    let y = eta.map(|e| match family {
        GlmFamily::Gaussian => e + rng.normal(),
        GlmFamily::Bernoulli => rng.bernoulli(family.mean(e)),
    });
    Dataset::new(x, y).unwrap()
}

pub fn random_vec(rng: &mut SimRng, p: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(p, |_, _| scale * rng.normal())
}

/// `AAᵀ/p + 0.1·I` for a random square `A`.
pub fn random_spd(rng: &mut SimRng, p: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.normal());
    &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.1
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}
