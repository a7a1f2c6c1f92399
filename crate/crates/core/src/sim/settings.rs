//! Data generators for the simulation settings.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::rng::{SimRng, TAG_SOURCE, TAG_TARGET};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::mle::fit_mle;

pub const SETTING_I_BETA1: [f64; 11] = [1.0, -1.8, 2.6, 1.4, -3.6, 3.5, 2.4, -3.3, 1.8, -3.4, 2.8];
pub const SETTING_I_DELTA: [f64; 11] = [0.2, 0.1, 0.2, -0.1, 0.1, -0.1, 0.2, 0.2, 0.2, -0.1, 0.1];
pub const SETTING_II_BETA1: [f64; 5] = [1.0, -1.8, -1.2, 1.6, 0.2];
pub const SETTING_II_DELTA: [f64; 5] = [0.0, 0.25, 0.0, -0.25, 0.25];
pub const SETTING_III_BETA1: [f64; 3] = [1.0, -0.5, 0.5];
/// Coefficient of the omitted variable in the dropped-confounder case.
pub const SETTING_IV_Z_COEF: f64 = 1.0;
pub const SETTING_IV_DELTA: [f64; 11] = [0.0, 0.1, 0.0, -0.1, 0.1, -0.1, 0.0, 0.0, 0.0, -0.1, 0.1];
pub const MULTI_BASE: [f64; 4] = [1.0, -1.8, 2.6, 1.4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaChoice {
    Zero,
    Nonzero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScale {
    /// Features with standard deviation 0.75.
    Small,
    /// Features with standard deviation 3.
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLayout {
    /// Source features with variance 4, target features standard normal.
    Independent,
    /// Unit-variance features with pairwise correlation 0.4 in both data sets.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Misspecification {
    /// Standard Cauchy errors.
    Cauchy,
    /// A standard normal confounder enters the mean and is not recorded.
    DroppedZ,
    /// The mean is linear in the squared features.
    Squared,
}

/// A simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Setting {
    /// Gaussian, intercept plus ten standard normal features.
    I { n1: usize, n2: usize },
    /// Bernoulli, intercept plus four features of the given scale.
    II {
        delta: DeltaChoice,
        scale: FeatureScale,
        #[serde(default = "default_500")]
        n1: usize,
        #[serde(default = "default_500")]
        n2: usize,
    },
    /// Bernoulli, intercept plus two features; `δ = (0, shift, 0)`.
    III {
        features: FeatureLayout,
        shift: f64,
        #[serde(default)]
        n1: Option<usize>,
        #[serde(default)]
        n2: Option<usize>,
    },
    /// Gaussian target with a misspecified source model.
    IV {
        misspec: Misspecification,
        #[serde(default = "default_500")]
        n1: usize,
        #[serde(default = "default_500")]
        n2: usize,
    },
    MultiI,
    MultiII,
    MultiIII,
}

fn default_500() -> usize {
    500
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureDist {
    Iid { sd: f64 },
    Equicorrelated { rho: f64 },
}

impl FeatureDist {
    fn draw(&self, rng: &mut SimRng, k: usize) -> Vec<f64> {
        match *self {
            FeatureDist::Iid { sd } => (0..k).map(|_| sd * rng.normal()).collect(),
            FeatureDist::Equicorrelated { rho } => {
                // Shared factor model: x_j = √ρ·w + √(1−ρ)·z_j.
                let w = rng.normal();
                (0..k)
                    .map(|_| rho.sqrt() * w + (1.0 - rho).sqrt() * rng.normal())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Gaussian,
    Bernoulli,
    Cauchy,
    DroppedZ,
    Squared,
}

/// Recipe for one data set: `n` units, intercept plus `k` features.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub n: usize,
    pub k: usize,
    pub features: FeatureDist,
    outcome: Outcome,
    pub beta: DVector<f64>,
}

impl Recipe {
    pub fn draw(&self, rng: &mut SimRng) -> Dataset {
        let p = self.k + 1;
        let mut design = DMatrix::zeros(p, self.n);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            design[(0, i)] = 1.0;
            for (j, v) in self.features.draw(rng, self.k).into_iter().enumerate() {
                design[(j + 1, i)] = v;
            }
            let x = design.column(i);
            let eta = x.dot(&self.beta.rows(0, p));
            y[i] = match self.outcome {
                Outcome::Gaussian => eta + rng.normal(),
                Outcome::Bernoulli => rng.bernoulli(GlmFamily::Bernoulli.mean(eta)),
                Outcome::Cauchy => eta + rng.cauchy(),
                Outcome::DroppedZ => eta + self.beta[p] * rng.normal() + rng.normal(),
                Outcome::Squared => {
                    x.iter().zip(self.beta.iter()).map(|(v, b)| v * v * b).sum::<f64>()
                        + rng.normal()
                }
            };
        }
        Dataset::new(design, y).expect("generated data are well formed")
    }
}

/// A generated cell: fixed source data set(s) plus the target recipe.
#[derive(Debug, Clone)]
pub struct Cell {
    pub family: GlmFamily,
    pub sources: Vec<Dataset>,
    pub target: Recipe,
    /// The target parameter `β₂` every estimator is scored against.
    pub beta2: DVector<f64>,
    /// Coordinates whose coverage enters the median.
    pub coverage_coords: Vec<usize>,
    pub multi: bool,
}

impl Cell {
    pub fn draw_target(&self, master_seed: u64, replicate: u64) -> Dataset {
        let mut rng = SimRng::new(master_seed, TAG_TARGET, replicate);
        self.target.draw(&mut rng)
    }
}

impl Setting {
    pub fn family(&self) -> GlmFamily {
        match self {
            Setting::II { .. } | Setting::III { .. } => GlmFamily::Bernoulli,
            _ => GlmFamily::Gaussian,
        }
    }

    pub fn is_multi(&self) -> bool {
        matches!(self, Setting::MultiI | Setting::MultiII | Setting::MultiIII)
    }

    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        match self {
            Setting::I { n1, n2 } => format!("I(n1={n1},n2={n2})"),
            Setting::II { delta, scale, .. } => format!("II(delta={delta:?},scale={scale:?})"),
            Setting::III { features, shift, .. } => format!("III({features:?},shift={shift})"),
            Setting::IV { misspec, .. } => format!("IV({misspec:?})"),
            Setting::MultiI => "MultiI".into(),
            Setting::MultiII => "MultiII".into(),
            Setting::MultiIII => "MultiIII".into(),
        }
    }

    /// eMSE multiplier under `--paper-scale` (×10 or ×10²).
    pub fn table_scale(&self) -> f64 {
        match self {
            Setting::II { .. } => 10.0,
            _ => 100.0,
        }
    }

    fn sample_sizes(&self) -> (usize, usize) {
        match *self {
            Setting::I { n1, n2 } | Setting::II { n1, n2, .. } | Setting::IV { n1, n2, .. } => {
                (n1, n2)
            }
            Setting::III { features, n1, n2, .. } => {
                let (d1, d2) = match features {
                    FeatureLayout::Independent => (500, 500),
                    FeatureLayout::Correlated => (500, 100),
                };
                (n1.unwrap_or(d1), n2.unwrap_or(d2))
            }
            _ => (100, 50),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = match self {
            Setting::I { .. } | Setting::IV { .. } => 11,
            Setting::II { .. } => 5,
            Setting::III { .. } => 3,
            _ => 4,
        };
        let (n1, n2) = self.sample_sizes();
        if n1 <= p || n2 <= p {
            return Err(Error::invalid(format!(
                "setting.n1 and setting.n2 must exceed {p} (got {n1}, {n2})"
            )));
        }
        if let Setting::III { shift, .. } = self {
            if !shift.is_finite() {
                return Err(Error::invalid("setting.shift must be finite"));
            }
        }
        Ok(())
    }

    /// Draws the source data set(s) and fixes `β₂`.
    pub fn build_cell(&self, master_seed: u64) -> Result<Cell> {
        self.validate()?;
        let family = self.family();
        let (n1, n2) = self.sample_sizes();
        let source_rng = |j: u64| SimRng::new(master_seed, TAG_SOURCE, j);
        let vec = |s: &[f64]| DVector::from_column_slice(s);

        let single = |src: Recipe, target: Recipe, beta2: DVector<f64>, coords: Vec<usize>| {
            let data = src.draw(&mut source_rng(0));
            Cell {
                family,
                sources: vec![data],
                target: Recipe { beta: beta2.clone(), ..target },
                beta2,
                coverage_coords: coords,
                multi: false,
            }
        };
        // β₂ = β̂₁ + δ for the settings that centre on the source fit.
        let shifted = |cell: Cell, delta: DVector<f64>| -> Result<Cell> {
            let fit = fit_mle(family, &cell.sources[0])?;
            let beta2 = fit.beta_hat + delta;
            Ok(Cell {
                target: Recipe { beta: beta2.clone(), ..cell.target },
                beta2,
                ..cell
            })
        };

        match *self {
            Setting::I { .. } => {
                let iid = FeatureDist::Iid { sd: 1.0 };
                let src = recipe(n1, 10, iid, Outcome::Gaussian, vec(&SETTING_I_BETA1));
                let tgt = recipe(n2, 10, iid, Outcome::Gaussian, vec(&SETTING_I_BETA1));
                let cell = single(src, tgt, vec(&SETTING_I_BETA1), (0..11).collect());
                shifted(cell, vec(&SETTING_I_DELTA))
            }
            Setting::II { delta, scale, .. } => {
                let sd = match scale {
                    FeatureScale::Small => 0.75,
                    FeatureScale::Large => 3.0,
                };
                let f = FeatureDist::Iid { sd };
                let b1 = vec(&SETTING_II_BETA1);
                let src = recipe(n1, 4, f, Outcome::Bernoulli, b1.clone());
                let tgt = recipe(n2, 4, f, Outcome::Bernoulli, b1.clone());
                let cell = single(src, tgt, b1, (0..5).collect());
                let d = match delta {
                    DeltaChoice::Zero => DVector::zeros(5),
                    DeltaChoice::Nonzero => vec(&SETTING_II_DELTA),
                };
                shifted(cell, d)
            }
            Setting::III { features, shift, .. } => {
                let (fs, ft) = match features {
                    FeatureLayout::Independent => {
                        (FeatureDist::Iid { sd: 2.0 }, FeatureDist::Iid { sd: 1.0 })
                    }
                    FeatureLayout::Correlated => (
                        FeatureDist::Equicorrelated { rho: 0.4 },
                        FeatureDist::Equicorrelated { rho: 0.4 },
                    ),
                };
                let b1 = vec(&SETTING_III_BETA1);
                let src = recipe(n1, 2, fs, Outcome::Bernoulli, b1.clone());
                let tgt = recipe(n2, 2, ft, Outcome::Bernoulli, b1.clone());
                let cell = single(src, tgt, b1, vec![1, 2]);
                shifted(cell, vec(&[0.0, shift, 0.0]))
            }
            Setting::IV { misspec, .. } => {
                let iid = FeatureDist::Iid { sd: 1.0 };
                let mut b1: Vec<f64> = SETTING_I_BETA1.to_vec();
                b1.push(SETTING_IV_Z_COEF);
                let outcome = match misspec {
                    Misspecification::Cauchy => Outcome::Cauchy,
                    Misspecification::DroppedZ => Outcome::DroppedZ,
                    Misspecification::Squared => Outcome::Squared,
                };
                let beta2 = vec(&SETTING_I_BETA1) + vec(&SETTING_IV_DELTA);
                let src = recipe(n1, 10, iid, outcome, DVector::from_vec(b1));
                let tgt = recipe(n2, 10, iid, Outcome::Gaussian, beta2.clone());
                Ok(single(src, tgt, beta2, (0..11).collect()))
            }
            Setting::MultiI | Setting::MultiII | Setting::MultiIII => {
                let (offsets, target_off): ([[f64; 4]; 3], [f64; 4]) = match self {
                    Setting::MultiI => (
                        [[0.25, 0.0, 0.0, 0.0], [0.0, 0.25, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
                        [0.0, 0.0, 1.25, 0.0],
                    ),
                    Setting::MultiII => (
                        [[0.25, 0.0, 0.0, 0.0], [0.0, 0.25, 0.0, 0.0], [0.0, 0.0, 0.25, 0.0]],
                        [0.0, 0.0, 0.0, 0.25],
                    ),
                    _ => (
                        [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
                        [0.0, 0.0, 0.0, 1.0],
                    ),
                };
                let base = vec(&MULTI_BASE);
                let iid = FeatureDist::Iid { sd: 1.0 };
                let sources = offsets
                    .iter()
                    .enumerate()
                    .map(|(j, off)| {
                        recipe(n1, 3, iid, Outcome::Gaussian, &base + vec(off))
                            .draw(&mut source_rng(j as u64))
                    })
                    .collect();
                let beta2 = &base + vec(&target_off);
                Ok(Cell {
                    family,
                    sources,
                    target: recipe(n2, 3, iid, Outcome::Gaussian, beta2.clone()),
                    beta2,
                    coverage_coords: (0..4).collect(),
                    multi: true,
                })
            }
        }
    }
}

fn recipe(n: usize, k: usize, features: FeatureDist, outcome: Outcome, beta: DVector<f64>) -> Recipe {
    Recipe {
        n,
        k,
        features,
        outcome,
        beta,
    }
}
