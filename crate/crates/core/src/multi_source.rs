//! Concatenating several source data sets and choosing which ones to borrow
//! from by comparing minimized estimated MSE.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::mle::{fit_mle, MleFit};
use crate::select::{PluginMse, DEFAULT_BRACKET};
use crate::shrink::{solve_dial_estimate_with_fit, SourceSummary};

pub const MAX_EXHAUSTIVE_SOURCES: usize = 10;

pub const SELECTION_WARNING: &str =
    "intervals computed after choosing a source configuration do not account for the selection step";

/// Column-concatenates designs and appends responses, in order.
pub fn concat_sources(sources: &[Dataset]) -> Result<Dataset> {
    let first = sources
        .first()
        .ok_or_else(|| Error::invalid("no source data sets supplied"))?;
    let p = first.p();
    if let Some(bad) = sources.iter().find(|d| d.p() != p) {
        return Err(Error::DimensionMismatch(format!(
            "sources have {p} and {} features",
            bad.p()
        )));
    }
    if sources.len() == 1 {
        return Ok(first.clone());
    }
    let n: usize = sources.iter().map(Dataset::n).sum();
    let mut design = DMatrix::zeros(p, n);
    let mut response = DVector::zeros(n);
    let mut at = 0;
    for d in sources {
        design.columns_mut(at, d.n()).copy_from(d.design());
        response.rows_mut(at, d.n()).copy_from(d.response());
        at += d.n();
    }
    Dataset::new(design, response)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    SinglesAndFull,
    AllSubsets,
}

impl std::str::FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "singles_and_full" | "singles" => Ok(SelectionMode::SinglesAndFull),
            "all_subsets" | "all" => Ok(SelectionMode::AllSubsets),
            other => Err(Error::invalid(format!("unknown selection mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceConfig {
    pub id: String,
    /// Zero-based source indices; empty means target only.
    pub members: Vec<usize>,
}

impl SourceConfig {
    pub fn new(members: Vec<usize>) -> Self {
        let id = if members.is_empty() {
            "{}".to_string()
        } else {
            let inner: Vec<String> = members.iter().map(|m| (m + 1).to_string()).collect();
            format!("{{{}}}", inner.join(","))
        };
        SourceConfig { id, members }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn enumerate_configs(m: usize, mode: SelectionMode) -> Result<Vec<SourceConfig>> {
    if m == 0 {
        return Err(Error::invalid("need at least one source"));
    }
    match mode {
        SelectionMode::SinglesAndFull => {
            let mut out: Vec<SourceConfig> = (0..m).map(|i| SourceConfig::new(vec![i])).collect();
            if m > 1 {
                out.push(SourceConfig::new((0..m).collect()));
            }
            out.push(SourceConfig::new(vec![]));
            Ok(out)
        }
        SelectionMode::AllSubsets => {
            if m > MAX_EXHAUSTIVE_SOURCES {
                return Err(Error::TooManySources(m));
            }
            Ok((0..1usize << m)
                .map(|mask| SourceConfig::new((0..m).filter(|i| mask >> i & 1 == 1).collect()))
                .collect())
        }
    }
}

/// Concatenates the members of `config` and fits the source summary.
pub fn assemble_config(
    family: GlmFamily,
    sources: &[Dataset],
    config: &SourceConfig,
) -> Result<Option<SourceSummary>> {
    if config.is_empty() {
        return Ok(None);
    }
    if let Some(&bad) = config.members.iter().find(|&&i| i >= sources.len()) {
        return Err(Error::invalid(format!("source index {} out of range", bad + 1)));
    }
    let members: Vec<Dataset> = config.members.iter().map(|&i| sources[i].clone()).collect();
    let data = concat_sources(&members)?;
    SourceSummary::fit(family, &data).map(Some)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigReport {
    pub config: SourceConfig,
    /// Minimized estimated (a)MSE; `None` when the configuration failed.
    pub min_mse: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub beta_tilde: Option<DVector<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSelection {
    /// Index into `report` of the winning configuration.
    pub best: usize,
    pub report: Vec<ConfigReport>,
    pub warning: &'static str,
}

impl SourceSelection {
    pub fn winner(&self) -> &ConfigReport {
        &self.report[self.best]
    }
}

/// Plug-in MSE of the target MLE, on the same scale as the curve used for
/// the family (MSE for Gaussian, aMSE otherwise).
pub fn mle_plugin_mse(family: GlmFamily, target_fit: &MleFit) -> Result<f64> {
    let tr = target_fit.covariance()?.trace();
    Ok(if family.is_gaussian() {
        tr
    } else {
        tr * target_fit.n as f64
    })
}

/// Scores one assembled configuration against a fitted target.
pub fn score_config(
    family: GlmFamily,
    target: &Dataset,
    target_fit: &MleFit,
    config: &SourceConfig,
    summary: Option<&SourceSummary>,
) -> ConfigReport {
    let run = || -> Result<(f64, f64, DVector<f64>)> {
        match summary {
            None => Ok((mle_plugin_mse(family, target_fit)?, 0.0, target_fit.beta_hat.clone())),
            Some(src) => {
                let curve = PluginMse::for_family(family, target_fit, src)?.select(DEFAULT_BRACKET)?;
                let est = solve_dial_estimate_with_fit(
                    family,
                    target,
                    target_fit,
                    src,
                    curve.lambda_tilde,
                )?;
                Ok((curve.mse_at_tilde, curve.lambda_tilde, est.beta_tilde))
            }
        }
    };
    match run() {
        Ok((m, l, b)) => ConfigReport {
            config: config.clone(),
            min_mse: Some(m),
            lambda_tilde: Some(l),
            beta_tilde: Some(b),
            error: None,
        },
        Err(e) => ConfigReport {
            config: config.clone(),
            min_mse: None,
            lambda_tilde: None,
            beta_tilde: None,
            error: Some(e.to_string()),
        },
    }
}

/// Picks the configuration with the smallest entry; ties go to the earlier one.
pub fn pick_best(report: &[ConfigReport]) -> Result<usize> {
    report
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.min_mse.map(|m| (i, m)))
        .fold(None, |best: Option<(usize, f64)>, (i, m)| match best {
            Some((_, bm)) if bm <= m => best,
            _ => Some((i, m)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("every source configuration failed"))
}

pub fn select_source_config(
    family: GlmFamily,
    target: &Dataset,
    sources: &[Dataset],
    mode: SelectionMode,
) -> Result<SourceSelection> {
    let target_fit = fit_mle(family, target)?;
    let configs = enumerate_configs(sources.len(), mode)?;
    let report: Vec<ConfigReport> = configs
        .par_iter()
        .map(|c| match assemble_config(family, sources, c) {
            Ok(s) => score_config(family, target, &target_fit, c, s.as_ref()),
            Err(e) => ConfigReport {
                config: c.clone(),
                min_mse: None,
                lambda_tilde: None,
                beta_tilde: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let best = pick_best(&report)?;
    Ok(SourceSelection {
        best,
        report,
        warning: SELECTION_WARNING,
    })
}
