//! Replicate execution and summary metrics.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::settings::{Cell, Setting};
use crate::baselines;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::inference::{confidence_intervals, wald_intervals, IntervalSet};
use crate::mle::fit_mle;
use crate::multi_source::{enumerate_configs, pick_best, score_config, SelectionMode};
use crate::select::{PluginMse, DEFAULT_BRACKET};
use crate::shrink::{solve_dial_estimate_with_fit, SourceSummary};

/// Relative slack used when comparing interval half-widths.
const WIDTH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// The shrinkage estimator at the selected dial.
    Ise,
    Mle,
    Pooled,
    ChenOwenShi,
    Zheng,
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::Ise => "ise",
            Estimator::Mle => "mle",
            Estimator::Pooled => "pooled",
            Estimator::ChenOwenShi => "chen_owen_shi",
            Estimator::Zheng => "zheng",
        }
    }

    pub fn defaults_for(setting: &Setting) -> Vec<Estimator> {
        if setting.is_multi() {
            return vec![];
        }
        match setting.family() {
            GlmFamily::Gaussian => vec![
                Estimator::Ise,
                Estimator::ChenOwenShi,
                Estimator::Pooled,
                Estimator::Mle,
            ],
            GlmFamily::Bernoulli => {
                vec![Estimator::Ise, Estimator::Zheng, Estimator::Pooled, Estimator::Mle]
            }
        }
    }
}

fn default_bracket() -> (f64, f64) {
    DEFAULT_BRACKET
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub setting: Setting,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default = "default_bracket")]
    pub lambda_bracket: (f64, f64),
    /// Defaults to every estimator applicable to the setting.
    #[serde(default)]
    pub estimators: Option<Vec<Estimator>>,
    #[serde(default)]
    pub retain_raw: bool,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl SimConfig {
    pub fn new(setting: Setting, replicates: usize, master_seed: u64) -> Self {
        SimConfig {
            setting,
            replicates,
            master_seed,
            lambda_bracket: DEFAULT_BRACKET,
            estimators: None,
            retain_raw: false,
            level: 0.95,
        }
    }

    /// Fills defaults so the written config fully describes the run.
    pub fn resolved(&self) -> SimConfig {
        let mut c = self.clone();
        if c.estimators.is_none() {
            c.estimators = Some(Estimator::defaults_for(&c.setting));
        }
        c
    }

    pub fn estimator_list(&self) -> Vec<Estimator> {
        self.estimators
            .clone()
            .unwrap_or_else(|| Estimator::defaults_for(&self.setting))
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.validate()?;
        if self.replicates == 0 {
            return Err(Error::invalid("replicates: must be at least 1"));
        }
        let (lo, hi) = self.lambda_bracket;
        if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "lambda_bracket: need 0 <= lo < hi < inf, got ({lo}, {hi})"
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level: must lie in (0, 1)"));
        }
        let family = self.setting.family();
        for e in self.estimator_list() {
            if e == Estimator::ChenOwenShi && !family.is_gaussian() {
                return Err(Error::invalid(
                    "estimators: chen_owen_shi applies to Gaussian settings only",
                ));
            }
        }
        if self.setting.is_multi() && self.estimators.as_ref().is_some_and(|e| !e.is_empty()) {
            return Err(Error::invalid(
                "estimators: multi-source settings score source configurations, not estimators",
            ));
        }
        Ok(())
    }
}

/// Outcome of one estimator on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRecord {
    pub replicate: usize,
    pub estimator: String,
    /// `‖β̂ − β₂‖²`; `None` when the estimator failed.
    pub sq_error: Option<f64>,
    pub lambda: Option<f64>,
    /// Per-coordinate coverage indicators.
    pub covered: Option<Vec<bool>>,
    /// Whether every interval half-width is at most the Wald half-width.
    pub narrower_than_wald: Option<bool>,
    /// Minimized estimated MSE (source-configuration rows).
    pub est_mse: Option<f64>,
    pub error: Option<String>,
}

impl EstimatorRecord {
    fn failed(replicate: usize, estimator: &str, e: &Error) -> Self {
        EstimatorRecord {
            replicate,
            estimator: estimator.to_string(),
            sq_error: None,
            lambda: None,
            covered: None,
            narrower_than_wald: None,
            est_mse: None,
            error: Some(e.to_string()),
        }
    }

    fn ok(replicate: usize, estimator: &str, beta: &DVector<f64>, truth: &DVector<f64>) -> Self {
        EstimatorRecord {
            replicate,
            estimator: estimator.to_string(),
            sq_error: Some((beta - truth).norm_squared()),
            lambda: None,
            covered: None,
            narrower_than_wald: None,
            est_mse: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub replicates: usize,
    pub failures: usize,
    pub emse: f64,
    pub mcse: f64,
    /// Median over coordinates of the empirical coverage.
    pub coverage: Option<f64>,
    pub mean_lambda: Option<f64>,
    pub sd_lambda: Option<f64>,
    /// Share of replicates whose intervals were no wider than Wald's.
    pub narrower_share: Option<f64>,
    /// Share of replicates in which this configuration had the smallest
    /// estimated MSE among all configurations.
    pub win_share: Option<f64>,
    /// Same, among single-source configurations only.
    pub single_win_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub setting: String,
    pub table_scale: f64,
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub raw: Vec<EstimatorRecord>,
}

impl SummaryTable {
    pub fn row(&self, estimator: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

/// Runs every replicate of `config` on the current rayon pool.
pub fn run_setting(config: &SimConfig) -> Result<SummaryTable> {
    config.validate()?;
    let cell = config.setting.build_cell(config.master_seed)?;
    let records: Vec<Vec<EstimatorRecord>> = if cell.multi {
        let prepared = prepare_multi(&cell)?;
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_multi_replicate(config, &cell, &prepared, r))
            .collect()
    } else {
        let source = SourceSummary::fit(cell.family, &cell.sources[0])?;
        let estimators = config.estimator_list();
        (0..config.replicates)
            .into_par_iter()
            .map(|r| run_replicate(config, &cell, &source, &estimators, r))
            .collect()
    };
    let raw: Vec<EstimatorRecord> = records.into_iter().flatten().collect();
    summarize(config, &cell, raw)
}

/// Runs with at most `threads` worker threads.
pub fn run_setting_with_threads(config: &SimConfig, threads: Option<usize>) -> Result<SummaryTable> {
    match threads {
        None => run_setting(config),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_setting(config))
        }
    }
}

fn coverage_flags(ci: &IntervalSet, truth: &DVector<f64>) -> Vec<bool> {
    ci.covers(truth)
}

/// One replicate of a single-source setting.
pub fn run_replicate(
    config: &SimConfig,
    cell: &Cell,
    source: &SourceSummary,
    estimators: &[Estimator],
    r: usize,
) -> Vec<EstimatorRecord> {
    let family = cell.family;
    let target = cell.draw_target(config.master_seed, r as u64);
    let truth = &cell.beta2;
    let fit = match fit_mle(family, &target) {
        Ok(f) => f,
        Err(e) => {
            return estimators
                .iter()
                .map(|est| EstimatorRecord::failed(r, est.label(), &e))
                .collect()
        }
    };
    let wald = wald_intervals(&fit, config.level);

    estimators
        .iter()
        .map(|&est| {
            let label = est.label();
            let res: Result<EstimatorRecord> = (|| match est {
                Estimator::Ise => {
                    let curve = PluginMse::for_family(family, &fit, source)?
                        .select(config.lambda_bracket)?;
                    let dial = solve_dial_estimate_with_fit(
                        family,
                        &target,
                        &fit,
                        source,
                        curve.lambda_tilde,
                    )?;
                    let ci = confidence_intervals(&dial, config.level)?;
                    let wald = wald.clone()?;
                    let hw = ci.half_widths();
                    let hw0 = wald.half_widths();
                    let narrower = (0..hw.len()).all(|j| hw[j] <= hw0[j] * (1.0 + WIDTH_SLACK));
                    let mut rec = EstimatorRecord::ok(r, label, &dial.beta_tilde, truth);
                    rec.lambda = Some(curve.lambda_tilde);
                    rec.covered = Some(coverage_flags(&ci, truth));
                    rec.narrower_than_wald = Some(narrower);
                    rec.est_mse = Some(curve.mse_at_tilde);
                    Ok(rec)
                }
                Estimator::Mle => {
                    let mut rec = EstimatorRecord::ok(r, label, &fit.beta_hat, truth);
                    rec.covered = Some(coverage_flags(&wald.clone()?, truth));
                    Ok(rec)
                }
                Estimator::Pooled => {
                    let pooled = baselines::pooled_mle(family, &target, &cell.sources[0])?;
                    let ci = wald_intervals(&pooled, config.level)?;
                    let mut rec = EstimatorRecord::ok(r, label, &pooled.beta_hat, truth);
                    rec.covered = Some(coverage_flags(&ci, truth));
                    Ok(rec)
                }
                Estimator::ChenOwenShi => {
                    let curve =
                        baselines::chen_owen_shi_lambda_hat_in(&fit, source, config.lambda_bracket)?;
                    let b = baselines::chen_owen_shi(&fit, source, curve.lambda_tilde)?;
                    let mut rec = EstimatorRecord::ok(r, label, &b, truth);
                    rec.lambda = Some(curve.lambda_tilde);
                    Ok(rec)
                }
                Estimator::Zheng => {
                    let b = baselines::zheng_weight_estimator(family, &fit, source)?;
                    Ok(EstimatorRecord::ok(r, label, &b, truth))
                }
            })();
            res.unwrap_or_else(|e| EstimatorRecord::failed(r, label, &e))
        })
        .collect()
}

struct PreparedMulti {
    configs: Vec<crate::multi_source::SourceConfig>,
    summaries: Vec<Option<SourceSummary>>,
}

fn prepare_multi(cell: &Cell) -> Result<PreparedMulti> {
    let configs = enumerate_configs(cell.sources.len(), SelectionMode::SinglesAndFull)?;
    let summaries = configs
        .iter()
        .map(|c| crate::multi_source::assemble_config(cell.family, &cell.sources, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedMulti { configs, summaries })
}

fn config_label(c: &crate::multi_source::SourceConfig) -> String {
    format!("ise{}", c.id)
}

fn run_multi_replicate(
    config: &SimConfig,
    cell: &Cell,
    prepared: &PreparedMulti,
    r: usize,
) -> Vec<EstimatorRecord> {
    let target = cell.draw_target(config.master_seed, r as u64);
    let fit = match fit_mle(cell.family, &target) {
        Ok(f) => f,
        Err(e) => {
            return prepared
                .configs
                .iter()
                .map(|c| EstimatorRecord::failed(r, &config_label(c), &e))
                .collect()
        }
    };
    prepared
        .configs
        .iter()
        .zip(prepared.summaries.iter())
        .map(|(c, s)| {
            let rep = score_config(cell.family, &target, &fit, c, s.as_ref());
            let label = config_label(c);
            match (&rep.beta_tilde, rep.min_mse) {
                (Some(b), Some(m)) => {
                    let mut rec = EstimatorRecord::ok(r, &label, b, &cell.beta2);
                    rec.lambda = rep.lambda_tilde;
                    rec.est_mse = Some(m);
                    rec
                }
                _ => EstimatorRecord::failed(
                    r,
                    &label,
                    &Error::invalid(rep.error.unwrap_or_default()),
                ),
            }
        })
        .collect()
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

fn summarize(config: &SimConfig, cell: &Cell, raw: Vec<EstimatorRecord>) -> Result<SummaryTable> {
    let mut labels: Vec<String> = Vec::new();
    for rec in &raw {
        if !labels.contains(&rec.estimator) {
            labels.push(rec.estimator.clone());
        }
    }
    let n_rep = config.replicates;
    let mut warnings = Vec::new();

    // Winners among configurations, per replicate.
    let mut wins: std::collections::HashMap<String, (usize, usize)> = Default::default();
    if cell.multi {
        let singles: Vec<String> = labels
            .iter()
            .filter(|l| l.starts_with("ise{") && !l.contains(',') && l.as_str() != "ise{}")
            .cloned()
            .collect();
        for chunk in raw.chunks(labels.len()) {
            let best_of = |pool: &[&EstimatorRecord]| -> Option<String> {
                let reports: Vec<crate::multi_source::ConfigReport> = pool
                    .iter()
                    .map(|r| crate::multi_source::ConfigReport {
                        config: crate::multi_source::SourceConfig::new(vec![]),
                        min_mse: r.est_mse,
                        lambda_tilde: None,
                        beta_tilde: None,
                        error: None,
                    })
                    .collect();
                pick_best(&reports).ok().map(|i| pool[i].estimator.clone())
            };
            let all: Vec<&EstimatorRecord> = chunk.iter().collect();
            if let Some(w) = best_of(&all) {
                wins.entry(w).or_default().0 += 1;
            }
            let single: Vec<&EstimatorRecord> =
                chunk.iter().filter(|r| singles.contains(&r.estimator)).collect();
            if let Some(w) = best_of(&single) {
                wins.entry(w).or_default().1 += 1;
            }
        }
        for s in &singles {
            wins.entry(s.clone()).or_default();
        }
    }

    let mut rows = Vec::new();
    for label in &labels {
        let recs: Vec<&EstimatorRecord> = raw.iter().filter(|r| &r.estimator == label).collect();
        let ok: Vec<&EstimatorRecord> = recs.iter().copied().filter(|r| r.sq_error.is_some()).collect();
        let failures = recs.len() - ok.len();
        if failures > 0 {
            if failures as f64 >= 0.01 * n_rep as f64 {
                let first = recs.iter().find_map(|r| r.error.clone()).unwrap_or_default();
                return Err(Error::invalid(format!(
                    "{label} failed in {failures} of {n_rep} replicates (first error: {first})"
                )));
            }
            warnings.push(format!("{label}: excluded {failures} failed replicate(s)"));
        }
        let errs: Vec<f64> = ok.iter().map(|r| r.sq_error.unwrap()).collect();
        let (emse, sd) = mean_sd(&errs);
        let mcse = sd / (errs.len() as f64).sqrt();

        let coverage = if ok.iter().all(|r| r.covered.is_some()) && !ok.is_empty() {
            let mut per: Vec<f64> = cell
                .coverage_coords
                .iter()
                .map(|&j| {
                    ok.iter().filter(|r| r.covered.as_ref().unwrap()[j]).count() as f64
                        / ok.len() as f64
                })
                .collect();
            Some(median(&mut per))
        } else {
            None
        };
        let lambdas: Vec<f64> = ok.iter().filter_map(|r| r.lambda).collect();
        let (mean_lambda, sd_lambda) = if lambdas.len() == ok.len() && !ok.is_empty() {
            let (m, s) = mean_sd(&lambdas);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        let narrower: Vec<bool> = ok.iter().filter_map(|r| r.narrower_than_wald).collect();
        let narrower_share = (!narrower.is_empty())
            .then(|| narrower.iter().filter(|&&b| b).count() as f64 / narrower.len() as f64);
        let (win_share, single_win_share) = if cell.multi {
            let (w, s) = wins.get(label).copied().unwrap_or((0, 0));
            let is_single = label.starts_with("ise{") && !label.contains(',') && label != "ise{}";
            (
                Some(w as f64 / n_rep as f64),
                is_single.then(|| s as f64 / n_rep as f64),
            )
        } else {
            (None, None)
        };
        rows.push(SummaryRow {
            estimator: label.clone(),
            replicates: ok.len(),
            failures,
            emse,
            mcse,
            coverage,
            mean_lambda,
            sd_lambda,
            narrower_share,
            win_share,
            single_win_share,
        });
    }
    Ok(SummaryTable {
        setting: config.setting.label(),
        table_scale: config.setting.table_scale(),
        rows,
        warnings,
        raw: if config.retain_raw { raw } else { Vec::new() },
    })
}
