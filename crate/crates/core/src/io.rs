//! File formats: data CSVs, Gaussian source summaries, simulation configs
//! and result tables.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::mle::MleFit;
use crate::shrink::SourceSummary;
use crate::sim::harness::{EstimatorRecord, SimConfig, SummaryTable};

/// A data set read from CSV, with the names of its design rows.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub names: Vec<String>,
}

/// Reads a CSV with a header row. `response` names the outcome column; every
/// other column is a feature.
pub fn read_dataset_from<R: Read>(reader: R, response: &str, intercept: bool) -> Result<LoadedData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let y_col = headers
        .iter()
        .position(|h| h.trim() == response)
        .ok_or_else(|| Error::Parse(format!("response column '{response}' not found in header")))?;
    let mut names: Vec<String> = Vec::new();
    if intercept {
        names.push("(intercept)".into());
    }
    names.extend(
        headers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != y_col)
            .map(|(_, h)| h.trim().to_string()),
    );

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let parse = |j: usize| -> Result<f64> {
            let raw = rec.get(j).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| {
                Error::Parse(format!(
                    "line {line}, column '{}': cannot parse '{raw}' as a number",
                    headers.get(j).unwrap_or("?")
                ))
            })
        };
        y.push(parse(y_col)?);
        let mut row = Vec::with_capacity(headers.len() - 1);
        for j in (0..headers.len()).filter(|&j| j != y_col) {
            row.push(parse(j)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    if rows[0].is_empty() && !intercept {
        return Err(Error::invalid("no feature columns and no intercept"));
    }
    let data = Dataset::from_rows(&rows, y, intercept)?;
    Ok(LoadedData { data, names })
}

pub fn read_dataset(path: &Path, response: &str, intercept: bool) -> Result<LoadedData> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_dataset_from(file, response, intercept)
}

/// The quantities that suffice to borrow from a Gaussian source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSummaryFile {
    pub n1: usize,
    pub beta1_hat: Vec<f64>,
    pub gram: Vec<Vec<f64>>,
    pub sigma2_hat: f64,
}

impl GaussianSummaryFile {
    pub fn from_fit(fit: &MleFit) -> Self {
        GaussianSummaryFile {
            n1: fit.n,
            beta1_hat: fit.beta_hat.iter().copied().collect(),
            gram: matrix_rows(&fit.gram),
            sigma2_hat: fit.gamma_hat,
        }
    }

    pub fn into_summary(self) -> Result<SourceSummary> {
        let p = self.beta1_hat.len();
        if self.gram.len() != p || self.gram.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(format!(
                "gram must be {p}x{p} to match beta1_hat"
            )));
        }
        let gram = DMatrix::from_fn(p, p, |i, j| self.gram[i][j]);
        SourceSummary::gaussian_gram(self.n1, DVector::from_vec(self.beta1_hat), gram, self.sigma2_hat)
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Parses a summary given either bare or nested under `source_summary`
/// (the shape written by `fit`).
pub fn parse_gaussian_summary(text: &str) -> Result<SourceSummary> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let inner = match value.get("source_summary") {
        Some(v) => v.clone(),
        None => value,
    };
    let file: GaussianSummaryFile = serde_path_to_error::deserialize(inner)
        .map_err(|e| Error::Parse(format!("source summary: {}: {}", e.path(), e.inner())))?;
    file.into_summary()
}

/// Loads a source from a summary JSON (`.json`) or a data CSV (fitted here).
pub fn load_source(path: &Path, family: GlmFamily, response: &str, intercept: bool) -> Result<SourceSummary> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        if !family.is_gaussian() {
            return Err(Error::PayloadMismatch(format!(
                "a summary-only source supports the gaussian family only, not {family}"
            )));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        parse_gaussian_summary(&text)
    } else {
        let loaded = read_dataset(path, response, intercept)?;
        SourceSummary::fit(family, &loaded.data)
    }
}

pub fn parse_sim_config(text: &str) -> Result<SimConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: SimConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::invalid(format!("config field '{path}': {}", e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sim_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_sim_config(&text)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes one row per estimator. With `paper_scale`, eMSE is multiplied by
/// the setting's table factor, MCse by 10³ and coverage is given in percent.
pub fn write_summary_csv<W: Write>(table: &SummaryTable, out: W, paper_scale: bool) -> Result<()> {
    let (es, ms, cs) = if paper_scale {
        (table.table_scale, 1e3, 100.0)
    } else {
        (1.0, 1.0, 1.0)
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "setting",
        "estimator",
        "replicates",
        "failures",
        "emse",
        "mcse",
        "coverage",
        "mean_lambda",
        "sd_lambda",
        "narrower_share",
        "win_share",
        "single_win_share",
    ])?;
    for r in &table.rows {
        w.write_record([
            table.setting.clone(),
            r.estimator.clone(),
            r.replicates.to_string(),
            r.failures.to_string(),
            format!("{:?}", r.emse * es),
            format!("{:?}", r.mcse * ms),
            opt(r.coverage.map(|c| c * cs)),
            opt(r.mean_lambda),
            opt(r.sd_lambda),
            opt(r.narrower_share),
            opt(r.win_share),
            opt(r.single_win_share),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per replicate and estimator; coverage flags are written as a
/// string of `0`/`1` characters, one per coordinate.
pub fn write_raw_csv<W: Write>(records: &[EstimatorRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "replicate",
        "estimator",
        "sq_error",
        "lambda",
        "covered",
        "narrower_than_wald",
        "est_mse",
        "error",
    ])?;
    for r in records {
        let covered: String = r
            .covered
            .as_ref()
            .map(|c| c.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .unwrap_or_default();
        w.write_record([
            r.replicate.to_string(),
            r.estimator.clone(),
            opt(r.sq_error),
            opt(r.lambda),
            covered,
            r.narrower_than_wald.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.est_mse),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
