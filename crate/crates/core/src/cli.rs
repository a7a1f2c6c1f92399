//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::family::GlmFamily;
use crate::inference::{confidence_intervals, wald_intervals, IntervalSet};
use crate::io::{self, GaussianSummaryFile};
use crate::mle::fit_mle;
use crate::multi_source::{select_source_config, SelectionMode};
use crate::select::{lambda_bound_gaussian, lambda_bound_glm, PluginMse, DEFAULT_BRACKET};
use crate::shrink::{solve_dial_estimate_with_fit, SourceSummary};
use crate::sim::harness::run_setting_with_threads;
use crate::sim::sweep::{lambda_sweep, linear_grid};

#[derive(Debug, Parser)]
#[command(name = "infoshrink", version, about = "Information-driven shrinkage for GLMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the maximum likelihood estimate on one data set.
    Fit(FitArgs),
    /// Fit the shrinkage estimator borrowing from a source.
    Shrink(ShrinkArgs),
    /// Evaluate the shrinkage estimator over a grid of dial values.
    Sweep(SweepArgs),
    /// Run a simulation setting from a JSON config.
    Simulate(SimulateArgs),
    /// Compare source configurations by minimized estimated MSE.
    SelectSource(SelectSourceArgs),
}

#[derive(Debug, Args)]
pub struct DataOpts {
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, default_value = "gaussian")]
    pub family: GlmFamily,
    /// Do not prepend an intercept row to the design.
    #[arg(long)]
    pub no_intercept: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub opts: DataOpts,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for LambdaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(LambdaChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(LambdaChoice::Fixed(v)),
            _ => Err(format!("expected 'auto' or a nonnegative number, got '{s}'")),
        }
    }
}

#[derive(Debug, Args)]
pub struct ShrinkArgs {
    #[arg(long)]
    pub target: PathBuf,
    /// Source data CSV, or a Gaussian summary JSON.
    #[arg(long)]
    pub source: PathBuf,
    #[command(flatten)]
    pub opts: DataOpts,
    /// `auto` or a fixed nonnegative value.
    #[arg(long, default_value = "auto")]
    pub lambda: LambdaChoice,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Search bracket for `--lambda auto`, as `lo:hi`.
    #[arg(long)]
    pub bracket: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub source: PathBuf,
    #[command(flatten)]
    pub opts: DataOpts,
    /// Evenly spaced grid `lo:hi:k`.
    #[arg(long, default_value = "0:5:101")]
    pub grid: String,
    /// Output CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for summary.csv, raw.csv and config.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, env = "ISE_THREADS")]
    pub threads: Option<usize>,
    /// Report eMSE in table units (×10 or ×10²), MCse ×10³ and coverage in percent.
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Debug, Args)]
pub struct SelectSourceArgs {
    #[arg(long)]
    pub target: PathBuf,
    /// Source data CSV; repeat for each source.
    #[arg(long = "source", required = true)]
    pub sources: Vec<PathBuf>,
    #[command(flatten)]
    pub opts: DataOpts,
    #[arg(long, default_value = "singles_and_full")]
    pub mode: SelectionMode,
}

/// Parses `lo:hi`.
pub fn parse_bracket(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bracket '{s}' is not of the form lo:hi")))?;
    match nums[..] {
        [lo, hi] if lo >= 0.0 && hi > lo && hi.is_finite() => Ok((lo, hi)),
        [_, _] => Err(Error::invalid(format!("bracket '{s}' needs 0 <= lo < hi"))),
        _ => Err(Error::Parse(format!("bracket '{s}' is not of the form lo:hi"))),
    }
}

/// Parses `lo:hi:k` into an evenly spaced grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid '{s}' is not of the form lo:hi:k")));
    }
    let bad = || Error::Parse(format!("grid '{s}' is not of the form lo:hi:k"));
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo >= 0.0) || !(hi >= lo) || !hi.is_finite() || k == 0 {
        return Err(Error::invalid(format!("grid '{s}' needs 0 <= lo <= hi and k >= 1")));
    }
    Ok(linear_grid(lo, hi, k))
}

fn vec_of(v: &nalgebra::DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Serialize)]
struct CoefRow<'a> {
    name: &'a str,
    estimate: f64,
    se: f64,
    lower: f64,
    upper: f64,
}

fn coef_table<'a>(names: &'a [String], ci: &IntervalSet) -> Vec<CoefRow<'a>> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| CoefRow {
            name,
            estimate: ci.center[j],
            se: ci.se[j],
            lower: ci.lower[j],
            upper: ci.upper[j],
        })
        .collect()
}

pub fn cmd_fit(args: &FitArgs) -> Result<Value> {
    let family = args.opts.family;
    let loaded = io::read_dataset(&args.data, &args.opts.response, !args.opts.no_intercept)?;
    let fit = fit_mle(family, &loaded.data)?;
    let ci = wald_intervals(&fit, args.level)?;
    let mut out = json!({
        "family": family,
        "n": fit.n,
        "p": fit.p,
        "names": loaded.names,
        "beta_hat": vec_of(&fit.beta_hat),
        "se": vec_of(&fit.standard_errors()?),
        "gamma_hat": fit.gamma_hat,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "level": args.level,
        "coefficients": coef_table(&loaded.names, &ci),
    });
    if family.is_gaussian() {
        out["source_summary"] = serde_json::to_value(GaussianSummaryFile::from_fit(&fit))?;
    }
    Ok(out)
}

pub fn cmd_shrink(args: &ShrinkArgs) -> Result<Value> {
    let family = args.opts.family;
    let intercept = !args.opts.no_intercept;
    let loaded = io::read_dataset(&args.target, &args.opts.response, intercept)?;
    let target = &loaded.data;
    let source = io::load_source(&args.source, family, &args.opts.response, intercept)?;
    let fit = fit_mle(family, target)?;
    source.check(family, target.p())?;
    let bracket = match &args.bracket {
        Some(b) => parse_bracket(b)?,
        None => DEFAULT_BRACKET,
    };

    let curve_fn = PluginMse::for_family(family, &fit, &source)?;
    let (lambda, selection) = match args.lambda {
        LambdaChoice::Auto => {
            let curve = curve_fn.select(bracket)?;
            (curve.lambda_tilde, Some(curve))
        }
        LambdaChoice::Fixed(l) => (l, None),
    };
    let est = solve_dial_estimate_with_fit(family, target, &fit, &source, lambda)?;
    let ci = confidence_intervals(&est, args.level)?;
    let wald = wald_intervals(&fit, args.level)?;
    let bound = lambda_bound(family, target, &fit, &source);

    Ok(json!({
        "family": family,
        "lambda": lambda,
        "lambda_mode": if selection.is_some() { "auto" } else { "fixed" },
        "names": loaded.names,
        "beta_tilde": vec_of(&est.beta_tilde),
        "se": vec_of(&est.standard_errors()),
        "level": args.level,
        "coefficients": coef_table(&loaded.names, &ci),
        "estimated_mse": curve_fn.eval(lambda)?,
        "estimated_mse_at_zero": curve_fn.eval(0.0)?,
        "lambda_lower_bound": bound.as_ref().ok(),
        "lambda_lower_bound_note": bound.as_ref().err().map(|e| e.to_string()),
        "iterations": est.iterations,
        "converged": est.converged,
        "mle": {
            "beta_hat": vec_of(&fit.beta_hat),
            "se": vec_of(&wald.se),
            "coefficients": coef_table(&loaded.names, &wald),
        },
    }))
}

/// The lower-bound diagnostic for `λ⋆`, evaluated at the target MLE.
fn lambda_bound(
    family: GlmFamily,
    target: &crate::data::Dataset,
    fit: &crate::mle::MleFit,
    source: &SourceSummary,
) -> Result<f64> {
    if family.is_gaussian() {
        let delta = &fit.beta_hat - &source.beta1_hat;
        lambda_bound_gaussian(fit, source, &delta, fit.gamma_hat, fit.n)
    } else {
        lambda_bound_glm(family, target, source, &fit.beta_hat, fit.dispersion())
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let family = args.opts.family;
    let intercept = !args.opts.no_intercept;
    let loaded = io::read_dataset(&args.target, &args.opts.response, intercept)?;
    let source = io::load_source(&args.source, family, &args.opts.response, intercept)?;
    let grid = parse_grid(&args.grid)?;
    let points = lambda_sweep(family, &loaded.data, &source, &grid)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["lambda".to_string(), "est_mse".to_string()];
    header.extend(loaded.names.iter().map(|n| format!("beta[{n}]")));
    header.extend(loaded.names.iter().map(|n| format!("se[{n}]")));
    header.push("error".into());
    w.write_record(&header)?;
    let p = loaded.names.len();
    for pt in &points {
        let mut row = vec![
            format!("{:?}", pt.lambda),
            pt.est_mse.map(|m| format!("{m:?}")).unwrap_or_default(),
        ];
        for j in 0..p {
            row.push(pt.beta.get(j).map(|b| format!("{b:?}")).unwrap_or_default());
        }
        for j in 0..p {
            row.push(pt.se.get(j).map(|b| format!("{b:?}")).unwrap_or_default());
        }
        row.push(pt.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
    match &args.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Value> {
    let mut cfg = io::load_sim_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    let mut cfg = cfg.resolved();
    cfg.retain_raw = true;
    cfg.validate()?;
    let table = run_setting_with_threads(&cfg, args.threads)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::Io(format!("{}: {e}", args.out.display())))?;
    let mut summary = Vec::new();
    io::write_summary_csv(&table, &mut summary, args.paper_scale)?;
    let mut raw = Vec::new();
    io::write_raw_csv(&table.raw, &mut raw)?;
    let config_text = serde_json::to_string_pretty(&cfg)? + "\n";
    let summary_path = args.out.join("summary.csv");
    let raw_path = args.out.join("raw.csv");
    let config_path = args.out.join("config.json");
    write_file(&summary_path, &summary)?;
    write_file(&raw_path, &raw)?;
    write_file(&config_path, config_text.as_bytes())?;

    Ok(json!({
        "setting": table.setting,
        "replicates": cfg.replicates,
        "master_seed": cfg.master_seed,
        "rows": table.rows,
        "warnings": table.warnings,
        "files": {
            "summary": summary_path,
            "raw": raw_path,
            "config": config_path,
        },
    }))
}

pub fn cmd_select_source(args: &SelectSourceArgs) -> Result<Value> {
    let family = args.opts.family;
    let intercept = !args.opts.no_intercept;
    let target = io::read_dataset(&args.target, &args.opts.response, intercept)?;
    let sources = args
        .sources
        .iter()
        .map(|p| io::read_dataset(p, &args.opts.response, intercept).map(|l| l.data))
        .collect::<Result<Vec<_>>>()?;
    let sel = select_source_config(family, &target.data, &sources, args.mode)?;
    let rows: Vec<Value> = sel
        .report
        .iter()
        .map(|r| {
            json!({
                "config": r.config.id,
                "members": r.config.members.iter().map(|m| m + 1).collect::<Vec<_>>(),
                "min_mse": r.min_mse,
                "lambda_tilde": r.lambda_tilde,
                "beta_tilde": r.beta_tilde.as_ref().map(vec_of),
                "error": r.error,
            })
        })
        .collect();
    Ok(json!({
        "family": family,
        "mode": args.mode,
        "names": target.names,
        "configs": rows,
        "winner": sel.winner().config.id,
        "warning": sel.warning,
    }))
}

/// Runs a parsed command and returns what should go to standard output.
pub fn run(cli: &Cli) -> Result<String> {
    let value = match &cli.command {
        Command::Fit(a) => cmd_fit(a)?,
        Command::Shrink(a) => cmd_shrink(a)?,
        Command::Sweep(a) => return cmd_sweep(a),
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::SelectSource(a) => cmd_select_source(a)?,
    };
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// Machine-readable error body written to standard error.
pub fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}
