//! Monte Carlo harness for the reference simulation settings.

pub mod harness;
pub mod rng;
pub mod settings;
pub mod sweep;

pub use harness::{run_setting, run_setting_with_threads, Estimator, SimConfig, SummaryRow, SummaryTable};
pub use settings::Setting;
