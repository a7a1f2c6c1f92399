//! A small Monte Carlo run of the linear-model benchmark: empirical MSE,
//! coverage and the selected dial for each estimator.

use infoshrink::sim::settings::Setting;
use infoshrink::sim::{run_setting, SimConfig};

fn main() {
    let cfg = SimConfig::new(Setting::I { n1: 100, n2: 100 }, 200, 2024);
    let table = run_setting(&cfg).expect("simulation");
    println!("{}", table.setting);
    for r in &table.rows {
        println!(
            "{:<14} eMSE {:.4} (MCse {:.4})  coverage {}  mean lambda {}",
            r.estimator,
            r.emse,
            r.mcse,
            r.coverage.map(|c| format!("{:.3}", c)).unwrap_or_else(|| "-".into()),
            r.mean_lambda.map(|l| format!("{:.3}", l)).unwrap_or_else(|| "-".into()),
        );
    }
}
