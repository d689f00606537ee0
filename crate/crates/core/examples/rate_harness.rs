//! A scaled-down run of the convergence-rate harness, written to CSV/JSON/SVG.

use kfm::experiments::{self, write_record, ExperimentConfig, ExperimentKind};

pub fn run_example() -> kfm::Result<()> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::Rate);
    cfg.n = vec![64, 128, 256, 512];
    cfg.m = 128;
    cfg.repeats = 3;
    let rec = experiments::run(&cfg)?;
    let slope = rec.slope("kde_slope").and_then(|s| s.fit).map(|f| f.slope);
    println!("fitted slope {slope:?} (large-sample target -0.5)");

    let bias = experiments::run(&ExperimentConfig::bias_preset())?;
    println!("bias slope {:?} (target 2)", bias.slope("bias_slope").and_then(|s| s.fit).map(|f| f.slope));

    let dir = std::env::temp_dir().join(format!("kfm_rate_example_{}", std::process::id()));
    let written = write_record(&rec, &dir, true)?;
    println!("wrote {} and {}", written.csv.display(), written.json.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> kfm::Result<()> {
    run_example()
}
