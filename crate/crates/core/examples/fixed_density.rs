//! Second-layer weights that keep the out-of-household infection pressure
//! of a full workplace at 3.2, and the fixed-density case of the clique
//! family.
//!
//! `cargo run --release --example fixed_density -- [out_dir]`

use std::path::PathBuf;

use layered_epi::classical::RESULTS_FILE;
use layered_epi::harness::{
    emit_plot_series, fixed_density_experiment, fixed_density_weight, linear_grid, run_scenario,
    EvalOptions, ExperimentConfig, Scenario, CURVES_FILE,
};

fn main() -> layered_epi::Result<()> {
    println!("N_wp  w       (N_wp - 1) w");
    for size in [7, 8, 9, 10, 11, 12, 15] {
        let w = fixed_density_weight(size)?;
        println!("{size:>4}  {w:.4}  {:.4}", (size - 1) as f64 * w);
    }

    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "fixed_density".into()),
    );
    let mut cfg = ExperimentConfig::desk(Scenario::CliqueLeaveOneOut);
    cfg.tau_grid = linear_grid(0.3, 0.6, 0.05)?;
    cfg.replications = 5;
    cfg.output_dir = out.join("family");
    let dataset = run_scenario(&cfg, 0)?;

    let o = fixed_density_experiment(&dataset, &out, &EvalOptions::default())?;
    println!(
        "\n{}: {} train runs, {} test runs",
        o.case.label, o.train_runs, o.test_runs
    );
    print!("{}", o.evaluation.table);
    let points = emit_plot_series(&[o.evaluation.out_dir.join(RESULTS_FILE)], &out)?;
    println!(
        "{} curve points in {}",
        points.len(),
        out.join(CURVES_FILE).display()
    );
    Ok(())
}
