//! Builds a clique-family dataset and splits it into leave-one-out
//! train/test pairs, evaluating the classical estimators on each test set.
//!
//! `cargo run --release --example leave_one_out -- [out_dir]`

use std::path::PathBuf;

use layered_epi::classical::Method;
use layered_epi::harness::{
    leave_one_out_experiment, linear_grid, run_scenario, EvalOptions, ExperimentConfig, LooCase,
    Scenario,
};

fn main() -> layered_epi::Result<()> {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "leave_one_out".into()),
    );
    let mut cfg = ExperimentConfig::desk(Scenario::CliqueLeaveOneOut);
    cfg.tau_grid = linear_grid(0.3, 0.6, 0.05)?;
    cfg.output_dir = out.join("family");
    let dataset = run_scenario(&cfg, 0)?;

    let opts = EvalOptions {
        times: vec![4.0],
        ..EvalOptions::default()
    };
    println!("case            train  test  ml_exact  ml_static");
    for (omit, test_on) in [(7, 7), (7, 10), (11, 11), (11, 8)] {
        let o = leave_one_out_experiment(&dataset, &LooCase::new(omit, test_on), &out, &opts)?;
        let rmse = |m: Method| {
            o.evaluation
                .rows
                .iter()
                .find(|r| r.method == m)
                .and_then(|r| r.rmse)
                .map_or("-".into(), |v| format!("{v:.4}"))
        };
        println!(
            "{:<15} {:>5} {:>5} {:>9} {:>10}",
            o.case.label,
            o.train_runs,
            o.test_runs,
            rmse(Method::MlExact),
            rmse(Method::MlStatic)
        );
    }
    Ok(())
}
