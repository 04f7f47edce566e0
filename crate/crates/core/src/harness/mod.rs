//! Experiment orchestration: dataset generation, classical evaluation,
//! leave-one-out datasets, result tables and plot series.

mod config;
mod evaluate;
mod report;
mod scenario;

pub use config::{
    full_grid_times, linear_grid, parse_settings, read_settings, ExperimentConfig, Preset,
    Scenario, Settings, EXPERIMENT_KEYS,
};
pub use evaluate::{
    default_methods, evaluate_classical, fixed_density_experiment, leave_one_out_experiment,
    EvalOptions, Evaluation, LooCase, LooOutcome, FIXED_DENSITY_LABEL, LOO_FAMILY, TABLE_FILE,
};
pub use report::{
    curve_labels, emit_plot_series, method_label, parse_table, read_curves, render_table,
    CurvePoint, Table, CURVES_FILE, CURVES_HEADER,
};
pub use scenario::{
    plan_runs, realize_run, run_scenario, simulate_run, Realization, RunPlan, CONFIG_FILE,
};

use crate::error::{invalid, Result};

/// Out-of-household weighted degree held fixed across clique sizes.
pub const FIXED_DENSITY: f64 = 3.2;

/// Second-layer weight giving `(N_wp − 1) · w = 3.2`, the nearest double
/// to 16 / (5 (N_wp − 1)).
pub fn fixed_density_weight(workplace_size: usize) -> Result<f64> {
    if workplace_size < 2 {
        return Err(invalid(format!("workplace size {workplace_size} < 2")));
    }
    Ok(16.0 / (5.0 * (workplace_size - 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_density_values() {
        assert_eq!(fixed_density_weight(9).unwrap(), 0.4);
        assert_eq!(fixed_density_weight(11).unwrap(), 0.32);
        assert!((fixed_density_weight(7).unwrap() - 0.533_333_333_333_333_3).abs() < 1e-15);
        assert!(fixed_density_weight(1).is_err());
    }
}
