use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::epidemics::{gillespie_from, init_state, EventLog, SimParams};
use crate::error::{invalid, Error, Result};
use crate::features::{
    sample_grid, split_train_test, write_manifest, GraphModel, RunManifest, SeriesWriter, Split,
    TrajectoryFeatures, DEFAULT_DT, DEFAULT_T_MAX, MANIFEST_FILE, SERIES_FILE,
};
use crate::netgen::{
    build_clique_layer, build_household_layer, build_polynomial_layer, graph_stats, relax_caveman,
    CliqueParams, LayeredGraph,
};
use crate::rng::{mix64, run_seed, stream, Stream};

/// Resolved settings written next to each generated dataset.
pub const CONFIG_FILE: &str = "config.txt";

/// Runs simulated in parallel before their series are written out.
const CHUNK: usize = 256;

/// Salt for the single retry of a failed run.
const RESEED_SALT: u64 = 0x005E_ED0F_F00D;

/// One planned run, before simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPlan {
    pub run_id: u64,
    pub model: GraphModel,
    pub w: f64,
    pub tau: f64,
    pub seed: u64,
}

/// Graph and event log of one run.
#[derive(Debug, Clone)]
pub struct Realization {
    pub graph: LayeredGraph,
    pub log: EventLog,
}

/// Every (graph cell, τ, replication) in that nesting order, with run ids
/// counting from zero.
pub fn plan_runs(cfg: &ExperimentConfig) -> Vec<RunPlan> {
    let mut plans = Vec::with_capacity(cfg.run_count());
    for (model, w) in cfg.graph_cells() {
        for &tau in &cfg.tau_grid {
            for _ in 0..cfg.replications {
                let run_id = plans.len() as u64;
                plans.push(RunPlan {
                    run_id,
                    model,
                    w,
                    tau,
                    seed: run_seed(cfg.seed, run_id),
                });
            }
        }
    }
    plans
}

fn realize(
    model: GraphModel,
    w: f64,
    n: usize,
    household_size: usize,
    tau: f64,
    seed: u64,
) -> Result<Realization> {
    let households = build_household_layer(n, household_size)?;
    let mut graph_rng = stream(seed, Stream::Graph);
    let graph = match model {
        GraphModel::Poly(p) => build_polynomial_layer(households, &p, w, &mut graph_rng)?,
        GraphModel::Clique { size, p_relaxed } => {
            let params = CliqueParams { size, p_relaxed, w };
            let g = build_clique_layer(households, &params, &mut graph_rng)?;
            relax_caveman(g, p_relaxed, &mut graph_rng)?
        }
    };
    let params = SimParams::new(tau);
    let initial = init_state(
        &graph,
        params.init_infected_fraction,
        &mut stream(seed, Stream::Seeding),
    )?;
    let log = gillespie_from(
        &graph,
        &params,
        &initial,
        &mut stream(seed, Stream::Dynamics),
    )?;
    Ok(Realization { graph, log })
}

/// Regenerates the graph and epidemic of a manifest row.
pub fn realize_run(m: &RunManifest) -> Result<Realization> {
    realize(m.model, m.w, m.n, m.household_size, m.tau, m.seed)
}

/// Builds, simulates and featurizes one run. A failure is retried once
/// with a derived seed; the manifest records the seed actually used.
pub fn simulate_run(
    plan: &RunPlan,
    cfg: &ExperimentConfig,
) -> Result<(RunManifest, TrajectoryFeatures)> {
    let attempt = |seed: u64| -> Result<(RunManifest, TrajectoryFeatures)> {
        let Realization { graph, log } = realize(
            plan.model,
            plan.w,
            cfg.n,
            cfg.household_size,
            plan.tau,
            seed,
        )?;
        let mut features = sample_grid(&log, &graph, DEFAULT_DT, DEFAULT_T_MAX)?;
        features.run_id = plan.run_id;
        let manifest = RunManifest {
            run_id: plan.run_id,
            model: plan.model,
            w: plan.w,
            n: cfg.n,
            household_size: cfg.household_size,
            d: graph_stats(&graph).d,
            tau: plan.tau,
            seed,
            split: Split::Train,
        };
        Ok((manifest, features))
    };
    attempt(plan.seed).or_else(|e| {
        log::warn!("run {} failed ({e}); retrying with a new seed", plan.run_id);
        attempt(mix64(plan.seed ^ RESEED_SALT))
    })
}

/// Generates the dataset described by `cfg` into `cfg.output_dir`:
/// `manifest.csv`, `series.csv` and the resolved `config.txt`.
///
/// Runs are simulated on a pool of `workers` threads (0 for one per core)
/// and written in run order, so the output does not depend on scheduling.
pub fn run_scenario(cfg: &ExperimentConfig, workers: usize) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let plans = plan_runs(cfg);
    log::info!(
        "{}: {} runs into {}",
        cfg.scenario,
        plans.len(),
        dir.display()
    );

    let mut series = SeriesWriter::create(&dir.join(SERIES_FILE))?;
    let mut manifests = Vec::with_capacity(plans.len());
    for (i, chunk) in plans.chunks(CHUNK).enumerate() {
        let done: Vec<(RunManifest, TrajectoryFeatures)> = pool.install(|| {
            chunk
                .par_iter()
                .map(|p| simulate_run(p, cfg))
                .collect::<Result<_>>()
        })?;
        for (m, f) in done {
            series.write(&f)?;
            manifests.push(m);
        }
        log::info!("{} / {} runs", (i * CHUNK + chunk.len()), plans.len());
    }
    series.finish()?;

    let splits = split_train_test(
        &manifests,
        cfg.train_fraction,
        &mut stream(cfg.seed, Stream::Split),
    )?;
    for (m, s) in manifests.iter_mut().zip(splits) {
        m.split = s;
    }
    write_manifest(&manifests, &dir.join(MANIFEST_FILE))?;
    write_config(cfg, &dir.join(CONFIG_FILE))?;
    Ok(dir)
}

fn write_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let text: String = cfg
        .to_settings()
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::import_dataset;
    use crate::harness::{read_settings, Scenario};

    fn small(scenario: Scenario, dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::desk(scenario);
        cfg.n = 300;
        cfg.tau_grid = vec![0.3, 0.5];
        cfg.replications = 3;
        cfg.clique_sizes.truncate(2);
        cfg.poly_params.truncate(2);
        for p in &mut cfg.poly_params {
            p.n0 = 20;
        }
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn plan_nesting_and_seeds() {
        let cfg = small(Scenario::CliqueFixedDensity, Path::new("unused"));
        let plans = plan_runs(&cfg);
        assert_eq!(plans.len(), 12);
        assert_eq!(plans[0].tau, 0.3);
        assert_eq!(plans[3].tau, 0.5);
        assert_eq!(
            plans[6].model,
            GraphModel::Clique {
                size: 8,
                p_relaxed: 0.0
            }
        );
        assert!((plans[6].w - 3.2 / 7.0).abs() < 1e-15);
        let mut seeds: Vec<u64> = plans.iter().map(|p| p.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 12);
    }

    #[test]
    fn realize_matches_generated_series() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(Scenario::Poly, dir.path());
        run_scenario(&cfg, 2).unwrap();
        let runs = import_dataset(dir.path()).unwrap();
        assert_eq!(runs.len(), 12);
        for (m, f) in &runs {
            let r = realize_run(m).unwrap();
            let again = sample_grid(&r.log, &r.graph, DEFAULT_DT, DEFAULT_T_MAX).unwrap();
            for (a, b) in again.points.iter().zip(&f.points) {
                assert_eq!(
                    (a.s, a.i, a.r, a.e_si_hh, a.e_si_o),
                    (b.s, b.i, b.r, b.e_si_hh, b.e_si_o)
                );
            }
        }
        let settings = read_settings(&dir.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(ExperimentConfig::from_settings(&settings).unwrap(), cfg);
    }

    #[test]
    fn output_independent_of_worker_count() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_scenario(&small(Scenario::CliqueFixedDensity, a.path()), 1).unwrap();
        run_scenario(&small(Scenario::CliqueFixedDensity, b.path()), 3).unwrap();
        for file in [MANIFEST_FILE, SERIES_FILE] {
            let x = fs::read(a.path().join(file)).unwrap();
            let y = fs::read(b.path().join(file)).unwrap();
            assert_eq!(x, y, "{file} differs");
        }
    }

    #[test]
    fn stratified_split_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Scenario::CliqueFixedDensity, dir.path());
        cfg.replications = 10;
        run_scenario(&cfg, 0).unwrap();
        let runs = import_dataset(dir.path()).unwrap();
        let test = runs.iter().filter(|(m, _)| m.split == Split::Test).count();
        // four cells of ten: seven train, three test each
        assert_eq!(test, 12);
    }
}
