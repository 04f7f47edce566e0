use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::check_report_times;
use super::report::render_table;
use super::scenario::realize_run;
use crate::classical::{
    summarize, tau_hat_approx, write_predictions, write_results, EstimateRecord, Exposure, Method,
    ResultRow, SiOut, PREDICTIONS_FILE, RESULTS_FILE,
};
use crate::error::{invalid, Error, Result};
use crate::features::{
    export_dataset, import_dataset, import_dataset_where, sample_grid, truths, GraphModel,
    RunManifest, Split, TrajectoryFeatures,
};

pub const TABLE_FILE: &str = "table.txt";

/// Clique sizes of the leave-one-out family.
pub const LOO_FAMILY: [usize; 5] = [7, 8, 9, 10, 11];

/// Label of the fixed-density generalization case: train on sizes
/// 7, 8, 10, 11 and test on size 9.
pub const FIXED_DENSITY_LABEL: &str = "fw";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Methods to run; `None` picks [`default_methods`].
    pub methods: Option<Vec<Method>>,
    pub times: Vec<f64>,
    /// Directory for the output files; defaults to the dataset directory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            methods: None,
            times: vec![1.0, 2.0, 4.0, 6.0, 10.0],
            out_dir: None,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub records: Vec<EstimateRecord>,
    pub rows: Vec<ResultRow>,
    pub table: String,
    pub out_dir: PathBuf,
}

/// `ml_exact` and `ml_static`, plus `ml_dynamic` if any run has a
/// polynomial second layer.
pub fn default_methods(manifests: &[&RunManifest]) -> Vec<Method> {
    let mut methods = vec![Method::MlExact, Method::MlStatic];
    if manifests
        .iter()
        .any(|m| matches!(m.model, GraphModel::Poly(_)))
    {
        methods.push(Method::MlDynamic);
    }
    methods
}

/// Runs the classical estimators on every test run of a dataset at each
/// horizon and writes `predictions.csv`, `results.csv` and `table.txt`.
///
/// The exact estimator regenerates each run from its manifest seed and
/// checks the regenerated S/I/R series against the stored one. The
/// infected-degree approximation is only applied to polynomial graphs.
pub fn evaluate_classical(dataset: &Path, opts: &EvalOptions) -> Result<Evaluation> {
    check_report_times(&opts.times)?;
    let runs = import_dataset_where(dataset, |m| m.split == Split::Test)?;
    if runs.is_empty() {
        return Err(Error::EmptySet("test"));
    }
    let methods = match &opts.methods {
        Some(m) => m.clone(),
        None => default_methods(&runs.iter().map(|(m, _)| m).collect::<Vec<_>>()),
    };
    if let Some(m) = methods.iter().find(|m| !m.is_classical()) {
        return Err(invalid(format!("{m} is not a classical method")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let per_run: Vec<Vec<EstimateRecord>> = pool.install(|| {
        runs.par_iter()
            .map(|(m, f)| estimate_run(m, f, &methods, &opts.times))
            .collect::<Result<_>>()
    })?;
    let records: Vec<EstimateRecord> = per_run.into_iter().flatten().collect();
    let rows = summarize(&records, &truths(runs.iter().map(|(m, _)| m)))?;
    let table = render_table(&rows, &opts.times);

    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| dataset.to_path_buf());
    write_predictions(&records, &out_dir.join(PREDICTIONS_FILE))?;
    write_results(&rows, &out_dir.join(RESULTS_FILE))?;
    let table_path = out_dir.join(TABLE_FILE);
    fs::write(&table_path, &table).map_err(|e| Error::io(&table_path, e))?;
    Ok(Evaluation {
        records,
        rows,
        table,
        out_dir,
    })
}

fn estimate_run(
    m: &RunManifest,
    f: &TrajectoryFeatures,
    methods: &[Method],
    times: &[f64],
) -> Result<Vec<EstimateRecord>> {
    let exposure = if methods.contains(&Method::MlExact) {
        let r = realize_run(m)?;
        let again = sample_grid(
            &r.log,
            &r.graph,
            f.dt(),
            f.points.last().map_or(0.0, |p| p.t),
        )?;
        let same = again.points.len() == f.points.len()
            && again
                .points
                .iter()
                .zip(&f.points)
                .all(|(a, b)| (a.s, a.i, a.r) == (b.s, b.i, b.r));
        if !same {
            return Err(Error::Inconsistent(m.run_id));
        }
        Some(Exposure::from_log(&r.log, &r.graph)?)
    } else {
        None
    };
    let is_poly = matches!(m.model, GraphModel::Poly(_));
    let mut out = Vec::with_capacity(times.len() * methods.len());
    for &t in times {
        for &method in methods {
            let tau_hat = match method {
                Method::MlExact => exposure.as_ref().and_then(|e| e.tau_hat(t)),
                Method::MlStatic => tau_hat_approx(f, m, t, SiOut::Static)?,
                Method::MlDynamic if is_poly => tau_hat_approx(f, m, t, SiOut::Dynamic)?,
                _ => continue,
            };
            out.push(EstimateRecord {
                run_id: m.run_id,
                t,
                method,
                tau_hat,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LooCase {
    pub label: String,
    pub omit: usize,
    pub test_on: usize,
}

impl LooCase {
    pub fn new(omit: usize, test_on: usize) -> Self {
        LooCase {
            label: format!("omit{omit}_test{test_on}"),
            omit,
            test_on,
        }
    }

    pub fn fixed_density() -> Self {
        LooCase {
            label: FIXED_DENSITY_LABEL.to_string(),
            omit: 9,
            test_on: 9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LooOutcome {
    pub case: LooCase,
    pub train_dir: PathBuf,
    pub test_dir: PathBuf,
    pub train_runs: usize,
    pub test_runs: usize,
    pub evaluation: Evaluation,
}

/// Carves a train/test dataset pair out of a clique-family dataset.
///
/// The training set holds the training-split runs of every size except
/// `omit`; the test set holds the test-split runs of size `test_on`. Both
/// are written under `out/<label>/`, and the classical methods are
/// evaluated on the test set into `out/<label>/`.
pub fn leave_one_out_experiment(
    family: &Path,
    case: &LooCase,
    out: &Path,
    opts: &EvalOptions,
) -> Result<LooOutcome> {
    let runs = import_dataset(family)?;
    let sizes: BTreeSet<usize> = runs
        .iter()
        .filter_map(|(m, _)| m.workplace_size())
        .collect();
    for size in [case.omit, case.test_on] {
        if !sizes.contains(&size) {
            return Err(invalid(format!(
                "clique size {size} not in the dataset family {sizes:?}"
            )));
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = runs
        .into_iter()
        .filter(|(m, _)| match m.split {
            Split::Train => m.workplace_size() != Some(case.omit),
            Split::Test => m.workplace_size() == Some(case.test_on),
        })
        .partition(|(m, _)| m.split == Split::Train);
    if train.is_empty() {
        return Err(Error::EmptySet("train"));
    }
    if test.is_empty() {
        return Err(Error::EmptySet("test"));
    }
    let case_dir = out.join(&case.label);
    let train_dir = case_dir.join("train");
    let test_dir = case_dir.join("test");
    export_dataset(&train, &train_dir)?;
    export_dataset(&test, &test_dir)?;
    let eval_opts = EvalOptions {
        out_dir: Some(case_dir),
        ..opts.clone()
    };
    let evaluation = evaluate_classical(&test_dir, &eval_opts)?;
    Ok(LooOutcome {
        case: case.clone(),
        train_dir,
        test_dir,
        train_runs: train.len(),
        test_runs: test.len(),
        evaluation,
    })
}

/// The `fw` case: train on sizes 7, 8, 10, 11 and test on size 9.
pub fn fixed_density_experiment(
    family: &Path,
    out: &Path,
    opts: &EvalOptions,
) -> Result<LooOutcome> {
    leave_one_out_experiment(family, &LooCase::fixed_density(), out, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::read_results;
    use crate::features::read_manifest;
    use crate::harness::{run_scenario, ExperimentConfig, Scenario};

    fn family(dir: &Path) {
        let mut cfg = ExperimentConfig::desk(Scenario::CliqueLeaveOneOut);
        cfg.n = 200;
        cfg.tau_grid = vec![0.4, 0.5];
        cfg.replications = 4;
        cfg.output_dir = dir.to_path_buf();
        run_scenario(&cfg, 0).unwrap();
    }

    #[test]
    fn clique_dataset_has_no_dynamic_rows() {
        let dir = tempfile::tempdir().unwrap();
        family(dir.path());
        let eval = evaluate_classical(dir.path(), &EvalOptions::default()).unwrap();
        let methods: BTreeSet<Method> = eval.rows.iter().map(|r| r.method).collect();
        assert_eq!(methods, BTreeSet::from([Method::MlExact, Method::MlStatic]));
        assert_eq!(eval.rows.len(), 10);
        assert_eq!(
            read_results(&dir.path().join(RESULTS_FILE)).unwrap().len(),
            10
        );
        assert!(dir.path().join(TABLE_FILE).exists());
        let forced = EvalOptions {
            methods: Some(vec![Method::MlDynamic]),
            ..EvalOptions::default()
        };
        assert!(evaluate_classical(dir.path(), &forced)
            .unwrap()
            .records
            .is_empty());
    }

    #[test]
    fn single_run_rmse_is_absolute_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::desk(Scenario::CliqueFixedDensity);
        cfg.n = 300;
        cfg.clique_sizes = vec![9];
        cfg.tau_grid = vec![0.45];
        cfg.replications = 2;
        cfg.output_dir = dir.path().to_path_buf();
        run_scenario(&cfg, 1).unwrap();
        let opts = EvalOptions {
            methods: Some(vec![Method::MlExact]),
            times: vec![4.0],
            ..EvalOptions::default()
        };
        let eval = evaluate_classical(dir.path(), &opts).unwrap();
        assert_eq!(eval.records.len(), 1);
        let est = eval.records[0].tau_hat.unwrap();
        assert!((eval.rows[0].rmse.unwrap() - (est - 0.45).abs()).abs() < 1e-15);
    }

    #[test]
    fn tampered_series_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        family(dir.path());
        let path = dir.path().join("manifest.csv");
        let mut manifests = read_manifest(&path).unwrap();
        for m in &mut manifests {
            m.seed ^= 1;
        }
        crate::features::write_manifest(&manifests, &path).unwrap();
        let err = evaluate_classical(dir.path(), &EvalOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Inconsistent(_)));
    }

    #[test]
    fn leave_one_out_sets() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("family");
        family(&data);
        let out = dir.path().join("loo");
        let o =
            leave_one_out_experiment(&data, &LooCase::new(7, 10), &out, &EvalOptions::default())
                .unwrap();
        assert_eq!(o.case.label, "omit7_test10");
        let train = read_manifest(&o.train_dir.join("manifest.csv")).unwrap();
        let test = read_manifest(&o.test_dir.join("manifest.csv")).unwrap();
        let train_sizes: BTreeSet<usize> =
            train.iter().filter_map(|m| m.workplace_size()).collect();
        assert_eq!(train_sizes, BTreeSet::from([8, 9, 10, 11]));
        assert!(train.iter().all(|m| m.split == Split::Train));
        assert!(test
            .iter()
            .all(|m| m.split == Split::Test && m.workplace_size() == Some(10)));
        // 5 sizes × 2 τ × 4 reps, 3 train and 1 test per cell
        assert_eq!(o.train_runs, 4 * 2 * 3);
        assert_eq!(o.test_runs, 2);
        let ids: BTreeSet<u64> = train.iter().map(|m| m.run_id).collect();
        assert!(test.iter().all(|m| !ids.contains(&m.run_id)));
        assert!(out.join("omit7_test10").join(RESULTS_FILE).exists());

        let fw = fixed_density_experiment(&data, &out, &EvalOptions::default()).unwrap();
        assert_eq!(fw.case.label, "fw");
        assert!(fw.evaluation.out_dir.ends_with("fw"));

        assert!(leave_one_out_experiment(
            &data,
            &LooCase::new(12, 9),
            &out,
            &EvalOptions::default()
        )
        .is_err());
    }
}
