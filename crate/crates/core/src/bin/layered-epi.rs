use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use layered_epi::classical::{read_results, Method, RESULTS_FILE};
use layered_epi::harness::{
    self, evaluate_classical, leave_one_out_experiment, read_settings, render_table, run_scenario,
    EvalOptions, ExperimentConfig, LooCase, Settings, EXPERIMENT_KEYS,
};
use layered_epi::{Error, Result};

/// Settings keys handled here rather than by the experiment config.
const COMMAND_KEYS: [&str; 5] = ["dataset", "methods", "omit", "test_on", "workers"];

#[derive(Parser)]
#[command(
    version,
    about = "Layered contact networks, SIR simulation and infection-rate estimation"
)]
struct Cli {
    /// File of `key = value` settings; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write manifest.csv and series.csv.
    Generate {
        /// poly, clique_fixed_density or clique_leave_one_out.
        #[arg(long)]
        scenario: Option<String>,
        /// desk or full run counts.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the classical estimators on the test split of a dataset.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Comma-separated, e.g. ml_exact,ml_static.
        #[arg(long)]
        methods: Option<String>,
        /// Comma-separated horizons.
        #[arg(long)]
        times: Option<String>,
        /// Evaluate at every grid time from 0.1 to 30.
        #[arg(long)]
        full_grid: bool,
        /// Output directory (default: the dataset directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a leave-one-out train/test pair from a clique-family dataset.
    Loo {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        omit: Option<usize>,
        #[arg(long)]
        test_on: Option<usize>,
        /// The fixed-density case: omit 9, test on 9, labeled fw.
        #[arg(long, conflicts_with_all = ["omit", "test_on"])]
        fw: bool,
        #[arg(long)]
        times: Option<String>,
        /// Parent directory of the case directory (default: next to the dataset).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect results files into curves.csv.
    Plotdata {
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        results: Vec<PathBuf>,
        /// Output directory (default: that of the first results file).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a results file as a table.
    Table {
        #[arg(long)]
        results: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::EmptySet(_) | Error::EmptyEstimateSet => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = match &cli.config {
        Some(path) => read_settings(path)?,
        None => Settings::new(),
    };
    if let Some(key) = settings
        .keys()
        .find(|k| !EXPERIMENT_KEYS.contains(&k.as_str()) && !COMMAND_KEYS.contains(&k.as_str()))
    {
        return Err(Error::InvalidParameter(format!("unknown setting {key:?}")));
    }
    let mut set = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            settings.insert(key.to_string(), v);
        }
    };
    set("workers", cli.workers.map(|w| w.to_string()));
    match cli.command {
        Command::Generate {
            scenario,
            preset,
            n,
            reps,
            seed,
            out,
        } => {
            set("scenario", scenario);
            set("preset", preset);
            set("n", n.map(|v| v.to_string()));
            set("reps", reps.map(|v| v.to_string()));
            set("seed", seed.map(|v| v.to_string()));
            set("out", out.map(|p| p.display().to_string()));
            let workers = workers(&settings)?;
            let experiment: Settings = settings
                .into_iter()
                .filter(|(k, _)| EXPERIMENT_KEYS.contains(&k.as_str()))
                .collect();
            let cfg = ExperimentConfig::from_settings(&experiment)?;
            let dir = run_scenario(&cfg, workers)?;
            println!("wrote {} runs to {}", cfg.run_count(), dir.display());
        }
        Command::Evaluate {
            dataset,
            methods,
            times,
            full_grid,
            out,
        } => {
            set("dataset", dataset.map(|p| p.display().to_string()));
            set("methods", methods);
            set("report_times", times);
            if full_grid {
                set("full_grid", Some("true".into()));
            }
            let dataset = dataset_path(&settings)?;
            let opts = eval_options(&settings, out)?;
            let eval = evaluate_classical(&dataset, &opts)?;
            print!("{}", eval.table);
            println!("wrote results to {}", eval.out_dir.display());
        }
        Command::Loo {
            dataset,
            omit,
            test_on,
            fw,
            times,
            out,
        } => {
            set("dataset", dataset.map(|p| p.display().to_string()));
            set("omit", omit.map(|v| v.to_string()));
            set("test_on", test_on.map(|v| v.to_string()));
            set("report_times", times);
            let dataset = dataset_path(&settings)?;
            let case = if fw {
                LooCase::fixed_density()
            } else {
                let size = |key: &str| -> Result<usize> {
                    let v = settings.get(key).ok_or_else(|| {
                        Error::InvalidParameter(format!("loo needs --{}", key.replace('_', "-")))
                    })?;
                    v.parse()
                        .map_err(|_| Error::InvalidParameter(format!("invalid {key} {v:?}")))
                };
                LooCase::new(size("omit")?, size("test_on")?)
            };
            let out = out.unwrap_or_else(|| dataset.parent().unwrap_or(Path::new(".")).join("loo"));
            let opts = eval_options(&settings, None)?;
            let o = leave_one_out_experiment(&dataset, &case, &out, &opts)?;
            print!("{}", o.evaluation.table);
            println!(
                "{}: {} train runs in {}, {} test runs in {}",
                o.case.label,
                o.train_runs,
                o.train_dir.display(),
                o.test_runs,
                o.test_dir.display()
            );
        }
        Command::Plotdata { results, out } => {
            let out = out
                .or_else(|| results[0].parent().map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from("."));
            let points = harness::emit_plot_series(&results, &out)?;
            let labels = harness::curve_labels(&points);
            println!(
                "wrote {} points in {} curves to {}",
                points.len(),
                labels.len(),
                out.join(harness::CURVES_FILE).display()
            );
        }
        Command::Table { results } => {
            let path = if results.is_dir() {
                results.join(RESULTS_FILE)
            } else {
                results
            };
            let rows = read_results(&path)?;
            let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            print!("{}", render_table(&rows, &times));
        }
    }
    Ok(())
}

fn workers(settings: &Settings) -> Result<usize> {
    settings.get("workers").map_or(Ok(0), |v| {
        v.parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid workers {v:?}")))
    })
}

/// `dataset`, falling back to the generation output directory.
fn dataset_path(settings: &Settings) -> Result<PathBuf> {
    settings
        .get("dataset")
        .or_else(|| settings.get("out"))
        .map(PathBuf::from)
        .ok_or_else(|| Error::InvalidParameter("no dataset given (--dataset)".into()))
}

fn eval_options(settings: &Settings, out_dir: Option<PathBuf>) -> Result<EvalOptions> {
    let full_grid = settings.get("full_grid").map_or(Ok(false), |v| {
        v.parse()
            .map_err(|_| Error::InvalidParameter(format!("invalid full_grid {v:?}")))
    })?;
    let times = if full_grid {
        harness::full_grid_times()
    } else {
        match settings.get("report_times") {
            Some(v) => parse_list(v)?,
            None => EvalOptions::default().times,
        }
    };
    let methods = match settings.get("methods") {
        Some(v) => {
            let list: Vec<Method> = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_>>()?;
            let unique: BTreeSet<Method> = list.iter().copied().collect();
            Some(unique.into_iter().collect())
        }
        None => None,
    };
    Ok(EvalOptions {
        methods,
        times,
        out_dir,
        workers: workers(settings)?,
    })
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid time {s:?}")))
        })
        .collect()
}
