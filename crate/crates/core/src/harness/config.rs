use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::fixed_density_weight;
use crate::error::{invalid, Error, Result};
use crate::features::{grid_len, grid_time, GraphModel, DEFAULT_DT, DEFAULT_T_MAX};
use crate::netgen::PolyParams;

/// Ordered `key = value` settings, from a file and/or the command line.
pub type Settings = BTreeMap<String, String>;

/// Keys understood by [`ExperimentConfig::from_settings`].
pub const EXPERIMENT_KEYS: [&str; 17] = [
    "scenario",
    "preset",
    "n",
    "reps",
    "seed",
    "out",
    "tau_grid",
    "report_times",
    "clique_sizes",
    "poly_params",
    "m",
    "n0",
    "p_relaxed",
    "poly_weight",
    "household_size",
    "train_fraction",
    "full_grid",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Polynomial second layer over the ten attachment triplets.
    Poly,
    /// Workplace cliques of several sizes with `(N_wp − 1) · w = 3.2`.
    CliqueFixedDensity,
    /// Clique sizes 7 to 11 at fixed density, for leave-one-out datasets.
    CliqueLeaveOneOut,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Poly => "poly",
            Scenario::CliqueFixedDensity => "clique_fixed_density",
            Scenario::CliqueLeaveOneOut => "clique_leave_one_out",
        }
    }

    pub fn is_clique(self) -> bool {
        !matches!(self, Scenario::Poly)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly" => Ok(Scenario::Poly),
            "clique_fixed_density" | "clique" => Ok(Scenario::CliqueFixedDensity),
            "clique_leave_one_out" | "loo" => Ok(Scenario::CliqueLeaveOneOut),
            _ => Err(invalid(format!("unknown scenario {s:?}"))),
        }
    }
}

/// Run counts: `Desk` is small enough for a laptop, `Full` is the
/// large-scale configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Full,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            _ => Err(invalid(format!("unknown preset {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Strictly increasing infection rates.
    pub tau_grid: Vec<f64>,
    /// Second-layer parameters of the poly scenario.
    pub poly_params: Vec<PolyParams>,
    /// Workplace sizes of the clique scenarios.
    pub clique_sizes: Vec<usize>,
    pub p_relaxed: f64,
    /// Second-layer weight of the poly scenario.
    pub poly_weight: f64,
    pub household_size: usize,
    pub replications: usize,
    pub n: usize,
    pub seed: u64,
    pub report_times: Vec<f64>,
    pub train_fraction: f64,
    pub output_dir: PathBuf,
    /// Evaluate on every grid time instead of the report times.
    pub full_grid: bool,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, preset: Preset) -> Self {
        let (n, replications) = match (preset, scenario) {
            (Preset::Desk, _) => (2000, 10),
            (Preset::Full, Scenario::CliqueFixedDensity) => (5000, 250),
            (Preset::Full, _) => (5000, 50),
        };
        let clique_sizes = match scenario {
            Scenario::CliqueLeaveOneOut => vec![7, 8, 9, 10, 11],
            _ => vec![7, 8, 10, 11, 12, 15],
        };
        ExperimentConfig {
            scenario,
            tau_grid: linear_grid(0.3, 0.6, 0.01).expect("valid default grid"),
            poly_params: default_poly_params(),
            clique_sizes,
            p_relaxed: 0.0,
            poly_weight: 0.4,
            household_size: 5,
            replications,
            n,
            seed: 1,
            report_times: vec![1.0, 2.0, 4.0, 6.0, 10.0],
            train_fraction: 0.7,
            output_dir: PathBuf::from(format!("data/{scenario}")),
            full_grid: false,
        }
    }

    pub fn desk(scenario: Scenario) -> Self {
        Self::new(scenario, Preset::Desk)
    }

    pub fn full(scenario: Scenario) -> Self {
        Self::new(scenario, Preset::Full)
    }

    /// Builds a config from settings; `scenario` and `preset` pick the
    /// defaults and every other recognized key overrides one field.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let scenario = settings
            .get("scenario")
            .map_or(Ok(Scenario::Poly), |s| s.parse())?;
        let preset = settings
            .get("preset")
            .map_or(Ok(Preset::Desk), |s| s.parse())?;
        let mut cfg = Self::new(scenario, preset);
        let mut m = None;
        let mut n0 = None;
        for (key, value) in settings {
            let value = value.as_str();
            match key.as_str() {
                "scenario" | "preset" => {}
                "n" => cfg.n = parse_value(key, value)?,
                "reps" => cfg.replications = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "out" => cfg.output_dir = PathBuf::from(value),
                "tau_grid" => cfg.tau_grid = parse_grid(value)?,
                "report_times" => cfg.report_times = parse_list(key, value)?,
                "clique_sizes" => cfg.clique_sizes = parse_list(key, value)?,
                "poly_params" => cfg.poly_params = parse_triplets(value)?,
                "m" => m = Some(parse_value(key, value)?),
                "n0" => n0 = Some(parse_value(key, value)?),
                "p_relaxed" => cfg.p_relaxed = parse_value(key, value)?,
                "poly_weight" => cfg.poly_weight = parse_value(key, value)?,
                "household_size" => cfg.household_size = parse_value(key, value)?,
                "train_fraction" => cfg.train_fraction = parse_value(key, value)?,
                "full_grid" => cfg.full_grid = parse_value(key, value)?,
                other => return Err(invalid(format!("unknown setting {other:?}"))),
            }
        }
        for p in &mut cfg.poly_params {
            p.m = m.unwrap_or(p.m);
            p.n0 = n0.unwrap_or(p.n0);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Settings that reproduce this config through [`Self::from_settings`].
    pub fn to_settings(&self) -> Settings {
        let join = |v: Vec<String>| v.join(",");
        let mut s = Settings::new();
        s.insert("scenario".into(), self.scenario.to_string());
        s.insert("n".into(), self.n.to_string());
        s.insert("reps".into(), self.replications.to_string());
        s.insert("seed".into(), self.seed.to_string());
        s.insert("out".into(), self.output_dir.display().to_string());
        s.insert(
            "tau_grid".into(),
            join(self.tau_grid.iter().map(f64::to_string).collect()),
        );
        s.insert(
            "report_times".into(),
            join(self.report_times.iter().map(f64::to_string).collect()),
        );
        s.insert(
            "clique_sizes".into(),
            join(self.clique_sizes.iter().map(usize::to_string).collect()),
        );
        let triplets: Vec<String> = self
            .poly_params
            .iter()
            .map(|p| format!("{}/{}/{}", p.p_pa, p.p_u, p.p_tr))
            .collect();
        s.insert("poly_params".into(), triplets.join(";"));
        if let Some(p) = self.poly_params.first() {
            s.insert("m".into(), p.m.to_string());
            s.insert("n0".into(), p.n0.to_string());
        }
        s.insert("p_relaxed".into(), self.p_relaxed.to_string());
        s.insert("poly_weight".into(), self.poly_weight.to_string());
        s.insert("household_size".into(), self.household_size.to_string());
        s.insert("train_fraction".into(), self.train_fraction.to_string());
        s.insert("full_grid".into(), self.full_grid.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_grid.is_empty() {
            return Err(invalid("tau grid is empty"));
        }
        if self.tau_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("tau values must be finite and >= 0"));
        }
        if self.tau_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("tau grid must be strictly increasing"));
        }
        if self.replications < 1 {
            return Err(invalid("replications must be >= 1"));
        }
        if self.household_size < 2 || self.n < self.household_size {
            return Err(invalid(format!(
                "need N_hh >= 2 and n >= N_hh, got n = {}, N_hh = {}",
                self.n, self.household_size
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!(
                "train fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.p_relaxed) {
            return Err(invalid(format!(
                "p_relaxed {} outside [0, 1]",
                self.p_relaxed
            )));
        }
        check_report_times(&self.report_times)?;
        match self.scenario {
            Scenario::Poly => {
                if self.poly_params.is_empty() {
                    return Err(invalid(
                        "poly scenario needs at least one parameter triplet",
                    ));
                }
                for p in &self.poly_params {
                    p.validated()?;
                    if self.n <= p.n0 {
                        return Err(invalid(format!("n = {} must exceed n0 = {}", self.n, p.n0)));
                    }
                }
                if !(self.poly_weight > 0.0 && self.poly_weight < 1.0) {
                    return Err(invalid(format!(
                        "poly weight {} outside (0, 1)",
                        self.poly_weight
                    )));
                }
            }
            _ => {
                if self.clique_sizes.is_empty() {
                    return Err(invalid("clique scenario needs at least one size"));
                }
                for &size in &self.clique_sizes {
                    let w = fixed_density_weight(size)?;
                    if w.is_nan() || w >= 1.0 {
                        return Err(invalid(format!("size {size} gives weight {w} >= 1")));
                    }
                    if size > self.n {
                        return Err(invalid(format!("size {size} exceeds n = {}", self.n)));
                    }
                }
            }
        }
        Ok(())
    }

    /// Second-layer models and weights, one per parameter cell.
    pub fn graph_cells(&self) -> Vec<(GraphModel, f64)> {
        match self.scenario {
            Scenario::Poly => self
                .poly_params
                .iter()
                .map(|p| (GraphModel::Poly(*p), self.poly_weight))
                .collect(),
            _ => self
                .clique_sizes
                .iter()
                .map(|&size| {
                    let model = GraphModel::Clique {
                        size,
                        p_relaxed: self.p_relaxed,
                    };
                    (model, fixed_density_weight(size).expect("validated size"))
                })
                .collect(),
        }
    }

    pub fn run_count(&self) -> usize {
        self.graph_cells().len() * self.tau_grid.len() * self.replications
    }

    /// Horizons the estimators are evaluated at.
    pub fn evaluation_times(&self) -> Vec<f64> {
        if self.full_grid {
            full_grid_times()
        } else {
            self.report_times.clone()
        }
    }
}

/// The ten attachment triplets: `p_pa = 0` with `p_tr` from 0.1 to 0.3,
/// then `p_tr = 0` with `p_pa` from 0.1 to 0.3, the rest uniform.
fn default_poly_params() -> Vec<PolyParams> {
    let steps = [0.1, 0.15, 0.2, 0.25, 0.3];
    let mut out: Vec<PolyParams> = steps
        .iter()
        .map(|&tr| PolyParams::new(0.0, 1.0 - tr, tr))
        .collect();
    out.extend(steps.iter().map(|&pa| PolyParams::new(pa, 1.0 - pa, 0.0)));
    out
}

/// Every grid time from 0.1 to 30.
pub fn full_grid_times() -> Vec<f64> {
    (1..=grid_len(DEFAULT_DT, DEFAULT_T_MAX))
        .map(|k| grid_time(k, DEFAULT_DT))
        .collect()
}

pub(crate) fn check_report_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("no report times"));
    }
    for &t in times {
        let k = (t / DEFAULT_DT).round();
        if !(t > 0.0 && t <= DEFAULT_T_MAX) || (k * DEFAULT_DT - t).abs() > 1e-9 {
            return Err(invalid(format!(
                "report time {t} is not on the grid {DEFAULT_DT}..{DEFAULT_T_MAX}"
            )));
        }
    }
    Ok(())
}

/// `start, start + step, …, stop`, computed in integer millionths so that
/// each value is the double nearest its decimal form.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    const SCALE: f64 = 1e6;
    if !(step > 0.0 && start.is_finite() && stop >= start) {
        return Err(invalid(format!("bad grid {start}:{stop}:{step}")));
    }
    let (a, b, s) = (
        (start * SCALE).round() as i64,
        (stop * SCALE).round() as i64,
        (step * SCALE).round() as i64,
    );
    if s == 0 {
        return Err(invalid(format!("grid step {step} too small")));
    }
    Ok((0..)
        .map(|k| a + k * s)
        .take_while(|&x| x <= b)
        .map(|x| x as f64 / SCALE)
        .collect())
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_settings(text: &str, origin: &str) -> Result<Settings> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("{origin}:{}: expected key=value", i + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(invalid(format!("{origin}:{}: empty key", i + 1)));
        }
        out.insert(key.replace('-', "_"), value.trim().to_string());
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<Settings> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_settings(&text, &path.display().to_string())
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("invalid value {value:?} for {key}")))
}

pub(crate) fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Either a comma list or `start:stop:step`.
fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [a, b, s] => linear_grid(
            parse_value("tau_grid", a)?,
            parse_value("tau_grid", b)?,
            parse_value("tau_grid", s)?,
        ),
        _ => parse_list("tau_grid", value),
    }
}

/// `p_pa/p_u/p_tr` triplets separated by `;`.
fn parse_triplets(value: &str) -> Result<Vec<PolyParams>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|t| {
            let v: Vec<f64> = t
                .split('/')
                .map(|x| parse_value("poly_params", x))
                .collect::<Result<_>>()?;
            match v.as_slice() {
                [pa, u, tr] => Ok(PolyParams::new(*pa, *u, *tr)),
                _ => Err(invalid(format!("poly triplet {t:?} needs three values"))),
            }
        })
        .collect()
}
