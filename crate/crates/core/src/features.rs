//! Daily-report series sampled from event logs, run manifests, and the
//! `manifest.csv` / `series.csv` dataset files.
//!
//! A grid value at time `t` is the state after every event at or before `t`.
//! When a class is empty its mean degree is reported as 0.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::epidemics::{initial_infected_count, EventLog, Replay, SimParams};
use crate::error::{invalid, Error, Result};
use crate::netgen::{CliqueParams, LayeredGraph, PolyParams};

pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_T_MAX: f64 = 30.0;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const SERIES_FILE: &str = "series.csv";

pub const MANIFEST_HEADER: [&str; 16] = [
    "run_id",
    "graph_model",
    "p_pa",
    "p_u",
    "p_tr",
    "m",
    "n0",
    "N_wp",
    "p_relaxed",
    "w",
    "n",
    "N_hh",
    "d",
    "tau",
    "seed",
    "split",
];

pub const SERIES_HEADER: [&str; 10] = [
    "run_id", "t", "S", "I", "R", "E_SI_hh", "E_SI_o", "d_S_w", "d_I_w", "d_I_out",
];

/// Observation at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub s: u32,
    pub i: u32,
    pub r: u32,
    /// SI edges inside households.
    pub e_si_hh: u64,
    /// SI edges in the second layer.
    pub e_si_o: u64,
    /// Mean weighted degree (both layers) of susceptible vertices.
    pub d_s_w: f64,
    /// Mean weighted degree (both layers) of infected vertices.
    pub d_i_w: f64,
    /// Mean second-layer neighbor count of infected vertices.
    pub d_i_out: f64,
}

impl GridPoint {
    fn observe(replay: &Replay<'_>, t: f64) -> GridPoint {
        let (s, i, r) = replay.counts();
        GridPoint {
            t,
            s: s as u32,
            i: i as u32,
            r: r as u32,
            e_si_hh: replay.si_household(),
            e_si_o: replay.si_second(),
            d_s_w: replay.mean_weighted_degree_susceptible(),
            d_i_w: replay.mean_weighted_degree_infected(),
            d_i_out: replay.mean_second_degree_infected(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFeatures {
    pub run_id: u64,
    /// Infected count at t = 0 (not part of the grid).
    pub initial_infected: u32,
    pub points: Vec<GridPoint>,
}

impl TrajectoryFeatures {
    /// Grid spacing, assuming an equidistant grid starting at one step.
    pub fn dt(&self) -> f64 {
        self.points.first().map_or(DEFAULT_DT, |p| p.t)
    }

    /// Index of the grid point at time `t`, if it lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let dt = self.dt();
        let k = (t / dt).round();
        if k < 1.0 || (k * dt - t).abs() > 1e-6 * dt.max(t) {
            return None;
        }
        let idx = k as usize - 1;
        (idx < self.points.len()).then_some(idx)
    }
}

/// Number of grid points `round(t_max / dt)`.
pub fn grid_len(dt: f64, t_max: f64) -> usize {
    (t_max / dt).round() as usize
}

/// Time of grid point `k` (1-based). For steps of the form `1/q` the value
/// is `k/q`, the double nearest to its decimal printout.
pub fn grid_time(k: usize, dt: f64) -> f64 {
    let per_unit = (1.0 / dt).round();
    if ((1.0 / dt) - per_unit).abs() < 1e-9 {
        k as f64 / per_unit
    } else {
        k as f64 * dt
    }
}

/// Samples the series of `log` on the grid `dt, 2·dt, …, t_max`.
pub fn sample_grid(
    log: &EventLog,
    g: &LayeredGraph,
    dt: f64,
    t_max: f64,
) -> Result<TrajectoryFeatures> {
    if !(dt > 0.0 && t_max >= dt) {
        return Err(invalid(format!("bad grid dt = {dt}, t_max = {t_max}")));
    }
    if log.n != g.n() {
        return Err(invalid(format!(
            "event log for {} vertices replayed on a graph with {}",
            log.n,
            g.n()
        )));
    }
    let mut replay = Replay::new(g, &log.initial_infected)?;
    let len = grid_len(dt, t_max);
    let mut points = Vec::with_capacity(len);
    let mut next = 0;
    for k in 1..=len {
        let t = grid_time(k, dt);
        while next < log.events.len() && log.events[next].t <= t {
            replay.apply(&log.events[next])?;
            next += 1;
        }
        points.push(GridPoint::observe(&replay, t));
    }
    // events past the grid must still be valid for this graph
    for e in &log.events[next..] {
        replay.apply(e)?;
    }
    Ok(TrajectoryFeatures {
        run_id: 0,
        initial_infected: log.initial_infected.len() as u32,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphModel {
    Poly(PolyParams),
    Clique { size: usize, p_relaxed: f64 },
}

impl GraphModel {
    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::Poly(_) => "poly",
            GraphModel::Clique { .. } => "clique",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(invalid(format!("unknown split {s:?}"))),
        }
    }
}

/// Everything needed to regenerate and interpret one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: u64,
    pub model: GraphModel,
    /// Second-layer edge weight.
    pub w: f64,
    pub n: usize,
    pub household_size: usize,
    /// Average out-of-household degree of the realized graph.
    pub d: f64,
    /// True infection rate.
    pub tau: f64,
    pub seed: u64,
    pub split: Split,
}

impl RunManifest {
    pub fn clique_params(&self) -> Option<CliqueParams> {
        match self.model {
            GraphModel::Clique { size, p_relaxed } => Some(CliqueParams {
                size,
                p_relaxed,
                w: self.w,
            }),
            GraphModel::Poly(_) => None,
        }
    }

    /// Clique size, if the second layer is made of workplaces.
    pub fn workplace_size(&self) -> Option<usize> {
        self.clique_params().map(|c| c.size)
    }

    /// Key of the (graph parameters, τ) cell this run belongs to.
    pub fn stratum(&self) -> String {
        let f = self.csv_fields();
        // graph_model .. N_hh, then tau
        format!("{}|{}", f[1..12].join(","), f[13])
    }

    fn csv_fields(&self) -> Vec<String> {
        let (p_pa, p_u, p_tr, m, n0, n_wp, p_relaxed) = match self.model {
            GraphModel::Poly(p) => (
                p.p_pa.to_string(),
                p.p_u.to_string(),
                p.p_tr.to_string(),
                p.m.to_string(),
                p.n0.to_string(),
                String::new(),
                String::new(),
            ),
            GraphModel::Clique { size, p_relaxed } => (
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                size.to_string(),
                p_relaxed.to_string(),
            ),
        };
        vec![
            self.run_id.to_string(),
            self.model.name().to_string(),
            p_pa,
            p_u,
            p_tr,
            m,
            n0,
            n_wp,
            p_relaxed,
            self.w.to_string(),
            self.n.to_string(),
            self.household_size.to_string(),
            self.d.to_string(),
            self.tau.to_string(),
            self.seed.to_string(),
            self.split.to_string(),
        ]
    }

    fn from_record(record: &csv::StringRecord, path: &Path, line: usize) -> Result<RunManifest> {
        let field = |i: usize| record.get(i).unwrap_or("");
        fn num<T: FromStr>(s: &str, name: &str, path: &Path, line: usize) -> Result<T> {
            s.parse()
                .map_err(|_| Error::parse(path, line, format!("invalid {name} {s:?}")))
        }
        if record.len() != MANIFEST_HEADER.len() {
            return Err(Error::parse(path, line, "wrong number of fields"));
        }
        let model = match field(1) {
            "poly" => GraphModel::Poly(PolyParams {
                p_pa: num(field(2), "p_pa", path, line)?,
                p_u: num(field(3), "p_u", path, line)?,
                p_tr: num(field(4), "p_tr", path, line)?,
                m: num(field(5), "m", path, line)?,
                n0: num(field(6), "n0", path, line)?,
            }),
            "clique" => GraphModel::Clique {
                size: num(field(7), "N_wp", path, line)?,
                p_relaxed: num(field(8), "p_relaxed", path, line)?,
            },
            other => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("unknown graph_model {other:?}"),
                ))
            }
        };
        Ok(RunManifest {
            run_id: num(field(0), "run_id", path, line)?,
            model,
            w: num(field(9), "w", path, line)?,
            n: num(field(10), "n", path, line)?,
            household_size: num(field(11), "N_hh", path, line)?,
            d: num(field(12), "d", path, line)?,
            tau: num(field(13), "tau", path, line)?,
            seed: num(field(14), "seed", path, line)?,
            split: field(15)
                .parse()
                .map_err(|_| Error::parse(path, line, "invalid split"))?,
        })
    }
}

/// Stratified train/test assignment, returned in input order.
///
/// Within each (graph parameters, τ) stratum the members are shuffled and
/// the first `round(train_fraction · count)` become training runs. Strata
/// with fewer than two runs go to training with a warning.
pub fn split_train_test<R: Rng + ?Sized>(
    manifests: &[RunManifest],
    train_fraction: f64,
    rng: &mut R,
) -> Result<Vec<Split>> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in manifests.iter().enumerate() {
        strata.entry(m.stratum()).or_default().push(i);
    }
    let mut splits = vec![Split::Train; manifests.len()];
    for (key, mut members) in strata {
        if members.len() < 2 {
            log::warn!(
                "stratum {key} has {} run(s); assigned to train",
                members.len()
            );
            continue;
        }
        members.shuffle(rng);
        let n_train = ((train_fraction * members.len() as f64).round() as usize).min(members.len());
        for &i in &members[n_train..] {
            splits[i] = Split::Test;
        }
    }
    Ok(splits)
}

/// Formats with six significant digits, trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() {
            "0".to_string()
        } else {
            x.to_string()
        };
    }
    let sci = format!("{x:.5e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if !(-5..=15).contains(&exponent) {
        return sci;
    }
    let decimals = (5 - exponent).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

pub fn write_manifest(manifests: &[RunManifest], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(MANIFEST_HEADER)
        .map_err(|e| Error::csv(path, e))?;
    for m in manifests {
        w.write_record(m.csv_fields())
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<RunManifest>> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &MANIFEST_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        out.push(RunManifest::from_record(&record, path, i + 2)?);
    }
    Ok(out)
}

/// Incremental writer for `series.csv`, for datasets too large to hold.
pub struct SeriesWriter {
    path: std::path::PathBuf,
    writer: csv::Writer<fs::File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<SeriesWriter> {
        let mut writer = csv_writer(path)?;
        writer
            .write_record(SERIES_HEADER)
            .map_err(|e| Error::csv(path, e))?;
        Ok(SeriesWriter {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn write(&mut self, f: &TrajectoryFeatures) -> Result<()> {
        let id = f.run_id.to_string();
        for p in &f.points {
            self.writer
                .write_record([
                    id.clone(),
                    format!("{:.1}", p.t),
                    p.s.to_string(),
                    p.i.to_string(),
                    p.r.to_string(),
                    p.e_si_hh.to_string(),
                    p.e_si_o.to_string(),
                    format_sig6(p.d_s_w),
                    format_sig6(p.d_i_w),
                    format_sig6(p.d_i_out),
                ])
                .map_err(|e| Error::csv(&self.path, e))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn write_series<'a>(runs: impl Iterator<Item = &'a TrajectoryFeatures>, path: &Path) -> Result<()> {
    let mut w = SeriesWriter::create(path)?;
    for f in runs {
        w.write(f)?;
    }
    w.finish()
}

fn read_series(path: &Path, wanted: &HashSet<u64>) -> Result<BTreeMap<u64, Vec<GridPoint>>> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &SERIES_HEADER)?;
    let mut out: BTreeMap<u64, Vec<GridPoint>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != SERIES_HEADER.len() {
            return Err(Error::parse(path, line, "wrong number of fields"));
        }
        let get = |k: usize| &record[k];
        macro_rules! parse {
            ($k:expr) => {
                get($k).parse().map_err(|_| {
                    Error::parse(path, line, format!("invalid {}", SERIES_HEADER[$k]))
                })?
            };
        }
        let run_id: u64 = parse!(0);
        if !wanted.contains(&run_id) {
            continue;
        }
        out.entry(run_id).or_default().push(GridPoint {
            t: parse!(1),
            s: parse!(2),
            i: parse!(3),
            r: parse!(4),
            e_si_hh: parse!(5),
            e_si_o: parse!(6),
            d_s_w: parse!(7),
            d_i_w: parse!(8),
            d_i_out: parse!(9),
        });
    }
    Ok(out)
}

/// Writes `manifest.csv` and `series.csv` into `dir`, replacing any
/// previous contents. Runs are written in `run_id` order.
pub fn export_dataset(runs: &[(RunManifest, TrajectoryFeatures)], dir: &Path) -> Result<()> {
    let mut seen = HashSet::new();
    for (m, f) in runs {
        if m.run_id != f.run_id {
            return Err(invalid(format!(
                "manifest run {} paired with series of run {}",
                m.run_id, f.run_id
            )));
        }
        if !seen.insert(m.run_id) {
            return Err(Error::DuplicateRunId(m.run_id));
        }
    }
    let mut order: Vec<&(RunManifest, TrajectoryFeatures)> = runs.iter().collect();
    order.sort_by_key(|(m, _)| m.run_id);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifests: Vec<RunManifest> = order.iter().map(|(m, _)| m.clone()).collect();
    write_manifest(&manifests, &dir.join(MANIFEST_FILE))?;
    write_series(order.iter().map(|(_, f)| f), &dir.join(SERIES_FILE))
}

/// Reads a dataset written by [`export_dataset`]. The t = 0 infected count
/// is restored from `n` and the default seeding fraction.
pub fn import_dataset(dir: &Path) -> Result<Vec<(RunManifest, TrajectoryFeatures)>> {
    import_dataset_where(dir, |_| true)
}

/// Like [`import_dataset`], but loads only the runs accepted by `keep`.
pub fn import_dataset_where(
    dir: &Path,
    mut keep: impl FnMut(&RunManifest) -> bool,
) -> Result<Vec<(RunManifest, TrajectoryFeatures)>> {
    let mut manifests = read_manifest(&dir.join(MANIFEST_FILE))?;
    let mut seen = HashSet::new();
    for m in &manifests {
        if !seen.insert(m.run_id) {
            return Err(Error::DuplicateRunId(m.run_id));
        }
    }
    manifests.retain(|m| keep(m));
    let wanted: HashSet<u64> = manifests.iter().map(|m| m.run_id).collect();
    let mut series = read_series(&dir.join(SERIES_FILE), &wanted)?;
    let mut out = Vec::with_capacity(manifests.len());
    for m in manifests {
        let points = series
            .remove(&m.run_id)
            .ok_or(Error::MissingSeries(m.run_id))?;
        let initial = initial_infected_count(m.n, SimParams::DEFAULT_INIT_FRACTION) as u32;
        let features = TrajectoryFeatures {
            run_id: m.run_id,
            initial_infected: initial,
            points,
        };
        out.push((m, features));
    }
    Ok(out)
}

/// Keeps the runs accepted by `keep`, for carving sub-datasets.
pub fn filter_runs(
    runs: &[(RunManifest, TrajectoryFeatures)],
    mut keep: impl FnMut(&RunManifest) -> bool,
) -> Vec<(RunManifest, TrajectoryFeatures)> {
    runs.iter().filter(|(m, _)| keep(m)).cloned().collect()
}

/// Map from run id to true τ.
pub fn truths(
    manifests: impl IntoIterator<Item = impl std::borrow::Borrow<RunManifest>>,
) -> HashMap<u64, f64> {
    manifests
        .into_iter()
        .map(|m| {
            let m = m.borrow();
            (m.run_id, m.tau)
        })
        .collect()
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

pub(crate) fn check_header(
    reader: &mut csv::Reader<fs::File>,
    path: &Path,
    expected: &[&str],
) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    Ok(())
}
