//! Likelihood-based estimators of the infection rate and their RMSE.
//!
//! The exact estimator divides the number of infections by the integrated
//! SI weight, `τ̂ = z_I / ∫₀ᵀ W^SI dt`, using the event log and the graph.
//! The grid estimators use only daily-report series: household SI edges are
//! observed, out-of-household SI edges are approximated from compartment
//! sizes and an average degree, and the integral becomes a Riemann sum.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::epidemics::{EventKind, EventLog, Replay};
use crate::error::{invalid, Error, Result};
use crate::features::{check_header, csv_reader, csv_writer, RunManifest, TrajectoryFeatures};
use crate::netgen::LayeredGraph;

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const PREDICTIONS_HEADER: [&str; 4] = ["run_id", "T", "method", "tau_hat"];
pub const RESULTS_HEADER: [&str; 5] = ["method", "T", "rmse", "n_used", "n_missing"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Exact SI weight from the event log.
    MlExact,
    /// Out-of-household SI edges from the graph-wide mean degree.
    MlStatic,
    /// Out-of-household SI edges from the mean degree of infected vertices.
    MlDynamic,
    GbtAll,
    GbtSir,
    CnnAll,
    CnnSir,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::MlExact,
        Method::MlStatic,
        Method::MlDynamic,
        Method::GbtAll,
        Method::GbtSir,
        Method::CnnAll,
        Method::CnnSir,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::MlExact => "ml_exact",
            Method::MlStatic => "ml_static",
            Method::MlDynamic => "ml_dynamic",
            Method::GbtAll => "gbt_all",
            Method::GbtSir => "gbt_sir",
            Method::CnnAll => "cnn_all",
            Method::CnnSir => "cnn_sir",
        }
    }

    pub fn is_classical(self) -> bool {
        matches!(self, Method::MlExact | Method::MlStatic | Method::MlDynamic)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub run_id: u64,
    /// Observation horizon.
    pub t: f64,
    pub method: Method,
    /// `None` when the estimate is undefined (no SI exposure).
    pub tau_hat: Option<f64>,
}

/// Piecewise-constant SI weight of one epidemic, integrated once and
/// queried for any horizon.
#[derive(Debug, Clone)]
pub struct Exposure {
    initial_weight: f64,
    times: Vec<f64>,
    // after event k: integral of W over [0, times[k]], infections so far,
    // and W on [times[k], times[k+1])
    integral: Vec<f64>,
    infections: Vec<u64>,
    weight_after: Vec<f64>,
    end: f64,
}

impl Exposure {
    pub fn from_log(log: &EventLog, g: &LayeredGraph) -> Result<Exposure> {
        let mut replay = Replay::new(g, &log.initial_infected)?;
        let initial_weight = replay.si_weight();
        let k = log.events.len();
        let mut exposure = Exposure {
            initial_weight,
            times: Vec::with_capacity(k),
            integral: Vec::with_capacity(k),
            infections: Vec::with_capacity(k),
            weight_after: Vec::with_capacity(k),
            end: log.final_time,
        };
        let mut prev_t = 0.0;
        let mut w = initial_weight;
        let mut acc = 0.0;
        let mut z = 0;
        for e in &log.events {
            acc += w * (e.t - prev_t);
            replay.apply(e)?;
            if e.kind == EventKind::Infection {
                z += 1;
            }
            w = replay.si_weight();
            prev_t = e.t;
            exposure.times.push(e.t);
            exposure.integral.push(acc);
            exposure.infections.push(z);
            exposure.weight_after.push(w);
        }
        Ok(exposure)
    }

    /// `(z_I, ∫₀ᵀ W dt)`, with infections at exactly `T` included. Past the
    /// end of the log the weight is taken as unobserved.
    pub fn until(&self, horizon: f64) -> (u64, f64) {
        let k = self.times.partition_point(|&t| t <= horizon);
        let stop = horizon.min(self.end);
        if k == 0 {
            return (0, self.initial_weight * stop.max(0.0));
        }
        let last = k - 1;
        let tail = self.weight_after[last] * (stop - self.times[last]).max(0.0);
        (self.infections[last], self.integral[last] + tail)
    }

    pub fn tau_hat(&self, horizon: f64) -> Option<f64> {
        let (z, integral) = self.until(horizon);
        (integral > 0.0).then(|| z as f64 / integral)
    }
}

/// Exact estimate at horizon `t`; `None` without SI exposure.
pub fn tau_hat_exact(log: &EventLog, g: &LayeredGraph, t: f64) -> Result<Option<f64>> {
    check_horizon(t)?;
    Ok(Exposure::from_log(log, g)?.tau_hat(t))
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("observation horizon {t} must be > 0")));
    }
    Ok(())
}

/// Inputs shared by the out-of-household approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdMix {
    pub n: usize,
    /// Second-layer edge weight.
    pub w: f64,
    pub household_size: usize,
}

impl HouseholdMix {
    pub fn of(manifest: &RunManifest) -> Self {
        HouseholdMix {
            n: manifest.n,
            w: manifest.w,
            household_size: manifest.household_size,
        }
    }

    /// `I · (k − w·k / (w·k + N_hh − 1)) · S / n` for mean degree `k`.
    fn approximate(&self, infected: u32, susceptible: u32, degree: f64) -> Result<f64> {
        let mixing = self.w * degree + self.household_size as f64 - 1.0;
        if self.n == 0 || mixing.is_nan() || mixing <= 0.0 {
            return Err(invalid(format!(
                "degenerate mixing: n = {}, w·d + N_hh - 1 = {mixing}",
                self.n
            )));
        }
        let own_household = self.w * degree / mixing;
        Ok(f64::from(infected) * (degree - own_household) * f64::from(susceptible) / self.n as f64)
    }
}

/// Out-of-household SI edges from the graph-wide average degree `d`.
pub fn estimate_si_out_static(
    infected: u32,
    susceptible: u32,
    d: f64,
    mix: &HouseholdMix,
) -> Result<f64> {
    mix.approximate(infected, susceptible, d)
}

/// Out-of-household SI edges from the current mean out-of-household degree
/// of the infected vertices.
pub fn estimate_si_out_dynamic(
    infected: u32,
    susceptible: u32,
    d_infected: f64,
    mix: &HouseholdMix,
) -> Result<f64> {
    mix.approximate(infected, susceptible, d_infected)
}

/// Source of the out-of-household SI edge count in the grid estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiOut {
    Static,
    Dynamic,
    /// The recorded count itself, which isolates the discretization error.
    Observed,
}

/// Grid estimator at horizon `t` from daily-report series.
///
/// New infections are `(I_T + R_T) − I_0`. The exposure is a left-endpoint
/// Riemann sum of `Ŵ = E_SI_hh + w·Ê_SI_o` over the cells up to `t`; the
/// first cell, whose left endpoint precedes the grid, uses the first grid
/// value.
pub fn tau_hat_approx(
    features: &TrajectoryFeatures,
    manifest: &RunManifest,
    t: f64,
    variant: SiOut,
) -> Result<Option<f64>> {
    check_horizon(t)?;
    let last = features
        .index_of(t)
        .ok_or_else(|| invalid(format!("horizon {t} is not on the observation grid")))?;
    let mix = HouseholdMix::of(manifest);
    let w_hat = |k: usize| -> Result<f64> {
        let p = &features.points[k];
        let out = match variant {
            SiOut::Static => estimate_si_out_static(p.i, p.s, manifest.d, &mix)?,
            SiOut::Dynamic => estimate_si_out_dynamic(p.i, p.s, p.d_i_out, &mix)?,
            SiOut::Observed => p.e_si_o as f64,
        };
        Ok(p.e_si_hh as f64 + manifest.w * out)
    };
    let mut sum = w_hat(0)?;
    for k in 0..last {
        sum += w_hat(k)?;
    }
    let exposure = sum * features.dt();
    let p = &features.points[last];
    let new_infections = f64::from(p.i + p.r) - f64::from(features.initial_infected);
    Ok((exposure > 0.0).then(|| new_infections / exposure))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseSummary {
    pub rmse: f64,
    pub n_used: usize,
    pub n_missing: usize,
}

/// Root mean squared error over the defined estimates.
pub fn rmse(records: &[EstimateRecord], truths: &HashMap<u64, f64>) -> Result<RmseSummary> {
    let mut sum_sq = 0.0;
    let mut used = 0;
    let mut missing = 0;
    for r in records {
        let truth = *truths.get(&r.run_id).ok_or(Error::MissingTruth(r.run_id))?;
        match r.tau_hat {
            Some(est) => {
                sum_sq += (est - truth).powi(2);
                used += 1;
            }
            None => missing += 1,
        }
    }
    if used == 0 {
        return Err(Error::EmptyEstimateSet);
    }
    Ok(RmseSummary {
        rmse: (sum_sq / used as f64).sqrt(),
        n_used: used,
        n_missing: missing,
    })
}

/// One line of `results.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub t: f64,
    /// `None` if every estimate in the group was undefined.
    pub rmse: Option<f64>,
    pub n_used: usize,
    pub n_missing: usize,
}

/// RMSE per (method, horizon), ordered by method then horizon.
pub fn summarize(records: &[EstimateRecord], truths: &HashMap<u64, f64>) -> Result<Vec<ResultRow>> {
    let mut groups: BTreeMap<(Method, u64), Vec<EstimateRecord>> = BTreeMap::new();
    for r in records {
        // group horizons that agree to 1e-6
        let key = (r.t * 1e6).round() as u64;
        groups.entry((r.method, key)).or_default().push(*r);
    }
    let mut rows = Vec::with_capacity(groups.len());
    for ((method, _), group) in groups {
        let t = group[0].t;
        match rmse(&group, truths) {
            Ok(s) => rows.push(ResultRow {
                method,
                t,
                rmse: Some(s.rmse),
                n_used: s.n_used,
                n_missing: s.n_missing,
            }),
            Err(Error::EmptyEstimateSet) => rows.push(ResultRow {
                method,
                t,
                rmse: None,
                n_used: 0,
                n_missing: group.len(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

pub fn write_predictions(records: &[EstimateRecord], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(PREDICTIONS_HEADER)
        .map_err(|e| Error::csv(path, e))?;
    for r in records {
        w.write_record([
            r.run_id.to_string(),
            format!("{:.1}", r.t),
            r.method.to_string(),
            r.tau_hat.map(|x| x.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<EstimateRecord>> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &PREDICTIONS_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bad = |what: &str| Error::parse(path, line, format!("invalid {what}"));
        if record.len() != PREDICTIONS_HEADER.len() {
            return Err(bad("row length"));
        }
        out.push(EstimateRecord {
            run_id: record[0].parse().map_err(|_| bad("run_id"))?,
            t: record[1].parse().map_err(|_| bad("T"))?,
            method: record[2].parse().map_err(|_| bad("method"))?,
            tau_hat: match &record[3] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("tau_hat"))?),
            },
        });
    }
    Ok(out)
}

pub fn write_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RESULTS_HEADER)
        .map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            format!("{:.1}", r.t),
            r.rmse.map(|x| x.to_string()).unwrap_or_default(),
            r.n_used.to_string(),
            r.n_missing.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &RESULTS_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bad = |what: &str| Error::parse(path, line, format!("invalid {what}"));
        if record.len() != RESULTS_HEADER.len() {
            return Err(bad("row length"));
        }
        out.push(ResultRow {
            method: record[0].parse().map_err(|_| bad("method"))?,
            t: record[1].parse().map_err(|_| bad("T"))?,
            rmse: match &record[2] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad("rmse"))?),
            },
            n_used: record[3].parse().map_err(|_| bad("n_used"))?,
            n_missing: record[4].parse().map_err(|_| bad("n_missing"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemics::Event;
    use crate::features::{GraphModel, GridPoint, Split};
    use crate::netgen::build_household_layer;

    fn mix() -> HouseholdMix {
        HouseholdMix {
            n: 5000,
            w: 0.4,
            household_size: 5,
        }
    }

    #[test]
    fn static_formula_values() {
        assert_eq!(estimate_si_out_static(0, 4950, 8.0, &mix()).unwrap(), 0.0);
        let v = estimate_si_out_static(50, 4950, 8.0, &mix()).unwrap();
        // 50 · (8 − 3.2/7.2) · 0.99
        assert!((v - 374.0).abs() < 1e-9, "{v}");
        let zero_w = HouseholdMix { w: 0.0, ..mix() };
        // the formula requires w > 0 in practice but reduces to I·d·S/n
        let v = estimate_si_out_static(50, 4950, 8.0, &zero_w).unwrap();
        assert!((v - 50.0 * 8.0 * 0.99).abs() < 1e-9);
    }

    #[test]
    fn dynamic_formula_values() {
        let v = estimate_si_out_dynamic(50, 4950, 12.0, &mix()).unwrap();
        let expected = 50.0 * (12.0 - 4.8 / 8.8) * 0.99;
        assert!((v - expected).abs() < 1e-9);
        assert!((v - 567.0).abs() < 0.01, "{v}");
        assert_eq!(
            estimate_si_out_dynamic(50, 4950, 8.0, &mix()).unwrap(),
            estimate_si_out_static(50, 4950, 8.0, &mix()).unwrap()
        );
        assert_eq!(estimate_si_out_dynamic(0, 10, 12.0, &mix()).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_mixing_is_rejected() {
        let bad = HouseholdMix { n: 0, ..mix() };
        assert!(estimate_si_out_static(1, 1, 8.0, &bad).is_err());
        let bad = HouseholdMix {
            household_size: 1,
            ..mix()
        };
        assert!(estimate_si_out_static(1, 1, 0.0, &bad).is_err());
    }

    fn pair_log() -> (LayeredGraph, EventLog) {
        // one household of two: W = 1 while 0 is infected and 1 susceptible
        let g = build_household_layer(2, 2).unwrap();
        let log = EventLog {
            n: 2,
            initial_infected: vec![0],
            events: vec![Event {
                t: 0.5,
                kind: EventKind::Infection,
                vertex: 1,
            }],
            final_time: 3.0,
        };
        (g, log)
    }

    #[test]
    fn exact_constant_rate_case() {
        let (g, log) = pair_log();
        // one infection, W = 1 on [0, 0.5), then 0
        assert_eq!(tau_hat_exact(&log, &g, 2.0).unwrap(), Some(2.0));
        assert_eq!(tau_hat_exact(&log, &g, 0.5).unwrap(), Some(2.0));
        // before the infection: z = 0, exposure 0.25
        assert_eq!(tau_hat_exact(&log, &g, 0.25).unwrap(), Some(0.0));
        assert!(tau_hat_exact(&log, &g, 0.0).is_err());
    }

    #[test]
    fn exact_hand_integrated() {
        // two households of 11. Vertex 0 infected: W = 10. Vertex 11 (other
        // household) infected at t = 1: W = 20. Two more infections at t = 2.
        let g = build_household_layer(22, 11).unwrap();
        let log = EventLog {
            n: 22,
            initial_infected: vec![0],
            events: vec![
                Event {
                    t: 1.0,
                    kind: EventKind::Infection,
                    vertex: 11,
                },
                Event {
                    t: 2.0,
                    kind: EventKind::Infection,
                    vertex: 1,
                },
                Event {
                    t: 2.0,
                    kind: EventKind::Infection,
                    vertex: 12,
                },
            ],
            final_time: 30.0,
        };
        let est = tau_hat_exact(&log, &g, 2.0).unwrap().unwrap();
        assert!((est - 0.1).abs() < 1e-12);
        let exposure = Exposure::from_log(&log, &g).unwrap();
        assert_eq!(exposure.until(2.0), (3, 30.0));
        // afterwards each household has 2 I × 9 S: W = 36
        assert!((exposure.tau_hat(2.5).unwrap() - 3.0 / 48.0).abs() < 1e-12);
        assert_eq!(exposure.until(0.5), (0, 5.0));
    }

    #[test]
    fn undefined_without_exposure() {
        let g = build_household_layer(4, 2).unwrap();
        let log = EventLog {
            n: 4,
            initial_infected: vec![],
            events: vec![],
            final_time: 0.0,
        };
        assert_eq!(tau_hat_exact(&log, &g, 4.0).unwrap(), None);
    }

    fn constant_features(w: f64, dt: f64, len: usize, infections_at: usize) -> TrajectoryFeatures {
        let points = (0..len)
            .map(|k| {
                let infected = if k + 1 >= infections_at { 2 } else { 1 };
                GridPoint {
                    t: (k + 1) as f64 * dt,
                    s: 100 - infected,
                    i: infected,
                    r: 0,
                    e_si_hh: w as u64,
                    e_si_o: 0,
                    d_s_w: 0.0,
                    d_i_w: 0.0,
                    d_i_out: 0.0,
                }
            })
            .collect();
        TrajectoryFeatures {
            run_id: 0,
            initial_infected: 1,
            points,
        }
    }

    fn manifest() -> RunManifest {
        RunManifest {
            run_id: 0,
            model: GraphModel::Clique {
                size: 9,
                p_relaxed: 0.0,
            },
            w: 0.4,
            n: 100,
            household_size: 5,
            d: 8.0,
            tau: 0.45,
            seed: 0,
            split: Split::Test,
        }
    }

    #[test]
    fn grid_constant_case() {
        // W = 5 throughout, one infection by T = 1: 1 / 5
        let f = constant_features(5.0, 0.1, 300, 4);
        let est = tau_hat_approx(&f, &manifest(), 1.0, SiOut::Observed)
            .unwrap()
            .unwrap();
        assert!((est - 0.2).abs() < 1e-12);
        assert!(tau_hat_approx(&f, &manifest(), 1.05, SiOut::Observed).is_err());
    }

    #[test]
    fn grid_variants_agree_when_degrees_match() {
        let mut f = constant_features(5.0, 0.1, 300, 4);
        for p in &mut f.points {
            p.d_i_out = 8.0;
        }
        let a = tau_hat_approx(&f, &manifest(), 2.0, SiOut::Static).unwrap();
        let b = tau_hat_approx(&f, &manifest(), 2.0, SiOut::Dynamic).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rmse_values() {
        let truths: HashMap<u64, f64> = [(1, 0.5), (2, 0.5), (3, 0.4)].into_iter().collect();
        let rec = |run_id, tau_hat| EstimateRecord {
            run_id,
            t: 4.0,
            method: Method::MlExact,
            tau_hat,
        };
        let s = rmse(&[rec(1, Some(0.4)), rec(2, Some(0.5))], &truths).unwrap();
        assert!((s.rmse - (0.01f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((s.rmse - 0.0707).abs() < 1e-4);
        let s = rmse(&[rec(3, Some(0.43)), rec(1, None)], &truths).unwrap();
        assert!((s.rmse - 0.03).abs() < 1e-12);
        assert_eq!((s.n_used, s.n_missing), (1, 1));
        assert_eq!(
            rmse(&[rec(1, Some(0.5)), rec(2, Some(0.5))], &truths)
                .unwrap()
                .rmse,
            0.0
        );
        assert!(matches!(
            rmse(&[rec(1, None)], &truths),
            Err(Error::EmptyEstimateSet)
        ));
        assert!(matches!(
            rmse(&[rec(9, Some(0.1))], &truths),
            Err(Error::MissingTruth(9))
        ));
    }

    #[test]
    fn summary_groups_and_files() {
        let truths: HashMap<u64, f64> = [(1, 0.5), (2, 0.3)].into_iter().collect();
        let mut records = Vec::new();
        for method in [Method::MlStatic, Method::MlExact] {
            for t in [1.0, 4.0] {
                records.push(EstimateRecord {
                    run_id: 1,
                    t,
                    method,
                    tau_hat: Some(0.45),
                });
                records.push(EstimateRecord {
                    run_id: 2,
                    t,
                    method,
                    tau_hat: None,
                });
            }
        }
        let rows = summarize(&records, &truths).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].method, Method::MlExact);
        assert_eq!(rows[0].t, 1.0);
        assert_eq!((rows[0].n_used, rows[0].n_missing), (1, 1));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(PREDICTIONS_FILE);
        write_predictions(&records, &p).unwrap();
        assert_eq!(read_predictions(&p).unwrap(), records);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(
            text.starts_with("run_id,T,method,tau_hat\n1,1.0,ml_static,0.45\n2,1.0,ml_static,\n")
        );
        let r = dir.path().join(RESULTS_FILE);
        write_results(&rows, &r).unwrap();
        assert_eq!(read_results(&r).unwrap(), rows);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("xgb".parse::<Method>().is_err());
    }
}
