//! Exact continuous-time SIR dynamics on a [`LayeredGraph`].
//!
//! Every SI edge of weight `ω` transmits at rate `τ·ω` and every infected
//! vertex recovers at rate `γ`. The simulator keeps, for each infected
//! vertex, the total weight of its edges to susceptible neighbors in a sum
//! tree, so drawing the infector is logarithmic and an event costs
//! `O(degree + log n)`.

use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Error, Result};
use crate::netgen::{Layer, LayeredGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Susceptible,
    Infected,
    Recovered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Infection rate per unit edge weight.
    pub tau: f64,
    /// Recovery rate.
    pub gamma: f64,
    pub init_infected_fraction: f64,
    pub t_max: f64,
}

impl SimParams {
    pub const DEFAULT_GAMMA: f64 = 1.0;
    pub const DEFAULT_INIT_FRACTION: f64 = 0.01;
    pub const DEFAULT_T_MAX: f64 = 30.0;

    pub fn new(tau: f64) -> Self {
        SimParams {
            tau,
            gamma: Self::DEFAULT_GAMMA,
            init_infected_fraction: Self::DEFAULT_INIT_FRACTION,
            t_max: Self::DEFAULT_T_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // tau = 0 is accepted: it is the degenerate pure-recovery process
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau {} must be finite and >= 0", self.tau)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid(format!("gamma {} must be > 0", self.gamma)));
        }
        check_fraction(self.init_infected_fraction)?;
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(invalid(format!("t_max {} must be > 0", self.t_max)));
        }
        Ok(())
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(invalid(format!(
            "initial infected fraction {f} outside (0, 1)"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Infection,
    Recovery,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Infection => "infection",
            EventKind::Recovery => "recovery",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub vertex: u32,
}

/// Time-ordered infections and recoveries of one epidemic.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub n: usize,
    pub initial_infected: Vec<u32>,
    pub events: Vec<Event>,
    /// Extinction time, or the simulation horizon if the epidemic was still
    /// running.
    pub final_time: f64,
}

impl EventLog {
    pub fn infections(&self) -> impl Iterator<Item = &Event> + '_ {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Infection)
    }

    /// `(S, I, R)` after the last event.
    pub fn final_counts(&self) -> (usize, usize, usize) {
        let infected = self.initial_infected.len() + self.infections().count();
        let recovered = self.events.len() - self.infections().count();
        (self.n - infected, infected - recovered, recovered)
    }

    /// Debug text form: a header `n=<n> final_time=<t> initial=<v,...>`
    /// followed by one `t kind vertex` line per event.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let initial: Vec<String> = self.initial_infected.iter().map(u32::to_string).collect();
        writeln!(
            out,
            "n={} final_time={} initial={}",
            self.n,
            self.final_time,
            initial.join(",")
        )?;
        for e in &self.events {
            writeln!(out, "{} {} {}", e.t, e.kind, e.vertex)?;
        }
        out.flush()
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<EventLog> {
        const SOURCE: &str = "<event log>";
        let bad = |line: usize, msg: &str| Error::parse(SOURCE, line, msg);
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| bad(1, "missing header"))?
            .map_err(|e| Error::io(SOURCE, e))?;
        let mut n = None;
        let mut final_time = None;
        let mut initial = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("n", v)) => n = v.parse::<usize>().ok(),
                Some(("final_time", v)) => final_time = v.parse::<f64>().ok(),
                Some(("initial", "")) => initial = Some(Vec::new()),
                Some(("initial", v)) => {
                    initial = v.split(',').map(|s| s.parse::<u32>().ok()).collect();
                }
                _ => return Err(bad(1, "unexpected header field")),
            }
        }
        let (Some(n), Some(final_time), Some(initial_infected)) = (n, final_time, initial) else {
            return Err(bad(1, "incomplete header"));
        };
        let mut events = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(SOURCE, e))?;
            let mut it = line.split_whitespace();
            let t = it.next().and_then(|s| s.parse::<f64>().ok());
            let kind = match it.next() {
                Some("infection") => Some(EventKind::Infection),
                Some("recovery") => Some(EventKind::Recovery),
                _ => None,
            };
            let vertex = it.next().and_then(|s| s.parse::<u32>().ok());
            match (t, kind, vertex) {
                (Some(t), Some(kind), Some(vertex)) => events.push(Event { t, kind, vertex }),
                _ => return Err(bad(idx + 2, "expected `t kind vertex`")),
            }
        }
        Ok(EventLog {
            n,
            initial_infected,
            events,
            final_time,
        })
    }

    /// Replays the log on `g`, checking that it is a valid SIR history:
    /// increasing times, legal transitions and an infected neighbor behind
    /// every infection.
    pub fn verify(&self, g: &LayeredGraph) -> Result<()> {
        let mut replay = Replay::new(g, &self.initial_infected)?;
        let mut last = 0.0;
        for (i, e) in self.events.iter().enumerate() {
            if e.t.is_nan() || e.t <= last || e.t > self.final_time {
                return Err(invalid(format!("event {i} at t = {} out of order", e.t)));
            }
            last = e.t;
            if e.kind == EventKind::Infection && !replay.has_infected_neighbor(e.vertex) {
                return Err(invalid(format!(
                    "event {i}: vertex {} infected without an infected neighbor",
                    e.vertex
                )));
            }
            replay.apply(e)?;
        }
        Ok(())
    }
}

/// Number of initially infected vertices, `⌈fraction · n⌉`.
pub fn initial_infected_count(n: usize, fraction: f64) -> usize {
    // absorb representation error such as 0.011 * 100 = 1.0999999999999999
    let raw = fraction * n as f64;
    let nearest = raw.round();
    let count = if (raw - nearest).abs() < 1e-9 {
        nearest
    } else {
        raw.ceil()
    };
    (count as usize).min(n)
}

/// Uniform sample without replacement of `⌈fraction · n⌉` vertices, sorted.
pub fn init_state<R: Rng + ?Sized>(
    g: &LayeredGraph,
    fraction: f64,
    rng: &mut R,
) -> Result<Vec<u32>> {
    check_fraction(fraction)?;
    let count = initial_infected_count(g.n(), fraction);
    let mut chosen: Vec<u32> = rand::seq::index::sample(rng, g.n(), count)
        .into_iter()
        .map(|v| v as u32)
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Seeds `⌈init_infected_fraction · n⌉` infections and simulates to
/// extinction or `t_max`.
pub fn gillespie_run<R: Rng + ?Sized>(
    g: &LayeredGraph,
    params: &SimParams,
    rng: &mut R,
) -> Result<EventLog> {
    params.validate()?;
    let initial = init_state(g, params.init_infected_fraction, rng)?;
    gillespie_from(g, params, &initial, rng)
}

/// Simulates from an explicit set of initially infected vertices.
pub fn gillespie_from<R: Rng + ?Sized>(
    g: &LayeredGraph,
    params: &SimParams,
    initial: &[u32],
    rng: &mut R,
) -> Result<EventLog> {
    params.validate()?;
    let n = g.n();
    let mut status = vec![Status::Susceptible; n];
    let mut infected: Vec<u32> = Vec::with_capacity(initial.len());
    let mut slot = vec![usize::MAX; n];
    for &v in initial {
        if v as usize >= n {
            return Err(Error::UnknownVertex { vertex: v, n });
        }
        if status[v as usize] != Status::Susceptible {
            return Err(invalid(format!(
                "vertex {v} listed twice as initially infected"
            )));
        }
        status[v as usize] = Status::Infected;
        slot[v as usize] = infected.len();
        infected.push(v);
    }

    // per infected vertex: weight and number of adjacency entries to
    // susceptible neighbors
    let mut si_weight = vec![0.0; n];
    let mut si_entries = vec![0u32; n];
    let mut tree = SumTree::new(n);
    for &v in &infected {
        for nb in g.neighbors(v) {
            if status[nb.vertex as usize] == Status::Susceptible {
                si_weight[v as usize] += nb.weight;
                si_entries[v as usize] += 1;
            }
        }
        tree.set(v as usize, si_weight[v as usize]);
    }

    let mut events = Vec::new();
    let mut t = 0.0;
    let final_time = loop {
        if infected.is_empty() {
            break t;
        }
        let infection_rate = params.tau * tree.total();
        let recovery_rate = params.gamma * infected.len() as f64;
        let total = infection_rate + recovery_rate;
        let wait: f64 = Exp1.sample(rng);
        t += wait / total;
        if t >= params.t_max {
            break params.t_max;
        }
        if rng.random::<f64>() * total < infection_rate {
            let source = tree.sample(rng.random::<f64>() * tree.total());
            let target = pick_susceptible(g, &status, source as u32, si_weight[source], rng);
            let x = target as usize;
            for nb in g.neighbors(target) {
                let y = nb.vertex as usize;
                match status[y] {
                    Status::Infected => {
                        si_entries[y] -= 1;
                        si_weight[y] = if si_entries[y] == 0 {
                            0.0
                        } else {
                            si_weight[y] - nb.weight
                        };
                        tree.set(y, si_weight[y]);
                    }
                    Status::Susceptible => {
                        si_weight[x] += nb.weight;
                        si_entries[x] += 1;
                    }
                    Status::Recovered => {}
                }
            }
            status[x] = Status::Infected;
            slot[x] = infected.len();
            infected.push(target);
            tree.set(x, si_weight[x]);
            events.push(Event {
                t,
                kind: EventKind::Infection,
                vertex: target,
            });
        } else {
            let idx = rng.random_range(0..infected.len());
            let v = infected.swap_remove(idx);
            if idx < infected.len() {
                slot[infected[idx] as usize] = idx;
            }
            let x = v as usize;
            slot[x] = usize::MAX;
            status[x] = Status::Recovered;
            si_weight[x] = 0.0;
            si_entries[x] = 0;
            tree.set(x, 0.0);
            events.push(Event {
                t,
                kind: EventKind::Recovery,
                vertex: v,
            });
        }
    };

    Ok(EventLog {
        n,
        initial_infected: initial.to_vec(),
        events,
        final_time,
    })
}

/// Susceptible neighbor of `source`, drawn proportionally to edge weight.
fn pick_susceptible<R: Rng + ?Sized>(
    g: &LayeredGraph,
    status: &[Status],
    source: u32,
    weight: f64,
    rng: &mut R,
) -> u32 {
    let target = rng.random::<f64>() * weight;
    let mut acc = 0.0;
    let mut last = None;
    for nb in g.neighbors(source) {
        if status[nb.vertex as usize] != Status::Susceptible {
            continue;
        }
        acc += nb.weight;
        last = Some(nb.vertex);
        if target < acc {
            return nb.vertex;
        }
    }
    last.expect("infector drawn with positive SI weight has a susceptible neighbor")
}

/// Complete binary tree of partial sums over vertex weights. Internal nodes
/// are recomputed from their children on every update, so a tree of zero
/// leaves sums to exactly zero.
struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    fn new(n: usize) -> Self {
        let leaves = n.max(1).next_power_of_two();
        SumTree {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    fn total(&self) -> f64 {
        self.nodes[1]
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut idx = self.leaves + i;
        self.nodes[idx] = value;
        while idx > 1 {
            idx /= 2;
            self.nodes[idx] = self.nodes[2 * idx] + self.nodes[2 * idx + 1];
        }
    }

    /// Leaf whose cumulative interval contains `u`, for `0 <= u < total`.
    fn sample(&self, mut u: f64) -> usize {
        let mut idx = 1;
        while idx < self.leaves {
            let left = self.nodes[2 * idx];
            let right = self.nodes[2 * idx + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                idx *= 2;
            } else {
                u -= left;
                idx = 2 * idx + 1;
            }
        }
        idx - self.leaves
    }
}

/// Total weight of edges joining an infected and a susceptible vertex.
pub fn si_edge_weight(g: &LayeredGraph, status: &[Status]) -> f64 {
    g.edges()
        .iter()
        .filter(|e| {
            let (a, b) = (status[e.u as usize], status[e.v as usize]);
            matches!(
                (a, b),
                (Status::Infected, Status::Susceptible) | (Status::Susceptible, Status::Infected)
            )
        })
        .map(|e| e.weight)
        .sum()
}

/// Incremental state of an epidemic while walking through its event log.
///
/// Tracks compartment sizes, SI edge counts per layer, the SI weight and the
/// degree sums that the daily-report series and the estimators need.
#[derive(Debug, Clone)]
pub struct Replay<'g> {
    g: &'g LayeredGraph,
    status: Vec<Status>,
    susceptible: usize,
    infected: usize,
    recovered: usize,
    si_household: u64,
    si_second: u64,
    si_weight: f64,
    weighted_degree_s: f64,
    weighted_degree_i: f64,
    second_degree_i: u64,
}

impl<'g> Replay<'g> {
    pub fn new(g: &'g LayeredGraph, initial: &[u32]) -> Result<Self> {
        let n = g.n();
        let mut replay = Replay {
            g,
            status: vec![Status::Susceptible; n],
            susceptible: n,
            infected: 0,
            recovered: 0,
            si_household: 0,
            si_second: 0,
            si_weight: 0.0,
            weighted_degree_s: (0..n as u32).map(|v| g.weighted_degree(v)).sum(),
            weighted_degree_i: 0.0,
            second_degree_i: 0,
        };
        for &v in initial {
            replay.infect(v)?;
        }
        Ok(replay)
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match event.kind {
            EventKind::Infection => self.infect(event.vertex),
            EventKind::Recovery => self.recover(event.vertex),
        }
    }

    fn check_vertex(&self, v: u32) -> Result<usize> {
        if (v as usize) < self.status.len() {
            Ok(v as usize)
        } else {
            Err(Error::UnknownVertex {
                vertex: v,
                n: self.status.len(),
            })
        }
    }

    fn infect(&mut self, v: u32) -> Result<()> {
        let x = self.check_vertex(v)?;
        if self.status[x] != Status::Susceptible {
            return Err(invalid(format!("vertex {v} infected twice")));
        }
        for nb in self.g.neighbors(v) {
            match self.status[nb.vertex as usize] {
                Status::Infected => self.add_si(nb.layer, nb.weight, -1),
                Status::Susceptible => self.add_si(nb.layer, nb.weight, 1),
                Status::Recovered => {}
            }
        }
        self.status[x] = Status::Infected;
        self.susceptible -= 1;
        self.infected += 1;
        let wd = self.g.weighted_degree(v);
        self.weighted_degree_s -= wd;
        self.weighted_degree_i += wd;
        self.second_degree_i += u64::from(self.g.second_degree(v));
        if self.susceptible == 0 {
            self.weighted_degree_s = 0.0;
        }
        self.snap();
        Ok(())
    }

    fn recover(&mut self, v: u32) -> Result<()> {
        let x = self.check_vertex(v)?;
        if self.status[x] != Status::Infected {
            return Err(invalid(format!("vertex {v} recovered while not infected")));
        }
        for nb in self.g.neighbors(v) {
            if self.status[nb.vertex as usize] == Status::Susceptible {
                self.add_si(nb.layer, nb.weight, -1);
            }
        }
        self.status[x] = Status::Recovered;
        self.infected -= 1;
        self.recovered += 1;
        self.weighted_degree_i -= self.g.weighted_degree(v);
        self.second_degree_i -= u64::from(self.g.second_degree(v));
        if self.infected == 0 {
            self.weighted_degree_i = 0.0;
        }
        self.snap();
        Ok(())
    }

    fn add_si(&mut self, layer: Layer, weight: f64, sign: i64) {
        let counter = match layer {
            Layer::Household => &mut self.si_household,
            Layer::Second => &mut self.si_second,
        };
        *counter = counter
            .checked_add_signed(sign)
            .expect("SI edge count underflow");
        self.si_weight += sign as f64 * weight;
    }

    fn snap(&mut self) {
        if self.si_household == 0 && self.si_second == 0 {
            self.si_weight = 0.0;
        }
    }

    pub fn status(&self) -> &[Status] {
        &self.status
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.susceptible, self.infected, self.recovered)
    }

    /// SI edges in the household layer.
    pub fn si_household(&self) -> u64 {
        self.si_household
    }

    /// SI edges in the second layer.
    pub fn si_second(&self) -> u64 {
        self.si_second
    }

    pub fn si_weight(&self) -> f64 {
        self.si_weight
    }

    pub fn mean_weighted_degree_susceptible(&self) -> f64 {
        mean(self.weighted_degree_s, self.susceptible)
    }

    pub fn mean_weighted_degree_infected(&self) -> f64 {
        mean(self.weighted_degree_i, self.infected)
    }

    pub fn mean_second_degree_infected(&self) -> f64 {
        mean(self.second_degree_i as f64, self.infected)
    }

    pub fn has_infected_neighbor(&self, v: u32) -> bool {
        self.g
            .neighbors(v)
            .iter()
            .any(|nb| self.status[nb.vertex as usize] == Status::Infected)
    }
}

// empty classes report 0
fn mean(sum: f64, count: usize) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
