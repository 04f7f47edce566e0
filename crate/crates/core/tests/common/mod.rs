#![allow(dead_code)]

use std::collections::HashMap;

use layered_epi::epidemics::{EventKind, EventLog};
use layered_epi::netgen::{read_edge_list, LayeredGraph};

/// Graph from an edge-list text with all edges in the household layer.
pub fn graph_from_edges(n: usize, edges: &[(u32, u32, f64)]) -> LayeredGraph {
    let mut text = format!("{n} {n}\n");
    for (u, v, w) in edges {
        text.push_str(&format!("{u} {v} household {w}\n"));
    }
    read_edge_list(text.as_bytes()).unwrap()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum St {
    S,
    I,
    R,
}

/// Exact distribution of the final number of ever-infected vertices of the
/// SIR chain, by recursion over the embedded jump chain.
pub fn ctmc_final_size(
    n: usize,
    edges: &[(u32, u32, f64)],
    initial: &[u32],
    tau: f64,
    gamma: f64,
) -> Vec<f64> {
    let mut state = vec![St::S; n];
    for &v in initial {
        state[v as usize] = St::I;
    }
    let mut memo = HashMap::new();
    absorb(&state, edges, tau, gamma, &mut memo)
}

fn absorb(
    state: &[St],
    edges: &[(u32, u32, f64)],
    tau: f64,
    gamma: f64,
    memo: &mut HashMap<Vec<St>, Vec<f64>>,
) -> Vec<f64> {
    if let Some(d) = memo.get(state) {
        return d.clone();
    }
    let n = state.len();
    let mut moves: Vec<(f64, Vec<St>)> = Vec::new();
    for (v, s) in state.iter().enumerate() {
        if *s == St::I {
            let mut next = state.to_vec();
            next[v] = St::R;
            moves.push((gamma, next));
        }
    }
    let mut infection_rate = vec![0.0; n];
    for &(a, b, w) in edges {
        let (a, b) = (a as usize, b as usize);
        if state[a] == St::I && state[b] == St::S {
            infection_rate[b] += tau * w;
        }
        if state[b] == St::I && state[a] == St::S {
            infection_rate[a] += tau * w;
        }
    }
    for (v, &r) in infection_rate.iter().enumerate() {
        if r > 0.0 {
            let mut next = state.to_vec();
            next[v] = St::I;
            moves.push((r, next));
        }
    }
    let mut dist = vec![0.0; n + 1];
    if moves.is_empty() {
        dist[state.iter().filter(|s| **s == St::R).count()] = 1.0;
    } else {
        let total: f64 = moves.iter().map(|(r, _)| r).sum();
        for (r, next) in moves {
            let sub = absorb(&next, edges, tau, gamma, memo);
            for (d, p) in dist.iter_mut().zip(sub) {
                *d += r / total * p;
            }
        }
    }
    memo.insert(state.to_vec(), dist.clone());
    dist
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Violations found by replaying a log against the raw adjacency: an
/// infection of a non-susceptible vertex or one without an infected
/// neighbor, a recovery of a non-infected vertex, non-increasing times.
pub fn log_violations(log: &EventLog, g: &LayeredGraph) -> usize {
    let mut status = vec![St::S; g.n()];
    let mut bad = 0;
    for &v in &log.initial_infected {
        status[v as usize] = St::I;
    }
    let mut prev: Option<f64> = None;
    for e in &log.events {
        if e.t < 0.0 || prev.is_some_and(|p| e.t <= p) {
            bad += 1;
        }
        prev = Some(e.t);
        let v = e.vertex as usize;
        match e.kind {
            EventKind::Infection => {
                let exposed = g
                    .neighbors(e.vertex)
                    .iter()
                    .any(|nb| status[nb.vertex as usize] == St::I);
                if status[v] != St::S || !exposed {
                    bad += 1;
                }
                status[v] = St::I;
            }
            EventKind::Recovery => {
                if status[v] != St::I {
                    bad += 1;
                }
                status[v] = St::R;
            }
        }
    }
    bad
}

/// Time of the first maximum of the infected count.
pub fn peak(log: &EventLog) -> (usize, f64) {
    let mut i = log.initial_infected.len();
    let (mut best, mut at) = (i, 0.0);
    for e in &log.events {
        match e.kind {
            EventKind::Infection => i += 1,
            EventKind::Recovery => i -= 1,
        }
        if i > best {
            best = i;
            at = e.t;
        }
    }
    (best, at)
}
