//! Two-layer weighted contact networks.
//!
//! The first layer partitions the vertices into disjoint household cliques
//! whose edges carry weight 1. The second layer connects individuals across
//! households with weight `0 < w < 1` and is built independently of the
//! households, either by a growing polynomial (scale-free) model or by a
//! random partition into workplace cliques, optionally relaxed by rewiring.
//!
//! Builders consume a graph and return a new one; a finished
//! [`LayeredGraph`] is immutable and can be shared across threads.

mod clique;
mod io;
mod poly;

use std::collections::BTreeMap;
use std::fmt;

pub use clique::{
    build_clique_layer, relax_caveman, relax_caveman_counted, CliqueParams, RelaxOutcome,
};
pub use io::{read_edge_list, write_edge_list};
pub use poly::{build_polynomial_layer, PolyParams};

use crate::error::{invalid, Result};

/// Which layer an edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Household,
    Second,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Household => "household",
            Layer::Second => "second",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    pub layer: Layer,
    pub weight: f64,
}

/// One adjacency entry. A pair joined in both layers appears twice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: u32,
    pub weight: f64,
    pub layer: Layer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayeredGraph {
    n: usize,
    household_size: usize,
    household_of: Vec<Option<u32>>,
    edges: Vec<Edge>,
    // CSR adjacency derived from `edges`
    offsets: Vec<usize>,
    entries: Vec<Neighbor>,
    weighted_degree: Vec<f64>,
    second_degree: Vec<u32>,
}

impl LayeredGraph {
    fn from_parts(
        n: usize,
        household_size: usize,
        household_of: Vec<Option<u32>>,
        edges: Vec<Edge>,
    ) -> Self {
        let mut counts = vec![0usize; n + 1];
        for e in &edges {
            counts[e.u as usize + 1] += 1;
            counts[e.v as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let placeholder = Neighbor {
            vertex: 0,
            weight: 0.0,
            layer: Layer::Household,
        };
        let mut entries = vec![placeholder; offsets[n]];
        let mut weighted_degree = vec![0.0; n];
        let mut second_degree = vec![0u32; n];
        for e in &edges {
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                let slot = &mut fill[a as usize];
                entries[*slot] = Neighbor {
                    vertex: b,
                    weight: e.weight,
                    layer: e.layer,
                };
                *slot += 1;
                weighted_degree[a as usize] += e.weight;
                if e.layer == Layer::Second {
                    second_degree[a as usize] += 1;
                }
            }
        }
        LayeredGraph {
            n,
            household_size,
            household_of,
            edges,
            offsets,
            entries,
            weighted_degree,
            second_degree,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn household_size(&self) -> usize {
        self.household_size
    }

    pub fn household_of(&self, v: u32) -> Option<u32> {
        self.household_of[v as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_in(&self, layer: Layer) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.layer == layer)
    }

    pub fn edge_count(&self, layer: Layer) -> usize {
        self.edges_in(layer).count()
    }

    pub fn has_second_layer(&self) -> bool {
        self.edges.iter().any(|e| e.layer == Layer::Second)
    }

    pub fn neighbors(&self, v: u32) -> &[Neighbor] {
        let v = v as usize;
        &self.entries[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Total incident edge weight across both layers.
    pub fn weighted_degree(&self, v: u32) -> f64 {
        self.weighted_degree[v as usize]
    }

    /// Number of second-layer neighbors.
    pub fn second_degree(&self, v: u32) -> u32 {
        self.second_degree[v as usize]
    }

    /// Total incident second-layer weight.
    pub fn second_weighted_degree(&self, v: u32) -> f64 {
        self.neighbors(v)
            .iter()
            .filter(|nb| nb.layer == Layer::Second)
            .map(|nb| nb.weight)
            .sum()
    }

    fn with_second_layer(self, second: Vec<Edge>) -> Self {
        let LayeredGraph {
            n,
            household_size,
            household_of,
            mut edges,
            ..
        } = self;
        edges.retain(|e| e.layer == Layer::Household);
        edges.extend(second);
        LayeredGraph::from_parts(n, household_size, household_of, edges)
    }

    fn require_household_only(&self) -> Result<()> {
        if self.has_second_layer() {
            return Err(invalid("graph already has a second layer"));
        }
        Ok(())
    }
}

/// Disjoint weight-1 cliques of `household_size` consecutive vertices; the
/// last `n mod household_size` vertices belong to no household.
pub fn build_household_layer(n: usize, household_size: usize) -> Result<LayeredGraph> {
    if household_size < 2 {
        return Err(invalid(format!("household size {household_size} < 2")));
    }
    if n < household_size {
        return Err(invalid(format!(
            "vertex count {n} is smaller than the household size {household_size}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(invalid(format!("vertex count {n} too large")));
    }
    let households = n / household_size;
    let mut household_of = vec![None; n];
    let mut edges = Vec::with_capacity(households * household_size * (household_size - 1) / 2);
    for h in 0..households {
        let base = h * household_size;
        household_of[base..base + household_size].fill(Some(h as u32));
        for i in base..base + household_size {
            for j in i + 1..base + household_size {
                edges.push(Edge {
                    u: i as u32,
                    v: j as u32,
                    layer: Layer::Household,
                    weight: 1.0,
                });
            }
        }
    }
    Ok(LayeredGraph::from_parts(
        n,
        household_size,
        household_of,
        edges,
    ))
}

pub(crate) fn check_second_weight(w: f64) -> Result<()> {
    if !(w > 0.0 && w < 1.0) {
        return Err(invalid(format!("second-layer weight {w} outside (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    /// Mean number of second-layer neighbors.
    pub d: f64,
    /// Mean total incident weight over both layers.
    pub weighted_density: f64,
    /// Second-layer degree -> number of vertices.
    pub degree_histogram: BTreeMap<u32, usize>,
}

pub fn graph_stats(g: &LayeredGraph) -> GraphStats {
    let n = g.n();
    let mut histogram = BTreeMap::new();
    let mut degree_sum = 0u64;
    let mut weight_sum = 0.0;
    for v in 0..n as u32 {
        let k = g.second_degree(v);
        degree_sum += u64::from(k);
        weight_sum += g.weighted_degree(v);
        *histogram.entry(k).or_insert(0) += 1;
    }
    GraphStats {
        d: degree_sum as f64 / n as f64,
        weighted_density: weight_sum / n as f64,
        degree_histogram: histogram,
    }
}
