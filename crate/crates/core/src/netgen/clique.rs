use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{check_second_weight, Edge, Layer, LayeredGraph};
use crate::error::{invalid, Result};

/// Workplace cliques for the second layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueParams {
    /// Workplace clique size.
    pub size: usize,
    /// Rewiring probability applied by [`relax_caveman`].
    pub p_relaxed: f64,
    /// Second-layer edge weight.
    pub w: f64,
}

impl CliqueParams {
    pub fn new(size: usize, w: f64) -> Self {
        CliqueParams {
            size,
            p_relaxed: 0.0,
            w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 2 {
            return Err(invalid(format!("workplace size {} < 2", self.size)));
        }
        check_probability(self.p_relaxed)?;
        check_second_weight(self.w)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("rewiring probability {p} outside [0, 1]")));
    }
    Ok(())
}

/// Partitions the vertices uniformly at random into groups of `size`
/// (fewer than `size` leftovers stay without a workplace) and connects each
/// group completely with weight `w`.
///
/// A workplace pair that is also a household pair keeps both edges.
pub fn build_clique_layer<R: Rng + ?Sized>(
    g: LayeredGraph,
    params: &CliqueParams,
    rng: &mut R,
) -> Result<LayeredGraph> {
    g.require_household_only()?;
    params.validate()?;
    let n = g.n();
    let k = params.size;
    if k > n {
        return Err(invalid(format!(
            "workplace size {k} exceeds vertex count {n}"
        )));
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut second = Vec::with_capacity((n / k) * k * (k - 1) / 2);
    for group in order.chunks_exact(k) {
        for (i, &a) in group.iter().enumerate() {
            for &b in &group[i + 1..] {
                second.push(Edge {
                    u: a,
                    v: b,
                    layer: Layer::Second,
                    weight: params.w,
                });
            }
        }
    }
    Ok(g.with_second_layer(second))
}

/// Counts from one relaxation pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RelaxOutcome {
    /// Edges picked for rewiring.
    pub selected: usize,
    /// Picked edges actually moved (the new pair did not exist yet).
    pub rewired: usize,
}

/// Relaxed caveman rewiring of the second layer.
///
/// Each second-layer edge `uv` is picked with probability `p_relaxed`; a
/// picked edge becomes `u x` for `x` uniform over the vertices other than
/// `u`, unless `u x` is already a second-layer edge, in which case it stays.
pub fn relax_caveman<R: Rng + ?Sized>(
    g: LayeredGraph,
    p_relaxed: f64,
    rng: &mut R,
) -> Result<LayeredGraph> {
    relax_caveman_counted(g, p_relaxed, rng).map(|(g, _)| g)
}

pub fn relax_caveman_counted<R: Rng + ?Sized>(
    g: LayeredGraph,
    p_relaxed: f64,
    rng: &mut R,
) -> Result<(LayeredGraph, RelaxOutcome)> {
    check_probability(p_relaxed)?;
    let mut outcome = RelaxOutcome::default();
    if p_relaxed == 0.0 {
        return Ok((g, outcome));
    }
    let n = g.n() as u32;
    if n < 2 {
        return Ok((g, outcome));
    }
    let key = |a: u32, b: u32| (a.min(b), a.max(b));
    let mut second: Vec<Edge> = g.edges_in(Layer::Second).copied().collect();
    let mut present: HashSet<(u32, u32)> = second.iter().map(|e| key(e.u, e.v)).collect();
    for edge in &mut second {
        if rng.random::<f64>() >= p_relaxed {
            continue;
        }
        outcome.selected += 1;
        let u = edge.u;
        let mut x = rng.random_range(0..n - 1);
        if x >= u {
            x += 1;
        }
        if present.contains(&key(u, x)) {
            continue;
        }
        present.remove(&key(u, edge.v));
        present.insert(key(u, x));
        edge.v = x;
        outcome.rewired += 1;
    }
    Ok((g.with_second_layer(second), outcome))
}
