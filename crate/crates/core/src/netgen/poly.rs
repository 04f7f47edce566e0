use rand::seq::SliceRandom;
use rand::Rng;

use super::{check_second_weight, Edge, Layer, LayeredGraph};
use crate::error::{invalid, Result};

/// Tolerance on `p_pa + p_u + p_tr = 1`.
const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Redraws of the same rule before falling back to a uniform fresh target.
const MAX_RESAMPLES: usize = 50;

/// Parameters of the polynomial growth model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyParams {
    /// Probability of a preferential-attachment step.
    pub p_pa: f64,
    /// Probability of a uniform step.
    pub p_u: f64,
    /// Probability of a triangle-closing step.
    pub p_tr: f64,
    /// Edges per newcomer.
    pub m: usize,
    /// Size of the initial ring.
    pub n0: usize,
}

impl Default for PolyParams {
    fn default() -> Self {
        PolyParams {
            p_pa: 0.0,
            p_u: 0.7,
            p_tr: 0.3,
            m: 4,
            n0: 50,
        }
    }
}

impl PolyParams {
    pub fn new(p_pa: f64, p_u: f64, p_tr: f64) -> Self {
        PolyParams {
            p_pa,
            p_u,
            p_tr,
            ..PolyParams::default()
        }
    }

    /// Checks the parameters and returns a copy whose probabilities sum to
    /// exactly one.
    pub fn validated(&self) -> Result<PolyParams> {
        let probs = [self.p_pa, self.p_u, self.p_tr];
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid(format!(
                "attachment probabilities must be nonnegative, got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(invalid(format!(
                "attachment probabilities sum to {sum}, expected 1"
            )));
        }
        if self.m < 1 {
            return Err(invalid("m must be at least 1"));
        }
        // the initial ring joins each vertex to its m clockwise successors;
        // it is a simple graph with m * n0 edges only when n0 > 2m
        if self.n0 < 2 * self.m + 1 {
            return Err(invalid(format!(
                "n0 = {} too small for a simple initial ring with m = {} (need n0 >= {})",
                self.n0,
                self.m,
                2 * self.m + 1
            )));
        }
        Ok(PolyParams {
            p_pa: self.p_pa / sum,
            p_u: self.p_u / sum,
            p_tr: self.p_tr / sum,
            ..*self
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Rule {
    Preferential,
    Uniform,
    Triangle,
}

struct Growth {
    adjacency: Vec<Vec<u32>>,
    // every edge contributes both endpoints; a uniform pick is degree-biased
    endpoints: Vec<u32>,
    pairs: Vec<(u32, u32)>,
}

impl Growth {
    fn add(&mut self, a: u32, b: u32) {
        self.adjacency[a as usize].push(b);
        self.adjacency[b as usize].push(a);
        self.endpoints.push(a);
        self.endpoints.push(b);
        self.pairs.push((a, b));
    }
}

/// Grows the second layer by the polynomial model and overlays it, with
/// weight `w`, on a household-only graph.
///
/// Growth starts from a ring of `n0` vertices, each joined to its `m`
/// clockwise successors. Every later vertex attaches `m` edges; for each edge
/// one rule is drawn independently. A preferential step picks a target with
/// probability proportional to its current degree, a uniform step picks any
/// existing vertex, and a triangle step picks a neighbor of a target already
/// chosen by this newcomer (uniform if there is none yet). Vertex labels are
/// finally permuted at random so the layer is independent of the households.
pub fn build_polynomial_layer<R: Rng + ?Sized>(
    g: LayeredGraph,
    params: &PolyParams,
    w: f64,
    rng: &mut R,
) -> Result<LayeredGraph> {
    g.require_household_only()?;
    let p = params.validated()?;
    check_second_weight(w)?;
    let n = g.n();
    if n <= p.n0 {
        return Err(invalid(format!(
            "vertex count {n} must exceed the initial ring size {}",
            p.n0
        )));
    }
    let m = p.m;

    let mut growth = Growth {
        adjacency: vec![Vec::new(); n],
        endpoints: Vec::with_capacity(2 * m * n),
        pairs: Vec::with_capacity(m * n),
    };
    for i in 0..p.n0 {
        for k in 1..=m {
            growth.add(i as u32, ((i + k) % p.n0) as u32);
        }
    }

    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    let mut candidates: Vec<u32> = Vec::new();
    for newcomer in p.n0..n {
        let existing = newcomer as u32;
        chosen.clear();
        for _ in 0..m {
            let u: f64 = rng.random();
            let rule = if u < p.p_pa {
                Rule::Preferential
            } else if u < p.p_pa + p.p_u {
                Rule::Uniform
            } else {
                Rule::Triangle
            };
            if let Rule::Triangle = rule {
                candidates.clear();
                for &c in &chosen {
                    candidates.extend_from_slice(&growth.adjacency[c as usize]);
                }
                candidates.sort_unstable();
                candidates.dedup();
                candidates.retain(|x| !chosen.contains(x));
            }
            let mut target = None;
            for _ in 0..=MAX_RESAMPLES {
                let t = match rule {
                    Rule::Preferential => {
                        growth.endpoints[rng.random_range(0..growth.endpoints.len())]
                    }
                    Rule::Uniform => rng.random_range(0..existing),
                    Rule::Triangle if candidates.is_empty() => rng.random_range(0..existing),
                    Rule::Triangle => candidates[rng.random_range(0..candidates.len())],
                };
                if !chosen.contains(&t) {
                    target = Some(t);
                    break;
                }
            }
            let t = match target {
                Some(t) => t,
                None => loop {
                    let t = rng.random_range(0..existing);
                    if !chosen.contains(&t) {
                        break t;
                    }
                },
            };
            chosen.push(t);
        }
        // degrees seen by this newcomer's draws exclude its own batch
        for &t in &chosen {
            growth.add(existing, t);
        }
    }

    let mut relabel: Vec<u32> = (0..n as u32).collect();
    relabel.shuffle(rng);
    let second = growth
        .pairs
        .into_iter()
        .map(|(a, b)| Edge {
            u: relabel[a as usize],
            v: relabel[b as usize],
            layer: Layer::Second,
            weight: w,
        })
        .collect();
    Ok(g.with_second_layer(second))
}
