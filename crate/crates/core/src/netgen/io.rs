//! Plain-text edge lists: a header `n N_hh`, then one `u v layer weight`
//! line per edge, vertex ids 0-based.

use std::io::{BufRead, Write};

use super::{Edge, Layer, LayeredGraph};
use crate::error::{Error, Result};

const SOURCE: &str = "<edge list>";

pub fn write_edge_list<W: Write>(g: &LayeredGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n(), g.household_size())?;
    for e in g.edges() {
        writeln!(out, "{} {} {} {}", e.u, e.v, e.layer, e.weight)?;
    }
    out.flush()
}

/// Reads an edge list. Households are reconstructed as consecutive blocks,
/// which is how [`build_household_layer`](super::build_household_layer)
/// lays them out.
pub fn read_edge_list<R: BufRead>(input: R) -> Result<LayeredGraph> {
    let mut lines = input.lines().enumerate();
    let (n, household_size) = match lines.next() {
        Some((_, line)) => {
            let line = line.map_err(|e| Error::io(SOURCE, e))?;
            let mut it = line.split_whitespace();
            let n = parse_field::<usize>(it.next(), 1, "n")?;
            let hh = parse_field::<usize>(it.next(), 1, "N_hh")?;
            (n, hh)
        }
        None => return Err(Error::parse(SOURCE, 1, "missing header")),
    };
    if household_size == 0 || n > u32::MAX as usize {
        return Err(Error::parse(SOURCE, 1, "invalid header"));
    }
    let households = n / household_size;
    let household_of = (0..n)
        .map(|v| {
            let h = v / household_size;
            (h < households).then_some(h as u32)
        })
        .collect();

    let mut edges = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(SOURCE, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let u = parse_field::<u32>(it.next(), lineno, "u")?;
        let v = parse_field::<u32>(it.next(), lineno, "v")?;
        let layer = match it.next() {
            Some("household") => Layer::Household,
            Some("second") => Layer::Second,
            other => {
                return Err(Error::parse(SOURCE, lineno, format!("bad layer {other:?}")));
            }
        };
        let weight = parse_field::<f64>(it.next(), lineno, "weight")?;
        if u as usize >= n || v as usize >= n || u == v {
            return Err(Error::parse(SOURCE, lineno, format!("bad edge {u} {v}")));
        }
        edges.push(Edge {
            u,
            v,
            layer,
            weight,
        });
    }
    Ok(LayeredGraph::from_parts(
        n,
        household_size,
        household_of,
        edges,
    ))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize, name: &str) -> Result<T> {
    field
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(SOURCE, line, format!("missing or invalid {name}")))
}
