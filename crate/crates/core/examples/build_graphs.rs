//! Builds the two kinds of second layer on top of households and prints
//! their degree statistics.
//!
//! `cargo run --release --example build_graphs -- [n] [seed]`

use layered_epi::harness::fixed_density_weight;
use layered_epi::netgen::{
    build_clique_layer, build_household_layer, build_polynomial_layer, graph_stats,
    relax_caveman_counted, write_edge_list, CliqueParams, Layer, LayeredGraph, PolyParams,
};
use layered_epi::rng::{stream, Stream};

fn arg(i: usize, default: u64) -> u64 {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn describe(name: &str, g: &LayeredGraph) {
    let stats = graph_stats(g);
    let max = stats
        .degree_histogram
        .keys()
        .next_back()
        .copied()
        .unwrap_or(0);
    println!(
        "{name:<28} household edges {:>6}  second-layer edges {:>6}  d {:.3}  max degree {max}",
        g.edge_count(Layer::Household),
        g.edge_count(Layer::Second),
        stats.d
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = arg(1, 5000) as usize;
    let seed = arg(2, 1);

    for (pa, u, tr) in [(0.0, 1.0, 0.0), (0.3, 0.7, 0.0), (0.0, 0.7, 0.3)] {
        let g = build_household_layer(n, 5)?;
        let g = build_polynomial_layer(
            g,
            &PolyParams::new(pa, u, tr),
            0.4,
            &mut stream(seed, Stream::Graph),
        )?;
        describe(&format!("polynomial {pa}/{u}/{tr}"), &g);
    }

    for size in [7, 9, 15] {
        let w = fixed_density_weight(size)?;
        let mut rng = stream(seed, Stream::Graph);
        let g = build_clique_layer(
            build_household_layer(n, 5)?,
            &CliqueParams::new(size, w),
            &mut rng,
        )?;
        describe(&format!("cliques of {size}, w = {w:.4}"), &g);
        let (g, outcome) = relax_caveman_counted(g, 0.2, &mut rng)?;
        describe(&format!("  relaxed, {} rewired", outcome.rewired), &g);
    }

    let small = build_clique_layer(
        build_household_layer(12, 3)?,
        &CliqueParams::new(4, 0.5),
        &mut stream(seed, Stream::Graph),
    )?;
    println!("\nedge list of a 12-vertex graph:");
    write_edge_list(&small, std::io::stdout().lock())?;
    Ok(())
}
