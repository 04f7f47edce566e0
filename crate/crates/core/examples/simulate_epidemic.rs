//! Runs one SIR epidemic on a clique-layer graph and prints its course.
//!
//! `cargo run --release --example simulate_epidemic -- [tau] [seed]`

use layered_epi::epidemics::{gillespie_run, EventKind, SimParams};
use layered_epi::netgen::{build_clique_layer, build_household_layer, CliqueParams};
use layered_epi::rng::{stream, Stream};

fn main() -> layered_epi::Result<()> {
    let mut args = std::env::args().skip(1);
    let tau: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.45);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let g = build_household_layer(2000, 5)?;
    let g = build_clique_layer(
        g,
        &CliqueParams::new(9, 0.4),
        &mut stream(seed, Stream::Graph),
    )?;
    let log = gillespie_run(
        &g,
        &SimParams::new(tau),
        &mut stream(seed, Stream::Dynamics),
    )?;
    log.verify(&g)?;

    println!(
        "tau = {tau}, {} initially infected",
        log.initial_infected.len()
    );
    let (mut s, mut i, mut r) = (
        g.n() - log.initial_infected.len(),
        log.initial_infected.len(),
        0,
    );
    let mut next_day = 1.0;
    for e in &log.events {
        while e.t >= next_day {
            println!("day {next_day:>4}: S {s:>5}  I {i:>5}  R {r:>5}");
            next_day += 1.0;
        }
        match e.kind {
            EventKind::Infection => {
                s -= 1;
                i += 1;
            }
            EventKind::Recovery => {
                i -= 1;
                r += 1;
            }
        }
    }
    let (s, i, r) = log.final_counts();
    println!(
        "stopped at t = {:.2}: S {s}  I {i}  R {r}, {} events",
        log.final_time,
        log.events.len()
    );
    Ok(())
}
