//! Compares the exact estimator with the three grid estimators on one
//! epidemic at several horizons.
//!
//! `cargo run --release --example classical_estimators -- [tau] [seed]`

use layered_epi::classical::{tau_hat_approx, Exposure, SiOut};
use layered_epi::features::{sample_grid, GraphModel, RunManifest, Split};
use layered_epi::harness::realize_run;
use layered_epi::netgen::{graph_stats, PolyParams};

fn show(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

fn main() -> layered_epi::Result<()> {
    let mut args = std::env::args().skip(1);
    let tau: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.45);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);

    let mut manifest = RunManifest {
        run_id: 0,
        model: GraphModel::Poly(PolyParams::new(0.0, 0.8, 0.2)),
        w: 0.4,
        n: 2000,
        household_size: 5,
        d: 0.0,
        tau,
        seed,
        split: Split::Test,
    };
    let run = realize_run(&manifest)?;
    manifest.d = graph_stats(&run.graph).d;
    let features = sample_grid(&run.log, &run.graph, 0.1, 30.0)?;
    let exposure = Exposure::from_log(&run.log, &run.graph)?;

    println!("true tau {tau}");
    println!("   T  infections      exact   observed     static    dynamic");
    for t in [1.0, 2.0, 4.0, 6.0, 10.0] {
        let (z, _) = exposure.until(t);
        let grid = |v| tau_hat_approx(&features, &manifest, t, v);
        println!(
            "{t:>4} {z:>11} {:>10} {:>10} {:>10} {:>10}",
            show(exposure.tau_hat(t)),
            show(grid(SiOut::Observed)?),
            show(grid(SiOut::Static)?),
            show(grid(SiOut::Dynamic)?)
        );
    }
    Ok(())
}
