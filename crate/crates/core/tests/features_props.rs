use std::collections::BTreeMap;

use proptest::prelude::*;

use layered_epi::epidemics::{gillespie_run, si_edge_weight, Replay, SimParams};
use layered_epi::features::{
    export_dataset, format_sig6, import_dataset, sample_grid, split_train_test, GraphModel,
    RunManifest, Split,
};
use layered_epi::netgen::{
    build_clique_layer, build_household_layer, build_polynomial_layer, graph_stats, relax_caveman,
    CliqueParams, LayeredGraph, PolyParams,
};
use layered_epi::rng::{stream, Stream};

fn manifest(run_id: u64, size: usize, tau: f64) -> RunManifest {
    RunManifest {
        run_id,
        model: GraphModel::Clique {
            size,
            p_relaxed: 0.0,
        },
        w: 0.4,
        n: 100,
        household_size: 5,
        d: 8.0,
        tau,
        seed: run_id,
        split: Split::Train,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_stratified_partition(
        cells in prop::collection::vec((7usize..12, 0usize..4, 1usize..15), 1..8),
        frac in 0.1f64..0.9,
        seed in any::<u64>(),
    ) {
        let mut manifests = Vec::new();
        for (size, tau_index, count) in cells {
            let tau = 0.3 + 0.1 * tau_index as f64;
            for _ in 0..count {
                let id = manifests.len() as u64;
                manifests.push(manifest(id, size, tau));
            }
        }
        let splits = split_train_test(&manifests, frac, &mut stream(seed, Stream::Split)).unwrap();
        prop_assert_eq!(splits.len(), manifests.len());
        let mut per_stratum: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for (m, s) in manifests.iter().zip(&splits) {
            let e = per_stratum.entry(m.stratum()).or_default();
            e.0 += 1;
            if *s == Split::Train {
                e.1 += 1;
            }
        }
        for (count, train) in per_stratum.values() {
            let expected = if *count < 2 { *count } else { (frac * *count as f64).round() as usize };
            prop_assert_eq!(*train, expected);
        }
        let again = split_train_test(&manifests, frac, &mut stream(seed, Stream::Split)).unwrap();
        prop_assert_eq!(again, splits);
    }

    #[test]
    fn sig6_parses_back(x in prop_oneof![0.0f64..20.0, 1e-4f64..1e-2, 1e3f64..1e7]) {
        let s = format_sig6(x);
        let y: f64 = s.parse().unwrap();
        prop_assert!((x - y).abs() <= 5e-6 * x.abs(), "{} -> {} -> {}", x, s, y);
        prop_assert_eq!(format_sig6(y), s);
    }

    #[test]
    fn grid_si_counts_match_direct_weight(seed in any::<u64>(), tau in 0.2f64..1.0, relaxed in any::<bool>()) {
        let g = graph(seed, relaxed);
        let log = gillespie_run(&g, &SimParams::new(tau), &mut stream(seed, Stream::Dynamics)).unwrap();
        let f = sample_grid(&log, &g, 0.1, 30.0).unwrap();
        let w = g.edges().iter().find(|e| e.weight < 1.0).map_or(0.0, |e| e.weight);
        let mut replay = Replay::new(&g, &log.initial_infected).unwrap();
        let mut next = 0;
        for p in &f.points {
            while next < log.events.len() && log.events[next].t <= p.t {
                replay.apply(&log.events[next]).unwrap();
                next += 1;
            }
            let direct = si_edge_weight(&g, replay.status());
            let from_counts = p.e_si_hh as f64 + w * p.e_si_o as f64;
            prop_assert!((direct - from_counts).abs() < 1e-9 * direct.max(1.0));
        }
        prop_assert_eq!(&f, &sample_grid(&log, &g, 0.1, 30.0).unwrap());
    }
}

fn graph(seed: u64, relaxed: bool) -> LayeredGraph {
    let g = build_household_layer(300, 5).unwrap();
    let mut rng = stream(seed, Stream::Graph);
    if relaxed {
        let g = build_clique_layer(g, &CliqueParams::new(7, 0.5), &mut rng).unwrap();
        relax_caveman(g, 0.3, &mut rng).unwrap()
    } else {
        let mut p = PolyParams::new(0.2, 0.6, 0.2);
        p.n0 = 20;
        build_polynomial_layer(g, &p, 0.3, &mut rng).unwrap()
    }
}

#[test]
fn dataset_round_trip_on_simulated_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for id in 0..4u64 {
        let g = graph(id, id % 2 == 0);
        let log =
            gillespie_run(&g, &SimParams::new(0.5), &mut stream(id, Stream::Dynamics)).unwrap();
        let mut f = sample_grid(&log, &g, 0.1, 30.0).unwrap();
        f.run_id = id;
        let mut m = manifest(id, 7, 0.5);
        m.n = 300;
        m.d = graph_stats(&g).d;
        runs.push((m, f));
    }
    export_dataset(&runs, dir.path()).unwrap();
    let back = import_dataset(dir.path()).unwrap();
    assert_eq!(back.len(), 4);
    for ((m, f), (m2, f2)) in runs.iter().zip(&back) {
        assert_eq!(m, m2);
        assert_eq!(f.initial_infected, f2.initial_infected);
        for (a, b) in f.points.iter().zip(&f2.points) {
            assert_eq!(
                (a.t, a.s, a.i, a.r, a.e_si_hh, a.e_si_o),
                (b.t, b.s, b.i, b.r, b.e_si_hh, b.e_si_o)
            );
            for (x, y) in [
                (a.d_s_w, b.d_s_w),
                (a.d_i_w, b.d_i_w),
                (a.d_i_out, b.d_i_out),
            ] {
                assert!((x - y).abs() <= 5e-6 * x.abs());
            }
        }
    }
    let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 300);
    assert!(text.lines().nth(1).unwrap().starts_with("0,0.1,"));
}
