mod common;

use common::random_graph;
use dyngesn::reservoir::{layer_step, vertex_embeddings};
use dyngesn::seeds::stream_rng;
use dyngesn::stability::{contraction_coefficient, esp_check, static_bound_comparison};
use dyngesn::temporal_graph::{alpha_geometric_mean, snapshot_alphas};
use dyngesn::{
    Dataset, DynamicGraph, Reservoir, ReservoirConfig, ReservoirState, ReservoirWeights,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut stream_rng(seed, 1));
    p
}

fn random_state(n: usize, cfg: &ReservoirConfig, seed: u64) -> ReservoirState {
    let mut rng = stream_rng(seed, 2);
    ReservoirState::from_layers(
        (0..cfg.layers)
            .map(|_| DMatrix::from_fn(n, cfg.hidden_units, |_, _| rng.random_range(-1.0..1.0)))
            .collect(),
        0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn static_alpha_never_exceeds_max_degree(n in 1usize..30, q in 0.0f64..0.6, seed in any::<u64>()) {
        let g = random_graph(n, 1, q, false, seed);
        let pairs: Vec<_> = g.snapshots()[0].edges().collect();
        let g = DynamicGraph::new_static(n, 3, &pairs, true).unwrap();
        let (alpha, k) = static_bound_comparison(&g).unwrap();
        prop_assert!(alpha <= k as f64 + 1e-9);
    }

    #[test]
    fn snapshots_reassemble_the_edge_list(n in 1usize..20, t in 1usize..8, q in 0.0f64..0.5, directed in any::<bool>(), seed in any::<u64>()) {
        let g = random_graph(n, t, q, directed, seed);
        let mut rebuilt: Vec<_> = g.snapshots().iter()
            .flat_map(|s| s.edges().map(move |(u, v)| (s.time(), u, v)))
            .collect();
        let mut listed: Vec<_> = g.edges().map(|e| (e.time, e.source, e.target)).collect();
        rebuilt.sort_unstable();
        listed.sort_unstable();
        prop_assert_eq!(&rebuilt, &listed);
        let again = DynamicGraph::new(n, t, g.edges(), true).unwrap();
        prop_assert_eq!(again.snapshots(), g.snapshots());
    }

    #[test]
    fn vertex_relabelling_changes_nothing(n in 2usize..25, q in 0.0f64..0.4, seed in any::<u64>()) {
        let g = random_graph(n, 6, q, seed % 2 == 0, seed);
        let p = g.permuted(&permutation(n, seed)).unwrap();
        let perm = permutation(n, seed);
        let a = snapshot_alphas(&g).unwrap();
        let b = snapshot_alphas(&p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
        }
        let res = Reservoir::new(ReservoirConfig::new(4, 2, 1, seed), 0.5).unwrap();
        let (sg, eg) = res.encode(&g).unwrap();
        let (sp, ep) = res.encode(&p).unwrap();
        for (x, y) in eg.as_slice().iter().zip(ep.as_slice()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let (vg, vp) = (vertex_embeddings(&sg), vertex_embeddings(&sp));
        for v in 0..n {
            prop_assert!((vg.row(v) - vp.row(perm[v])).amax() < 1e-12);
        }
    }

    #[test]
    fn states_stay_in_unit_box(n in 1usize..20, gamma in 0.05f64..1.0, norm in 0.0f64..10.0, scale in 0.1f64..20.0, seed in any::<u64>()) {
        let g = random_graph(n, 15, 0.3, false, seed);
        let cfg = ReservoirConfig::new(5, 3, 1, seed).with_leakage(gamma).with_input_scale(scale);
        let res = Reservoir::new(cfg, norm).unwrap();
        let (state, emb) = res.encode(&g).unwrap();
        prop_assert!(state.max_abs() <= 1.0);
        prop_assert!(emb.as_slice().iter().all(|x| x.abs() <= n as f64));
    }

    #[test]
    fn one_step_ratio_within_contraction_coefficient(n in 1usize..30, h in 1usize..10, gamma in 0.05f64..=1.0, norm in 0.01f64..3.0, seed in any::<u64>()) {
        let g = random_graph(n, 1, 0.3, seed % 3 == 0, seed);
        let cfg = ReservoirConfig::new(h, 1, 1, seed).with_leakage(gamma);
        let w = ReservoirWeights::init(&cfg, norm).unwrap();
        let alpha = snapshot_alphas(&g).unwrap()[0];
        let c = contraction_coefficient(w.layer(0).recurrent_norm(), gamma, alpha);
        let adj = &g.snapshots()[0];
        let input = g.labels().matrix_at(1);
        for k in 0..8 {
            let x = random_state(n, &cfg, seed ^ (2 * k));
            let y = random_state(n, &cfg, seed ^ (2 * k + 1));
            let fx = layer_step(&w, 0, &input, x.layer(0), adj, gamma).unwrap();
            let fy = layer_step(&w, 0, &input, y.layer(0), adj, gamma).unwrap();
            let d0 = (x.layer(0) - y.layer(0)).norm();
            let d1 = (fx - fy).norm();
            prop_assert!(d1 <= c * d0 * (1.0 + 1e-9), "ratio {} > C_t {}", d1 / d0, c);
        }
    }

    #[test]
    fn raising_the_norm_only_loses_satisfaction(seed in any::<u64>(), f in 1.0f64..4.0) {
        let g = random_graph(15, 8, 0.2, false, seed);
        let d = Dataset::from_pairs([(g, 0)]).unwrap();
        let cfg = ReservoirConfig::new(4, 2, 1, seed);
        let w = ReservoirWeights::init(&cfg, 0.5 / d.rescaling_alpha()).unwrap();
        let base = esp_check(&w, &cfg, &d).unwrap();
        let scaled = esp_check(&w.with_recurrent_scaled(f), &cfg, &d).unwrap();
        for (a, b) in base.satisfied.iter().zip(&scaled.satisfied) {
            prop_assert!(*a || !*b);
        }
    }
}

#[test]
fn trajectories_wash_out_below_the_bound() {
    let g = random_graph(20, 300, 0.1, false, 3);
    let alpha = alpha_geometric_mean(&g).unwrap();
    let cfg = ReservoirConfig::new(8, 1, 1, 3).with_leakage(0.5);
    let res = Reservoir::new(cfg.clone(), 0.9 / alpha).unwrap();
    let x0 = random_state(20, &cfg, 1);
    let y0 = random_state(20, &cfg, 2);
    let d0 = x0.distance(&y0);
    let x = res.run_from(&g, x0).unwrap();
    let y = res.run_from(&g, y0).unwrap();
    let norm = res.weights().layer(0).recurrent_norm();
    let product: f64 = snapshot_alphas(&g)
        .unwrap()
        .iter()
        .map(|&a| contraction_coefficient(norm, 0.5, a))
        .product();
    let d = x.distance(&y);
    assert!(d <= product * d0 * (1.0 + 1e-9));
    assert!(d / d0 < 1e-6, "ratio {}", d / d0);
}
