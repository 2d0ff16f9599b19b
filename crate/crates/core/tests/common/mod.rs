#![allow(dead_code)]

use dyngesn::seeds::stream_rng;
use dyngesn::temporal_graph::LabelStream;
use dyngesn::{DynamicGraph, TemporalEdge};
use rand::Rng;

/// Random temporal graph with per-step edge probability `q` and random
/// one-dimensional labels in [-1, 1].
pub fn random_graph(n: usize, horizon: usize, q: f64, directed: bool, seed: u64) -> DynamicGraph {
    let mut rng = stream_rng(seed, 0);
    let mut edges = Vec::new();
    for t in 1..=horizon {
        for u in 0..n {
            for v in 0..n {
                if (directed || u < v) && u != v && rng.random::<f64>() < q {
                    edges.push(TemporalEdge::new(u, v, t));
                }
            }
        }
    }
    let g = DynamicGraph::new(n, horizon, edges, directed).unwrap();
    let mut labels = LabelStream::zeros(n, 1);
    for v in 0..n {
        for t in 1..=horizon {
            if rng.random::<f64>() < 0.3 {
                labels.set(v, t, &[rng.random_range(-1.0..1.0)]).unwrap();
            }
        }
    }
    g.with_labels(labels).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
