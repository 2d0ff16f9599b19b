//! Contraction analysis of the reservoir update.
//!
//! For fixed input, one layer's update is Lipschitz in the previous state with
//! constant `C_t = (1 - γ) + γ ‖Ŵ‖ α*_t`, where `α*_t = ‖A_t‖₂`. Requiring
//! `‖Ŵ‖ < 1 / ⟨α*_t⟩` (geometric mean over time) makes the product of the
//! `C_t` vanish, which is sufficient for the echo state property.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::reservoir::{ReservoirConfig, ReservoirWeights};
use crate::temporal_graph::{
    snapshot_alphas, spectral_norm, Dataset, DynamicGraph, PowerIteration,
};

/// `C_t = (1 - γ) + γ · ‖Ŵ‖ · α*_t`.
pub fn contraction_coefficient(norm_w: f64, gamma: f64, alpha_t: f64) -> f64 {
    (1.0 - gamma) + gamma * norm_w * alpha_t
}

/// `1 / ⟨α*_t⟩`, infinite when there is no coupling at all.
pub fn esp_bound(alpha_gmean: f64) -> f64 {
    if alpha_gmean > 0.0 {
        1.0 / alpha_gmean
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EspReport {
    /// `‖Ŵ^(ℓ)‖` per layer.
    pub per_layer_norm: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Dataset `α_mean`.
    pub alpha_gmean: f64,
    /// `1 / α_mean`.
    pub bound: f64,
    pub satisfied: Vec<bool>,
    /// Largest per-graph `⟨α*_t⟩` and the id of the graph attaining it.
    pub worst_graph_alpha: f64,
    pub worst_graph_id: Option<usize>,
    /// `1 / worst_graph_alpha`: meeting it satisfies the bound for every graph.
    pub worst_graph_bound: f64,
    pub worst_graph_satisfied: Vec<bool>,
    /// `C_t` over the worst graph's horizon, per layer.
    pub contraction_per_step: Vec<Vec<f64>>,
}

impl EspReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "alpha_mean (dataset <alpha*_t>): {:.6}",
            self.alpha_gmean
        );
        let _ = writeln!(s, "ESP bound 1/alpha_mean:          {:.6}", self.bound);
        let _ = writeln!(
            s,
            "worst graph <alpha*_t>:          {:.6} (graph {}), bound {:.6}",
            self.worst_graph_alpha,
            self.worst_graph_id
                .map_or("-".to_string(), |g| g.to_string()),
            self.worst_graph_bound
        );
        for (l, norm) in self.per_layer_norm.iter().enumerate() {
            let steps = &self.contraction_per_step[l];
            let max_c = steps.iter().copied().fold(f64::NAN, f64::max);
            let verdict = if self.satisfied[l] {
                "satisfied"
            } else {
                "NOT satisfied"
            };
            let strict = if self.worst_graph_satisfied[l] {
                "yes"
            } else {
                "no"
            };
            let _ = writeln!(
                s,
                "layer {}: ||W_hat|| = {:.6} vs bound {:.6}: {} (every graph: {}; max C_t on worst graph {:.6})",
                l + 1,
                norm,
                self.bound,
                verdict,
                strict,
                max_c
            );
        }
        s
    }

    /// `layer,norm,bound,satisfied` records, one per layer (layers 1-based).
    pub fn render_records(&self) -> String {
        let mut s = String::from("layer,norm,bound,satisfied\n");
        for (l, norm) in self.per_layer_norm.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", l + 1, norm, self.bound, self.satisfied[l]);
        }
        s
    }
}

/// `C_t` for `layer` at every time-step of `g`.
pub fn contraction_profile(
    weights: &ReservoirWeights,
    cfg: &ReservoirConfig,
    g: &DynamicGraph,
    layer: usize,
) -> Result<Vec<f64>> {
    let norm = weights.layer(layer).recurrent_norm();
    let gamma = cfg.leakage[layer];
    Ok(snapshot_alphas(g)?
        .into_iter()
        .map(|a| contraction_coefficient(norm, gamma, a))
        .collect())
}

/// Checks every layer against the dataset-level bound `1 / α_mean`, and
/// against the strictest per-graph bound.
pub fn esp_check(
    weights: &ReservoirWeights,
    cfg: &ReservoirConfig,
    d: &Dataset,
) -> Result<EspReport> {
    weights.check_config(cfg)?;
    let per_layer_norm = weights.recurrent_norms();
    let alpha_gmean = d.alpha_mean();
    let bound = esp_bound(alpha_gmean);
    let worst = d
        .graph_alphas()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1));
    let worst_graph_alpha = worst.map_or(0.0, |(_, &a)| a);
    let worst_graph_bound = esp_bound(worst_graph_alpha);
    let contraction_per_step = match worst {
        Some((i, _)) => (0..cfg.layers)
            .map(|l| contraction_profile(weights, cfg, &d.graphs()[i].graph, l))
            .collect::<Result<Vec<_>>>()?,
        None => vec![Vec::new(); cfg.layers],
    };
    Ok(EspReport {
        satisfied: per_layer_norm.iter().map(|&n| n < bound).collect(),
        worst_graph_satisfied: per_layer_norm
            .iter()
            .map(|&n| n < worst_graph_bound)
            .collect(),
        per_layer_norm,
        leakage: cfg.leakage.clone(),
        alpha_gmean,
        bound,
        worst_graph_alpha,
        worst_graph_id: worst.map(|(i, _)| d.graphs()[i].id),
        worst_graph_bound,
        contraction_per_step,
    })
}

/// `(α*, k*)` for a static graph: the spectral norm of its single adjacency
/// and its maximum degree. `α* ≤ k*` always holds.
pub fn static_bound_comparison(g: &DynamicGraph) -> Result<(f64, usize)> {
    if let Some(time) = g.static_violation() {
        return Err(Error::NotStatic { time });
    }
    let alpha = spectral_norm(g.snapshot(1)?, PowerIteration::default())?;
    Ok((alpha, g.max_degree()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal_graph::TemporalEdge;

    fn complete(n: usize) -> Vec<(usize, usize)> {
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect()
    }

    #[test]
    fn coefficient_examples() {
        assert!((contraction_coefficient(0.9, 0.1, 1.0) - 0.99).abs() < 1e-15);
        assert!((contraction_coefficient(0.7, 1.0, 3.0) - 2.1).abs() < 1e-15);
        assert_eq!(contraction_coefficient(0.7, 0.25, 0.0), 0.75);
    }

    #[test]
    fn reciprocal_scaling_satisfies_bound() {
        let g = DynamicGraph::new_static(5, 3, &[(0, 1), (1, 2), (2, 3), (1, 4)], false).unwrap();
        let d = Dataset::from_pairs([(g, 0)]).unwrap();
        let cfg = ReservoirConfig::new(4, 3, 1, 1);
        let ok = ReservoirWeights::init(&cfg, 0.9 / d.alpha_mean()).unwrap();
        let r = esp_check(&ok, &cfg, &d).unwrap();
        assert!(r.all_satisfied());
        let bad = ReservoirWeights::init(&cfg, 2.0 / d.alpha_mean()).unwrap();
        let r = esp_check(&bad, &cfg, &d).unwrap();
        assert!(r.satisfied.iter().all(|&s| !s));
    }

    #[test]
    fn complete_graph_bound_is_reciprocal_degree() {
        let g = DynamicGraph::new_static(4, 2, &complete(4), false).unwrap();
        let d = Dataset::from_pairs([(g.clone(), 0), (g, 1)]).unwrap();
        let cfg = ReservoirConfig::new(2, 1, 1, 1);
        let w = ReservoirWeights::init(&cfg, 0.3).unwrap();
        let r = esp_check(&w, &cfg, &d).unwrap();
        assert!((r.bound - 1.0 / 3.0).abs() < 1e-9);
        assert!(r.all_satisfied());
        assert_eq!(r.contraction_per_step[0].len(), 2);
    }

    #[test]
    fn records_format() {
        let g = DynamicGraph::new_static(2, 1, &[(0, 1)], false).unwrap();
        let d = Dataset::from_pairs([(g, 0)]).unwrap();
        let cfg = ReservoirConfig::new(2, 2, 1, 1);
        let w = ReservoirWeights::init(&cfg, 0.5).unwrap();
        let text = esp_check(&w, &cfg, &d).unwrap().render_records();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "layer,norm,bound,satisfied");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
        assert!(lines[1].ends_with(",true"));
    }

    #[test]
    fn static_comparison_examples() {
        let (a, k) =
            static_bound_comparison(&DynamicGraph::new_static(4, 3, &complete(4), false).unwrap())
                .unwrap();
        assert!((a - 3.0).abs() < 1e-9);
        assert_eq!(k, 3);
        let (a, k) = static_bound_comparison(
            &DynamicGraph::new_static(3, 2, &[(0, 1), (1, 2)], false).unwrap(),
        )
        .unwrap();
        assert!((a - 2f64.sqrt()).abs() < 1e-9);
        assert_eq!(k, 2);
        let (a, k) =
            static_bound_comparison(&DynamicGraph::new_static(2, 1, &[(0, 1)], false).unwrap())
                .unwrap();
        assert!((a - 1.0).abs() < 1e-9);
        assert_eq!(k, 1);
    }

    #[test]
    fn non_static_graph_rejected() {
        let g = DynamicGraph::new(3, 2, [TemporalEdge::new(0, 1, 1)], false).unwrap();
        assert!(matches!(
            static_bound_comparison(&g),
            Err(Error::NotStatic { time: 2 })
        ));
    }

    #[test]
    fn edgeless_dataset_bound_is_infinite() {
        let g = DynamicGraph::new(3, 2, [], false).unwrap();
        let d = Dataset::from_pairs([(g, 0)]).unwrap();
        let cfg = ReservoirConfig::new(2, 1, 1, 1);
        let w = ReservoirWeights::init(&cfg, 0.9 / d.rescaling_alpha()).unwrap();
        let r = esp_check(&w, &cfg, &d).unwrap();
        assert!(r.bound.is_infinite());
        assert!(r.all_satisfied());
    }
}
