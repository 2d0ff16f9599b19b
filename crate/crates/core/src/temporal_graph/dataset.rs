use super::{alpha_geometric_mean, DynamicGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LabeledGraph {
    pub id: usize,
    pub graph: DynamicGraph,
    pub class: u8,
}

/// Binary-labelled collection of dynamic graphs with the per-graph
/// `⟨α*_t⟩` values and their arithmetic mean `α_mean` precomputed.
#[derive(Clone, Debug)]
pub struct Dataset {
    graphs: Vec<LabeledGraph>,
    alphas: Vec<f64>,
    alpha_mean: f64,
}

impl Dataset {
    pub fn new(graphs: Vec<LabeledGraph>) -> Result<Self> {
        if let Some(g) = graphs.iter().find(|g| g.class > 1) {
            return Err(Error::Data(format!(
                "graph {} has class {}, expected 0 or 1",
                g.id, g.class
            )));
        }
        #[cfg(feature = "parallel")]
        let alphas = {
            use rayon::prelude::*;
            graphs
                .par_iter()
                .map(|g| alpha_geometric_mean(&g.graph))
                .collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let alphas = graphs
            .iter()
            .map(|g| alpha_geometric_mean(&g.graph))
            .collect::<Result<Vec<_>>>()?;
        let alpha_mean = if alphas.is_empty() {
            0.0
        } else {
            alphas.iter().sum::<f64>() / alphas.len() as f64
        };
        Ok(Self {
            graphs,
            alphas,
            alpha_mean,
        })
    }

    /// Builds from graphs labelled in order, ids `0..n`.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (DynamicGraph, u8)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .enumerate()
                .map(|(id, (graph, class))| LabeledGraph { id, graph, class })
                .collect(),
        )
    }

    pub fn graphs(&self) -> &[LabeledGraph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Mean over graphs of `⟨α*_t⟩`.
    pub fn alpha_mean(&self) -> f64 {
        self.alpha_mean
    }

    /// `⟨α*_t⟩` of each graph, in dataset order.
    pub fn graph_alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn max_graph_alpha(&self) -> f64 {
        self.alphas.iter().copied().fold(0.0, f64::max)
    }

    /// `α_mean`, or 1 when no graph has an edge. With no recurrent coupling
    /// any recurrent norm satisfies the stability bound, and 1 keeps
    /// recurrent rescaling finite.
    pub fn rescaling_alpha(&self) -> f64 {
        if self.alpha_mean > 0.0 {
            self.alpha_mean
        } else {
            1.0
        }
    }

    pub fn classes(&self) -> Vec<u8> {
        self.graphs.iter().map(|g| g.class).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for g in &self.graphs {
            counts[g.class as usize] += 1;
        }
        counts
    }

    pub fn label_dim(&self) -> Option<usize> {
        self.graphs.first().map(|g| g.graph.label_dim())
    }

    /// Same graphs with replaced class labels; alpha statistics are reused.
    pub fn with_classes(&self, classes: &[u8]) -> Result<Self> {
        if classes.len() != self.graphs.len() {
            return Err(Error::Data(
                "class vector length differs from dataset size".into(),
            ));
        }
        if classes.iter().any(|&c| c > 1) {
            return Err(Error::Data("classes must be 0 or 1".into()));
        }
        let graphs = self
            .graphs
            .iter()
            .zip(classes)
            .map(|(g, &class)| LabeledGraph { class, ..g.clone() })
            .collect();
        Ok(Self {
            graphs,
            alphas: self.alphas.clone(),
            alpha_mean: self.alpha_mean,
        })
    }
}
