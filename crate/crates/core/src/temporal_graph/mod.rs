//! Dynamic temporal graphs: a fixed vertex set, edges stamped with a
//! time-step in `1..=horizon`, and a piecewise-constant label stream per
//! vertex.
//!
//! Edges are stored grouped by time-step as [`Snapshot`]s, so the adjacency
//! needed by the reservoir at step `t` is available without scanning the
//! whole edge set.

mod dataset;
mod io;
mod labels;
mod snapshot;
mod spectral;

pub use dataset::{Dataset, LabeledGraph};
pub use io::{load_dataset, load_dataset_dir, write_dataset, EDGES_FILE, GRAPHS_FILE, LABELS_FILE};
pub use labels::LabelStream;
pub use snapshot::Snapshot;
pub use spectral::{
    alpha_geometric_mean, geometric_mean_of, snapshot_alphas, spectral_norm, PowerIteration,
};

use crate::error::{Error, Result};

/// A directed interaction `source -> target` active at `time`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemporalEdge {
    pub source: usize,
    pub target: usize,
    pub time: usize,
}

impl TemporalEdge {
    pub fn new(source: usize, target: usize, time: usize) -> Self {
        Self {
            source,
            target,
            time,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DynamicGraph {
    num_vertices: usize,
    horizon: usize,
    directed: bool,
    snapshots: Vec<Snapshot>,
    labels: LabelStream,
}

impl DynamicGraph {
    /// Builds a graph from temporal edges. Undirected graphs are symmetrized,
    /// and repeated `(source, target, time)` triples collapse to one edge.
    /// Labels start as the one-dimensional all-zero stream.
    pub fn new(
        num_vertices: usize,
        horizon: usize,
        edges: impl IntoIterator<Item = TemporalEdge>,
        directed: bool,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let mut by_time: Vec<Vec<(usize, usize)>> = vec![Vec::new(); horizon];
        for e in edges {
            for v in [e.source, e.target] {
                if v >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: v,
                        num_vertices,
                    });
                }
            }
            if e.time == 0 || e.time > horizon {
                return Err(Error::TimeOutOfRange {
                    time: e.time,
                    horizon,
                });
            }
            let bucket = &mut by_time[e.time - 1];
            bucket.push((e.source, e.target));
            if !directed && e.source != e.target {
                bucket.push((e.target, e.source));
            }
        }
        let snapshots = by_time
            .iter()
            .enumerate()
            .map(|(i, pairs)| Snapshot::from_edges(i + 1, num_vertices, pairs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_vertices,
            horizon,
            directed,
            snapshots,
            labels: LabelStream::zeros(num_vertices, 1),
        })
    }

    /// A graph whose edge set is the same at every time-step.
    pub fn new_static(
        num_vertices: usize,
        horizon: usize,
        pairs: &[(usize, usize)],
        directed: bool,
    ) -> Result<Self> {
        let edges =
            (1..=horizon).flat_map(|t| pairs.iter().map(move |&(u, v)| TemporalEdge::new(u, v, t)));
        Self::new(num_vertices, horizon, edges, directed)
    }

    /// Replaces the label stream, keeping the topology.
    pub fn with_labels(mut self, labels: LabelStream) -> Result<Self> {
        if labels.num_vertices() != self.num_vertices {
            return Err(Error::Data(format!(
                "label stream covers {} vertices, graph has {}",
                labels.num_vertices(),
                self.num_vertices
            )));
        }
        if let Some(t) = labels.last_event_time() {
            if t > self.horizon {
                return Err(Error::TimeOutOfRange {
                    time: t,
                    horizon: self.horizon,
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn labels(&self) -> &LabelStream {
        &self.labels
    }

    pub fn label_dim(&self) -> usize {
        self.labels.dim()
    }

    /// The adjacency `A_t` of the edges active at time-step `t`.
    pub fn snapshot(&self, t: usize) -> Result<&Snapshot> {
        if t == 0 || t > self.horizon {
            return Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.horizon,
            });
        }
        Ok(&self.snapshots[t - 1])
    }

    /// All snapshots in time order, `snapshots()[t - 1]` being `A_t`.
    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Every stored edge in (time, target, source) order. Undirected graphs
    /// yield both orientations.
    pub fn edges(&self) -> impl Iterator<Item = TemporalEdge> + '_ {
        self.snapshots.iter().flat_map(|s| {
            let t = s.time();
            s.edges().map(move |(u, v)| TemporalEdge::new(u, v, t))
        })
    }

    pub fn num_edges(&self) -> usize {
        self.snapshots.iter().map(Snapshot::num_edges).sum()
    }

    pub fn is_static(&self) -> bool {
        self.static_violation().is_none()
    }

    /// First time-step whose edge set differs from that of `t = 1`.
    pub(crate) fn static_violation(&self) -> Option<usize> {
        let first = &self.snapshots[0];
        self.snapshots[1..]
            .iter()
            .find(|s| !s.same_edges(first))
            .map(Snapshot::time)
    }

    /// Maximum temporal neighbourhood size `|N_t(v)|` over all `t` and `v`.
    pub fn max_degree(&self) -> usize {
        self.snapshots
            .iter()
            .map(Snapshot::max_degree)
            .max()
            .unwrap_or(0)
    }

    /// Relabels vertex `v` as `perm[v]`, carrying labels along.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_vertices {
            return Err(Error::Data(
                "permutation length differs from vertex count".into(),
            ));
        }
        let mut seen = vec![false; self.num_vertices];
        for &p in perm {
            if p >= self.num_vertices || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Data("not a permutation".into()));
            }
        }
        let edges = self
            .edges()
            .map(|e| TemporalEdge::new(perm[e.source], perm[e.target], e.time));
        let g = Self::new(self.num_vertices, self.horizon, edges, true)?;
        Ok(Self {
            directed: self.directed,
            labels: self.labels.permuted(perm),
            ..g
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step_path() -> DynamicGraph {
        DynamicGraph::new(
            3,
            3,
            [TemporalEdge::new(0, 1, 1), TemporalEdge::new(1, 2, 2)],
            false,
        )
        .unwrap()
    }

    #[test]
    fn snapshot_filters_by_time() {
        let g = two_step_path();
        let s1 = g.snapshot(1).unwrap();
        assert_eq!(s1.edges().collect::<Vec<_>>(), vec![(1, 0), (0, 1)]);
        assert_eq!(s1.neighbors(0), &[1]);
        assert_eq!(s1.neighbors(1), &[0]);
        assert!(s1.neighbors(2).is_empty());
        assert!(g.snapshot(3).unwrap().is_empty());
    }

    #[test]
    fn snapshot_out_of_range() {
        let g = two_step_path();
        assert!(matches!(g.snapshot(0), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(g.snapshot(4), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn static_graph_has_identical_snapshots() {
        let g = DynamicGraph::new_static(4, 5, &[(0, 1), (1, 2), (2, 3)], false).unwrap();
        assert!(g.is_static());
        for t in 2..=5 {
            assert!(g.snapshot(t).unwrap().same_edges(g.snapshot(1).unwrap()));
        }
        assert!(!two_step_path().is_static());
    }

    #[test]
    fn rejects_out_of_range_vertex() {
        let err = DynamicGraph::new(3, 1, [TemporalEdge::new(0, 5, 1)], false).unwrap_err();
        assert!(err.to_string().contains("vertex id out of range"));
    }

    #[test]
    fn rejects_edge_time_outside_horizon() {
        for t in [0, 3] {
            let err = DynamicGraph::new(3, 2, [TemporalEdge::new(0, 1, t)], false).unwrap_err();
            assert!(matches!(err, Error::TimeOutOfRange { .. }));
        }
    }

    #[test]
    fn duplicates_collapse() {
        let g = DynamicGraph::new(
            2,
            1,
            [
                TemporalEdge::new(0, 1, 1),
                TemporalEdge::new(1, 0, 1),
                TemporalEdge::new(0, 1, 1),
            ],
            false,
        )
        .unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn directed_graph_keeps_orientation() {
        let g = DynamicGraph::new(2, 1, [TemporalEdge::new(0, 1, 1)], true).unwrap();
        let s = g.snapshot(1).unwrap();
        // N_t(1) = {0}: vertex 1 receives from 0.
        assert_eq!(s.neighbors(1), &[0]);
        assert!(s.neighbors(0).is_empty());
    }

    #[test]
    fn max_degree_examples() {
        let single = DynamicGraph::new(2, 3, [TemporalEdge::new(0, 1, 2)], false).unwrap();
        assert_eq!(single.max_degree(), 1);
        let k4: Vec<_> = (0..4)
            .flat_map(|u| (u + 1..4).map(move |v| (u, v)))
            .collect();
        assert_eq!(
            DynamicGraph::new_static(4, 2, &k4, false)
                .unwrap()
                .max_degree(),
            3
        );
        let star = [(0, 1), (0, 2), (0, 3), (0, 4)];
        assert_eq!(
            DynamicGraph::new_static(5, 1, &star, false)
                .unwrap()
                .max_degree(),
            4
        );
    }

    #[test]
    fn zero_horizon_rejected() {
        assert!(DynamicGraph::new(1, 0, [], false).is_err());
    }

    #[test]
    fn permutation_moves_edges_and_labels() {
        let mut labels = LabelStream::zeros(3, 1);
        labels.set(0, 1, &[1.0]).unwrap();
        let g = two_step_path().with_labels(labels).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.snapshot(1).unwrap().neighbors(2), &[0]);
        assert_eq!(p.labels().value_at(2, 1), &[1.0]);
        assert_eq!(p.labels().value_at(0, 1), &[0.0]);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
