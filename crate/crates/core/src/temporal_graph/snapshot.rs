use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// The adjacency `A_t` of one time-step in compressed-row form.
///
/// Row `v` lists the temporal neighbourhood `N_t(v)`, i.e. every `u` with an
/// edge `u -> v` at this step, sorted ascending. Entries are implicitly 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    time: usize,
    row_offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Snapshot {
    /// Builds `A_t` from `(source, target)` pairs. Pairs may repeat and come in
    /// any order.
    pub fn from_edges(time: usize, num_vertices: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for &(u, v) in pairs {
            for x in [u, v] {
                if x >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: x,
                        num_vertices,
                    });
                }
            }
            sorted.push((v, u));
        }
        sorted.sort_unstable();
        sorted.dedup();

        let mut row_offsets = vec![0; num_vertices + 1];
        for &(v, _) in &sorted {
            row_offsets[v + 1] += 1;
        }
        for i in 0..num_vertices {
            row_offsets[i + 1] += row_offsets[i];
        }
        let neighbors = sorted.into_iter().map(|(_, u)| u).collect();
        Ok(Self {
            time,
            row_offsets,
            neighbors,
        })
    }

    pub fn empty(time: usize, num_vertices: usize) -> Self {
        Self {
            time,
            row_offsets: vec![0; num_vertices + 1],
            neighbors: Vec::new(),
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn num_vertices(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// `N_t(v)`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    /// `(source, target)` pairs ordered by target, then source.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_vertices()).flat_map(move |v| self.neighbors(v).iter().map(move |&u| (u, v)))
    }

    pub fn max_degree(&self) -> usize {
        self.row_offsets
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn same_edges(&self, other: &Snapshot) -> bool {
        self.row_offsets == other.row_offsets && self.neighbors == other.neighbors
    }

    /// `y = A x`, i.e. `y[v] = sum of x[u] over u in N_t(v)`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (v, out) in y.iter_mut().enumerate() {
            *out = self.neighbors(v).iter().map(|&u| x[u]).sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (v, &xv) in x.iter().enumerate() {
            for &u in self.neighbors(v) {
                y[u] += xv;
            }
        }
    }

    /// `A · states` for a `|V| × H` matrix, summing neighbour rows in
    /// ascending vertex order.
    pub fn aggregate(&self, states: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, h) = states.shape();
        let mut out = DMatrix::zeros(n, h);
        for col in 0..h {
            let src = states.column(col);
            let mut dst = out.column_mut(col);
            for v in 0..n {
                let mut acc = 0.0;
                for &u in self.neighbors(v) {
                    acc += src[u];
                }
                dst[v] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut a = DMatrix::zeros(n, n);
        for (u, v) in self.edges() {
            a[(v, u)] = 1.0;
        }
        a
    }
}
