//! Multi-layer leaky graph reservoir.
//!
//! Layer `ℓ` updates every vertex `v` at time-step `t` as
//!
//! ```text
//! x_t(v) = γ tanh(W_in x_t^(ℓ-1)(v) + Σ_{u ∈ N_t(v)} Ŵ x_{t-1}(u)) + (1 - γ) x_{t-1}(v)
//! ```
//!
//! where layer 1 reads the vertex labels and deeper layers read the state the
//! layer below produced at the same step. States start at zero. The graph
//! embedding is the per-layer sum of final vertex states, concatenated.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeds::stream_rng;
use crate::temporal_graph::{DynamicGraph, Snapshot};

const MAX_DRAW_ATTEMPTS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirConfig {
    /// `H`, units per layer.
    pub hidden_units: usize,
    /// `L`.
    pub layers: usize,
    /// `U`, label dimension.
    pub input_dim: usize,
    /// Leakage `γ_ℓ ∈ (0, 1]` for each layer.
    pub leakage: Vec<f64>,
    /// Input weights are drawn from `[-input_scale, input_scale]`.
    pub input_scale: f64,
    pub seed: u64,
}

impl ReservoirConfig {
    /// `γ = 0.1` on every layer and unit input scale.
    pub fn new(hidden_units: usize, layers: usize, input_dim: usize, seed: u64) -> Self {
        Self {
            hidden_units,
            layers,
            input_dim,
            leakage: vec![0.1; layers],
            input_scale: 1.0,
            seed,
        }
    }

    /// Same leakage on every layer.
    pub fn with_leakage(mut self, gamma: f64) -> Self {
        self.leakage = vec![gamma; self.layers];
        self
    }

    pub fn with_input_scale(mut self, scale: f64) -> Self {
        self.input_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0 || self.layers == 0 {
            return Err(Error::Config(
                "hidden units and layers must be at least 1".into(),
            ));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input dimension must be at least 1".into()));
        }
        if self.leakage.len() != self.layers {
            return Err(Error::Config(format!(
                "{} leakage values for {} layers",
                self.leakage.len(),
                self.layers
            )));
        }
        if let Some(g) = self.leakage.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(Error::Config(format!("leakage {g} outside (0, 1]")));
        }
        if !(self.input_scale.is_finite() && self.input_scale >= 0.0) {
            return Err(Error::Config(format!(
                "invalid input scale {}",
                self.input_scale
            )));
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        self.hidden_units * self.layers
    }

    /// Width of the input feeding `layer` (0-based).
    pub fn layer_input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_units
        }
    }
}

/// Largest singular value of a dense matrix.
pub fn matrix_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights {
    input: DMatrix<f64>,
    recurrent: DMatrix<f64>,
    recurrent_norm: f64,
}

impl LayerWeights {
    /// `input` is `H × (U or H)`, `recurrent` is `H × H`.
    pub fn new(input: DMatrix<f64>, recurrent: DMatrix<f64>) -> Result<Self> {
        let h = recurrent.nrows();
        if recurrent.ncols() != h || input.nrows() != h {
            return Err(Error::Shape {
                context: "layer weights",
                expected: (h, h),
                actual: recurrent.shape(),
            });
        }
        let recurrent_norm = matrix_spectral_norm(&recurrent);
        Ok(Self {
            input,
            recurrent,
            recurrent_norm,
        })
    }

    pub fn input(&self) -> &DMatrix<f64> {
        &self.input
    }

    pub fn recurrent(&self) -> &DMatrix<f64> {
        &self.recurrent
    }

    /// `‖Ŵ‖₂`.
    pub fn recurrent_norm(&self) -> f64 {
        self.recurrent_norm
    }

    pub fn hidden_units(&self) -> usize {
        self.recurrent.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirWeights {
    layers: Vec<LayerWeights>,
}

impl ReservoirWeights {
    /// Draws all weights uniformly from `[-1, 1]` and rescales each recurrent
    /// matrix to spectral norm `target_norm`.
    ///
    /// Layer `ℓ` uses ChaCha streams `2ℓ` (input) and `2ℓ + 1` (recurrent) of
    /// `cfg.seed`, so adding layers leaves existing ones unchanged.
    pub fn init(cfg: &ReservoirConfig, target_norm: f64) -> Result<Self> {
        cfg.validate()?;
        if !(target_norm > 0.0 && target_norm.is_finite()) {
            return Err(Error::Config(format!(
                "target recurrent norm must be positive, got {target_norm}"
            )));
        }
        let h = cfg.hidden_units;
        let layers = (0..cfg.layers)
            .map(|l| {
                let mut rng = stream_rng(cfg.seed, 2 * l as u64);
                let input = DMatrix::from_fn(h, cfg.layer_input_dim(l), |_, _| {
                    cfg.input_scale * rng.random_range(-1.0..=1.0)
                });
                let recurrent = draw_recurrent(cfg.seed, l, h, target_norm)?;
                LayerWeights::new(input, recurrent)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<LayerWeights>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[LayerWeights] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &LayerWeights {
        &self.layers[l]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn recurrent_norms(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(LayerWeights::recurrent_norm)
            .collect()
    }

    /// Copy with every recurrent matrix multiplied by `factor`.
    pub fn with_recurrent_scaled(&self, factor: f64) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|lw| LayerWeights {
                input: lw.input.clone(),
                recurrent: &lw.recurrent * factor,
                recurrent_norm: lw.recurrent_norm * factor.abs(),
            })
            .collect();
        Self { layers }
    }

    pub fn check_config(&self, cfg: &ReservoirConfig) -> Result<()> {
        if self.layers.len() != cfg.layers {
            return Err(Error::Config(format!(
                "weights have {} layers, config {}",
                self.layers.len(),
                cfg.layers
            )));
        }
        for (l, lw) in self.layers.iter().enumerate() {
            let expected = (cfg.hidden_units, cfg.layer_input_dim(l));
            if lw.input.shape() != expected {
                return Err(Error::Shape {
                    context: "input weights",
                    expected,
                    actual: lw.input.shape(),
                });
            }
            if lw.recurrent.shape() != (cfg.hidden_units, cfg.hidden_units) {
                return Err(Error::Shape {
                    context: "recurrent weights",
                    expected: (cfg.hidden_units, cfg.hidden_units),
                    actual: lw.recurrent.shape(),
                });
            }
        }
        Ok(())
    }
}

fn draw_recurrent(seed: u64, layer: usize, h: usize, target_norm: f64) -> Result<DMatrix<f64>> {
    for attempt in 0..MAX_DRAW_ATTEMPTS {
        let stream = 2 * layer as u64 + 1 + ((attempt as u64) << 32);
        let mut rng = stream_rng(seed, stream);
        let w = DMatrix::from_fn(h, h, |_, _| rng.random_range(-1.0..=1.0));
        let norm = matrix_spectral_norm(&w);
        if norm > 0.0 && norm.is_finite() {
            return Ok(w * (target_norm / norm));
        }
    }
    Err(Error::DegenerateWeights {
        layer,
        attempts: MAX_DRAW_ATTEMPTS,
    })
}

/// Per-layer `|V| × H` vertex states at a time-step.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservoirState {
    layers: Vec<DMatrix<f64>>,
    time: usize,
}

impl ReservoirState {
    pub fn from_layers(layers: Vec<DMatrix<f64>>, time: usize) -> Self {
        Self { layers, time }
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &DMatrix<f64> {
        &self.layers[l]
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn num_vertices(&self) -> usize {
        self.layers.first().map_or(0, |m| m.nrows())
    }

    pub fn max_abs(&self) -> f64 {
        self.layers.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }

    /// Frobenius distance over all layers.
    pub fn distance(&self, other: &ReservoirState) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// The all-zero state at time 0.
pub fn initial_state(num_vertices: usize, cfg: &ReservoirConfig) -> ReservoirState {
    ReservoirState {
        layers: vec![DMatrix::zeros(num_vertices, cfg.hidden_units); cfg.layers],
        time: 0,
    }
}

/// One application of the update to layer `layer`: `input` is the layer's
/// `|V| × (U or H)` driving signal at step `t`, `prev` its own state at
/// `t - 1`, `adj` the snapshot `A_t`.
pub fn layer_step(
    weights: &ReservoirWeights,
    layer: usize,
    input: &DMatrix<f64>,
    prev: &DMatrix<f64>,
    adj: &Snapshot,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Config(format!("leakage {gamma} outside (0, 1]")));
    }
    let lw = weights.layers.get(layer).ok_or_else(|| {
        Error::Config(format!(
            "layer {layer} out of range ({} layers)",
            weights.num_layers()
        ))
    })?;
    let n = adj.num_vertices();
    let h = lw.hidden_units();
    if input.shape() != (n, lw.input.ncols()) {
        return Err(Error::Shape {
            context: "layer input",
            expected: (n, lw.input.ncols()),
            actual: input.shape(),
        });
    }
    if prev.shape() != (n, h) {
        return Err(Error::Shape {
            context: "previous state",
            expected: (n, h),
            actual: prev.shape(),
        });
    }
    let mut pre = input * lw.input.transpose();
    if !adj.is_empty() {
        pre += adj.aggregate(prev) * lw.recurrent.transpose();
    }
    Ok(pre.zip_map(prev, |a, x| gamma * a.tanh() + (1.0 - gamma) * x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEmbedding(Vec<f64>);

impl GraphEmbedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Sum of vertex states per layer, layers concatenated. Vertices are added
/// in id order.
pub fn pool_embedding(state: &ReservoirState) -> GraphEmbedding {
    let mut out = Vec::with_capacity(state.layers.iter().map(|m| m.ncols()).sum());
    for m in &state.layers {
        for col in m.column_iter() {
            let mut acc = 0.0;
            for &x in col.iter() {
                acc += x;
            }
            out.push(acc);
        }
    }
    GraphEmbedding(out)
}

/// `|V| × (H·L)` per-vertex features: the layer states side by side.
pub fn vertex_embeddings(state: &ReservoirState) -> DMatrix<f64> {
    let n = state.num_vertices();
    let widths: Vec<usize> = state.layers.iter().map(|m| m.ncols()).collect();
    let mut out = DMatrix::zeros(n, widths.iter().sum());
    let mut offset = 0;
    for (m, w) in state.layers.iter().zip(widths) {
        out.columns_mut(offset, w).copy_from(m);
        offset += w;
    }
    out
}

/// Configuration plus weights: everything needed to encode graphs.
#[derive(Clone, Debug)]
pub struct Reservoir {
    config: ReservoirConfig,
    weights: ReservoirWeights,
}

impl Reservoir {
    pub fn new(config: ReservoirConfig, target_norm: f64) -> Result<Self> {
        let weights = ReservoirWeights::init(&config, target_norm)?;
        Ok(Self { config, weights })
    }

    pub fn from_parts(config: ReservoirConfig, weights: ReservoirWeights) -> Result<Self> {
        config.validate()?;
        weights.check_config(&config)?;
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn weights(&self) -> &ReservoirWeights {
        &self.weights
    }

    pub fn initial_state(&self, num_vertices: usize) -> ReservoirState {
        initial_state(num_vertices, &self.config)
    }

    /// Advances all layers by one time-step given the labels `u_t` and `A_t`.
    pub fn step(
        &self,
        state: &ReservoirState,
        labels_t: &DMatrix<f64>,
        adj: &Snapshot,
    ) -> Result<ReservoirState> {
        if labels_t.ncols() != self.config.input_dim {
            return Err(Error::LabelDimension {
                expected: self.config.input_dim,
                actual: labels_t.ncols(),
            });
        }
        if state.layers.len() != self.config.layers {
            return Err(Error::Shape {
                context: "state layers",
                expected: (self.config.layers, self.config.hidden_units),
                actual: (state.layers.len(), self.config.hidden_units),
            });
        }
        let mut layers: Vec<DMatrix<f64>> = Vec::with_capacity(self.config.layers);
        for l in 0..self.config.layers {
            let input = if l == 0 { labels_t } else { &layers[l - 1] };
            let next = layer_step(
                &self.weights,
                l,
                input,
                &state.layers[l],
                adj,
                self.config.leakage[l],
            )?;
            layers.push(next);
        }
        Ok(ReservoirState {
            layers,
            time: state.time + 1,
        })
    }

    /// On-line update from `x_{t-1}`, `u_t` and the raw edge list `E_t` of
    /// `(source, target)` pairs (both orientations for undirected edges).
    pub fn step_online(
        &self,
        state: &ReservoirState,
        labels_t: &DMatrix<f64>,
        edges_t: &[(usize, usize)],
    ) -> Result<ReservoirState> {
        let adj = Snapshot::from_edges(state.time + 1, labels_t.nrows(), edges_t)?;
        self.step(state, labels_t, &adj)
    }

    /// Drives `initial` through every time-step of `g`.
    pub fn run_from(&self, g: &DynamicGraph, initial: ReservoirState) -> Result<ReservoirState> {
        if g.label_dim() != self.config.input_dim {
            return Err(Error::LabelDimension {
                expected: self.config.input_dim,
                actual: g.label_dim(),
            });
        }
        let mut state = initial;
        for adj in g.snapshots() {
            let labels = g.labels().matrix_at(adj.time());
            state = self.step(&state, &labels, adj)?;
        }
        Ok(state)
    }

    /// Final state from the zero initial state, and its pooled embedding.
    pub fn encode(&self, g: &DynamicGraph) -> Result<(ReservoirState, GraphEmbedding)> {
        let state = self.run_from(g, self.initial_state(g.num_vertices()))?;
        let embedding = pool_embedding(&state);
        Ok((state, embedding))
    }

    pub fn embed(&self, g: &DynamicGraph) -> Result<GraphEmbedding> {
        self.encode(g).map(|(_, e)| e)
    }

    /// Writes the weights in the binary snapshot layout:
    ///
    /// ```text
    /// magic   8 bytes  "DGESNWTS"
    /// version u32      1
    /// hidden, layers, input_dim   u32 ×3
    /// seed    u64
    /// input_scale f64
    /// leakage f64 × layers
    /// per layer: W_in (row-major f64), Ŵ (row-major f64)
    /// ```
    ///
    /// All fields little-endian. The file is a cache; the same weights can be
    /// regenerated from the config.
    pub fn write_snapshot(&self, mut w: impl Write) -> std::io::Result<()> {
        let c = &self.config;
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for x in [c.hidden_units, c.layers, c.input_dim] {
            w.write_all(&(x as u32).to_le_bytes())?;
        }
        w.write_all(&c.seed.to_le_bytes())?;
        w.write_all(&c.input_scale.to_le_bytes())?;
        for g in &c.leakage {
            w.write_all(&g.to_le_bytes())?;
        }
        for lw in &self.weights.layers {
            for m in [&lw.input, &lw.recurrent] {
                for r in 0..m.nrows() {
                    for x in m.row(r).iter() {
                        w.write_all(&x.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_snapshot(mut r: impl Read) -> Result<Self> {
        let bad = |e: std::io::Error| Error::Data(format!("weight snapshot: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(bad)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::Data("weight snapshot: bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
            r.read_exact(&mut u32buf).map_err(bad)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Data(format!(
                "weight snapshot: unsupported version {version}"
            )));
        }
        let hidden = read_u32(&mut r)? as usize;
        let layers = read_u32(&mut r)? as usize;
        let input_dim = read_u32(&mut r)? as usize;
        let mut b8 = [0u8; 8];
        let mut read8 = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b8).map_err(bad)?;
            Ok(b8)
        };
        let seed = u64::from_le_bytes(read8(&mut r)?);
        let input_scale = f64::from_le_bytes(read8(&mut r)?);
        let leakage = (0..layers)
            .map(|_| read8(&mut r).map(f64::from_le_bytes))
            .collect::<Result<Vec<_>>>()?;
        let config = ReservoirConfig {
            hidden_units: hidden,
            layers,
            input_dim,
            leakage,
            input_scale,
            seed,
        };
        config.validate()?;
        let mut read_matrix = |rows: usize, cols: usize| -> Result<DMatrix<f64>> {
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(f64::from_le_bytes(read8(&mut r)?));
            }
            Ok(DMatrix::from_row_slice(rows, cols, &data))
        };
        let layer_weights = (0..layers)
            .map(|l| {
                let input = read_matrix(hidden, config.layer_input_dim(l))?;
                let recurrent = read_matrix(hidden, hidden)?;
                LayerWeights::new(input, recurrent)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(config, ReservoirWeights::from_layers(layer_weights))
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"DGESNWTS";
const SNAPSHOT_VERSION: u32 = 1;

/// Zero-state encoding of `g` with explicit weights and config.
pub fn encode_graph(
    weights: &ReservoirWeights,
    cfg: &ReservoirConfig,
    g: &DynamicGraph,
) -> Result<(ReservoirState, GraphEmbedding)> {
    Reservoir::from_parts(cfg.clone(), weights.clone())?.encode(g)
}
