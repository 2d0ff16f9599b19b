//! Echo state networks for dynamic temporal graphs.
//!
//! A stack of untrained leaky reservoirs walks a sequence of graph snapshots,
//! updating every vertex from its current label and the previous states of
//! its temporal neighbours. Summing the final vertex states gives a fixed-size
//! graph embedding, on which a ridge-regression readout is trained.
//!
//! Modules:
//! - [`temporal_graph`]: graphs, snapshots, labels, CSV I/O, spectral norms
//! - [`reservoir`]: weight initialization, the state update, pooling
//! - [`stability`]: contraction coefficients and the echo state bound
//! - [`readout`]: ridge fit and binary prediction
//! - [`dissemination`]: susceptible-infected task generators
//! - [`experiment`]: bootstrap evaluation and the reservoir layout grid

pub mod dissemination;
pub mod error;
pub mod experiment;
pub mod readout;
pub mod reservoir;
pub mod seeds;
pub mod stability;
pub mod temporal_graph;

pub use readout::LinearReadout;
pub use reservoir::{GraphEmbedding, Reservoir, ReservoirConfig, ReservoirState, ReservoirWeights};

pub use error::{Error, Result};

pub use temporal_graph::{
    Dataset, DynamicGraph, LabelStream, LabeledGraph, Snapshot, TemporalEdge,
};

/// Identifier written into emitted files.
pub const BUILD_ID: &str = concat!("dyngesn ", env!("CARGO_PKG_VERSION"));

pub(crate) mod par {
    /// `(0..n).map(f)`, in parallel when the `parallel` feature is on. Output
    /// order is always index order.
    #[cfg(feature = "parallel")]
    pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..n).map(f).collect()
    }
}
