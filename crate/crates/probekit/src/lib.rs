//! Train single-hidden-layer MLPs on two-class image tasks and probe the
//! trained weight matrices as signed weighted bipartite graphs.
//!
//! The library is organized bottom-up:
//!
//! * [`rng`], [`matrix`], [`stats`]: deterministic random streams, dense
//!   row-major matrices, and the small statistics toolkit everything else
//!   shares.
//! * [`data`]: IDX image parsing, dataset caching, class-pair task
//!   construction, and SSIM distances between class-mean images.
//! * [`mlp`]: model definition, Adam training with cosine learning-rate
//!   annealing, and evaluation.
//! * [`bipartite`]: the graph view of a weight matrix (signed degrees,
//!   strengths, sign patterns).
//! * [`probes`]: magnitude pruning, binarization, noise injection, and
//!   smallest-magnitude sign flipping.
//! * [`randomize`]: the seven degree- and strength-preserving
//!   randomization schemes (kinds A through G).
//! * [`harness`]: replicated sweeps, aggregation, and task-complexity
//!   matrices, with CSV output.
//! * [`plot`]: self-contained SVG renderings of sweep results and
//!   heatmaps.
//! * [`bundle`]: a small binary container for named weight matrices.
//!
//! Every random decision flows from explicit seeds through [`rng::RngStream`],
//! so equal inputs and seeds produce byte-identical outputs regardless of
//! thread count.

pub mod bipartite;
pub mod bundle;
pub mod data;
mod error;
pub mod harness;
pub mod matrix;
pub mod mlp;
pub mod plot;
pub mod probes;
pub mod randomize;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use rng::RngStream;
