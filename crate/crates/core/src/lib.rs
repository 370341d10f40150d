//! Sparse graph to dense tile transformation (SGT) and the hybrid tiled
//! kernels built on it.
//!
//! The pipeline is: load a graph into [`CsrGraph`], normalize it, run
//! [`sgt_transform`] once, then reuse the [`TransformedGraph`] for any number
//! of [`spmm_hybrid`] (neighbor aggregation) and [`sddmm_hybrid`] (edge
//! feature) calls or the GCN/AGNN forward passes in [`models`]. Naive
//! references for every kernel live in [`oracle`].

pub mod bench;
pub mod cli;
pub mod dense;
pub mod error;
pub mod exec;
pub mod graph;
pub mod models;
pub mod oracle;
pub mod sgt;
pub mod synth;

pub use dense::{max_rel_err, DenseMatrix};
pub use error::{Error, Result};
pub use exec::{
    gather_tile, make_split_plan, sddmm_hybrid, spmm_hybrid, tf32_round, EdgeValList,
    HybridSplitPlan, PrecisionMode,
};
pub use graph::{
    gcn_normalize_values, load_edge_list, normalize_graph, CsrGraph, EdgeListFormat,
    NormalizeOptions,
};
pub use models::{agnn_forward, edge_softmax, gcn_forward, AgnnLayerParams, GcnLayerParams};
pub use sgt::{block_stats, reblock, sgt_transform, BlockStats, TileGeometry, TransformedGraph};
pub use synth::{make_synthetic, SyntheticSpec};

/// Runs `f` on a dedicated pool of `threads` workers (0 means rayon's default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}
