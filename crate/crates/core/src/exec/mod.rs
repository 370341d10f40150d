//! Hybrid tiled kernels over a [`TransformedGraph`].
//!
//! Each row window's tiles are split by a [`HybridSplitPlan`]: tiles below
//! the cut are materialized as dense `blk_h x blk_w` blocks and multiplied
//! as small GEMMs, the remaining tiles are processed edge by edge. Both
//! paths read the same edge-to-tile maps. Windows run in parallel and write
//! disjoint output ranges; within a window the work is sequential, so
//! results are bit-identical for any worker count.

mod plan;
mod precision;
mod sddmm;
mod spmm;

pub use plan::{make_split_plan, HybridSplitPlan};
pub use precision::{tf32_round, tf32_round_f32, PrecisionMode};
pub use sddmm::{sddmm_hybrid, sddmm_hybrid_with_values};
pub use spmm::{spmm_hybrid, spmm_hybrid_with_values};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sgt::TransformedGraph;

/// Feature widths are padded internally to a multiple of this.
pub const FEATURE_QUANTUM: usize = 16;

pub(crate) fn padded_width(cols: usize) -> usize {
    cols.div_ceil(FEATURE_QUANTUM) * FEATURE_QUANTUM
}

/// Copies `x` into an `(n + 1) x padded_width` buffer whose last row is the
/// all-zero sentinel row, rounding entries per `prec`.
pub(crate) fn padded_with_sentinel(x: &DenseMatrix, prec: PrecisionMode) -> Vec<f32> {
    let d = x.cols();
    let dp = padded_width(d);
    let mut out = vec![0.0f32; (x.rows() + 1) * dp];
    for r in 0..x.rows() {
        for (o, &v) in out[r * dp..r * dp + d].iter_mut().zip(x.row(r)) {
            *o = prec.apply(v);
        }
    }
    out
}

/// Per-edge values aligned index-for-index with the CSR edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeValList {
    values: Vec<f32>,
}

impl EdgeValList {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(EdgeValList { values })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Materializes one tile of a window's compressed adjacency.
///
/// Returns the `blk_h x blk_w` block and the original column id behind each
/// lane. Lanes past the end of the window's unique columns carry the
/// sentinel id `num_nodes` and an all-zero column.
pub fn gather_tile(
    t: &TransformedGraph,
    window: usize,
    tile: usize,
) -> Result<(DenseMatrix, Vec<usize>)> {
    if window >= t.num_windows() {
        return Err(Error::Index {
            what: "window",
            index: window,
            limit: t.num_windows(),
        });
    }
    let tiles = t.block_partition()[window] as usize;
    if tile >= tiles {
        return Err(Error::Index {
            what: "tile",
            index: tile,
            limit: tiles,
        });
    }
    let geom = t.geometry();
    let (h, bw) = (geom.blk_h, geom.blk_w);
    let first_row = t.window_rows(window).start;
    let lo = tile * bw;

    let mut a = vec![0.0f32; h * bw];
    let g = t.csr();
    for e in t.window_edges(window) {
        let cc = t.edge_to_column()[e] as usize;
        if (lo..lo + bw).contains(&cc) {
            let r = t.edge_to_row()[e] as usize - first_row;
            a[r * bw + cc - lo] += g.value(e);
        }
    }
    let cols = t.tile_columns(window, tile);
    let x_index = (0..bw)
        .map(|c| cols.get(c).map_or(t.num_nodes(), |&id| id as usize))
        .collect();
    Ok((DenseMatrix::new(h, bw, a)?, x_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CsrGraph;
    use crate::sgt::{sgt_transform, TileGeometry};

    fn transform(n: usize, edges: &[(u32, u32)], values: Option<Vec<f32>>) -> TransformedGraph {
        let g = CsrGraph::from_edges(n, edges, values).unwrap();
        sgt_transform(&g, TileGeometry::default()).unwrap()
    }

    #[test]
    fn identity_window_tile_zero() {
        let edges: Vec<(u32, u32)> = (0..16).map(|i| (i, i)).collect();
        let t = transform(16, &edges, None);
        let (a, idx) = gather_tile(&t, 0, 0).unwrap();
        assert_eq!((a.rows(), a.cols()), (16, 8));
        for r in 0..16 {
            for c in 0..8 {
                assert_eq!(a.get(r, c), if r == c { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
        let (a1, idx1) = gather_tile(&t, 0, 1).unwrap();
        assert_eq!(a1.get(8, 0), 1.0);
        assert_eq!(idx1, (8..16).collect::<Vec<_>>());
    }

    #[test]
    fn ragged_tile_uses_sentinel() {
        let t = transform(40, &[(0, 3), (1, 17), (2, 39)], Some(vec![0.5, 1.0, 2.0]));
        let (a, idx) = gather_tile(&t, 0, 0).unwrap();
        assert_eq!(&idx[..3], &[3, 17, 39]);
        assert!(idx[3..].iter().all(|&i| i == 40));
        assert_eq!(a.get(0, 0), 0.5);
        assert_eq!(a.get(1, 1), 1.0);
        assert_eq!(a.get(2, 2), 2.0);
        for r in 0..16 {
            for c in 3..8 {
                assert_eq!(a.get(r, c), 0.0);
            }
        }
    }

    #[test]
    fn out_of_range() {
        let t = transform(16, &[(0, 0)], None);
        assert!(matches!(
            gather_tile(&t, 1, 0),
            Err(Error::Index { what: "window", .. })
        ));
        assert!(matches!(
            gather_tile(&t, 0, 1),
            Err(Error::Index { what: "tile", .. })
        ));
    }

    #[test]
    fn padding_helpers() {
        assert_eq!(padded_width(1), 16);
        assert_eq!(padded_width(16), 16);
        assert_eq!(padded_width(17), 32);
        let x = DenseMatrix::new(2, 2, vec![1., 2., 3., 4.]).unwrap();
        let p = padded_with_sentinel(&x, PrecisionMode::ExactF32);
        assert_eq!(p.len(), 3 * 16);
        assert_eq!(&p[16..18], &[3., 4.]);
        assert!(p[32..].iter().all(|&v| v == 0.0));
    }
}
