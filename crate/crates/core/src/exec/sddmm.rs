use rayon::prelude::*;

use super::{
    padded_width, padded_with_sentinel, EdgeValList, HybridSplitPlan, PrecisionMode,
    FEATURE_QUANTUM,
};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sgt::TransformedGraph;

/// Edge features `values[e] = a(e) * dot(x[row(e)], y[col(e)])`.
///
/// Intended for a transform reblocked to 16-wide tiles (`SDDMM_BLK_W`), but
/// any tile width works. Tile-path tiles compute the full `blk_h x blk_w`
/// block of dot products and keep only the entries that are edges.
pub fn sddmm_hybrid(
    t: &TransformedGraph,
    x: &DenseMatrix,
    y: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<EdgeValList> {
    sddmm_impl(t, t.csr().values(), x, y, plan, prec)
}

/// Like [`sddmm_hybrid`] with the sampling values supplied by the caller.
pub fn sddmm_hybrid_with_values(
    t: &TransformedGraph,
    values: &[f32],
    x: &DenseMatrix,
    y: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<EdgeValList> {
    if values.len() != t.num_edges() {
        return Err(Error::shape(format!(
            "{} edge values for {} edges",
            values.len(),
            t.num_edges()
        )));
    }
    sddmm_impl(t, Some(values), x, y, plan, prec)
}

fn sddmm_impl(
    t: &TransformedGraph,
    values: Option<&[f32]>,
    x: &DenseMatrix,
    y: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<EdgeValList> {
    let n = t.num_nodes();
    if x.rows() != n || y.rows() != n {
        return Err(Error::shape(format!(
            "feature matrices have {} and {} rows, graph has {n} nodes",
            x.rows(),
            y.rows()
        )));
    }
    if x.cols() != y.cols() {
        return Err(Error::shape(format!(
            "feature widths differ: {} vs {}",
            x.cols(),
            y.cols()
        )));
    }
    plan.check(t)?;

    let any_tiles = plan.per_window_tile_cut().iter().any(|&c| c > 0);
    let (x_tiles, y_tiles) = if any_tiles {
        (padded_with_sentinel(x, prec), padded_with_sentinel(y, prec))
    } else {
        (Vec::new(), Vec::new())
    };
    let kernel = WindowSddmm {
        t,
        values,
        x,
        y,
        x_tiles: &x_tiles,
        y_tiles: &y_tiles,
        dp: padded_width(x.cols()),
    };

    let mut out = vec![0.0f32; t.num_edges()];
    let mut chunks: Vec<&mut [f32]> = Vec::with_capacity(t.num_windows());
    let mut rest = out.as_mut_slice();
    for w in 0..t.num_windows() {
        let (head, tail) = rest.split_at_mut(t.window_edges(w).len());
        chunks.push(head);
        rest = tail;
    }
    chunks
        .into_par_iter()
        .enumerate()
        .for_each(|(w, chunk)| kernel.run(w, plan.cut(w), chunk));

    if let Some(index) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    EdgeValList::new(out)
}

struct WindowSddmm<'a> {
    t: &'a TransformedGraph,
    values: Option<&'a [f32]>,
    x: &'a DenseMatrix,
    y: &'a DenseMatrix,
    x_tiles: &'a [f32],
    y_tiles: &'a [f32],
    dp: usize,
}

impl WindowSddmm<'_> {
    fn run(&self, w: usize, cut: usize, out: &mut [f32]) {
        let t = self.t;
        let bw = t.geometry().blk_w;
        let width = cut * bw;
        let rows = t.window_rows(w);
        let edges = t.window_edges(w);
        let block = (cut > 0).then(|| self.tile_block(w, width, rows.len()));

        let unique = t.unique_cols(w);
        for (o, e) in out.iter_mut().zip(edges) {
            let a = self.values.map_or(1.0, |v| v[e]);
            let cc = t.edge_to_column()[e] as usize;
            let row = t.edge_to_row()[e] as usize;
            *o = match &block {
                Some(b) if cc < width => a * b[(row - rows.start) * width + cc],
                _ => a * dot(self.x.row(row), self.y.row(unique[cc] as usize)),
            };
        }
    }

    /// `nr x width` block of dot products between the window's rows of `x`
    /// and the rows of `y` gathered for the tile-path tiles.
    fn tile_block(&self, w: usize, width: usize, nr: usize) -> Vec<f32> {
        let t = self.t;
        let dp = self.dp;
        let first_row = t.window_rows(w).start;
        let cols = t.unique_cols(w);
        let sentinel = t.num_nodes();
        let y_index: Vec<usize> = (0..width)
            .map(|k| cols.get(k).map_or(sentinel, |&c| c as usize) * dp)
            .collect();

        let mut block = vec![0.0f32; nr * width];
        for r in 0..nr {
            let xr = &self.x_tiles[(first_row + r) * dp..(first_row + r + 1) * dp];
            for (b, &yo) in block[r * width..(r + 1) * width].iter_mut().zip(&y_index) {
                *b = dot_quantum(xr, &self.y_tiles[yo..yo + dp]);
            }
        }
        block
    }
}

/// Dot product over a padded width, accumulated in `FEATURE_QUANTUM` lanes.
#[inline]
fn dot_quantum(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0.0f32; FEATURE_QUANTUM];
    for (ca, cb) in a
        .chunks_exact(FEATURE_QUANTUM)
        .zip(b.chunks_exact(FEATURE_QUANTUM))
    {
        for l in 0..FEATURE_QUANTUM {
            acc[l] += ca[l] * cb[l];
        }
    }
    acc.iter().sum()
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::make_split_plan;
    use crate::graph::CsrGraph;
    use crate::sgt::{reblock, sgt_transform, TileGeometry, SDDMM_BLK_W};

    fn transform(n: usize, edges: &[(u32, u32)], values: Option<Vec<f32>>) -> TransformedGraph {
        let g = CsrGraph::from_edges(n, edges, values).unwrap();
        let t = sgt_transform(&g, TileGeometry::default()).unwrap();
        reblock(&t, SDDMM_BLK_W).unwrap()
    }

    fn both_paths(t: &TransformedGraph, x: &DenseMatrix, y: &DenseMatrix) -> Vec<Vec<f32>> {
        [0.0, 1.0]
            .iter()
            .map(|&r| {
                let plan = make_split_plan(t, r).unwrap();
                sddmm_hybrid(t, x, y, &plan, PrecisionMode::ExactF32)
                    .unwrap()
                    .into_vec()
            })
            .collect()
    }

    #[test]
    fn orthogonal_rows() {
        let t = transform(2, &[(0, 1)], None);
        let x = DenseMatrix::new(2, 2, vec![1., 0., 0., 0.]).unwrap();
        let y = DenseMatrix::new(2, 2, vec![0., 0., 0., 1.]).unwrap();
        for v in both_paths(&t, &x, &y) {
            assert_eq!(v, vec![0.0]);
        }
    }

    #[test]
    fn unit_vectors() {
        let t = transform(3, &[(2, 0)], None);
        let x = DenseMatrix::new(3, 3, vec![0., 0., 0., 0., 0., 0., 0., 1., 0.]).unwrap();
        let y = DenseMatrix::new(3, 3, vec![0., 1., 0., 0., 0., 0., 0., 0., 0.]).unwrap();
        for v in both_paths(&t, &x, &y) {
            assert_eq!(v, vec![1.0]);
        }
    }

    #[test]
    fn weighted_and_ordered_like_edge_list() {
        let t = transform(3, &[(1, 2), (0, 1), (1, 0)], Some(vec![2.0, 0.5, 1.0]));
        let x = DenseMatrix::new(3, 1, vec![1., 2., 3.]).unwrap();
        let y = x.clone();
        // edge order: (0,1) 0.5, (1,0) 1.0, (1,2) 2.0
        for v in both_paths(&t, &x, &y) {
            assert_eq!(v, vec![0.5 * 2.0, 2.0, 2.0 * 6.0]);
        }
    }

    #[test]
    fn shape_errors() {
        let t = transform(2, &[(0, 1)], None);
        let plan = make_split_plan(&t, 1.0).unwrap();
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 4);
        let c = DenseMatrix::zeros(3, 3);
        assert!(sddmm_hybrid(&t, &a, &b, &plan, PrecisionMode::ExactF32).is_err());
        assert!(sddmm_hybrid(&t, &a, &c, &plan, PrecisionMode::ExactF32).is_err());
    }

    #[test]
    fn quantum_dot_matches_plain() {
        let a: Vec<f32> = (0..32).map(|i| i as f32 * 0.25).collect();
        let b: Vec<f32> = (0..32).map(|i| 1.0 - i as f32 * 0.125).collect();
        assert!((dot_quantum(&a, &b) - dot(&a, &b)).abs() < 1e-3);
    }
}
