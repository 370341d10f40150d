use rayon::prelude::*;

use super::{padded_width, padded_with_sentinel, HybridSplitPlan, PrecisionMode, FEATURE_QUANTUM};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sgt::TransformedGraph;

/// Neighbor aggregation `A * x` using the graph's own edge values (1.0 when
/// the graph is unweighted).
pub fn spmm_hybrid(
    t: &TransformedGraph,
    x: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<DenseMatrix> {
    spmm_impl(t, t.csr().values(), x, plan, prec)
}

/// Neighbor aggregation with per-edge values supplied by the caller, e.g.
/// attention coefficients produced by an edge kernel.
pub fn spmm_hybrid_with_values(
    t: &TransformedGraph,
    values: &[f32],
    x: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<DenseMatrix> {
    if values.len() != t.num_edges() {
        return Err(Error::shape(format!(
            "{} edge values for {} edges",
            values.len(),
            t.num_edges()
        )));
    }
    spmm_impl(t, Some(values), x, plan, prec)
}

fn spmm_impl(
    t: &TransformedGraph,
    values: Option<&[f32]>,
    x: &DenseMatrix,
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<DenseMatrix> {
    let n = t.num_nodes();
    if x.rows() != n {
        return Err(Error::shape(format!(
            "feature matrix has {} rows, graph has {n} nodes",
            x.rows()
        )));
    }
    plan.check(t)?;
    let d = x.cols();
    if n == 0 || d == 0 {
        return Ok(DenseMatrix::zeros(n, d));
    }

    let any_tiles = plan.per_window_tile_cut().iter().any(|&c| c > 0);
    let x_tiles = if any_tiles {
        padded_with_sentinel(x, prec)
    } else {
        Vec::new()
    };
    let kernel = WindowSpmm {
        t,
        values,
        x,
        x_tiles: &x_tiles,
        dp: padded_width(d),
        prec,
    };

    let h = t.geometry().blk_h;
    let mut out = vec![0.0f32; n * d];
    out.par_chunks_mut(h * d)
        .enumerate()
        .for_each(|(w, chunk)| kernel.run(w, plan.cut(w), chunk));
    DenseMatrix::from_output(n, d, out)
}

const ROW_BLOCK: usize = 4;

/// Output rows `r0..r0 + R` of one window's tile product. Each 16-lane slice
/// of an `x` row is loaded once per `R` rows; every output element still
/// accumulates over `k` in ascending order.
#[inline]
fn row_block<const R: usize>(
    a: &[f32],
    nr: usize,
    r0: usize,
    x_rows: &[&[f32]],
    out: &mut [f32],
    dp: usize,
) {
    for jc in (0..dp).step_by(FEATURE_QUANTUM) {
        let mut acc = [[0.0f32; FEATURE_QUANTUM]; R];
        for (k, xr) in x_rows.iter().enumerate() {
            let mut av = [0.0f32; R];
            av.copy_from_slice(&a[k * nr + r0..k * nr + r0 + R]);
            let mut xv = [0.0f32; FEATURE_QUANTUM];
            xv.copy_from_slice(&xr[jc..jc + FEATURE_QUANTUM]);
            for i in 0..R {
                for l in 0..FEATURE_QUANTUM {
                    acc[i][l] += av[i] * xv[l];
                }
            }
        }
        for (i, row) in acc.iter().enumerate() {
            let o = (r0 + i) * dp + jc;
            out[o..o + FEATURE_QUANTUM].copy_from_slice(row);
        }
    }
}

struct WindowSpmm<'a> {
    t: &'a TransformedGraph,
    values: Option<&'a [f32]>,
    x: &'a DenseMatrix,
    /// Padded, precision-rounded features plus one zero sentinel row.
    x_tiles: &'a [f32],
    dp: usize,
    prec: PrecisionMode,
}

impl WindowSpmm<'_> {
    #[inline]
    fn value(&self, e: usize) -> f32 {
        self.values.map_or(1.0, |v| v[e])
    }

    fn run(&self, w: usize, cut: usize, out: &mut [f32]) {
        let t = self.t;
        let d = self.x.cols();
        let rows = t.window_rows(w);
        let nr = rows.len();
        let tiles = t.block_partition()[w] as usize;

        let tile_out = (cut > 0).then(|| self.tile_path(w, cut, nr));
        let scalar_out = (cut < tiles).then(|| self.scalar_path(w, cut, nr));

        for r in 0..nr {
            let o = &mut out[r * d..(r + 1) * d];
            match (&tile_out, &scalar_out) {
                (Some(tp), Some(sp)) => {
                    for ((o, a), b) in o.iter_mut().zip(&tp[r * self.dp..]).zip(&sp[r * d..]) {
                        *o = a + b;
                    }
                }
                (Some(tp), None) => o.copy_from_slice(&tp[r * self.dp..r * self.dp + d]),
                (None, Some(sp)) => o.copy_from_slice(&sp[r * d..(r + 1) * d]),
                (None, None) => {}
            }
        }
    }

    /// Dense products of the window's first `cut` tiles, accumulated in
    /// ascending tile order. Returns an `nr x dp` block.
    fn tile_path(&self, w: usize, cut: usize, nr: usize) -> Vec<f32> {
        let t = self.t;
        let bw = t.geometry().blk_w;
        let width = cut * bw;
        let first_row = t.window_rows(w).start;

        // window slice of A restricted to the tile-path tiles, k-major width x nr
        let mut a = vec![0.0f32; width * nr];
        let e2c = t.edge_to_column();
        let e2r = t.edge_to_row();
        for e in t.window_edges(w) {
            let cc = e2c[e] as usize;
            if cc < width {
                a[cc * nr + (e2r[e] as usize - first_row)] += self.value(e);
            }
        }
        if self.prec != PrecisionMode::ExactF32 {
            for v in &mut a {
                *v = self.prec.apply(*v);
            }
        }

        let dp = self.dp;
        let sentinel = t.num_nodes();
        let cols = t.unique_cols(w);
        let x_rows: Vec<&[f32]> = (0..width)
            .map(|k| {
                let c = cols.get(k).map_or(sentinel, |&c| c as usize);
                &self.x_tiles[c * dp..(c + 1) * dp]
            })
            .collect();

        let mut out = vec![0.0f32; nr * dp];
        let mut r0 = 0;
        while r0 < nr {
            match nr - r0 {
                1 => row_block::<1>(&a, nr, r0, &x_rows, &mut out, dp),
                2 => row_block::<2>(&a, nr, r0, &x_rows, &mut out, dp),
                3 => row_block::<3>(&a, nr, r0, &x_rows, &mut out, dp),
                _ => row_block::<ROW_BLOCK>(&a, nr, r0, &x_rows, &mut out, dp),
            }
            r0 += ROW_BLOCK.min(nr - r0);
        }
        out
    }

    /// Edge-by-edge accumulation for tiles at or past the cut. Returns an
    /// `nr x d` block.
    fn scalar_path(&self, w: usize, cut: usize, nr: usize) -> Vec<f32> {
        let t = self.t;
        let d = self.x.cols();
        let bw = t.geometry().blk_w;
        let first_row = t.window_rows(w).start;
        let unique = t.unique_cols(w);
        let e2c = t.edge_to_column();
        let e2r = t.edge_to_row();

        let mut out = vec![0.0f32; nr * d];
        for e in t.window_edges(w) {
            let cc = e2c[e] as usize;
            if cc / bw < cut {
                continue;
            }
            let r = e2r[e] as usize - first_row;
            let v = self.value(e);
            let xr = self.x.row(unique[cc] as usize);
            for (o, &xv) in out[r * d..(r + 1) * d].iter_mut().zip(xr) {
                *o += v * xv;
            }
        }
        out
    }
}
