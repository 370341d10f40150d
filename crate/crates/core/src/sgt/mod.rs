//! Sparse graph transformation.
//!
//! Rows are grouped into windows of `blk_h` consecutive rows. Inside each
//! window the neighbor columns are sorted and deduplicated; the resulting
//! "compressed" column space is cut into tiles of `blk_w` columns, and every
//! edge is mapped to its compressed coordinate. The dense kernels consume
//! tiles of this compressed space instead of the scattered original columns.

mod persist;

pub use persist::{read_sgt, read_sgt_file, write_sgt, write_sgt_file, SGT_MAGIC};

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;

/// Window height used by the aggregation kernel.
pub const DEFAULT_BLK_H: usize = 16;
/// Tile width used by the aggregation kernel.
pub const DEFAULT_BLK_W: usize = 8;
/// Tile width used by the edge-feature kernel (16 x 16 output tiles).
pub const SDDMM_BLK_W: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGeometry {
    pub blk_h: usize,
    pub blk_w: usize,
}

impl Default for TileGeometry {
    fn default() -> Self {
        TileGeometry {
            blk_h: DEFAULT_BLK_H,
            blk_w: DEFAULT_BLK_W,
        }
    }
}

impl TileGeometry {
    pub fn new(blk_h: usize, blk_w: usize) -> Result<Self> {
        let g = TileGeometry { blk_h, blk_w };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        if self.blk_h == 0 || self.blk_w == 0 {
            return Err(Error::Geometry {
                blk_h: self.blk_h,
                blk_w: self.blk_w,
            });
        }
        Ok(())
    }

    pub fn tile_area(&self) -> usize {
        self.blk_h * self.blk_w
    }
}

/// Output of [`sgt_transform`]. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedGraph {
    csr: CsrGraph,
    geometry: TileGeometry,
    edge_to_row: Vec<u32>,
    /// Window-relative compressed column of each edge. The tile is
    /// `id / blk_w` and the lane inside the tile is `id % blk_w`.
    edge_to_column: Vec<u32>,
    block_partition: Vec<u32>,
    window_offsets: Vec<usize>,
    window_unique_cols: Vec<u32>,
    block_counter: usize,
}

/// Block accounting of a transform.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BlockStats {
    pub block_counter: usize,
    /// `block_counter * blk_h * blk_w`: every slot across all tiles.
    pub capacity: usize,
    pub nnz: usize,
    /// `nnz / capacity`, or 0 for a graph with no tiles.
    pub mean_tile_density: f64,
}

impl TransformedGraph {
    pub fn csr(&self) -> &CsrGraph {
        &self.csr
    }

    pub fn geometry(&self) -> TileGeometry {
        self.geometry
    }

    pub fn num_nodes(&self) -> usize {
        self.csr.num_nodes()
    }

    pub fn num_edges(&self) -> usize {
        self.csr.num_edges()
    }

    pub fn num_windows(&self) -> usize {
        self.block_partition.len()
    }

    pub fn edge_to_row(&self) -> &[u32] {
        &self.edge_to_row
    }

    pub fn edge_to_column(&self) -> &[u32] {
        &self.edge_to_column
    }

    pub fn block_partition(&self) -> &[u32] {
        &self.block_partition
    }

    pub fn block_counter(&self) -> usize {
        self.block_counter
    }

    pub fn window_offsets(&self) -> &[usize] {
        &self.window_offsets
    }

    /// All windows' unique columns, concatenated in window order.
    pub fn all_unique_cols(&self) -> &[u32] {
        &self.window_unique_cols
    }

    pub fn unique_cols(&self, window: usize) -> &[u32] {
        &self.window_unique_cols[self.window_offsets[window]..self.window_offsets[window + 1]]
    }

    /// Original column ids covered by one tile (shorter than `blk_w` for the
    /// ragged last tile of a window).
    pub fn tile_columns(&self, window: usize, tile: usize) -> &[u32] {
        let cols = self.unique_cols(window);
        let bw = self.geometry.blk_w;
        let start = (tile * bw).min(cols.len());
        let end = ((tile + 1) * bw).min(cols.len());
        &cols[start..end]
    }

    pub fn window_rows(&self, window: usize) -> Range<usize> {
        let h = self.geometry.blk_h;
        let n = self.num_nodes();
        (window * h).min(n)..((window + 1) * h).min(n)
    }

    pub fn window_edges(&self, window: usize) -> Range<usize> {
        let rows = self.window_rows(window);
        let np = self.csr.node_pointer();
        np[rows.start]..np[rows.end]
    }

    /// Replaces the carried edge values, keeping the tiling.
    pub fn with_values(&self, values: Vec<f32>) -> Result<TransformedGraph> {
        let mut t = self.clone();
        t.csr = t.csr.with_values(values)?;
        Ok(t)
    }

    /// Checks every structural invariant of the transform.
    pub fn validate(&self) -> Result<()> {
        self.geometry.check()?;
        self.csr.validate()?;
        let bad = |msg: String| Err(Error::Invalid(msg));
        let n = self.num_nodes();
        let e = self.num_edges();
        let windows = n.div_ceil(self.geometry.blk_h);
        if self.block_partition.len() != windows {
            return bad(format!(
                "{} windows, expected {windows}",
                self.block_partition.len()
            ));
        }
        if self.window_offsets.len() != windows + 1
            || self.window_offsets[0] != 0
            || *self.window_offsets.last().unwrap() != self.window_unique_cols.len()
            || self.window_offsets.windows(2).any(|w| w[0] > w[1])
        {
            return bad("window offsets are inconsistent".into());
        }
        if self.edge_to_row.len() != e || self.edge_to_column.len() != e {
            return bad("edge maps do not cover every edge".into());
        }
        let mut total = 0usize;
        for w in 0..windows {
            let cols = self.unique_cols(w);
            if cols.windows(2).any(|p| p[0] >= p[1]) {
                return bad(format!(
                    "window {w} unique columns are not strictly ascending"
                ));
            }
            let bp = cols.len().div_ceil(self.geometry.blk_w);
            if self.block_partition[w] as usize != bp {
                return bad(format!(
                    "window {w} has {} tiles, expected {bp}",
                    self.block_partition[w]
                ));
            }
            total += bp;
            for r in self.window_rows(w) {
                for edge in self.csr.row_range(r) {
                    if self.edge_to_row[edge] as usize != r {
                        return bad(format!("edge {edge} maps to the wrong row"));
                    }
                    let cc = self.edge_to_column[edge] as usize;
                    if cc >= cols.len() || cols[cc] != self.csr.edge_list()[edge] {
                        return bad(format!("edge {edge} maps to the wrong compressed column"));
                    }
                }
            }
        }
        if total != self.block_counter {
            return bad(format!(
                "block_counter {} but tiles sum to {total}",
                self.block_counter
            ));
        }
        Ok(())
    }
}

struct WindowLayout {
    unique_cols: Vec<u32>,
    edge_to_column: Vec<u32>,
}

fn layout_window(g: &CsrGraph, rows: Range<usize>) -> WindowLayout {
    let np = g.node_pointer();
    let edges = &g.edge_list()[np[rows.start]..np[rows.end]];
    let mut unique_cols = edges.to_vec();
    unique_cols.sort_unstable();
    unique_cols.dedup();
    let edge_to_column = edges
        .iter()
        .map(|c| {
            unique_cols
                .binary_search(c)
                .expect("column is in its window") as u32
        })
        .collect();
    WindowLayout {
        unique_cols,
        edge_to_column,
    }
}

/// Runs the sparse graph transformation. Windows are laid out in parallel
/// and merged in window order, so the result does not depend on the number
/// of worker threads.
pub fn sgt_transform(g: &CsrGraph, geom: TileGeometry) -> Result<TransformedGraph> {
    geom.check()?;
    g.validate()?;
    let n = g.num_nodes();
    let windows = n.div_ceil(geom.blk_h);

    let layouts: Vec<WindowLayout> = (0..windows)
        .into_par_iter()
        .map(|w| layout_window(g, (w * geom.blk_h)..((w + 1) * geom.blk_h).min(n)))
        .collect();

    let mut edge_to_row = Vec::with_capacity(g.num_edges());
    for r in 0..n {
        edge_to_row.extend(std::iter::repeat_n(r as u32, g.degree(r)));
    }

    let mut edge_to_column = Vec::with_capacity(g.num_edges());
    let mut window_unique_cols = Vec::new();
    let mut window_offsets = Vec::with_capacity(windows + 1);
    let mut block_partition = Vec::with_capacity(windows);
    window_offsets.push(0);
    for l in layouts {
        block_partition.push(l.unique_cols.len().div_ceil(geom.blk_w) as u32);
        edge_to_column.extend_from_slice(&l.edge_to_column);
        window_unique_cols.extend_from_slice(&l.unique_cols);
        window_offsets.push(window_unique_cols.len());
    }
    let block_counter = block_partition.iter().map(|&b| b as usize).sum();

    Ok(TransformedGraph {
        csr: g.clone(),
        geometry: geom,
        edge_to_row,
        edge_to_column,
        block_partition,
        window_offsets,
        window_unique_cols,
        block_counter,
    })
}

/// Recounts tiles for a new tile width. Edge maps and unique columns are
/// window-relative, so only the tile counts change.
pub fn reblock(t: &TransformedGraph, new_blk_w: usize) -> Result<TransformedGraph> {
    let geometry = TileGeometry::new(t.geometry.blk_h, new_blk_w)?;
    let block_partition: Vec<u32> = t
        .window_offsets
        .windows(2)
        .map(|w| (w[1] - w[0]).div_ceil(new_blk_w) as u32)
        .collect();
    let block_counter = block_partition.iter().map(|&b| b as usize).sum();
    Ok(TransformedGraph {
        geometry,
        block_partition,
        block_counter,
        ..t.clone()
    })
}

pub fn block_stats(t: &TransformedGraph) -> BlockStats {
    let capacity = t.block_counter * t.geometry.tile_area();
    let nnz = t.num_edges();
    BlockStats {
        block_counter: t.block_counter,
        capacity,
        nnz,
        mean_tile_density: if capacity == 0 {
            0.0
        } else {
            nnz as f64 / capacity as f64
        },
    }
}
