use crate::error::{Error, Result};
use crate::sgt::TransformedGraph;

/// Per-window split of tiles between the dense-tile path and the scalar
/// path: tiles with index below the cut run as dense tile products, the
/// rest edge by edge.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridSplitPlan {
    ratio: f64,
    per_window_tile_cut: Vec<u32>,
}

impl HybridSplitPlan {
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn per_window_tile_cut(&self) -> &[u32] {
        &self.per_window_tile_cut
    }

    #[inline]
    pub fn cut(&self, window: usize) -> usize {
        self.per_window_tile_cut[window] as usize
    }

    pub(crate) fn check(&self, t: &TransformedGraph) -> Result<()> {
        if self.per_window_tile_cut.len() != t.num_windows() {
            return Err(Error::shape(format!(
                "plan covers {} windows, graph has {}",
                self.per_window_tile_cut.len(),
                t.num_windows()
            )));
        }
        for (&cut, &bp) in self.per_window_tile_cut.iter().zip(t.block_partition()) {
            if cut > bp {
                return Err(Error::Index {
                    what: "tile cut",
                    index: cut as usize,
                    limit: bp as usize,
                });
            }
        }
        Ok(())
    }
}

/// `cut[w] = floor(ratio * block_partition[w])`.
pub fn make_split_plan(t: &TransformedGraph, ratio: f64) -> Result<HybridSplitPlan> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Range {
            what: "split ratio",
            value: ratio,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let per_window_tile_cut = t
        .block_partition()
        .iter()
        .map(|&bp| (ratio * bp as f64).floor() as u32)
        .collect();
    Ok(HybridSplitPlan {
        ratio,
        per_window_tile_cut,
    })
}
