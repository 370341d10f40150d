//! Seeded synthetic graphs for tests and benchmarks.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::CsrGraph;
use crate::sgt::{DEFAULT_BLK_H, DEFAULT_BLK_W};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticSpec {
    /// Every ordered pair `(i, j)` present independently with probability `p`.
    Random { n: usize, p: f64, seed: u64 },
    /// `windows` row windows of 16 rows, each connected to exactly
    /// `tiles_per_window * 8` columns, so every 16x8 tile is fully dense.
    BlockDense {
        windows: usize,
        tiles_per_window: usize,
        seed: u64,
    },
}

impl SyntheticSpec {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SyntheticSpec::Random { n, p, .. } => SyntheticSpec::Random { n, p, seed },
            SyntheticSpec::BlockDense {
                windows,
                tiles_per_window,
                ..
            } => SyntheticSpec::BlockDense {
                windows,
                tiles_per_window,
                seed,
            },
        }
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticSpec::Random { n, p, .. } => write!(f, "random:{n}:{p}"),
            SyntheticSpec::BlockDense {
                windows,
                tiles_per_window,
                ..
            } => write!(f, "blockdense:{windows}:{tiles_per_window}"),
        }
    }
}

/// Parses `random:<n>:<p>` or `blockdense:<windows>:<tiles>`; the seed is 0
/// until set with [`SyntheticSpec::with_seed`].
impl FromStr for SyntheticSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || {
            format!(
                "bad synthetic spec {s:?}; expected random:<n>:<p> or blockdense:<windows>:<tiles>"
            )
        };
        match parts.as_slice() {
            ["random", n, p] => Ok(SyntheticSpec::Random {
                n: n.parse().map_err(|_| bad())?,
                p: p.parse().map_err(|_| bad())?,
                seed: 0,
            }),
            ["blockdense", w, t] => Ok(SyntheticSpec::BlockDense {
                windows: w.parse().map_err(|_| bad())?,
                tiles_per_window: t.parse().map_err(|_| bad())?,
                seed: 0,
            }),
            _ => Err(bad()),
        }
    }
}

pub fn make_synthetic(spec: SyntheticSpec) -> Result<CsrGraph> {
    match spec {
        SyntheticSpec::Random { n, p, seed } => random_graph(n, p, seed),
        SyntheticSpec::BlockDense {
            windows,
            tiles_per_window,
            seed,
        } => block_dense(windows, tiles_per_window, seed),
    }
}

fn random_graph(n: usize, p: f64, seed: u64) -> Result<CsrGraph> {
    if n == 0 {
        return Err(Error::Range {
            what: "node count",
            value: 0.0,
            lo: 1.0,
            hi: u32::MAX as f64,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range {
            what: "edge probability",
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let total = (n as u64) * (n as u64);
    let mut edges = Vec::new();
    if p == 1.0 {
        edges.reserve(total as usize);
        for i in 0..n as u32 {
            edges.extend((0..n as u32).map(|j| (i, j)));
        }
    } else if p > 0.0 {
        // geometric skipping over the n*n ordered pairs
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let log_q = (1.0 - p).ln();
        let mut pos: u64 = 0;
        loop {
            let u: f64 = rng.random::<f64>();
            let skip = ((1.0 - u).ln() / log_q).floor();
            if !skip.is_finite() || skip >= (total - pos) as f64 {
                break;
            }
            pos += skip as u64;
            edges.push(((pos / n as u64) as u32, (pos % n as u64) as u32));
            pos += 1;
            if pos >= total {
                break;
            }
        }
    }
    CsrGraph::from_edges(n, &edges, None)
}

fn block_dense(windows: usize, tiles_per_window: usize, seed: u64) -> Result<CsrGraph> {
    let n = windows * DEFAULT_BLK_H;
    let width = tiles_per_window * DEFAULT_BLK_W;
    if windows == 0 {
        return Err(Error::Range {
            what: "window count",
            value: 0.0,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if width > n {
        return Err(Error::Range {
            what: "tiles per window",
            value: tiles_per_window as f64,
            lo: 0.0,
            hi: (n / DEFAULT_BLK_W) as f64,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * width);
    for w in 0..windows {
        let mut cols: Vec<u32> = sample(&mut rng, n, width)
            .into_iter()
            .map(|c| c as u32)
            .collect();
        cols.sort_unstable();
        for r in w * DEFAULT_BLK_H..(w + 1) * DEFAULT_BLK_H {
            edges.extend(cols.iter().map(|&c| (r as u32, c)));
        }
    }
    CsrGraph::from_edges(n, &edges, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgt::{block_stats, sgt_transform, TileGeometry};

    #[test]
    fn block_dense_is_fully_dense() {
        let g = make_synthetic(SyntheticSpec::BlockDense {
            windows: 4,
            tiles_per_window: 2,
            seed: 1,
        })
        .unwrap();
        assert_eq!(g.num_edges(), 1024);
        let s = block_stats(&sgt_transform(&g, TileGeometry::default()).unwrap());
        assert_eq!(s.nnz, 1024);
        assert_eq!(s.capacity, 1024);
        assert_eq!(s.mean_tile_density, 1.0);
    }

    #[test]
    fn random_extremes() {
        let g = make_synthetic(SyntheticSpec::Random {
            n: 100,
            p: 0.0,
            seed: 3,
        })
        .unwrap();
        assert_eq!(g.num_edges(), 0);
        let g = make_synthetic(SyntheticSpec::Random {
            n: 100,
            p: 1.0,
            seed: 3,
        })
        .unwrap();
        assert_eq!(g.num_edges(), 10000);
        assert!(g.is_canonical());
    }

    #[test]
    fn random_density_and_determinism() {
        let spec = SyntheticSpec::Random {
            n: 400,
            p: 0.05,
            seed: 42,
        };
        let a = make_synthetic(spec).unwrap();
        let b = make_synthetic(spec).unwrap();
        assert_eq!(a, b);
        assert!(a.is_canonical());
        let expected = 400.0 * 400.0 * 0.05;
        assert!((a.num_edges() as f64 - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn range_errors() {
        assert!(make_synthetic(SyntheticSpec::Random {
            n: 0,
            p: 0.5,
            seed: 0
        })
        .is_err());
        assert!(make_synthetic(SyntheticSpec::Random {
            n: 5,
            p: 1.5,
            seed: 0
        })
        .is_err());
        assert!(make_synthetic(SyntheticSpec::BlockDense {
            windows: 1,
            tiles_per_window: 3,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!(
            "random:10:0.5".parse::<SyntheticSpec>().unwrap(),
            SyntheticSpec::Random {
                n: 10,
                p: 0.5,
                seed: 0
            }
        );
        let s: SyntheticSpec = "blockdense:4:2".parse().unwrap();
        assert_eq!(s.to_string(), "blockdense:4:2");
        assert!("cube:3".parse::<SyntheticSpec>().is_err());
    }
}
