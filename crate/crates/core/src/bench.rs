//! Timing harness: runs a kernel on the dense-tile path, the scalar path and
//! a configured hybrid split, reports wall-clock medians with block
//! accounting, and optionally compares each path against the oracle.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::dense::{max_rel_err, worst_index, DenseMatrix};
use crate::error::{Error, Result};
use crate::exec::{make_split_plan, sddmm_hybrid, spmm_hybrid, PrecisionMode};
use crate::graph::{
    gcn_normalize_values, load_edge_list, normalize_graph, EdgeListFormat, NormalizeOptions,
};
use crate::models::{
    agnn_forward, gcn_forward, random_gcn_layers, AgnnLayerParams, GcnLayerParams,
};
use crate::oracle;
use crate::sgt::{
    block_stats, read_sgt_file, reblock, sgt_transform, TileGeometry, TransformedGraph, SDDMM_BLK_W,
};
use crate::synth::{make_synthetic, SyntheticSpec};
use crate::with_threads;

/// CSV header of [`BenchReport::to_csv`].
pub const CSV_HEADER: &str =
    "dataset,kernel,path,median_ms,blocks,capacity,nnz,density,max_rel_err";

/// Oracle agreement required in exact single precision.
pub const ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Spmm,
    Sddmm,
    Gcn,
    Agnn,
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "spmm" => Ok(Kernel::Spmm),
            "sddmm" => Ok(Kernel::Sddmm),
            "gcn" => Ok(Kernel::Gcn),
            "agnn" => Ok(Kernel::Agnn),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Spmm => "spmm",
            Kernel::Sddmm => "sddmm",
            Kernel::Gcn => "gcn",
            Kernel::Agnn => "agnn",
        })
    }
}

/// Where a benchmark graph comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// A `.sgt` transform, a `.mtx` file, or a TSV edge list.
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

impl DatasetSource {
    /// Synthetic spec strings (`random:..`, `blockdense:..`) take priority
    /// over paths.
    pub fn parse(s: &str, seed: u64) -> Self {
        match s.parse::<SyntheticSpec>() {
            Ok(spec) => DatasetSource::Synthetic(spec.with_seed(seed)),
            Err(_) => DatasetSource::File(PathBuf::from(s)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DatasetSource::File(p) => p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("graph")
                .to_string(),
            DatasetSource::Synthetic(s) => s.to_string(),
        }
    }
}

fn is_sgt(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("sgt")
}

/// Loads a dataset and transforms it for `kernel`.
///
/// Edge-list inputs are normalized with `norm`; GCN and AGNN always use
/// full normalization (symmetrize, self-loops, dedupe) and GCN additionally
/// gets degree-normalized values. SGT files keep their stored geometry and
/// are re-normalized only when normalization is requested.
pub fn prepare_graph(
    source: &DatasetSource,
    kernel: Kernel,
    geometry: TileGeometry,
    norm: NormalizeOptions,
) -> Result<TransformedGraph> {
    let norm = match kernel {
        Kernel::Gcn | Kernel::Agnn => NormalizeOptions::all(),
        _ => norm,
    };
    let t = match source {
        DatasetSource::File(path) if is_sgt(path) => {
            let t = read_sgt_file(path)?;
            if norm == NormalizeOptions::default() {
                t
            } else {
                sgt_transform(&normalize_graph(t.csr(), norm)?, t.geometry())?
            }
        }
        DatasetSource::File(path) => {
            let g = load_edge_list(path, EdgeListFormat::from_path(path))?;
            sgt_transform(&normalize_graph(&g, norm)?, geometry)?
        }
        DatasetSource::Synthetic(spec) => {
            let g = make_synthetic(*spec)?;
            sgt_transform(&normalize_graph(&g, norm)?, geometry)?
        }
    };
    if kernel == Kernel::Gcn {
        let values = gcn_normalize_values(t.csr())?.values_or_ones();
        return t.with_values(values);
    }
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dataset: DatasetSource,
    pub kernel: Kernel,
    pub geometry: TileGeometry,
    pub normalize: NormalizeOptions,
    pub split_ratio: f64,
    pub precision: PrecisionMode,
    pub dims: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
    pub check_oracle: bool,
    /// Per-run wall-clock cap in milliseconds.
    pub timeout_ms: Option<u64>,
    /// GCN layer widths after the input width (`[16, 16]` = 2 layers).
    pub gcn_hidden: Vec<usize>,
    /// Explicit GCN weights; seeded-random layers from `gcn_hidden` otherwise.
    pub gcn_weights: Option<Vec<GcnLayerParams>>,
    pub agnn_layers: usize,
    pub agnn_beta: f32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            dataset: DatasetSource::Synthetic(SyntheticSpec::BlockDense {
                windows: 256,
                tiles_per_window: 32,
                seed: 0,
            }),
            kernel: Kernel::Spmm,
            geometry: TileGeometry::default(),
            normalize: NormalizeOptions::default(),
            split_ratio: 1.0,
            precision: PrecisionMode::ExactF32,
            dims: 16,
            repeats: 5,
            seed: 0,
            threads: 0,
            check_oracle: false,
            timeout_ms: None,
            gcn_hidden: vec![16, 16],
            gcn_weights: None,
            agnn_layers: 4,
            agnn_beta: 1.0,
        }
    }
}

impl BenchConfig {
    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Range {
                what: "repeats",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if self.dims == 0 {
            return Err(Error::Range {
                what: "dims",
                value: 0.0,
                lo: 1.0,
                hi: f64::INFINITY,
            });
        }
        if !(0.0..=1.0).contains(&self.split_ratio) {
            return Err(Error::Range {
                what: "split ratio",
                value: self.split_ratio,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Tile,
    Scalar,
    Hybrid(f64),
}

impl PathKind {
    pub fn from_ratio(r: f64) -> Self {
        if r == 1.0 {
            PathKind::Tile
        } else if r == 0.0 {
            PathKind::Scalar
        } else {
            PathKind::Hybrid(r)
        }
    }

    pub fn ratio(&self) -> f64 {
        match *self {
            PathKind::Tile => 1.0,
            PathKind::Scalar => 0.0,
            PathKind::Hybrid(r) => r,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PathKind::Tile => "tile".into(),
            PathKind::Scalar => "scalar".into(),
            PathKind::Hybrid(r) => format!("hybrid-{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub kernel: Kernel,
    pub path: String,
    pub median_ms: f64,
    pub blocks: usize,
    pub capacity: usize,
    pub nnz: usize,
    pub density: f64,
    pub max_rel_err: Option<f64>,
    /// Flat output index where the oracle disagreed most.
    #[serde(skip)]
    pub worst: Option<Worst>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub index: usize,
    pub got: f32,
    pub want: f32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let err = r.max_rel_err.map(|e| format!("{e:e}")).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{:.4},{},{},{},{:.6},{}\n",
                r.dataset,
                r.kernel,
                r.path,
                r.median_ms,
                r.blocks,
                r.capacity,
                r.nnz,
                r.density,
                err
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, kernel: Kernel, path: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.kernel == kernel && r.path == path)
    }

    /// Rows whose oracle error exceeds `tolerance`.
    pub fn failures(&self, tolerance: f64) -> impl Iterator<Item = &BenchRow> {
        self.rows
            .iter()
            .filter(move |r| r.max_rel_err.is_some_and(|e| e.is_nan() || e > tolerance))
    }
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Times the tile path, the scalar path and the configured split.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_bench_paths(
        cfg,
        &[
            PathKind::Tile,
            PathKind::Scalar,
            PathKind::Hybrid(cfg.split_ratio),
        ],
    )
}

pub fn run_bench_paths(cfg: &BenchConfig, paths: &[PathKind]) -> Result<BenchReport> {
    cfg.validate()?;
    with_threads(cfg.threads, || {
        let t = prepare_graph(&cfg.dataset, cfg.kernel, cfg.geometry, cfg.normalize)?;
        let runner = KernelRunner::new(cfg, t)?;
        let label = cfg.dataset.label();
        let stats = block_stats(runner.timed_graph());
        let reference = if cfg.check_oracle {
            Some(runner.oracle()?)
        } else {
            None
        };

        let mut rows = Vec::with_capacity(paths.len());
        for path in paths {
            let ratio = path.ratio();
            // untimed warm-up, also the output checked against the oracle
            let out = runner.run(ratio)?;
            let mut times = Vec::with_capacity(cfg.repeats);
            for _ in 0..cfg.repeats {
                let start = Instant::now();
                let _ = runner.run(ratio)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                if let Some(cap) = cfg.timeout_ms {
                    if ms > cap as f64 {
                        return Err(Error::Timeout {
                            cap_ms: cap,
                            elapsed_ms: ms,
                        });
                    }
                }
                times.push(ms);
            }
            let (max_rel_err, worst) = match &reference {
                Some(want) => {
                    let worst = worst_index(&out, want).map(|i| Worst {
                        index: i,
                        got: out[i],
                        want: want[i],
                    });
                    (Some(max_rel_err(&out, want)), worst)
                }
                None => (None, None),
            };
            rows.push(BenchRow {
                dataset: label.clone(),
                kernel: cfg.kernel,
                path: path.label(),
                median_ms: median(&mut times),
                blocks: stats.block_counter,
                capacity: stats.capacity,
                nnz: stats.nnz,
                density: stats.mean_tile_density,
                max_rel_err,
                worst,
            });
        }
        Ok(BenchReport { rows })
    })
}

/// Prepared inputs for one kernel, reusable across timed runs.
pub struct KernelRunner {
    kernel: Kernel,
    precision: PrecisionMode,
    t: TransformedGraph,
    /// 16-wide reblock used by SDDMM.
    t_edge: Option<TransformedGraph>,
    x: DenseMatrix,
    y: DenseMatrix,
    gcn_layers: Vec<GcnLayerParams>,
    agnn_layers: Vec<AgnnLayerParams>,
}

impl KernelRunner {
    pub fn new(cfg: &BenchConfig, t: TransformedGraph) -> Result<Self> {
        let n = t.num_nodes();
        let x = DenseMatrix::random_uniform(n, cfg.dims, -1.0, 1.0, cfg.seed);
        let y = DenseMatrix::random_uniform(n, cfg.dims, -1.0, 1.0, cfg.seed.wrapping_add(1));
        let t_edge = match cfg.kernel {
            Kernel::Sddmm => Some(reblock(&t, SDDMM_BLK_W)?),
            _ => None,
        };
        let gcn_layers = match &cfg.gcn_weights {
            Some(layers) => layers.clone(),
            None => {
                let mut dims = vec![cfg.dims];
                dims.extend(&cfg.gcn_hidden);
                random_gcn_layers(&dims, cfg.seed.wrapping_add(2))
            }
        };
        Ok(KernelRunner {
            kernel: cfg.kernel,
            precision: cfg.precision,
            t,
            t_edge,
            x,
            y,
            gcn_layers,
            agnn_layers: vec![
                AgnnLayerParams {
                    beta: cfg.agnn_beta
                };
                cfg.agnn_layers
            ],
        })
    }

    /// The transform whose tiles the kernel actually runs on.
    pub fn timed_graph(&self) -> &TransformedGraph {
        self.t_edge.as_ref().unwrap_or(&self.t)
    }

    pub fn run(&self, ratio: f64) -> Result<Vec<f32>> {
        let prec = self.precision;
        match self.kernel {
            Kernel::Spmm => {
                let plan = make_split_plan(&self.t, ratio)?;
                Ok(spmm_hybrid(&self.t, &self.x, &plan, prec)?.into_data())
            }
            Kernel::Sddmm => {
                let t = self.timed_graph();
                let plan = make_split_plan(t, ratio)?;
                Ok(sddmm_hybrid(t, &self.x, &self.y, &plan, prec)?.into_vec())
            }
            Kernel::Gcn => {
                let plan = make_split_plan(&self.t, ratio)?;
                Ok(gcn_forward(&self.t, &self.x, &self.gcn_layers, &plan, prec)?.into_data())
            }
            Kernel::Agnn => {
                Ok(agnn_forward(&self.t, &self.x, &self.agnn_layers, ratio, prec)?.into_data())
            }
        }
    }

    pub fn oracle(&self) -> Result<Vec<f32>> {
        let g = self.t.csr();
        match self.kernel {
            Kernel::Spmm => Ok(oracle::oracle_spmm(g, &self.x)?.into_data()),
            Kernel::Sddmm => Ok(oracle::oracle_sddmm(g, &self.x, &self.y)?.into_vec()),
            Kernel::Gcn => Ok(oracle::oracle_gcn(g, &self.x, &self.gcn_layers)?.into_data()),
            Kernel::Agnn => {
                let betas: Vec<f32> = self.agnn_layers.iter().map(|l| l.beta).collect();
                Ok(oracle::oracle_agnn(g, &self.x, &betas)?.into_data())
            }
        }
    }
}
