//! `sgtk` command-line front end.
//!
//! Exit codes: 0 on success, 1 when an oracle check fails, 2 on usage,
//! input or runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    run_bench_paths, BenchConfig, BenchReport, DatasetSource, Kernel, PathKind, ORACLE_TOLERANCE,
};
use crate::error::Result;
use crate::exec::PrecisionMode;
use crate::graph::{load_edge_list, normalize_graph, EdgeListFormat, NormalizeOptions};
use crate::models::load_gcn_weights;
use crate::sgt::{
    block_stats, sgt_transform, write_sgt_file, TileGeometry, DEFAULT_BLK_H, DEFAULT_BLK_W,
};
use crate::synth::{make_synthetic, SyntheticSpec};
use crate::with_threads;

/// Default oracle tolerance when the tile path emulates TF32.
pub const TF32_TOLERANCE: f64 = 1e-2;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "sgtk",
    version,
    about = "Sparse graph to dense tile transform and hybrid tiled GNN kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transform a graph into tiles and write an SGT1 file.
    Transform(TransformArgs),
    /// Neighbor aggregation: out = A x.
    Spmm(KernelArgs),
    /// Edge features: out_e = a_e * dot(x_r, y_c).
    Sddmm(KernelArgs),
    /// GCN forward pass.
    Gcn(KernelArgs),
    /// AGNN forward pass.
    Agnn(KernelArgs),
    /// Time the tile, scalar and hybrid paths.
    Bench(BenchArgs),
    /// Check every kernel on every path against the oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    /// Rows per window.
    #[arg(long, default_value_t = DEFAULT_BLK_H)]
    blk_h: usize,
    /// Columns per tile.
    #[arg(long, default_value_t = DEFAULT_BLK_W)]
    blk_w: usize,
}

impl GeometryArgs {
    fn geometry(&self) -> Result<TileGeometry> {
        TileGeometry::new(self.blk_h, self.blk_w)
    }
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    /// Mirror every edge.
    #[arg(long)]
    symmetrize: bool,
    /// Add missing self-loops.
    #[arg(long)]
    self_loops: bool,
    /// Merge duplicate edges, summing values.
    #[arg(long)]
    dedupe: bool,
    /// Shorthand for --symmetrize --self-loops --dedupe.
    #[arg(long)]
    normalize: bool,
}

impl NormalizeArgs {
    fn options(&self) -> NormalizeOptions {
        if self.normalize {
            return NormalizeOptions::all();
        }
        NormalizeOptions {
            symmetrize: self.symmetrize,
            add_self_loops: self.self_loops,
            dedupe: self.dedupe,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Fraction of each window's tiles sent down the dense-tile path.
    #[arg(long, default_value_t = 1.0)]
    split: f64,
    /// Tile-path multiply precision: fp32 or tf32.
    #[arg(long, default_value = "fp32")]
    precision: PrecisionMode,
    /// Feature width.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "SGTK_THREADS", default_value_t = 0)]
    threads: usize,
    /// Timed runs after one warm-up.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    emit: Emit,
    /// Compare against the oracle and exit 1 on disagreement.
    #[arg(long)]
    check_oracle: bool,
    /// Oracle tolerance (default 1e-4, or 1e-2 with tf32).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Per-run time cap in milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// GCN hidden width.
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    /// Layer count for GCN (default 2) or AGNN (default 4).
    #[arg(long)]
    layers: Option<usize>,
    /// AGNN attention temperature.
    #[arg(long, default_value_t = 1.0)]
    beta: f32,
    /// GCN weight sidecar JSON; seeded-random weights otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
    #[command(flatten)]
    normalize: NormalizeArgs,
}

impl RunArgs {
    fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.precision {
            PrecisionMode::ExactF32 => ORACLE_TOLERANCE,
            PrecisionMode::EmulatedTf32 => TF32_TOLERANCE,
        })
    }

    fn config(&self, dataset: DatasetSource, kernel: Kernel) -> Result<BenchConfig> {
        let gcn_layers = self.layers.unwrap_or(2);
        let gcn_weights = match &self.weights {
            Some(path) => Some(load_gcn_weights(path)?),
            None => None,
        };
        Ok(BenchConfig {
            dataset,
            kernel,
            geometry: self.geometry.geometry()?,
            normalize: self.normalize.options(),
            split_ratio: self.split,
            precision: self.precision,
            dims: self.dim,
            repeats: self.repeats,
            seed: self.seed,
            threads: self.threads,
            check_oracle: self.check_oracle,
            timeout_ms: self.timeout_ms,
            gcn_hidden: vec![self.hidden; gcn_layers],
            gcn_weights,
            agnn_layers: self.layers.unwrap_or(4),
            agnn_beta: self.beta,
        })
    }
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// Edge list (.mtx or TSV) or synthetic spec.
    #[arg(long)]
    input: String,
    /// SGT1 output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print block statistics.
    #[arg(long)]
    stats: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "SGTK_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    emit: Emit,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    normalize: NormalizeArgs,
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// SGT1 file, edge list (.mtx or TSV) or synthetic spec
    /// (random:<n>:<p>, blockdense:<windows>:<tiles>).
    #[arg(long)]
    graph: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Built-in dataset suite.
    #[arg(
        long,
        value_enum,
        conflicts_with = "graph",
        required_unless_present = "graph"
    )]
    suite: Option<Suite>,
    /// Graph to benchmark instead of a suite.
    #[arg(long)]
    graph: Option<String>,
    /// Kernels to run (comma separated); all four by default.
    #[arg(long, value_delimiter = ',')]
    kernel: Vec<Kernel>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    graph: String,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// 256 windows x 32 fully dense 16x8 tiles: 2^20 non-zeros.
    SyntheticBlockdense,
    /// 4096 nodes, 0.2% density.
    SyntheticRandom,
}

impl Suite {
    fn spec(self) -> SyntheticSpec {
        match self {
            Suite::SyntheticBlockdense => SyntheticSpec::BlockDense {
                windows: 256,
                tiles_per_window: 32,
                seed: 0,
            },
            Suite::SyntheticRandom => SyntheticSpec::Random {
                n: 4096,
                p: 0.002,
                seed: 0,
            },
        }
    }
}

const ALL_KERNELS: [Kernel; 4] = [Kernel::Spmm, Kernel::Sddmm, Kernel::Gcn, Kernel::Agnn];

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Transform(a) => transform(a),
        Command::Spmm(a) => kernel(a, Kernel::Spmm),
        Command::Sddmm(a) => kernel(a, Kernel::Sddmm),
        Command::Gcn(a) => kernel(a, Kernel::Gcn),
        Command::Agnn(a) => kernel(a, Kernel::Agnn),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
    }
}

#[derive(Serialize)]
struct TransformSummary {
    num_nodes: usize,
    num_edges: usize,
    num_windows: usize,
    blk_h: usize,
    blk_w: usize,
    block_counter: usize,
    capacity: usize,
    nnz: usize,
    density: f64,
}

fn transform(a: TransformArgs) -> Result<i32> {
    let geometry = a.geometry.geometry()?;
    let t = with_threads(a.threads, || -> Result<_> {
        let g = match a.input.parse::<SyntheticSpec>() {
            Ok(spec) => make_synthetic(spec.with_seed(a.seed))?,
            Err(_) => load_edge_list(&a.input, EdgeListFormat::from_path(a.input.as_ref()))?,
        };
        let g = normalize_graph(&g, a.normalize.options())?;
        sgt_transform(&g, geometry)
    })?;
    if let Some(out) = &a.out {
        write_sgt_file(&t, out)?;
        log::info!("wrote {}", out.display());
    }
    if a.stats {
        let s = block_stats(&t);
        let summary = TransformSummary {
            num_nodes: t.num_nodes(),
            num_edges: t.num_edges(),
            num_windows: t.num_windows(),
            blk_h: geometry.blk_h,
            blk_w: geometry.blk_w,
            block_counter: s.block_counter,
            capacity: s.capacity,
            nnz: s.nnz,
            density: s.mean_tile_density,
        };
        let text = match a.emit {
            Emit::Json => serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
            Emit::Csv => format!(
                "num_nodes,num_edges,num_windows,blk_h,blk_w,block_counter,capacity,nnz,density\n{},{},{},{},{},{},{},{},{:.6}\n",
                summary.num_nodes,
                summary.num_edges,
                summary.num_windows,
                summary.blk_h,
                summary.blk_w,
                summary.block_counter,
                summary.capacity,
                summary.nnz,
                summary.density
            ),
        };
        print_out(&text);
    }
    Ok(EXIT_OK)
}

fn kernel(a: KernelArgs, kernel: Kernel) -> Result<i32> {
    let dataset = DatasetSource::parse(&a.graph, a.run.seed);
    let cfg = a.run.config(dataset, kernel)?;
    let report = run_bench_paths(&cfg, &[PathKind::from_ratio(a.run.split)])?;
    Ok(finish(&report, &a.run))
}

fn bench(a: BenchArgs) -> Result<i32> {
    let dataset = match (&a.suite, &a.graph) {
        (Some(suite), _) => DatasetSource::Synthetic(suite.spec().with_seed(a.run.seed)),
        (None, Some(g)) => DatasetSource::parse(g, a.run.seed),
        (None, None) => unreachable!("clap requires --suite or --graph"),
    };
    let kernels = if a.kernel.is_empty() {
        ALL_KERNELS.to_vec()
    } else {
        a.kernel.clone()
    };
    let mut report = BenchReport::default();
    for k in kernels {
        let cfg = a.run.config(dataset.clone(), k)?;
        let paths = paths_for(a.run.split);
        report.rows.extend(run_bench_paths(&cfg, &paths)?.rows);
    }
    Ok(finish(&report, &a.run))
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let dataset = DatasetSource::parse(&a.graph, a.run.seed);
    let mut report = BenchReport::default();
    for k in ALL_KERNELS {
        let mut cfg = a.run.config(dataset.clone(), k)?;
        cfg.check_oracle = true;
        cfg.repeats = 1;
        report
            .rows
            .extend(run_bench_paths(&cfg, &paths_for(a.run.split))?.rows);
    }
    let mut run = a.run;
    run.check_oracle = true;
    Ok(finish(&report, &run))
}

/// Tile and scalar paths, plus the configured split when it is neither.
fn paths_for(split: f64) -> Vec<PathKind> {
    let mut paths = vec![PathKind::Tile, PathKind::Scalar];
    if let p @ PathKind::Hybrid(_) = PathKind::from_ratio(split) {
        paths.push(p);
    }
    paths
}

fn finish(report: &BenchReport, run: &RunArgs) -> i32 {
    let text = match run.emit {
        Emit::Csv => report.to_csv(),
        Emit::Json => report.to_json() + "\n",
    };
    print_out(&text);
    if !run.check_oracle {
        return EXIT_OK;
    }
    let tol = run.tolerance();
    let mut failed = false;
    for row in report.failures(tol) {
        failed = true;
        let err = row.max_rel_err.unwrap_or(f64::NAN);
        match row.worst {
            Some(w) => eprintln!(
                "verification failed: {} {} on {}: max_rel_err {err:e} > {tol:e}; worst index {}: got {}, want {}",
                row.kernel, row.path, row.dataset, w.index, w.got, w.want
            ),
            None => eprintln!(
                "verification failed: {} {} on {}: max_rel_err {err:e} > {tol:e}",
                row.kernel, row.path, row.dataset
            ),
        }
    }
    if failed {
        EXIT_VERIFY
    } else {
        EXIT_OK
    }
}

fn print_out(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}
