//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgtk::bench::{run_bench_paths, BenchConfig, DatasetSource, Kernel, PathKind};
use sgtk::exec::{tf32_round_f32, EdgeValList};
use sgtk::models::random_gcn_layers;
use sgtk::oracle::{
    dense_adjacency, oracle_dense_agnn, oracle_dense_gcn, oracle_sddmm, oracle_spmm,
};
use sgtk::sgt::SDDMM_BLK_W;
use sgtk::{
    agnn_forward, block_stats, edge_softmax, gcn_forward, gcn_normalize_values, load_edge_list,
    make_split_plan, make_synthetic, max_rel_err, normalize_graph, reblock, sddmm_hybrid,
    sgt_transform, spmm_hybrid, with_threads, AgnnLayerParams, CsrGraph, DenseMatrix,
    EdgeListFormat, NormalizeOptions, PrecisionMode, SyntheticSpec, TileGeometry,
};

const FP32: PrecisionMode = PrecisionMode::ExactF32;
const TF32: PrecisionMode = PrecisionMode::EmulatedTf32;
const TOL: f64 = 1e-4;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: sgtk::Error) -> String {
    e.to_string()
}

/// Random graph with `n <= max_n` nodes and edge density at most `max_p`;
/// half of the instances carry random edge values.
fn random_graph(rng: &mut ChaCha8Rng, max_n: usize, max_p: f64) -> CsrGraph {
    let n = rng.random_range(1..=max_n);
    let p = rng.random_range(0.0..=max_p);
    let g = make_synthetic(SyntheticSpec::Random {
        n,
        p,
        seed: rng.random(),
    })
    .unwrap();
    if rng.random_bool(0.5) {
        let values = (0..g.num_edges())
            .map(|_| rng.random_range(-2.0f32..2.0))
            .collect();
        g.with_values(values).unwrap()
    } else {
        g
    }
}

fn geom16x8() -> TileGeometry {
    TileGeometry::new(16, 8).unwrap()
}

fn block_accounting() -> Outcome {
    let reference = [
        ("citeseer", 659usize, 84352usize),
        ("cora", 681, 87168),
        ("amazon0505", 234206, 29978368),
        ("com-amazon", 124398, 15922944),
        ("amazon0601", 164737, 21086336),
    ];
    for (name, blocks, capacity) in reference {
        check(blocks * 16 * 8 == capacity, || {
            format!("{name}: {blocks} x 128 != {capacity}")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let g = random_graph(&mut rng, 2048, 0.05);
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let s = block_stats(&t);
        check(s.capacity == s.block_counter * 128, || {
            format!(
                "graph {i}: capacity {} != {} x 128",
                s.capacity, s.block_counter
            )
        })?;
        let bench = run_bench_paths(
            &BenchConfig {
                dataset: DatasetSource::Synthetic(SyntheticSpec::Random {
                    n: g.num_nodes(),
                    p: 0.01,
                    seed: i,
                }),
                repeats: 1,
                ..Default::default()
            },
            &[PathKind::Tile],
        )
        .map_err(err)?;
        let row = &bench.rows[0];
        check(row.capacity == row.blocks * 128, || {
            format!(
                "report {i}: capacity {} != {} x 128",
                row.capacity, row.blocks
            )
        })?;
    }
    for spec in ["blockdense:4:2", "blockdense:16:5"] {
        let t = sgt_transform(&make_synthetic(spec.parse().unwrap()).unwrap(), geom16x8())
            .map_err(err)?;
        let s = block_stats(&t);
        check(s.capacity == s.nnz && s.mean_tile_density == 1.0, || {
            format!("{spec}: not fully dense")
        })?;
    }
    let mut note = String::from("5 reference rows and 100 transforms hold capacity = blocks x 128");
    note.push_str(&dataset_block_counts());
    Ok(note)
}

/// Reports (never asserts) block counts of real datasets found in
/// `$SGTK_DATASETS` after symmetrize + dedupe.
fn dataset_block_counts() -> String {
    let Some(dir) = std::env::var_os("SGTK_DATASETS").map(PathBuf::from) else {
        return "; set SGTK_DATASETS to report real dataset block counts".into();
    };
    let mut out = String::new();
    for (name, expect) in [("citeseer", 659), ("cora", 681)] {
        for ext in ["mtx", "tsv", "txt"] {
            let path = dir.join(format!("{name}.{ext}"));
            if !path.exists() {
                continue;
            }
            let opts = NormalizeOptions {
                symmetrize: true,
                add_self_loops: false,
                dedupe: true,
            };
            let res = load_edge_list(&path, EdgeListFormat::from_path(&path))
                .and_then(|g| normalize_graph(&g, opts))
                .and_then(|g| sgt_transform(&g, geom16x8()));
            match res {
                Ok(t) => out.push_str(&format!(
                    "; {name}: {} blocks (reference {expect})",
                    t.block_counter()
                )),
                Err(e) => out.push_str(&format!("; {name}: {e}")),
            }
            break;
        }
    }
    out
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dims = [8usize, 16, 32, 64];
    let mut worst = 0.0f64;
    for i in 0..200 {
        let g = random_graph(&mut rng, 2048, 0.05);
        let d = dims[i % 4];
        let ratio = [1.0, 0.0, 0.5, rng.random_range(0.0..=1.0)][(i / 4) % 4];
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let n = g.num_nodes();
        let x = DenseMatrix::random_uniform(n, d, -1.0, 1.0, i as u64);
        let y = DenseMatrix::random_uniform(n, d, -1.0, 1.0, i as u64 + 1000);

        let got =
            spmm_hybrid(&t, &x, &make_split_plan(&t, ratio).map_err(err)?, FP32).map_err(err)?;
        let want = oracle_spmm(&g, &x).map_err(err)?;
        let e = max_rel_err(got.data(), want.data());
        worst = worst.max(e);
        check(e <= TOL, || {
            format!("spmm graph {i} (n={n}, d={d}, ratio={ratio}): {e:e}")
        })?;

        let want = oracle_sddmm(&g, &x, &y).map_err(err)?;
        for tt in [t.clone(), reblock(&t, SDDMM_BLK_W).map_err(err)?] {
            let plan = make_split_plan(&tt, ratio).map_err(err)?;
            let got = sddmm_hybrid(&tt, &x, &y, &plan, FP32).map_err(err)?;
            let e = max_rel_err(got.values(), want.values());
            worst = worst.max(e);
            check(e <= TOL, || {
                format!("sddmm graph {i} (n={n}, d={d}, ratio={ratio}): {e:e}")
            })?;
        }
    }
    Ok(format!("200 graphs, worst max_rel_err {worst:.2e}"))
}

fn split_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ratios = [0.0, 0.25, 0.5, 1.0];
    let mut worst = 0.0f64;
    for i in 0..50 {
        let g = random_graph(&mut rng, 2048, 0.05);
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let te = reblock(&t, SDDMM_BLK_W).map_err(err)?;
        let n = g.num_nodes();
        let x = DenseMatrix::random_uniform(n, 32, -1.0, 1.0, i);
        let y = DenseMatrix::random_uniform(n, 32, -1.0, 1.0, i + 500);
        let mut spmm = Vec::new();
        let mut sddmm = Vec::new();
        for r in ratios {
            spmm.push(
                spmm_hybrid(&t, &x, &make_split_plan(&t, r).map_err(err)?, FP32)
                    .map_err(err)?
                    .into_data(),
            );
            sddmm.push(
                sddmm_hybrid(&te, &x, &y, &make_split_plan(&te, r).map_err(err)?, FP32)
                    .map_err(err)?
                    .into_vec(),
            );
        }
        for a in 0..ratios.len() {
            for b in a + 1..ratios.len() {
                for (kind, outs) in [("spmm", &spmm), ("sddmm", &sddmm)] {
                    let e = max_rel_err(&outs[a], &outs[b]);
                    worst = worst.max(e);
                    check(e <= TOL, || {
                        format!(
                            "{kind} graph {i}: ratios {} vs {}: {e:e}",
                            ratios[a], ratios[b]
                        )
                    })?;
                }
            }
        }
    }
    Ok(format!("50 graphs x 6 ratio pairs, worst {worst:.2e}"))
}

fn reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..100 {
        let g = random_graph(&mut rng, 2048, 0.05);
        let geom = TileGeometry::new(rng.random_range(1..=32), rng.random_range(1..=16)).unwrap();
        let t = sgt_transform(&g, geom).map_err(err)?;
        let mut rebuilt: Vec<(u32, u32)> = (0..t.num_edges())
            .map(|e| {
                let r = t.edge_to_row()[e];
                let w = r as usize / geom.blk_h;
                (r, t.unique_cols(w)[t.edge_to_column()[e] as usize])
            })
            .collect();
        let mut orig: Vec<(u32, u32)> = g.edges().map(|(r, c, _)| (r, c)).collect();
        rebuilt.sort_unstable();
        orig.sort_unstable();
        check(rebuilt == orig, || {
            format!(
                "graph {i}: non-zero set differs at geometry {}x{}",
                geom.blk_h, geom.blk_w
            )
        })?;
    }
    Ok("100 graphs reproduce their non-zero sets exactly".into())
}

fn model_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gcn = 0.0f64;
    let mut worst_agnn = 0.0f64;
    for i in 0..12 {
        let raw = random_graph(&mut rng, 256, 0.08);
        let norm = normalize_graph(&raw, NormalizeOptions::all()).map_err(err)?;
        let n = norm.num_nodes();
        let ratio = [1.0, 0.0, 0.5][i % 3];

        // 2 layers, hidden 16
        let g = gcn_normalize_values(&norm).map_err(err)?;
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let x = DenseMatrix::random_uniform(n, 32, -1.0, 1.0, i as u64);
        let layers = random_gcn_layers(&[32, 16, 7], i as u64);
        let got = gcn_forward(
            &t,
            &x,
            &layers,
            &make_split_plan(&t, ratio).map_err(err)?,
            FP32,
        )
        .map_err(err)?;
        let want = oracle_dense_gcn(&dense_adjacency(&g), &x, &layers).map_err(err)?;
        let e = max_rel_err(got.data(), want.data());
        worst_gcn = worst_gcn.max(e);
        check(e <= TOL, || format!("gcn graph {i} (n={n}): {e:e}"))?;

        // 4 layers, hidden 32
        let t = sgt_transform(&norm, geom16x8()).map_err(err)?;
        let x = DenseMatrix::random_uniform(n, 32, -1.0, 1.0, i as u64 + 99);
        let betas = [1.0f32, 0.5, 2.0, 1.5];
        let layers: Vec<AgnnLayerParams> =
            betas.iter().map(|&beta| AgnnLayerParams { beta }).collect();
        let got = agnn_forward(&t, &x, &layers, ratio, FP32).map_err(err)?;
        let want = oracle_dense_agnn(&dense_adjacency(&norm), &x, &betas).map_err(err)?;
        let e = max_rel_err(got.data(), want.data());
        worst_agnn = worst_agnn.max(e);
        check(e <= TOL, || format!("agnn graph {i} (n={n}): {e:e}"))?;
    }
    Ok(format!(
        "GCN 2x16 worst {worst_gcn:.2e}, AGNN 4x32 worst {worst_agnn:.2e}"
    ))
}

fn softmax_and_uniform_agnn() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_sum = 0.0f64;
    let mut worst_mean = 0.0f64;
    for i in 0..20 {
        let g = normalize_graph(&random_graph(&mut rng, 512, 0.05), NormalizeOptions::all())
            .map_err(err)?;
        let scale = [1.0f32, 10.0, 80.0, 1e4][i % 4];
        let logits: Vec<f32> = (0..g.num_edges())
            .map(|_| rng.random_range(-scale..scale))
            .collect();
        let attn = edge_softmax(&g, &EdgeValList::new(logits).map_err(err)?).map_err(err)?;
        for r in 0..g.num_nodes() {
            let sum: f64 = attn.values()[g.row_range(r)]
                .iter()
                .map(|&v| v as f64)
                .sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
            check((sum - 1.0).abs() <= 1e-6, || {
                format!("graph {i} row {r}: sum {sum}")
            })?;
        }

        // beta = 0 gives uniform attention, so every layer is a neighbor mean
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let x = DenseMatrix::random_uniform(g.num_nodes(), 16, -1.0, 1.0, i as u64);
        let layers = vec![AgnnLayerParams { beta: 0.0 }; 3];
        let got = agnn_forward(&t, &x, &layers, 0.5, FP32).map_err(err)?;
        let mut h = x.clone();
        for _ in 0..3 {
            h = DenseMatrix::from_fn(h.rows(), h.cols(), |r, k| {
                let nbrs = g.row(r);
                let s: f64 = nbrs.iter().map(|&j| h.get(j as usize, k) as f64).sum();
                (s / nbrs.len() as f64) as f32
            });
        }
        let e = max_rel_err(got.data(), h.data());
        worst_mean = worst_mean.max(e);
        check(e <= TOL, || {
            format!("graph {i}: beta=0 AGNN vs mean aggregation {e:e}")
        })?;
    }
    Ok(format!(
        "worst |row sum - 1| {worst_sum:.2e}; beta=0 worst {worst_mean:.2e}"
    ))
}

/// Nearest 10-bit-mantissa value by exhaustive comparison of the two
/// neighbouring candidates, ties to the even mantissa.
fn tf32_bruteforce(v: f32) -> f32 {
    let bits = v.to_bits();
    let lo = bits & !0x1FFF;
    let hi = lo + 0x2000;
    let (a, b) = (f32::from_bits(lo), f32::from_bits(hi));
    let (da, db) = ((v as f64 - a as f64).abs(), (b as f64 - v as f64).abs());
    if da < db || (da == db && (lo >> 13) & 1 == 0) {
        a
    } else {
        b
    }
}

fn tf32_emulation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_rel = 0.0f64;
    let mut samples = 0usize;
    let edge_cases = [
        1.0f32,
        1.0 + 2f32.powi(-11),
        1.0 + 3.0 * 2f32.powi(-11),
        f32::MIN_POSITIVE,
        1.0e38,
        -7.5,
    ];
    let random = (0..1_000_000).map(|_| f32::from_bits(rng.random::<u32>()));
    for v in edge_cases.into_iter().chain(random) {
        if !v.is_normal() || v.abs() >= 3.0e38 {
            continue;
        }
        samples += 1;
        let r = tf32_round_f32(v);
        let want = tf32_bruteforce(v);
        check(r.to_bits() == want.to_bits(), || {
            format!("{v:e}: rounded to {r:e}, expected {want:e}")
        })?;
        let rel = ((r as f64 - v as f64) / v as f64).abs();
        worst_rel = worst_rel.max(rel);
        check(rel <= 2f64.powi(-11), || {
            format!("{v:e}: relative error {rel:e}")
        })?;
    }

    // end to end: |err_ik| <= deg_i * 2^-10 * max_j |a_ij x_jk| against an f64 reference
    let mut worst_ratio = 0.0f64;
    for i in 0..20 {
        let g = random_graph(&mut rng, 1024, 0.05);
        let t = sgt_transform(&g, geom16x8()).map_err(err)?;
        let n = g.num_nodes();
        let d = 32;
        let x = DenseMatrix::random_uniform(n, d, -4.0, 4.0, i);
        let got =
            spmm_hybrid(&t, &x, &make_split_plan(&t, 1.0).map_err(err)?, TF32).map_err(err)?;
        for r in 0..n {
            let range = g.row_range(r);
            let k = range.len() as f64;
            for c in 0..d {
                let mut exact = 0.0f64;
                let mut scale = 0.0f64;
                for e in range.clone() {
                    let term = g.value(e) as f64 * x.get(g.edge_list()[e] as usize, c) as f64;
                    exact += term;
                    scale = scale.max(term.abs());
                }
                let diff = (got.get(r, c) as f64 - exact).abs();
                let bound = k * 2f64.powi(-10) * scale;
                if bound > 0.0 {
                    worst_ratio = worst_ratio.max(diff / bound);
                }
                check(diff <= bound, || {
                    format!("graph {i} ({r},{c}): error {diff:e} > bound {bound:e}")
                })?;
            }
        }
    }
    Ok(format!(
        "{samples} floats match bit-level rounding, worst rel {worst_rel:.3e} (2^-11 = {:.3e}); SpMM uses {:.1}% of the bound",
        2f64.powi(-11),
        worst_ratio * 100.0
    ))
}

fn tile_path_performance() -> Outcome {
    let cfg = BenchConfig {
        dataset: DatasetSource::Synthetic(SyntheticSpec::BlockDense {
            windows: 256,
            tiles_per_window: 32,
            seed: 8,
        }),
        kernel: Kernel::Spmm,
        dims: 16,
        repeats: 5,
        threads: 0,
        ..Default::default()
    };
    let report = run_bench_paths(&cfg, &[PathKind::Tile, PathKind::Scalar]).map_err(err)?;
    let tile = report.row(Kernel::Spmm, "tile").unwrap();
    let scalar = report.row(Kernel::Spmm, "scalar").unwrap();
    check(tile.nnz >= 1 << 20 && tile.density == 1.0, || {
        format!("suite has {} nnz at density {}", tile.nnz, tile.density)
    })?;
    let msg = format!(
        "tile {:.3} ms vs scalar {:.3} ms over 5 repeats ({:.2}x), {} nnz",
        tile.median_ms,
        scalar.median_ms,
        scalar.median_ms / tile.median_ms,
        tile.nnz
    );
    check(tile.median_ms <= scalar.median_ms, || msg.clone())?;
    Ok(msg)
}

fn determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..20 {
        let raw = random_graph(&mut rng, 1024, 0.05);
        let x = DenseMatrix::random_uniform(raw.num_nodes(), 24, -1.0, 1.0, i);
        let y = DenseMatrix::random_uniform(raw.num_nodes(), 24, -1.0, 1.0, i + 1);
        let ratio = rng.random_range(0.0..=1.0);
        let prec = if i % 2 == 0 { FP32 } else { TF32 };
        let run = |threads: usize| {
            with_threads(threads, || -> sgtk::Result<_> {
                let norm = normalize_graph(&raw, NormalizeOptions::all())?;
                let gcn_g = gcn_normalize_values(&norm)?;
                let t = sgt_transform(&raw, geom16x8())?;
                let te = reblock(&t, SDDMM_BLK_W)?;
                let tn = sgt_transform(&norm, geom16x8())?;
                let tg = sgt_transform(&gcn_g, geom16x8())?;
                let spmm = spmm_hybrid(&t, &x, &make_split_plan(&t, ratio)?, prec)?;
                let sddmm = sddmm_hybrid(&te, &x, &y, &make_split_plan(&te, ratio)?, prec)?;
                let layers = random_gcn_layers(&[24, 16, 8], i);
                let gcn = gcn_forward(&tg, &x, &layers, &make_split_plan(&tg, ratio)?, prec)?;
                let agnn = agnn_forward(&tn, &x, &[AgnnLayerParams { beta: 1.0 }; 2], ratio, prec)?;
                Ok((t, tn, tg, te, spmm, sddmm, gcn, agnn))
            })
        };
        let a = run(1).map_err(err)?;
        let b = run(8).map_err(err)?;
        check(a.0 == b.0 && a.1 == b.1 && a.2 == b.2 && a.3 == b.3, || {
            format!("instance {i}: transforms differ")
        })?;
        let bits = |m: &DenseMatrix| m.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        check(bits(&a.4) == bits(&b.4), || {
            format!("instance {i}: spmm differs")
        })?;
        let ebits = |e: &EdgeValList| e.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        check(ebits(&a.5) == ebits(&b.5), || {
            format!("instance {i}: sddmm differs")
        })?;
        check(bits(&a.6) == bits(&b.6), || {
            format!("instance {i}: gcn differs")
        })?;
        check(bits(&a.7) == bits(&b.7), || {
            format!("instance {i}: agnn differs")
        })?;
    }
    Ok("20 instances bit-identical with 1 and 8 threads".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("block accounting identity", block_accounting),
        ("oracle equivalence", oracle_equivalence),
        ("split invariance", split_invariance),
        ("tile reconstruction", reconstruction),
        ("model equivalence", model_equivalence),
        (
            "edge softmax and uniform attention",
            softmax_and_uniform_agnn,
        ),
        ("tf32 emulation", tf32_emulation),
        ("tile path performance", tile_path_performance),
        ("thread-count determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {}: {name}: PASS ({secs:.1}s) {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({secs:.1}s) {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
