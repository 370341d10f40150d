//! GCN and AGNN forward passes built from the hybrid kernels.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::exec::{
    make_split_plan, sddmm_hybrid_with_values, spmm_hybrid, spmm_hybrid_with_values, EdgeValList,
    HybridSplitPlan, PrecisionMode,
};
use crate::graph::CsrGraph;
use crate::sgt::{reblock, TransformedGraph, SDDMM_BLK_W};

#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayerParams {
    /// `in_dim x out_dim`
    pub weight: DenseMatrix,
    pub apply_relu: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgnnLayerParams {
    /// Attention temperature.
    pub beta: f32,
}

/// Seeded uniform `[-0.1, 0.1]` weights for a chain of layers. Every layer
/// but the last applies ReLU.
pub fn random_gcn_layers(dims: &[usize], seed: u64) -> Vec<GcnLayerParams> {
    let count = dims.len().saturating_sub(1);
    (0..count)
        .map(|i| GcnLayerParams {
            weight: DenseMatrix::random_uniform(
                dims[i],
                dims[i + 1],
                -0.1,
                0.1,
                seed.wrapping_add(i as u64),
            ),
            apply_relu: i + 1 < count,
        })
        .collect()
}

/// Runs `h <- relu?((A h) W)` per layer, aggregating with [`spmm_hybrid`].
/// `t` should carry GCN-normalized edge values.
pub fn gcn_forward(
    t: &TransformedGraph,
    x: &DenseMatrix,
    layers: &[GcnLayerParams],
    plan: &HybridSplitPlan,
    prec: PrecisionMode,
) -> Result<DenseMatrix> {
    let mut h = x.clone();
    for (i, layer) in layers.iter().enumerate() {
        if layer.weight.rows() != h.cols() {
            return Err(Error::shape(format!(
                "layer {i} weight is {}x{} but its input has {} features",
                layer.weight.rows(),
                layer.weight.cols(),
                h.cols()
            )));
        }
        let agg = spmm_hybrid(t, &h, plan, prec)?;
        h = agg.matmul(&layer.weight)?;
        if layer.apply_relu {
            h.relu_in_place();
        }
    }
    Ok(h)
}

/// Row-wise softmax over each CSR row's edges.
pub fn edge_softmax(g: &CsrGraph, logits: &EdgeValList) -> Result<EdgeValList> {
    if logits.len() != g.num_edges() {
        return Err(Error::shape(format!(
            "{} logits for {} edges",
            logits.len(),
            g.num_edges()
        )));
    }
    let l = logits.values();
    let mut out = vec![0.0f32; l.len()];
    for r in 0..g.num_nodes() {
        let range = g.row_range(r);
        if range.is_empty() {
            continue;
        }
        let m = l[range.clone()]
            .iter()
            .fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
        let mut z = 0.0f64;
        for e in range.clone() {
            let ex = (l[e] as f64 - m).exp();
            out[e] = ex as f32;
            z += ex;
        }
        for e in range {
            out[e] = ((out[e] as f64) / z) as f32;
        }
    }
    EdgeValList::new(out)
}

/// Divides each row by its L2 norm. Zero rows stay zero; the second value
/// counts them.
pub fn l2_normalize_rows(h: &DenseMatrix) -> (DenseMatrix, usize) {
    let mut zero_rows = 0;
    let mut data = Vec::with_capacity(h.rows() * h.cols());
    for r in 0..h.rows() {
        let row = h.row(r);
        let norm = row.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm == 0.0 {
            zero_rows += 1;
            data.extend(std::iter::repeat_n(0.0, row.len()));
        } else {
            data.extend(row.iter().map(|v| v / norm));
        }
    }
    let z = DenseMatrix::new(h.rows(), h.cols(), data).expect("normalized rows are finite");
    (z, zero_rows)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AgnnStats {
    /// Zero-norm feature rows encountered across all layers.
    pub degenerate_rows: usize,
}

/// AGNN propagation. Per layer: cosine logits via SDDMM on L2-normalized
/// rows, edge softmax, then SpMM with the attention as edge values.
///
/// `ratio` sets the split for both kernels; the SDDMM runs on a copy of `t`
/// reblocked to 16-wide tiles.
pub fn agnn_forward(
    t: &TransformedGraph,
    x: &DenseMatrix,
    layers: &[AgnnLayerParams],
    ratio: f64,
    prec: PrecisionMode,
) -> Result<DenseMatrix> {
    agnn_forward_with_stats(t, x, layers, ratio, prec).map(|(h, _)| h)
}

pub fn agnn_forward_with_stats(
    t: &TransformedGraph,
    x: &DenseMatrix,
    layers: &[AgnnLayerParams],
    ratio: f64,
    prec: PrecisionMode,
) -> Result<(DenseMatrix, AgnnStats)> {
    if x.rows() != t.num_nodes() {
        return Err(Error::shape(format!(
            "feature matrix has {} rows, graph has {} nodes",
            x.rows(),
            t.num_nodes()
        )));
    }
    let t_edge = reblock(t, SDDMM_BLK_W)?;
    let spmm_plan = make_split_plan(t, ratio)?;
    let sddmm_plan = make_split_plan(&t_edge, ratio)?;
    let ones = vec![1.0f32; t.num_edges()];
    let mut stats = AgnnStats::default();

    let mut h = x.clone();
    for layer in layers {
        let (z, zero_rows) = l2_normalize_rows(&h);
        stats.degenerate_rows += zero_rows;
        let cos = sddmm_hybrid_with_values(&t_edge, &ones, &z, &z, &sddmm_plan, prec)?;
        let logits = EdgeValList::new(cos.values().iter().map(|c| layer.beta * c).collect())?;
        let attn = edge_softmax(t.csr(), &logits)?;
        h = spmm_hybrid_with_values(t, attn.values(), &h, &spmm_plan, prec)?;
    }
    if stats.degenerate_rows > 0 {
        log::warn!(
            "{} zero-norm feature rows normalized to zero",
            stats.degenerate_rows
        );
    }
    Ok((h, stats))
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightSidecar {
    layers: Vec<WeightEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightEntry {
    file: String,
    rows: usize,
    cols: usize,
    relu: bool,
}

fn layer_file(sidecar: &Path, i: usize) -> String {
    let stem = sidecar
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("weights");
    format!("{stem}.layer{i}.f32")
}

/// Writes one little-endian `f32` file per layer next to a one-line JSON
/// sidecar at `sidecar` that lists the files, their shapes and ReLU flags.
pub fn save_gcn_weights(sidecar: impl AsRef<Path>, layers: &[GcnLayerParams]) -> Result<()> {
    let sidecar = sidecar.as_ref();
    let dir = sidecar.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut entries = Vec::new();
    for (i, layer) in layers.iter().enumerate() {
        let file = layer_file(sidecar, i);
        let bytes: Vec<u8> = layer
            .weight
            .data()
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let path = dir.join(&file);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(WeightEntry {
            file,
            rows: layer.weight.rows(),
            cols: layer.weight.cols(),
            relu: layer.apply_relu,
        });
    }
    let json = serde_json::to_string(&WeightSidecar { layers: entries })
        .map_err(|e| Error::Invalid(e.to_string()))?;
    std::fs::write(sidecar, json + "\n").map_err(|e| Error::io(sidecar, e))
}

pub fn load_gcn_weights(sidecar: impl AsRef<Path>) -> Result<Vec<GcnLayerParams>> {
    let sidecar = sidecar.as_ref();
    let text = std::fs::read_to_string(sidecar).map_err(|e| Error::io(sidecar, e))?;
    let meta: WeightSidecar = serde_json::from_str(text.trim()).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    let dir: PathBuf = sidecar.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut layers = Vec::with_capacity(meta.layers.len());
    for (i, entry) in meta.layers.iter().enumerate() {
        let path = dir.join(&entry.file);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != entry.rows * entry.cols * 4 {
            return Err(Error::shape(format!(
                "layer {i}: {} bytes for a {}x{} weight",
                bytes.len(),
                entry.rows,
                entry.cols
            )));
        }
        if i > 0 && meta.layers[i - 1].cols != entry.rows {
            return Err(Error::shape(format!(
                "layer {i} input does not match layer {}",
                i - 1
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        layers.push(GcnLayerParams {
            weight: DenseMatrix::new(entry.rows, entry.cols, data)?,
            apply_relu: entry.relu,
        });
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gcn_normalize_values, normalize_graph, NormalizeOptions};
    use crate::sgt::{sgt_transform, TileGeometry};

    fn self_loops(n: usize) -> TransformedGraph {
        let g = normalize_graph(&CsrGraph::empty(n), NormalizeOptions::all()).unwrap();
        let g = gcn_normalize_values(&g).unwrap();
        sgt_transform(&g, TileGeometry::default()).unwrap()
    }

    #[test]
    fn gcn_identity_and_zero() {
        let t = self_loops(20);
        let x = DenseMatrix::random_uniform(20, 6, 0.0, 1.0, 4);
        let plan = make_split_plan(&t, 1.0).unwrap();
        let layers = vec![
            GcnLayerParams {
                weight: DenseMatrix::identity(6),
                apply_relu: true,
            };
            2
        ];
        assert_eq!(
            gcn_forward(&t, &x, &layers, &plan, PrecisionMode::ExactF32).unwrap(),
            x
        );

        let zero = vec![GcnLayerParams {
            weight: DenseMatrix::zeros(6, 3),
            apply_relu: false,
        }];
        let out = gcn_forward(&t, &x, &zero, &plan, PrecisionMode::ExactF32).unwrap();
        assert_eq!(out, DenseMatrix::zeros(20, 3));
    }

    #[test]
    fn gcn_rejects_bad_chain() {
        let t = self_loops(4);
        let x = DenseMatrix::zeros(4, 3);
        let plan = make_split_plan(&t, 1.0).unwrap();
        let layers = random_gcn_layers(&[2, 4], 0);
        assert!(matches!(
            gcn_forward(&t, &x, &layers, &plan, PrecisionMode::ExactF32),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn random_layers_shapes() {
        let layers = random_gcn_layers(&[8, 16, 4], 9);
        assert_eq!(layers.len(), 2);
        assert_eq!((layers[0].weight.rows(), layers[0].weight.cols()), (8, 16));
        assert!(layers[0].apply_relu && !layers[1].apply_relu);
        assert!(layers[1].weight.data().iter().all(|v| v.abs() <= 0.1));
    }

    #[test]
    fn softmax_closed_forms() {
        let g = CsrGraph::from_edges(4, &[(0, 0), (1, 0), (1, 1), (2, 0), (2, 2)], None).unwrap();
        let logits = EdgeValList::new(vec![3.0, 0.7, 0.7, 0.0, std::f32::consts::LN_2]).unwrap();
        let s = edge_softmax(&g, &logits).unwrap();
        let v = s.values();
        assert_eq!(v[0], 1.0);
        assert_eq!(&v[1..3], &[0.5, 0.5]);
        assert!((v[3] - 1.0 / 3.0).abs() < 1e-7);
        assert!((v[4] - 2.0 / 3.0).abs() < 1e-7);
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let g = CsrGraph::from_edges(1, &[(0, 0), (0, 0)], None).unwrap();
        let s = edge_softmax(&g, &EdgeValList::new(vec![1e30, 1e30]).unwrap()).unwrap();
        assert_eq!(s.values(), &[0.5, 0.5]);
        assert!(edge_softmax(&g, &EdgeValList::new(vec![0.0]).unwrap()).is_err());
    }

    #[test]
    fn agnn_single_node() {
        let t = self_loops(1);
        let x = DenseMatrix::new(1, 3, vec![1.0, -2.0, 0.5]).unwrap();
        let layers = vec![AgnnLayerParams { beta: 1.5 }; 4];
        let out = agnn_forward(&t, &x, &layers, 1.0, PrecisionMode::ExactF32).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn agnn_zero_rows_are_counted() {
        let t = self_loops(3);
        let x = DenseMatrix::new(3, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let (out, stats) = agnn_forward_with_stats(
            &t,
            &x,
            &[AgnnLayerParams { beta: 1.0 }],
            1.0,
            PrecisionMode::ExactF32,
        )
        .unwrap();
        assert_eq!(stats.degenerate_rows, 1);
        assert!(out.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sidecar = dir.path().join("gcn.json");
        let layers = random_gcn_layers(&[5, 16, 3], 11);
        save_gcn_weights(&sidecar, &layers).unwrap();
        let text = std::fs::read_to_string(&sidecar).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(load_gcn_weights(&sidecar).unwrap(), layers);

        std::fs::write(dir.path().join("gcn.layer1.f32"), [0u8; 8]).unwrap();
        assert!(load_gcn_weights(&sidecar).is_err());
    }
}
