//! Naive reference implementations. Nothing here touches the tiled kernels
//! or the transform: every routine loops directly over CSR edges or dense
//! entries in plain `f32`.

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::exec::EdgeValList;
use crate::graph::CsrGraph;
use crate::models::GcnLayerParams;

pub fn oracle_spmm(g: &CsrGraph, x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != g.num_nodes() {
        return Err(Error::shape(format!(
            "feature matrix has {} rows, graph has {} nodes",
            x.rows(),
            g.num_nodes()
        )));
    }
    let d = x.cols();
    let mut out = vec![0.0f32; g.num_nodes() * d];
    for (r, c, e) in g.edges() {
        let v = g.value(e);
        for k in 0..d {
            out[r as usize * d + k] += v * x.get(c as usize, k);
        }
    }
    DenseMatrix::new(g.num_nodes(), d, out)
}

pub fn oracle_sddmm(g: &CsrGraph, x: &DenseMatrix, y: &DenseMatrix) -> Result<EdgeValList> {
    if x.rows() != g.num_nodes() || y.rows() != g.num_nodes() || x.cols() != y.cols() {
        return Err(Error::shape(format!(
            "x {}x{}, y {}x{} for {} nodes",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols(),
            g.num_nodes()
        )));
    }
    let mut out = Vec::with_capacity(g.num_edges());
    for (r, c, e) in g.edges() {
        let mut s = 0.0f32;
        for k in 0..x.cols() {
            s += x.get(r as usize, k) * y.get(c as usize, k);
        }
        out.push(g.value(e) * s);
    }
    EdgeValList::new(out)
}

/// Dense adjacency with edge values summed into their cells.
pub fn dense_adjacency(g: &CsrGraph) -> DenseMatrix {
    let n = g.num_nodes();
    let mut a = vec![0.0f32; n * n];
    for (r, c, e) in g.edges() {
        a[r as usize * n + c as usize] += g.value(e);
    }
    DenseMatrix::new(n, n, a).expect("finite adjacency")
}

fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut out = vec![0.0f32; a.rows() * b.cols()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0f32;
            for k in 0..a.cols() {
                s += a.get(i, k) * b.get(k, j);
            }
            out[i * b.cols() + j] = s;
        }
    }
    DenseMatrix::new(a.rows(), b.cols(), out)
}

/// Dense GCN: per layer `h = relu?((A h) W)`.
pub fn oracle_dense_gcn(
    adjacency: &DenseMatrix,
    x: &DenseMatrix,
    layers: &[GcnLayerParams],
) -> Result<DenseMatrix> {
    if adjacency.rows() != adjacency.cols() {
        return Err(Error::shape("adjacency must be square"));
    }
    let mut h = x.clone();
    for layer in layers {
        let agg = naive_matmul(adjacency, &h)?;
        let mut next = naive_matmul(&agg, &layer.weight)?;
        if layer.apply_relu {
            next = DenseMatrix::from_fn(next.rows(), next.cols(), |r, c| next.get(r, c).max(0.0));
        }
        h = next;
    }
    Ok(h)
}

/// Dense AGNN: every non-zero cell of `adjacency` is an edge. Attention per
/// row is a softmax of `beta * cos(h_i, h_j)` over the row's edges, with the
/// cosine of a zero vector taken as 0.
pub fn oracle_dense_agnn(
    adjacency: &DenseMatrix,
    x: &DenseMatrix,
    betas: &[f32],
) -> Result<DenseMatrix> {
    let n = adjacency.rows();
    if adjacency.cols() != n || x.rows() != n {
        return Err(Error::shape("adjacency must be square and match x"));
    }
    let d = x.cols();
    let mut h = x.clone();
    for &beta in betas {
        let norms: Vec<f32> = (0..n)
            .map(|i| {
                (0..d)
                    .map(|k| h.get(i, k) * h.get(i, k))
                    .sum::<f32>()
                    .sqrt()
            })
            .collect();
        let mut next = vec![0.0f32; n * d];
        for i in 0..n {
            let nbrs: Vec<usize> = (0..n).filter(|&j| adjacency.get(i, j) != 0.0).collect();
            if nbrs.is_empty() {
                continue;
            }
            let logits: Vec<f64> = nbrs
                .iter()
                .map(|&j| {
                    let cos = if norms[i] == 0.0 || norms[j] == 0.0 {
                        0.0
                    } else {
                        (0..d).map(|k| h.get(i, k) * h.get(j, k)).sum::<f32>()
                            / (norms[i] * norms[j])
                    };
                    (beta * cos) as f64
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (&j, ex) in nbrs.iter().zip(&exps) {
                let a = (ex / z) as f32;
                for k in 0..d {
                    next[i * d + k] += a * h.get(j, k);
                }
            }
        }
        h = DenseMatrix::new(n, d, next)?;
    }
    Ok(h)
}

/// GCN over the CSR graph: [`oracle_spmm`] aggregation then a naive dense
/// update, for graphs too large for [`oracle_dense_gcn`].
pub fn oracle_gcn(g: &CsrGraph, x: &DenseMatrix, layers: &[GcnLayerParams]) -> Result<DenseMatrix> {
    let mut h = x.clone();
    for layer in layers {
        let agg = oracle_spmm(g, &h)?;
        let mut next = naive_matmul(&agg, &layer.weight)?;
        if layer.apply_relu {
            next = DenseMatrix::from_fn(next.rows(), next.cols(), |r, c| next.get(r, c).max(0.0));
        }
        h = next;
    }
    Ok(h)
}

/// AGNN over the CSR graph, one edge at a time.
pub fn oracle_agnn(g: &CsrGraph, x: &DenseMatrix, betas: &[f32]) -> Result<DenseMatrix> {
    let n = g.num_nodes();
    if x.rows() != n {
        return Err(Error::shape("feature rows must match the node count"));
    }
    let d = x.cols();
    let mut h = x.clone();
    for &beta in betas {
        let norms: Vec<f32> = (0..n)
            .map(|i| {
                (0..d)
                    .map(|k| h.get(i, k) * h.get(i, k))
                    .sum::<f32>()
                    .sqrt()
            })
            .collect();
        let mut next = vec![0.0f32; n * d];
        for i in 0..n {
            let range = g.row_range(i);
            if range.is_empty() {
                continue;
            }
            let logits: Vec<f64> = range
                .clone()
                .map(|e| {
                    let j = g.edge_list()[e] as usize;
                    let cos = if norms[i] == 0.0 || norms[j] == 0.0 {
                        0.0
                    } else {
                        (0..d).map(|k| h.get(i, k) * h.get(j, k)).sum::<f32>()
                            / (norms[i] * norms[j])
                    };
                    (beta * cos) as f64
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            for (e, ex) in range.zip(&exps) {
                let j = g.edge_list()[e] as usize;
                let a = (ex / z) as f32;
                for k in 0..d {
                    next[i * d + k] += a * h.get(j, k);
                }
            }
        }
        h = DenseMatrix::new(n, d, next)?;
    }
    Ok(h)
}
