use super::CsrGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub symmetrize: bool,
    pub add_self_loops: bool,
    pub dedupe: bool,
}

impl NormalizeOptions {
    /// Symmetrize, self-loop and dedupe: the usual preprocessing for GNN inputs.
    pub fn all() -> Self {
        NormalizeOptions {
            symmetrize: true,
            add_self_loops: true,
            dedupe: true,
        }
    }
}

/// Symmetrizes, self-loops and dedupes a graph.
///
/// `symmetrize` raises the multiplicity of every `(j, i)` to match `(i, j)`,
/// copying values from the existing direction, so a graph that is already
/// symmetric is left alone. `add_self_loops` adds `(i, i)` (value 1.0) only
/// where it is missing. `dedupe` collapses repeated entries, summing values.
/// Each step is idempotent, and so is the composition.
pub fn normalize_graph(g: &CsrGraph, opts: NormalizeOptions) -> Result<CsrGraph> {
    g.validate()?;
    let weighted = g.values().is_some();
    let mut entries: Vec<(u32, u32, f32)> = g.edges().map(|(r, c, e)| (r, c, g.value(e))).collect();

    if opts.symmetrize {
        let mirrored = missing_mirrors(&entries);
        entries.extend(mirrored);
    }

    if opts.add_self_loops {
        let mut has_loop = vec![false; g.num_nodes()];
        for &(r, c, _) in &entries {
            if r == c {
                has_loop[r as usize] = true;
            }
        }
        entries.extend(
            has_loop
                .iter()
                .enumerate()
                .filter(|(_, &h)| !h)
                .map(|(i, _)| (i as u32, i as u32, 1.0)),
        );
    }

    // stable: duplicates keep their relative order
    entries.sort_by_key(|&(r, c, _)| (r, c));

    if opts.dedupe {
        let mut merged: Vec<(u32, u32, f32)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        entries = merged;
    }

    let edges: Vec<(u32, u32)> = entries.iter().map(|&(r, c, _)| (r, c)).collect();
    let values = weighted.then(|| entries.iter().map(|&(_, _, v)| v).collect());
    CsrGraph::from_edges(g.num_nodes(), &edges, values)
}

/// Entries needed so that mult(j, i) >= mult(i, j) for every ordered pair.
fn missing_mirrors(entries: &[(u32, u32, f32)]) -> Vec<(u32, u32, f32)> {
    let mut forward: Vec<(u32, u32, f32)> = entries.to_vec();
    forward.sort_by_key(|&(r, c, _)| (r, c));
    let mut reversed: Vec<(u32, u32, f32)> = entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
    reversed.sort_by_key(|&(r, c, _)| (r, c));

    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while j < reversed.len() {
        let key = (reversed[j].0, reversed[j].1);
        let j_end = j + reversed[j..]
            .iter()
            .take_while(|e| (e.0, e.1) == key)
            .count();
        while i < forward.len() && (forward[i].0, forward[i].1) < key {
            i += 1;
        }
        let i_end = i + forward[i..]
            .iter()
            .take_while(|e| (e.0, e.1) == key)
            .count();
        let have = i_end - i;
        let need = j_end - j;
        if need > have {
            out.extend_from_slice(&reversed[j + have..j_end]);
        }
        i = i_end;
        j = j_end;
    }
    out
}

/// Replaces edge values with the symmetric GCN normalization
/// `1 / sqrt(deg(row) * deg(col))`, where degree counts the edges of a row.
pub fn gcn_normalize_values(g: &CsrGraph) -> Result<CsrGraph> {
    let deg: Vec<usize> = (0..g.num_nodes()).map(|i| g.degree(i)).collect();
    if let Some(node) = deg.iter().position(|&d| d == 0) {
        return Err(Error::Degree { node });
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let values = g
        .edges()
        .map(|(r, c, _)| (inv_sqrt[r as usize] * inv_sqrt[c as usize]) as f32)
        .collect();
    g.clone().with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(g: &CsrGraph) -> Vec<(u32, u32)> {
        g.edges().map(|(r, c, _)| (r, c)).collect()
    }

    #[test]
    fn symmetrize_adds_reverse() {
        let g = CsrGraph::from_edges(2, &[(0, 1)], None).unwrap();
        let opts = NormalizeOptions {
            symmetrize: true,
            ..Default::default()
        };
        let s = normalize_graph(&g, opts).unwrap();
        assert_eq!(pairs(&s), vec![(0, 1), (1, 0)]);
        assert_eq!(normalize_graph(&s, opts).unwrap(), s);
    }

    #[test]
    fn dedupe_sums_values() {
        let g = CsrGraph::from_edges(2, &[(0, 1), (0, 1)], Some(vec![2.0, 3.0])).unwrap();
        let opts = NormalizeOptions {
            dedupe: true,
            ..Default::default()
        };
        let d = normalize_graph(&g, opts).unwrap();
        assert_eq!(pairs(&d), vec![(0, 1)]);
        assert_eq!(d.values().unwrap(), &[5.0]);
    }

    #[test]
    fn self_loops_on_empty_graph() {
        let g = CsrGraph::empty(3);
        let opts = NormalizeOptions {
            add_self_loops: true,
            ..Default::default()
        };
        let s = normalize_graph(&g, opts).unwrap();
        assert_eq!(pairs(&s), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn symmetrize_duplicates_with_values() {
        let g = CsrGraph::from_edges(2, &[(0, 1), (0, 1)], Some(vec![2.0, 3.0])).unwrap();
        let s = normalize_graph(&g, NormalizeOptions::all()).unwrap();
        assert_eq!(pairs(&s), vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(s.values().unwrap(), &[1.0, 5.0, 5.0, 1.0]);
    }

    #[test]
    fn gcn_single_node_and_full_pair() {
        let g = CsrGraph::from_edges(1, &[(0, 0)], None).unwrap();
        assert_eq!(gcn_normalize_values(&g).unwrap().values().unwrap(), &[1.0]);

        let g = CsrGraph::from_edges(2, &[(0, 0), (0, 1), (1, 0), (1, 1)], None).unwrap();
        assert_eq!(
            gcn_normalize_values(&g).unwrap().values().unwrap(),
            &[0.5; 4]
        );
    }

    #[test]
    fn gcn_path_graph_matches_dense_formula() {
        let g = CsrGraph::from_edges(3, &[(0, 1), (1, 2)], None).unwrap();
        let g = normalize_graph(&g, NormalizeOptions::all()).unwrap();
        let n = gcn_normalize_values(&g).unwrap();

        // dense D^-1/2 A D^-1/2 computed from scratch
        let mut a = [[0.0f64; 3]; 3];
        for (r, c, _) in g.edges() {
            a[r as usize][c as usize] = 1.0;
        }
        let d: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
        for (r, c, e) in n.edges() {
            let (r, c) = (r as usize, c as usize);
            let want = a[r][c] / (d[r] * d[c]).sqrt();
            assert!((n.value(e) as f64 - want).abs() < 1e-7);
        }
        let e01 = n.row_range(0).find(|&e| n.edge_list()[e] == 1).unwrap();
        assert!((n.value(e01) as f64 - 0.40825).abs() < 1e-5);
    }

    #[test]
    fn gcn_rejects_empty_rows() {
        let g = CsrGraph::from_edges(2, &[(0, 0)], None).unwrap();
        assert!(matches!(
            gcn_normalize_values(&g),
            Err(Error::Degree { node: 1 })
        ));
    }
}
