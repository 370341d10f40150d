//! Graph ingestion and the canonical CSR adjacency the kernels consume.

mod load;
mod normalize;

pub use load::{load_edge_list, parse_matrix_market, parse_tsv, EdgeListFormat};
pub use normalize::{gcn_normalize_values, normalize_graph, NormalizeOptions};

use crate::error::{Error, Result};

/// Adjacency in compressed sparse row form.
///
/// Row `i` owns `edge_list[node_pointer[i]..node_pointer[i + 1]]`, sorted
/// ascending. Freshly loaded graphs may still carry repeated columns inside a
/// row; [`normalize_graph`] with `dedupe` makes them strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph {
    num_nodes: usize,
    node_pointer: Vec<usize>,
    edge_list: Vec<u32>,
    values: Option<Vec<f32>>,
}

impl CsrGraph {
    /// Builds a graph from raw CSR arrays, checking the structural invariants.
    pub fn new(
        num_nodes: usize,
        node_pointer: Vec<usize>,
        edge_list: Vec<u32>,
        values: Option<Vec<f32>>,
    ) -> Result<Self> {
        let g = CsrGraph {
            num_nodes,
            node_pointer,
            edge_list,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn empty(num_nodes: usize) -> Self {
        CsrGraph {
            num_nodes,
            node_pointer: vec![0; num_nodes + 1],
            edge_list: Vec::new(),
            values: None,
        }
    }

    /// Builds a graph from an unordered list of `(row, col)` pairs.
    ///
    /// Entries are stably sorted by `(row, col)`; duplicates are kept.
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(u32, u32)],
        values: Option<Vec<f32>>,
    ) -> Result<Self> {
        if let Some(v) = &values {
            if v.len() != edges.len() {
                return Err(Error::Invalid(format!(
                    "{} values for {} edges",
                    v.len(),
                    edges.len()
                )));
            }
        }
        for &(r, c) in edges {
            if r as usize >= num_nodes || c as usize >= num_nodes {
                return Err(Error::Invalid(format!(
                    "edge ({r}, {c}) outside a graph of {num_nodes} nodes"
                )));
            }
        }
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| edges[i]);

        let mut node_pointer = vec![0usize; num_nodes + 1];
        for &(r, _) in edges {
            node_pointer[r as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            node_pointer[i + 1] += node_pointer[i];
        }
        let edge_list = order.iter().map(|&i| edges[i].1).collect();
        let values = values.map(|v| order.iter().map(|&i| v[i]).collect());
        CsrGraph::new(num_nodes, node_pointer, edge_list, values)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edge_list.len()
    }

    pub fn node_pointer(&self) -> &[usize] {
        &self.node_pointer
    }

    pub fn edge_list(&self) -> &[u32] {
        &self.edge_list
    }

    pub fn values(&self) -> Option<&[f32]> {
        self.values.as_deref()
    }

    /// Value of edge `e`, with absent values read as 1.0.
    #[inline]
    pub fn value(&self, e: usize) -> f32 {
        self.values.as_ref().map_or(1.0, |v| v[e])
    }

    /// Edge values with the unweighted default filled in.
    pub fn values_or_ones(&self) -> Vec<f32> {
        match &self.values {
            Some(v) => v.clone(),
            None => vec![1.0; self.num_edges()],
        }
    }

    pub fn with_values(mut self, values: Vec<f32>) -> Result<Self> {
        self.values = Some(values);
        self.validate()?;
        Ok(self)
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.edge_list[self.node_pointer[i]..self.node_pointer[i + 1]]
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.node_pointer[i]..self.node_pointer[i + 1]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.node_pointer[i + 1] - self.node_pointer[i]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_nodes)
            .map(|i| self.degree(i))
            .max()
            .unwrap_or(0)
    }

    /// Iterates `(row, col, edge_index)` in CSR order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |r| {
            self.row_range(r)
                .map(move |e| (r as u32, self.edge_list[e], e))
        })
    }

    /// True when every row is strictly ascending (no duplicate edges).
    pub fn is_canonical(&self) -> bool {
        (0..self.num_nodes).all(|r| self.row(r).windows(2).all(|w| w[0] < w[1]))
    }

    /// Checks the structural invariants. Duplicate columns within a row are
    /// allowed here; see [`CsrGraph::is_canonical`].
    pub fn validate(&self) -> Result<()> {
        let np = &self.node_pointer;
        if np.len() != self.num_nodes + 1 {
            return Err(Error::Invalid(format!(
                "node_pointer has {} entries, expected {}",
                np.len(),
                self.num_nodes + 1
            )));
        }
        if np[0] != 0 {
            return Err(Error::Invalid("node_pointer[0] must be 0".into()));
        }
        if np.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid("node_pointer is decreasing".into()));
        }
        if np[self.num_nodes] != self.edge_list.len() {
            return Err(Error::Invalid(format!(
                "node_pointer ends at {} but there are {} edges",
                np[self.num_nodes],
                self.edge_list.len()
            )));
        }
        if let Some(&c) = self
            .edge_list
            .iter()
            .find(|&&c| c as usize >= self.num_nodes)
        {
            return Err(Error::Invalid(format!(
                "column {c} outside a graph of {} nodes",
                self.num_nodes
            )));
        }
        for r in 0..self.num_nodes {
            if self.row(r).windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Invalid(format!("row {r} is not sorted")));
            }
        }
        if let Some(v) = &self.values {
            if v.len() != self.edge_list.len() {
                return Err(Error::Invalid(format!(
                    "{} values for {} edges",
                    v.len(),
                    self.edge_list.len()
                )));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(())
    }

    /// Applies a node relabeling: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::shape(format!(
                "permutation of length {} for {} nodes",
                perm.len(),
                self.num_nodes
            )));
        }
        let edges: Vec<(u32, u32)> = self
            .edges()
            .map(|(r, c, _)| (perm[r as usize], perm[c as usize]))
            .collect();
        let values = self.values.clone();
        CsrGraph::from_edges(self.num_nodes, &edges, values)
    }
}
