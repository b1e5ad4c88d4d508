//! Attributed undirected graphs, adjacency normalization, dataset I/O,
//! synthetic generation and anomaly injection.

mod inject;
mod io;
mod synth;

pub use inject::{inject_anomalies, AnomalyLabels, InjectionConfig};
pub use io::{graph_from_json, load_graph, save_graph, DatasetFile};
pub use synth::{generate_synthetic, SyntheticConfig};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Attributed undirected graph.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; neighbor lists are
/// kept sorted so membership is a binary search. Values are immutable once
/// built; augmentations construct new graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    name: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    features: DMatrix<f64>,
    labels: Option<Vec<u8>>,
}

impl Graph {
    /// Builds a graph from an edge list in any orientation.
    ///
    /// Duplicate pairs (including reversed ones) collapse to one undirected
    /// edge. Self-loops and out-of-range endpoints are rejected.
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: DMatrix<f64>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if features.nrows() != num_nodes {
            return Err(Error::Validation(format!(
                "feature matrix has {} rows but num_nodes = {}",
                features.nrows(),
                num_nodes
            )));
        }
        if let Some(l) = &labels {
            if l.len() != num_nodes {
                return Err(Error::Validation(format!(
                    "labels has {} entries but num_nodes = {}",
                    l.len(),
                    num_nodes
                )));
            }
            if let Some(bad) = l.iter().find(|&&x| x > 1) {
                return Err(Error::Validation(format!(
                    "label value {bad} is not 0 or 1"
                )));
            }
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }
        let mut canon = Vec::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= num_nodes {
                    return Err(Error::Index {
                        index: x,
                        num_nodes,
                    });
                }
            }
            if u == v {
                return Err(Error::Validation(format!("self-loop on node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self::from_canonical(num_nodes, canon, features, labels))
    }

    /// `edges` must already be sorted, deduplicated, `u < v`, in range.
    pub(crate) fn from_canonical(
        num_nodes: usize,
        edges: Vec<(usize, usize)>,
        features: DMatrix<f64>,
        labels: Option<Vec<u8>>,
    ) -> Self {
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for n in &mut neighbors {
            n.sort_unstable();
        }
        Graph {
            name: String::new(),
            num_nodes,
            edges,
            neighbors,
            features,
            labels,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges, each counted once.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.num_nodes {
            Ok(())
        } else {
            Err(Error::Index {
                index: node,
                num_nodes: self.num_nodes,
            })
        }
    }

    /// Same structure, new feature matrix.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Graph> {
        if features.shape() != self.features.shape() {
            return Err(Error::argument(format!(
                "feature shape {:?} does not match {:?}",
                features.shape(),
                self.features.shape()
            )));
        }
        Ok(Graph {
            features,
            ..self.clone()
        })
    }

    /// Same nodes and features, new edge set.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        Ok(Graph::new(
            self.num_nodes,
            edges,
            self.features.clone(),
            self.labels.clone(),
        )?
        .with_name(self.name.clone()))
    }

    pub fn with_labels(mut self, labels: Option<Vec<u8>>) -> Result<Graph> {
        if let Some(l) = &labels {
            if l.len() != self.num_nodes {
                return Err(Error::Validation(format!(
                    "labels has {} entries but num_nodes = {}",
                    l.len(),
                    self.num_nodes
                )));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        if self.features.nrows() != self.num_nodes {
            return Err(Error::Validation("feature row count differs from N".into()));
        }
        for w in self.edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Validation("edge list not strictly sorted".into()));
            }
        }
        for &(u, v) in &self.edges {
            if u >= v || v >= self.num_nodes {
                return Err(Error::Validation(format!("bad edge ({u}, {v})")));
            }
        }
        let mut half_degree_sum = 0;
        for (u, ns) in self.neighbors.iter().enumerate() {
            for &v in ns {
                if v == u {
                    return Err(Error::Validation(format!("self-loop on node {u}")));
                }
                if !self.has_edge(v, u) {
                    return Err(Error::Validation(format!("asymmetric edge ({u}, {v})")));
                }
            }
            half_degree_sum += ns.len();
        }
        if half_degree_sum != 2 * self.edges.len() {
            return Err(Error::Validation(
                "neighbor lists disagree with edge list".into(),
            ));
        }
        Ok(())
    }
}

/// `D^-1/2 (A + I) D^-1/2` on a node ordering, `D` the degree matrix of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(pub DMatrix<f64>);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }
}

/// Symmetrically normalized adjacency with self-loops.
///
/// With `node_subset`, the induced subgraph is built on that ordering
/// (position `p` holds node `node_subset[p]`). Repeated ids are not joined to
/// each other.
pub fn normalize_adjacency(
    g: &Graph,
    node_subset: Option<&[usize]>,
) -> Result<NormalizedAdjacency> {
    let all: Vec<usize>;
    let nodes = match node_subset {
        Some(s) => {
            for &v in s {
                g.check_node(v)?;
            }
            s
        }
        None => {
            all = (0..g.num_nodes()).collect();
            &all
        }
    };
    let n = nodes.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    if node_subset.is_none() {
        for &(u, v) in g.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
    } else {
        for p in 0..n {
            for q in (p + 1)..n {
                if nodes[p] != nodes[q] && g.has_edge(nodes[p], nodes[q]) {
                    a[(p, q)] = 1.0;
                    a[(q, p)] = 1.0;
                }
            }
        }
    }
    Ok(NormalizedAdjacency(normalize_dense(a)))
}

/// Normalizes a dense 0/1 matrix that already carries its self-loops.
pub(crate) fn normalize_dense(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / a.row(i).sum().sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] != 0.0 {
                a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
    }
    a
}
