use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// On-disk dataset document.
///
/// ```json
/// { "name": "cora", "num_nodes": 3, "features": [[0.0, 1.0], ...],
///   "edges": [[0, 1], [1, 2]], "labels": [0, 1, 0] }
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    #[serde(default)]
    pub name: String,
    pub num_nodes: usize,
    pub features: Vec<Vec<f64>>,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u8>>,
}

impl DatasetFile {
    pub fn from_graph(g: &Graph) -> Self {
        let f = g.features();
        DatasetFile {
            name: g.name().to_string(),
            num_nodes: g.num_nodes(),
            features: (0..f.nrows())
                .map(|i| f.row(i).iter().copied().collect())
                .collect(),
            edges: g.edges().iter().map(|&(u, v)| [u, v]).collect(),
            labels: g.labels().map(|l| l.to_vec()),
        }
    }

    pub fn into_graph(self) -> Result<Graph> {
        if self.features.len() != self.num_nodes {
            return Err(Error::Validation(format!(
                "features has {} rows but num_nodes = {}",
                self.features.len(),
                self.num_nodes
            )));
        }
        let d = self.features.first().map_or(0, Vec::len);
        if let Some((i, row)) = self.features.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::Schema {
                context: format!("features[{i}]"),
                message: format!("row has {} entries, expected {d}", row.len()),
            });
        }
        let features = DMatrix::from_fn(self.num_nodes, d, |i, j| self.features[i][j]);
        let g = Graph::new(
            self.num_nodes,
            self.edges.into_iter().map(|[u, v]| (u, v)),
            features,
            self.labels,
        )?;
        Ok(g.with_name(self.name))
    }
}

pub fn graph_from_json(text: &str, context: &str) -> Result<Graph> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| Error::Schema {
        context: format!("{context} line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    file.into_graph()
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_json(&text, &path.display().to_string())
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&DatasetFile::from_graph(g))
        .map_err(|e| Error::Numerical(format!("cannot serialize graph: {e}")))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
