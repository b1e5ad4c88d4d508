//! Structural (clique) and contextual (far-feature swap) anomaly injection.

use rand::seq::index;
use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionConfig {
    pub n_structural: usize,
    pub n_feature: usize,
    /// Nodes per injected clique.
    pub clique_size: usize,
    /// Candidates inspected when picking the farthest feature row.
    pub candidate_pool: usize,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        InjectionConfig {
            n_structural: 0,
            n_feature: 0,
            clique_size: 15,
            candidate_pool: 50,
        }
    }
}

impl InjectionConfig {
    /// Half structural, half feature anomalies for an even `total`.
    pub fn balanced(total: usize) -> Result<Self> {
        if !total.is_multiple_of(2) {
            return Err(Error::argument(format!(
                "anomaly total {total} cannot be split evenly between structural and feature anomalies"
            )));
        }
        Ok(InjectionConfig {
            n_structural: total / 2,
            n_feature: total / 2,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnomalyLabels {
    pub structural: Vec<usize>,
    pub feature: Vec<usize>,
    pub all: Vec<usize>,
}

/// Injects `n_structural` clique members and `n_feature` feature outliers.
///
/// All anomaly nodes are drawn disjointly from nodes not already labeled
/// anomalous. The returned graph carries labels (existing labels are kept).
pub fn inject_anomalies<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &InjectionConfig,
    rng: &mut R,
) -> Result<(Graph, AnomalyLabels)> {
    let InjectionConfig {
        n_structural,
        n_feature,
        clique_size,
        candidate_pool,
    } = *cfg;
    if n_structural > 0 && (clique_size == 0 || n_structural % clique_size != 0) {
        return Err(Error::argument(format!(
            "n_structural = {n_structural} is not divisible by clique size {clique_size}"
        )));
    }
    if n_structural > 0 && clique_size < 2 {
        return Err(Error::argument("clique size must be at least 2"));
    }
    let n = g.num_nodes();
    let existing = g.labels();
    let pool: Vec<usize> = (0..n)
        .filter(|&i| existing.is_none_or(|l| l[i] == 0))
        .collect();
    let wanted = n_structural + n_feature;
    if wanted > pool.len() {
        return Err(Error::argument(format!(
            "requested {wanted} anomalies but only {} unlabeled nodes are available",
            pool.len()
        )));
    }
    if n_feature > 0 && n < 2 {
        return Err(Error::argument("feature anomalies need at least two nodes"));
    }

    let chosen: Vec<usize> = index::sample(rng, pool.len(), wanted)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    let (structural, feature) = chosen.split_at(n_structural);

    let mut edges = g.edges().to_vec();
    for clique in structural.chunks(clique_size) {
        for (a, &u) in clique.iter().enumerate() {
            for &v in &clique[a + 1..] {
                if !g.has_edge(u, v) {
                    edges.push((u.min(v), u.max(v)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let original = g.features();
    let mut features = original.clone();
    let k = candidate_pool.min(n - 1);
    for &i in feature {
        let xi = original.row(i);
        let mut best: Option<(usize, f64)> = None;
        // sample from the N-1 other nodes by skipping over i
        for c in index::sample(rng, n - 1, k) {
            let j = if c >= i { c + 1 } else { c };
            let dist = (original.row(j) - xi).norm();
            if best.is_none_or(|(_, bd)| dist > bd) {
                best = Some((j, dist));
            }
        }
        if let Some((j, _)) = best {
            features.set_row(i, &original.row(j));
        }
    }

    let mut labels = existing.map_or_else(|| vec![0u8; n], |l| l.to_vec());
    for &v in &chosen {
        labels[v] = 1;
    }

    let mut structural = structural.to_vec();
    let mut feature = feature.to_vec();
    structural.sort_unstable();
    feature.sort_unstable();
    let mut all = chosen;
    all.sort_unstable();

    let out = Graph::from_canonical(n, edges, features, Some(labels)).with_name(g.name());
    Ok((
        out,
        AnomalyLabels {
            structural,
            feature,
            all,
        },
    ))
}
