//! Second-view construction and subgraph sampling.

mod subgraph;

pub use subgraph::{rwr_subgraph, SubgraphSample};

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph};

/// Diffusion entries at or below this weight never become edges.
pub const DIFFUSION_EPS: f64 = 1e-4;

/// Largest graph accepted by the dense diffusion solve.
pub const DIFFUSION_MAX_NODES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMethod {
    /// Edge modification: drop and add the same number of edges.
    Em,
    /// Gaussian noise on features.
    Gnf,
    /// Random feature masking.
    Fm,
    /// Personalized PageRank diffusion, sparsified to top-k neighbors.
    Gd,
}

impl AugmentMethod {
    pub const ALL: [AugmentMethod; 4] = [
        AugmentMethod::Em,
        AugmentMethod::Gnf,
        AugmentMethod::Fm,
        AugmentMethod::Gd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentMethod::Em => "em",
            AugmentMethod::Gnf => "gnf",
            AugmentMethod::Fm => "fm",
            AugmentMethod::Gd => "gd",
        }
    }
}

impl fmt::Display for AugmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugmentMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(AugmentMethod::Em),
            "gnf" => Ok(AugmentMethod::Gnf),
            "fm" => Ok(AugmentMethod::Fm),
            "gd" => Ok(AugmentMethod::Gd),
            other => Err(Error::argument(format!(
                "unknown augmentation '{other}' (expected em, gnf, fm or gd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub method: AugmentMethod,
    /// Proportion of edges modified by EM.
    pub edge_ratio: f64,
    /// Absolute noise std for GNF; `None` uses 0.1 times each feature column's std.
    pub noise_sigma: Option<f64>,
    pub mask_ratio: f64,
    pub teleport: f64,
    pub top_k: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            method: AugmentMethod::Em,
            edge_ratio: 0.2,
            noise_sigma: None,
            mask_ratio: 0.2,
            teleport: 0.15,
            top_k: 4,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::argument(format!("{name} = {x} is outside [0, 1]")))
            }
        };
        unit("edge_ratio", self.edge_ratio)?;
        unit("mask_ratio", self.mask_ratio)?;
        if !(self.teleport > 0.0 && self.teleport < 1.0) {
            return Err(Error::argument(format!(
                "teleport = {} is outside (0, 1)",
                self.teleport
            )));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::argument(format!("noise_sigma = {s} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Builds the second view according to `cfg.method`.
pub fn augment<R: Rng + ?Sized>(g: &Graph, cfg: &AugmentConfig, rng: &mut R) -> Result<Graph> {
    match cfg.method {
        AugmentMethod::Em => edge_modification(g, cfg.edge_ratio, rng),
        AugmentMethod::Gnf => match cfg.noise_sigma {
            Some(sigma) => gaussian_noise_features(g, sigma, rng),
            None => gaussian_noise_features_scaled(g, 0.1, rng),
        },
        AugmentMethod::Fm => feature_mask(g, cfg.mask_ratio, rng),
        AugmentMethod::Gd => graph_diffusion(g, cfg.teleport, cfg.top_k),
    }
}

/// Number of edges dropped (and added) by edge modification.
pub fn modified_edge_count(num_edges: usize, ratio: f64) -> usize {
    (ratio * num_edges as f64 / 2.0).round() as usize
}

/// Drops `round(P*M/2)` edges uniformly and adds as many uniformly chosen
/// non-edges of the input graph, keeping the edge count fixed.
pub fn edge_modification<R: Rng + ?Sized>(g: &Graph, ratio: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::argument(format!(
            "edge ratio {ratio} is outside [0, 1]"
        )));
    }
    let m = g.num_edges();
    let r = modified_edge_count(m, ratio);
    if r == 0 {
        return Ok(g.clone());
    }
    let n = g.num_nodes();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let non_edges = total_pairs - m;
    if non_edges < r {
        return Err(Error::Feasibility(format!(
            "need {r} non-edges to add but the graph has only {non_edges} (shortfall {})",
            r - non_edges
        )));
    }

    let dropped: HashSet<usize> = index::sample(rng, m, r).into_iter().collect();
    let density = m as f64 / total_pairs as f64;
    let added = if density > 0.5 {
        sample_non_edges_enumerated(g, r, rng)
    } else {
        match sample_non_edges_rejection(g, r, rng) {
            Some(a) => a,
            None => sample_non_edges_enumerated(g, r, rng),
        }
    };

    let edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| !dropped.contains(k))
        .map(|(_, &e)| e)
        .chain(added);
    g.with_edges(edges)
}

fn sample_non_edges_rejection<R: Rng + ?Sized>(
    g: &Graph,
    r: usize,
    rng: &mut R,
) -> Option<Vec<(usize, usize)>> {
    let n = g.num_nodes();
    let cap = 100 * r + 1000;
    let mut seen = HashSet::with_capacity(r);
    let mut out = Vec::with_capacity(r);
    for _ in 0..cap {
        if out.len() == r {
            break;
        }
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if !g.has_edge(e.0, e.1) && seen.insert(e) {
            out.push(e);
        }
    }
    (out.len() == r).then_some(out)
}

fn sample_non_edges_enumerated<R: Rng + ?Sized>(
    g: &Graph,
    r: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    let mut candidates = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if !g.has_edge(u, v) {
                candidates.push((u, v));
            }
        }
    }
    index::sample(rng, candidates.len(), r)
        .into_iter()
        .map(|k| candidates[k])
        .collect()
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every feature entry.
pub fn gaussian_noise_features<R: Rng + ?Sized>(
    g: &Graph,
    sigma: f64,
    rng: &mut R,
) -> Result<Graph> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::argument(format!("noise sigma {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(g.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::argument(e.to_string()))?;
    let f = g.features();
    let noisy = DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| f[(i, j)] + normal.sample(rng));
    g.with_features(noisy)
}

/// Per-column noise with std `scale * std(column)`.
pub fn gaussian_noise_features_scaled<R: Rng + ?Sized>(
    g: &Graph,
    scale: f64,
    rng: &mut R,
) -> Result<Graph> {
    let f = g.features();
    let n = f.nrows().max(1) as f64;
    let sigmas: Vec<f64> = f
        .column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let var = c.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            scale * var.sqrt()
        })
        .collect();
    let noisy = DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        f[(i, j)] + sigmas[j] * z
    });
    g.with_features(noisy)
}

/// Zeroes a uniformly random subset of `round(ratio * N * d)` feature entries.
pub fn feature_mask<R: Rng + ?Sized>(g: &Graph, ratio: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::argument(format!(
            "mask ratio {ratio} is outside [0, 1]"
        )));
    }
    let (rows, cols) = g.features().shape();
    let total = rows * cols;
    let count = (ratio * total as f64).round() as usize;
    if count == 0 {
        return Ok(g.clone());
    }
    let mut f = g.features().clone();
    for k in index::sample(rng, total, count) {
        f[(k / cols, k % cols)] = 0.0;
    }
    g.with_features(f)
}

/// Dense PPR diffusion `t (I - (1-t) Â)^-1` with `Â` the self-looped,
/// symmetrically normalized adjacency.
pub fn ppr_diffusion_matrix(g: &Graph, teleport: f64) -> Result<DMatrix<f64>> {
    if !(teleport > 0.0 && teleport < 1.0) {
        return Err(Error::argument(format!(
            "teleport {teleport} is outside (0, 1)"
        )));
    }
    let n = g.num_nodes();
    if n > DIFFUSION_MAX_NODES {
        return Err(Error::argument(format!(
            "graph diffusion is dense; {n} nodes exceeds the limit of {DIFFUSION_MAX_NODES}"
        )));
    }
    let a_hat = normalize_adjacency(g, None)?.into_inner();
    let system = DMatrix::<f64>::identity(n, n) - a_hat * (1.0 - teleport);
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Numerical("diffusion system is not positive definite".into()))?;
    let s = chol.solve(&(DMatrix::<f64>::identity(n, n) * teleport));
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "diffusion solve produced non-finite entries".into(),
        ));
    }
    Ok(s)
}

/// Unweighted graph whose edges are each node's `top_k` strongest
/// off-diagonal diffusion entries (above [`DIFFUSION_EPS`]), symmetrized.
pub fn graph_diffusion(g: &Graph, teleport: f64, top_k: usize) -> Result<Graph> {
    let s = ppr_diffusion_matrix(g, teleport)?;
    let n = g.num_nodes();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut row: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i && s[(i, j)] > DIFFUSION_EPS)
            .map(|j| (j, s[(i, j)]))
            .collect();
        row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        edges.extend(row.into_iter().take(top_k).map(|(j, _)| (i, j)));
    }
    g.with_edges(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn ring(n: usize) -> Graph {
        Graph::new(
            n,
            (0..n).map(|i| (i, (i + 1) % n)),
            DMatrix::from_fn(n, 4, |i, j| (i + j) as f64),
            None,
        )
        .unwrap()
    }

    fn edge_set(g: &Graph) -> BTreeSet<(usize, usize)> {
        g.edges().iter().copied().collect()
    }

    #[test]
    fn em_ten_edges() {
        let g = ring(10);
        let h = edge_modification(&g, 0.2, &mut rng(1)).unwrap();
        assert_eq!(h.num_edges(), 10);
        let a = edge_set(&g);
        let b = edge_set(&h);
        assert_eq!(a.difference(&b).count(), 1);
        assert_eq!(b.difference(&a).count(), 1);
        h.validate().unwrap();
    }

    #[test]
    fn em_zero_ratio_is_identity() {
        let g = ring(10);
        assert_eq!(edge_modification(&g, 0.0, &mut rng(1)).unwrap(), g);
    }

    #[test]
    fn em_infeasible_on_complete_graph() {
        let k4 = Graph::new(
            4,
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            DMatrix::zeros(4, 1),
            None,
        )
        .unwrap();
        match edge_modification(&k4, 0.5, &mut rng(0)) {
            Err(Error::Feasibility(msg)) => assert!(msg.contains("shortfall 2"), "{msg}"),
            other => panic!("expected feasibility error, got {other:?}"),
        }
    }

    #[test]
    fn em_dense_graph_uses_enumeration() {
        // K5 minus two edges: density 0.8
        let mut edges = Vec::new();
        for u in 0..5 {
            for v in (u + 1)..5 {
                edges.push((u, v));
            }
        }
        edges.retain(|&e| e != (0, 1) && e != (2, 3));
        let g = Graph::new(5, edges, DMatrix::zeros(5, 1), None).unwrap();
        let h = edge_modification(&g, 0.5, &mut rng(3)).unwrap();
        assert_eq!(h.num_edges(), 8);
        assert!(h.has_edge(0, 1) && h.has_edge(2, 3));
    }

    #[test]
    fn gaussian_noise_zero_and_reproducible() {
        let g = ring(6);
        assert_eq!(gaussian_noise_features(&g, 0.0, &mut rng(0)).unwrap(), g);
        let a = gaussian_noise_features(&g, 0.1, &mut rng(4)).unwrap();
        let b = gaussian_noise_features(&g, 0.1, &mut rng(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.features(), g.features());
        assert_eq!(a.edges(), g.edges());
    }

    #[test]
    fn gaussian_noise_mean_is_zero() {
        // 10^6 entries; sample mean std is sigma / 1000
        let sigma = 0.1;
        let g = Graph::new(1000, [], DMatrix::from_element(1000, 1000, 3.0), None).unwrap();
        let h = gaussian_noise_features(&g, sigma, &mut rng(11)).unwrap();
        let mean = (h.features() - g.features()).sum() / 1e6;
        assert!(mean.abs() < 3.0 * sigma / 1e3, "mean {mean}");
    }

    #[test]
    fn scaled_noise_respects_column_std() {
        // constant column has zero std and must stay untouched
        let f = DMatrix::from_fn(50, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let g = Graph::new(50, [], f, None).unwrap();
        let h = gaussian_noise_features_scaled(&g, 0.1, &mut rng(2)).unwrap();
        assert!(h.features().column(0).iter().all(|&x| x == 1.0));
        assert!(h.features().column(1) != g.features().column(1));
    }

    #[test]
    fn feature_mask_counts() {
        let g = Graph::new(4, [], DMatrix::from_element(4, 4, 1.0), None).unwrap();
        assert_eq!(feature_mask(&g, 0.0, &mut rng(0)).unwrap(), g);
        let all = feature_mask(&g, 1.0, &mut rng(0)).unwrap();
        assert!(all.features().iter().all(|&x| x == 0.0));
        let half = feature_mask(&g, 0.5, &mut rng(7)).unwrap();
        assert_eq!(half.features().iter().filter(|&&x| x == 0.0).count(), 8);
    }

    #[test]
    fn diffusion_isolated_node() {
        let g = Graph::new(1, [], DMatrix::zeros(1, 1), None).unwrap();
        let s = ppr_diffusion_matrix(&g, 0.15).unwrap();
        approx::assert_abs_diff_eq!(s[(0, 0)], 1.0, epsilon = 1e-12);
        assert_eq!(graph_diffusion(&g, 0.15, 3).unwrap().num_edges(), 0);
    }

    #[test]
    fn diffusion_two_nodes_keeps_edge() {
        let g = Graph::new(2, [(0, 1)], DMatrix::zeros(2, 1), None).unwrap();
        let s = ppr_diffusion_matrix(&g, 0.15).unwrap();
        // eigen-decomposition: S = Â + 0.15 (I - Â)
        approx::assert_abs_diff_eq!(s[(0, 1)], 0.425, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(s[(0, 0)], 0.575, epsilon = 1e-12);
        let h = graph_diffusion(&g, 0.15, 1).unwrap();
        assert_eq!(h.edges(), &[(0, 1)]);
    }

    #[test]
    fn diffusion_high_teleport_is_empty() {
        let g = ring(8);
        let h = graph_diffusion(&g, 1.0 - 1e-9, 3).unwrap();
        assert_eq!(h.num_edges(), 0);
        assert!(graph_diffusion(&g, 1.0, 3).is_err());
    }

    #[test]
    fn diffusion_rows_bounded_by_top_k() {
        let g = generate_synthetic(
            &SyntheticConfig::new(40, 2, 2).with_probabilities(0.3, 0.02),
            &mut rng(0),
        )
        .unwrap();
        let h = graph_diffusion(&g, 0.15, 2).unwrap();
        h.validate().unwrap();
        assert!(h.num_edges() <= 40 * 2);
        assert!(h.num_edges() >= 40);
    }

    #[test]
    fn augment_leaves_input_untouched() {
        let g = ring(12);
        let before = g.clone();
        for method in AugmentMethod::ALL {
            let cfg = AugmentConfig {
                method,
                ..Default::default()
            };
            augment(&g, &cfg, &mut rng(0)).unwrap();
            assert_eq!(g, before);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("GD".parse::<AugmentMethod>().unwrap(), AugmentMethod::Gd);
        assert!("xx".parse::<AugmentMethod>().is_err());
    }
}
