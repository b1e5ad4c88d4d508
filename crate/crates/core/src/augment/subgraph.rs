//! Random walk with restart (RWR) neighborhood sampling.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, Graph};

/// Walk steps allowed per requested node before padding.
pub const STEP_CAP_FACTOR: usize = 20;

/// A fixed-size neighborhood around a target node.
///
/// `nodes[0]` is the target; when the walk finds fewer than `size - 1`
/// distinct neighbors the list is padded with the target id, and padded
/// positions are isolated (self-loop only) with zero features.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphSample {
    pub nodes: Vec<usize>,
    /// Number of leading positions holding real (non-padded) nodes.
    pub distinct: usize,
    pub norm_adj: DMatrix<f64>,
    /// Features with the target row zeroed.
    pub features_masked: DMatrix<f64>,
    pub features_full: DMatrix<f64>,
}

impl SubgraphSample {
    pub fn target(&self) -> usize {
        self.nodes[0]
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    /// The target's own (unmasked) feature row.
    pub fn target_features(&self) -> nalgebra::RowDVector<f64> {
        self.features_full.row(0).into_owned()
    }

    /// `norm_adj * features_masked`, the weight-independent half of the GCN layer.
    pub fn propagated(&self) -> DMatrix<f64> {
        &self.norm_adj * &self.features_masked
    }
}

pub fn rwr_subgraph<R: Rng + ?Sized>(
    g: &Graph,
    target: usize,
    size: usize,
    restart: f64,
    rng: &mut R,
) -> Result<SubgraphSample> {
    g.check_node(target)?;
    if size == 0 {
        return Err(Error::argument("subgraph size must be at least 1"));
    }
    if !(restart > 0.0 && restart < 1.0) {
        return Err(Error::argument(format!(
            "restart probability {restart} is outside (0, 1)"
        )));
    }

    let mut nodes = Vec::with_capacity(size);
    nodes.push(target);
    let wanted = size - 1;
    if wanted > 0 && g.degree(target) > 0 {
        let mut current = target;
        for _ in 0..STEP_CAP_FACTOR * size {
            if nodes.len() > wanted {
                break;
            }
            if rng.random::<f64>() < restart {
                current = target;
                continue;
            }
            let ns = g.neighbors(current);
            current = ns[rng.random_range(0..ns.len())];
            if current != target && !nodes.contains(&current) {
                nodes.push(current);
            }
        }
    }
    let distinct = nodes.len();
    nodes.resize(size, target);

    let induced = normalize_adjacency(g, Some(&nodes[..distinct]))?.into_inner();
    let mut norm_adj = DMatrix::<f64>::identity(size, size);
    norm_adj
        .view_mut((0, 0), (distinct, distinct))
        .copy_from(&induced);

    let d = g.feature_dim();
    let f = g.features();
    let features_full = DMatrix::from_fn(size, d, |p, j| f[(nodes[p], j)]);
    let mut features_masked = features_full.clone();
    features_masked.row_mut(0).fill(0.0);
    for p in distinct..size {
        features_masked.row_mut(p).fill(0.0);
    }

    Ok(SubgraphSample {
        nodes,
        distinct,
        norm_adj,
        features_masked,
        features_full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticConfig};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::{HashSet, VecDeque};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn reachable(g: &Graph, from: usize) -> HashSet<usize> {
        let mut seen = HashSet::from([from]);
        let mut q = VecDeque::from([from]);
        while let Some(u) = q.pop_front() {
            for &v in g.neighbors(u) {
                if seen.insert(v) {
                    q.push_back(v);
                }
            }
        }
        seen
    }

    #[test]
    fn size_one_is_target_only() {
        let g = Graph::new(3, [(0, 1)], DMatrix::from_element(3, 2, 1.0), None).unwrap();
        let s = rwr_subgraph(&g, 0, 1, 0.15, &mut rng(0)).unwrap();
        assert_eq!(s.nodes, vec![0]);
        assert!(s.features_masked.iter().all(|&x| x == 0.0));
        assert_eq!(s.norm_adj, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn isolated_target_is_padded() {
        let g = Graph::new(3, [(1, 2)], DMatrix::from_element(3, 2, 1.0), None).unwrap();
        let s = rwr_subgraph(&g, 0, 4, 0.15, &mut rng(0)).unwrap();
        assert_eq!(s.nodes, vec![0, 0, 0, 0]);
        assert_eq!(s.distinct, 1);
        assert_eq!(s.norm_adj, DMatrix::identity(4, 4));
        assert!(s.features_masked.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn small_component_pads_after_real_nodes() {
        let g = Graph::new(4, [(0, 1)], DMatrix::from_element(4, 1, 2.0), None).unwrap();
        let s = rwr_subgraph(&g, 0, 4, 0.15, &mut rng(1)).unwrap();
        assert_eq!(s.nodes, vec![0, 1, 0, 0]);
        approx::assert_abs_diff_eq!(s.norm_adj[(0, 1)], 0.5, epsilon = 1e-15);
        assert_eq!(s.norm_adj[(2, 2)], 1.0);
        assert_eq!(s.norm_adj[(0, 2)], 0.0);
        assert_eq!(
            s.features_masked.column(0).as_slice(),
            &[0.0, 2.0, 0.0, 0.0]
        );
    }

    #[test]
    fn unknown_target() {
        let g = Graph::new(2, [], DMatrix::zeros(2, 1), None).unwrap();
        assert!(matches!(
            rwr_subgraph(&g, 5, 4, 0.15, &mut rng(0)),
            Err(Error::Index { index: 5, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn samples_have_fixed_shape_and_reachable_nodes(seed in 0u64..10_000, size in 1usize..7, target in 0usize..60) {
            let g = generate_synthetic(&SyntheticConfig::new(60, 3, 3).with_probabilities(0.08, 0.01), &mut rng(seed / 7)).unwrap();
            let s = rwr_subgraph(&g, target, size, 0.15, &mut rng(seed)).unwrap();
            prop_assert_eq!(s.nodes.len(), size);
            prop_assert_eq!(s.features_masked.nrows(), size);
            prop_assert_eq!(s.nodes[0], target);
            prop_assert!(s.features_masked.row(0).iter().all(|&x| x == 0.0));
            let reach = reachable(&g, target);
            let real: HashSet<usize> = s.nodes[..s.distinct].iter().copied().collect();
            prop_assert_eq!(real.len(), s.distinct);
            for &v in &s.nodes[..s.distinct] {
                prop_assert!(reach.contains(&v));
            }
            for p in 1..s.distinct {
                prop_assert_eq!(s.features_masked.row(p), g.features().row(s.nodes[p]));
            }
            prop_assert_eq!(&s.norm_adj, &s.norm_adj.transpose());
            let again = rwr_subgraph(&g, target, size, 0.15, &mut rng(seed)).unwrap();
            prop_assert_eq!(s, again);
        }
    }
}
