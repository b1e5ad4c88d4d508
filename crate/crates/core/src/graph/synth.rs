//! Stochastic block model graphs with block-dependent Gaussian features.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_nodes: usize,
    pub feature_dim: usize,
    pub num_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Std of the per-block mean entries.
    pub mean_scale: f64,
    /// Std of the per-node noise around the block mean.
    pub feature_noise: f64,
}

impl SyntheticConfig {
    pub fn new(num_nodes: usize, feature_dim: usize, num_blocks: usize) -> Self {
        SyntheticConfig {
            num_nodes,
            feature_dim,
            num_blocks,
            p_in: 0.05,
            p_out: 0.002,
            mean_scale: 1.0,
            feature_noise: 0.5,
        }
    }

    pub fn with_probabilities(mut self, p_in: f64, p_out: f64) -> Self {
        self.p_in = p_in;
        self.p_out = p_out;
        self
    }

    /// Block of node `i`; blocks are contiguous and differ in size by at most one.
    pub fn block_of(&self, i: usize) -> usize {
        let base = self.num_nodes / self.num_blocks;
        let extra = self.num_nodes % self.num_blocks;
        let big = extra * (base + 1);
        if i < big {
            i / (base + 1)
        } else {
            extra + (i - big) / base
        }
    }
}

pub fn generate_synthetic<R: Rng + ?Sized>(cfg: &SyntheticConfig, rng: &mut R) -> Result<Graph> {
    let n = cfg.num_nodes;
    if cfg.num_blocks == 0 || n < cfg.num_blocks {
        return Err(Error::argument(format!(
            "need num_nodes >= num_blocks >= 1 (got {n} nodes, {} blocks)",
            cfg.num_blocks
        )));
    }
    let (p_in, p_out) = (cfg.p_in, cfg.p_out);
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out >= p_in {
        return Err(Error::argument(format!(
            "need 0 <= p_out < p_in <= 1 (got p_in = {p_in}, p_out = {p_out})"
        )));
    }
    if !(cfg.mean_scale >= 0.0 && cfg.feature_noise >= 0.0) {
        return Err(Error::argument("feature scales must be non-negative"));
    }

    let block: Vec<usize> = (0..n).map(|i| cfg.block_of(i)).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if block[u] == block[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }

    let d = cfg.feature_dim;
    let means = DMatrix::<f64>::from_fn(cfg.num_blocks, d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut *rng);
        cfg.mean_scale * z
    });
    let mut features = DMatrix::<f64>::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut *rng);
            features[(i, j)] = means[(block[i], j)] + cfg.feature_noise * noise;
        }
    }
    Ok(Graph::from_canonical(n, edges, features, None).with_name("sbm"))
}
