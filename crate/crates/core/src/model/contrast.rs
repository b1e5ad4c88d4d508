//! Batched forward pass of the three contrasts and its exact gradient.
//!
//! For target `k` in view `v` with subgraph sample `S`:
//!
//! ```text
//! AX      = norm_adj(S) * masked_features(S)
//! z       = mean_rows(ReLU(AX * W_ns))          subgraph embedding
//! e       = ReLU(x_k * W_ns)                    node embedding
//! u       = ReLU((AX * W_nn)[0, :])             neighbor-aggregated target
//! e_hat   = ReLU(x_k * W_nn)
//! ```
//!
//! With `j` the paired negative of `k`, the node-subgraph scores are
//! `sigmoid(z_k B_ns e_k^T)` (positive) and `sigmoid(z_j B_ns e_k^T)`
//! (negative); the node-node scores are `sigmoid(u_k B_nn e_hat_k^T)` and
//! `sigmoid(u_k B_nn e_hat_j^T)`. The subgraph-subgraph term contrasts
//! `z1_k . z2_k` against `z1_k . z1_j` and `z1_k . z2_j`.

use nalgebra::{DMatrix, RowDVector};

use super::{bilinear_logit, sigmoid, ss_term, Gradients, LossWeights, Parameters, SCORE_CLIP};
use crate::augment::SubgraphSample;
use crate::error::{Error, Result};

/// Subgraph samples of every batch target in both views plus the negative pairing.
#[derive(Debug, Clone)]
pub struct ContrastBatch {
    /// `samples[v][k]`: view `v` (0 = original, 1 = augmented) subgraph of target `k`.
    pub samples: [Vec<SubgraphSample>; 2],
    /// `negatives[k]`: batch position of the node paired with target `k`.
    pub negatives: Vec<usize>,
}

impl ContrastBatch {
    pub fn new(samples: [Vec<SubgraphSample>; 2], negatives: Vec<usize>) -> Result<Self> {
        let b = negatives.len();
        if samples[0].len() != b || samples[1].len() != b {
            return Err(Error::argument(format!(
                "batch has {} / {} samples per view but {b} negatives",
                samples[0].len(),
                samples[1].len()
            )));
        }
        for (k, &j) in negatives.iter().enumerate() {
            if j >= b || j == k {
                return Err(Error::argument(format!(
                    "target {k} is paired with invalid negative position {j}"
                )));
            }
        }
        if let Some(k) = (0..b).find(|&k| samples[1][k].target() != samples[0][k].target()) {
            return Err(Error::argument(format!(
                "views disagree on the target at batch position {k}"
            )));
        }
        Ok(ContrastBatch { samples, negatives })
    }

    pub fn len(&self) -> usize {
        self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.negatives.is_empty()
    }

    /// Same batch with the two views exchanged.
    pub fn swapped_views(&self) -> Self {
        ContrastBatch {
            samples: [self.samples[1].clone(), self.samples[0].clone()],
            negatives: self.negatives.clone(),
        }
    }
}

/// Per-target positive/negative similarities for one view.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchScores {
    pub ns_pos: Vec<f64>,
    pub ns_neg: Vec<f64>,
    /// Empty when the node-node branch is inactive.
    pub nn_pos: Vec<f64>,
    pub nn_neg: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ViewLosses {
    pub ns: f64,
    pub nn: f64,
}

#[derive(Debug, Clone)]
pub struct ContrastBatchOutput {
    pub scores: [BranchScores; 2],
    pub view_losses: [ViewLosses; 2],
    pub l_ns: f64,
    pub l_nn: f64,
    pub l_ss: f64,
    pub joint: f64,
    /// Subgraph embeddings `z[v][k]`.
    pub z: [Vec<RowDVector<f64>>; 2],
}

/// Per-target anomaly score `s = s_neg - s_pos`, fused over views and
/// branches: `ns_w * (a s1 + (1-a) s2) + nn_w * (a s^1 + (1-a) s^2)`.
pub fn fuse_branch_scores(scores: &[BranchScores; 2], weights: &LossWeights) -> Vec<f64> {
    let n = scores[0].ns_pos.len();
    let (a1, a2) = (weights.view_weight(0), weights.view_weight(1));
    (0..n)
        .map(|k| {
            let ns1 = scores[0].ns_neg[k] - scores[0].ns_pos[k];
            let ns2 = scores[1].ns_neg[k] - scores[1].ns_pos[k];
            let mut s = weights.ns * (a1 * ns1 + a2 * ns2);
            if weights.nn != 0.0 {
                let nn1 = scores[0].nn_neg[k] - scores[0].nn_pos[k];
                let nn2 = scores[1].nn_neg[k] - scores[1].nn_pos[k];
                s += weights.nn * (a1 * nn1 + a2 * nn2);
            }
            s
        })
        .collect()
}

struct NodeCache {
    ax: DMatrix<f64>,
    h_ns_pre: DMatrix<f64>,
    z: RowDVector<f64>,
    x: RowDVector<f64>,
    e_pre: RowDVector<f64>,
    e: RowDVector<f64>,
    u_pre: RowDVector<f64>,
    u: RowDVector<f64>,
    ehat_pre: RowDVector<f64>,
    ehat: RowDVector<f64>,
}

impl NodeCache {
    fn build(s: &SubgraphSample, p: &Parameters, with_nn: bool) -> Result<Self> {
        if s.features_masked.ncols() != p.input_dim() {
            return Err(Error::argument(format!(
                "sample has {} features but the model expects {}",
                s.features_masked.ncols(),
                p.input_dim()
            )));
        }
        let ax = s.propagated();
        let h_ns_pre = &ax * &p.w_ns;
        let z = h_ns_pre.map(super::relu).row_mean();
        let x = s.target_features();
        let e_pre = &x * &p.w_ns;
        let e = e_pre.map(super::relu);
        let (u_pre, u, ehat_pre, ehat) = if with_nn {
            let u_pre = ax.row(0) * &p.w_nn;
            let ehat_pre = &x * &p.w_nn;
            (
                u_pre.clone(),
                u_pre.map(super::relu),
                ehat_pre.clone(),
                ehat_pre.map(super::relu),
            )
        } else {
            let empty = RowDVector::zeros(0);
            (empty.clone(), empty.clone(), empty.clone(), empty)
        };
        Ok(NodeCache {
            ax,
            h_ns_pre,
            z,
            x,
            e_pre,
            e,
            u_pre,
            u,
            ehat_pre,
            ehat,
        })
    }
}

/// Embeddings of one target's subgraph sample, without backward state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbeddings {
    pub z: RowDVector<f64>,
    pub e: RowDVector<f64>,
    /// Node-node embeddings; empty when that branch is inactive.
    pub u: RowDVector<f64>,
    pub ehat: RowDVector<f64>,
}

pub fn embed_sample(
    s: &SubgraphSample,
    params: &Parameters,
    with_nn: bool,
) -> Result<NodeEmbeddings> {
    let c = NodeCache::build(s, params, with_nn)?;
    Ok(NodeEmbeddings {
        z: c.z,
        e: c.e,
        u: c.u,
        ehat: c.ehat,
    })
}

/// Positive/negative similarities of every target given one embedding per
/// node and `negatives[k]`, the index of the node paired with `k`.
pub fn pair_scores(
    emb: &[NodeEmbeddings],
    negatives: &[usize],
    params: &Parameters,
    with_nn: bool,
) -> BranchScores {
    let mut sc = BranchScores::default();
    for (k, &j) in negatives.iter().enumerate() {
        sc.ns_pos
            .push(sigmoid(bilinear_logit(&emb[k].z, &emb[k].e, &params.b_ns)));
        sc.ns_neg
            .push(sigmoid(bilinear_logit(&emb[j].z, &emb[k].e, &params.b_ns)));
        if with_nn {
            sc.nn_pos.push(sigmoid(bilinear_logit(
                &emb[k].u,
                &emb[k].ehat,
                &params.b_nn,
            )));
            sc.nn_neg.push(sigmoid(bilinear_logit(
                &emb[k].u,
                &emb[j].ehat,
                &params.b_nn,
            )));
        }
    }
    sc
}

fn clip(s: f64) -> f64 {
    s.clamp(SCORE_CLIP, 1.0 - SCORE_CLIP)
}

fn is_clipped(s: f64) -> bool {
    !(SCORE_CLIP..=1.0 - SCORE_CLIP).contains(&s)
}

/// d(-ln clip(sigmoid(t)))/dt
fn dpos(s: f64) -> f64 {
    if is_clipped(s) {
        0.0
    } else {
        s - 1.0
    }
}

/// d(-ln(1 - clip(sigmoid(t))))/dt
fn dneg(s: f64) -> f64 {
    if is_clipped(s) {
        0.0
    } else {
        s
    }
}

fn relu_mask(pre: &RowDVector<f64>, grad: &RowDVector<f64>) -> RowDVector<f64> {
    grad.zip_map(pre, |g, p| if p > 0.0 { g } else { 0.0 })
}

/// A completed forward pass that retains what the backward pass needs.
pub struct ContrastForward<'a> {
    batch: &'a ContrastBatch,
    weights: LossWeights,
    cache: [Vec<NodeCache>; 2],
    pub output: ContrastBatchOutput,
}

impl<'a> ContrastForward<'a> {
    pub fn run(
        batch: &'a ContrastBatch,
        params: &Parameters,
        weights: LossWeights,
    ) -> Result<Self> {
        if batch.len() < 2 {
            return Err(Error::argument(
                "a contrast batch needs at least two targets",
            ));
        }
        let with_nn = weights.nn != 0.0;
        let b = batch.len();
        let bf = b as f64;
        let cache = [0, 1].map(|v| {
            batch.samples[v]
                .iter()
                .map(|s| NodeCache::build(s, params, with_nn))
                .collect::<Result<Vec<_>>>()
        });
        let [c0, c1] = cache;
        let cache = [c0?, c1?];

        let mut scores: [BranchScores; 2] = Default::default();
        let mut view_losses = [ViewLosses::default(); 2];
        for v in 0..2 {
            let c = &cache[v];
            let sc = &mut scores[v];
            let mut ns_loss = 0.0;
            let mut nn_loss = 0.0;
            for k in 0..b {
                let j = batch.negatives[k];
                let sp = sigmoid(bilinear_logit(&c[k].z, &c[k].e, &params.b_ns));
                let sn = sigmoid(bilinear_logit(&c[j].z, &c[k].e, &params.b_ns));
                ns_loss += -clip(sp).ln() - (1.0 - clip(sn)).ln();
                sc.ns_pos.push(sp);
                sc.ns_neg.push(sn);
                if with_nn {
                    let sp = sigmoid(bilinear_logit(&c[k].u, &c[k].ehat, &params.b_nn));
                    let sn = sigmoid(bilinear_logit(&c[k].u, &c[j].ehat, &params.b_nn));
                    nn_loss += -clip(sp).ln() - (1.0 - clip(sn)).ln();
                    sc.nn_pos.push(sp);
                    sc.nn_neg.push(sn);
                }
            }
            view_losses[v] = ViewLosses {
                ns: ns_loss / bf,
                nn: nn_loss / bf,
            };
        }
        let (a1, a2) = (weights.view_weight(0), weights.view_weight(1));
        let l_ns = a1 * view_losses[0].ns + a2 * view_losses[1].ns;
        let l_nn = a1 * view_losses[0].nn + a2 * view_losses[1].nn;

        let mut l_ss = 0.0;
        if weights.ss != 0.0 {
            for k in 0..b {
                let j = batch.negatives[k];
                let z1 = &cache[0][k].z;
                let term = ss_term(
                    z1.dot(&cache[1][k].z),
                    z1.dot(&cache[0][j].z),
                    z1.dot(&cache[1][j].z),
                    weights.ss_include_positive,
                );
                if !term.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite subgraph-subgraph loss for target node {}",
                        batch.samples[0][k].target()
                    )));
                }
                l_ss += term;
            }
            l_ss /= bf;
        }
        let joint = weights.ns * l_ns + weights.nn * l_nn + weights.ss * l_ss;
        if !joint.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite joint loss (ns {l_ns}, nn {l_nn}, ss {l_ss})"
            )));
        }
        let z = [0, 1].map(|v| cache[v].iter().map(|c| c.z.clone()).collect());
        Ok(ContrastForward {
            batch,
            weights,
            cache,
            output: ContrastBatchOutput {
                scores,
                view_losses,
                l_ns,
                l_nn,
                l_ss,
                joint,
                z,
            },
        })
    }

    /// Exact gradient of `output.joint` with respect to every parameter.
    pub fn backward(&self, params: &Parameters) -> Gradients {
        let w = &self.weights;
        let b = self.batch.len();
        let bf = b as f64;
        let h = params.hidden_dim();
        let with_nn = w.nn != 0.0;
        let mut grads = Parameters::zeros(params.input_dim(), h);

        let zero_rows = || vec![RowDVector::<f64>::zeros(h); b];
        let mut dz = [zero_rows(), zero_rows()];
        let mut de = [zero_rows(), zero_rows()];
        let mut du = [zero_rows(), zero_rows()];
        let mut dehat = [zero_rows(), zero_rows()];

        for v in 0..2 {
            let c = &self.cache[v];
            let sc = &self.output.scores[v];
            let scale = w.view_weight(v) / bf;
            let ns_scale = w.ns * scale;
            let nn_scale = w.nn * scale;
            for k in 0..b {
                let j = self.batch.negatives[k];
                if ns_scale != 0.0 {
                    // positive: z_k B e_k^T
                    let gp = ns_scale * dpos(sc.ns_pos[k]);
                    if gp != 0.0 {
                        dz[v][k] += (&c[k].e * params.b_ns.transpose()) * gp;
                        de[v][k] += (&c[k].z * &params.b_ns) * gp;
                        grads.b_ns += c[k].z.transpose() * &c[k].e * gp;
                    }
                    // negative: z_j B e_k^T
                    let gq = ns_scale * dneg(sc.ns_neg[k]);
                    if gq != 0.0 {
                        dz[v][j] += (&c[k].e * params.b_ns.transpose()) * gq;
                        de[v][k] += (&c[j].z * &params.b_ns) * gq;
                        grads.b_ns += c[j].z.transpose() * &c[k].e * gq;
                    }
                }
                if with_nn && nn_scale != 0.0 {
                    // positive: u_k B' e^_k^T
                    let gp = nn_scale * dpos(sc.nn_pos[k]);
                    if gp != 0.0 {
                        du[v][k] += (&c[k].ehat * params.b_nn.transpose()) * gp;
                        dehat[v][k] += (&c[k].u * &params.b_nn) * gp;
                        grads.b_nn += c[k].u.transpose() * &c[k].ehat * gp;
                    }
                    // negative: u_k B' e^_j^T
                    let gq = nn_scale * dneg(sc.nn_neg[k]);
                    if gq != 0.0 {
                        du[v][k] += (&c[j].ehat * params.b_nn.transpose()) * gq;
                        dehat[v][j] += (&c[k].u * &params.b_nn) * gq;
                        grads.b_nn += c[k].u.transpose() * &c[j].ehat * gq;
                    }
                }
            }
        }

        if w.ss != 0.0 {
            let scale = w.ss / bf;
            for k in 0..b {
                let j = self.batch.negatives[k];
                let z1k = &self.cache[0][k].z;
                let z2k = &self.cache[1][k].z;
                let z1j = &self.cache[0][j].z;
                let z2j = &self.cache[1][j].z;
                let pos = z1k.dot(z2k);
                let t1 = z1k.dot(z1j);
                let t2 = z1k.dot(z2j);
                let (p0, p1, p2) = if w.ss_include_positive {
                    let m = pos.max(t1).max(t2);
                    let (e0, e1, e2) = ((pos - m).exp(), (t1 - m).exp(), (t2 - m).exp());
                    let s = e0 + e1 + e2;
                    (e0 / s, e1 / s, e2 / s)
                } else {
                    let m = t1.max(t2);
                    let (e1, e2) = ((t1 - m).exp(), (t2 - m).exp());
                    (0.0, e1 / (e1 + e2), e2 / (e1 + e2))
                };
                let g1k = z2k * (p0 - 1.0) + z1j * p1 + z2j * p2;
                let g2k = z1k * (p0 - 1.0);
                let g1j = z1k * p1;
                let g2j = z1k * p2;
                dz[0][k] += g1k * scale;
                dz[1][k] += g2k * scale;
                dz[0][j] += g1j * scale;
                dz[1][j] += g2j * scale;
            }
        }

        for v in 0..2 {
            for (k, c) in self.cache[v].iter().enumerate() {
                let n = c.ax.nrows() as f64;
                if dz[v][k].iter().any(|&g| g != 0.0) {
                    // readout spreads dz/n to every row, ReLU gates it
                    let per_row = &dz[v][k] / n;
                    let dh = DMatrix::from_fn(c.h_ns_pre.nrows(), h, |r, col| {
                        if c.h_ns_pre[(r, col)] > 0.0 {
                            per_row[col]
                        } else {
                            0.0
                        }
                    });
                    grads.w_ns += c.ax.transpose() * dh;
                }
                let g = relu_mask(&c.e_pre, &de[v][k]);
                grads.w_ns += c.x.transpose() * g;
                if with_nn {
                    let g = relu_mask(&c.u_pre, &du[v][k]);
                    grads.w_nn += c.ax.row(0).transpose() * g;
                    let g = relu_mask(&c.ehat_pre, &dehat[v][k]);
                    grads.w_nn += c.x.transpose() * g;
                }
            }
        }
        grads
    }
}
