//! Training loop: per-epoch view construction, RWR sampling, batching,
//! negative pairing, joint loss and one optimizer step per batch.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::augment::{augment, rwr_subgraph, AugmentMethod, SubgraphSample};
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Adam, ContrastBatch, ContrastForward, Parameters};
use crate::rng::{stream, Purpose};

/// Stream phase tags, so training and scoring never share randomness.
pub(crate) const PHASE_TRAIN: u64 = 0;
pub(crate) const PHASE_SCORE: u64 = 1;

/// Random partition of `0..n` into batches of size `batch_size`.
///
/// A trailing singleton is merged into the previous batch, since every
/// target needs a distinct negative partner.
pub fn make_batches<R: Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(Error::argument(format!(
            "need at least 2 nodes to batch, got {n}"
        )));
    }
    if batch_size < 2 {
        return Err(Error::argument(format!(
            "batch size must be at least 2, got {batch_size}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().unwrap();
        batches.last_mut().unwrap().extend(last);
    }
    Ok(batches)
}

/// For each position `k` of a batch of `len` targets, a uniformly drawn
/// partner position `j != k`. The same partner serves every contrast.
pub fn pair_negatives<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Vec<usize>> {
    if len < 2 {
        return Err(Error::argument(
            "negative pairing needs a batch of at least 2",
        ));
    }
    Ok((0..len)
        .map(|k| {
            let j = rng.random_range(0..len - 1);
            if j >= k {
                j + 1
            } else {
                j
            }
        })
        .collect())
}

/// Builds the augmented view for `(phase, step)`.
pub fn second_view(g: &Graph, hp: &Hyperparams, phase: u64, step: u64) -> Result<Graph> {
    let step = if hp.fixed_view { 0 } else { step };
    let mut rng = stream(hp.seed, Purpose::Augment, &[phase, step]);
    augment(g, &hp.augmentation, &mut rng)
}

/// One subgraph per node per view, each from its own RNG stream.
pub fn sample_views(
    views: [&Graph; 2],
    nodes: &[usize],
    hp: &Hyperparams,
    phase: u64,
    step: u64,
) -> Result<[Vec<SubgraphSample>; 2]> {
    let sample_view = |v: usize| -> Result<Vec<SubgraphSample>> {
        nodes
            .par_iter()
            .map(|&node| {
                let mut rng = stream(
                    hp.seed,
                    Purpose::Sample,
                    &[phase, step, node as u64, v as u64],
                );
                rwr_subgraph(views[v], node, hp.subgraph_size, hp.restart, &mut rng)
            })
            .collect()
    };
    Ok([sample_view(0)?, sample_view(1)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub l_ns: f64,
    pub l_nn: f64,
    pub l_ss: f64,
    pub joint: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Parameters,
    pub history: Vec<EpochLoss>,
}

pub fn init_parameters(g: &Graph, hp: &Hyperparams) -> Parameters {
    Parameters::init(
        g.feature_dim(),
        hp.hidden_dim,
        &mut stream(hp.seed, Purpose::Init, &[]),
    )
}

/// Trains from the seeded initialization.
pub fn train(g: &Graph, hp: &Hyperparams) -> Result<TrainOutcome> {
    train_with(g, hp, |_| {})
}

/// Like [`train`], calling `on_epoch` after every epoch.
pub fn train_with(
    g: &Graph,
    hp: &Hyperparams,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainOutcome> {
    hp.validate()?;
    let n = g.num_nodes();
    if n < 2 {
        return Err(Error::argument("training needs at least 2 nodes"));
    }
    let mut params = init_parameters(g, hp);
    let mut opt = Adam::new(hp.adam(), &params);
    let weights = hp.loss_weights();
    let mut history = Vec::with_capacity(hp.epochs);

    // diffusion is deterministic; no need to rebuild it every epoch
    let cached_view = if hp.fixed_view || hp.augmentation.method == AugmentMethod::Gd {
        Some(second_view(g, hp, PHASE_TRAIN, 0)?)
    } else {
        None
    };

    for epoch in 0..hp.epochs {
        let step = epoch as u64;
        let fresh;
        let view2 = match &cached_view {
            Some(v) => v,
            None => {
                fresh = second_view(g, hp, PHASE_TRAIN, step)
                    .map_err(|e| e.context(format!("epoch {epoch}")))?;
                &fresh
            }
        };
        let batches = make_batches(
            n,
            hp.batch_size,
            &mut stream(hp.seed, Purpose::Batches, &[step]),
        )?;

        let mut sums = [0.0f64; 4];
        for (bi, batch_nodes) in batches.iter().enumerate() {
            let ctx = |e: Error| e.context(format!("epoch {epoch}, batch {bi}"));
            let samples =
                sample_views([g, view2], batch_nodes, hp, PHASE_TRAIN, step).map_err(ctx)?;
            let negatives = pair_negatives(
                batch_nodes.len(),
                &mut stream(hp.seed, Purpose::Pairing, &[PHASE_TRAIN, step, bi as u64]),
            )?;
            let batch = ContrastBatch::new(samples, negatives).map_err(ctx)?;
            let fwd = ContrastForward::run(&batch, &params, weights).map_err(ctx)?;
            let grads = fwd.backward(&params);
            opt.step(&mut params, &grads);

            let out = &fwd.output;
            let w = batch_nodes.len() as f64;
            sums[0] += w * out.l_ns;
            sums[1] += w * out.l_nn;
            sums[2] += w * out.l_ss;
            sums[3] += w * out.joint;
        }
        let nf = n as f64;
        let record = EpochLoss {
            epoch: epoch + 1,
            l_ns: sums[0] / nf,
            l_nn: sums[1] / nf,
            l_ss: sums[2] / nf,
            joint: sums[3] / nf,
        };
        if !record.joint.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite loss at epoch {epoch}"
            )));
        }
        on_epoch(&record);
        history.push(record);
    }
    params.validate()?;
    Ok(TrainOutcome { params, history })
}

/// Training log as CSV: `epoch,l_ns,l_nn,l_ss,joint`.
pub fn write_training_log(history: &[EpochLoss], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for rec in history {
        w.serialize(rec).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
