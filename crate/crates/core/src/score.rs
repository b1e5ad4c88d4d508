//! Multi-round anomaly scoring.
//!
//! Each round draws fresh views, subgraphs and negative partners, scores
//! every node as `s_neg - s_pos` per branch and view, and fuses them. The
//! final score is the per-node mean over rounds plus the population
//! standard deviation.

use std::path::Path;

use rayon::prelude::*;

use crate::augment::rwr_subgraph;
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{
    embed_sample, fuse_branch_scores, pair_scores, BranchScores, LossWeights, Parameters,
};
use crate::rng::{stream, Purpose};
use crate::train::{pair_negatives, second_view, PHASE_SCORE};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    /// `rounds[r][i]`: fused score of node `i` in round `r`.
    pub rounds: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `mean + std`, the anomaly score (higher is more anomalous).
    pub final_scores: Vec<f64>,
}

/// Mean plus population standard deviation over rounds.
pub fn aggregate_scores(rounds: Vec<Vec<f64>>) -> Result<ScoreTable> {
    let r = rounds.len();
    if r == 0 {
        return Err(Error::argument("cannot aggregate zero rounds"));
    }
    let n = rounds[0].len();
    if n == 0 || rounds.iter().any(|row| row.len() != n) {
        return Err(Error::argument(
            "score rounds must be non-empty and equally long",
        ));
    }
    let rf = r as f64;
    let mut mean = vec![0.0; n];
    for row in &rounds {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rf);
    let mut var = vec![0.0; n];
    for row in &rounds {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std: Vec<f64> = var.into_iter().map(|v| (v / rf).sqrt()).collect();
    let final_scores = mean.iter().zip(&std).map(|(m, s)| m + s).collect();
    Ok(ScoreTable {
        rounds,
        mean,
        std,
        final_scores,
    })
}

/// Raw positive/negative similarities of every node in one round.
pub fn round_branch_scores(
    g: &Graph,
    params: &Parameters,
    hp: &Hyperparams,
    round: usize,
) -> Result<[BranchScores; 2]> {
    params.validate()?;
    if params.input_dim() != g.feature_dim() {
        return Err(Error::argument(format!(
            "model expects {} features but the graph has {}",
            params.input_dim(),
            g.feature_dim()
        )));
    }
    let n = g.num_nodes();
    if n < 2 {
        return Err(Error::argument("scoring needs at least 2 nodes"));
    }
    let step = round as u64;
    let view2 = second_view(g, hp, PHASE_SCORE, step)?;
    let views = [g, &view2];
    let with_nn = hp.loss_weights().nn != 0.0;
    let negatives = pair_negatives(
        n,
        &mut stream(hp.seed, Purpose::Pairing, &[PHASE_SCORE, step]),
    )?;
    let mut out: [BranchScores; 2] = Default::default();
    for (v, slot) in out.iter_mut().enumerate() {
        let emb = (0..n)
            .into_par_iter()
            .map(|node| {
                let mut rng = stream(
                    hp.seed,
                    Purpose::Sample,
                    &[PHASE_SCORE, step, node as u64, v as u64],
                );
                let s = rwr_subgraph(views[v], node, hp.subgraph_size, hp.restart, &mut rng)?;
                embed_sample(&s, params, with_nn)
            })
            .collect::<Result<Vec<_>>>()?;
        *slot = pair_scores(&emb, &negatives, params, with_nn);
    }
    Ok(out)
}

/// Fused per-node scores of one round.
pub fn score_round(
    g: &Graph,
    params: &Parameters,
    hp: &Hyperparams,
    round: usize,
) -> Result<Vec<f64>> {
    let branches = round_branch_scores(g, params, hp, round)?;
    Ok(fuse_branch_scores(&branches, &hp.loss_weights()))
}

/// Fuses the four branch differences of a node.
///
/// `ns` and `nn` hold the per-view `s_neg - s_pos` values.
pub fn fuse_scores(ns: [f64; 2], nn: [f64; 2], alpha: f64, beta: f64) -> f64 {
    let w = LossWeights::new(alpha, beta, 0.0);
    let s = alpha * ns[0] + (1.0 - alpha) * ns[1];
    let s_hat = alpha * nn[0] + (1.0 - alpha) * nn[1];
    w.ns * s + w.nn * s_hat
}

/// Runs `hp.rounds` rounds (in parallel) and aggregates them.
pub fn score(g: &Graph, params: &Parameters, hp: &Hyperparams) -> Result<ScoreTable> {
    hp.validate()?;
    let rounds = (0..hp.rounds)
        .into_par_iter()
        .map(|r| score_round(g, params, hp, r).map_err(|e| e.context(format!("round {r}"))))
        .collect::<Result<Vec<_>>>()?;
    aggregate_scores(rounds)
}

/// Scores CSV: `node_id,score[,label]`.
pub fn write_scores_csv(
    table: &ScoreTable,
    labels: Option<&[u8]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    match labels {
        Some(_) => w.write_record(["node_id", "score", "label"]),
        None => w.write_record(["node_id", "score"]),
    }
    .map_err(to_err)?;
    for (i, s) in table.final_scores.iter().enumerate() {
        let id = i.to_string();
        let score = format!("{s:?}");
        match labels {
            Some(l) => w.write_record([id, score, l[i].to_string()]),
            None => w.write_record([id, score]),
        }
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a scores CSV back as `(scores, labels)`; labels only if every row has one.
pub fn read_scores_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Option<Vec<u8>>)> {
    let path = path.as_ref();
    let schema = |row: usize, message: String| Error::Schema {
        context: format!("{} row {row}", path.display()),
        message,
    };
    let mut r =
        csv::Reader::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let headers = r.headers().map_err(|e| schema(0, e.to_string()))?.clone();
    if headers.get(0) != Some("node_id") || headers.get(1) != Some("score") {
        return Err(schema(0, "expected header node_id,score[,label]".into()));
    }
    let has_label = headers.get(2) == Some("label");
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| schema(row + 1, e.to_string()))?;
        let id: usize = rec
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| schema(row + 1, "bad node_id".into()))?;
        if id != row {
            return Err(schema(row + 1, format!("node_id {id} out of order")));
        }
        let s: f64 = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| schema(row + 1, "bad score".into()))?;
        scores.push(s);
        if has_label {
            let l: u8 = rec
                .get(2)
                .and_then(|s| s.parse().ok())
                .filter(|&l| l <= 1)
                .ok_or_else(|| schema(row + 1, "bad label".into()))?;
            labels.push(l);
        }
    }
    Ok((scores, has_label.then_some(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_synthetic, SyntheticConfig};
    use crate::train::init_parameters;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_round_has_zero_std() {
        let t = aggregate_scores(vec![vec![0.1, -0.4]]).unwrap();
        assert_eq!(t.final_scores, vec![0.1, -0.4]);
        assert_eq!(t.std, vec![0.0, 0.0]);
    }

    #[test]
    fn two_round_hand_example() {
        let t = aggregate_scores(vec![vec![0.1], vec![0.3]]).unwrap();
        assert_abs_diff_eq!(t.mean[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(t.std[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(t.final_scores[0], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn constant_rounds() {
        let t = aggregate_scores(vec![vec![0.25]; 7]).unwrap();
        assert_eq!(t.final_scores, vec![0.25]);
        assert!(aggregate_scores(vec![]).is_err());
        assert!(aggregate_scores(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn fusion_examples() {
        assert_eq!(fuse_scores([0.0; 2], [0.0; 2], 0.7, 0.4), 0.0);
        let eps = 1e-6;
        let strong = 2.0 * eps - 1.0;
        assert_abs_diff_eq!(
            fuse_scores([strong; 2], [strong; 2], 0.7, 0.4),
            strong,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            fuse_scores([0.2, 0.4], [0.6, 0.0], 0.9, 0.3),
            0.444,
            epsilon = 1e-15
        );
    }

    fn setup() -> (Graph, Hyperparams, Parameters) {
        let g = generate_synthetic(
            &SyntheticConfig::new(50, 5, 2).with_probabilities(0.15, 0.01),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let hp = Hyperparams {
            hidden_dim: 6,
            rounds: 4,
            seed: 3,
            ..Hyperparams::default()
        };
        let p = init_parameters(&g, &hp);
        (g, hp, p)
    }

    #[test]
    fn scores_bounded_and_read_only() {
        let (g, hp, p) = setup();
        let sum = p.checksum();
        let t = score(&g, &p, &hp).unwrap();
        assert_eq!(p.checksum(), sum);
        assert_eq!(t.rounds.len(), 4);
        for row in &t.rounds {
            assert!(row.iter().all(|&s| s > -1.0 && s < 1.0));
        }
        for i in 0..50 {
            assert!(t.final_scores[i] >= t.mean[i]);
        }
    }

    #[test]
    fn scoring_independent_of_thread_count() {
        let (g, hp, p) = setup();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| score(&g, &p, &hp).unwrap());
        let b = many.install(|| score(&g, &p, &hp).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (g, hp, _) = setup();
        let wrong = Parameters::zeros(3, 6);
        assert!(matches!(
            score_round(&g, &wrong, &hp, 0),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let t = aggregate_scores(vec![vec![0.1, 1.0 / 3.0, -0.2]]).unwrap();
        write_scores_csv(&t, Some(&[0, 1, 0]), &path).unwrap();
        let (s, l) = read_scores_csv(&path).unwrap();
        assert_eq!(s, t.final_scores);
        assert_eq!(l.unwrap(), vec![0, 1, 0]);
        write_scores_csv(&t, None, &path).unwrap();
        let (_, l) = read_scores_csv(&path).unwrap();
        assert!(l.is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn aggregation_is_round_permutation_invariant(
                rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 1..8),
                rot in 0usize..8,
            ) {
                let a = aggregate_scores(rows.clone()).unwrap();
                let mut rotated = rows.clone();
                let k = rot % rotated.len();
                rotated.rotate_left(k);
                rotated.reverse();
                let b = aggregate_scores(rotated).unwrap();
                for i in 0..5 {
                    prop_assert!((a.final_scores[i] - b.final_scores[i]).abs() < 1e-12);
                    prop_assert!(a.std[i] >= 0.0);
                }
            }
        }
    }
}
