//! AUC/ROC evaluation and ablation runs.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::augment::AugmentMethod;
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::ContrastVariant;
use crate::score::score;
use crate::train::train;

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::argument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::argument(format!(
            "label {} at node {i} is not 0 or 1",
            labels[i]
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::argument(format!("score at node {i} is NaN")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::argument(
            "auc needs at least one anomalous and one normal label",
        ));
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score; stable, so ties keep node order.
fn ascending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    idx
}

/// Mann-Whitney AUC with midranks for ties.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let order = ascending(scores);
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let mid = (i + j + 2) as f64 / 2.0;
        let group_pos = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += mid * group_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)`, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under `points`.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(to_err)?;
        w.write_record(["fpr", "tpr"]).map_err(to_err)?;
        for (f, t) in &self.points {
            w.write_record([format!("{f:?}"), format!("{t:?}")])
                .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Sweeps the threshold down through every distinct score.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut order = ascending(scores);
    order.reverse();
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: auc(scores, labels)?,
    })
}

/// One ablation setting: contrast scales and augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AblationVariant {
    pub contrast: ContrastVariant,
    pub augmentation: AugmentMethod,
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.contrast, self.augmentation)
    }
}

impl AblationVariant {
    /// Parses `ns+nn+ss` or `ns+nn+ss/gd`; the augmentation defaults to `default_aug`.
    pub fn parse(s: &str, default_aug: AugmentMethod) -> Result<Self> {
        let (contrast, aug) = match s.split_once('/') {
            Some((c, a)) => (c.parse()?, a.parse()?),
            None => (s.parse()?, default_aug),
        };
        Ok(AblationVariant {
            contrast,
            augmentation: aug,
        })
    }
}

impl FromStr for AblationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AblationVariant::parse(s, AugmentMethod::Em)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub augmentation: String,
    pub seed: u64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSummary {
    pub variant: AblationVariant,
    pub mean: f64,
    pub median: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub summary: Vec<AblationSummary>,
}

impl AblationTable {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let to_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(to_err)?;
        w.write_record(["variant", "augmentation", "seed", "auc"])
            .map_err(to_err)?;
        for r in &self.rows {
            w.write_record([
                r.variant.clone(),
                r.augmentation.clone(),
                r.seed.to_string(),
                format!("{:?}", r.auc),
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn summary_for(&self, variant: AblationVariant) -> Option<&AblationSummary> {
        self.summary.iter().find(|s| s.variant == variant)
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Trains, scores and evaluates every `(variant, seed)` pair.
///
/// Each run uses `hp` with the variant's contrasts and augmentation and
/// the given seed; runs are independent and execute in parallel.
pub fn run_ablation(
    g: &Graph,
    hp: &Hyperparams,
    variants: &[AblationVariant],
    seeds: &[u64],
) -> Result<AblationTable> {
    let labels = g
        .labels()
        .ok_or_else(|| Error::argument("ablation needs a labeled graph"))?;
    if variants.is_empty() || seeds.is_empty() {
        return Err(Error::argument(
            "ablation needs at least one variant and one seed",
        ));
    }
    let jobs: Vec<(AblationVariant, u64)> = variants
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let mut run = hp.clone();
            run.variant = v.contrast;
            run.augmentation.method = v.augmentation;
            run.seed = seed;
            let ctx = |e: Error| e.context(format!("variant {v}, seed {seed}"));
            let model = train(g, &run).map_err(ctx)?;
            let table = score(g, &model.params, &run).map_err(ctx)?;
            Ok(AblationRow {
                variant: v.contrast.to_string(),
                augmentation: v.augmentation.to_string(),
                seed,
                auc: auc(&table.final_scores, labels)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = variants
        .iter()
        .map(|&v| {
            let aucs: Vec<f64> = rows
                .iter()
                .filter(|r| {
                    r.variant == v.contrast.as_str() && r.augmentation == v.augmentation.as_str()
                })
                .map(|r| r.auc)
                .collect();
            AblationSummary {
                variant: v,
                mean: aucs.iter().sum::<f64>() / aucs.len() as f64,
                median: median(&aucs),
                runs: aucs.len(),
            }
        })
        .collect();
    Ok(AblationTable { rows, summary })
}
