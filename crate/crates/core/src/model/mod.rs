//! Contrastive scorer: one-layer GCN/MLP encoders with shared weights,
//! bilinear discriminators, the three contrast losses and their gradients.

mod adam;
mod contrast;

pub use adam::{Adam, AdamConfig};
pub use contrast::{
    embed_sample, fuse_branch_scores, pair_scores, BranchScores, ContrastBatch,
    ContrastBatchOutput, ContrastForward, NodeEmbeddings, ViewLosses,
};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, RowDVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Hyperparams;
use crate::error::{Error, Result};

/// Lower/upper clip applied to sigmoid scores before taking logs.
pub const SCORE_CLIP: f64 = 1e-7;

/// Trainable matrices. `w_ns`/`w_nn` are `d x d'`, `b_ns`/`b_nn` are `d' x d'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub w_ns: DMatrix<f64>,
    pub b_ns: DMatrix<f64>,
    pub w_nn: DMatrix<f64>,
    pub b_nn: DMatrix<f64>,
}

/// Same layout as [`Parameters`], one gradient per matrix.
pub type Gradients = Parameters;

impl Parameters {
    pub fn zeros(d: usize, d_prime: usize) -> Self {
        Parameters {
            w_ns: DMatrix::zeros(d, d_prime),
            b_ns: DMatrix::zeros(d_prime, d_prime),
            w_nn: DMatrix::zeros(d, d_prime),
            b_nn: DMatrix::zeros(d_prime, d_prime),
        }
    }

    /// Fan-in uniform initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng + ?Sized>(d: usize, d_prime: usize, rng: &mut R) -> Self {
        let mut uniform = |rows: usize, cols: usize| {
            let bound = 1.0 / (rows.max(1) as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..=bound))
        };
        Parameters {
            w_ns: uniform(d, d_prime),
            b_ns: uniform(d_prime, d_prime),
            w_nn: uniform(d, d_prime),
            b_nn: uniform(d_prime, d_prime),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_ns.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_ns.ncols()
    }

    pub fn matrices(&self) -> [&DMatrix<f64>; 4] {
        [&self.w_ns, &self.b_ns, &self.w_nn, &self.b_nn]
    }

    pub fn matrices_mut(&mut self) -> [&mut DMatrix<f64>; 4] {
        [
            &mut self.w_ns,
            &mut self.b_ns,
            &mut self.w_nn,
            &mut self.b_nn,
        ]
    }

    pub const NAMES: [&'static str; 4] = ["W_ns", "B_ns", "W_nn", "B_nn"];

    pub fn validate(&self) -> Result<()> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        let expected = [(d, h), (h, h), (d, h), (h, h)];
        for ((m, want), name) in self.matrices().iter().zip(expected).zip(Self::NAMES) {
            if m.shape() != want {
                return Err(Error::argument(format!(
                    "{name} has shape {:?}, expected {want:?}",
                    m.shape()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        for m in self.matrices_mut() {
            m.fill(0.0);
        }
    }

    /// Order-sensitive digest of every parameter bit, for mutation checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for m in self.matrices() {
            for x in m.iter() {
                h ^= x.to_bits();
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Versioned model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub d: usize,
    pub d_prime: usize,
    #[serde(rename = "W_ns")]
    pub w_ns: Vec<Vec<f64>>,
    #[serde(rename = "B_ns")]
    pub b_ns: Vec<Vec<f64>>,
    #[serde(rename = "W_nn")]
    pub w_nn: Vec<Vec<f64>>,
    #[serde(rename = "B_nn")]
    pub b_nn: Vec<Vec<f64>>,
    /// Training configuration, so scoring can rebuild views the same way.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparams: Option<Hyperparams>,
}

pub const MODEL_VERSION: u32 = 1;

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(
    name: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Schema {
            context: name.to_string(),
            message: format!("expected a {nrows}x{ncols} matrix"),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn new(params: &Parameters, hyperparams: Option<Hyperparams>) -> Self {
        ModelFile {
            version: MODEL_VERSION,
            d: params.input_dim(),
            d_prime: params.hidden_dim(),
            w_ns: rows_of(&params.w_ns),
            b_ns: rows_of(&params.b_ns),
            w_nn: rows_of(&params.w_nn),
            b_nn: rows_of(&params.b_nn),
            hyperparams,
        }
    }

    pub fn parameters(&self) -> Result<Parameters> {
        if self.version != MODEL_VERSION {
            return Err(Error::Schema {
                context: "version".into(),
                message: format!("unsupported model version {}", self.version),
            });
        }
        let (d, h) = (self.d, self.d_prime);
        let p = Parameters {
            w_ns: matrix_from_rows("W_ns", &self.w_ns, d, h)?,
            b_ns: matrix_from_rows("B_ns", &self.b_ns, h, h)?,
            w_nn: matrix_from_rows("W_nn", &self.w_nn, d, h)?,
            b_nn: matrix_from_rows("B_nn", &self.b_nn, h, h)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model documents contain only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema {
            context: format!("model line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Which contrasts a model trains and scores with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContrastVariant {
    #[serde(rename = "ns")]
    Ns,
    #[serde(rename = "ns+ss")]
    NsSs,
    #[serde(rename = "ns+nn")]
    NsNn,
    #[serde(rename = "ns+nn+ss")]
    NsNnSs,
}

impl ContrastVariant {
    pub const ALL: [ContrastVariant; 4] = [
        ContrastVariant::Ns,
        ContrastVariant::NsSs,
        ContrastVariant::NsNn,
        ContrastVariant::NsNnSs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContrastVariant::Ns => "ns",
            ContrastVariant::NsSs => "ns+ss",
            ContrastVariant::NsNn => "ns+nn",
            ContrastVariant::NsNnSs => "ns+nn+ss",
        }
    }

    pub fn uses_nn(self) -> bool {
        matches!(self, ContrastVariant::NsNn | ContrastVariant::NsNnSs)
    }

    pub fn uses_ss(self) -> bool {
        matches!(self, ContrastVariant::NsSs | ContrastVariant::NsNnSs)
    }
}

impl fmt::Display for ContrastVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContrastVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase();
        ContrastVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == norm)
            .ok_or_else(|| {
                Error::argument(format!(
                    "unknown contrast variant '{s}' (expected ns, ns+ss, ns+nn or ns+nn+ss)"
                ))
            })
    }
}

/// Effective weights of the loss terms and score branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// View balance: view 1 gets `alpha`, view 2 gets `1 - alpha`.
    pub alpha: f64,
    /// Weight of the node-subgraph loss / score branch.
    pub ns: f64,
    /// Weight of the node-node loss / score branch.
    pub nn: f64,
    /// Weight of the subgraph-subgraph loss.
    pub ss: f64,
    /// Adds the positive pair to the subgraph-subgraph denominator
    /// (conventional InfoNCE form).
    pub ss_include_positive: bool,
}

impl LossWeights {
    /// Full model: `beta * NS + (1 - beta) * NN + gamma * SS`.
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        LossWeights {
            alpha,
            ns: beta,
            nn: 1.0 - beta,
            ss: gamma,
            ss_include_positive: false,
        }
    }

    /// Masks the branches a variant does not use.
    pub fn for_variant(variant: ContrastVariant, alpha: f64, beta: f64, gamma: f64) -> Self {
        let beta = if variant.uses_nn() { beta } else { 1.0 };
        let gamma = if variant.uses_ss() { gamma } else { 0.0 };
        LossWeights::new(alpha, beta, gamma)
    }

    pub fn view_weight(&self, view: usize) -> f64 {
        if view == 0 {
            self.alpha
        } else {
            1.0 - self.alpha
        }
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ReLU(norm_adj * h * w)`.
pub fn gcn_layer_forward(
    norm_adj: &DMatrix<f64>,
    h: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if norm_adj.nrows() != norm_adj.ncols()
        || norm_adj.ncols() != h.nrows()
        || h.ncols() != w.nrows()
    {
        return Err(Error::argument(format!(
            "gcn shapes do not chain: adj {:?}, h {:?}, w {:?}",
            norm_adj.shape(),
            h.shape(),
            w.shape()
        )));
    }
    Ok((norm_adj * h * w).map(relu))
}

/// `ReLU(x * w)`; pass the same `w` as the paired GCN branch.
pub fn mlp_forward(x: &RowDVector<f64>, w: &DMatrix<f64>) -> Result<RowDVector<f64>> {
    if x.len() != w.nrows() {
        return Err(Error::argument(format!(
            "mlp input has {} features but weight has {} rows",
            x.len(),
            w.nrows()
        )));
    }
    Ok((x * w).map(relu))
}

/// Row mean.
pub fn readout_mean(rows: &DMatrix<f64>) -> RowDVector<f64> {
    rows.row_mean()
}

/// `sigmoid(z * b * e^T)`.
pub fn bilinear_score(z: &RowDVector<f64>, e: &RowDVector<f64>, b: &DMatrix<f64>) -> f64 {
    sigmoid(bilinear_logit(z, e, b))
}

pub(crate) fn bilinear_logit(z: &RowDVector<f64>, e: &RowDVector<f64>, b: &DMatrix<f64>) -> f64 {
    (z * b).dot(e)
}

/// `(z1_i, z2_i, z1_j, z2_j)`: both views' subgraph embeddings of a target
/// and of its negative partner.
pub type SsQuad = (
    RowDVector<f64>,
    RowDVector<f64>,
    RowDVector<f64>,
    RowDVector<f64>,
);

/// Subgraph-subgraph loss averaged over targets.
///
/// The per-target term is
/// `-log(exp(z1_i.z2_i) / (exp(z1_i.z1_j) + exp(z1_i.z2_j)))`, the positive
/// pair absent from the denominator.
pub fn ss_contrast_loss(quads: &[SsQuad]) -> Result<f64> {
    if quads.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, (z1i, z2i, z1j, z2j)) in quads.iter().enumerate() {
        let term = ss_term(z1i.dot(z2i), z1i.dot(z1j), z1i.dot(z2j), false);
        if !term.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite subgraph-subgraph loss for target {i}"
            )));
        }
        total += term;
    }
    Ok(total / quads.len() as f64)
}

/// One subgraph-subgraph term via log-sum-exp.
pub(crate) fn ss_term(pos: f64, neg1: f64, neg2: f64, include_positive: bool) -> f64 {
    let logits: &[f64] = if include_positive {
        &[neg1, neg2, pos]
    } else {
        &[neg1, neg2]
    };
    log_sum_exp(logits) - pos
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `beta * l_ns + (1 - beta) * l_nn + gamma * l_ss` with `beta, gamma in (0, 1)`.
pub fn joint_loss(l_ns: f64, l_nn: f64, l_ss: f64, beta: f64, gamma: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::argument(format!("beta = {beta} is outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::argument(format!(
            "gamma = {gamma} is outside [0, 1)"
        )));
    }
    Ok(beta * l_ns + (1.0 - beta) * l_nn + gamma * l_ss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(xs: &[f64]) -> RowDVector<f64> {
        RowDVector::from_row_slice(xs)
    }

    #[test]
    fn gcn_identity_propagation() {
        let x = DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 3.0]);
        let out =
            gcn_layer_forward(&DMatrix::identity(1, 1), &x, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 0.0, 3.0]);
        let zeros = gcn_layer_forward(
            &DMatrix::identity(2, 2),
            &DMatrix::zeros(2, 3),
            &DMatrix::from_element(3, 2, 1.0),
        )
        .unwrap();
        assert!(zeros.iter().all(|&v| v == 0.0));
        assert!(gcn_layer_forward(
            &DMatrix::identity(2, 2),
            &DMatrix::zeros(3, 3),
            &DMatrix::zeros(3, 2)
        )
        .is_err());
    }

    #[test]
    fn gcn_matches_reference_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let h = DMatrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));
        let out = gcn_layer_forward(&a, &h, &w).unwrap();
        for i in 0..4 {
            for c in 0..5 {
                let mut acc = 0.0;
                for k in 0..4 {
                    for j in 0..3 {
                        acc += a[(i, k)] * h[(k, j)] * w[(j, c)];
                    }
                }
                assert!((out[(i, c)] - acc.max(0.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mlp_relu_clamps() {
        let w = DMatrix::identity(3, 3);
        assert_eq!(
            mlp_forward(&row(&[0.0, 0.0, 0.0]), &w).unwrap(),
            row(&[0.0, 0.0, 0.0])
        );
        assert_eq!(
            mlp_forward(&row(&[-1.0, 2.0, -3.0]), &w).unwrap(),
            row(&[0.0, 2.0, 0.0])
        );
        assert!(mlp_forward(&row(&[1.0]), &w).is_err());
    }

    #[test]
    fn mlp_weight_gradient_matches_finite_differences() {
        // d/dw sum(ReLU(x w)) = x^T 1[x w > 0]
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = RowDVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let pre = &x * &w;
        let eps = 1e-5;
        for i in 0..4 {
            for j in 0..3 {
                let analytic = if pre[j] > 0.0 { x[i] } else { 0.0 };
                let mut wp = w.clone();
                wp[(i, j)] += eps;
                let mut wm = w.clone();
                wm[(i, j)] -= eps;
                let fd = (mlp_forward(&x, &wp).unwrap().sum()
                    - mlp_forward(&x, &wm).unwrap().sum())
                    / (2.0 * eps);
                let err = (fd - analytic).abs() / analytic.abs().max(1e-12);
                assert!(
                    err < 1e-4 || (fd - analytic).abs() < 1e-10,
                    "{fd} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn readout_examples() {
        let same = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(readout_mean(&same), row(&[1.0, 2.0]));
        let two = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        assert_eq!(readout_mean(&two), row(&[1.0, 1.0]));
        let swapped = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        assert_eq!(readout_mean(&two), readout_mean(&swapped));
    }

    #[test]
    fn bilinear_examples() {
        let b = DMatrix::identity(2, 2);
        assert_eq!(
            bilinear_score(&row(&[1.0, -1.0]), &row(&[1.0, 1.0]), &b),
            0.5
        );
        assert_abs_diff_eq!(
            bilinear_score(&row(&[1.0, 0.0]), &row(&[1.0, 0.0]), &b),
            0.731_058_578_630_004_9,
            epsilon = 1e-15
        );
        assert_eq!(
            bilinear_score(
                &row(&[0.0, 0.0]),
                &row(&[5.0, 3.0]),
                &DMatrix::from_element(2, 2, 7.0)
            ),
            0.5
        );
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0).is_finite());
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn ss_loss_examples() {
        let zero = row(&[0.0, 0.0]);
        let l =
            ss_contrast_loss(&[(zero.clone(), zero.clone(), zero.clone(), zero.clone())]).unwrap();
        assert_abs_diff_eq!(l, std::f64::consts::LN_2, epsilon = 1e-15);

        // z1.z2 = 10, z1.z1j = z1.z2j = -10
        let z1 = row(&[1.0, 0.0]);
        let z2 = row(&[10.0, 0.0]);
        let neg = row(&[-10.0, 0.0]);
        let l = ss_contrast_loss(&[(z1.clone(), z2.clone(), neg.clone(), neg.clone())]).unwrap();
        let expected = -10.0 + (2.0 * (-10f64).exp()).ln();
        assert_abs_diff_eq!(l, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(l, -19.306_852_819_440_055, epsilon = 1e-12);

        // doubling embeddings changes the loss
        let l2 = ss_contrast_loss(&[(z1 * 2.0, z2 * 2.0, &neg * 2.0, &neg * 2.0)]).unwrap();
        assert!((l2 - l).abs() > 1.0);
    }

    #[test]
    fn ss_loss_reports_non_finite() {
        let inf = row(&[f64::INFINITY]);
        let one = row(&[1.0]);
        assert!(matches!(
            ss_contrast_loss(&[(one.clone(), one.clone(), one.clone(), one.clone()), (inf.clone(), one.clone(), one.clone(), one)]),
            Err(Error::Numerical(msg)) if msg.contains("target 1")
        ));
    }

    #[test]
    fn joint_loss_examples() {
        assert_eq!(joint_loss(1.0, 1.0, 7.0, 0.5, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            joint_loss(2.0, 1.0, 0.5, 0.3, 0.1).unwrap(),
            1.35,
            epsilon = 1e-15
        );
        assert!(joint_loss(1.0, 1.0, 1.0, 1.0, 0.1).is_err());
        assert!(joint_loss(1.0, 1.0, 1.0, 0.5, 1.5).is_err());
    }

    #[test]
    fn variants_parse_and_mask() {
        assert_eq!(
            "NS+NN+SS".parse::<ContrastVariant>().unwrap(),
            ContrastVariant::NsNnSs
        );
        assert!("nn".parse::<ContrastVariant>().is_err());
        let w = LossWeights::for_variant(ContrastVariant::Ns, 0.9, 0.3, 0.1);
        assert_eq!((w.ns, w.nn, w.ss), (1.0, 0.0, 0.0));
        let w = LossWeights::for_variant(ContrastVariant::NsSs, 0.9, 0.3, 0.1);
        assert_eq!((w.ns, w.nn, w.ss), (1.0, 0.0, 0.1));
        let w = LossWeights::for_variant(ContrastVariant::NsNn, 0.9, 0.3, 0.1);
        assert_eq!((w.ns, w.nn, w.ss), (0.3, 0.7, 0.0));
    }

    #[test]
    fn model_file_round_trip() {
        let p = Parameters::init(7, 5, &mut ChaCha8Rng::seed_from_u64(1));
        let text = ModelFile::new(&p, None).to_json();
        let back = ModelFile::from_json(&text).unwrap().parameters().unwrap();
        assert_eq!(p, back);
        assert_eq!(p.checksum(), back.checksum());
    }

    #[test]
    fn model_file_rejects_bad_shape_and_version() {
        let p = Parameters::init(3, 2, &mut ChaCha8Rng::seed_from_u64(1));
        let mut f = ModelFile::new(&p, None);
        f.w_ns.pop();
        assert!(f.parameters().is_err());
        let mut f = ModelFile::new(&p, None);
        f.version = 2;
        assert!(f.parameters().is_err());
    }
}
