//! Hyperparameters shared by training, scoring and the CLI config file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::model::{AdamConfig, ContrastVariant, LossWeights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Nodes per RWR subgraph, target included.
    pub subgraph_size: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    /// Scoring rounds.
    pub rounds: usize,
    /// View balance.
    pub alpha: f64,
    /// Node-subgraph vs node-node balance.
    pub beta: f64,
    /// Subgraph-subgraph loss weight.
    pub gamma: f64,
    pub lr: f64,
    /// RWR restart probability.
    pub restart: f64,
    pub augmentation: AugmentConfig,
    pub variant: ContrastVariant,
    /// Build the augmented view once per run instead of once per epoch.
    pub fixed_view: bool,
    /// Put the positive pair in the subgraph-subgraph denominator.
    pub ss_include_positive: bool,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            subgraph_size: 4,
            hidden_dim: 64,
            epochs: 400,
            batch_size: 300,
            rounds: 256,
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.1,
            lr: 1e-3,
            restart: 0.15,
            augmentation: AugmentConfig::default(),
            variant: ContrastVariant::NsNnSs,
            fixed_view: false,
            ss_include_positive: false,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("subgraph_size", self.subgraph_size),
            ("hidden_dim", self.hidden_dim),
            ("rounds", self.rounds),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::argument(format!("{name} must be at least 1")));
            }
        }
        if self.batch_size < 2 {
            return Err(Error::argument("batch_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::argument(format!(
                "alpha = {} is outside [0, 1]",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::argument(format!(
                "beta = {} is outside (0, 1)",
                self.beta
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::argument(format!(
                "gamma = {} is outside [0, 1)",
                self.gamma
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::argument(format!(
                "lr = {} must be positive",
                self.lr
            )));
        }
        if !(self.restart > 0.0 && self.restart < 1.0) {
            return Err(Error::argument(format!(
                "restart = {} is outside (0, 1)",
                self.restart
            )));
        }
        self.augmentation.validate()
    }

    pub fn loss_weights(&self) -> LossWeights {
        let mut w = LossWeights::for_variant(self.variant, self.alpha, self.beta, self.gamma);
        w.ss_include_positive = self.ss_include_positive;
        w
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let hp: Hyperparams = serde_json::from_str(text).map_err(|e| Error::Schema {
            context: format!("config line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        hp.validate()?;
        Ok(hp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("hyperparams serialize")
    }
}

/// Settings used for the public benchmark graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkPreset {
    pub name: &'static str,
    pub nodes: usize,
    pub edges: usize,
    pub attributes: usize,
    pub anomalies: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Reported AUC of the full three-contrast model with edge modification.
    pub reference_auc: f64,
}

pub const BENCHMARKS: [BenchmarkPreset; 6] = [
    BenchmarkPreset {
        name: "EAT",
        nodes: 399,
        edges: 5993,
        attributes: 203,
        anomalies: 30,
        alpha: 0.9,
        beta: 0.3,
        reference_auc: 0.7980,
    },
    BenchmarkPreset {
        name: "WebKB",
        nodes: 919,
        edges: 1662,
        attributes: 1703,
        anomalies: 60,
        alpha: 0.1,
        beta: 0.7,
        reference_auc: 0.8740,
    },
    BenchmarkPreset {
        name: "UAT",
        nodes: 1190,
        edges: 13599,
        attributes: 239,
        anomalies: 60,
        alpha: 0.7,
        beta: 0.1,
        reference_auc: 0.8451,
    },
    BenchmarkPreset {
        name: "Cora",
        nodes: 2708,
        edges: 5429,
        attributes: 1433,
        anomalies: 150,
        alpha: 0.9,
        beta: 0.3,
        reference_auc: 0.9237,
    },
    BenchmarkPreset {
        name: "UAI2010",
        nodes: 3067,
        edges: 28311,
        attributes: 4973,
        anomalies: 150,
        alpha: 0.7,
        beta: 0.5,
        reference_auc: 0.9262,
    },
    BenchmarkPreset {
        name: "Citation",
        nodes: 8935,
        edges: 15098,
        attributes: 6775,
        anomalies: 450,
        alpha: 0.5,
        beta: 0.5,
        reference_auc: 0.8138,
    },
];

pub fn benchmark_preset(name: &str) -> Option<&'static BenchmarkPreset> {
    BENCHMARKS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
}

impl BenchmarkPreset {
    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            alpha: self.alpha,
            beta: self.beta,
            ..Hyperparams::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::AugmentMethod;

    #[test]
    fn defaults_are_valid() {
        let hp = Hyperparams::default();
        hp.validate().unwrap();
        assert_eq!(hp.subgraph_size, 4);
        assert_eq!(hp.hidden_dim, 64);
        assert_eq!(hp.epochs, 400);
        assert_eq!(hp.rounds, 256);
        assert_eq!(hp.gamma, 0.1);
        assert_eq!(hp.augmentation.edge_ratio, 0.2);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let hp =
            Hyperparams::from_json(r#"{"epochs": 5, "augmentation": {"method": "gd"}}"#).unwrap();
        assert_eq!(hp.epochs, 5);
        assert_eq!(hp.augmentation.method, AugmentMethod::Gd);
        assert_eq!(hp.batch_size, 300);
        let back = Hyperparams::from_json(&hp.to_json_pretty()).unwrap();
        assert_eq!(back, hp);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            Hyperparams::from_json(r#"{"epoch": 5}"#),
            Err(Error::Schema { .. })
        ));
        assert!(Hyperparams::from_json(r#"{"beta": 1.0}"#).is_err());
        assert!(Hyperparams::from_json(r#"{"batch_size": 1}"#).is_err());
        assert!(Hyperparams::from_json(r#"{"variant": "nn"}"#).is_err());
    }

    #[test]
    fn presets() {
        let cora = benchmark_preset("cora").unwrap();
        assert_eq!(
            (cora.nodes, cora.edges, cora.attributes, cora.anomalies),
            (2708, 5429, 1433, 150)
        );
        assert_eq!(cora.hyperparams().alpha, 0.9);
        assert_eq!(benchmark_preset("EAT").unwrap().anomalies, 30);
        for p in BENCHMARKS {
            assert_eq!(p.anomalies % 2, 0);
        }
    }
}
