//! Multi-view, multi-scale contrastive anomaly detection on attributed graphs.
//!
//! The pipeline: build or load a [`Graph`], optionally inject anomalies,
//! train the scorer with [`train`], rank nodes with [`score`], and evaluate
//! the ranking with [`auc`] or [`roc_points`].

pub mod augment;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod rng;
pub mod score;
pub mod train;

pub use augment::{augment, rwr_subgraph, AugmentConfig, AugmentMethod, SubgraphSample};
pub use config::{benchmark_preset, BenchmarkPreset, Hyperparams, BENCHMARKS};
pub use error::{Error, Result};
pub use eval::{auc, roc_points, run_ablation, AblationTable, AblationVariant, RocCurve};
pub use graph::{
    generate_synthetic, inject_anomalies, load_graph, normalize_adjacency, save_graph,
    AnomalyLabels, Graph, InjectionConfig, SyntheticConfig,
};
pub use model::{ContrastVariant, LossWeights, ModelFile, Parameters};
pub use score::{aggregate_scores, score, score_round, ScoreTable};
pub use train::{train, train_with, EpochLoss, TrainOutcome};
