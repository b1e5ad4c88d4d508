//! Command-line front end: `synth`, `inject`, `train`, `score`, `eval`, `ablate`.
//!
//! Failures print one line, `error: kind=<kind> <message>`, and exit 1.
//! Usage errors exit 2.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::augment::AugmentMethod;
use crate::config::Hyperparams;
use crate::error::{Error, Result};
use crate::eval::{auc, roc_points, run_ablation, AblationVariant};
use crate::graph::{
    generate_synthetic, inject_anomalies, load_graph, save_graph, InjectionConfig, SyntheticConfig,
};
use crate::model::{ContrastVariant, ModelFile};
use crate::rng::{stream, Purpose};
use crate::score::{read_scores_csv, score, write_scores_csv};
use crate::train::{train_with, write_training_log};

#[derive(Debug, Parser)]
#[command(
    name = "gadcl",
    version,
    about = "Contrastive node anomaly detection on attributed graphs"
)]
pub struct Cli {
    /// Worker threads [default: 1 for train, all cores otherwise]
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a stochastic block model dataset
    Synth(SynthArgs),
    /// Inject clique and feature anomalies into a dataset
    Inject(InjectArgs),
    /// Train a model
    Train(TrainArgs),
    /// Score every node with a trained model
    Score(ScoreArgs),
    /// Compute AUC (and optionally the ROC curve) of a scores file
    Eval(EvalArgs),
    /// Train, score and evaluate contrast/augmentation variants over seeds
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub nodes: usize,
    /// Feature dimension
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub blocks: usize,
    /// Within-block edge probability
    #[arg(long, default_value_t = 0.05)]
    pub p_in: f64,
    /// Between-block edge probability
    #[arg(long, default_value_t = 0.002)]
    pub p_out: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Structural anomalies (a multiple of the clique size)
    #[arg(long)]
    pub structural: usize,
    /// Feature anomalies
    #[arg(long)]
    pub feature: usize,
    #[arg(long, default_value_t = 15)]
    pub clique_size: usize,
    /// Candidates compared when picking the farthest feature row
    #[arg(long, default_value_t = 50)]
    pub pool: usize,
    #[arg(long)]
    pub seed: u64,
}

/// Values that override the config file. Unset flags keep the config value
/// (or the built-in default when no config is given).
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Training epochs [default: 400]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Targets per batch [default: 300]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Embedding width [default: 64]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Nodes per RWR subgraph [default: 4]
    #[arg(long)]
    pub subgraph_size: Option<usize>,
    /// View balance in [0, 1] [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Node-subgraph weight in (0, 1) [default: 0.5]
    #[arg(long)]
    pub beta: Option<f64>,
    /// Subgraph-subgraph weight in [0, 1) [default: 0.1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Edge modification ratio [default: 0.2]
    #[arg(long)]
    pub edge_ratio: Option<f64>,
    /// RWR restart probability [default: 0.15]
    #[arg(long)]
    pub restart: Option<f64>,
    /// Scoring rounds stored with the model [default: 256]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Contrasts to train: ns, ns+ss, ns+nn, ns+nn+ss [default: ns+nn+ss]
    #[arg(long)]
    pub variant: Option<ContrastVariant>,
    /// Augmentation: em, gnf, fm, gd [default: em]
    #[arg(long)]
    pub aug: Option<AugmentMethod>,
}

impl Overrides {
    pub fn apply(&self, hp: &mut Hyperparams) {
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { hp.$($field).+ = v; })*
            };
        }
        set!(
            epochs => epochs,
            batch_size => batch_size,
            hidden_dim => hidden_dim,
            subgraph_size => subgraph_size,
            alpha => alpha,
            beta => beta,
            gamma => gamma,
            lr => lr,
            edge_ratio => augmentation.edge_ratio,
            restart => restart,
            rounds => rounds,
            variant => variant,
            aug => augmentation.method,
        );
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON hyperparameter file [default: built-in defaults]
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
    /// Seed [default: the config's seed, else 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-epoch loss CSV
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Scoring rounds [default: the model's setting]
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Seed [default: the model's training seed]
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Labeled dataset the scores refer to
    #[arg(long)]
    pub data: PathBuf,
    /// Write the ROC curve as `fpr,tpr` CSV
    #[arg(long)]
    pub roc: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON hyperparameter file [default: built-in defaults]
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated variants such as `ns,ns+nn,ns+nn+ss/gd`
    #[arg(long, value_delimiter = ',', required = true)]
    pub variants: Vec<String>,
    /// Comma-separated seeds
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<Hyperparams> {
    match path {
        Some(p) => Hyperparams::load(p),
        None => Ok(Hyperparams::default()),
    }
}

fn require_labels(g: &crate::graph::Graph, path: &Path) -> Result<Vec<u8>> {
    g.labels()
        .map(<[u8]>::to_vec)
        .ok_or_else(|| Error::argument(format!("{} has no labels", path.display())))
}

impl Command {
    fn default_threads(&self) -> usize {
        match self {
            Command::Train(_) => 1,
            _ => 0,
        }
    }

    pub fn execute(&self, out: &mut Vec<u8>) -> Result<()> {
        match self {
            Command::Synth(a) => {
                let cfg = SyntheticConfig::new(a.nodes, a.dim, a.blocks)
                    .with_probabilities(a.p_in, a.p_out);
                let g = generate_synthetic(&cfg, &mut stream(a.seed, Purpose::Synth, &[]))?;
                save_graph(&g, &a.out)
            }
            Command::Inject(a) => {
                let g = load_graph(&a.input)?;
                let cfg = InjectionConfig {
                    n_structural: a.structural,
                    n_feature: a.feature,
                    clique_size: a.clique_size,
                    candidate_pool: a.pool,
                };
                let (g, _) = inject_anomalies(&g, &cfg, &mut stream(a.seed, Purpose::Inject, &[]))?;
                save_graph(&g, &a.out)
            }
            Command::Train(a) => {
                let g = load_graph(&a.data)?;
                let mut hp = load_config(a.config.as_deref())?;
                a.overrides.apply(&mut hp);
                if let Some(seed) = a.seed {
                    hp.seed = seed;
                }
                hp.validate()?;
                let outcome = train_with(&g, &hp, |_| {})?;
                if let Some(log) = &a.log {
                    write_training_log(&outcome.history, log)?;
                }
                ModelFile::new(&outcome.params, Some(hp)).save(&a.out)
            }
            Command::Score(a) => {
                let g = load_graph(&a.data)?;
                let model = ModelFile::load(&a.model)?;
                let params = model.parameters()?;
                let mut hp = model.hyperparams.clone().unwrap_or_default();
                hp.hidden_dim = params.hidden_dim();
                if let Some(r) = a.rounds {
                    hp.rounds = r;
                }
                if let Some(seed) = a.seed {
                    hp.seed = seed;
                }
                let table = score(&g, &params, &hp)?;
                write_scores_csv(&table, g.labels(), &a.out)
            }
            Command::Eval(a) => {
                let g = load_graph(&a.data)?;
                let labels = require_labels(&g, &a.data)?;
                let (scores, _) = read_scores_csv(&a.scores)?;
                if scores.len() != g.num_nodes() {
                    return Err(Error::Validation(format!(
                        "{} has {} rows but the graph has {} nodes",
                        a.scores.display(),
                        scores.len(),
                        g.num_nodes()
                    )));
                }
                let value = match &a.roc {
                    Some(path) => {
                        let roc = roc_points(&scores, &labels)?;
                        roc.write_csv(path)?;
                        roc.auc
                    }
                    None => auc(&scores, &labels)?,
                };
                writeln!(out, "auc={value}").map_err(|e| Error::io("<stdout>", e))
            }
            Command::Ablate(a) => {
                let g = load_graph(&a.data)?;
                let hp = load_config(a.config.as_deref())?;
                let variants = a
                    .variants
                    .iter()
                    .map(|v| AblationVariant::parse(v, hp.augmentation.method))
                    .collect::<Result<Vec<_>>>()?;
                let table = run_ablation(&g, &hp, &variants, &a.seeds)?;
                table.write_csv(&a.out)?;
                for s in &table.summary {
                    writeln!(
                        out,
                        "variant={} mean_auc={} median_auc={} runs={}",
                        s.variant, s.mean, s.median, s.runs
                    )
                    .map_err(|e| Error::io("<stdout>", e))?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `argv` (program name first) and runs it, writing normal output
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run_with_io<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let threads = cli.threads.unwrap_or_else(|| cli.command.default_threads());
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(
                err,
                "error: kind=argument cannot start {threads} threads: {e}"
            );
            return 1;
        }
    };
    let mut buf = Vec::new();
    let result = pool.install(|| cli.command.execute(&mut buf));
    let _ = out.write_all(&buf);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: kind={} {}", e.kind(), e);
            1
        }
    }
}

pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_io(
        argv,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
