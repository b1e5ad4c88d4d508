//! Full-scale run on one of the public benchmark graphs.
//!
//! The dataset must be supplied as a dataset JSON file (features, edges,
//! no labels). Anomalies are injected the usual way, half cliques of 15 and
//! half far-feature swaps, then the model is trained and scored with the
//! dataset's preset (400 epochs, 256 rounds) and compared to the reference
//! AUC.
//!
//!     cargo run --release --example reproduce_benchmark -- cora.json Cora [seed]
//!
//! Injection seeds of the reference numbers are unknown, so expect the
//! AUC within a few hundredths, not an exact match.

use std::time::Instant;

use gadcl::rng::{stream, Purpose};
use gadcl::{
    auc, benchmark_preset, inject_anomalies, load_graph, score, train_with, InjectionConfig,
};

fn main() -> gadcl::Result<()> {
    let mut args = std::env::args().skip(1);
    let (Some(path), Some(name)) = (args.next(), args.next()) else {
        eprintln!("usage: reproduce_benchmark <dataset.json> <EAT|WebKB|UAT|Cora|UAI2010|Citation> [seed]");
        std::process::exit(2);
    };
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let preset = benchmark_preset(&name).unwrap_or_else(|| {
        eprintln!("unknown benchmark {name}");
        std::process::exit(2);
    });

    let clean = load_graph(&path)?;
    if clean.num_nodes() != preset.nodes {
        eprintln!(
            "warning: {} has {} nodes, {} expects {}",
            path,
            clean.num_nodes(),
            preset.name,
            preset.nodes
        );
    }
    let inj = InjectionConfig::balanced(preset.anomalies)?;
    let (g, _) = inject_anomalies(&clean, &inj, &mut stream(seed, Purpose::Inject, &[]))?;

    let hp = gadcl::Hyperparams {
        seed,
        ..preset.hyperparams()
    };
    let start = Instant::now();
    let outcome = train_with(&g, &hp, |e| {
        if e.epoch % 50 == 0 {
            eprintln!(
                "epoch {:>3}  joint {:.4}  [{:.0?}]",
                e.epoch,
                e.joint,
                start.elapsed()
            );
        }
    })?;
    let table = score(&g, &outcome.params, &hp)?;
    let value = auc(&table.final_scores, g.labels().expect("injected labels"))?;
    let gap = value - preset.reference_auc;
    println!(
        "{}: auc {value:.4}, reference {:.4}, difference {gap:+.4} ({})",
        preset.name,
        preset.reference_auc,
        if gap.abs() <= 0.05 {
            "within 0.05"
        } else {
            "outside 0.05"
        }
    );
    Ok(())
}
