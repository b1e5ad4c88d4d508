//! Full pipeline on a synthetic graph: generate, inject anomalies, train,
//! score, and report AUC against the injected labels.
//!
//!     cargo run --release --example train_and_score -- [epochs] [seed]

use std::time::Instant;

use gadcl::rng::{stream, Purpose};
use gadcl::{
    auc, generate_synthetic, inject_anomalies, score, train_with, Hyperparams, InjectionConfig,
    SyntheticConfig,
};

fn main() -> gadcl::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(100, |s| s.parse().expect("epochs"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed"));

    let clean = generate_synthetic(
        &SyntheticConfig::new(500, 32, 5),
        &mut stream(1, Purpose::Synth, &[]),
    )?;
    let cfg = InjectionConfig {
        n_structural: 20,
        n_feature: 20,
        clique_size: 10,
        ..Default::default()
    };
    let (g, injected) = inject_anomalies(&clean, &cfg, &mut stream(1, Purpose::Inject, &[]))?;
    println!(
        "graph: {} nodes, {} edges, {} anomalies",
        g.num_nodes(),
        g.num_edges(),
        injected.all.len()
    );

    let hp = Hyperparams {
        epochs,
        batch_size: 128,
        rounds: 32,
        seed,
        ..Hyperparams::default()
    };
    let labels = g.labels().expect("injection labels the graph");

    let untrained = gadcl::train::init_parameters(&g, &hp);
    let base = score(&g, &untrained, &hp)?;
    println!("untrained auc = {:.4}", auc(&base.final_scores, labels)?);

    let start = Instant::now();
    let outcome = train_with(&g, &hp, |e| {
        if e.epoch % 20 == 0 || e.epoch == 1 {
            println!(
                "epoch {:>4}  ns {:.4}  nn {:.4}  ss {:.4}  joint {:.4}",
                e.epoch, e.l_ns, e.l_nn, e.l_ss, e.joint
            );
        }
    })?;
    println!("trained in {:.1?}", start.elapsed());

    let table = score(&g, &outcome.params, &hp)?;
    let structural: Vec<u8> = (0..g.num_nodes())
        .map(|i| u8::from(injected.structural.binary_search(&i).is_ok()))
        .collect();
    let feature: Vec<u8> = (0..g.num_nodes())
        .map(|i| u8::from(injected.feature.binary_search(&i).is_ok()))
        .collect();
    println!("auc = {:.4}", auc(&table.final_scores, labels)?);
    println!(
        "  structural only vs rest: {:.4}",
        auc(&table.final_scores, &structural)?
    );
    println!(
        "  feature only vs rest:    {:.4}",
        auc(&table.final_scores, &feature)?
    );
    Ok(())
}
