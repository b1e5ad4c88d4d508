//! Generate a block-structured attributed graph, inject clique and
//! feature anomalies, and save both versions in the dataset JSON format.
//!
//!     cargo run --example synth_and_inject -- /tmp/out

use std::path::PathBuf;

use gadcl::rng::{stream, Purpose};
use gadcl::{generate_synthetic, inject_anomalies, save_graph, InjectionConfig, SyntheticConfig};

fn main() -> gadcl::Result<()> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| std::env::temp_dir().display().to_string()),
    );
    let cfg = SyntheticConfig::new(300, 16, 4).with_probabilities(0.08, 0.003);
    let clean = generate_synthetic(&cfg, &mut stream(7, Purpose::Synth, &[]))?.with_name("sbm-300");

    let degrees: Vec<usize> = (0..clean.num_nodes()).map(|i| clean.degree(i)).collect();
    let mean_degree = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
    println!(
        "clean: {} nodes, {} edges, mean degree {mean_degree:.2}",
        clean.num_nodes(),
        clean.num_edges()
    );

    let inj = InjectionConfig {
        n_structural: 16,
        n_feature: 16,
        clique_size: 8,
        ..InjectionConfig::default()
    };
    let (anomalous, labels) = inject_anomalies(&clean, &inj, &mut stream(7, Purpose::Inject, &[]))?;
    println!(
        "injected: {} edges (+{}), structural {:?}, feature {:?}",
        anomalous.num_edges(),
        anomalous.num_edges() - clean.num_edges(),
        labels.structural,
        labels.feature
    );

    // every clique member now has at least clique_size - 1 neighbors
    for &v in &labels.structural {
        assert!(anomalous.degree(v) >= inj.clique_size - 1);
    }

    save_graph(&clean, dir.join("clean.json"))?;
    save_graph(&anomalous, dir.join("anomalous.json"))?;
    println!("wrote {}/clean.json and anomalous.json", dir.display());
    Ok(())
}
