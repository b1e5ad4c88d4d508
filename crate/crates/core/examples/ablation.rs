//! Contrast-scale and augmentation ablation on a synthetic benchmark.
//!
//!     cargo run --release --example ablation -- [epochs] [seeds]

use gadcl::eval::{run_ablation, AblationVariant};
use gadcl::rng::{stream, Purpose};
use gadcl::{
    generate_synthetic, inject_anomalies, AugmentMethod, ContrastVariant, Hyperparams,
    InjectionConfig, SyntheticConfig,
};

fn main() -> gadcl::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(60, |s| s.parse().expect("epochs"));
    let n_seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seeds"));

    let clean = generate_synthetic(
        &SyntheticConfig::new(400, 24, 4),
        &mut stream(5, Purpose::Synth, &[]),
    )?;
    let inj = InjectionConfig {
        n_structural: 16,
        n_feature: 16,
        clique_size: 8,
        ..InjectionConfig::default()
    };
    let (g, _) = inject_anomalies(&clean, &inj, &mut stream(5, Purpose::Inject, &[]))?;
    let hp = Hyperparams {
        epochs,
        batch_size: 128,
        rounds: 16,
        ..Hyperparams::default()
    };

    let mut variants: Vec<AblationVariant> = ContrastVariant::ALL
        .into_iter()
        .map(|contrast| AblationVariant {
            contrast,
            augmentation: AugmentMethod::Em,
        })
        .collect();
    variants.extend(
        [AugmentMethod::Gnf, AugmentMethod::Fm, AugmentMethod::Gd].map(|augmentation| {
            AblationVariant {
                contrast: ContrastVariant::NsNnSs,
                augmentation,
            }
        }),
    );

    let seeds: Vec<u64> = (0..n_seeds).collect();
    let table = run_ablation(&g, &hp, &variants, &seeds)?;
    println!("{:<16} {:>8} {:>8}", "variant", "mean", "median");
    for s in &table.summary {
        println!(
            "{:<16} {:>8.4} {:>8.4}",
            s.variant.to_string(),
            s.mean,
            s.median
        );
    }
    let path = std::env::temp_dir().join("ablation.csv");
    table.write_csv(&path)?;
    println!("per-run table: {}", path.display());
    Ok(())
}
