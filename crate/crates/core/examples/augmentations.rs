//! The four second-view augmentations side by side on one graph.

use gadcl::augment::{augment, ppr_diffusion_matrix, AugmentConfig, AugmentMethod};
use gadcl::rng::{stream, Purpose};
use gadcl::{generate_synthetic, Graph, SyntheticConfig};

fn feature_change(a: &Graph, b: &Graph) -> (f64, usize) {
    let diff = a.features() - b.features();
    (
        diff.norm() / a.features().norm(),
        b.features().iter().filter(|&&x| x == 0.0).count(),
    )
}

fn main() -> gadcl::Result<()> {
    let g = generate_synthetic(
        &SyntheticConfig::new(200, 8, 4).with_probabilities(0.1, 0.005),
        &mut stream(3, Purpose::Synth, &[]),
    )?;
    println!("original: {} edges", g.num_edges());

    for method in AugmentMethod::ALL {
        let cfg = AugmentConfig {
            method,
            ..AugmentConfig::default()
        };
        let view = augment(&g, &cfg, &mut stream(3, Purpose::Augment, &[0]))?;
        let kept = g
            .edges()
            .iter()
            .filter(|&&(u, v)| view.has_edge(u, v))
            .count();
        let (rel, zeros) = feature_change(&g, &view);
        println!(
            "{method:>3}: {:>4} edges ({kept} kept), relative feature change {rel:.3}, zero entries {zeros}",
            view.num_edges()
        );
    }

    // diffusion weights on a 2-node graph: off-diagonal 0.425 at teleport 0.15
    let pair = Graph::new(2, [(0, 1)], nalgebra::DMatrix::zeros(2, 1), None)?;
    let s = ppr_diffusion_matrix(&pair, 0.15)?;
    println!("2-node diffusion matrix:\n{s:.4}");
    Ok(())
}
