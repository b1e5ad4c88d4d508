//! Random-walk-with-restart subgraphs: node order, padding, masking, and
//! the normalized adjacency fed to the encoder.

use gadcl::rng::{stream, Purpose};
use gadcl::{rwr_subgraph, Graph};
use nalgebra::DMatrix;

fn main() -> gadcl::Result<()> {
    // a path 0-1-2-3-4 plus an isolated node 5
    let x = DMatrix::from_fn(6, 2, |i, j| (i * 2 + j) as f64);
    let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4)], x, None)?;

    for target in [2, 5] {
        let mut rng = stream(11, Purpose::Sample, &[target as u64]);
        let s = rwr_subgraph(&g, target, 4, 0.15, &mut rng)?;
        println!(
            "target {target}: nodes {:?} ({} distinct)",
            s.nodes, s.distinct
        );
        println!("normalized adjacency:\n{:.3}", s.norm_adj);
        println!(
            "masked features (target row zeroed):\n{}",
            s.features_masked
        );
    }

    let sizes: Vec<usize> = (0..200)
        .map(|r| {
            let s =
                rwr_subgraph(&g, 0, 4, 0.15, &mut stream(11, Purpose::Sample, &[100, r])).unwrap();
            s.distinct
        })
        .collect();
    let full = sizes.iter().filter(|&&d| d == 4).count();
    println!("from an endpoint of the path, {full}/200 walks reached 4 distinct nodes");
    Ok(())
}
