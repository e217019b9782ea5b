//! Leiden on a ring of cliques under both quality functions.
//!
//! `cargo run --release --example leiden_clustering -- [cliques] [clique size]`

use rcforecast::cluster::{optimise, LeidenOptions, Network, QualityFunction};

fn main() {
    let mut args = std::env::args().skip(1);
    let cliques: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);

    let mut edges = Vec::new();
    for c in 0..cliques {
        let base = c * size;
        for i in 0..size {
            for j in i + 1..size {
                edges.push((base + i, base + j, 1.0));
            }
        }
        // one bridge to the next clique
        edges.push((base, (base + size) % (cliques * size), 1.0));
    }
    let net = Network::from_edges(cliques * size, &edges);

    for (quality, resolution) in [
        (QualityFunction::Modularity, 1.0),
        (QualityFunction::Cpm, 0.5),
        (QualityFunction::Cpm, 0.05),
    ] {
        let out = optimise(
            &net,
            &LeidenOptions {
                quality,
                resolution,
                randomness: 0.01,
                max_iterations: 10,
                seed: 1,
            },
            None,
        );
        println!(
            "{quality:?} γ={resolution}: {} communities, quality {:.4}, per-iteration {:?}",
            out.community_count, out.quality, out.iteration_qualities
        );
        println!("  membership {:?}", out.membership);
    }
}
