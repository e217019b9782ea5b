//! Writes a synthetic corpus with ground truth and summarizes it.
//!
//! `cargo run --release --example synth_corpus -- [communities] [out dir]`

use std::collections::BTreeMap;
use std::path::PathBuf;

use rcforecast::synth::{generate, SynthConfig};

fn main() -> rcforecast::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("rcf-synth"));
    let config = SynthConfig {
        n_communities: n,
        ..SynthConfig::default()
    };
    let out = generate(&config)?;
    out.write(&dir, &config)?;

    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &out.truth.communities {
        *by_class.entry(c.lifecycle.name()).or_default() += 1;
    }
    let bursts: usize = out.truth.communities.iter().map(|c| c.bursts.len()).sum();
    println!("{} papers, {} communities {by_class:?}, {bursts} planted bursts", out.papers.len(), n);
    for fy in config.first_year..=config.last_year - 3 {
        let papers = out.papers.iter().filter(|p| p.year == fy).count();
        println!("  {fy}: {papers:>7} papers, {:>4} exceptional", out.truth.xg_count(fy));
    }
    println!("written to {}", dir.display());
    Ok(())
}
