//! Builds a model through one year, then adds later years by reference
//! plurality with a BM25 text fallback.
//!
//! `cargo run --release --example extend_model -- [communities] [seed]`

use rcforecast::citegraph::build_graph;
use rcforecast::cluster::{assign_new_papers, leiden_with_report, Bm25Params, ClusterConfig, RcDocStats};
use rcforecast::corpus::Corpus;
use rcforecast::synth::{generate, SynthConfig};

fn main() -> rcforecast::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let synth = SynthConfig {
        rng_seed: seed,
        n_communities: n,
        ..SynthConfig::default()
    };
    let out = generate(&synth)?;
    let corpus = Corpus::from_papers(out.papers, out.journals)?;

    let model_year = 2010;
    let graph = build_graph(&corpus, true, model_year)?;
    let config = ClusterConfig {
        resolution: 0.001,
        rng_seed: seed,
        ..ClusterConfig::default()
    };
    let (mut partition, report) = leiden_with_report(&graph, &config)?;
    println!(
        "through {model_year}: {} papers in {} communities (planted {n})",
        partition.len(),
        report.community_count
    );

    for year in model_year + 1..=synth.last_year {
        let (next, r) = assign_new_papers(&partition, &corpus, year, Bm25Params::default())?;
        println!(
            "{year}: {} by references, {} by text, {} unassigned",
            r.by_references,
            r.by_text,
            r.unassigned.len()
        );
        partition = next;
    }

    // the text fallback on its own
    let members = partition.members();
    let docs = RcDocStats::build(members.iter().map(|(&rc, papers)| {
        let terms = papers.iter().filter_map(|&p| corpus.get(p)).flat_map(|p| p.terms.iter());
        (rc, terms)
    }));
    let query: Vec<String> = ["c3w1", "c3w7", "g12"].map(String::from).to_vec();
    println!(
        "{} term documents; best match for {query:?}: {:?}",
        docs.document_count(),
        docs.best_match(&query, Bm25Params::default())
    );
    Ok(())
}
