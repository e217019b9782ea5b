//! Direct-citation graphs with and without cited items outside the corpus.
//!
//! `cargo run --example citation_graph`

use rcforecast::citegraph::build_graph;
use rcforecast::corpus::{Corpus, DocType, JournalRanks, PaperRecord};

fn main() -> rcforecast::Result<()> {
    // two pairs of papers that only meet through external items 100 and 200
    let refs: [(u64, i32, Vec<u64>); 5] = [
        (1, 2010, vec![100]),
        (2, 2010, vec![1, 100, 300]),
        (3, 2011, vec![200]),
        (4, 2011, vec![3, 200, 100]),
        (5, 2013, vec![4]),
    ];
    let papers = refs.into_iter().map(|(id, year, references)| PaperRecord {
        paper_id: id,
        year,
        doc_type: DocType::Article,
        journal_id: None,
        references,
        terms: Vec::new(),
    });
    let corpus = Corpus::from_papers(papers, JournalRanks::default())?;

    for extended in [false, true] {
        let g = build_graph(&corpus, extended, 2012)?;
        println!(
            "extended={extended}: {} nodes ({} papers), {} edges",
            g.node_count(),
            g.internal_count(),
            g.edge_count()
        );
        for (a, b, w) in g.edges() {
            println!("  {} -- {} ({w})", g.node_id(a), g.node_id(b));
        }
    }
    Ok(())
}
