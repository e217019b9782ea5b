//! Loads a small corpus and prints what normalization found.
//!
//! `cargo run --example corpus_validate`

use rcforecast::corpus::{Corpus, DocType, JournalRank, JournalRanks, PaperRecord};

fn paper(id: u64, year: i32, references: Vec<u64>) -> PaperRecord {
    PaperRecord {
        paper_id: id,
        year,
        doc_type: DocType::Article,
        journal_id: Some(1),
        references,
        terms: vec!["citation".into(), "network".into()],
    }
}

fn main() -> rcforecast::Result<()> {
    let papers = vec![
        paper(1, 2010, vec![]),
        paper(2, 2011, vec![1, 1, 900]),
        // cites itself and a paper from the future
        paper(3, 2011, vec![3, 4]),
        paper(4, 2012, vec![2, 3]),
    ];
    let journals = JournalRanks::new([JournalRank {
        journal_id: 1,
        citescore_rank: Some(12),
        eigenfactor_rank: Some(140),
    }])?;
    let corpus = Corpus::from_papers(papers, journals)?;
    let meta = corpus.meta();
    println!("years {}..={}", meta.first_year, meta.last_year);
    println!("{}", serde_json::to_string_pretty(corpus.validation())?);
    Ok(())
}
