//! Year-by-year extension of a partition: reference plurality first, BM25
//! text relatedness second.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bm25::{Bm25Params, RcDocStats};
use super::Partition;
use crate::corpus::{Corpus, PaperRecord};
use crate::error::{Error, Result};
use crate::{PaperId, RcId, Year};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssignmentReport {
    pub year: Year,
    pub by_references: usize,
    pub by_text: usize,
    pub unassigned: Vec<PaperId>,
}

#[derive(Debug, Clone, Copy)]
enum Decision {
    Keep,
    References(RcId),
    Text(RcId),
    None,
}

/// Community holding the plurality of `refs` under `partition`; ties go to
/// the smaller rc id.
fn plurality(partition: &Partition, refs: &[PaperId]) -> Option<RcId> {
    let mut counts: HashMap<RcId, u32> = HashMap::new();
    for r in refs {
        if let Some(rc) = partition.rc_of(*r) {
            *counts.entry(rc).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(rc, _)| rc)
}

/// Adds the papers of `new_year` to `partition`.
///
/// Every paper is decided against the partition as it stood through
/// `new_year − 1`, so papers of the same year never see each other and the
/// result does not depend on processing order. Existing assignments are
/// left untouched.
pub fn assign_new_papers(
    partition: &Partition,
    corpus: &Corpus,
    new_year: Year,
    params: Bm25Params,
) -> Result<(Partition, AssignmentReport)> {
    let expected = partition.through_year() + 1;
    if new_year != expected {
        return Err(Error::NonContiguousExtension {
            through: partition.through_year(),
            requested: new_year,
            expected,
        });
    }
    let arriving: Vec<&PaperRecord> = corpus.papers_in_year(new_year).collect();

    let by_refs: Vec<Decision> = arriving
        .par_iter()
        .map(|p| {
            if partition.rc_of(p.paper_id).is_some() {
                Decision::Keep
            } else {
                plurality(partition, &p.references).map_or(Decision::None, Decision::References)
            }
        })
        .collect();

    let needs_text = arriving
        .iter()
        .zip(&by_refs)
        .any(|(p, d)| matches!(d, Decision::None) && !p.terms.is_empty());
    let decisions: Vec<Decision> = if needs_text {
        let stats = RcDocStats::build(
            corpus
                .papers()
                .iter()
                .filter(|p| !p.terms.is_empty())
                .filter_map(|p| Some((partition.rc_of(p.paper_id)?, &p.terms))),
        );
        arriving
            .par_iter()
            .zip(by_refs.par_iter())
            .map(|(p, &d)| match d {
                Decision::None if !p.terms.is_empty() => stats
                    .best_match(&p.terms, params)
                    .map_or(Decision::None, |(rc, _)| Decision::Text(rc)),
                other => other,
            })
            .collect()
    } else {
        by_refs
    };

    let mut updated = partition.clone().with_through_year(new_year);
    let mut report = AssignmentReport {
        year: new_year,
        ..AssignmentReport::default()
    };
    for (p, d) in arriving.iter().zip(decisions) {
        match d {
            Decision::Keep => {}
            Decision::References(rc) => {
                updated.insert(p.paper_id, rc);
                report.by_references += 1;
            }
            Decision::Text(rc) => {
                updated.insert(p.paper_id, rc);
                report.by_text += 1;
            }
            Decision::None => report.unassigned.push(p.paper_id),
        }
    }
    log::info!(
        "year {new_year}: {} by references, {} by text, {} unassigned",
        report.by_references,
        report.by_text,
        report.unassigned.len()
    );
    Ok((updated, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocType, JournalRanks};

    fn paper(id: PaperId, year: Year, refs: &[PaperId], terms: &[&str]) -> PaperRecord {
        PaperRecord {
            paper_id: id,
            year,
            doc_type: DocType::Article,
            journal_id: None,
            references: refs.to_vec(),
            terms: terms.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn setup(new: Vec<PaperRecord>) -> (Partition, Corpus) {
        let mut papers = vec![
            paper(1, 2000, &[], &["alpha", "beta"]),
            paper(2, 2000, &[], &["alpha"]),
            paper(3, 2000, &[], &["alpha"]),
            paper(4, 2000, &[], &["gamma", "delta"]),
            paper(5, 2000, &[], &["gamma"]),
        ];
        papers.extend(new);
        let corpus = Corpus::from_papers(papers, JournalRanks::default()).unwrap();
        let assignment = HashMap::from([(1, 5), (2, 5), (3, 5), (4, 9), (5, 1)]);
        (Partition::new(assignment, 2000), corpus)
    }

    #[test]
    fn plurality_of_references_wins() {
        let (p, c) = setup(vec![paper(10, 2001, &[1, 2, 3, 4], &[])]);
        let (out, report) = assign_new_papers(&p, &c, 2001, Bm25Params::default()).unwrap();
        assert_eq!(out.rc_of(10), Some(5));
        assert_eq!(report.by_references, 1);
        assert_eq!(out.through_year(), 2001);
        assert_eq!(out.model_year(), 2000);
    }

    #[test]
    fn tie_goes_to_smaller_rc() {
        let (p, c) = setup(vec![paper(10, 2001, &[4, 5], &[])]);
        let (out, _) = assign_new_papers(&p, &c, 2001, Bm25Params::default()).unwrap();
        assert_eq!(out.rc_of(10), Some(1));
    }

    #[test]
    fn text_fallback_and_unassigned() {
        let (p, c) = setup(vec![
            paper(10, 2001, &[], &["gamma", "delta"]),
            paper(11, 2001, &[999], &[]),
        ]);
        let (out, report) = assign_new_papers(&p, &c, 2001, Bm25Params::default()).unwrap();
        assert_eq!(out.rc_of(10), Some(9));
        assert_eq!(report.by_text, 1);
        assert_eq!(report.unassigned, vec![11]);
        assert_eq!(out.rc_of(11), None);
    }

    #[test]
    fn same_year_papers_do_not_see_each_other() {
        let (p, c) = setup(vec![paper(10, 2001, &[4], &[]), paper(11, 2001, &[10], &[])]);
        let (out, report) = assign_new_papers(&p, &c, 2001, Bm25Params::default()).unwrap();
        assert_eq!(out.rc_of(10), Some(9));
        assert_eq!(out.rc_of(11), None);
        assert_eq!(report.unassigned, vec![11]);
    }

    #[test]
    fn years_must_be_contiguous() {
        let (p, c) = setup(vec![paper(10, 2002, &[1], &[])]);
        assert!(matches!(
            assign_new_papers(&p, &c, 2002, Bm25Params::default()),
            Err(Error::NonContiguousExtension { expected: 2001, .. })
        ));
    }
}
