//! Okapi BM25 relatedness between a paper's terms and per-community aggregate
//! documents (the concatenated terms of each community's member papers).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::RcId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone)]
struct RcDocument {
    rc: RcId,
    len: f64,
}

/// Collection statistics over community documents plus an inverted index.
#[derive(Debug, Clone, Default)]
pub struct RcDocStats {
    docs: Vec<RcDocument>,
    by_rc: HashMap<RcId, usize>,
    postings: HashMap<String, Vec<(usize, u32)>>,
    avg_len: f64,
}

impl RcDocStats {
    /// Builds statistics from `(rc, terms)` pairs; terms of repeated rc ids
    /// are concatenated. Communities with no terms are not documents.
    pub fn build<'a, I, T>(entries: I) -> Self
    where
        I: IntoIterator<Item = (RcId, T)>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut tf: HashMap<RcId, HashMap<&'a str, u32>> = HashMap::new();
        for (rc, terms) in entries {
            let counts = tf.entry(rc).or_default();
            for t in terms {
                *counts.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut rcs: Vec<RcId> = tf
            .iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|(&rc, _)| rc)
            .collect();
        rcs.sort_unstable();

        let mut docs = Vec::with_capacity(rcs.len());
        let mut by_rc = HashMap::with_capacity(rcs.len());
        let mut postings: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        for (idx, rc) in rcs.into_iter().enumerate() {
            let counts = &tf[&rc];
            let len: u32 = counts.values().sum();
            docs.push(RcDocument { rc, len: len as f64 });
            by_rc.insert(rc, idx);
            for (&term, &count) in counts {
                postings.entry(term.to_string()).or_default().push((idx, count));
            }
        }
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            docs.iter().map(|d| d.len).sum::<f64>() / docs.len() as f64
        };
        RcDocStats {
            docs,
            by_rc,
            postings,
            avg_len,
        }
    }

    pub fn document_count(&self) -> usize {
        self.docs.len()
    }

    pub fn average_length(&self) -> f64 {
        self.avg_len
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_score(&self, df: usize, tf: u32, doc_len: f64, params: Bm25Params) -> f64 {
        let tf = tf as f64;
        let norm = if self.avg_len > 0.0 {
            1.0 - params.b + params.b * doc_len / self.avg_len
        } else {
            1.0
        };
        self.idf(df) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }

    /// Scores every document sharing a term with the query and returns the
    /// best `(rc, score)`; ties go to the smaller rc id. `None` when no
    /// document scores above zero.
    pub fn best_match(&self, query: &[String], params: Bm25Params) -> Option<(RcId, f64)> {
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in query {
            if let Some(list) = self.postings.get(term) {
                for &(doc, tf) in list {
                    *scores.entry(doc).or_insert(0.0) +=
                        self.term_score(list.len(), tf, self.docs[doc].len, params);
                }
            }
        }
        scores
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(doc, s)| (self.docs[doc].rc, s))
            .min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)))
    }

    pub(crate) fn score(&self, query: &[String], rc: RcId, params: Bm25Params) -> f64 {
        let Some(&doc) = self.by_rc.get(&rc) else {
            return 0.0;
        };
        query
            .iter()
            .filter_map(|term| {
                let list = self.postings.get(term)?;
                let &(_, tf) = list.iter().find(|(d, _)| *d == doc)?;
                Some(self.term_score(list.len(), tf, self.docs[doc].len, params))
            })
            .sum()
    }
}

/// BM25 score of `query_terms` against the aggregate document of `rc`, using
/// the non-negative IDF `ln(1 + (N − df + 0.5)/(df + 0.5))`.
pub fn bm25_relatedness(
    query_terms: &[String],
    stats: &RcDocStats,
    rc: RcId,
    params: Bm25Params,
) -> f64 {
    stats.score(query_terms, rc, params)
}
