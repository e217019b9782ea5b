//! Bibliographic corpus: paper records, journal rank lists, yearly totals and
//! publication shares.
//!
//! Papers are read from JSON-lines (one object per line); journal ranks from a
//! CSV with header `journal_id,citescore_rank,eigenfactor_rank`. The corpus is
//! immutable once loaded and papers are kept sorted by `paper_id`, so every
//! downstream computation is independent of input line order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::{PaperId, RcId, Year};

/// Journals ranked at or above this position count as "top" journals.
pub const TOP_JOURNAL_RANK: u32 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocType {
    #[default]
    Article,
    Review,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: PaperId,
    pub year: Year,
    pub doc_type: DocType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub journal_id: Option<u64>,
    #[serde(default)]
    pub references: Vec<PaperId>,
    #[serde(default)]
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRank {
    pub journal_id: u64,
    pub citescore_rank: Option<u32>,
    pub eigenfactor_rank: Option<u32>,
}

impl JournalRank {
    pub fn is_citescore_top(&self) -> bool {
        self.citescore_rank.is_some_and(|r| r <= TOP_JOURNAL_RANK)
    }

    pub fn is_eigenfactor_top(&self) -> bool {
        self.eigenfactor_rank.is_some_and(|r| r <= TOP_JOURNAL_RANK)
    }
}

/// Journal rank lookup; at most one entry per journal.
#[derive(Debug, Clone, Default)]
pub struct JournalRanks {
    ranks: HashMap<u64, JournalRank>,
}

impl JournalRanks {
    pub fn new(entries: impl IntoIterator<Item = JournalRank>) -> Result<Self> {
        let mut ranks = HashMap::new();
        for entry in entries {
            if entry.citescore_rank == Some(0) || entry.eigenfactor_rank == Some(0) {
                return Err(Error::Config(format!(
                    "journal {}: ranks must be >= 1",
                    entry.journal_id
                )));
            }
            if ranks.insert(entry.journal_id, entry).is_some() {
                return Err(Error::DuplicateJournal(entry.journal_id));
            }
        }
        Ok(JournalRanks { ranks })
    }

    pub fn get(&self, journal_id: u64) -> Option<&JournalRank> {
        self.ranks.get(&journal_id)
    }

    pub fn is_citescore_top(&self, journal_id: Option<u64>) -> bool {
        journal_id
            .and_then(|j| self.ranks.get(&j))
            .is_some_and(JournalRank::is_citescore_top)
    }

    pub fn is_eigenfactor_top(&self, journal_id: Option<u64>) -> bool {
        journal_id
            .and_then(|j| self.ranks.get(&j))
            .is_some_and(JournalRank::is_eigenfactor_top)
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Entries sorted by journal id.
    pub fn sorted(&self) -> Vec<JournalRank> {
        let mut out: Vec<_> = self.ranks.values().copied().collect();
        out.sort_by_key(|j| j.journal_id);
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Malformed {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("{other:?}"),
                },
            })?;
        let mut entries = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
            let field = |idx: usize| row.get(idx).unwrap_or("").trim();
            let parse_opt = |s: &str| -> std::result::Result<Option<u32>, String> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|e| format!("bad rank `{s}`: {e}"))
                }
            };
            let malformed = |message: String| Error::Malformed {
                path: path.to_path_buf(),
                line,
                message,
            };
            let journal_id = field(0)
                .parse()
                .map_err(|e| malformed(format!("bad journal_id `{}`: {e}", field(0))))?;
            entries.push(JournalRank {
                journal_id,
                citescore_rank: parse_opt(field(1)).map_err(malformed)?,
                eigenfactor_rank: parse_opt(field(2)).map_err(malformed)?,
            });
        }
        JournalRanks::new(entries)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let opt = |v: Option<u32>| v.map(|r| r.to_string()).unwrap_or_default();
        let mut body = String::from("journal_id,citescore_rank,eigenfactor_rank\n");
        for j in self.sorted() {
            body.push_str(&format!(
                "{},{},{}\n",
                j.journal_id,
                opt(j.citescore_rank),
                opt(j.eigenfactor_rank)
            ));
        }
        out.write_all(body.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusMeta {
    pub first_year: Year,
    pub last_year: Year,
    pub paper_count: usize,
    pub yearly_totals: BTreeMap<Year, usize>,
}

impl CorpusMeta {
    pub fn total(&self, year: Year) -> usize {
        self.yearly_totals.get(&year).copied().unwrap_or(0)
    }

    pub fn contains_year(&self, year: Year) -> bool {
        year >= self.first_year && year <= self.last_year
    }
}

/// Counts gathered while normalizing input records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub papers: usize,
    pub journals: usize,
    pub internal_references: usize,
    pub external_references: usize,
    pub forward_references: usize,
    pub dropped_duplicate_references: usize,
    pub dropped_self_references: usize,
    pub papers_without_references: usize,
    pub papers_without_references_or_terms: usize,
    pub journals_file_missing: bool,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    index: HashMap<PaperId, u32>,
    meta: CorpusMeta,
    journals: JournalRanks,
    validation: ValidationReport,
}

/// Lowercase, split on non-alphanumerics, drop tokens shorter than two chars.
pub fn normalize_terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Deserialize)]
struct PaperLine {
    paper_id: PaperId,
    year: Option<Year>,
    #[serde(default)]
    doc_type: DocType,
    #[serde(default)]
    journal_id: Option<u64>,
    #[serde(default)]
    references: Vec<PaperId>,
    #[serde(default)]
    terms: Vec<String>,
    #[serde(default)]
    text: Option<String>,
}

impl Corpus {
    /// Builds a corpus from in-memory records, normalizing references
    /// (duplicates and self-citations are dropped and counted).
    pub fn from_papers(
        papers: impl IntoIterator<Item = PaperRecord>,
        journals: JournalRanks,
    ) -> Result<Self> {
        let mut papers: Vec<PaperRecord> = papers.into_iter().collect();
        papers.sort_by_key(|p| p.paper_id);
        if let Some(w) = papers.windows(2).find(|w| w[0].paper_id == w[1].paper_id) {
            return Err(Error::DuplicatePaper(w[0].paper_id));
        }
        if papers.is_empty() {
            return Err(Error::InsufficientData("corpus contains no papers".into()));
        }
        let mut validation = ValidationReport {
            papers: papers.len(),
            journals: journals.len(),
            ..Default::default()
        };
        for p in papers.iter_mut() {
            let before = p.references.len();
            let mut seen = HashSet::with_capacity(before);
            let own = p.paper_id;
            let mut self_refs = 0;
            p.references.retain(|&r| {
                if r == own {
                    self_refs += 1;
                    false
                } else {
                    seen.insert(r)
                }
            });
            validation.dropped_self_references += self_refs;
            validation.dropped_duplicate_references += before - self_refs - p.references.len();
        }
        let index: HashMap<PaperId, u32> = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id, i as u32))
            .collect();

        let mut yearly_totals = BTreeMap::new();
        for p in &papers {
            *yearly_totals.entry(p.year).or_insert(0) += 1;
            if p.references.is_empty() {
                validation.papers_without_references += 1;
                if p.terms.is_empty() {
                    validation.papers_without_references_or_terms += 1;
                }
            }
            for r in &p.references {
                match index.get(r) {
                    Some(&j) => {
                        validation.internal_references += 1;
                        if papers[j as usize].year > p.year {
                            validation.forward_references += 1;
                        }
                    }
                    None => validation.external_references += 1,
                }
            }
        }
        let meta = CorpusMeta {
            first_year: *yearly_totals.keys().next().expect("nonempty"),
            last_year: *yearly_totals.keys().next_back().expect("nonempty"),
            paper_count: papers.len(),
            yearly_totals,
        };
        Ok(Corpus {
            papers,
            index,
            meta,
            journals,
            validation,
        })
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn meta(&self) -> &CorpusMeta {
        &self.meta
    }

    pub fn journals(&self) -> &JournalRanks {
        &self.journals
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn get(&self, id: PaperId) -> Option<&PaperRecord> {
        self.index.get(&id).map(|&i| &self.papers[i as usize])
    }

    /// Position of a paper in [`Corpus::papers`].
    pub fn position(&self, id: PaperId) -> Option<usize> {
        self.index.get(&id).map(|&i| i as usize)
    }

    pub fn is_internal(&self, id: PaperId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn papers_in_year(&self, year: Year) -> impl Iterator<Item = &PaperRecord> {
        self.papers.iter().filter(move |p| p.year == year)
    }

    /// Writes papers as JSON-lines, sorted by id.
    pub fn write_papers(&self, path: &Path) -> Result<()> {
        write_papers(path, &self.papers)
    }
}

pub fn write_papers(path: &Path, papers: &[PaperRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in papers {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads and validates a corpus. A missing journals file yields an empty rank
/// table (recorded in the validation report).
pub fn load_corpus(papers_path: &Path, journals_path: Option<&Path>) -> Result<Corpus> {
    let file = File::open(papers_path).map_err(|e| Error::io(papers_path, e))?;
    let reader = BufReader::new(file);
    let mut papers = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(papers_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: papers_path.to_path_buf(),
            line: line_no,
            message,
        };
        let raw: PaperLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let year = raw
            .year
            .ok_or_else(|| malformed(format!("paper {} has no publication year", raw.paper_id)))?;
        if !seen.insert(raw.paper_id) {
            return Err(Error::DuplicatePaper(raw.paper_id));
        }
        let mut terms: Vec<String> = raw.terms.iter().flat_map(|t| normalize_terms(t)).collect();
        if let Some(text) = raw.text.as_deref() {
            terms.extend(normalize_terms(text));
        }
        papers.push(PaperRecord {
            paper_id: raw.paper_id,
            year,
            doc_type: raw.doc_type,
            journal_id: raw.journal_id,
            references: raw.references,
            terms,
        });
    }

    let mut missing = false;
    let journals = match journals_path {
        Some(path) if path.exists() => JournalRanks::load(path)?,
        Some(path) => {
            log::warn!("journals file {} not found; using empty rank table", path.display());
            missing = true;
            JournalRanks::default()
        }
        None => JournalRanks::default(),
    };
    let mut corpus = Corpus::from_papers(papers, journals)?;
    corpus.validation.journals_file_missing = missing;
    Ok(corpus)
}

/// Per-community yearly paper counts over a partition, with the corpus yearly
/// totals as denominators.
#[derive(Debug, Clone)]
pub struct ShareTable {
    counts: HashMap<RcId, BTreeMap<Year, u32>>,
    totals: BTreeMap<Year, usize>,
    first_year: Year,
    last_year: Year,
}

impl ShareTable {
    pub fn build(corpus: &Corpus, partition: &Partition) -> Self {
        let mut counts: HashMap<RcId, BTreeMap<Year, u32>> = HashMap::new();
        for p in corpus.papers() {
            if let Some(rc) = partition.rc_of(p.paper_id) {
                *counts.entry(rc).or_default().entry(p.year).or_insert(0) += 1;
            }
        }
        ShareTable {
            counts,
            totals: corpus.meta().yearly_totals.clone(),
            first_year: corpus.meta().first_year,
            last_year: corpus.meta().last_year,
        }
    }

    pub fn first_year(&self) -> Year {
        self.first_year
    }

    pub fn last_year(&self) -> Year {
        self.last_year
    }

    pub fn count(&self, rc: RcId, year: Year) -> u32 {
        self.counts
            .get(&rc)
            .and_then(|m| m.get(&year))
            .copied()
            .unwrap_or(0)
    }

    pub fn counts(&self, rc: RcId) -> Option<&BTreeMap<Year, u32>> {
        self.counts.get(&rc)
    }

    pub fn total(&self, year: Year) -> usize {
        self.totals.get(&year).copied().unwrap_or(0)
    }

    /// Community ids present in the table, ascending.
    pub fn rc_ids(&self) -> Vec<RcId> {
        let mut ids: Vec<RcId> = self.counts.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn share(&self, rc: RcId, year: Year) -> Result<f64> {
        publication_share(self, rc, year)
    }

    /// Shares for every corpus year in `[first_year, through]` with a
    /// nonzero yearly total.
    pub fn shares_through(&self, rc: RcId, through: Year) -> BTreeMap<Year, f64> {
        (self.first_year..=through.min(self.last_year))
            .filter(|&y| self.total(y) > 0)
            .map(|y| (y, self.count(rc, y) as f64 / self.total(y) as f64))
            .collect()
    }
}

/// Fraction of all papers published in `year` that belong to `rc`.
pub fn publication_share(table: &ShareTable, rc: RcId, year: Year) -> Result<f64> {
    if year < table.first_year || year > table.last_year {
        return Err(Error::YearOutOfSpan {
            year,
            first: table.first_year,
            last: table.last_year,
        });
    }
    let total = table.total(year);
    if total == 0 {
        return Err(Error::EmptyYear(year));
    }
    Ok(table.count(rc, year) as f64 / total as f64)
}
