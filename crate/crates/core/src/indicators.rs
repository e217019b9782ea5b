//! The ten community indicators, their transforms, and per-year
//! standardization.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::cluster::Partition;
use crate::corpus::{Corpus, DocType};
use crate::error::{Error, Result};
use crate::{RcId, Year};

pub const DEFAULT_WINDOW: i32 = 10;

/// Clip applied to standardized rvit.
pub const RVIT_CLIP: f64 = 3.0;
/// Clip applied to the raw within-community rvit Z-score.
pub const DELTA_RVIT_CLIP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Indicator {
    Stage,
    Cvit,
    Rvit,
    DeltaRvit,
    Ntopj,
    Ctopj,
    Eigen,
    Nart,
    Nrev,
    Nref,
}

impl Indicator {
    pub const ALL: [Indicator; 10] = [
        Indicator::Stage,
        Indicator::Cvit,
        Indicator::Rvit,
        Indicator::DeltaRvit,
        Indicator::Ntopj,
        Indicator::Ctopj,
        Indicator::Eigen,
        Indicator::Nart,
        Indicator::Nrev,
        Indicator::Nref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Stage => "stage",
            Indicator::Cvit => "cvit",
            Indicator::Rvit => "rvit",
            Indicator::DeltaRvit => "delta_rvit",
            Indicator::Ntopj => "ntopj",
            Indicator::Ctopj => "ctopj",
            Indicator::Eigen => "eigen",
            Indicator::Nart => "nart",
            Indicator::Nrev => "nrev",
            Indicator::Nref => "nref",
        }
    }

    pub fn from_name(name: &str) -> Option<Indicator> {
        Indicator::ALL.into_iter().find(|i| i.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Indicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawIndicators {
    pub rc_id: RcId,
    pub fy: Year,
    pub pk: Year,
    pub stage: f64,
    pub cvit: f64,
    /// `None` when no fy paper has a reference with a known year.
    pub rvit: Option<f64>,
    pub delta_rvit: f64,
    pub ntopj: u32,
    pub ctopj: u32,
    pub eigen: u32,
    pub nart: u32,
    pub nrev: u32,
    pub nref: u32,
    pub papers_in_fy: u32,
}

impl RawIndicators {
    fn count(&self, ind: Indicator) -> u32 {
        match ind {
            Indicator::Ntopj => self.ntopj,
            Indicator::Ctopj => self.ctopj,
            Indicator::Eigen => self.eigen,
            Indicator::Nart => self.nart,
            Indicator::Nrev => self.nrev,
            Indicator::Nref => self.nref,
            _ => unreachable!("not a count indicator"),
        }
    }

    /// Value after the indicator's transform (before standardization).
    pub fn transformed(&self, ind: Indicator) -> Option<f64> {
        Some(match ind {
            Indicator::Stage => self.stage,
            Indicator::Cvit => self.cvit.ln(),
            Indicator::Rvit => self.rvit?.powf(0.25),
            Indicator::DeltaRvit => self.delta_rvit,
            other => (self.count(other) as f64).ln_1p(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedIndicators {
    pub rc_id: RcId,
    pub fy: Year,
    pub values: [f64; 10],
}

impl StandardizedIndicators {
    pub fn get(&self, ind: Indicator) -> f64 {
        self.values[ind.index()]
    }

    pub fn by_name(&self, name: &str) -> Result<f64> {
        Indicator::from_name(name)
            .map(|i| self.get(i))
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }
}

/// Latest year in `shares` up to `fy` at which the share is maximal.
pub fn peak_year(shares: &BTreeMap<Year, f64>, fy: Year) -> Result<Year> {
    let mut best: Option<(Year, f64)> = None;
    for (&y, &s) in shares.range(..=fy) {
        if s > 0.0 && best.is_none_or(|(_, b)| s >= b) {
            best = Some((y, s));
        }
    }
    best.map(|(y, _)| y)
        .ok_or_else(|| Error::InsufficientData(format!("no papers through {fy}")))
}

#[derive(Debug, Clone, Copy, Default)]
struct YearAgg {
    papers: u32,
    nart: u32,
    nrev: u32,
    nref: u32,
    ntopj: u32,
    eigen: u32,
    ctopj: u32,
    rvit_sum: f64,
    rvit_n: u32,
}

impl YearAgg {
    fn rvit(&self) -> Option<f64> {
        (self.rvit_n > 0).then(|| self.rvit_sum / self.rvit_n as f64)
    }
}

/// Per-community yearly aggregates from which every indicator is derived.
#[derive(Debug, Clone, Default)]
pub struct RcYearTable {
    aggs: HashMap<RcId, BTreeMap<Year, YearAgg>>,
    totals: BTreeMap<Year, usize>,
}

impl RcYearTable {
    pub fn build(corpus: &Corpus, partition: &Partition) -> Self {
        let journals = corpus.journals();
        let mut aggs: HashMap<RcId, BTreeMap<Year, YearAgg>> = HashMap::new();
        for p in corpus.papers() {
            let Some(rc) = partition.rc_of(p.paper_id) else {
                continue;
            };
            let a = aggs.entry(rc).or_default().entry(p.year).or_default();
            a.papers += 1;
            match p.doc_type {
                DocType::Article => a.nart += 1,
                DocType::Review => a.nrev += 1,
                DocType::Other => {}
            }
            a.nref += p.references.len() as u32;
            if journals.is_citescore_top(p.journal_id) {
                a.ntopj += 1;
            }
            if journals.is_eigenfactor_top(p.journal_id) {
                a.eigen += 1;
            }
            for r in &p.references {
                let Some(cited) = corpus.get(*r) else {
                    continue;
                };
                let age = (p.year - cited.year).max(0);
                a.rvit_sum += 1.0 / (age as f64 + 1.0);
                a.rvit_n += 1;
                if journals.is_citescore_top(cited.journal_id) {
                    a.ctopj += 1;
                }
            }
        }
        RcYearTable {
            aggs,
            totals: corpus.meta().yearly_totals.clone(),
        }
    }

    pub fn rc_ids(&self) -> Vec<RcId> {
        let mut ids: Vec<RcId> = self.aggs.keys().copied().collect();
        ids.sort_unstable();
        ids
    }

    pub fn papers(&self, rc: RcId, year: Year) -> u32 {
        self.agg(rc, year).papers
    }

    fn agg(&self, rc: RcId, year: Year) -> YearAgg {
        self.aggs
            .get(&rc)
            .and_then(|m| m.get(&year))
            .copied()
            .unwrap_or_default()
    }

    /// Shares of `rc` for every year through `through` with papers published.
    pub fn shares(&self, rc: RcId, through: Year) -> BTreeMap<Year, f64> {
        let Some(years) = self.aggs.get(&rc) else {
            return BTreeMap::new();
        };
        years
            .range(..=through)
            .filter_map(|(&y, a)| {
                let total = *self.totals.get(&y)?;
                (total > 0).then(|| (y, a.papers as f64 / total as f64))
            })
            .collect()
    }

    /// Raw indicators of `rc` at `fy`; `None` when the community has no
    /// papers in `[fy − window, fy]`.
    pub fn raw(&self, rc: RcId, fy: Year, window: i32) -> Option<RawIndicators> {
        let years = self.aggs.get(&rc)?;
        let mut n = 0u32;
        let mut recip = 0.0;
        for (&y, a) in years.range(fy - window..=fy) {
            n += a.papers;
            recip += a.papers as f64 / (fy - y + 1) as f64;
        }
        if n == 0 {
            return None;
        }
        let pk = peak_year(&self.shares(rc, fy), fy).ok()?;
        let cur = self.agg(rc, fy);
        let rvit = cur.rvit();
        Some(RawIndicators {
            rc_id: rc,
            fy,
            pk,
            stage: 1.0 / (fy - pk + 1) as f64,
            cvit: recip / n as f64,
            rvit,
            delta_rvit: rvit.map_or(0.0, |r| {
                let history: Vec<f64> = years
                    .range(fy - window..fy)
                    .filter_map(|(_, a)| a.rvit())
                    .collect();
                delta_rvit(r, &history)
            }),
            ntopj: cur.ntopj,
            ctopj: cur.ctopj,
            eigen: cur.eigen,
            nart: cur.nart,
            nrev: cur.nrev,
            nref: cur.nref,
            papers_in_fy: cur.papers,
        })
    }

    /// Raw indicators for every community active in `[fy − window, fy]`,
    /// ordered by rc id.
    pub fn raw_for_year(&self, fy: Year, window: i32) -> Vec<RawIndicators> {
        self.rc_ids()
            .par_iter()
            .filter_map(|&rc| self.raw(rc, fy, window))
            .collect()
    }
}

/// Z-score of `current` against `history` (population stdev), clipped to
/// ±5; 0 with fewer than three history values or a flat history.
pub fn delta_rvit(current: f64, history: &[f64]) -> f64 {
    if history.len() < 3 {
        return 0.0;
    }
    let (mean, sd) = moments(history);
    if sd < 1e-12 {
        return 0.0;
    }
    ((current - mean) / sd).clamp(-DELTA_RVIT_CLIP, DELTA_RVIT_CLIP)
}

/// Population mean and standard deviation.
pub fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn standardize(col: &mut [f64], name: &str, fy: Year) {
    let (mean, sd) = moments(col);
    if sd < 1e-12 {
        log::warn!("fy {fy}: indicator {name} is constant; standardized to 0");
        col.iter_mut().for_each(|x| *x = 0.0);
    } else {
        col.iter_mut().for_each(|x| *x = (*x - mean) / sd);
    }
}

/// Transformed and standardized columns for one forecast year, before the
/// rvit clip. Missing rvit values take the mean of the defined transformed
/// values, so they standardize to 0.
pub fn standardized_columns(rows: &[RawIndicators]) -> Result<Vec<[f64; 10]>> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let fy = rows[0].fy;
    if let Some(r) = rows.iter().find(|r| r.fy != fy) {
        return Err(Error::InsufficientData(format!(
            "rows from different forecast years ({fy} and {})",
            r.fy
        )));
    }
    let mut out = vec![[0.0; 10]; rows.len()];
    for ind in Indicator::ALL {
        let raw: Vec<Option<f64>> = rows.iter().map(|r| r.transformed(ind)).collect();
        let defined: Vec<f64> = raw.iter().flatten().copied().collect();
        let fill = if defined.is_empty() {
            0.0
        } else {
            defined.iter().sum::<f64>() / defined.len() as f64
        };
        let mut col: Vec<f64> = raw.iter().map(|v| v.unwrap_or(fill)).collect();
        standardize(&mut col, ind.name(), fy);
        for (row, v) in out.iter_mut().zip(col) {
            row[ind.index()] = v;
        }
    }
    Ok(out)
}

/// Transforms and standardizes one forecast year's rows, then clips rvit.
pub fn transform_and_standardize(rows: &[RawIndicators]) -> Result<Vec<StandardizedIndicators>> {
    let cols = standardized_columns(rows)?;
    Ok(rows
        .iter()
        .zip(cols)
        .map(|(r, mut values)| {
            let i = Indicator::Rvit.index();
            values[i] = values[i].clamp(-RVIT_CLIP, RVIT_CLIP);
            StandardizedIndicators {
                rc_id: r.rc_id,
                fy: r.fy,
                values,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRow {
    pub raw: RawIndicators,
    pub std: StandardizedIndicators,
}

/// Raw and standardized indicators for every active community at each `fy`.
pub fn compute_indicators(table: &RcYearTable, fys: &[Year], window: i32) -> Result<Vec<IndicatorRow>> {
    let mut out = Vec::new();
    for &fy in fys {
        let raw = table.raw_for_year(fy, window);
        let std = transform_and_standardize(&raw)?;
        out.extend(raw.into_iter().zip(std).map(|(raw, std)| IndicatorRow { raw, std }));
    }
    Ok(out)
}

const RAW_COLUMNS: [&str; 4] = ["rc_id", "fy", "pk", "papers_in_fy"];

fn header() -> Vec<String> {
    RAW_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(Indicator::ALL.iter().map(|i| i.name().to_string()))
        .chain(Indicator::ALL.iter().map(|i| format!("{}_s", i.name())))
        .collect()
}

/// Writes rows as TSV, raw and standardized columns side by side.
pub fn write_indicators(path: &Path, rows: &[IndicatorRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", header().join("\t")).map_err(io)?;
    for row in rows {
        let r = &row.raw;
        let rvit = r.rvit.map_or("NA".to_string(), |v| v.to_string());
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.rc_id,
            r.fy,
            r.pk,
            r.papers_in_fy,
            r.stage,
            r.cvit,
            rvit,
            r.delta_rvit,
            r.ntopj,
            r.ctopj,
            r.eigen,
            r.nart,
            r.nrev,
            r.nref
        )
        .map_err(io)?;
        for v in row.std.values {
            write!(out, "\t{v}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_indicators(path: &Path) -> Result<Vec<IndicatorRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Malformed {
                path: path.to_path_buf(),
                line: 0,
                message: format!("{other:?}"),
            },
        })?;
    let expected = header();
    if reader.headers()?.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected indicator header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |col: usize| Error::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("bad value in column {}", expected[col]),
        };
        let int = |col: usize| -> Result<i64> { rec[col].parse().map_err(|_| bad(col)) };
        let float = |col: usize| -> Result<f64> { rec[col].parse().map_err(|_| bad(col)) };
        let raw = RawIndicators {
            rc_id: int(0)? as RcId,
            fy: int(1)? as Year,
            pk: int(2)? as Year,
            papers_in_fy: int(3)? as u32,
            stage: float(4)?,
            cvit: float(5)?,
            rvit: if &rec[6] == "NA" { None } else { Some(float(6)?) },
            delta_rvit: float(7)?,
            ntopj: int(8)? as u32,
            ctopj: int(9)? as u32,
            eigen: int(10)? as u32,
            nart: int(11)? as u32,
            nrev: int(12)? as u32,
            nref: int(13)? as u32,
        };
        let mut values = [0.0; 10];
        for (k, v) in values.iter_mut().enumerate() {
            *v = float(14 + k)?;
        }
        rows.push(IndicatorRow {
            std: StandardizedIndicators {
                rc_id: raw.rc_id,
                fy: raw.fy,
                values,
            },
            raw,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{JournalRank, JournalRanks, PaperRecord};
    use crate::PaperId;

    fn raw(rc: RcId, stage: f64) -> RawIndicators {
        RawIndicators {
            rc_id: rc,
            fy: 2010,
            pk: 2010,
            stage,
            cvit: 0.5,
            rvit: Some(0.5),
            delta_rvit: 0.0,
            ntopj: 0,
            ctopj: 0,
            eigen: 0,
            nart: 1,
            nrev: 0,
            nref: 3,
            papers_in_fy: 1,
        }
    }

    #[test]
    fn peak_year_cases() {
        let s = BTreeMap::from([(2010, 0.001), (2011, 0.002), (2012, 0.0015)]);
        assert_eq!(peak_year(&s, 2012).unwrap(), 2011);
        let s = BTreeMap::from([(2010, 0.002), (2012, 0.002)]);
        assert_eq!(peak_year(&s, 2012).unwrap(), 2012);
        let s = BTreeMap::from([(2010, 0.001), (2011, 0.002), (2012, 0.003)]);
        assert_eq!(peak_year(&s, 2012).unwrap(), 2012);
        assert_eq!(peak_year(&s, 2011).unwrap(), 2011);
        assert!(peak_year(&BTreeMap::new(), 2012).is_err());
    }

    #[test]
    fn two_row_stage_standardizes_to_unit() {
        let rows = [raw(1, 1.0), raw(2, 0.5)];
        let s = transform_and_standardize(&rows).unwrap();
        assert_eq!(s[0].get(Indicator::Stage), 1.0);
        assert_eq!(s[1].get(Indicator::Stage), -1.0);
        // constant columns collapse to zero
        assert_eq!(s[0].get(Indicator::Cvit), 0.0);
        assert_eq!(s[1].get(Indicator::Nref), 0.0);
    }

    #[test]
    fn one_row_is_rejected() {
        assert!(transform_and_standardize(&[raw(1, 1.0)]).is_err());
    }

    #[test]
    fn missing_rvit_standardizes_to_zero() {
        let mut rows = vec![raw(1, 1.0), raw(2, 0.5), raw(3, 0.25)];
        rows[0].rvit = Some(0.9);
        rows[1].rvit = Some(0.2);
        rows[2].rvit = None;
        let s = transform_and_standardize(&rows).unwrap();
        assert!(s[2].get(Indicator::Rvit).abs() < 1e-12);
    }

    #[test]
    fn delta_rvit_rules() {
        assert_eq!(delta_rvit(0.9, &[0.5, 0.5]), 0.0);
        assert_eq!(delta_rvit(0.9, &[0.5, 0.5, 0.5]), 0.0);
        // mean 0.5, population sd sqrt(2/3)*0.1
        let z = delta_rvit(0.6, &[0.4, 0.5, 0.6]);
        assert!((z - 0.1 / (0.02_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(delta_rvit(100.0, &[0.4, 0.5, 0.6]), 5.0);
        assert_eq!(delta_rvit(-100.0, &[0.4, 0.5, 0.6]), -5.0);
    }

    fn paper(id: PaperId, year: Year, refs: &[PaperId], journal: Option<u64>, doc_type: DocType) -> PaperRecord {
        PaperRecord {
            paper_id: id,
            year,
            doc_type,
            journal_id: journal,
            references: refs.to_vec(),
            terms: vec![],
        }
    }

    fn table(papers: Vec<PaperRecord>, rc_of: &[(PaperId, RcId)]) -> RcYearTable {
        let journals = JournalRanks::new([
            JournalRank {
                journal_id: 1,
                citescore_rank: Some(3),
                eigenfactor_rank: Some(400),
            },
            JournalRank {
                journal_id: 2,
                citescore_rank: Some(900),
                eigenfactor_rank: Some(10),
            },
        ])
        .unwrap();
        let corpus = Corpus::from_papers(papers, journals).unwrap();
        let partition = Partition::new(rc_of.iter().copied().collect(), 2010);
        RcYearTable::build(&corpus, &partition)
    }

    #[test]
    fn cvit_endpoints() {
        let t = table(
            vec![paper(1, 2000, &[], None, DocType::Article), paper(2, 2010, &[], None, DocType::Article)],
            &[(1, 0), (2, 1)],
        );
        assert_eq!(t.raw(1, 2010, 10).unwrap().cvit, 1.0);
        assert_eq!(t.raw(0, 2010, 10).unwrap().cvit, 1.0 / 11.0);
        assert!(t.raw(0, 2011, 10).is_none());
    }

    #[test]
    fn counts_and_reference_ages() {
        let t = table(
            vec![
                paper(1, 2005, &[], Some(1), DocType::Article),
                paper(2, 2008, &[], Some(2), DocType::Article),
                paper(3, 2010, &[1, 2, 99], Some(1), DocType::Article),
                paper(4, 2010, &[1], Some(2), DocType::Review),
                paper(5, 2010, &[], None, DocType::Other),
                // forward reference clamps to age 0
                paper(6, 2009, &[3], None, DocType::Article),
            ],
            &[(1, 0), (2, 0), (3, 0), (4, 0), (5, 0), (6, 0)],
        );
        let r = t.raw(0, 2010, 10).unwrap();
        assert_eq!(r.papers_in_fy, 3);
        assert_eq!((r.nart, r.nrev), (1, 1));
        assert_eq!(r.nref, 4);
        assert_eq!((r.ntopj, r.eigen), (1, 1));
        assert_eq!(r.ctopj, 2);
        let expected = (1.0 / 6.0 + 1.0 / 3.0 + 1.0 / 6.0) / 3.0;
        assert!((r.rvit.unwrap() - expected).abs() < 1e-15);
        assert_eq!(t.raw(0, 2009, 10).unwrap().rvit, Some(1.0));
        assert_eq!(r.pk, 2010);
        assert_eq!(r.stage, 1.0);
    }

    #[test]
    fn stage_gap_five() {
        let t = table(
            vec![
                paper(1, 2005, &[], None, DocType::Article),
                paper(2, 2005, &[], None, DocType::Article),
                paper(3, 2010, &[], None, DocType::Article),
                paper(4, 2010, &[], None, DocType::Article),
                paper(5, 2010, &[], None, DocType::Article),
            ],
            &[(1, 0), (2, 0), (3, 0)],
        );
        let r = t.raw(0, 2010, 10).unwrap();
        assert_eq!(r.pk, 2005);
        assert_eq!(r.stage, 1.0 / 6.0);
        assert_eq!(format!("{:.3}", r.stage), "0.167");
        assert!(r.stage >= 0.166 && r.stage < 0.167);
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let mut rows = vec![raw(1, 1.0), raw(2, 0.5), raw(3, 1.0 / 3.0)];
        rows[2].rvit = None;
        rows[1].cvit = 0.123456789012345;
        let std = transform_and_standardize(&rows).unwrap();
        let table: Vec<IndicatorRow> = rows.into_iter().zip(std).map(|(raw, std)| IndicatorRow { raw, std }).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ind.tsv");
        write_indicators(&path, &table).unwrap();
        assert_eq!(read_indicators(&path).unwrap(), table);
    }
}
