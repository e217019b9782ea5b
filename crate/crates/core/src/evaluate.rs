//! Contingency metrics per slice and the lifecycle tables.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{growth_rate, label_exceptional, missing_outcomes, oracle_n, select_top_n, ForecastRecord, HORIZON};
use crate::indicators::RcYearTable;
use crate::{RcId, Year};

/// Forecast-skill threshold for CSI.
pub const FUSE_CSI: f64 = 0.25;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn add(&mut self, predicted: bool, outcome: bool) {
        match (predicted, outcome) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceKind {
    Overall,
    /// RY > 0: forecasts made after the model year.
    Actionable,
    /// RY ≤ 0: the model already saw the forecast year.
    Circumstantial,
    Fy,
    Ry,
    Field,
    Discipline,
}

impl SliceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SliceKind::Overall => "overall",
            SliceKind::Actionable => "actionable",
            SliceKind::Circumstantial => "circumstantial",
            SliceKind::Fy => "fy",
            SliceKind::Ry => "ry",
            SliceKind::Field => "field",
            SliceKind::Discipline => "discipline",
        }
    }

    pub fn parse(s: &str) -> Result<SliceKind> {
        Ok(match s {
            "overall" => SliceKind::Overall,
            "actionable" => SliceKind::Actionable,
            "circumstantial" => SliceKind::Circumstantial,
            "fy" => SliceKind::Fy,
            "ry" => SliceKind::Ry,
            "field" => SliceKind::Field,
            "discipline" => SliceKind::Discipline,
            other => return Err(Error::Config(format!("unknown slice `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceMode {
    /// Each slice re-ranks its own records with its own oracle-n.
    #[default]
    Reselected,
    /// Slices reuse the predicted flags already on the records.
    Inherited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyReport {
    pub slice: SliceKind,
    pub value: Option<i64>,
    pub min_papers: u32,
    pub records: usize,
    pub xg: usize,
    pub selected: usize,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub csi: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    pub degenerate: Vec<String>,
    pub meets_fuse: bool,
}

impl ContingencyReport {
    pub fn from_counts(slice: SliceKind, value: Option<i64>, min_papers: u32, c: Counts) -> Self {
        let mut degenerate = Vec::new();
        let mut ratio = |num: usize, den: usize, name: &str| {
            if den == 0 {
                degenerate.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(c.tp, c.tp + c.fp, "precision");
        let recall = ratio(c.tp, c.tp + c.fn_, "recall");
        let csi = ratio(c.tp, c.tp + c.fp + c.fn_, "csi");
        ContingencyReport {
            slice,
            value,
            min_papers,
            records: c.total(),
            xg: c.tp + c.fn_,
            selected: c.tp + c.fp,
            counts: c,
            precision,
            recall,
            csi,
            degenerate,
            meets_fuse: csi >= FUSE_CSI,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

/// 2×2 table of the records' predicted flags against outcomes.
pub fn contingency(records: &[ForecastRecord]) -> Result<ContingencyReport> {
    if let Some(e) = missing_outcomes(records) {
        return Err(e);
    }
    let mut c = Counts::default();
    for r in records {
        c.add(r.predicted, r.outcome == Some(true));
    }
    Ok(ContingencyReport::from_counts(SliceKind::Overall, None, 0, c))
}

/// Community → (discipline, field).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaxonomyMap {
    map: HashMap<RcId, (u32, u32)>,
}

impl TaxonomyMap {
    pub fn new(map: HashMap<RcId, (u32, u32)>) -> Self {
        TaxonomyMap { map }
    }

    pub fn get(&self, rc: RcId) -> Option<(u32, u32)> {
        self.map.get(&rc).copied()
    }

    /// Reads `rc_id\tdiscipline_id\tfield_id` rows; a header is optional.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut map = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("rc_id")) {
                continue;
            }
            let bad = || Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected rc_id<TAB>discipline_id<TAB>field_id".into(),
            };
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let rc: RcId = parts[0].parse().map_err(|_| bad())?;
            let d: u32 = parts[1].parse().map_err(|_| bad())?;
            let f: u32 = parts[2].parse().map_err(|_| bad())?;
            map.insert(rc, (d, f));
        }
        Ok(TaxonomyMap { map })
    }
}

/// Counts for one slice. In re-selected mode each forecast year within the
/// slice is ranked separately with its own oracle-n and the counts summed.
fn slice_counts(records: &[&ForecastRecord], mode: SliceMode) -> Counts {
    let mut c = Counts::default();
    match mode {
        SliceMode::Inherited => {
            for r in records {
                c.add(r.predicted, r.outcome == Some(true));
            }
        }
        SliceMode::Reselected => {
            let mut by_fy: BTreeMap<Year, Vec<ForecastRecord>> = BTreeMap::new();
            for r in records {
                by_fy.entry(r.fy).or_default().push((*r).clone());
            }
            for (_, mut recs) in by_fy {
                let xg = recs.iter().filter(|r| r.outcome == Some(true)).count();
                let n = oracle_n(xg).min(recs.len());
                select_top_n(&mut recs, n).expect("n bounded by record count");
                for r in &recs {
                    c.add(r.predicted, r.outcome == Some(true));
                }
            }
        }
    }
    c
}

/// One report per slice: overall, actionable (RY > 0), circumstantial
/// (RY ≤ 0), then one per value of each kind in `by`. Records with fewer
/// than `min_papers` papers in their forecast year are dropped first.
pub fn evaluate_slices(
    records: &[ForecastRecord],
    taxonomy: Option<&TaxonomyMap>,
    min_papers: u32,
    mode: SliceMode,
    by: &[SliceKind],
) -> Result<Vec<ContingencyReport>> {
    if let Some(e) = missing_outcomes(records) {
        return Err(e);
    }
    let kept: Vec<&ForecastRecord> = records.iter().filter(|r| r.papers_in_fy >= min_papers).collect();
    let mut slices: Vec<(SliceKind, Option<i64>, Vec<&ForecastRecord>)> = vec![
        (SliceKind::Overall, None, kept.clone()),
        (SliceKind::Actionable, None, kept.iter().copied().filter(|r| r.ry > 0).collect()),
        (SliceKind::Circumstantial, None, kept.iter().copied().filter(|r| r.ry <= 0).collect()),
    ];
    for kind in by {
        let key = |r: &ForecastRecord| -> Result<Option<i64>> {
            Ok(match kind {
                SliceKind::Fy => Some(r.fy as i64),
                SliceKind::Ry => Some(r.ry as i64),
                SliceKind::Field | SliceKind::Discipline => {
                    let tax = taxonomy.ok_or_else(|| {
                        Error::Config(format!("slicing by {} needs a taxonomy map", kind.name()))
                    })?;
                    tax.get(r.rc_id).map(|(d, f)| {
                        if *kind == SliceKind::Field {
                            f as i64
                        } else {
                            d as i64
                        }
                    })
                }
                _ => return Ok(None),
            })
        };
        if matches!(kind, SliceKind::Overall | SliceKind::Actionable | SliceKind::Circumstantial) {
            continue;
        }
        let mut groups: BTreeMap<i64, Vec<&ForecastRecord>> = BTreeMap::new();
        for r in &kept {
            if let Some(k) = key(r)? {
                groups.entry(k).or_default().push(r);
            }
        }
        slices.extend(groups.into_iter().map(|(k, v)| (kind.clone(), Some(k), v)));
    }
    Ok(slices
        .into_par_iter()
        .map(|(kind, value, recs)| {
            ContingencyReport::from_counts(kind, value, min_papers, slice_counts(&recs, mode))
        })
        .collect())
}

pub fn write_reports_tsv(path: &Path, reports: &[ContingencyReport]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(
        out,
        "slice\tvalue\tmin_papers\trecords\txg\tselected\ttp\tfp\tfn\ttn\tprecision\trecall\tcsi\tdegenerate\tmeets_fuse"
    )
    .map_err(io)?;
    for r in reports {
        let value = r.value.map_or(String::new(), |v| v.to_string());
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.slice.name(),
            value,
            r.min_papers,
            r.records,
            r.xg,
            r.selected,
            r.counts.tp,
            r.counts.fp,
            r.counts.fn_,
            r.counts.tn,
            r.precision,
            r.recall,
            r.csi,
            r.degenerate.join(","),
            u8::from(r.meets_fuse)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleRow {
    /// `"0"` … `"5"` or `">5"`.
    pub gap: String,
    pub stage: f64,
    pub count: usize,
    pub pct_rc: Option<f64>,
    pub xg: Option<usize>,
    pub pct_xg: Option<f64>,
    pub new_peak: Option<usize>,
    pub pct_new_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleReport {
    pub fy: Year,
    pub min_papers: u32,
    pub rows: Vec<LifecycleRow>,
}

fn pct(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Exceptional growth and next-year peaks by the gap between forecast year
/// and peak year. The xg column needs shares through `fy + 3`, the peak
/// column through `fy + 1`; each is omitted when `last_year` falls short.
pub fn lifecycle_report(
    table: &RcYearTable,
    last_year: Year,
    fy: Year,
    min_papers: u32,
    window: i32,
) -> LifecycleReport {
    let raws: Vec<_> = table
        .raw_for_year(fy, window)
        .into_iter()
        .filter(|r| r.papers_in_fy >= min_papers)
        .collect();
    let with_xg = fy + HORIZON <= last_year;
    let with_peak = fy < last_year;
    let mut buckets = vec![(0usize, 0usize, 0usize); 7];
    for r in &raws {
        let gap = ((r.fy - r.pk) as usize).min(6);
        let b = &mut buckets[gap];
        b.0 += 1;
        if with_xg {
            let shares = table.shares(r.rc_id, fy + HORIZON);
            if growth_rate(&shares, r.pk, fy + HORIZON).is_ok_and(label_exceptional) {
                b.1 += 1;
            }
        }
        if with_peak {
            let shares = table.shares(r.rc_id, fy + 1);
            let prior_max = shares.range(..=fy).map(|(_, &s)| s).fold(0.0, f64::max);
            if shares.get(&(fy + 1)).is_some_and(|&s| s > prior_max) {
                b.2 += 1;
            }
        }
    }
    let total = raws.len();
    let rows = buckets
        .into_iter()
        .enumerate()
        .map(|(gap, (count, xg, peak))| LifecycleRow {
            gap: if gap == 6 { ">5".into() } else { gap.to_string() },
            stage: 1.0 / (gap as f64 + 1.0),
            count,
            pct_rc: pct(count, total),
            xg: with_xg.then_some(xg),
            pct_xg: if with_xg { pct(xg, count) } else { None },
            new_peak: with_peak.then_some(peak),
            pct_new_peak: if with_peak { pct(peak, count) } else { None },
        })
        .collect();
    LifecycleReport { fy, min_papers, rows }
}

pub fn write_lifecycle_tsv(path: &Path, report: &LifecycleReport) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let opt_n = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    writeln!(out, "fy\tgap\tstage\tcount\tpct_rc\txg\tpct_xg\tnew_peak\tpct_new_peak").map_err(io)?;
    for r in &report.rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            report.fy,
            r.gap,
            r.stage,
            r.count,
            opt(r.pct_rc),
            opt_n(r.xg),
            opt(r.pct_xg),
            opt_n(r.new_peak),
            opt(r.pct_new_peak)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(rc: RcId, fy: Year, ry: i32, score: f64, predicted: bool, outcome: bool, papers: u32) -> ForecastRecord {
        ForecastRecord {
            rc_id: rc,
            fy,
            ty: fy + 3,
            ry,
            score,
            predicted,
            papers_in_fy: papers,
            outcome: Some(outcome),
            growth_rate: Some(if outcome { 1.2 } else { 1.0 }),
        }
    }

    #[test]
    fn fuse_sentence() {
        let c = Counts { tp: 1, fp: 2, fn_: 1, tn: 0 };
        let r = ContingencyReport::from_counts(SliceKind::Overall, None, 0, c);
        assert_eq!(r.csi, 0.25);
        assert_eq!(r.precision, 1.0 / 3.0);
        assert_eq!(r.recall, 0.5);
        assert!(r.meets_fuse);
    }

    #[test]
    fn perfect_and_degenerate() {
        let r = ContingencyReport::from_counts(SliceKind::Overall, None, 0, Counts { tp: 4, ..Counts::default() });
        assert_eq!(r.csi, 1.0);
        let r = ContingencyReport::from_counts(SliceKind::Overall, None, 0, Counts::default());
        assert_eq!((r.precision, r.recall, r.csi), (0.0, 0.0, 0.0));
        assert_eq!(r.degenerate, vec!["precision", "recall", "csi"]);
    }

    #[test]
    fn size_filter_applies_to_every_slice() {
        let recs = vec![
            rec(1, 2010, 1, 2.0, true, true, 19),
            rec(2, 2010, 1, 1.0, false, true, 25),
            rec(3, 2010, 1, 0.5, false, false, 25),
        ];
        let reports = evaluate_slices(&recs, None, 20, SliceMode::Inherited, &[SliceKind::Fy, SliceKind::Ry]).unwrap();
        for r in &reports {
            if r.records > 0 {
                assert_eq!(r.records, 2, "{r:?}");
            }
        }
    }

    #[test]
    fn actionable_and_circumstantial_split() {
        let recs = vec![
            rec(1, 2010, 1, 2.0, false, true, 30),
            rec(2, 2010, 1, 1.0, false, false, 30),
            rec(1, 2008, -1, 2.0, false, false, 30),
        ];
        let reports = evaluate_slices(&recs, None, 0, SliceMode::Reselected, &[]).unwrap();
        let get = |k: SliceKind| reports.iter().find(|r| r.slice == k).unwrap();
        assert_eq!(get(SliceKind::Actionable).records, 2);
        assert_eq!(get(SliceKind::Circumstantial).records, 1);
        assert_eq!(get(SliceKind::Actionable).counts.tp, 1);
        assert_eq!(get(SliceKind::Actionable).selected, 2);
    }

    #[test]
    fn missing_outcome_is_an_error() {
        let mut r = rec(1, 2010, 1, 1.0, true, true, 30);
        r.outcome = None;
        assert!(contingency(&[r.clone()]).is_err());
        assert!(evaluate_slices(&[r], None, 0, SliceMode::Inherited, &[]).is_err());
    }
}
