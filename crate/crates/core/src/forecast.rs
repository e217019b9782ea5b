//! Growth outcomes, composite scores and top-N selection.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{Indicator, IndicatorRow, RcYearTable, StandardizedIndicators};
use crate::regression::{FittedModel, INTERCEPT};
use crate::{RcId, Year};

/// Annualized share growth above this rate is exceptional.
pub const XG_THRESHOLD: f64 = 1.08;
/// Years between forecast and target year.
pub const HORIZON: i32 = 3;

/// `(S_ty / S_pk)^(1/(ty − pk))`.
pub fn growth_rate_from(s_pk: f64, s_ty: f64, pk: Year, ty: Year) -> Result<f64> {
    if ty <= pk {
        return Err(Error::GrowthRate(format!("target year {ty} not after peak year {pk}")));
    }
    if !(s_pk > 0.0) {
        return Err(Error::GrowthRate(format!("share at peak year {pk} is {s_pk}")));
    }
    if !(s_ty >= 0.0) {
        return Err(Error::GrowthRate(format!("share at target year {ty} is {s_ty}")));
    }
    Ok((s_ty / s_pk).powf(1.0 / (ty - pk) as f64))
}

/// Growth rate between `pk` and `ty` read from a share series; a year
/// absent from `shares` has share 0.
pub fn growth_rate(shares: &BTreeMap<Year, f64>, pk: Year, ty: Year) -> Result<f64> {
    let s = |y| shares.get(&y).copied().unwrap_or(0.0);
    growth_rate_from(s(pk), s(ty), pk, ty)
}

/// Strictly above the threshold.
pub fn label_exceptional(gr: f64) -> bool {
    gr > XG_THRESHOLD
}

/// Number of positive forecasts under oracle sizing: `ceil(1.5·xg)`.
pub fn oracle_n(xg: usize) -> usize {
    (3 * xg).div_ceil(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeModel {
    pub terms: Vec<(String, f64)>,
    pub source: String,
}

impl Default for CompositeModel {
    /// The published coefficients; the 0.100 weight is bound to Δrvit.
    fn default() -> Self {
        CompositeModel {
            terms: vec![
                ("stage".into(), 0.292),
                ("cvit".into(), 0.473),
                ("delta_rvit".into(), 0.100),
                ("ntopj".into(), 0.113),
            ],
            source: "published".into(),
        }
    }
}

impl CompositeModel {
    pub fn new(terms: Vec<(String, f64)>, source: impl Into<String>) -> Result<Self> {
        let m = CompositeModel {
            terms,
            source: source.into(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Slopes of a fitted probit model; the intercept is dropped.
    pub fn from_fitted(model: &FittedModel) -> Result<Self> {
        let terms = model
            .variables
            .iter()
            .zip(&model.coefficients)
            .filter(|(v, _)| v.as_str() != INTERCEPT)
            .map(|(v, &c)| (v.clone(), c))
            .collect();
        Self::new(terms, "fitted")
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::Config("composite model has no variables".into()));
        }
        for (name, c) in &self.terms {
            if Indicator::from_name(name).is_none() {
                return Err(Error::MissingVariable(name.clone()));
            }
            if !c.is_finite() {
                return Err(Error::Config(format!("coefficient for {name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        // either a composite model or the output of `fit`
        let model = if value.get("terms").is_some() {
            serde_json::from_value(value)?
        } else {
            Self::from_fitted(&serde_json::from_value(value)?)?
        };
        model.validate()?;
        Ok(model)
    }
}

/// Linear combination of the named standardized indicators (no intercept).
pub fn composite_score(std: &StandardizedIndicators, model: &CompositeModel) -> Result<f64> {
    model
        .terms
        .iter()
        .map(|(name, c)| Ok(c * std.by_name(name)?))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub rc_id: RcId,
    pub fy: Year,
    pub ty: Year,
    pub ry: i32,
    pub score: f64,
    pub predicted: bool,
    pub papers_in_fy: u32,
    pub outcome: Option<bool>,
    pub growth_rate: Option<f64>,
}

/// Scores indicator rows and attaches outcomes where the share table covers
/// the target year. `outcomes_through` is the last year whose shares may be
/// read; pass `None` to never read outcomes.
pub fn build_records(
    rows: &[IndicatorRow],
    model: &CompositeModel,
    shares: &RcYearTable,
    model_year: Year,
    outcomes_through: Option<Year>,
) -> Result<Vec<ForecastRecord>> {
    model.validate()?;
    rows.iter()
        .map(|row| {
            let fy = row.raw.fy;
            let ty = fy + HORIZON;
            let (outcome, growth_rate) = match outcomes_through {
                Some(last) if ty <= last => {
                    let s = shares.shares(row.raw.rc_id, ty);
                    let gr = growth_rate(&s, row.raw.pk, ty)?;
                    (Some(label_exceptional(gr)), Some(gr))
                }
                _ => (None, None),
            };
            Ok(ForecastRecord {
                rc_id: row.raw.rc_id,
                fy,
                ty,
                ry: fy - model_year,
                score: composite_score(&row.std, model)?,
                predicted: false,
                papers_in_fy: row.raw.papers_in_fy,
                outcome,
                growth_rate,
            })
        })
        .collect()
}

fn rank_order(a: &ForecastRecord, b: &ForecastRecord) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.rc_id.cmp(&b.rc_id)).then(a.fy.cmp(&b.fy))
}

/// Flags the top `n` records by score (ties to the smaller rc id) and
/// clears the rest.
pub fn select_top_n(records: &mut [ForecastRecord], n: usize) -> Result<()> {
    if n > records.len() {
        return Err(Error::TooManySelected {
            n,
            available: records.len(),
        });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&i, &j| rank_order(&records[i], &records[j]));
    for (rank, &i) in order.iter().enumerate() {
        records[i].predicted = rank < n;
    }
    Ok(())
}

/// Ids of records lacking an outcome, with their target years.
pub fn missing_outcomes(records: &[ForecastRecord]) -> Option<Error> {
    let missing: Vec<&ForecastRecord> = records.iter().filter(|r| r.outcome.is_none()).collect();
    if missing.is_empty() {
        return None;
    }
    let mut years: Vec<Year> = missing.iter().map(|r| r.ty).collect();
    years.sort_unstable();
    years.dedup();
    let mut ids: Vec<RcId> = missing.iter().map(|r| r.rc_id).collect();
    ids.sort_unstable();
    ids.dedup();
    Some(Error::MissingOutcome {
        target_years: years,
        rc_ids: ids,
    })
}

/// Oracle sizing: `n = ceil(1.5·#xg)` from the records' own outcomes.
pub fn select_oracle_n(records: &mut [ForecastRecord]) -> Result<usize> {
    if let Some(e) = missing_outcomes(records) {
        return Err(e);
    }
    let xg = records.iter().filter(|r| r.outcome == Some(true)).count();
    let n = oracle_n(xg).min(records.len());
    select_top_n(records, n)?;
    Ok(n)
}

/// Writes records sorted by score descending. Outcome columns appear when
/// any record has an outcome.
pub fn write_forecasts(path: &Path, records: &[ForecastRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let with_outcomes = records.iter().any(|r| r.outcome.is_some());
    write!(out, "rc_id\tfy\tty\try\tpapers_in_fy\tscore\tpredicted").map_err(io)?;
    if with_outcomes {
        write!(out, "\toutcome\tgrowth_rate").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    let mut sorted: Vec<&ForecastRecord> = records.iter().collect();
    sorted.sort_by(|a, b| rank_order(a, b));
    for r in sorted {
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.rc_id,
            r.fy,
            r.ty,
            r.ry,
            r.papers_in_fy,
            r.score,
            u8::from(r.predicted)
        )
        .map_err(io)?;
        if with_outcomes {
            let o = r.outcome.map_or("NA".to_string(), |o| u8::from(o).to_string());
            let g = r.growth_rate.map_or("NA".to_string(), |g| g.to_string());
            write!(out, "\t{o}\t{g}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_forecasts(path: &Path) -> Result<Vec<ForecastRecord>> {
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
    let headers = reader.headers()?.clone();
    let with_outcomes = headers.len() == 9;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let bad = |col: usize| Error::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            message: format!("bad value in column {}", &headers[col]),
        };
        let int = |col: usize| -> Result<i64> { rec[col].parse().map_err(|_| bad(col)) };
        let flag = |col: usize| -> Result<bool> {
            match &rec[col] {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad(col)),
            }
        };
        let (outcome, growth_rate) = if with_outcomes && &rec[7] != "NA" {
            (Some(flag(7)?), Some(rec[8].parse().map_err(|_| bad(8))?))
        } else {
            (None, None)
        };
        out.push(ForecastRecord {
            rc_id: int(0)? as RcId,
            fy: int(1)? as Year,
            ty: int(2)? as Year,
            ry: int(3)? as i32,
            papers_in_fy: int(4)? as u32,
            score: rec[5].parse().map_err(|_| bad(5))?,
            predicted: flag(6)?,
            outcome,
            growth_rate,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_row(vals: [(Indicator, f64); 4]) -> StandardizedIndicators {
        let mut values = [0.0; 10];
        for (ind, v) in vals {
            values[Indicator::ALL.iter().position(|&i| i == ind).unwrap()] = v;
        }
        StandardizedIndicators {
            rc_id: 0,
            fy: 2015,
            values,
        }
    }

    fn record(rc: RcId, score: f64) -> ForecastRecord {
        ForecastRecord {
            rc_id: rc,
            fy: 2015,
            ty: 2018,
            ry: 1,
            score,
            predicted: false,
            papers_in_fy: 30,
            outcome: None,
            growth_rate: None,
        }
    }

    #[test]
    fn growth_rate_cases() {
        assert_eq!(growth_rate_from(0.01, 0.01, 2010, 2013).unwrap(), 1.0);
        let gr = growth_rate_from(0.010, 0.014, 2010, 2013).unwrap();
        assert!((gr - 1.4_f64.cbrt()).abs() < 1e-12);
        assert!((gr - 1.1187).abs() < 1e-4);
        let gr = growth_rate_from(0.001, 0.001259, 2010, 2013).unwrap();
        assert!((gr - 1.0798).abs() < 1e-4);
        assert!(!label_exceptional(gr));
        assert!(growth_rate_from(0.0, 0.1, 2010, 2013).is_err());
        assert!(growth_rate_from(0.1, 0.1, 2013, 2013).is_err());
        assert_eq!(growth_rate(&BTreeMap::from([(2010, 0.5)]), 2010, 2013).unwrap(), 0.0);
    }

    #[test]
    fn threshold_is_strict() {
        assert!(!label_exceptional(1.08));
        assert!(label_exceptional(1.081));
        assert!(!label_exceptional(1.0798));
    }

    #[test]
    fn oracle_sizes() {
        assert_eq!(oracle_n(43), 65);
        assert_eq!(oracle_n(27), 41);
        assert_eq!(oracle_n(12), 18);
        assert_eq!(oracle_n(0), 0);
        assert_eq!(oracle_n(1), 2);
    }

    #[test]
    fn published_score_rows() {
        let m = CompositeModel::default();
        let row = std_row([
            (Indicator::Stage, 3.47),
            (Indicator::Cvit, 5.03),
            (Indicator::DeltaRvit, 0.54),
            (Indicator::Ntopj, 3.12),
        ]);
        assert!((composite_score(&row, &m).unwrap() - 3.80).abs() <= 0.005);
        let row = std_row([
            (Indicator::Stage, 3.47),
            (Indicator::Cvit, 4.95),
            (Indicator::DeltaRvit, 0.50),
            (Indicator::Ntopj, 1.76),
        ]);
        assert!((composite_score(&row, &m).unwrap() - 3.60).abs() <= 0.005);
        assert_eq!(composite_score(&std_row([(Indicator::Nref, 9.0); 4]), &m).unwrap(), 0.0);
    }

    #[test]
    fn unknown_variable_is_named() {
        let m = CompositeModel {
            terms: vec![("bogus".into(), 1.0)],
            source: "test".into(),
        };
        match composite_score(&std_row([(Indicator::Stage, 1.0); 4]), &m) {
            Err(Error::MissingVariable(v)) => assert_eq!(v, "bogus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn selection_ties_and_bounds() {
        let mut recs = vec![record(5, 1.0), record(2, 1.0), record(9, 3.0)];
        select_top_n(&mut recs, 2).unwrap();
        assert_eq!(recs.iter().map(|r| r.predicted).collect::<Vec<_>>(), [false, true, true]);
        select_top_n(&mut recs, 3).unwrap();
        assert!(recs.iter().all(|r| r.predicted));
        assert!(select_top_n(&mut recs, 4).is_err());
    }

    #[test]
    fn missing_outcomes_name_target_years() {
        let mut recs = vec![record(1, 1.0)];
        match select_oracle_n(&mut recs) {
            Err(Error::MissingOutcome { target_years, rc_ids }) => {
                assert_eq!(target_years, vec![2018]);
                assert_eq!(rc_ids, vec![1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tsv_round_trip() {
        let mut recs = vec![record(1, 0.25), record(2, -1.5)];
        recs[0].outcome = Some(true);
        recs[0].growth_rate = Some(1.2345678901234567);
        recs[1].predicted = true;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.tsv");
        write_forecasts(&path, &recs).unwrap();
        assert_eq!(read_forecasts(&path).unwrap(), recs);
    }
}
