use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

use crate::{PaperId, RcId, Year};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate paper_id {0}")]
    DuplicatePaper(PaperId),

    #[error("duplicate journal_id {0} in rank table")]
    DuplicateJournal(u64),

    #[error("empty year {0}: no papers published")]
    EmptyYear(Year),

    #[error("year {year} outside corpus span {first}..={last}")]
    YearOutOfSpan { year: Year, first: Year, last: Year },

    #[error("research community {rc} has no papers through {year}")]
    EmptyCommunity { rc: RcId, year: Year },

    #[error("invalid growth-rate input: {0}")]
    GrowthRate(String),

    #[error("unreachable target of {target} communities: achievable range is {min}..={max}")]
    UnreachableTarget {
        target: usize,
        min: usize,
        max: usize,
    },

    #[error("cannot extend partition through {through} with year {requested}; next year must be {expected}")]
    NonContiguousExtension {
        through: Year,
        requested: Year,
        expected: Year,
    },

    #[error("separation detected: coefficient for `{variable}` diverged ({value:.3})")]
    Separation { variable: String, value: f64 },

    #[error("singular information matrix; collinear columns: {}", columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("missing indicator `{0}`")]
    MissingVariable(String),

    #[error("cannot select {n} forecasts from {available} records")]
    TooManySelected { n: usize, available: usize },

    #[error("records lack outcomes; target years {} not covered (rc_ids {})", format_years(target_years), format_ids(rc_ids))]
    MissingOutcome {
        target_years: Vec<Year>,
        rc_ids: Vec<RcId>,
    },

    #[error("invalid log-likelihood: {0}")]
    LogLikelihood(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_years(years: &[Year]) -> String {
    years.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(", ")
}

fn format_ids(ids: &[RcId]) -> String {
    const SHOWN: usize = 20;
    let mut out: Vec<String> = ids.iter().take(SHOWN).map(|id| id.to_string()).collect();
    if ids.len() > SHOWN {
        out.push(format!("... ({} total)", ids.len()));
    }
    out.join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Malformed { .. } => "malformed_line",
            Error::DuplicatePaper(_) => "duplicate_paper_id",
            Error::DuplicateJournal(_) => "duplicate_journal_id",
            Error::EmptyYear(_) => "empty_year",
            Error::YearOutOfSpan { .. } => "year_out_of_span",
            Error::EmptyCommunity { .. } => "empty_community",
            Error::GrowthRate(_) => "growth_rate",
            Error::UnreachableTarget { .. } => "unreachable_target",
            Error::NonContiguousExtension { .. } => "non_contiguous_extension",
            Error::Separation { .. } => "separation_detected",
            Error::Singular { .. } => "singular_information",
            Error::InsufficientData(_) => "insufficient_data",
            Error::MissingVariable(_) => "missing_variable",
            Error::TooManySelected { .. } => "too_many_selected",
            Error::MissingOutcome { .. } => "missing_outcome",
            Error::LogLikelihood(_) => "log_likelihood",
            Error::Config(_) => "config",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// JSON error report, as written to stderr by the CLI.
    pub fn report(&self) -> serde_json::Value {
        let mut report = json!({
            "error": self.kind(),
            "message": self.to_string(),
        });
        let extra = match self {
            Error::Malformed { path, line, .. } => {
                json!({ "path": path.display().to_string(), "line": line })
            }
            Error::Io { path, .. } => json!({ "path": path.display().to_string() }),
            Error::DuplicatePaper(id) => json!({ "paper_id": id }),
            Error::DuplicateJournal(id) => json!({ "journal_id": id }),
            Error::EmptyYear(year) => json!({ "year": year }),
            Error::MissingOutcome { target_years, rc_ids } => {
                json!({ "target_years": target_years, "rc_ids": rc_ids })
            }
            Error::Singular { columns } => json!({ "columns": columns }),
            _ => json!({}),
        };
        if let (Some(obj), Some(extra)) = (report.as_object_mut(), extra.as_object()) {
            for (k, v) in extra {
                obj.insert(k.clone(), v.clone());
            }
        }
        report
    }
}
