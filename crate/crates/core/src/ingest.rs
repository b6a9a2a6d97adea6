//! Price ingestion, log returns and quintile discretization.
//!
//! Input files are CSVs with a header naming a `Date` column (`YYYY-MM-DD`) and a
//! `Close` column; other columns are ignored. Rows whose close is blank or non-numeric
//! (vendors write `null`) are dropped, never interpolated.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::quantile_sorted;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at line {row}: {message}")]
    ParseError { row: u64, message: String },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("need at least two valid price rows, found {0}")]
    FewerThanTwoRows(usize),
    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },
    #[error("need at least {needed} observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("series invariant violated: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One of the five quintile return states, `R1` (most negative) to `R5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum State {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl State {
    pub const ALL: [State; 5] = [State::R1, State::R2, State::R3, State::R4, State::R5];
    pub const COUNT: usize = 5;

    /// Zero-based position in the alphabet.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<State> {
        State::ALL.get(i).copied()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.index() + 1)
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "R1" => Ok(State::R1),
            "R2" => Ok(State::R2),
            "R3" => Ok(State::R3),
            "R4" => Ok(State::R4),
            "R5" => Ok(State::R5),
            other => Err(format!("unknown state {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub close: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, checking that dates strictly increase and there are at least two rows.
    pub fn new(ticker: impl Into<String>, dates: Vec<NaiveDate>, close: Vec<f64>) -> Result<Self, IngestError> {
        if dates.len() != close.len() {
            return Err(IngestError::Invalid(format!("{} dates but {} prices", dates.len(), close.len())));
        }
        if dates.len() < 2 {
            return Err(IngestError::FewerThanTwoRows(dates.len()));
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(IngestError::DuplicateDate(w[0]));
            }
            if w[1] < w[0] {
                return Err(IngestError::Invalid(format!("dates out of order at {}", w[1])));
            }
        }
        Ok(Self { ticker: ticker.into(), dates, close })
    }

    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub r: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuintileCutoffs {
    pub q20: f64,
    pub q40: f64,
    pub q60: f64,
    pub q80: f64,
}

impl QuintileCutoffs {
    /// State for a single return. Each boundary is inclusive on its lower state.
    pub fn state_of(&self, r: f64) -> State {
        if r <= self.q20 {
            State::R1
        } else if r <= self.q40 {
            State::R2
        } else if r <= self.q60 {
            State::R3
        } else if r <= self.q80 {
            State::R4
        } else {
            State::R5
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSequence {
    pub dates: Vec<NaiveDate>,
    pub states: Vec<State>,
}

impl StateSequence {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sub-sequence of days falling in calendar year `year`.
    pub fn year(&self, year: i32) -> StateSequence {
        use chrono::Datelike;
        let (dates, states) =
            self.dates.iter().zip(&self.states).filter(|(d, _)| d.year() == year).map(|(d, s)| (*d, *s)).unzip();
        StateSequence { dates, states }
    }

    /// Writes `date,state` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), IngestError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["date", "state"]).map_err(csv_io)?;
        for (d, s) in self.dates.iter().zip(&self.states) {
            wr.write_record([d.to_string(), s.to_string()]).map_err(csv_io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, IngestError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut dates = Vec::new();
        let mut states = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_parse)?;
            let row = rec.position().map_or(0, |p| p.line());
            let bad = |m: String| IngestError::ParseError { row, message: m };
            let d = rec.get(0).ok_or_else(|| bad("missing date".into()))?;
            let s = rec.get(1).ok_or_else(|| bad("missing state".into()))?;
            dates.push(parse_date(d).map_err(bad)?);
            states.push(s.parse().map_err(bad)?);
        }
        Ok(Self { dates, states })
    }
}

fn csv_io(e: csv::Error) -> IngestError {
    IngestError::Io(std::io::Error::other(e))
}

fn csv_parse(e: csv::Error) -> IngestError {
    let row = e.position().map_or(0, |p| p.line());
    IngestError::ParseError { row, message: e.to_string() }
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

/// Loads a dated closing-price CSV.
///
/// Rows with a missing or non-numeric close are dropped; the remaining rows are sorted
/// by date. A repeated date is an error rather than silently deduplicated.
pub fn load_prices(path: impl AsRef<Path>, ticker: &str) -> Result<PriceSeries, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::FileNotFound(path.display().to_string()),
        _ => IngestError::Io(e),
    })?;
    read_prices(file, ticker)
}

/// Same as [`load_prices`] over any reader.
pub fn read_prices<R: Read>(reader: R, ticker: &str) -> Result<PriceSeries, IngestError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rd.headers().map_err(csv_parse)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| IngestError::ParseError { row: 1, message: format!("missing column {name:?}") })
    };
    let date_col = find("Date")?;
    let close_col = find("Close")?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_parse)?;
        let row = rec.position().map_or(0, |p| p.line());
        let date_s = rec.get(date_col).unwrap_or("");
        let date = parse_date(date_s).map_err(|message| IngestError::ParseError { row, message })?;
        match rec.get(close_col).and_then(|c| c.parse::<f64>().ok()) {
            Some(c) if c.is_finite() => rows.push((date, c)),
            _ => {}
        }
    }
    rows.sort_by_key(|&(d, _)| d);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(IngestError::DuplicateDate(w[0].0));
        }
    }
    if rows.len() < 2 {
        return Err(IngestError::FewerThanTwoRows(rows.len()));
    }
    let (dates, close) = rows.into_iter().unzip();
    PriceSeries::new(ticker, dates, close)
}

/// One-day log returns `ln(close[i+1] / close[i])`, dated on the later day.
pub fn compute_log_returns(p: &PriceSeries) -> Result<ReturnSeries, IngestError> {
    if let Some((d, &c)) = p.dates.iter().zip(&p.close).find(|(_, &c)| !(c > 0.0)) {
        return Err(IngestError::NonPositivePrice { date: *d, price: c });
    }
    let r = p.close.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries { dates: p.dates[1..].to_vec(), r })
}

/// Full-sample cutoffs at probabilities 0.2/0.4/0.6/0.8, linear interpolation between
/// order statistics.
pub fn compute_quintile_cutoffs(r: &ReturnSeries) -> Result<QuintileCutoffs, IngestError> {
    if r.len() < 5 {
        return Err(IngestError::TooFewObservations { needed: 5, found: r.len() });
    }
    let mut sorted = r.r.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(QuintileCutoffs {
        q20: quantile_sorted(&sorted, 0.2),
        q40: quantile_sorted(&sorted, 0.4),
        q60: quantile_sorted(&sorted, 0.6),
        q80: quantile_sorted(&sorted, 0.8),
    })
}

pub fn discretize_returns(r: &ReturnSeries, q: &QuintileCutoffs) -> StateSequence {
    StateSequence { dates: r.dates.clone(), states: r.r.iter().map(|&v| q.state_of(v)).collect() }
}
