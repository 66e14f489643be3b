//! Loading raw CSV series, aligning them on common trading days, min-max
//! scaling and labelling every column into Up/Down directions.
//!
//! Column names inside an [`AlignedTable`] carry a source prefix:
//! `price.` for OHLCV, `macro.` for macro-financial assets, `social.` for
//! tweet counts and `ti.` for technical indicators.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::direction::Direction;

/// Longest run of missing values per column that is forward-filled.
pub const MAX_FORWARD_FILL: usize = 3;

/// Name of the close-direction variable every model predicts.
pub const TARGET_COLUMN: &str = "price.close";

pub const OHLCV_COLUMNS: [&str; 5] = ["open", "high", "low", "close", "volume"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: required column `{column}` is missing")]
    MissingColumn { file: String, column: String },
    #[error("{file}: no valid rows")]
    EmptyTable { file: String },
    #[error("{file}: duplicate date {date}")]
    DuplicateDate { file: String, date: NaiveDate },
    #[error("no input tables to align")]
    NoTables,
    #[error("input tables share no common dates")]
    EmptyIntersection,
    #[error("column `{0}` appears in more than one input table")]
    DuplicateColumn(String),
    #[error("need at least {needed} rows, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Ohlcv,
    Macro,
    Tweets,
    /// Derived technical-indicator columns.
    Indicators,
}

impl SourceKind {
    pub fn prefix(self) -> &'static str {
        match self {
            SourceKind::Ohlcv => "price",
            SourceKind::Macro => "macro",
            SourceKind::Tweets => "social",
            SourceKind::Indicators => "ti",
        }
    }
}

/// One rejected or repaired input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub file: String,
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WARN {}:{} {}", self.file, self.line, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesTable {
    pub dates: Vec<NaiveDate>,
    pub columns: IndexMap<String, Vec<f64>>,
    pub source_kind: SourceKind,
}

impl TimeSeriesTable {
    /// Builds a table, checking date ordering and column lengths.
    pub fn new(
        dates: Vec<NaiveDate>,
        columns: IndexMap<String, Vec<f64>>,
        source_kind: SourceKind,
    ) -> Result<Self, IngestError> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(IngestError::InvalidTable(format!(
                "dates not strictly increasing at {}",
                w[1]
            )));
        }
        for (name, values) in &columns {
            if values.len() != dates.len() {
                return Err(IngestError::InvalidTable(format!(
                    "column `{name}` has {} entries for {} dates",
                    values.len(),
                    dates.len()
                )));
            }
        }
        if source_kind == SourceKind::Ohlcv {
            for required in OHLCV_COLUMNS {
                if !columns.contains_key(required) {
                    return Err(IngestError::MissingColumn {
                        file: "<memory>".into(),
                        column: required.into(),
                    });
                }
            }
        }
        Ok(Self {
            dates,
            columns,
            source_kind,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }
}

/// Result of [`load_csv`]: the validated table plus one diagnostic per
/// dropped or repaired row.
#[derive(Clone, Debug)]
pub struct LoadedTable {
    pub table: TimeSeriesTable,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn load_csv(path: impl AsRef<Path>, kind: SourceKind) -> Result<LoadedTable, IngestError> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: label.clone(),
        source,
    })?;
    read_csv(file, &label, kind)
}

struct RawRow {
    line: usize,
    date: NaiveDate,
    values: Vec<Option<f64>>,
}

/// Parses CSV from any reader; `label` names the source in diagnostics.
pub fn read_csv<R: Read>(
    reader: R,
    label: &str,
    kind: SourceKind,
) -> Result<LoadedTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |source| IngestError::Csv {
        path: label.to_string(),
        source,
    };
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let missing = |column: &str| IngestError::MissingColumn {
        file: label.to_string(),
        column: column.to_string(),
    };
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));

    let date_idx = find("date").ok_or_else(|| missing("date"))?;
    let selected: Vec<(String, usize)> = match kind {
        SourceKind::Ohlcv => OHLCV_COLUMNS
            .iter()
            .map(|c| find(c).map(|i| (c.to_string(), i)).ok_or_else(|| missing(c)))
            .collect::<Result<_, _>>()?,
        SourceKind::Tweets => vec![(
            "tweet_count".to_string(),
            find("tweet_count").ok_or_else(|| missing("tweet_count"))?,
        )],
        SourceKind::Macro | SourceKind::Indicators => {
            let cols: Vec<_> = headers
                .iter()
                .enumerate()
                .filter(|(i, h)| *i != date_idx && !h.is_empty())
                .map(|(i, h)| (h.to_ascii_lowercase(), i))
                .collect();
            if cols.is_empty() {
                return Err(missing("<value column>"));
            }
            cols
        }
    };

    let mut diagnostics = Vec::new();
    let mut warn = |line: usize, reason: String| {
        diagnostics.push(Diagnostic {
            file: label.to_string(),
            line,
            reason,
        })
    };

    let mut rows = Vec::new();
    'records: for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = match NaiveDate::parse_from_str(raw_date, "%Y-%m-%d") {
            Ok(d) => d,
            Err(_) => {
                warn(line, format!("unparseable date `{raw_date}`"));
                continue;
            }
        };
        let mut values = Vec::with_capacity(selected.len());
        for (name, idx) in &selected {
            let cell = record.get(*idx).unwrap_or("");
            if is_missing(cell) {
                values.push(None);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(Some(v)),
                _ => {
                    warn(line, format!("unparseable value `{cell}` in column `{name}`"));
                    continue 'records;
                }
            }
        }
        rows.push(RawRow { line, date, values });
    }

    rows.sort_by_key(|r| r.date);
    if let Some(w) = rows.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(IngestError::DuplicateDate {
            file: label.to_string(),
            date: w[0].date,
        });
    }

    // Forward fill short gaps; rows with longer or leading gaps are dropped.
    let width = selected.len();
    let mut last = vec![None::<f64>; width];
    let mut gap = vec![0usize; width];
    let mut filled = Vec::with_capacity(rows.len());
    for row in rows {
        let mut out = Vec::with_capacity(width);
        let mut reason = None;
        for (c, value) in row.values.iter().enumerate() {
            match value {
                Some(v) => {
                    last[c] = Some(*v);
                    gap[c] = 0;
                    out.push(*v);
                }
                None => {
                    gap[c] += 1;
                    match last[c] {
                        Some(prev) if gap[c] <= MAX_FORWARD_FILL => out.push(prev),
                        _ => {
                            reason.get_or_insert_with(|| {
                                format!("missing value in column `{}` cannot be filled", selected[c].0)
                            });
                            out.push(f64::NAN);
                        }
                    }
                }
            }
        }
        match reason {
            Some(reason) => warn(row.line, reason),
            None => filled.push((row.line, row.date, out)),
        }
    }

    if kind == SourceKind::Ohlcv {
        filled.retain(|(line, _, v)| {
            let (open, high, low, close) = (v[0], v[1], v[2], v[3]);
            let ok = low <= open.min(close) && high >= open.max(close);
            if !ok {
                warn(
                    *line,
                    format!("inconsistent bar: open {open} high {high} low {low} close {close}"),
                );
            }
            ok
        });
    }

    if filled.is_empty() {
        return Err(IngestError::EmptyTable {
            file: label.to_string(),
        });
    }

    let dates = filled.iter().map(|(_, d, _)| *d).collect();
    let columns = selected
        .iter()
        .enumerate()
        .map(|(c, (name, _))| (name.clone(), filled.iter().map(|(_, _, v)| v[c]).collect()))
        .collect();
    Ok(LoadedTable {
        table: TimeSeriesTable {
            dates,
            columns,
            source_kind: kind,
        },
        diagnostics,
    })
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty()
        || ["nan", "na", "null", "none", "-"]
            .iter()
            .any(|m| cell.eq_ignore_ascii_case(m))
}

/// Anything that can be intersected on dates by [`align`].
pub trait ColumnSource {
    fn dates(&self) -> &[NaiveDate];
    /// Columns with their fully qualified (`prefix.name`) names.
    fn qualified_columns(&self) -> Vec<(String, &[f64])>;
    fn has_macro(&self) -> bool;
}

impl ColumnSource for TimeSeriesTable {
    fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    fn qualified_columns(&self) -> Vec<(String, &[f64])> {
        let prefix = self.source_kind.prefix();
        self.columns
            .iter()
            .map(|(name, v)| (format!("{prefix}.{name}"), v.as_slice()))
            .collect()
    }

    fn has_macro(&self) -> bool {
        self.source_kind == SourceKind::Macro
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignedTable {
    pub dates: Vec<NaiveDate>,
    pub columns: IndexMap<String, Vec<f64>>,
}

impl AlignedTable {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select(&self, names: &[String]) -> Result<AlignedTable, IngestError> {
        let columns = names
            .iter()
            .map(|n| {
                self.columns
                    .get(n)
                    .map(|v| (n.clone(), v.clone()))
                    .ok_or_else(|| IngestError::UnknownVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(AlignedTable {
            dates: self.dates.clone(),
            columns,
        })
    }
}

impl ColumnSource for AlignedTable {
    fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    fn qualified_columns(&self) -> Vec<(String, &[f64])> {
        self.columns
            .iter()
            .map(|(name, v)| (name.clone(), v.as_slice()))
            .collect()
    }

    fn has_macro(&self) -> bool {
        self.columns.keys().any(|k| k.starts_with("macro."))
    }
}

fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Inner join on dates. Weekends are dropped whenever a macro source
/// participates, even if that source itself lists weekend rows.
pub fn align(tables: &[&dyn ColumnSource]) -> Result<AlignedTable, IngestError> {
    let first = tables.first().ok_or(IngestError::NoTables)?;
    if tables.iter().any(|t| t.dates().is_empty()) {
        return Err(IngestError::EmptyTable {
            file: "<aligned input>".into(),
        });
    }
    let weekdays_only = tables.iter().any(|t| t.has_macro());
    let lookups: Vec<HashMap<NaiveDate, usize>> = tables
        .iter()
        .map(|t| t.dates().iter().enumerate().map(|(i, d)| (*d, i)).collect())
        .collect();

    let dates: Vec<NaiveDate> = first
        .dates()
        .iter()
        .copied()
        .filter(|d| !(weekdays_only && is_weekend(*d)))
        .filter(|d| lookups.iter().all(|l| l.contains_key(d)))
        .collect();
    if dates.is_empty() {
        return Err(IngestError::EmptyIntersection);
    }

    let mut columns = IndexMap::new();
    for (table, lookup) in tables.iter().zip(&lookups) {
        for (name, values) in table.qualified_columns() {
            let series: Vec<f64> = dates.iter().map(|d| values[lookup[d]]).collect();
            if columns.insert(name.clone(), series).is_some() {
                return Err(IngestError::DuplicateColumn(name));
            }
        }
    }
    Ok(AlignedTable { dates, columns })
}

/// Convenience wrapper over [`align`] for owned tables.
pub fn align_tables(tables: &[TimeSeriesTable]) -> Result<AlignedTable, IngestError> {
    let refs: Vec<&dyn ColumnSource> = tables.iter().map(|t| t as &dyn ColumnSource).collect();
    align(&refs)
}

/// Min and max of one column, fitted on a training prefix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Self { min, max }
    }

    pub fn is_constant(&self) -> bool {
        !(self.max > self.min)
    }

    /// Constant columns map to 0.5.
    pub fn apply(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.5
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            self.min + y * (self.max - self.min)
        }
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub table: AlignedTable,
    pub ranges: IndexMap<String, MinMax>,
    /// Columns whose training range is degenerate; reported, not fatal.
    pub constant_columns: Vec<String>,
}

/// Scales every column into [0, 1] using min/max of the first `fit_rows`
/// rows. Later rows reuse that range and may fall outside [0, 1].
pub fn min_max_normalize(table: &AlignedTable, fit_rows: usize) -> Normalized {
    let fit_rows = fit_rows.clamp(1, table.len().max(1));
    let mut ranges = IndexMap::new();
    let mut constant_columns = Vec::new();
    let columns = table
        .columns
        .iter()
        .map(|(name, values)| {
            let range = MinMax::fit(&values[..fit_rows.min(values.len())]);
            if range.is_constant() {
                constant_columns.push(name.clone());
            }
            ranges.insert(name.clone(), range);
            (name.clone(), values.iter().map(|&x| range.apply(x)).collect())
        })
        .collect();
    Normalized {
        table: AlignedTable {
            dates: table.dates.clone(),
            columns,
        },
        ranges,
        constant_columns,
    }
}

/// Fully discretized feature matrix; row `r` describes the move from aligned
/// row `r` to aligned row `r + 1` and is dated by the later day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionMatrix {
    dates: Vec<NaiveDate>,
    variables: Vec<String>,
    rows: Vec<Vec<Direction>>,
    target: usize,
}

impl DirectionMatrix {
    pub fn new(
        dates: Vec<NaiveDate>,
        variables: Vec<String>,
        rows: Vec<Vec<Direction>>,
        target_name: &str,
    ) -> Result<Self, IngestError> {
        let target = variables
            .iter()
            .position(|v| v == target_name)
            .ok_or_else(|| IngestError::UnknownVariable(target_name.to_string()))?;
        if dates.len() != rows.len() {
            return Err(IngestError::InvalidTable(format!(
                "{} dates for {} rows",
                dates.len(),
                rows.len()
            )));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != variables.len()) {
            return Err(IngestError::InvalidTable(format!(
                "row {bad} has {} states for {} variables",
                rows[bad].len(),
                variables.len()
            )));
        }
        Ok(Self {
            dates,
            variables,
            rows,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn rows(&self) -> &[Vec<Direction>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[Direction] {
        &self.rows[index]
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target_name(&self) -> &str {
        &self.variables[self.target]
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = Direction> + '_ {
        self.rows.iter().map(move |r| r[index])
    }

    /// Contiguous row range as a new matrix.
    pub fn slice(&self, range: Range<usize>) -> DirectionMatrix {
        DirectionMatrix {
            dates: self.dates[range.clone()].to_vec(),
            variables: self.variables.clone(),
            rows: self.rows[range].to_vec(),
            target: self.target,
        }
    }

    /// Projects onto `names`, which must include the target.
    pub fn select(&self, names: &[String]) -> Result<DirectionMatrix, IngestError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.variable_index(n)
                    .ok_or_else(|| IngestError::UnknownVariable(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).collect())
            .collect();
        DirectionMatrix::new(self.dates.clone(), names.to_vec(), rows, self.target_name())
    }
}

/// Labels each column Down when today's value is below yesterday's and Up
/// otherwise. The first aligned row is consumed by the differencing.
pub fn label_directions(table: &AlignedTable, target: &str) -> Result<DirectionMatrix, IngestError> {
    if table.len() < 2 {
        return Err(IngestError::TooFewRows {
            rows: table.len(),
            needed: 2,
        });
    }
    if !table.columns.contains_key(target) {
        return Err(IngestError::UnknownVariable(target.to_string()));
    }
    let variables: Vec<String> = table.columns.keys().cloned().collect();
    let series: Vec<&Vec<f64>> = table.columns.values().collect();
    let rows = (1..table.len())
        .map(|t| {
            series
                .iter()
                .map(|s| Direction::between(s[t - 1], s[t]))
                .collect()
        })
        .collect();
    DirectionMatrix::new(table.dates[1..].to_vec(), variables, rows, target)
}

/// Distinct column names, in first-seen order.
pub fn unique_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .into_iter()
        .filter(|n| seen.insert(*n))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn ohlcv(text: &str) -> Result<LoadedTable, IngestError> {
        read_csv(text.as_bytes(), "t.csv", SourceKind::Ohlcv)
    }

    fn single(kind: SourceKind, name: &str, dates: &[&str], values: &[f64]) -> TimeSeriesTable {
        TimeSeriesTable::new(
            dates.iter().map(|s| d(s)).collect(),
            [(name.to_string(), values.to_vec())].into_iter().collect(),
            kind,
        )
        .unwrap()
    }

    #[test]
    fn parses_valid_ohlcv() {
        let csv = "date,open,high,low,close,volume\n\
                   2021-01-04,1,2,0.5,1.5,100\n\
                   2021-01-05,1.5,2.5,1,2,120\n\
                   2021-01-06,2,2.2,1.8,1.9,90\n";
        let loaded = ohlcv(csv).unwrap();
        assert_eq!(loaded.table.len(), 3);
        assert_eq!(loaded.table.columns.len(), 5);
        assert!(loaded.diagnostics.is_empty());
    }

    #[test]
    fn duplicate_date_is_an_error() {
        let csv = "date,open,high,low,close,volume\n\
                   2021-01-04,1,2,0.5,1.5,100\n\
                   2021-01-04,1,2,0.5,1.5,100\n";
        assert!(matches!(ohlcv(csv), Err(IngestError::DuplicateDate { .. })));
    }

    #[test]
    fn inconsistent_bar_is_rejected_with_one_diagnostic() {
        let csv = "date,open,high,low,close,volume\n\
                   2021-01-04,1,2,0.5,1.5,100\n\
                   2021-01-05,1.5,1,2,1.2,100\n\
                   2021-01-06,2,2.2,1.8,1.9,90\n";
        let loaded = ohlcv(csv).unwrap();
        assert_eq!(loaded.table.len(), 2);
        assert_eq!(loaded.diagnostics.len(), 1);
        assert_eq!(loaded.diagnostics[0].line, 3);
        assert!(loaded.diagnostics[0].to_string().starts_with("WARN t.csv:3 "));
    }

    #[test]
    fn rows_are_sorted_and_garbage_dropped() {
        let csv = "date,open,high,low,close,volume\n\
                   2021-01-06,2,2.2,1.8,1.9,90\n\
                   2021-01-04,1,2,0.5,1.5,100\n\
                   not-a-date,1,2,0.5,1.5,100\n\
                   2021-01-05,1,2,0.5,abc,100\n";
        let loaded = ohlcv(csv).unwrap();
        assert_eq!(loaded.table.dates, vec![d("2021-01-04"), d("2021-01-06")]);
        assert_eq!(loaded.diagnostics.len(), 2);
    }

    #[test]
    fn missing_column_and_empty_table() {
        let err = ohlcv("date,open,high,low,close\n2021-01-04,1,2,0.5,1.5\n").unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { ref column, .. } if column == "volume"));
        let err = ohlcv("date,open,high,low,close,volume\n").unwrap_err();
        assert!(matches!(err, IngestError::EmptyTable { .. }));
        let err = read_csv("day,gold\n2021-01-04,1\n".as_bytes(), "m.csv", SourceKind::Macro)
            .unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { ref column, .. } if column == "date"));
    }

    #[test]
    fn forward_fill_up_to_three_gaps() {
        let csv = "date,gold\n2021-01-04,1\n2021-01-05,\n2021-01-06,NaN\n2021-01-07,\n2021-01-08,\n2021-01-11,5\n";
        let loaded = read_csv(csv.as_bytes(), "m.csv", SourceKind::Macro).unwrap();
        assert_eq!(loaded.table.column("gold").unwrap(), &[1.0, 1.0, 1.0, 1.0, 5.0]);
        assert_eq!(loaded.diagnostics.len(), 1);
        assert_eq!(loaded.diagnostics[0].line, 6);
    }

    #[test]
    fn leading_gap_drops_row() {
        let csv = "date,tweet_count\n2021-01-04,\n2021-01-05,7\n";
        let loaded = read_csv(csv.as_bytes(), "tw.csv", SourceKind::Tweets).unwrap();
        assert_eq!(loaded.table.len(), 1);
        assert_eq!(loaded.diagnostics.len(), 1);
    }

    #[test]
    fn align_drops_weekends_with_macro() {
        // 2021-01-04 is a Monday.
        let week = [
            "2021-01-04", "2021-01-05", "2021-01-06", "2021-01-07", "2021-01-08", "2021-01-09",
            "2021-01-10",
        ];
        let price = single(SourceKind::Indicators, "close", &week, &[1., 2., 3., 4., 5., 6., 7.]);
        let gold = single(SourceKind::Macro, "gold", &week[..5], &[9., 8., 7., 6., 5.]);
        let aligned = align_tables(&[price, gold]).unwrap();
        assert_eq!(aligned.dates, week[..5].iter().map(|s| d(s)).collect::<Vec<_>>());
        assert_eq!(
            aligned.columns.keys().collect::<Vec<_>>(),
            vec!["ti.close", "macro.gold"]
        );
    }

    #[test]
    fn align_identity_and_disjoint() {
        let a = single(SourceKind::Tweets, "tweet_count", &["2021-01-04", "2021-01-05"], &[1., 2.]);
        let b = single(SourceKind::Indicators, "rsi", &["2021-01-04", "2021-01-05"], &[3., 4.]);
        let aligned = align_tables(&[a.clone(), b]).unwrap();
        assert_eq!(aligned.len(), 2);
        assert_eq!(aligned.columns.len(), 2);

        let c = single(SourceKind::Indicators, "sma", &["2022-01-04"], &[3.]);
        assert!(matches!(align_tables(&[a, c]), Err(IngestError::EmptyIntersection)));
        assert!(matches!(align(&[]), Err(IngestError::NoTables)));
    }

    #[test]
    fn normalize_examples() {
        let table = AlignedTable {
            dates: vec![d("2021-01-04"), d("2021-01-05"), d("2021-01-06")],
            columns: [
                ("a".to_string(), vec![2.0, 4.0, 6.0]),
                ("b".to_string(), vec![1.01, 1.01, 1.01]),
            ]
            .into_iter()
            .collect(),
        };
        let out = min_max_normalize(&table, 3);
        assert_eq!(out.table.column("a").unwrap(), &[0.0, 0.5, 1.0]);
        assert_eq!(out.table.column("b").unwrap(), &[0.5, 0.5, 0.5]);
        assert_eq!(out.constant_columns, vec!["b".to_string()]);

        let table = AlignedTable {
            dates: vec![d("2021-01-04"), d("2021-01-05"), d("2021-01-06")],
            columns: [("a".to_string(), vec![0.0, 10.0, 12.0])].into_iter().collect(),
        };
        let out = min_max_normalize(&table, 2);
        assert!((out.table.column("a").unwrap()[2] - 1.2).abs() < 1e-15);
    }

    fn close_table(values: &[f64]) -> AlignedTable {
        let start = d("2021-01-01");
        AlignedTable {
            dates: (0..values.len())
                .map(|i| start + chrono::Duration::days(i as i64))
                .collect(),
            columns: [(TARGET_COLUMN.to_string(), values.to_vec())].into_iter().collect(),
        }
    }

    #[test]
    fn labelling_examples() {
        use Direction::*;
        let m = label_directions(&close_table(&[10.0, 9.0]), TARGET_COLUMN).unwrap();
        assert_eq!(m.column(0).collect::<Vec<_>>(), vec![Down]);
        let m = label_directions(&close_table(&[10.0, 10.0]), TARGET_COLUMN).unwrap();
        assert_eq!(m.column(0).collect::<Vec<_>>(), vec![Up]);
        let m = label_directions(&close_table(&[1.0, 2.0, 2.0, 1.0]), TARGET_COLUMN).unwrap();
        assert_eq!(m.column(0).collect::<Vec<_>>(), vec![Up, Up, Down]);
        assert_eq!(m.dates()[0], d("2021-01-02"));
        assert_eq!(m.target_name(), TARGET_COLUMN);
        assert!(matches!(
            label_directions(&close_table(&[1.0]), TARGET_COLUMN),
            Err(IngestError::TooFewRows { .. })
        ));
    }

}
