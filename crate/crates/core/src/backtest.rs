//! Chronological train/test evaluation of every feature group and both
//! baselines on one coin.

use std::fmt::Write as _;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, ArimaGrid, BaselineError, SvrBaseline, SvrGrid, SvrParams};
use crate::dbn::{learn_2tbn, DbnError, LearnConfig, Predictor, TwoSliceBn};
use crate::direction::Direction;
use crate::indicators::{compute_panel, IndicatorConfig, IndicatorError};
use crate::ingest::{
    align, label_directions, min_max_normalize, AlignedTable, ColumnSource, DirectionMatrix, IngestError,
    TimeSeriesTable, TARGET_COLUMN,
};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.67;
pub const MIN_SPLIT_ROWS: usize = 10;
pub const TWEET_COLUMN: &str = "social.tweet_count";

#[derive(Debug, thiserror::Error)]
pub enum BacktestError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Dbn(#[from] DbnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("need at least {needed} rows to split, got {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("test segment has {rows} rows, shorter than the window length {t}")]
    TooShort { rows: usize, t: usize },
    #[error("no positive (Up) predictions; precision undefined")]
    NoPositivePredictions,
    #[error("feature group must be 1-4, got `{0}`")]
    InvalidGroup(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{coin}, group {group}: {source}")]
    Group {
        coin: String,
        group: u8,
        #[source]
        source: Box<BacktestError>,
    },
    #[error("{coin}, {model} baseline: {source}")]
    BaselineFor {
        coin: String,
        model: &'static str,
        #[source]
        source: BaselineError,
    },
}

impl BacktestError {
    /// True for numeric failures (solver or search did not converge).
    pub fn is_convergence(&self) -> bool {
        match self {
            BacktestError::Baseline(BaselineError::NonConvergence(_)) => true,
            BacktestError::BaselineFor { source, .. } => matches!(source, BaselineError::NonConvergence(_)),
            BacktestError::Group { source, .. } => source.is_convergence(),
            _ => false,
        }
    }
}

/// One of the four input combinations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct FeatureGroup(u8);

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [FeatureGroup(1), FeatureGroup(2), FeatureGroup(3), FeatureGroup(4)];

    pub fn new(id: u8) -> Result<Self, BacktestError> {
        if (1..=4).contains(&id) {
            Ok(Self(id))
        } else {
            Err(BacktestError::InvalidGroup(id.to_string()))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Macro assets and tweet counts.
    pub fn uses_external(self) -> bool {
        matches!(self.0, 2 | 4)
    }

    pub fn uses_indicators(self) -> bool {
        matches!(self.0, 3 | 4)
    }

    /// Nominal feature count of the group with every source present.
    /// The variables actually used follow from the available columns.
    pub fn table_feature_count(self) -> usize {
        [5, 11, 15, 23][self.0 as usize - 1]
    }

    /// Columns of `available` that belong to this group, in input order.
    pub fn columns<'a>(self, available: impl IntoIterator<Item = &'a String>) -> Vec<String> {
        available
            .into_iter()
            .filter(|c| {
                c.starts_with("price.")
                    || (self.uses_external() && (c.starts_with("macro.") || c.starts_with("social.")))
                    || (self.uses_indicators() && c.starts_with("ti."))
            })
            .cloned()
            .collect()
    }
}

impl TryFrom<u8> for FeatureGroup {
    type Error = BacktestError;

    fn try_from(id: u8) -> Result<Self, Self::Error> {
        Self::new(id)
    }
}

impl From<FeatureGroup> for u8 {
    fn from(g: FeatureGroup) -> u8 {
        g.0
    }
}

impl std::fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses a comma-separated list such as `1,3`; sorted and deduplicated.
pub fn parse_groups(spec: &str) -> Result<Vec<FeatureGroup>, BacktestError> {
    let mut groups = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u8>()
                .map_err(|_| BacktestError::InvalidGroup(s.to_string()))
                .and_then(FeatureGroup::new)
        })
        .collect::<Result<Vec<_>, _>>()?;
    groups.sort_unstable();
    groups.dedup();
    if groups.is_empty() {
        return Err(BacktestError::InvalidGroup(spec.to_string()));
    }
    Ok(groups)
}

/// Raw inputs for one coin.
#[derive(Clone, Debug)]
pub struct CoinData {
    pub name: String,
    pub ohlcv: TimeSeriesTable,
    pub macros: Vec<TimeSeriesTable>,
    pub tweets: Option<TimeSeriesTable>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BacktestConfig {
    pub groups: Vec<FeatureGroup>,
    pub train_fraction: f64,
    /// `learn.t_slices` is the window length.
    pub learn: LearnConfig,
    pub indicators: IndicatorConfig,
    pub arima_grid: ArimaGrid,
    pub svr_grid: SvrGrid,
    pub run_baselines: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            groups: FeatureGroup::ALL.to_vec(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            learn: LearnConfig::default(),
            indicators: IndicatorConfig::default(),
            arima_grid: ArimaGrid::default(),
            svr_grid: SvrGrid::default(),
            run_baselines: true,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(BacktestError::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.learn.t_slices < 2 {
            return Err(BacktestError::InvalidConfig("T must be at least 2".into()));
        }
        if self.groups.is_empty() {
            return Err(BacktestError::InvalidConfig("no feature groups selected".into()));
        }
        Ok(())
    }
}

/// Number of training rows: `floor(fraction * n)`.
pub fn split_point(n: usize, train_fraction: f64) -> Result<usize, BacktestError> {
    if n < MIN_SPLIT_ROWS {
        return Err(BacktestError::TooFewRows {
            rows: n,
            needed: MIN_SPLIT_ROWS,
        });
    }
    // The small offset keeps exact products such as 0.67 * 300 from
    // landing one below the integer they represent.
    Ok(((train_fraction * n as f64) + 1e-9).floor() as usize)
}

/// Chronological split; the remainder after `floor` goes to test.
pub fn split(data: &DirectionMatrix, train_fraction: f64) -> Result<(DirectionMatrix, DirectionMatrix), BacktestError> {
    let cut = split_point(data.len(), train_fraction)?;
    Ok((data.slice(0..cut), data.slice(cut..data.len())))
}

/// A stride-1 window `rows[start..start + T]` of the test segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    /// Target state on the window's last row.
    pub actual: Direction,
}

pub fn windows(test: &DirectionMatrix, t: usize) -> Result<Vec<Window>, BacktestError> {
    if t == 0 || test.len() < t {
        return Err(BacktestError::TooShort { rows: test.len(), t });
    }
    let target = test.target_index();
    Ok((0..=test.len() - t)
        .map(|start| Window {
            start,
            actual: test.row(start + t - 1)[target],
        })
        .collect())
}

/// Confusion counts with `Up` as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: Direction, actual: Direction) {
        match (predicted, actual) {
            (Direction::Up, Direction::Up) => self.tp += 1,
            (Direction::Up, Direction::Down) => self.fp += 1,
            (Direction::Down, Direction::Down) => self.tn += 1,
            (Direction::Down, Direction::Up) => self.fn_ += 1,
        }
    }

    pub fn tally(predicted: &[Direction], actual: &[Direction]) -> Self {
        let mut c = Self::default();
        for (&p, &a) in predicted.iter().zip(actual) {
            c.record(p, a);
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `100 * tp / (tp + fp)`.
pub fn precision(counts: &ConfusionCounts) -> Result<f64, BacktestError> {
    let positives = counts.tp + counts.fp;
    if positives == 0 {
        return Err(BacktestError::NoPositivePredictions);
    }
    Ok(100.0 * counts.tp as f64 / positives as f64)
}

fn precision_or_na(counts: &ConfusionCounts) -> Option<f64> {
    precision(counts).ok()
}

/// Aligned inputs shared by every group and both baselines, so all of them
/// are scored on the same test days.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub raw: AlignedTable,
    pub directions: DirectionMatrix,
    pub train_rows: usize,
    pub constant_columns: Vec<String>,
    pub notes: Vec<String>,
}

pub fn prepare(coin: &CoinData, config: &BacktestConfig) -> Result<PreparedData, BacktestError> {
    let external = config.groups.iter().any(|g| g.uses_external());
    let indicators = config.groups.iter().any(|g| g.uses_indicators());
    let mut notes = Vec::new();

    let panel = if indicators {
        Some(compute_panel(&coin.ohlcv, &config.indicators)?.to_table()?)
    } else {
        None
    };
    let mut sources: Vec<&dyn ColumnSource> = vec![&coin.ohlcv];
    if external {
        sources.extend(coin.macros.iter().map(|m| m as &dyn ColumnSource));
        match &coin.tweets {
            Some(t) => sources.push(t),
            None => notes.push(format!(
                "tweet counts unavailable for {}; external-factor groups exclude {TWEET_COLUMN}",
                coin.name
            )),
        }
        if coin.macros.is_empty() {
            notes.push("no macro inputs supplied; external-factor groups use tweet counts only".into());
        }
    }
    if let Some(p) = &panel {
        sources.push(p);
    }
    let raw = align(&sources)?;
    if raw.len() < 2 {
        return Err(IngestError::TooFewRows {
            rows: raw.len(),
            needed: 2,
        }
        .into());
    }
    let train_rows = split_point(raw.len() - 1, config.train_fraction)?;
    // Label row r spans aligned rows r and r + 1, so training labels touch
    // aligned rows 0..=train_rows.
    let normalized = min_max_normalize(&raw, train_rows + 1);
    if !normalized.constant_columns.is_empty() {
        notes.push(format!(
            "constant over the training segment: {}",
            normalized.constant_columns.join(", ")
        ));
    }
    let directions = label_directions(&normalized.table, TARGET_COLUMN)?;
    Ok(PreparedData {
        raw,
        directions,
        train_rows,
        constant_columns: normalized.constant_columns,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub id: u8,
    pub features: usize,
    pub table_features: usize,
    pub variables: Vec<String>,
    pub precision: Option<f64>,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub windows: usize,
    pub ties: usize,
    pub model_path: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArimaReport {
    pub order: [usize; 3],
    pub precision: Option<f64>,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrReport {
    pub params: SvrParams,
    pub precision: Option<f64>,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub arima: ArimaReport,
    pub svr: SvrReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub coin: String,
    /// Labelled rows after alignment.
    pub rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub first_test_day: NaiveDate,
    pub last_test_day: NaiveDate,
    pub groups: Vec<GroupReport>,
    pub baselines: Option<BaselineReport>,
    pub best_performing: Option<u8>,
    pub notes: Vec<String>,
}

impl BacktestReport {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn group(&self, id: u8) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.id == id)
    }
}

#[derive(Clone, Debug)]
pub struct BacktestOutcome {
    pub report: BacktestReport,
    pub models: Vec<(FeatureGroup, TwoSliceBn)>,
}

struct GroupRun {
    report: GroupReport,
    model: TwoSliceBn,
    days: Vec<NaiveDate>,
}

fn run_group(data: &PreparedData, group: FeatureGroup, config: &BacktestConfig) -> Result<GroupRun, BacktestError> {
    let columns = group.columns(data.directions.variables());
    let matrix = data.directions.select(&columns)?;
    let train = matrix.slice(0..data.train_rows);
    let test = matrix.slice(data.train_rows..matrix.len());
    let t = config.learn.t_slices;
    let wins = windows(&test, t)?;

    let learn = LearnConfig {
        feature_group: group.id(),
        ..config.learn
    };
    let model = learn_2tbn(&train, &learn)?;
    let predictor = Predictor::new(model.clone())?;
    let mut counts = ConfusionCounts::default();
    let mut ties = 0;
    for w in &wins {
        let p = predictor.predict(&test.rows()[w.start..w.start + t])?;
        ties += usize::from(p.tie);
        counts.record(p.direction, w.actual);
    }
    debug_assert_eq!(counts.total(), wins.len());
    let days = wins.iter().map(|w| test.dates()[w.start + t - 1]).collect();
    Ok(GroupRun {
        report: GroupReport {
            id: group.id(),
            features: columns.len(),
            table_features: group.table_feature_count(),
            variables: columns,
            precision: precision_or_na(&counts),
            counts,
            windows: wins.len(),
            ties,
            model_path: None,
        },
        model,
        days,
    })
}

fn run_baselines(
    coin: &str,
    data: &PreparedData,
    targets: &[usize],
    actual: &[Direction],
    config: &BacktestConfig,
) -> Result<BaselineReport, BacktestError> {
    let closes = data
        .raw
        .column(TARGET_COLUMN)
        .ok_or_else(|| IngestError::UnknownVariable(TARGET_COLUMN.into()))?;
    let train = &closes[..=data.train_rows];
    let annotate = |model: &'static str| {
        let coin = coin.to_string();
        move |source| BacktestError::BaselineFor { coin, model, source }
    };

    let (arima, svr) = rayon::join(
        || -> Result<ArimaReport, BacktestError> {
            let fit = baselines::fit_arima(train, &config.arima_grid).map_err(annotate("ARIMA"))?;
            let dirs = baselines::arima_directions(&fit.model, closes, targets).map_err(annotate("ARIMA"))?;
            let counts = ConfusionCounts::tally(&dirs, actual);
            let o = fit.model.order;
            Ok(ArimaReport {
                order: [o.p, o.d, o.q],
                precision: precision_or_na(&counts),
                counts,
            })
        },
        || -> Result<SvrReport, BacktestError> {
            let fit = SvrBaseline::train(train, &config.svr_grid).map_err(annotate("SVR"))?;
            let dirs = fit.directions(closes, targets).map_err(annotate("SVR"))?;
            let counts = ConfusionCounts::tally(&dirs, actual);
            Ok(SvrReport {
                params: fit.fit.model.params,
                precision: precision_or_na(&counts),
                counts,
            })
        },
    );
    Ok(BaselineReport {
        arima: arima?,
        svr: svr?,
    })
}

/// Runs every requested group (in parallel) and both baselines.
pub fn run_backtest(coin: &CoinData, config: &BacktestConfig) -> Result<BacktestOutcome, BacktestError> {
    config.validate()?;
    let data = prepare(coin, config)?;
    let t = config.learn.t_slices;
    let n = data.directions.len();
    let test_rows = n - data.train_rows;
    if test_rows < t {
        return Err(BacktestError::TooShort { rows: test_rows, t });
    }

    // Evaluated days, as label rows and aligned rows.
    let label_rows: Vec<usize> = (data.train_rows + t - 1..n).collect();
    let days: Vec<NaiveDate> = label_rows.iter().map(|&r| data.directions.dates()[r]).collect();
    let actual: Vec<Direction> = label_rows
        .iter()
        .map(|&r| data.directions.row(r)[data.directions.target_index()])
        .collect();

    let mut groups = config.groups.clone();
    groups.sort_unstable();
    groups.dedup();
    let runs: Vec<Result<GroupRun, BacktestError>> = groups
        .par_iter()
        .map(|&g| {
            run_group(&data, g, config).map_err(|e| BacktestError::Group {
                coin: coin.name.clone(),
                group: g.id(),
                source: Box::new(e),
            })
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    for run in &runs {
        if run.days != days {
            return Err(BacktestError::InvalidConfig(format!(
                "group {} was scored on different days",
                run.report.id
            )));
        }
    }

    let baselines = if config.run_baselines {
        let targets: Vec<usize> = label_rows.iter().map(|&r| r + 1).collect();
        debug_assert!(targets.iter().zip(&days).all(|(&a, d)| data.raw.dates[a] == *d));
        Some(run_baselines(&coin.name, &data, &targets, &actual, config)?)
    } else {
        None
    };

    let best_performing = runs
        .iter()
        .filter_map(|r| r.report.precision.map(|p| (r.report.id, p)))
        .fold(None, |best: Option<(u8, f64)>, (id, p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((id, p)),
        })
        .map(|(id, _)| id);

    let mut notes = data.notes.clone();
    for r in &runs {
        if r.report.precision.is_none() {
            notes.push(format!("group {}: no Up predictions, precision N/A", r.report.id));
        }
    }

    let report = BacktestReport {
        coin: coin.name.clone(),
        rows: n,
        train_rows: data.train_rows,
        test_rows,
        first_test_day: days[0],
        last_test_day: *days.last().expect("at least one window"),
        groups: runs.iter().map(|r| r.report.clone()).collect(),
        baselines,
        best_performing,
        notes,
    };
    let models = runs
        .into_iter()
        .map(|r| (FeatureGroup(r.report.id), r.model))
        .collect();
    Ok(BacktestOutcome { report, models })
}

fn fmt_precision(p: Option<f64>) -> String {
    p.map_or_else(|| "N/A".to_string(), |v| format!("{v:.2}"))
}

/// Plain-text table: groups (1)-(4), best-performing group, ARIMA, SVR.
pub fn render_text(report: &BacktestReport) -> String {
    let mut header = vec![String::from("Coin")];
    let mut row = vec![report.coin.clone()];
    for id in 1..=4u8 {
        header.push(format!("DBN({id})"));
        row.push(report.group(id).map_or_else(|| "-".into(), |g| fmt_precision(g.precision)));
    }
    header.push("Best".into());
    row.push(report.best_performing.map_or_else(|| "N/A".into(), |id| format!("({id})")));
    header.push("ARIMA".into());
    header.push("SVR".into());
    match &report.baselines {
        Some(b) => {
            row.push(fmt_precision(b.arima.precision));
            row.push(fmt_precision(b.svr.precision));
        }
        None => row.extend(["-".to_string(), "-".to_string()]),
    }
    let widths: Vec<usize> = header.iter().zip(&row).map(|(h, r)| h.len().max(r.len())).collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };

    let mut out = String::new();
    let _ = writeln!(out, "{}", line(&header));
    let _ = writeln!(out, "{}", line(&row));
    let _ = writeln!(
        out,
        "\nrows {}  train {}  test {}  test days {}..{}",
        report.rows, report.train_rows, report.test_rows, report.first_test_day, report.last_test_day
    );
    for g in &report.groups {
        let c = g.counts;
        let _ = writeln!(
            out,
            "group {}: {} variables, {} windows, tp {} fp {} tn {} fn {}",
            g.id, g.features, g.windows, c.tp, c.fp, c.tn, c.fn_
        );
    }
    if let Some(b) = &report.baselines {
        let o = b.arima.order;
        let _ = writeln!(out, "ARIMA order ({},{},{})", o[0], o[1], o[2]);
        let p = b.svr.params;
        let _ = writeln!(
            out,
            "SVR {:?} c={} epsilon={} gamma={}",
            p.kernel, p.c, p.epsilon, p.gamma
        );
    }
    for note in &report.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}
