//! The nine technical indicators used as features, computed on raw daily
//! OHLCV series.
//!
//! Every function returns one value per input bar; leading warm-up entries
//! are `None`, never zero-filled.

use chrono::NaiveDate;
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::ingest::{SourceKind, TimeSeriesTable};

pub type Series = Vec<Option<f64>>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndicatorError {
    #[error("series of length {len} is too short (need {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("close price is zero at index {0}")]
    ZeroClose(usize),
    #[error("input series lengths differ")]
    LengthMismatch,
    #[error("invalid indicator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorConfig {
    pub sma_window: usize,
    pub ema_window: usize,
    pub rsi_window: usize,
    pub bband_window: usize,
    pub bband_k: u32,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub natr_window: usize,
    pub stoch_window: usize,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            sma_window: 10,
            ema_window: 10,
            rsi_window: 14,
            bband_window: 5,
            bband_k: 2,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            natr_window: 14,
            stoch_window: 14,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        let windows = [
            self.sma_window,
            self.ema_window,
            self.rsi_window,
            self.bband_window,
            self.macd_fast,
            self.macd_slow,
            self.macd_signal,
            self.natr_window,
            self.stoch_window,
        ];
        if windows.contains(&0) {
            return Err(IndicatorError::InvalidConfig("windows must be >= 1".into()));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(IndicatorError::InvalidConfig(
                "macd fast period must be shorter than slow period".into(),
            ));
        }
        Ok(())
    }
}

fn need(len: usize, needed: usize) -> Result<(), IndicatorError> {
    if len < needed {
        Err(IndicatorError::TooShort { len, needed })
    } else {
        Ok(())
    }
}

fn same_len(lens: &[usize]) -> Result<usize, IndicatorError> {
    let n = lens[0];
    if lens.iter().any(|&l| l != n) {
        return Err(IndicatorError::LengthMismatch);
    }
    Ok(n)
}

pub fn sma(close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    need(close.len(), window.max(1))?;
    let mut out = vec![None; close.len()];
    let mut sum: f64 = close[..window - 1].iter().sum();
    for t in window - 1..close.len() {
        sum += close[t];
        if t >= window {
            sum -= close[t - window];
        }
        out[t] = Some(sum / window as f64);
    }
    Ok(out)
}

/// EMA over the defined suffix of `values`, seeded with the SMA of the first
/// `window` defined entries.
fn ema_defined(values: &[Option<f64>], window: usize) -> Series {
    let mut out = vec![None; values.len()];
    let Some(start) = values.iter().position(Option::is_some) else {
        return out;
    };
    if values.len() - start < window {
        return out;
    }
    let alpha = 2.0 / (window as f64 + 1.0);
    let seed_end = start + window - 1;
    let mut prev = values[start..=seed_end].iter().map(|v| v.unwrap()).sum::<f64>() / window as f64;
    out[seed_end] = Some(prev);
    for t in seed_end + 1..values.len() {
        let x = values[t].expect("defined suffix");
        prev = alpha * x + (1.0 - alpha) * prev;
        out[t] = Some(prev);
    }
    out
}

pub fn ema(close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    need(close.len(), window.max(1))?;
    let values: Series = close.iter().copied().map(Some).collect();
    Ok(ema_defined(&values, window))
}

/// Wilder RSI. Flat stretches (no gains, no losses) read 50.
pub fn rsi(close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    need(close.len(), window.max(1) + 1)?;
    let mut out = vec![None; close.len()];
    let w = window as f64;
    let (mut gain, mut loss) = (0.0, 0.0);
    for t in 1..=window {
        let delta = close[t] - close[t - 1];
        gain += delta.max(0.0);
        loss += (-delta).max(0.0);
    }
    gain /= w;
    loss /= w;
    out[window] = Some(rsi_value(gain, loss));
    for t in window + 1..close.len() {
        let delta = close[t] - close[t - 1];
        gain = (gain * (w - 1.0) + delta.max(0.0)) / w;
        loss = (loss * (w - 1.0) + (-delta).max(0.0)) / w;
        out[t] = Some(rsi_value(gain, loss));
    }
    Ok(out)
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    match (avg_gain > 0.0, avg_loss > 0.0) {
        (false, false) => 50.0,
        (true, false) => 100.0,
        (false, true) => 0.0,
        (true, true) => 100.0 - 100.0 / (1.0 + avg_gain / avg_loss),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Macd {
    pub line: Series,
    pub signal: Series,
}

pub fn macd(close: &[f64], fast: usize, slow: usize, signal: usize) -> Result<Macd, IndicatorError> {
    if fast == 0 || signal == 0 || fast >= slow {
        return Err(IndicatorError::InvalidConfig(
            "macd requires 0 < fast < slow and signal >= 1".into(),
        ));
    }
    need(close.len(), slow + signal)?;
    let fast_ema = ema(close, fast)?;
    let slow_ema = ema(close, slow)?;
    let line: Series = fast_ema
        .iter()
        .zip(&slow_ema)
        .map(|(f, s)| Some(f.as_ref()? - s.as_ref()?))
        .collect();
    let signal = ema_defined(&line, signal);
    Ok(Macd { line, signal })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bands {
    pub upper: Series,
    pub mid: Series,
    pub lower: Series,
}

/// Bollinger bands with a population standard deviation.
pub fn bbands(close: &[f64], window: usize, k: f64) -> Result<Bands, IndicatorError> {
    let mid = sma(close, window)?;
    let mut upper = vec![None; close.len()];
    let mut lower = vec![None; close.len()];
    for t in window - 1..close.len() {
        let m = mid[t].expect("defined after warm-up");
        let slice = &close[t + 1 - window..=t];
        let var = slice.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / window as f64;
        let sd = var.sqrt();
        upper[t] = Some(m + k * sd);
        lower[t] = Some(m - k * sd);
    }
    Ok(Bands { upper, mid, lower })
}

pub fn true_range(high: f64, low: f64, prev_close: f64) -> f64 {
    (high - low)
        .max((high - prev_close).abs())
        .max((low - prev_close).abs())
}

/// Normalized average true range, Wilder-smoothed, in percent of close.
pub fn natr(high: &[f64], low: &[f64], close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    let n = same_len(&[high.len(), low.len(), close.len()])?;
    need(n, window.max(1) + 1)?;
    let w = window as f64;
    let mut out = vec![None; n];
    let tr = |t: usize| true_range(high[t], low[t], close[t - 1]);
    let mut atr = (1..=window).map(tr).sum::<f64>() / w;
    for t in window..n {
        if t > window {
            atr = (atr * (w - 1.0) + tr(t)) / w;
        }
        if close[t] == 0.0 {
            return Err(IndicatorError::ZeroClose(t));
        }
        out[t] = Some(100.0 * atr / close[t]);
    }
    Ok(out)
}

pub fn obv(close: &[f64], volume: &[f64]) -> Result<Series, IndicatorError> {
    let n = same_len(&[close.len(), volume.len()])?;
    need(n, 2)?;
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(Some(acc));
    for t in 1..n {
        if close[t] > close[t - 1] {
            acc += volume[t];
        } else if close[t] < close[t - 1] {
            acc -= volume[t];
        }
        out.push(Some(acc));
    }
    Ok(out)
}

/// Chaikin accumulation/distribution line; zero-range bars contribute 0.
pub fn ad(high: &[f64], low: &[f64], close: &[f64], volume: &[f64]) -> Result<Series, IndicatorError> {
    let n = same_len(&[high.len(), low.len(), close.len(), volume.len()])?;
    need(n, 1)?;
    let mut acc = 0.0;
    Ok((0..n)
        .map(|t| {
            let range = high[t] - low[t];
            let clv = if range == 0.0 {
                0.0
            } else {
                ((close[t] - low[t]) - (high[t] - close[t])) / range
            };
            acc += clv * volume[t];
            Some(acc)
        })
        .collect())
}

/// Raw (fast) %K. A flat window reads 50.
pub fn stoch_raw(high: &[f64], low: &[f64], close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    let n = same_len(&[high.len(), low.len(), close.len()])?;
    need(n, window.max(1))?;
    let mut out = vec![None; n];
    for t in window - 1..n {
        let span = t + 1 - window..=t;
        let hh = high[span.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ll = low[span].iter().copied().fold(f64::INFINITY, f64::min);
        out[t] = Some(if hh == ll {
            50.0
        } else {
            100.0 * (close[t] - ll) / (hh - ll)
        });
    }
    Ok(out)
}

pub const STOCH_SMOOTHING: usize = 3;

/// Slow %K: three-bar SMA of raw %K.
pub fn stoch(high: &[f64], low: &[f64], close: &[f64], window: usize) -> Result<Series, IndicatorError> {
    let raw = stoch_raw(high, low, close, window)?;
    let mut out = vec![None; raw.len()];
    for t in 0..raw.len() {
        if t + 1 < STOCH_SMOOTHING {
            continue;
        }
        let span = &raw[t + 1 - STOCH_SMOOTHING..=t];
        if span.iter().all(Option::is_some) {
            out[t] = Some(span.iter().map(|v| v.unwrap()).sum::<f64>() / STOCH_SMOOTHING as f64);
        }
    }
    Ok(out)
}

/// Indicator column names, in the order they appear as model variables.
pub const PANEL_COLUMNS: [&str; 11] = [
    "ad",
    "obv",
    "sma",
    "ema",
    "rsi",
    "macd",
    "bband_upper",
    "bband_mid",
    "bband_lower",
    "natr",
    "stoch",
];

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorPanel {
    pub dates: Vec<NaiveDate>,
    pub columns: IndexMap<String, Series>,
    /// MACD signal line; kept for inspection, not used as a feature.
    pub macd_signal: Series,
}

impl IndicatorPanel {
    pub fn warm_up(&self, column: &str) -> Option<usize> {
        self.columns
            .get(column)
            .map(|s| s.iter().take_while(|v| v.is_none()).count())
    }

    /// Rows where every indicator is defined, as a `ti.*` source table.
    pub fn to_table(&self) -> Result<TimeSeriesTable, IndicatorError> {
        let keep: Vec<usize> = (0..self.dates.len())
            .filter(|&t| self.columns.values().all(|s| s[t].is_some()))
            .collect();
        if keep.is_empty() {
            return Err(IndicatorError::TooShort {
                len: self.dates.len(),
                needed: self.dates.len() + 1,
            });
        }
        let dates = keep.iter().map(|&t| self.dates[t]).collect();
        let columns = self
            .columns
            .iter()
            .map(|(name, s)| (name.clone(), keep.iter().map(|&t| s[t].unwrap()).collect()))
            .collect();
        Ok(TimeSeriesTable {
            dates,
            columns,
            source_kind: SourceKind::Indicators,
        })
    }
}

/// Computes all indicators on an OHLCV table.
pub fn compute_panel(ohlcv: &TimeSeriesTable, config: &IndicatorConfig) -> Result<IndicatorPanel, IndicatorError> {
    config.validate()?;
    let col = |name: &str| {
        ohlcv
            .column(name)
            .ok_or_else(|| IndicatorError::InvalidConfig(format!("OHLCV column `{name}` missing")))
    };
    let (high, low, close, volume) = (col("high")?, col("low")?, col("close")?, col("volume")?);

    let bands = bbands(close, config.bband_window, config.bband_k as f64)?;
    let macd = macd(close, config.macd_fast, config.macd_slow, config.macd_signal)?;
    let columns: IndexMap<String, Series> = [
        ("ad", ad(high, low, close, volume)?),
        ("obv", obv(close, volume)?),
        ("sma", sma(close, config.sma_window)?),
        ("ema", ema(close, config.ema_window)?),
        ("rsi", rsi(close, config.rsi_window)?),
        ("macd", macd.line),
        ("bband_upper", bands.upper),
        ("bband_mid", bands.mid),
        ("bband_lower", bands.lower),
        ("natr", natr(high, low, close, config.natr_window)?),
        ("stoch", stoch(high, low, close, config.stoch_window)?),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    debug_assert!(columns.keys().eq(PANEL_COLUMNS.iter().copied()));
    Ok(IndicatorPanel {
        dates: ohlcv.dates.clone(),
        columns,
        macd_signal: macd.signal,
    })
}
