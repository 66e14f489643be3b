//! Price-regression baselines whose forecasts are turned into directions.

pub mod arima;
pub mod svr;

pub use arima::{arima_forecast, fit_arima, ArimaFit, ArimaGrid, ArimaModel, ArimaOrder};
pub use svr::{fit_svr, fit_svr_params, svr_predict, KernelKind, SvrFit, SvrGrid, SvrModel, SvrParams};

use crate::direction::Direction;
use crate::ingest::MinMax;

/// Number of lagged closes used as SVR features.
pub const SVR_LAGS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("series has {len} points, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("no candidate converged: {}", .0.join("; "))]
    NonConvergence(Vec<String>),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Gaussian elimination with partial pivoting. `None` if singular.
pub(crate) fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Direction of a forecast relative to the last known close.
pub fn forecast_direction(previous: f64, forecast: f64) -> Direction {
    Direction::between(previous, forecast)
}

/// One-step forecasts for each target index in `targets`, each using only
/// `closes[..target]` with the model's coefficients held fixed.
pub fn arima_directions(model: &ArimaModel, closes: &[f64], targets: &[usize]) -> Result<Vec<Direction>, BaselineError> {
    targets
        .iter()
        .map(|&t| {
            let forecast = model.forecast_after(&closes[..t])?;
            Ok(forecast_direction(closes[t - 1], forecast))
        })
        .collect()
}

/// SVR regression set built from `closes`: features are the scaled
/// previous [`SVR_LAGS`] closes, the target is the scaled close.
pub fn lagged_samples(scaled: &[f64], lags: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    (lags..scaled.len())
        .map(|t| (scaled[t - lags..t].to_vec(), scaled[t]))
        .unzip()
}

/// Fitted SVR baseline plus the scaling it was trained under.
#[derive(Clone, Debug)]
pub struct SvrBaseline {
    pub fit: SvrFit,
    pub scaler: MinMax,
}

impl SvrBaseline {
    /// Trains on `train_closes` (scaling fitted on them only).
    pub fn train(train_closes: &[f64], grid: &SvrGrid) -> Result<Self, BaselineError> {
        let scaler = MinMax::fit(train_closes);
        let scaled: Vec<f64> = train_closes.iter().map(|&v| scaler.apply(v)).collect();
        let (x, y) = lagged_samples(&scaled, SVR_LAGS);
        Ok(Self {
            fit: fit_svr(&x, &y, grid)?,
            scaler,
        })
    }

    pub fn directions(&self, closes: &[f64], targets: &[usize]) -> Result<Vec<Direction>, BaselineError> {
        targets
            .iter()
            .map(|&t| {
                if t < SVR_LAGS {
                    return Err(BaselineError::TooShort { len: t, needed: SVR_LAGS });
                }
                let x: Vec<f64> = closes[t - SVR_LAGS..t].iter().map(|&v| self.scaler.apply(v)).collect();
                let forecast = self.scaler.invert(svr_predict(&self.fit.model, &x)?);
                Ok(forecast_direction(closes[t - 1], forecast))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_linear(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        assert!(solve_linear(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn lagged_sample_shape() {
        let (x, y) = lagged_samples(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 5);
        assert_eq!(x, vec![vec![0.0, 0.1, 0.2, 0.3, 0.4], vec![0.1, 0.2, 0.3, 0.4, 0.5]]);
        assert_eq!(y, vec![0.5, 0.6]);
    }

    #[test]
    fn forecast_tie_is_up() {
        assert_eq!(forecast_direction(1.0, 1.0), Direction::Up);
        assert_eq!(forecast_direction(1.0, 0.99), Direction::Down);
    }
}
