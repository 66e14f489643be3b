//! ARIMA(p, d, q) fitted by conditional sum of squares.
//!
//! The differenced series `w` follows
//! `w[t] = c + sum(ar[i] * w[t-1-i]) + sum(ma[j] * e[t-1-j]) + e[t]`,
//! with residuals before the first `p` observations fixed at zero. The
//! intercept `c` is only estimated when `d = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_linear, BaselineError};

pub const MIN_SERIES_LEN: usize = 50;
const MAX_ITERATIONS: usize = 500;
const TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    fn has_intercept(&self) -> bool {
        self.d == 0
    }

    /// Parameter count used in the AIC penalty.
    pub fn aic_params(&self) -> usize {
        self.p + self.q + 1
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArimaGrid {
    pub p: Vec<usize>,
    pub d: Vec<usize>,
    pub q: Vec<usize>,
}

impl Default for ArimaGrid {
    fn default() -> Self {
        Self {
            p: (0..=3).collect(),
            d: (0..=2).collect(),
            q: (0..=3).collect(),
        }
    }
}

impl ArimaGrid {
    pub fn orders(&self) -> Vec<ArimaOrder> {
        let mut out = Vec::new();
        for &p in &self.p {
            for &d in &self.d {
                for &q in &self.q {
                    out.push(ArimaOrder::new(p, d, q));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub aic: f64,
    /// Last `max(p, 1) + d` observations of the training series.
    pub training_tail: Vec<f64>,
    /// Last `q` in-sample residuals.
    pub tail_residuals: Vec<f64>,
}

pub fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut w = series.to_vec();
    for _ in 0..d {
        w = w.windows(2).map(|x| x[1] - x[0]).collect();
    }
    w
}

/// Conditional residuals of the differenced series.
fn residuals(w: &[f64], order: ArimaOrder, intercept: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; w.len()];
    for t in order.p..w.len() {
        let mut pred = intercept;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

fn sse(e: &[f64], p: usize) -> f64 {
    e[p..].iter().map(|x| x * x).sum()
}

struct Params<'a> {
    order: ArimaOrder,
    values: &'a [f64],
}

impl Params<'_> {
    fn split(&self) -> (f64, &[f64], &[f64]) {
        let c = usize::from(self.order.has_intercept());
        let intercept = if c == 1 { self.values[0] } else { 0.0 };
        let ar = &self.values[c..c + self.order.p];
        let ma = &self.values[c + self.order.p..];
        (intercept, ar, ma)
    }
}

/// Residuals and their Jacobian with respect to (intercept?, ar, ma).
fn residuals_with_jacobian(w: &[f64], params: &Params<'_>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let order = params.order;
    let (intercept, ar, ma) = params.split();
    let k = params.values.len();
    let e = residuals(w, order, intercept, ar, ma);
    let mut jac = vec![vec![0.0; k]; w.len()];
    let c = usize::from(order.has_intercept());
    for t in order.p..w.len() {
        let mut row = vec![0.0; k];
        if c == 1 {
            row[0] = -1.0;
        }
        for i in 0..order.p {
            row[c + i] = -w[t - 1 - i];
        }
        for j in 0..order.q {
            if t > j {
                row[c + order.p + j] = -e[t - 1 - j];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                let prev = &jac[t - 1 - j];
                for m in 0..k {
                    row[m] -= theta * prev[m];
                }
            }
        }
        jac[t] = row;
    }
    (e, jac)
}

/// Least-squares AR fit (exact CSS solution when q = 0).
fn ols_start(w: &[f64], order: ArimaOrder) -> Option<Vec<f64>> {
    let c = usize::from(order.has_intercept());
    let k = c + order.p;
    let mut params = vec![0.0; k + order.q];
    if k == 0 {
        return Some(params);
    }
    let mut ata = vec![vec![0.0; k]; k];
    let mut atb = vec![0.0; k];
    for t in order.p..w.len() {
        let mut x = Vec::with_capacity(k);
        if c == 1 {
            x.push(1.0);
        }
        x.extend((0..order.p).map(|i| w[t - 1 - i]));
        for a in 0..k {
            atb[a] += x[a] * w[t];
            for b in 0..k {
                ata[a][b] += x[a] * x[b];
            }
        }
    }
    let beta = solve_linear(ata, atb)?;
    params[..k].copy_from_slice(&beta);
    Some(params)
}

/// Damped Gauss-Newton (Levenberg-Marquardt) on the CSS objective.
fn gauss_newton(w: &[f64], order: ArimaOrder, mut params: Vec<f64>) -> Result<Vec<f64>, String> {
    let k = params.len();
    let mut lambda = 1e-3;
    let (mut e, mut jac) = residuals_with_jacobian(w, &Params { order, values: &params });
    let mut current = sse(&e, order.p);
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jte = vec![0.0; k];
        for t in order.p..w.len() {
            for a in 0..k {
                jte[a] += jac[t][a] * e[t];
                for b in 0..k {
                    jtj[a][b] += jac[t][a] * jac[t][b];
                }
            }
        }
        loop {
            let mut damped = jtj.clone();
            for a in 0..k {
                damped[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            let step = solve_linear(damped, jte.iter().map(|g| -g).collect());
            let Some(step) = step else {
                lambda *= 10.0;
                if lambda > 1e12 {
                    return Ok(params);
                }
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (te, tj) = residuals_with_jacobian(w, &Params { order, values: &trial });
            let trial_sse = sse(&te, order.p);
            if trial_sse.is_finite() && trial_sse < current {
                let improvement = (current - trial_sse) / current.max(f64::MIN_POSITIVE);
                params = trial;
                e = te;
                jac = tj;
                current = trial_sse;
                lambda = (lambda / 10.0).max(1e-12);
                if improvement < TOLERANCE {
                    return Ok(params);
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // No descent direction left: a stationary point.
                return Ok(params);
            }
        }
    }
    Err(format!("no convergence within {MAX_ITERATIONS} iterations"))
}

fn tails(series: &[f64], w: &[f64], order: ArimaOrder, e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let keep = order.p.max(1) + order.d;
    let tail = series[series.len().saturating_sub(keep)..].to_vec();
    let res = e[w.len().saturating_sub(order.q)..].to_vec();
    debug_assert!(res.len() == order.q.min(w.len()));
    (tail, res)
}

/// Fits one candidate order.
pub fn fit_order(series: &[f64], order: ArimaOrder) -> Result<ArimaModel, String> {
    let w = difference(series, order.d);
    let needed = 10 * order.aic_params();
    if w.len() < needed || w.len() <= order.p {
        return Err(format!("needs {needed} differenced observations, has {}", w.len()));
    }
    let start = ols_start(&w, order).ok_or("singular AR design")?;
    let params = if order.q == 0 {
        start
    } else {
        gauss_newton(&w, order, start)?
    };
    let p = Params { order, values: &params };
    let (intercept, ar, ma) = p.split();
    let e = residuals(&w, order, intercept, ar, ma);
    let total = sse(&e, order.p);
    let n_eff = (w.len() - order.p) as f64;
    if !total.is_finite() || params.iter().any(|x| !x.is_finite()) {
        return Err("non-finite fit".into());
    }
    let aic = n_eff * (total / n_eff).ln() + 2.0 * order.aic_params() as f64;
    let (training_tail, tail_residuals) = tails(series, &w, order, &e);
    Ok(ArimaModel {
        order,
        ar_coeffs: ar.to_vec(),
        ma_coeffs: ma.to_vec(),
        intercept,
        sigma2: total / n_eff,
        aic,
        training_tail,
        tail_residuals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateStatus {
    pub order: ArimaOrder,
    pub aic: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ArimaFit {
    pub model: ArimaModel,
    pub candidates: Vec<CandidateStatus>,
}

const AIC_TIE: f64 = 1e-9;

/// Fits every order in `grid` and keeps the lowest AIC. Ties prefer the
/// smaller `p + q`, then the lexicographically smaller order.
pub fn fit_arima(series: &[f64], grid: &ArimaGrid) -> Result<ArimaFit, BaselineError> {
    if series.len() < MIN_SERIES_LEN {
        return Err(BaselineError::TooShort {
            len: series.len(),
            needed: MIN_SERIES_LEN,
        });
    }
    let orders = grid.orders();
    if orders.is_empty() {
        return Err(BaselineError::InvalidGrid("empty ARIMA grid".into()));
    }
    let fits: Vec<Result<ArimaModel, String>> = orders.par_iter().map(|&o| fit_order(series, o)).collect();

    let candidates = orders
        .iter()
        .zip(&fits)
        .map(|(&order, fit)| CandidateStatus {
            order,
            aic: fit.as_ref().ok().map(|m| m.aic),
            failure: fit.as_ref().err().cloned(),
        })
        .collect::<Vec<_>>();

    let mut best: Option<&ArimaModel> = None;
    for model in fits.iter().flatten() {
        let better = match best {
            None => true,
            Some(b) => {
                if (model.aic - b.aic).abs() <= AIC_TIE || model.aic == b.aic {
                    let key = |m: &ArimaModel| (m.order.p + m.order.q, m.order);
                    key(model) < key(b)
                } else {
                    model.aic < b.aic
                }
            }
        };
        if better {
            best = Some(model);
        }
    }
    match best {
        Some(model) => Ok(ArimaFit {
            model: model.clone(),
            candidates,
        }),
        None => Err(BaselineError::NonConvergence(
            candidates
                .iter()
                .map(|c| format!("{}: {}", c.order, c.failure.as_deref().unwrap_or("ok")))
                .collect(),
        )),
    }
}

/// Integrates a forecast of the d-th difference back to the level scale.
fn integrate(levels: &[f64], d: usize, w_next: f64) -> f64 {
    // y[n+1] = w + sum_k (-1)^(k+1) C(d, k) y[n+1-k]
    let mut y = w_next;
    let mut binom = 1.0;
    for k in 1..=d {
        binom = binom * (d - k + 1) as f64 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        y += sign * binom * levels[levels.len() - k];
    }
    y
}

impl ArimaModel {
    fn forecast_path(&self, levels: &[f64], residuals: &[f64], horizon: usize) -> Vec<f64> {
        let d = self.order.d;
        let mut levels = levels.to_vec();
        let mut w = difference(&levels, d);
        let mut e = residuals.to_vec();
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let mut next = self.intercept;
            for (i, phi) in self.ar_coeffs.iter().enumerate() {
                next += phi * w[w.len() - 1 - i];
            }
            for (j, theta) in self.ma_coeffs.iter().enumerate() {
                if let Some(r) = e.len().checked_sub(1 + j).map(|k| e[k]) {
                    next += theta * r;
                }
            }
            let y = integrate(&levels, d, next);
            levels.push(y);
            w.push(next);
            e.push(0.0);
            out.push(y);
        }
        out
    }

    /// Forecast `horizon` steps past the end of the training series.
    pub fn forecast(&self, horizon: usize) -> Vec<f64> {
        self.forecast_path(&self.training_tail, &self.tail_residuals, horizon)
    }

    /// One-step forecast after `history`, with residuals recomputed over the
    /// whole history using the fitted coefficients.
    pub fn forecast_after(&self, history: &[f64]) -> Result<f64, BaselineError> {
        let needed = self.order.p + self.order.d + 1;
        if history.len() < needed {
            return Err(BaselineError::TooShort {
                len: history.len(),
                needed,
            });
        }
        let w = difference(history, self.order.d);
        let e = residuals(&w, self.order, self.intercept, &self.ar_coeffs, &self.ma_coeffs);
        let keep = self.order.p.max(1) + self.order.d;
        let levels = &history[history.len() - keep..];
        let res = &e[e.len() - self.order.q.min(e.len())..];
        Ok(self.forecast_path(levels, res, 1)[0])
    }
}

/// One-step-ahead forecast from the end of the training data.
pub fn arima_forecast(model: &ArimaModel, horizon: usize) -> f64 {
    *model
        .forecast(horizon.max(1))
        .last()
        .expect("horizon >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_model(order: ArimaOrder, intercept: f64, ar: Vec<f64>, ma: Vec<f64>, series: &[f64]) -> ArimaModel {
        let w = difference(series, order.d);
        let e = residuals(&w, order, intercept, &ar, &ma);
        let (training_tail, tail_residuals) = tails(series, &w, order, &e);
        ArimaModel {
            order,
            ar_coeffs: ar,
            ma_coeffs: ma,
            intercept,
            sigma2: 0.0,
            aic: 0.0,
            training_tail,
            tail_residuals,
        }
    }

    #[test]
    fn random_walk_forecast_is_last_value() {
        let series = [3.0, 5.0, 4.0, 8.5];
        let m = hand_model(ArimaOrder::new(0, 1, 0), 0.0, vec![], vec![], &series);
        assert_eq!(arima_forecast(&m, 1), 8.5);
        assert_eq!(m.forecast_after(&series).unwrap(), 8.5);
    }

    #[test]
    fn ar1_recursion() {
        let m = hand_model(ArimaOrder::new(1, 0, 0), 0.0, vec![0.5], vec![], &[1.0, 2.0, 4.0]);
        assert_eq!(arima_forecast(&m, 1), 2.0);
        assert_eq!(arima_forecast(&m, 2), 1.0);
    }

    #[test]
    fn arima_111_matches_manual_replay() {
        let series = [10.0, 10.5, 10.2, 10.9, 11.4, 11.1, 11.8, 12.4, 12.1, 12.9];
        let (phi, theta) = (0.4, -0.3);
        let m = hand_model(ArimaOrder::new(1, 1, 1), 0.0, vec![phi], vec![theta], &series);

        // Manual replay: w[t] = y[t] - y[t-1]; e[0] = 0; e[t] = w[t] - phi w[t-1] - theta e[t-1].
        let w: Vec<f64> = (1..series.len()).map(|t| series[t] - series[t - 1]).collect();
        let mut e = vec![0.0; w.len()];
        for t in 1..w.len() {
            e[t] = w[t] - phi * w[t - 1] - theta * e[t - 1];
        }
        let w_next = phi * w[w.len() - 1] + theta * e[e.len() - 1];
        let expected = series[series.len() - 1] + w_next;
        assert!((arima_forecast(&m, 1) - expected).abs() < 1e-12);
        assert!((m.forecast_after(&series).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn second_difference_integration() {
        // Quadratic series has constant second difference 2.
        let series: Vec<f64> = (0..6).map(|t| (t * t) as f64).collect();
        let m = hand_model(ArimaOrder::new(1, 2, 0), 0.0, vec![1.0], vec![], &series);
        assert!((arima_forecast(&m, 1) - 36.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_rejected() {
        let err = fit_arima(&[1.0; 20], &ArimaGrid::default()).unwrap_err();
        assert!(matches!(err, BaselineError::TooShort { len: 20, .. }));
    }
}
