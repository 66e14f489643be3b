//! epsilon-SVR trained with an SMO solver using second-order working set
//! selection over the `2n` dual variables `(alpha, alpha*)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BaselineError;

pub const MIN_SAMPLES: usize = 30;
const TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;
const ITERATIONS_PER_VARIABLE: usize = 10_000;
const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Self::Linear),
            "rbf" => Ok(Self::Rbf),
            other => Err(format!("unknown kernel `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: KernelKind,
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl SvrParams {
    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kernel {
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrGrid {
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
    pub kernels: Vec<KernelKind>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self {
            c: vec![0.1, 1.0, 10.0, 100.0],
            epsilon: vec![0.01, 0.1],
            gamma: vec![0.01, 0.1, 1.0],
            kernels: vec![KernelKind::Rbf],
        }
    }
}

impl SvrGrid {
    /// Candidates in grid order. Gamma is ignored (and not repeated) for
    /// the linear kernel.
    pub fn candidates(&self) -> Vec<SvrParams> {
        let mut out = Vec::new();
        for &kernel in &self.kernels {
            let gammas: &[f64] = match kernel {
                KernelKind::Linear => &[0.0],
                KernelKind::Rbf => &self.gamma,
            };
            for &c in &self.c {
                for &epsilon in &self.epsilon {
                    for &gamma in gammas {
                        out.push(SvrParams { kernel, c, epsilon, gamma });
                    }
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::InvalidGrid(m.into()));
        if self.c.iter().any(|&c| !(c > 0.0)) {
            return bad("c values must be positive");
        }
        if self.epsilon.iter().any(|&e| !(e >= 0.0)) {
            return bad("epsilon values must be non-negative");
        }
        if self.kernels.contains(&KernelKind::Rbf) && self.gamma.iter().any(|&g| !(g > 0.0)) {
            return bad("gamma values must be positive");
        }
        if self.candidates().is_empty() {
            return bad("empty SVR grid");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha - alpha*` for each support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    /// Maximal KKT violation when the solver stopped.
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }
}

pub fn svr_predict(model: &SvrModel, x: &[f64]) -> Result<f64, BaselineError> {
    if !model.support_vectors.is_empty() && x.len() != model.dim() {
        return Err(BaselineError::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    Ok(model
        .support_vectors
        .iter()
        .zip(&model.dual_coefs)
        .map(|(sv, beta)| beta * model.params.kernel(sv, x))
        .sum::<f64>()
        + model.bias)
}

fn check_shapes(x: &[Vec<f64>], y: &[f64]) -> Result<usize, BaselineError> {
    if x.len() != y.len() {
        return Err(BaselineError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let dim = x.first().map_or(0, Vec::len);
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(BaselineError::DimensionMismatch {
            expected: dim,
            got: row.len(),
        });
    }
    Ok(dim)
}

/// Trains one SVR with fixed hyper-parameters.
pub fn fit_svr_params(x: &[Vec<f64>], y: &[f64], params: SvrParams) -> Result<SvrModel, BaselineError> {
    check_shapes(x, y)?;
    let n = x.len();
    if n == 0 {
        return Err(BaselineError::TooShort { len: 0, needed: 1 });
    }
    let kernel: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| params.kernel(&x[i], &x[j])).collect())
        .collect();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |i: usize, j: usize| sign(i) * sign(j) * kernel[i % n][j % n];
    let qd: Vec<f64> = (0..l).map(|t| kernel[t % n][t % n]).collect();

    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();

    let cap = ITERATIONS_PER_VARIABLE * l;
    let mut iterations = 0;
    let kkt_gap = loop {
        // First index: maximal violating pair, first-order.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l {
            if sign(t) > 0.0 {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = t;
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = t;
            }
        }
        // Second index: maximal second-order objective decrease.
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let yi = sign(i_sel);
            for t in 0..l {
                let (grad_diff, quad) = if sign(t) > 0.0 {
                    if alpha[t] <= 0.0 {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[t]);
                    (gmax + grad[t], qd[i_sel] + qd[t] - 2.0 * yi * q(i_sel, t))
                } else {
                    if alpha[t] >= c {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[t]);
                    (gmax - grad[t], qd[i_sel] + qd[t] + 2.0 * yi * q(i_sel, t))
                };
                if grad_diff > 0.0 {
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -grad_diff * grad_diff / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < TOLERANCE || j_sel == usize::MAX {
            break gap.max(0.0);
        }
        if iterations >= cap {
            return Err(BaselineError::NonConvergence(vec![format!(
                "SVR {params:?}: KKT gap {gap:.3e} after {iterations} iterations"
            )]));
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    };

    // Bias: average over free variables, else midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };

    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta != 0.0 {
            support_vectors.push(x[i].clone());
            dual_coefs.push(beta);
        }
    }
    Ok(SvrModel {
        params,
        support_vectors,
        dual_coefs,
        bias: -rho,
        kkt_gap,
        iterations,
    })
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> f64 {
    let sse: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    (sse / actual.len().max(1) as f64).sqrt()
}

#[derive(Clone, Debug)]
pub struct SvrFit {
    pub model: SvrModel,
    pub validation_rmse: f64,
}

/// Grid search on a chronological hold-out (last 20% of the samples), then
/// a refit of the winner on all samples. RMSE ties prefer the smaller `c`.
pub fn fit_svr(x: &[Vec<f64>], y: &[f64], grid: &SvrGrid) -> Result<SvrFit, BaselineError> {
    check_shapes(x, y)?;
    if x.len() < MIN_SAMPLES {
        return Err(BaselineError::TooShort {
            len: x.len(),
            needed: MIN_SAMPLES,
        });
    }
    grid.validate()?;
    let n_val = ((x.len() as f64 * VALIDATION_FRACTION).floor() as usize).max(1);
    let split = x.len() - n_val;
    let (xt, xv) = x.split_at(split);
    let (yt, yv) = y.split_at(split);

    let scored: Vec<Result<(SvrParams, f64), BaselineError>> = grid
        .candidates()
        .into_par_iter()
        .map(|params| {
            let model = fit_svr_params(xt, yt, params)?;
            let pred = xv.iter().map(|r| svr_predict(&model, r)).collect::<Result<Vec<_>, _>>()?;
            Ok((params, rmse(&pred, yv)))
        })
        .collect();

    let mut failures = Vec::new();
    let mut best: Option<(SvrParams, f64)> = None;
    for result in scored {
        match result {
            Ok((params, score)) if score.is_finite() => {
                let better = match best {
                    None => true,
                    Some((bp, bs)) => score < bs || (score == bs && params.c < bp.c),
                };
                if better {
                    best = Some((params, score));
                }
            }
            Ok((params, _)) => failures.push(format!("SVR {params:?}: non-finite validation error")),
            Err(BaselineError::NonConvergence(msgs)) => failures.extend(msgs),
            Err(other) => return Err(other),
        }
    }
    let (params, validation_rmse) = best.ok_or(BaselineError::NonConvergence(failures))?;
    Ok(SvrFit {
        model: fit_svr_params(x, y, params)?,
        validation_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_params(c: f64, epsilon: f64) -> SvrParams {
        SvrParams {
            kernel: KernelKind::Linear,
            c,
            epsilon,
            gamma: 0.0,
        }
    }

    #[test]
    fn exact_line_is_recovered() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 0.5).collect();
        let model = fit_svr_params(&x, &y, linear_params(100.0, 0.01)).unwrap();
        for (r, t) in x.iter().zip(&y) {
            assert!((svr_predict(&model, r).unwrap() - t).abs() <= 0.01 + 2e-3);
        }
        assert!(model.kkt_gap < TOLERANCE);
    }

    #[test]
    fn wide_tube_gives_constant_model() {
        // Every target lies inside the tube around its midpoint: no support vectors.
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![1.0, 1.1, 0.9, 1.0, 1.05, 0.95, 1.0, 1.1, 0.9, 1.0];
        let model = fit_svr_params(&x, &y, linear_params(1.0, 0.5)).unwrap();
        assert!(model.support_vectors.is_empty());
        let p = svr_predict(&model, &[3.0]).unwrap();
        assert!(p >= 1.1 - 0.5 - 1e-9 && p <= 0.9 + 0.5 + 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let model = fit_svr_params(&x, &y, linear_params(1.0, 0.1)).unwrap();
        assert!(matches!(
            svr_predict(&model, &[1.0]),
            Err(BaselineError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn grid_candidates() {
        assert_eq!(SvrGrid::default().candidates().len(), 24);
        let g = SvrGrid {
            kernels: vec![KernelKind::Linear],
            ..SvrGrid::default()
        };
        assert_eq!(g.candidates().len(), 8);
    }
}
