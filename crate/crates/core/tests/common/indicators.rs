//! Brute-force replays: every output value is recomputed from scratch,
//! without the running sums the library uses.

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sma_at(close: &[f64], w: usize, t: usize) -> Option<f64> {
    (t + 1 >= w).then(|| mean(&close[t + 1 - w..=t]))
}

/// EMA of `xs` at `t`, seeded with the mean of the first `w` entries.
pub fn ema_seq_at(xs: &[f64], w: usize, t: usize) -> Option<f64> {
    if t + 1 < w {
        return None;
    }
    let alpha = 2.0 / (w as f64 + 1.0);
    let mut v = mean(&xs[..w]);
    for &x in &xs[w..=t] {
        v = alpha * x + (1.0 - alpha) * v;
    }
    Some(v)
}

pub fn rsi_at(close: &[f64], w: usize, t: usize) -> Option<f64> {
    if t < w {
        return None;
    }
    let d: Vec<f64> = (1..=t).map(|j| close[j] - close[j - 1]).collect();
    let wf = w as f64;
    let mut g = d[..w].iter().map(|x| x.max(0.0)).sum::<f64>() / wf;
    let mut l = d[..w].iter().map(|x| (-x).max(0.0)).sum::<f64>() / wf;
    for x in &d[w..] {
        g = (g * (wf - 1.0) + x.max(0.0)) / wf;
        l = (l * (wf - 1.0) + (-x).max(0.0)) / wf;
    }
    Some(if g == 0.0 && l == 0.0 {
        50.0
    } else if l == 0.0 {
        100.0
    } else {
        100.0 - 100.0 / (1.0 + g / l)
    })
}

pub fn macd_at(close: &[f64], fast: usize, slow: usize, t: usize) -> Option<f64> {
    Some(ema_seq_at(close, fast, t)? - ema_seq_at(close, slow, t)?)
}

pub fn bbands_at(close: &[f64], w: usize, k: f64, t: usize) -> Option<(f64, f64, f64)> {
    let m = sma_at(close, w, t)?;
    let xs = &close[t + 1 - w..=t];
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / w as f64;
    Some((m + k * var.sqrt(), m, m - k * var.sqrt()))
}

pub fn natr_at(h: &[f64], l: &[f64], c: &[f64], w: usize, t: usize) -> Option<f64> {
    if t < w {
        return None;
    }
    let tr = |j: usize| (h[j] - l[j]).max((h[j] - c[j - 1]).abs()).max((l[j] - c[j - 1]).abs());
    let wf = w as f64;
    let mut atr = (1..=w).map(tr).sum::<f64>() / wf;
    for j in w + 1..=t {
        atr = (atr * (wf - 1.0) + tr(j)) / wf;
    }
    Some(100.0 * atr / c[t])
}

pub fn obv_at(c: &[f64], v: &[f64], t: usize) -> f64 {
    (1..=t)
        .map(|j| match c[j].partial_cmp(&c[j - 1]) {
            Some(std::cmp::Ordering::Greater) => v[j],
            Some(std::cmp::Ordering::Less) => -v[j],
            _ => 0.0,
        })
        .sum()
}

pub fn ad_at(h: &[f64], l: &[f64], c: &[f64], v: &[f64], t: usize) -> f64 {
    (0..=t)
        .map(|j| {
            let r = h[j] - l[j];
            if r == 0.0 {
                0.0
            } else {
                v[j] * ((c[j] - l[j]) - (h[j] - c[j])) / r
            }
        })
        .sum()
}

fn raw_k(h: &[f64], l: &[f64], c: &[f64], w: usize, t: usize) -> Option<f64> {
    if t + 1 < w {
        return None;
    }
    let hh = h[t + 1 - w..=t].iter().cloned().fold(f64::MIN, f64::max);
    let ll = l[t + 1 - w..=t].iter().cloned().fold(f64::MAX, f64::min);
    Some(if hh == ll { 50.0 } else { 100.0 * (c[t] - ll) / (hh - ll) })
}

pub fn stoch_at(h: &[f64], l: &[f64], c: &[f64], w: usize, t: usize) -> Option<f64> {
    if t < 2 {
        return None;
    }
    Some((raw_k(h, l, c, w, t - 2)? + raw_k(h, l, c, w, t - 1)? + raw_k(h, l, c, w, t)?) / 3.0)
}

pub fn rel_close(a: f64, b: f64) -> bool {
    let scale = b.abs();
    if scale > 1e-6 {
        (a - b).abs() / scale <= 1e-9
    } else {
        (a - b).abs() <= 1e-12
    }
}
