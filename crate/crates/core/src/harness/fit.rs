use serde::{Deserialize, Serialize};

use super::sweep::SweepRecord;
use crate::scalar::{to_f64, Scalar};

pub const EXPONENT_RANGE: (f64, f64) = (0.25, 4.0);

/// Least-squares fit of `rescaled ≈ limit + amplitude · m^{−exponent}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub limit: f64,
    pub amplitude: f64,
    pub exponent: f64,
    pub residual_norm: f64,
    /// Too few distinct budgets or an ill-conditioned system; `limit` is then
    /// the last rescaled value.
    pub degenerate: bool,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let scale = xs.iter().map(|x| x * x).sum::<f64>();
    if !(sxx > 1e-14 * scale) {
        return None;
    }
    let b = sxy / sxx;
    let c = my - b * mx;
    let res = xs.iter().zip(ys).map(|(x, y)| (c + b * x - y).powi(2)).sum::<f64>().sqrt();
    Some((c, b, res))
}

/// Grid search over the exponent in [`EXPONENT_RANGE`], golden-section
/// refinement around the best grid point, linear least squares for the
/// limit and amplitude at each exponent.
pub fn fit_limit<T: Scalar>(records: &[SweepRecord<T>]) -> FitResult {
    let mut pts: Vec<(f64, f64)> = records.iter().map(|r| (r.m as f64, to_f64(r.rescaled))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let last = records.last().map(|r| to_f64(r.rescaled)).unwrap_or(f64::NAN);
    let degenerate = FitResult { limit: last, amplitude: 0.0, exponent: 1.0, residual_norm: f64::NAN, degenerate: true };
    if pts.len() < 4 || pts.iter().any(|p| !p.1.is_finite()) {
        return degenerate;
    }
    let ms: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
    if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let res = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>().sqrt();
        return FitResult { limit: mean, amplitude: 0.0, exponent: 1.0, residual_norm: res, degenerate: false };
    }
    let eval = |s: f64| {
        let xs: Vec<f64> = ms.iter().map(|m| m.powf(-s)).collect();
        linear_fit(&xs, &ys)
    };
    let (a, b) = EXPONENT_RANGE;
    let steps = 375;
    let h = (b - a) / steps as f64;
    let mut best: Option<(f64, (f64, f64, f64))> = None;
    for i in 0..=steps {
        let s = a + h * i as f64;
        if let Some(fit) = eval(s) {
            if best.map_or(true, |(_, bf)| fit.2 < bf.2) {
                best = Some((s, fit));
            }
        }
    }
    let Some((s0, _)) = best else {
        return degenerate;
    };
    let (mut l, mut r) = ((s0 - h).max(a), (s0 + h).min(b));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let res = |s: f64| eval(s).map_or(f64::INFINITY, |f| f.2);
    for _ in 0..60 {
        let x1 = r - g * (r - l);
        let x2 = l + g * (r - l);
        if res(x1) <= res(x2) {
            r = x2;
        } else {
            l = x1;
        }
    }
    let s = 0.5 * (l + r);
    let (s, fit) = match (eval(s), best) {
        (Some(f), Some((_, bf))) if f.2 <= bf.2 => (s, f),
        (_, Some((sb, bf))) => (sb, bf),
        _ => return degenerate,
    };
    FitResult { limit: fit.0, amplitude: fit.1, exponent: s, residual_norm: fit.2, degenerate: false }
}
