//! Weighted `L^p` approximation error `∫ (f − l)^p ω(x, f(x)) dx` and gap
//! diagnostics for circumscribed envelopes.

use serde::{Deserialize, Serialize};

use crate::convex_core::{PiecewiseAffineMax, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_integrate_tol, gauss_legendre, gauss_legendre_on, integrate, QuadratureKind, QuadratureSpec};
use crate::scalar::{lit, pairwise_sum, to_f64, Scalar};

/// Absolute tolerance of the circumscription pre-check.
pub const CIRCUMSCRIPTION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport<T> {
    pub value: T,
    /// Standard error (Monte Carlo) or refinement delta (deterministic).
    pub error_bar: T,
    pub nodes_used: usize,
}

fn check_dims<T: Scalar>(f: &SmoothConvexFunction<T>, l: &PiecewiseAffineMax<T>) -> Result<()> {
    if f.dim() != l.dim() {
        return Err(Error::InvalidArgument(format!("function is {}-dimensional, envelope {}", f.dim(), l.dim())));
    }
    Ok(())
}

fn weight_at<T: Scalar>(w: &WeightFunction<T>, x: &[T], fx: T) -> Result<T> {
    let v = w.eval(x, fx);
    if v < T::zero() || !v.is_finite() {
        return Err(Error::InvalidWeight(format!("ω = {v} at {x:?}")));
    }
    Ok(v)
}

fn power<T: Scalar>(gap: T, p: T) -> T {
    if p == T::one() {
        gap
    } else if p == lit(2.0) {
        gap * gap
    } else {
        gap.powf(p)
    }
}

/// `∫_{dom f} (f − l)^p ω(x, f(x)) dx`, rejecting envelopes that exceed `f`
/// by more than [`CIRCUMSCRIPTION_TOL`] at any node.
pub fn weighted_lp_error<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    l: &PiecewiseAffineMax<T>,
    p: T,
    w: &WeightFunction<T>,
    quad: &QuadratureSpec,
) -> Result<ErrorReport<T>> {
    check_dims(f, l)?;
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    if quad.kind == QuadratureKind::Exact1d {
        return exact_1d_piecewise_integral(f, l, p, w);
    }
    let tol = lit::<T>(CIRCUMSCRIPTION_TOL);
    let est = integrate(f.domain(), quad, |x| {
        let fx = f.value(x);
        let gap = fx - l.eval(x);
        if gap < -tol {
            return Err(Error::InvalidEnvelope(to_f64(-gap)));
        }
        Ok(power(gap.max(T::zero()), p) * weight_at(w, x, fx)?)
    })?;
    Ok(ErrorReport { value: est.value, error_bar: est.error_bar, nodes_used: est.nodes_used })
}

/// Cells of a 1D max-of-lines on `[a, b]`: `(piece index, start, end)` in
/// increasing order. Dominated pieces are pruned.
pub fn envelope_cells_1d<T: Scalar>(l: &PiecewiseAffineMax<T>, a: T, b: T) -> Result<Vec<(usize, T, T)>> {
    if l.dim() != 1 {
        return Err(Error::InvalidArgument("envelope cells need a 1D envelope".into()));
    }
    let lines: Vec<(T, T)> = l.pieces().map(|p| (p.slope[0], p.offset)).collect();
    let mut order: Vec<usize> = (0..lines.len()).collect();
    // by slope; equal slopes keep only the highest offset (ties → lowest index)
    order.sort_by(|&i, &j| {
        lines[i].0.partial_cmp(&lines[j].0).unwrap().then(lines[j].1.partial_cmp(&lines[i].1).unwrap()).then(i.cmp(&j))
    });
    order.dedup_by(|next, kept| lines[*next].0 == lines[*kept].0);
    // upper hull: stack of lines with increasing breakpoints
    let cross = |i: usize, j: usize| (lines[i].1 - lines[j].1) / (lines[j].0 - lines[i].0);
    let mut hull: Vec<usize> = Vec::with_capacity(order.len());
    for &k in &order {
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // j is useless when k overtakes i no later than j does
            if cross(i, k) <= cross(i, j) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut cells = Vec::with_capacity(hull.len());
    let mut start = a;
    for (idx, &k) in hull.iter().enumerate() {
        let end = if idx + 1 < hull.len() { cross(k, hull[idx + 1]).min(b) } else { b };
        if end > start {
            cells.push((k, start, end));
            start = end;
        }
        if start >= b {
            break;
        }
    }
    if cells.is_empty() {
        // every breakpoint left of `a`: the steepest line covers the interval
        cells.push((*hull.last().expect("non-empty"), a, b));
    }
    Ok(cells)
}

/// Abscissa in `[lo, hi]` where `f′ = slope` (the tangency of a tangent
/// line), or `None` when `f′ − slope` does not change sign there.
pub(crate) fn tangency_1d<T: Scalar>(f: &SmoothConvexFunction<T>, slope: T, lo: T, hi: T) -> Option<T> {
    let g = |x: T| f.gradient(&[x])[0] - slope;
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga > T::zero() || gb < T::zero() {
        return None;
    }
    let half = lit::<T>(0.5);
    for _ in 0..200 {
        let m = (a + b) * half;
        if m <= a || m >= b {
            break;
        }
        if g(m) < T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    Some((a + b) * half)
}

/// Cell-by-cell integral of `(f − l)^p ω` on an interval domain. Each cell is
/// split at the tangency point; polynomial integrands (quadratic `f`,
/// integer `p`, weight polynomial in `x`) use an exact Gauss rule, the rest
/// adaptive quadrature at relative tolerance 1e−12.
pub fn exact_1d_piecewise_integral<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    l: &PiecewiseAffineMax<T>,
    p: T,
    w: &WeightFunction<T>,
) -> Result<ErrorReport<T>> {
    check_dims(f, l)?;
    if f.dim() != 1 || !f.domain().is_box() {
        return Err(Error::InvalidArgument("exact 1D integral needs an interval domain".into()));
    }
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    let (lo, hi) = f.domain().bounding_box();
    let cells = envelope_cells_1d(l, lo[0], hi[0])?;
    let tol = lit::<T>(CIRCUMSCRIPTION_TOL);
    let p_int = (to_f64(p).fract() == 0.0).then(|| to_f64(p) as usize);
    let exact_rule = match (f.is_quadratic(), p_int, w.x_degree()) {
        (true, Some(k), Some(deg)) => Some(gauss_legendre((2 * k + deg) / 2 + 2)),
        _ => None,
    };
    // rough total fixes the absolute accuracy target of the adaptive path
    let rough_rule = gauss_legendre(8);
    let rough = cells.iter().fold(T::zero(), |acc, &(k, c0, c1)| {
        let piece = l.piece(k);
        acc + gauss_legendre_on(c0, c1, &rough_rule, |x| {
            let fx = f.value(&[x]);
            power((fx - piece.eval(&[x])).max(T::zero()), p) * w.eval(&[x], fx).abs()
        })
    });
    let abs_floor = lit::<T>(1e-14) * rough / (hi[0] - lo[0]);
    let mut parts = Vec::with_capacity(2 * cells.len());
    let mut err = T::zero();
    let mut nodes = 0;
    let failure: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
    for &(k, c0, c1) in &cells {
        let piece = l.piece(k);
        let (g, b) = (piece.slope[0], piece.offset);
        let t = tangency_1d(f, g, c0, c1);
        for x in [Some(c0), Some(c1), t].into_iter().flatten() {
            let gap = f.value(&[x]) - (g * x + b);
            if gap < -tol {
                return Err(Error::InvalidEnvelope(to_f64(-gap)));
            }
        }
        let integrand = |x: T| {
            let fx = f.value(&[x]);
            let gap = (fx - (g * x + b)).max(T::zero());
            match weight_at(w, &[x], fx) {
                Ok(om) => power(gap, p) * om,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            }
        };
        let split = t.unwrap_or(c0);
        for (s0, s1) in [(c0, split), (split, c1)] {
            if s1 <= s0 {
                continue;
            }
            match &exact_rule {
                Some(rule) => {
                    parts.push(gauss_legendre_on(s0, s1, rule, &integrand));
                    nodes += rule.0.len();
                }
                None => {
                    // f − l cancels near the tangency: its absolute noise is a
                    // few ulps of |f|, and bisection cannot resolve below that
                    let fs = [f.value(&[s0]), f.value(&[s1])];
                    let scale = fs[0].abs().max(fs[1].abs()).max(b.abs());
                    let omega = weight_at(w, &[s0], fs[0])?.max(weight_at(w, &[s1], fs[1])?);
                    let gap_max = (fs[0] - (g * s0 + b)).max(fs[1] - (g * s1 + b)).max(T::zero());
                    let ulp = lit::<T>(64.0) * T::epsilon() * scale;
                    let noise = if p >= T::one() { p * gap_max.powf(p - T::one()) * ulp } else { ulp.powf(p) };
                    let floor = (abs_floor * (s1 - s0)).max(noise * omega * (s1 - s0));
                    let e = adaptive_integrate_tol(s0, s1, lit(1e-12), floor, &integrand);
                    parts.push(e.value);
                    err = err + e.error_bar;
                    nodes += e.nodes_used;
                }
            }
        }
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ErrorReport { value: pairwise_sum(&parts), error_bar: err, nodes_used: nodes })
}

/// Signed `max (l − f)` over the samples; `≤ 0` for a circumscribed envelope.
pub fn max_violation<T: Scalar>(f: &SmoothConvexFunction<T>, l: &PiecewiseAffineMax<T>, samples: &[Vec<T>]) -> Result<T> {
    check_dims(f, l)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(samples.iter().map(|x| l.eval(x) - f.value(x)).fold(T::neg_infinity(), T::max))
}

/// `max (f − l)` over the samples.
pub fn sup_gap<T: Scalar>(f: &SmoothConvexFunction<T>, l: &PiecewiseAffineMax<T>, samples: &[Vec<T>]) -> Result<T> {
    check_dims(f, l)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    Ok(samples.iter().map(|x| f.value(x) - l.eval(x)).fold(T::neg_infinity(), T::max))
}
