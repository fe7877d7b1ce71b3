//! Optimal tangent abscissas in one dimension: dynamic programming over a
//! candidate grid, then Newton iterations on the stationarity conditions.

use crate::convex_core::{tangent_plane, PiecewiseAffineMax, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on};
use crate::scalar::{from_usize, lit, pairwise_sum, Scalar};

/// Largest budget solved by dynamic programming; larger budgets start the
/// Newton stage from the asymptotically optimal point density.
const DP_MAX_M: usize = 512;

struct Problem<'a, T> {
    f: &'a SmoothConvexFunction<T>,
    w: &'a WeightFunction<T>,
    p: T,
    a: T,
    b: T,
    rule: (Vec<f64>, Vec<f64>),
}

impl<T: Scalar> Problem<'_, T> {
    fn f(&self, x: T) -> T {
        self.f.value(&[x])
    }

    fn df(&self, x: T) -> T {
        self.f.gradient(&[x])[0]
    }

    fn d2f(&self, x: T) -> T {
        self.f.hessian(&[x]).get(0, 0)
    }

    fn omega(&self, x: T, fx: T) -> T {
        self.w.eval(&[x], fx)
    }

    fn pow(&self, g: T) -> T {
        if self.p == T::one() {
            g
        } else if self.p == lit(2.0) {
            g * g
        } else {
            g.powf(self.p)
        }
    }

    /// `∫_u^v gap_t^p ω`, with `t` outside `(u, v)`.
    fn side(&self, t: T, ft: T, dt: T, u: T, v: T) -> T {
        if v <= u {
            return T::zero();
        }
        gauss_legendre_on(u, v, &self.rule, |x| {
            let fx = self.f(x);
            let gap = (fx - ft - dt * (x - t)).max(T::zero());
            self.pow(gap) * self.omega(x, fx)
        })
    }

    /// `∫_u^v gap_t^{p−1} (x − t) ω`, with `t` outside `(u, v)`.
    fn side_residual(&self, t: T, ft: T, dt: T, u: T, v: T) -> T {
        if v <= u {
            return T::zero();
        }
        let pm1 = self.p - T::one();
        let floor = lit::<T>(1e-300);
        gauss_legendre_on(u, v, &self.rule, |x| {
            let fx = self.f(x);
            let gap = (fx - ft - dt * (x - t)).max(floor);
            let g = if pm1 == T::zero() { T::one() } else { gap.powf(pm1) };
            g * (x - t) * self.omega(x, fx)
        })
    }

    /// Crossing abscissa of the tangents at `s < t`.
    fn crossing(&self, s: T, fs: T, ds: T, t: T, ft: T, dt: T) -> T {
        let c = (ft - dt * t - fs + ds * s) / (ds - dt);
        c.max(s).min(t)
    }

    fn cells(&self, t: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
        let fv: Vec<T> = t.iter().map(|&x| self.f(x)).collect();
        let dv: Vec<T> = t.iter().map(|&x| self.df(x)).collect();
        let mut bounds = Vec::with_capacity(t.len() + 1);
        bounds.push(self.a);
        for j in 1..t.len() {
            bounds.push(self.crossing(t[j - 1], fv[j - 1], dv[j - 1], t[j], fv[j], dv[j]));
        }
        bounds.push(self.b);
        (fv, dv, bounds)
    }

    fn error(&self, t: &[T]) -> T {
        let (fv, dv, c) = self.cells(t);
        let parts: Vec<T> = (0..t.len())
            .flat_map(|j| {
                let mid = t[j].max(c[j]).min(c[j + 1]);
                [self.side(t[j], fv[j], dv[j], c[j], mid), self.side(t[j], fv[j], dv[j], mid, c[j + 1])]
            })
            .collect();
        pairwise_sum(&parts)
    }

    fn residual(&self, t: &[T]) -> Vec<T> {
        let (fv, dv, c) = self.cells(t);
        (0..t.len())
            .map(|j| {
                let mid = t[j].max(c[j]).min(c[j + 1]);
                self.side_residual(t[j], fv[j], dv[j], c[j], mid) + self.side_residual(t[j], fv[j], dv[j], mid, c[j + 1])
            })
            .collect()
    }

    /// `f″^{p/(1+2p)} ω^{1/(1+2p)}`, the optimal tangent density.
    fn density(&self, x: T) -> T {
        let e = T::one() + lit::<T>(2.0) * self.p;
        let fx = self.f(x);
        self.d2f(x).max(T::zero()).powf(self.p / e) * self.omega(x, fx).max(T::zero()).powf(T::one() / e)
    }
}

fn dp_start<T: Scalar>(pb: &Problem<'_, T>, m: usize) -> Vec<T> {
    let g = (8 * m).clamp(512, 4096);
    let h = (pb.b - pb.a) / from_usize::<T>(g - 1);
    let xs: Vec<T> = (0..g).map(|i| if i + 1 == g { pb.b } else { pb.a + h * from_usize::<T>(i) }).collect();
    let fv: Vec<T> = xs.iter().map(|&x| pb.f(x)).collect();
    let dv: Vec<T> = xs.iter().map(|&x| pb.df(x)).collect();
    let rho: Vec<T> = xs.iter().map(|&x| pb.density(x)).collect();
    let mean = rho.iter().fold(T::zero(), |a, &r| a + r) / from_usize::<T>(g);
    let min = rho.iter().fold(T::infinity(), |a, &r| a.min(r)).max(mean * lit(1e-3));
    let width = (lit::<T>(3.0) * from_usize::<T>(g - 1) / from_usize::<T>(m) * mean / min).ceil();
    let band = (width.to_usize().unwrap_or(g) + 2).min(g - 1).max(1);
    // pair[i][k−i−1]: error between consecutive tangents at xs[i] < xs[k]
    let pair: Vec<Vec<T>> = (0..g)
        .map(|i| {
            (i + 1..(i + band + 1).min(g))
                .map(|k| {
                    let c = pb.crossing(xs[i], fv[i], dv[i], xs[k], fv[k], dv[k]);
                    pb.side(xs[i], fv[i], dv[i], xs[i], c) + pb.side(xs[k], fv[k], dv[k], c, xs[k])
                })
                .collect()
        })
        .collect();
    let start: Vec<T> = (0..g).map(|i| pb.side(xs[i], fv[i], dv[i], pb.a, xs[i])).collect();
    let end: Vec<T> = (0..g).map(|i| pb.side(xs[i], fv[i], dv[i], xs[i], pb.b)).collect();
    let mut cost = start;
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(m);
    for _layer in 1..m {
        let mut next = vec![T::infinity(); g];
        let mut arg = vec![u32::MAX; g];
        for i in 0..g {
            if !cost[i].is_finite() {
                continue;
            }
            for (off, &pc) in pair[i].iter().enumerate() {
                let k = i + 1 + off;
                let v = cost[i] + pc;
                if v < next[k] {
                    next[k] = v;
                    arg[k] = i as u32;
                }
            }
        }
        back.push(arg);
        cost = next;
    }
    let (mut k, _) = (0..g)
        .map(|k| (k, cost[k] + end[k]))
        .fold((0, T::infinity()), |b, c| if c.1 < b.1 { c } else { b });
    let mut idx = vec![k; m];
    for layer in (0..m - 1).rev() {
        k = back[layer][k] as usize;
        idx[layer] = k;
    }
    idx.into_iter().map(|i| xs[i]).collect()
}

/// Points equidistributing the optimal density.
fn density_start<T: Scalar>(pb: &Problem<'_, T>, m: usize) -> Vec<T> {
    let g = 16 * m + 1;
    let h = (pb.b - pb.a) / from_usize::<T>(g - 1);
    let xs: Vec<T> = (0..g).map(|i| pb.a + h * from_usize::<T>(i)).collect();
    let rho: Vec<T> = xs.iter().map(|&x| pb.density(x)).collect();
    let mut cum = vec![T::zero(); g];
    for i in 1..g {
        cum[i] = cum[i - 1] + (rho[i - 1] + rho[i]) * h * lit(0.5);
    }
    let total = cum[g - 1];
    (0..m)
        .map(|j| {
            let target = total * (from_usize::<T>(j) + lit(0.5)) / from_usize::<T>(m);
            let i = cum.partition_point(|&c| c < target).clamp(1, g - 1);
            let span = cum[i] - cum[i - 1];
            let frac = if span > T::zero() { (target - cum[i - 1]) / span } else { lit(0.5) };
            xs[i - 1] + frac * h
        })
        .collect()
}

fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut piv = diag[0];
    if piv == T::zero() || !piv.is_finite() {
        return None;
    }
    c[0] = if n > 1 { sup[0] / piv } else { T::zero() };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv == T::zero() || !piv.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { sup[i] / piv } else { T::zero() };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - c[i] * d[i + 1];
    }
    Some(d)
}

fn valid<T: Scalar>(t: &[T], a: T, b: T) -> bool {
    t.first().is_some_and(|&x| x >= a) && t.last().is_some_and(|&x| x <= b) && t.windows(2).all(|w| w[0] < w[1])
}

fn polish<T: Scalar>(pb: &Problem<'_, T>, mut t: Vec<T>) -> Vec<T> {
    let m = t.len();
    let mut err = pb.error(&t);
    let scale = pb.b - pb.a;
    for _ in 0..60 {
        let r = pb.residual(&t);
        let (_, _, c) = pb.cells(&t);
        let mut sub = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut sup = vec![T::zero(); m];
        for color in 0..3 {
            let mut tp = t.clone();
            let mut steps = vec![T::zero(); m];
            for j in (color..m).step_by(3) {
                let h = lit::<T>(1e-7) * (c[j + 1] - c[j]).max(scale * lit(1e-12));
                tp[j] = t[j] + h;
                steps[j] = h;
            }
            if !valid(&tp, pb.a, pb.b) {
                for j in (color..m).step_by(3) {
                    tp[j] = t[j] - steps[j];
                    steps[j] = -steps[j];
                }
            }
            let rp = pb.residual(&tp);
            for j in (color..m).step_by(3) {
                let h = steps[j];
                diag[j] = (rp[j] - r[j]) / h;
                if j > 0 {
                    sup[j - 1] = (rp[j - 1] - r[j - 1]) / h;
                }
                if j + 1 < m {
                    sub[j + 1] = (rp[j + 1] - r[j + 1]) / h;
                }
            }
        }
        let Some(delta) = solve_tridiagonal(&sub, &diag, &sup, &r) else {
            break;
        };
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<T> = t.iter().zip(&delta).map(|(&x, &d)| x - lambda * d).collect();
            if valid(&trial, pb.a, pb.b) {
                let e = pb.error(&trial);
                if e <= err {
                    t = trial;
                    err = e;
                    accepted = true;
                    break;
                }
            }
            lambda = lambda * lit(0.5);
        }
        let step = delta.iter().fold(T::zero(), |a, &d| a.max(d.abs())) * lambda;
        if !accepted || step <= scale * lit(1e-15) {
            break;
        }
    }
    t
}

/// Tangent abscissas `t₁ < … < t_m` minimizing `∫ (f − l)^p ω` over
/// envelopes of `m` tangents on an interval domain.
pub fn exact_1d_abscissas<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
) -> Result<Vec<T>> {
    if f.dim() != 1 || !f.domain().is_box() {
        return Err(Error::InvalidArgument("exact_1d needs a function on an interval".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    let (lo, hi) = f.domain().bounding_box();
    let pb = Problem { f, w, p, a: lo[0], b: hi[0], rule: gauss_legendre(20) };
    let start = if m <= DP_MAX_M { dp_start(&pb, m) } else { density_start(&pb, m) };
    Ok(polish(&pb, start))
}

pub fn exact_1d_optimal<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
) -> Result<PiecewiseAffineMax<T>> {
    let t = exact_1d_abscissas(f, w, p, m)?;
    let pieces = t.iter().map(|&x| tangent_plane(f, &[x])).collect::<Result<Vec<_>>>()?;
    PiecewiseAffineMax::new(pieces, m)
}
