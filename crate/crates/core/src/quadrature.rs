//! Quadrature rules over boxes and general domains: composite tensor
//! Gauss–Legendre grids, stratified Monte Carlo, and adaptive 1D
//! Gauss–Legendre.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_core::Domain;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, pairwise_sum, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureKind {
    Exact1d,
    TensorGrid,
    MonteCarlo,
}

/// How an integral over a domain is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub kind: QuadratureKind,
    /// Panels per axis (tensor grids).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    /// Gauss–Legendre nodes per panel and axis (tensor grids).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Target relative tolerance (adaptive rules).
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-12
}

pub const DEFAULT_ORDER: usize = 4;

impl QuadratureSpec {
    pub fn exact_1d() -> Self {
        Self { kind: QuadratureKind::Exact1d, level: None, order: None, samples: None, seed: None, tolerance: 1e-12 }
    }

    pub fn tensor_grid(level: usize) -> Self {
        Self { kind: QuadratureKind::TensorGrid, level: Some(level), order: None, samples: None, seed: None, tolerance: 1e-12 }
    }

    pub fn tensor_grid_with_order(level: usize, order: usize) -> Self {
        Self { order: Some(order), ..Self::tensor_grid(level) }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self { kind: QuadratureKind::MonteCarlo, level: None, order: None, samples: Some(samples), seed: Some(seed), tolerance: 1e-12 }
    }

    /// Tensor Gauss–Legendre on boxes (64 panels per axis in 1D, 128 in 2D,
    /// 32 above), stratified Monte Carlo with 10⁶ samples elsewhere.
    pub fn default_for<T: Scalar>(domain: &Domain<T>) -> Self {
        if domain.is_box() {
            match domain.dim() {
                1 => Self::tensor_grid(64),
                2 => Self::tensor_grid(128),
                _ => Self::tensor_grid(32),
            }
        } else {
            Self::monte_carlo(1_000_000, 0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            QuadratureKind::Exact1d => {}
            QuadratureKind::TensorGrid => {
                let level = self.level.ok_or_else(|| Error::config("quadrature.level", "required for tensor_grid"))?;
                if level < 2 {
                    return Err(Error::config("quadrature.level", "must be at least 2"));
                }
                if self.order == Some(0) {
                    return Err(Error::config("quadrature.order", "must be positive"));
                }
            }
            QuadratureKind::MonteCarlo => {
                let s = self.samples.ok_or_else(|| Error::config("quadrature.samples", "required for monte_carlo"))?;
                if s < 1000 {
                    return Err(Error::config("quadrature.samples", "must be at least 1000"));
                }
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("quadrature.tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Integral value with an error bar and the number of integrand evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error_bar: T,
    pub nodes_used: usize,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton on `P_k`).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let k = order.max(1);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if k == 1 { x } else { p1 };
            let pm1 = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    if k == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (nodes, weights)
}

/// Gauss–Legendre rule of the given order mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Scalar, F: FnMut(T) -> T>(a: T, b: T, rule: &(Vec<f64>, Vec<f64>), mut g: F) -> T {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    rule.0.iter().zip(&rule.1).fold(T::zero(), |acc, (&x, &w)| acc + lit::<T>(w) * g(mid + half * lit(x))) * half
}

/// Adaptive bisection of `[a, b]` comparing a 10-point rule against its
/// two halves.
pub fn adaptive_integrate<T: Scalar, F: Fn(T) -> T>(a: T, b: T, rel_tol: T, g: F) -> Estimate<T> {
    adaptive_integrate_tol(a, b, rel_tol, T::zero(), g)
}

/// [`adaptive_integrate`] with an absolute tolerance floor, for integrands
/// whose values carry cancellation noise.
pub fn adaptive_integrate_tol<T: Scalar, F: Fn(T) -> T>(a: T, b: T, rel_tol: T, abs_tol: T, g: F) -> Estimate<T> {
    const MAX_DEPTH: usize = 48;
    let rule = gauss_legendre(10);
    let mut evals = 10;
    let whole = gauss_legendre_on(a, b, &rule, &g);
    let length = b - a;
    let abs_tol = (rel_tol * whole.abs()).max(abs_tol).max(T::min_positive_value());
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut accepted = Vec::new();
    let mut err = T::zero();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = (lo + hi) * lit(0.5);
        let left = gauss_legendre_on(lo, mid, &rule, &g);
        let right = gauss_legendre_on(mid, hi, &rule, &g);
        evals += 20;
        let diff = (left + right - est).abs();
        // below the rounding floor further bisection cannot help
        let floor = lit::<T>(16.0) * T::epsilon() * (left.abs() + right.abs());
        if diff <= (abs_tol * (hi - lo) / length).max(floor) || depth >= MAX_DEPTH || evals > 2_000_000 {
            accepted.push(left + right);
            err = err + diff;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Estimate { value: pairwise_sum(&accepted), error_bar: err, nodes_used: evals }
}

/// Fixed node set `{(x_k, w_k)}`; integrals at "matched nodes" reuse one
/// of these.
#[derive(Clone, Debug)]
pub struct Nodes<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> Nodes<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.points.chunks(self.dim)
    }

    pub fn point(&self, k: usize) -> &[T] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Composite Gauss–Legendre over the bounding box of `domain`,
    /// keeping nodes that fall inside it.
    pub fn tensor(domain: &Domain<T>, panels: usize, order: usize) -> Self {
        let n = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let (gx, gw) = gauss_legendre(order);
        let per_axis = panels * order;
        let axis_nodes: Vec<Vec<(T, T)>> = (0..n)
            .map(|d| {
                let h = (hi[d] - lo[d]) / from_usize::<T>(panels);
                let mut v = Vec::with_capacity(per_axis);
                for p in 0..panels {
                    let a = lo[d] + h * from_usize::<T>(p);
                    for (x, w) in gx.iter().zip(&gw) {
                        let t = a + h * (lit::<T>(*x) + T::one()) * lit(0.5);
                        v.push((t, h * lit::<T>(*w) * lit(0.5)));
                    }
                }
                v
            })
            .collect();
        let total = per_axis.pow(n as u32);
        let mut points = Vec::with_capacity(total * n);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let mut x = vec![T::zero(); n];
        let check = !domain.is_box();
        for _ in 0..total {
            let mut w = T::one();
            for d in 0..n {
                let (t, wt) = axis_nodes[d][idx[d]];
                x[d] = t;
                w = w * wt;
            }
            if !check || domain.contains(&x) {
                points.extend_from_slice(&x);
                weights.push(w);
            }
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < per_axis {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self { dim: n, points, weights }
    }

    /// Jittered stratified samples over the bounding box (`k` strata per axis
    /// with `kⁿ ≥ samples`), keeping those inside `domain`.
    pub fn stratified(domain: &Domain<T>, samples: usize, seed: u64) -> Self {
        let n = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let k = strata_per_axis(samples, n);
        let total = k.pow(n as u32);
        let w = domain.bounding_volume() / from_usize::<T>(total);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(total * n);
        let mut weights = Vec::with_capacity(total);
        let mut x = vec![T::zero(); n];
        let kf = from_usize::<T>(k);
        for s in 0..total {
            let mut c = s;
            for d in (0..n).rev() {
                let cell = c % k;
                c /= k;
                let u: f64 = rng.gen();
                let t = (from_usize::<T>(cell) + lit(u)) / kf;
                x[d] = lo[d] + t * (hi[d] - lo[d]);
            }
            if domain.contains(&x) {
                points.extend_from_slice(&x);
                weights.push(w);
            }
        }
        Self { dim: n, points, weights }
    }

    /// Node set for a non-adaptive quadrature spec.
    pub fn build(domain: &Domain<T>, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        match spec.kind {
            QuadratureKind::TensorGrid => Ok(Self::tensor(
                domain,
                spec.level.unwrap_or(64),
                spec.order.unwrap_or(DEFAULT_ORDER),
            )),
            QuadratureKind::MonteCarlo => {
                Ok(Self::stratified(domain, spec.samples.unwrap_or(1_000_000), spec.seed.unwrap_or(0)))
            }
            QuadratureKind::Exact1d => {
                if domain.dim() != 1 {
                    return Err(Error::InvalidArgument("exact_1d quadrature needs a 1D domain".into()));
                }
                // high-order composite rule standing in for the adaptive path
                Ok(Self::tensor(domain, 256, 8))
            }
        }
    }

    /// `Σ w_k g(x_k)`, evaluated in parallel with an order-fixed reduction.
    pub fn integrate<F>(&self, g: F) -> T
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let terms: Vec<T> = self
            .points
            .par_chunks(self.dim)
            .zip(self.weights.par_iter())
            .map(|(x, &w)| w * g(x))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn try_integrate<F>(&self, g: F) -> Result<T>
    where
        F: Fn(&[T]) -> Result<T> + Sync,
    {
        let terms: Vec<T> = self
            .points
            .par_chunks(self.dim)
            .zip(self.weights.par_iter())
            .map(|(x, &w)| g(x).map(|v| w * v))
            .collect::<Result<_>>()?;
        Ok(pairwise_sum(&terms))
    }

    /// Integral together with the Monte Carlo standard error of the sum.
    pub fn try_integrate_with_spread<F>(&self, g: F) -> Result<(T, T)>
    where
        F: Fn(&[T]) -> Result<T> + Sync,
    {
        let terms: Vec<T> = self
            .points
            .par_chunks(self.dim)
            .zip(self.weights.par_iter())
            .map(|(x, &w)| g(x).map(|v| w * v))
            .collect::<Result<_>>()?;
        let sum = pairwise_sum(&terms);
        let nf = from_usize::<T>(terms.len().max(1));
        let mean = sum / nf;
        let sq: Vec<T> = terms.iter().map(|&t| (t - mean) * (t - mean)).collect();
        let var = pairwise_sum(&sq) / nf;
        Ok((sum, (var * nf).sqrt()))
    }
}

fn strata_per_axis(samples: usize, n: usize) -> usize {
    let mut k = (samples as f64).powf(1.0 / n as f64).floor().max(1.0) as usize;
    while k.pow(n as u32) < samples {
        k += 1;
    }
    k
}

/// Integrates `g` over `domain` following `spec`, with an error bar: the
/// panel-refinement delta for tensor grids, the standard error for Monte
/// Carlo, and the accumulated bisection residual for the adaptive rule.
pub fn integrate<T, F>(domain: &Domain<T>, spec: &QuadratureSpec, g: F) -> Result<Estimate<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    spec.validate()?;
    match spec.kind {
        QuadratureKind::Exact1d => {
            if domain.dim() != 1 || !domain.is_box() {
                return Err(Error::InvalidArgument("exact_1d quadrature needs an interval".into()));
            }
            let (lo, hi) = domain.bounding_box();
            let failure = std::sync::Mutex::new(None);
            let est = adaptive_integrate(lo[0], hi[0], lit(spec.tolerance), |t| match g(&[t]) {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    T::zero()
                }
            });
            match failure.into_inner().expect("poisoned") {
                Some(e) => Err(e),
                None => Ok(est),
            }
        }
        QuadratureKind::TensorGrid => {
            let level = spec.level.unwrap_or(64);
            let order = spec.order.unwrap_or(DEFAULT_ORDER);
            let fine = Nodes::tensor(domain, level, order);
            let coarse = Nodes::tensor(domain, (level / 2).max(1), order);
            let v = fine.try_integrate(&g)?;
            let vc = coarse.try_integrate(&g)?;
            Ok(Estimate { value: v, error_bar: (v - vc).abs(), nodes_used: fine.len() + coarse.len() })
        }
        QuadratureKind::MonteCarlo => {
            let nodes = Nodes::stratified(domain, spec.samples.unwrap_or(1_000_000), spec.seed.unwrap_or(0));
            let (v, se) = nodes.try_integrate_with_spread(&g)?;
            Ok(Estimate { value: v, error_bar: se, nodes_used: nodes.len() })
        }
    }
}
