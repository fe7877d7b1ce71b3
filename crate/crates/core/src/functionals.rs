//! Integral functionals of a convex function: the ζ-affine-surface-area
//! functional, the weighted curvature mass driving the approximation law,
//! the limit constant, and Zador constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_core::{Domain, QuadraticForm, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Estimate, QuadratureSpec};
use crate::quantizer::{quantize, quantizer_objective, QuantizerConfig, Region};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Concave profile `ζ` applied to `det D²u`.
#[derive(Clone, Debug)]
pub enum ZetaFunction<T> {
    /// `t^a`
    Power { a: T },
    /// `min(t, c)`
    CappedLinear { c: T },
    /// Piecewise-linear through `(ts[i], values[i])`, constant beyond the
    /// last node.
    Tabulated { ts: Vec<T>, values: Vec<T> },
}

impl<T: Scalar> ZetaFunction<T> {
    pub fn power(a: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::InvalidArgument("power exponent must be positive".into()));
        }
        Ok(ZetaFunction::Power { a })
    }

    pub fn capped_linear(c: T) -> Result<Self> {
        if c < T::zero() {
            return Err(Error::InvalidArgument("cap must be nonnegative".into()));
        }
        Ok(ZetaFunction::CappedLinear { c })
    }

    pub fn tabulated(ts: Vec<T>, values: Vec<T>) -> Result<Self> {
        if ts.len() < 2 || ts.len() != values.len() {
            return Err(Error::InvalidArgument("tabulated ζ needs at least two matching nodes".into()));
        }
        if ts.windows(2).any(|w| !(w[0] < w[1])) || ts[0] < T::zero() {
            return Err(Error::InvalidArgument("tabulated ζ nodes must be increasing and nonnegative".into()));
        }
        if values.iter().any(|v| *v < T::zero()) {
            return Err(Error::InvalidArgument("ζ must be nonnegative".into()));
        }
        Ok(ZetaFunction::Tabulated { ts, values })
    }

    pub fn eval(&self, t: T) -> T {
        let t = t.max(T::zero());
        match self {
            ZetaFunction::Power { a } => t.powf(*a),
            ZetaFunction::CappedLinear { c } => t.min(*c),
            ZetaFunction::Tabulated { ts, values } => {
                if t <= ts[0] {
                    return values[0];
                }
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return values[last];
                }
                let k = ts.partition_point(|&s| s <= t) - 1;
                let w = (t - ts[k]) / (ts[k + 1] - ts[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// Membership in the class of concave `ζ ≥ 0` with `ζ(0⁺) = 0` and
    /// `ζ(t)/t → 0` at infinity.
    pub fn in_conc_class(&self) -> bool {
        match self {
            ZetaFunction::Power { a } => *a > T::zero() && *a < T::one(),
            ZetaFunction::CappedLinear { .. } => true,
            ZetaFunction::Tabulated { ts, values } => {
                let starts_at_zero = ts[0] == T::zero() && values[0] == T::zero();
                let slopes: Vec<T> =
                    ts.windows(2).zip(values.windows(2)).map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0])).collect();
                let concave = slopes.windows(2).all(|s| s[1] <= s[0] + lit(1e-12));
                starts_at_zero && concave
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate<T> {
    pub value: T,
    pub error_bar: T,
    pub nodes_used: usize,
    /// Set when ζ lies outside the concave class; the integral is still
    /// well defined pointwise.
    pub outside_conc: bool,
}

/// `∫_{dom f} ζ(det D²f(x)) dx`.
pub fn z_zeta<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    zeta: &ZetaFunction<T>,
    quad: &QuadratureSpec,
) -> Result<FunctionalEstimate<T>> {
    let outside_conc = !zeta.in_conc_class();
    if outside_conc {
        log::warn!("ζ is outside the concave class; integrating pointwise anyway");
    }
    let est = integrate(f.domain(), quad, |x| Ok(zeta.eval(f.hessian_det(x))))?;
    Ok(FunctionalEstimate { value: est.value, error_bar: est.error_bar, nodes_used: est.nodes_used, outside_conc })
}

pub(crate) fn check_region_inside<T: Scalar>(f: &SmoothConvexFunction<T>, region: &Domain<T>) -> Result<()> {
    if region.dim() != f.dim() {
        return Err(Error::InvalidArgument("region dimension mismatch".into()));
    }
    let probes: Vec<Vec<T>> = match region {
        Domain::Box { lower, upper } => {
            let n = lower.len();
            (0..1usize << n)
                .map(|mask| (0..n).map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] }).collect())
                .collect()
        }
        Domain::Ball { center, radius } => (0..2 * center.len())
            .map(|j| {
                let mut p = center.clone();
                let k = j / 2;
                p[k] = if j % 2 == 0 { p[k] - *radius } else { p[k] + *radius };
                p
            })
            .collect(),
        Domain::Polytope { vertices, .. } => vertices.clone(),
    };
    if let Some(p) = probes.iter().find(|p| !f.domain().contains(p)) {
        return Err(Error::Domain(format!("region point {p:?} lies outside the function's domain")));
    }
    Ok(())
}

/// Pointwise density `(det D²f)^{p/(n+2p)} ω(x, f(x))^{n/(n+2p)}`.
pub fn mass_density<T: Scalar>(f: &SmoothConvexFunction<T>, p: T, w: &WeightFunction<T>, x: &[T]) -> Result<T> {
    let n = from_usize::<T>(f.dim());
    let denom = n + lit::<T>(2.0) * p;
    let omega = w.eval(x, f.value(x));
    if !(omega > T::zero()) {
        return Err(Error::InvalidWeight(format!("ω = {omega} at {x:?}")));
    }
    let det = f.hessian_det(x).max(T::zero());
    Ok(det.powf(p / denom) * omega.powf(n / denom))
}

/// `∫_region (det D²f)^{p/(n+2p)} ω(x,f(x))^{n/(n+2p)} dx`.
pub fn weighted_mass<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    p: T,
    w: &WeightFunction<T>,
    region: &Domain<T>,
    quad: &QuadratureSpec,
) -> Result<Estimate<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    check_region_inside(f, region)?;
    integrate(region, quad, |x| mass_density(f, p, w, x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm1d,
    Hexagonal2d,
    Empirical,
    UserSupplied,
}

/// Constant `δ_{p,n}` of the rescaled optimal quantization error with
/// distance exponent `2p` on a set of unit volume.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZadorConstant<T> {
    pub n: usize,
    pub p: T,
    pub value: T,
    pub provenance: Provenance,
    pub half_width: Option<T>,
}

/// `δ_{p,1} = 1 / (2^{2p} (2p + 1))`: equal cells with centred points.
pub fn zador_closed_form_1d<T: Scalar>(p: T) -> Result<ZadorConstant<T>> {
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    let two = lit::<T>(2.0);
    let value = T::one() / (two.powf(two * p) * (two * p + T::one()));
    Ok(ZadorConstant { n: 1, p, value, provenance: Provenance::ClosedForm1d, half_width: None })
}

/// Planar constant for squared Euclidean distance, attained by the
/// hexagonal lattice: `∫_H ‖x‖² dx = 5/(18√3)` for the unit-area regular
/// hexagon.
pub fn zador_hexagonal_2d<T: Scalar>() -> ZadorConstant<T> {
    let value = lit::<T>(5.0) / (lit::<T>(18.0) * lit::<T>(3.0).sqrt());
    ZadorConstant { n: 2, p: T::one(), value, provenance: Provenance::Hexagonal2d, half_width: None }
}

/// Known reference constant, if any.
pub fn reference_zador<T: Scalar>(n: usize, p: T) -> Option<ZadorConstant<T>> {
    match n {
        1 => zador_closed_form_1d(p).ok(),
        2 if p == T::one() => Some(zador_hexagonal_2d()),
        _ => None,
    }
}

/// `(δ / 2^p) · mass^{(n+2p)/n}`.
pub fn theoretical_limit<T: Scalar>(mass: T, p: T, n: usize, delta: &ZadorConstant<T>) -> Result<T> {
    if delta.n != n {
        return Err(Error::InvalidArgument(format!("Zador constant is for n = {}, expected {n}", delta.n)));
    }
    if (delta.p - p).abs() > lit::<T>(1e-12) * p.abs().max(T::one()) {
        return Err(Error::InvalidArgument(format!("Zador constant is for p = {}, expected {p}", delta.p)));
    }
    if mass < T::zero() {
        return Err(Error::InvalidArgument("mass must be nonnegative".into()));
    }
    let nf = from_usize::<T>(n);
    let two = lit::<T>(2.0);
    Ok(delta.value / two.powf(p) * mass.powf((nf + two * p) / nf))
}

/// Per-budget summary of an empirical Zador run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZadorPoint<T> {
    pub m: usize,
    /// `m^{2p/n}` times the objective of each trial.
    pub rescaled: Vec<T>,
    pub best: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZadorEstimate<T> {
    pub constant: ZadorConstant<T>,
    pub per_m: Vec<ZadorPoint<T>>,
}

/// Tuning knobs of [`zador_estimate`] beyond the required arguments.
#[derive(Clone, Debug)]
pub struct ZadorOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub bootstrap_resamples: usize,
}

impl Default for ZadorOptions {
    fn default() -> Self {
        Self { max_iterations: 300, tolerance: 1e-7, bootstrap_resamples: 1000 }
    }
}

/// Empirical `δ_{p,n}`: quantize the unit cube (uniform density, Euclidean
/// metric) with every budget in `m_list`, rescale by `m^{2p/n}`, keep the
/// best trial at the largest budget. The half-width combines a bootstrap of
/// the best-of-trials statistic and the evaluation standard error.
pub fn zador_estimate<T: Scalar>(
    n: usize,
    p: T,
    m_list: &[usize],
    trials: usize,
    seed: u64,
    opts: &ZadorOptions,
) -> Result<ZadorEstimate<T>> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidArgument("zador estimates support n ∈ {1, 2, 3}".into()));
    }
    if m_list.is_empty() || m_list.windows(2).any(|w| w[0] >= w[1]) || m_list[0] == 0 {
        return Err(Error::InvalidArgument("m_list must be non-empty, positive and increasing".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let cube = Domain::unit_box(n);
    let region = Region::from_domain(&cube);
    let uniform = |_: &[T]| T::one();
    let metric = QuadraticForm::identity(n);
    let mut per_m = Vec::with_capacity(m_list.len());
    let mut last_se = T::zero();
    for (mi, &m) in m_list.iter().enumerate() {
        let scale = from_usize::<T>(m).powf(lit::<T>(2.0) * p / from_usize::<T>(n));
        let runs: Vec<Result<(T, T)>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let run_seed = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((mi as u64) << 32)
                    .wrapping_add(t as u64);
                let cfg = QuantizerConfig {
                    max_iterations: opts.max_iterations,
                    tolerance: lit(opts.tolerance),
                    restarts: 1,
                    ..QuantizerConfig::new(m, p, metric.clone(), run_seed)
                };
                let set = quantize(&region, &uniform, &cfg)?;
                let eval = QuadratureSpec::monte_carlo((400 * m).max(200_000), run_seed ^ 0x5151);
                let obj = quantizer_objective(&cube, &uniform, &metric, p, &set.points, &eval)?;
                Ok((obj.value * scale, obj.error_bar * scale))
            })
            .collect();
        let runs: Vec<(T, T)> = runs.into_iter().collect::<Result<_>>()?;
        let (best_idx, _) = runs
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |b, (i, r)| if r.0 < b.1 { (i, r.0) } else { b });
        last_se = runs[best_idx].1;
        per_m.push(ZadorPoint { m, rescaled: runs.iter().map(|r| r.0).collect(), best: runs[best_idx].0 });
    }
    let last = per_m.last().expect("non-empty m_list");
    let boot = bootstrap_min_spread(&last.rescaled, opts.bootstrap_resamples, seed ^ 0xB007);
    let half_width = lit::<T>(2.0) * (boot * boot + last_se * last_se).sqrt();
    Ok(ZadorEstimate {
        constant: ZadorConstant { n, p, value: last.best, provenance: Provenance::Empirical, half_width: Some(half_width) },
        per_m,
    })
}

/// Standard deviation of the minimum over bootstrap resamples.
fn bootstrap_min_spread<T: Scalar>(values: &[T], resamples: usize, seed: u64) -> T {
    if values.len() < 2 || resamples == 0 {
        return T::zero();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mins: Vec<f64> = (0..resamples)
        .map(|_| {
            (0..values.len()).map(|_| to_f64(values[rng.gen_range(0..values.len())])).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = mins.iter().sum::<f64>() / mins.len() as f64;
    let var = mins.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (mins.len() - 1) as f64;
    lit(var.sqrt())
}
