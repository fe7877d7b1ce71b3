//! Dual side: discrete Legendre transform, Monge–Ampère measures, support
//! functions, the weighted functional affine surface area and sweeps on a
//! declared support region.

mod grid;

pub use grid::{Axis, GridFunction};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximator::Strategy;
use crate::convex_core::{Domain, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::functionals::check_region_inside;
use crate::harness::{sweep_function, SweepOptions, SweepOutcome};
use crate::quadrature::{integrate, Estimate, QuadratureSpec};
use crate::scalar::{dot, from_usize, lit, Scalar};

/// Discrete transform plus a flag raised when the primal slopes leave the
/// dual box (the dual grid then misses part of the gradient range).
#[derive(Clone, Debug)]
pub struct LegendreTransform<T> {
    pub transform: GridFunction<T>,
    pub truncated: bool,
}

/// `u*(y) = max_k (x_k · y − u(x_k))` at every dual node: the exact
/// transform of the piecewise-affine interpolant of the samples restricted
/// to the primal box.
pub fn legendre_transform<T: Scalar>(primal: &GridFunction<T>, dual_axes: Vec<Axis<T>>) -> Result<LegendreTransform<T>> {
    let n = primal.dim();
    if dual_axes.len() != n {
        return Err(Error::InvalidArgument("dual grid dimension differs from the primal one".into()));
    }
    let nodes: Vec<T> = (0..primal.len()).flat_map(|k| primal.node(k)).collect();
    let vals = primal.values();
    let total: usize = dual_axes.iter().map(|a| a.count).product();
    let values: Vec<T> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); n],
            |y, j| {
                grid::node_into(&dual_axes, j, y);
                nodes
                    .chunks_exact(n)
                    .zip(vals)
                    .fold(T::neg_infinity(), |best, (x, &u)| best.max(dot(x, y) - u))
            },
        )
        .collect();
    let (slo, shi) = primal.slope_range();
    let truncated = dual_axes.iter().enumerate().any(|(d, a)| slo[d] < a.lo || shi[d] > a.hi);
    if truncated {
        log::warn!("dual grid does not cover the primal slope range {slo:?}..{shi:?}; transform is truncated");
    }
    Ok(LegendreTransform { transform: GridFunction::new(dual_axes, values)?, truncated })
}

/// `∫_region det D²f dx`.
pub fn monge_ampere_det<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    region: &Domain<T>,
    quad: &QuadratureSpec,
) -> Result<Estimate<T>> {
    check_region_inside(f, region)?;
    integrate(region, quad, |x| Ok(f.hessian_det(x)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgradientMeasure<T> {
    pub value: T,
    /// The gradient image has (numerically) zero volume.
    pub degenerate: bool,
}

/// Volume of `∇f(region)`. In 1D the image is the interval between the
/// end-point slopes; in 2D the boundary of `region`, traced with `samples`
/// points per edge, is mapped through `∇f` and the enclosed area taken with
/// the shoelace formula (the image of the boundary bounds the image because
/// `∇f` is injective).
pub fn monge_ampere_subgradient<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    region: &Domain<T>,
    samples: usize,
) -> Result<SubgradientMeasure<T>> {
    check_region_inside(f, region)?;
    let (lo, hi) = region.bounding_box();
    let (value, scale) = match f.dim() {
        1 => {
            let v = (f.gradient(&hi)[0] - f.gradient(&lo)[0]).abs();
            (v, f.lipschitz_bound())
        }
        2 => {
            let boundary = region.boundary_polygon(samples.max(1))?;
            let image: Vec<[T; 2]> = boundary
                .iter()
                .map(|b| {
                    let g = f.gradient(b);
                    [g[0], g[1]]
                })
                .collect();
            let area = crate::convex_core::domain::polygon_area(&image).abs();
            let l = f.lipschitz_bound();
            (area, l * l)
        }
        n => return Err(Error::InvalidArgument(format!("subgradient measure is implemented for n ≤ 2, got {n}"))),
    };
    let degenerate = !(value > lit::<T>(1e-12) * scale.max(T::min_positive_value()));
    Ok(SubgradientMeasure { value: if degenerate { T::zero() } else { value }, degenerate })
}

/// Finite vertex set of a convex body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexBodySpec<T> {
    vertices: Vec<Vec<T>>,
}

impl<T: Scalar> ConvexBodySpec<T> {
    pub fn new(vertices: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidArgument("convex body needs at least one vertex".into()));
        };
        let d = first.len();
        if d == 0 || vertices.iter().any(|v| v.len() != d || v.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("vertices must be finite and of one dimension".into()));
        }
        Ok(Self { vertices })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }
}

/// `h_K(x) = max_{y ∈ K} x · y`.
pub fn support_function<T: Scalar>(k: &ConvexBodySpec<T>, x: &[T]) -> Result<T> {
    if x.len() != k.dim() {
        return Err(Error::InvalidArgument(format!("expected a {}-vector", k.dim())));
    }
    Ok(k.vertices.iter().fold(T::neg_infinity(), |m, v| m.max(dot(v, x))))
}

/// Compact region declared as the support of the Monge–Ampère measure.
#[derive(Clone, Debug)]
pub struct SupportRestriction<T> {
    region: Domain<T>,
}

impl<T: Scalar> SupportRestriction<T> {
    pub fn new(region: Domain<T>) -> Result<Self> {
        if region.is_box() || matches!(region, Domain::Ball { .. }) {
            Ok(Self { region })
        } else {
            Err(Error::InvalidArgument("support restrictions are boxes or balls".into()))
        }
    }

    /// Checks that the region lies in the grid box `[lo, hi]`.
    pub fn within_box(&self, lo: &[T], hi: &[T]) -> Result<()> {
        let (rlo, rhi) = self.region.bounding_box();
        let ok = rlo.len() == lo.len()
            && rlo.iter().zip(lo).all(|(r, l)| r >= l)
            && rhi.iter().zip(hi).all(|(r, h)| r <= h);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("support {rlo:?}..{rhi:?} leaves the box {lo:?}..{hi:?}")))
        }
    }

    pub fn region(&self) -> &Domain<T> {
        &self.region
    }
}

/// `∫_supp (det D²v)^{1/(n+2)} e^{−n v/(n+2)} dx`.
pub fn weighted_affine_surface<T: Scalar>(
    v: &SmoothConvexFunction<T>,
    supp: &SupportRestriction<T>,
    quad: &QuadratureSpec,
) -> Result<Estimate<T>> {
    check_region_inside(v, supp.region())?;
    let n = from_usize::<T>(v.dim());
    let e = n + lit::<T>(2.0);
    integrate(supp.region(), quad, |x| {
        let det = v.hessian_det(x).max(T::zero());
        Ok(det.powf(T::one() / e) * (-n * v.value(x) / e).exp())
    })
}

/// Primal sweep of `v` restricted to the support region; the theory column
/// uses the mass over that region.
#[allow(clippy::too_many_arguments)]
pub fn dual_approximation_sweep<T: Scalar>(
    v: &SmoothConvexFunction<T>,
    supp: &SupportRestriction<T>,
    p: T,
    w: &WeightFunction<T>,
    m_list: &[usize],
    strategy: &Strategy,
    opts: &SweepOptions<T>,
) -> Result<SweepOutcome<T>> {
    check_region_inside(v, supp.region())?;
    let restricted = v.with_domain(supp.region().clone())?;
    sweep_function(&restricted, w, p, strategy, m_list, opts)
}
