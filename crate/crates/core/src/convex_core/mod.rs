//! Domains, catalog convex functions, affine pieces and the tangent-plane
//! primitives everything else is built from.

pub mod affine;
pub mod domain;
pub mod function;
pub mod linalg;
pub mod params;
pub mod weight;

pub use affine::{AffineFunction, PiecewiseAffineMax};
pub use domain::{Domain, DomainSpec};
pub use function::{FunctionSpec, SmoothConvexFunction, FUNCTION_CATALOG};
pub use linalg::{Matrix, QuadraticForm};
pub use params::{ParamValue, Parameters};
pub use weight::{WeightFunction, WeightSpec, WEIGHT_CATALOG};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

fn require_inside<T: Scalar>(f: &SmoothConvexFunction<T>, x: &[T], what: &str) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::InvalidArgument(format!("{what} has dimension {}, expected {}", x.len(), f.dim())));
    }
    if !f.domain().contains(x) {
        return Err(Error::Domain(format!("{what} {x:?}")));
    }
    Ok(())
}

/// Tangent plane `ψ(x) = f(a) + ∇f(a)·(x − a)`.
pub fn tangent_plane<T: Scalar>(f: &SmoothConvexFunction<T>, a: &[T]) -> Result<AffineFunction<T>> {
    require_inside(f, a, "tangent point")?;
    Ok(tangent_plane_unchecked(f, a))
}

pub(crate) fn tangent_plane_unchecked<T: Scalar>(f: &SmoothConvexFunction<T>, a: &[T]) -> AffineFunction<T> {
    let slope = f.gradient(a);
    let offset = f.value(a) - slope.iter().zip(a).fold(T::zero(), |acc, (&g, &ai)| acc + g * ai);
    AffineFunction::new(slope, offset)
}

/// `f(x) − ψ_a(x)`, evaluated in the centred form `f(x) − f(a) − ∇f(a)·(x−a)`.
pub fn taylor_gap<T: Scalar>(f: &SmoothConvexFunction<T>, a: &[T], x: &[T]) -> Result<T> {
    require_inside(f, a, "tangent point")?;
    require_inside(f, x, "evaluation point")?;
    let g = f.gradient(a);
    let lin = g.iter().zip(x.iter().zip(a)).fold(T::zero(), |acc, (&gi, (&xi, &ai))| acc + gi * (xi - ai));
    Ok(f.value(x) - f.value(a) - lin)
}

/// Largest `l(x) − f(x)` over the samples (clamped below at zero) and
/// whether it stays within `tolerance`.
pub fn is_circumscribed<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    l: &PiecewiseAffineMax<T>,
    samples: &[Vec<T>],
    tolerance: T,
) -> (bool, T) {
    let worst = samples.iter().fold(T::zero(), |m, x| m.max(l.eval(x) - f.value(x)));
    (worst <= tolerance, worst)
}

/// Max-norm gap between the analytic Hessian and central second
/// differences of the value with step `h`.
pub fn hessian_fd_check<T: Scalar>(f: &SmoothConvexFunction<T>, x: &[T], h: T) -> Result<T> {
    require_inside(f, x, "probe point")?;
    let n = f.dim();
    let shifted = |pairs: &[(usize, T)]| -> Result<T> {
        let mut y = x.to_vec();
        for &(k, s) in pairs {
            y[k] = y[k] + s;
        }
        if !f.domain().contains(&y) {
            return Err(Error::Domain(format!("finite-difference stencil leaves the domain at {y:?}")));
        }
        Ok(f.value(&y))
    };
    let analytic = f.hessian(x);
    let f0 = f.value(x);
    let h2 = h * h;
    let mut worst = T::zero();
    for i in 0..n {
        let d2 = (shifted(&[(i, h)])? - lit::<T>(2.0) * f0 + shifted(&[(i, -h)])?) / h2;
        worst = worst.max((d2 - analytic.get(i, i)).abs());
        for j in 0..i {
            let pp = shifted(&[(i, h), (j, h)])?;
            let pm = shifted(&[(i, h), (j, -h)])?;
            let mp = shifted(&[(i, -h), (j, h)])?;
            let mm = shifted(&[(i, -h), (j, -h)])?;
            let dij = (pp - pm - mp + mm) / (lit::<T>(4.0) * h2);
            worst = worst.max((dij - analytic.get(i, j)).abs());
        }
    }
    Ok(worst)
}
