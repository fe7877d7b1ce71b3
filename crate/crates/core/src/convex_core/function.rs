use serde::{Deserialize, Serialize};

use crate::convex_core::domain::{Domain, DomainSpec};
use crate::convex_core::linalg::Matrix;
use crate::convex_core::params::{scalar, ParamReader, ParamValue, Parameters};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_vec, Scalar};

pub const FUNCTION_CATALOG: [&str; 5] = ["quadratic", "cosh_quadratic", "exp_sum", "quartic", "huber"];

/// Serializable catalog record `{catalog_id, parameters, domain}`.
///
/// Catalog entries, with `x` in native coordinates:
///
/// | id               | value                                  | parameters          |
/// |------------------|----------------------------------------|---------------------|
/// | `quadratic`      | `½ xᵀAx + b·x + c`                     | `a`, `b`, `c`       |
/// | `cosh_quadratic` | `½ xᵀAx + κ Σ cosh(xᵢ)`                | `a`, `kappa`        |
/// | `exp_sum`        | `Σ exp(αᵢ xᵢ) + μ‖x‖²`                 | `alpha`, `mu`       |
/// | `quartic`        | `‖x‖⁴/4 + ε‖x‖²/2`                     | `eps`               |
/// | `huber`          | `Σ huber_r(xᵢ)` (not C²₊, stress only)  | `radius`            |
///
/// An optional `transform` `M` evaluates the entry at `M x` and `offset`
/// is added to every value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub catalog_id: String,
    #[serde(default)]
    pub parameters: Parameters,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl FunctionSpec {
    fn with(catalog_id: &str, params: Vec<(&str, ParamValue)>, domain: DomainSpec) -> Self {
        Self {
            catalog_id: catalog_id.into(),
            parameters: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            domain,
            transform: None,
            offset: 0.0,
        }
    }

    pub fn quadratic(a: Vec<Vec<f64>>, b: Vec<f64>, c: f64, domain: DomainSpec) -> Self {
        Self::with(
            "quadratic",
            vec![("a", ParamValue::Matrix(a)), ("b", ParamValue::Vector(b)), ("c", scalar(c))],
            domain,
        )
    }

    /// `‖x‖²/2` on the given domain.
    pub fn half_norm_squared(domain: DomainSpec) -> Self {
        let n = domain_dim(&domain);
        let a = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Self::quadratic(a, vec![0.0; n], 0.0, domain)
    }

    pub fn cosh_quadratic(a: Vec<Vec<f64>>, kappa: f64, domain: DomainSpec) -> Self {
        Self::with("cosh_quadratic", vec![("a", ParamValue::Matrix(a)), ("kappa", scalar(kappa))], domain)
    }

    pub fn exp_sum(alpha: Vec<f64>, mu: f64, domain: DomainSpec) -> Self {
        Self::with("exp_sum", vec![("alpha", ParamValue::Vector(alpha)), ("mu", scalar(mu))], domain)
    }

    pub fn quartic(eps: f64, domain: DomainSpec) -> Self {
        Self::with("quartic", vec![("eps", scalar(eps))], domain)
    }

    pub fn huber(radius: f64, domain: DomainSpec) -> Self {
        Self::with("huber", vec![("radius", scalar(radius))], domain)
    }
}

fn domain_dim(d: &DomainSpec) -> usize {
    match d {
        DomainSpec::Box { lower, .. } => lower.len(),
        DomainSpec::Ball { center, .. } => center.len(),
        DomainSpec::Polytope { normals, .. } => normals.first().map(Vec::len).unwrap_or(0),
    }
}

#[derive(Clone, Debug)]
enum Family<T> {
    Quadratic { a: Matrix<T>, b: Vec<T>, c: T },
    CoshQuadratic { a: Matrix<T>, kappa: T },
    ExpSum { alpha: Vec<T>, mu: T },
    Quartic { eps: T },
    Huber { radius: T },
}

impl<T: Scalar> Family<T> {
    fn parse(spec: &FunctionSpec, n: usize) -> Result<Self> {
        let r = ParamReader::new("function.parameters", &spec.parameters);
        let rows = |m: Vec<Vec<f64>>| Matrix::from_rows(&m.iter().map(|row| to_vec::<T>(row)).collect::<Vec<_>>());
        let fam = match spec.catalog_id.as_str() {
            "quadratic" => {
                let a = rows(r.matrix("a", n)?)?;
                let b = to_vec(&r.vector_or("b", n, 0.0)?);
                let c = lit(r.scalar_or("c", 0.0)?);
                if !a.is_symmetric(lit(1e-12)) || a.cholesky().is_none() {
                    return Err(Error::config("function.parameters.a", "must be symmetric positive definite"));
                }
                Family::Quadratic { a, b, c }
            }
            "cosh_quadratic" => {
                let a = rows(r.matrix_or_zero("a", n)?)?;
                let kappa: T = lit(r.scalar_or("kappa", 1.0)?);
                if kappa < T::zero() {
                    return Err(Error::config("function.parameters.kappa", "must be nonnegative"));
                }
                let mut shifted = a.clone();
                for i in 0..n {
                    shifted.set(i, i, shifted.get(i, i) + kappa);
                }
                if !a.is_symmetric(lit(1e-12)) || shifted.cholesky().is_none() {
                    return Err(Error::config(
                        "function.parameters",
                        "a + kappa·I must be symmetric positive definite",
                    ));
                }
                Family::CoshQuadratic { a, kappa }
            }
            "exp_sum" => {
                let alpha: Vec<T> = to_vec(&r.vector("alpha", n)?);
                let mu: T = lit(r.scalar_or("mu", 0.0)?);
                if mu < T::zero() {
                    return Err(Error::config("function.parameters.mu", "must be nonnegative"));
                }
                if mu == T::zero() && alpha.iter().any(|a| *a == T::zero()) {
                    return Err(Error::config("function.parameters.alpha", "zero rate needs mu > 0"));
                }
                Family::ExpSum { alpha, mu }
            }
            "quartic" => {
                let eps: T = lit(r.scalar_or("eps", 0.0)?);
                if eps < T::zero() {
                    return Err(Error::config("function.parameters.eps", "must be nonnegative"));
                }
                Family::Quartic { eps }
            }
            "huber" => {
                let radius: T = lit(r.scalar("radius")?);
                if !(radius > T::zero()) {
                    return Err(Error::config("function.parameters.radius", "must be positive"));
                }
                Family::Huber { radius }
            }
            other => {
                return Err(Error::config(
                    "function.catalog_id",
                    format!("unknown function `{other}`; expected one of {FUNCTION_CATALOG:?}"),
                ))
            }
        };
        r.finish()?;
        Ok(fam)
    }

    fn value(&self, y: &[T]) -> T {
        match self {
            Family::Quadratic { a, b, c } => half_quad(a, y) + dot(b, y) + *c,
            Family::CoshQuadratic { a, kappa } => {
                half_quad(a, y) + *kappa * y.iter().fold(T::zero(), |acc, &v| acc + v.cosh())
            }
            Family::ExpSum { alpha, mu } => {
                alpha.iter().zip(y).fold(T::zero(), |acc, (&a, &v)| acc + (a * v).exp()) + *mu * dot(y, y)
            }
            Family::Quartic { eps } => {
                let r2 = dot(y, y);
                r2 * r2 * lit(0.25) + *eps * r2 * lit(0.5)
            }
            Family::Huber { radius } => y.iter().fold(T::zero(), |acc, &v| {
                let a = v.abs();
                acc + if a <= *radius { v * v * lit(0.5) } else { *radius * a - *radius * *radius * lit(0.5) }
            }),
        }
    }

    fn gradient(&self, y: &[T], out: &mut [T]) {
        match self {
            Family::Quadratic { a, b, .. } => {
                a.mul_vec(y, out);
                out.iter_mut().zip(b).for_each(|(o, &bi)| *o = *o + bi);
            }
            Family::CoshQuadratic { a, kappa } => {
                a.mul_vec(y, out);
                out.iter_mut().zip(y).for_each(|(o, &v)| *o = *o + *kappa * v.sinh());
            }
            Family::ExpSum { alpha, mu } => {
                for ((o, &a), &v) in out.iter_mut().zip(alpha).zip(y) {
                    *o = a * (a * v).exp() + lit::<T>(2.0) * *mu * v;
                }
            }
            Family::Quartic { eps } => {
                let s = dot(y, y) + *eps;
                out.iter_mut().zip(y).for_each(|(o, &v)| *o = s * v);
            }
            Family::Huber { radius } => {
                out.iter_mut().zip(y).for_each(|(o, &v)| *o = v.max(-*radius).min(*radius));
            }
        }
    }

    fn hessian(&self, y: &[T], out: &mut Matrix<T>) {
        let n = y.len();
        match self {
            Family::Quadratic { a, .. } => *out = a.clone(),
            Family::CoshQuadratic { a, kappa } => {
                *out = a.clone();
                for i in 0..n {
                    out.set(i, i, out.get(i, i) + *kappa * y[i].cosh());
                }
            }
            Family::ExpSum { alpha, mu } => {
                *out = Matrix::zeros(n);
                for i in 0..n {
                    out.set(i, i, alpha[i] * alpha[i] * (alpha[i] * y[i]).exp() + lit::<T>(2.0) * *mu);
                }
            }
            Family::Quartic { eps } => {
                let s = dot(y, y) + *eps;
                *out = Matrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        let d = if i == j { s } else { T::zero() };
                        out.set(i, j, d + lit::<T>(2.0) * y[i] * y[j]);
                    }
                }
            }
            Family::Huber { radius } => {
                *out = Matrix::zeros(n);
                for i in 0..n {
                    out.set(i, i, if y[i].abs() <= *radius { T::one() } else { T::zero() });
                }
            }
        }
    }

    /// Upper bound of `‖∇g‖` over the box `[lo, hi]`.
    fn gradient_bound(&self, lo: &[T], hi: &[T]) -> T {
        let n = lo.len();
        let corners = 1usize << n;
        let corner = |mask: usize| -> Vec<T> {
            (0..n).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect()
        };
        let max_abs: Vec<T> = lo.iter().zip(hi).map(|(&l, &h)| l.abs().max(h.abs())).collect();
        let mut buf = vec![T::zero(); n];
        match self {
            Family::Quadratic { .. } => (0..corners).fold(T::zero(), |m, c| {
                self.gradient(&corner(c), &mut buf);
                m.max(norm(&buf))
            }),
            Family::CoshQuadratic { a, kappa } => {
                let lin = (0..corners).fold(T::zero(), |m, c| {
                    a.mul_vec(&corner(c), &mut buf);
                    m.max(norm(&buf))
                });
                let sinh: Vec<T> = max_abs.iter().map(|v| v.sinh()).collect();
                lin + *kappa * norm(&sinh)
            }
            Family::ExpSum { alpha, mu } => {
                // each component is monotone in its coordinate
                let comps: Vec<T> = (0..n)
                    .map(|k| {
                        let g = |v: T| alpha[k] * (alpha[k] * v).exp() + lit::<T>(2.0) * *mu * v;
                        g(lo[k]).abs().max(g(hi[k]).abs())
                    })
                    .collect();
                norm(&comps)
            }
            Family::Quartic { eps } => {
                let r = norm(&max_abs);
                (r * r + *eps) * r
            }
            Family::Huber { radius } => {
                let c: Vec<T> = max_abs.iter().map(|v| v.min(*radius)).collect();
                norm(&c)
            }
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn half_quad<T: Scalar>(a: &Matrix<T>, y: &[T]) -> T {
    let n = y.len();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            acc = acc + y[i] * a.get(i, j) * y[j];
        }
    }
    acc * lit(0.5)
}

/// Smooth convex function with analytic gradient and Hessian on a compact
/// convex domain. Immutable once built.
#[derive(Clone, Debug)]
pub struct SmoothConvexFunction<T> {
    spec: FunctionSpec,
    family: Family<T>,
    domain: Domain<T>,
    transform: Option<Matrix<T>>,
    offset: T,
    lipschitz: T,
}

impl<T: Scalar> SmoothConvexFunction<T> {
    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        let domain = Domain::from_spec(&spec.domain)
            .map_err(|e| Error::config("function.domain", e.to_string()))?;
        let n = domain.dim();
        let family = Family::parse(spec, n)?;
        let transform = match &spec.transform {
            None => None,
            Some(rows) => {
                let m = Matrix::from_rows(&rows.iter().map(|r| to_vec::<T>(r)).collect::<Vec<_>>())
                    .map_err(|e| Error::config("function.transform", e.to_string()))?;
                if m.dim() != n || m.det() == T::zero() {
                    return Err(Error::config("function.transform", "must be an invertible n×n matrix"));
                }
                Some(m)
            }
        };
        let mut f = Self { spec: spec.clone(), family, domain, transform, offset: lit(spec.offset), lipschitz: T::zero() };
        f.lipschitz = f.compute_lipschitz();
        Ok(f)
    }

    fn compute_lipschitz(&self) -> T {
        let (lo, hi) = self.domain.bounding_box();
        match &self.transform {
            None => self.family.gradient_bound(&lo, &hi),
            Some(m) => {
                let n = lo.len();
                let mut nlo = vec![T::infinity(); n];
                let mut nhi = vec![T::neg_infinity(); n];
                let mut y = vec![T::zero(); n];
                for mask in 0..(1usize << n) {
                    let c: Vec<T> = (0..n).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect();
                    m.mul_vec(&c, &mut y);
                    for k in 0..n {
                        nlo[k] = nlo[k].min(y[k]);
                        nhi[k] = nhi[k].max(y[k]);
                    }
                }
                m.frobenius() * self.family.gradient_bound(&nlo, &nhi)
            }
        }
    }

    /// Catalog record reproducing this function.
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn catalog_id(&self) -> &str {
        &self.spec.catalog_id
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn lipschitz_bound(&self) -> T {
        self.lipschitz
    }

    /// Whether the entry is C²₊ on its whole domain (the stress entries
    /// `huber` and `quartic` with `eps = 0` are not).
    pub fn is_c2_plus(&self) -> bool {
        match &self.family {
            Family::Huber { .. } => false,
            Family::Quartic { eps } => *eps > T::zero(),
            _ => true,
        }
    }

    /// True when the Hessian is constant (quadratic entries).
    pub fn is_quadratic(&self) -> bool {
        matches!(self.family, Family::Quadratic { .. })
    }

    fn native<'a>(&self, x: &'a [T], buf: &'a mut Vec<T>) -> &'a [T] {
        match &self.transform {
            None => x,
            Some(m) => {
                buf.resize(x.len(), T::zero());
                m.mul_vec(x, buf);
                buf
            }
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        let mut buf = Vec::new();
        let y = self.native(x, &mut buf);
        self.family.value(y) + self.offset
    }

    pub fn gradient_into(&self, x: &[T], out: &mut [T]) {
        match &self.transform {
            None => self.family.gradient(x, out),
            Some(m) => {
                let mut y = vec![T::zero(); x.len()];
                m.mul_vec(x, &mut y);
                let mut g = vec![T::zero(); x.len()];
                self.family.gradient(&y, &mut g);
                m.mul_vec_transposed(&g, out);
            }
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn hessian(&self, x: &[T]) -> Matrix<T> {
        let n = x.len();
        let mut h = Matrix::zeros(n);
        match &self.transform {
            None => self.family.hessian(x, &mut h),
            Some(m) => {
                let mut y = vec![T::zero(); n];
                m.mul_vec(x, &mut y);
                self.family.hessian(&y, &mut h);
                h = m.transpose().mul(&h).mul(m);
            }
        }
        h
    }

    /// `det D²f(x)`.
    pub fn hessian_det(&self, x: &[T]) -> T {
        let h = self.hessian(x);
        match h.dim() {
            1 => h.get(0, 0),
            2 => h.get(0, 0) * h.get(1, 1) - h.get(0, 1) * h.get(1, 0),
            _ => h.det(),
        }
    }

    /// Constant added to every value.
    pub fn offset(&self) -> T {
        self.offset
    }

    /// `f + c`.
    pub fn with_offset(&self, c: T) -> Self {
        let mut f = self.clone();
        f.offset = f.offset + c;
        f.spec.offset = f.offset.to_f64().unwrap_or(f64::NAN);
        f
    }

    /// Same function restricted to (or extended onto) another domain.
    pub fn with_domain(&self, domain: Domain<T>) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::InvalidArgument("domain dimension mismatch".into()));
        }
        let mut f = self.clone();
        f.spec.domain = domain.to_spec();
        f.domain = domain;
        f.lipschitz = f.compute_lipschitz();
        Ok(f)
    }

    /// `x ↦ f(M x)` on the preimage of the current domain.
    pub fn compose_linear(&self, m: &Matrix<T>) -> Result<Self> {
        let domain = self.domain.preimage(m)?;
        let transform = match &self.transform {
            None => m.clone(),
            Some(t) => t.mul(m),
        };
        let mut f = self.clone();
        f.spec.transform = Some(transform.rows().iter().map(|r| crate::scalar::to_f64_vec(r)).collect());
        f.spec.domain = domain.to_spec();
        f.domain = domain;
        f.transform = Some(transform);
        f.lipschitz = f.compute_lipschitz();
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> DomainSpec {
        DomainSpec::unit_box(1)
    }

    #[test]
    fn quadratic_values() {
        let f = SmoothConvexFunction::<f64>::from_spec(&FunctionSpec::quadratic(
            vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            vec![0.0, 0.0],
            0.0,
            DomainSpec::unit_box(2),
        ))
        .unwrap();
        assert_eq!(f.value(&[1.0, 1.0]), 1.5);
        assert_eq!(f.gradient(&[1.0, 1.0]), vec![1.0, 2.0]);
        assert_eq!(f.hessian_det(&[0.3, 0.3]), 2.0);
        assert!((f.lipschitz_bound() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cosh_entry_matches_cosh() {
        let f = SmoothConvexFunction::<f64>::from_spec(&FunctionSpec::cosh_quadratic(vec![vec![0.0]], 1.0, unit()))
            .unwrap();
        assert_eq!(f.value(&[0.3]), 0.3f64.cosh());
        assert_eq!(f.gradient(&[0.3])[0], 0.3f64.sinh());
    }

    #[test]
    fn indefinite_quadratic_rejected() {
        let r = SmoothConvexFunction::<f64>::from_spec(&FunctionSpec::quadratic(
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            vec![0.0, 0.0],
            0.0,
            DomainSpec::unit_box(2),
        ));
        assert!(matches!(r, Err(Error::Config { .. })));
    }

    #[test]
    fn unknown_parameter_rejected_with_path() {
        let mut spec = FunctionSpec::quartic(0.1, unit());
        spec.parameters.insert("epsilon".into(), ParamValue::Scalar(1.0));
        match SmoothConvexFunction::<f64>::from_spec(&spec) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "function.parameters.epsilon"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_catalog_lists_choices() {
        let mut spec = FunctionSpec::quartic(0.1, unit());
        spec.catalog_id = "cubic".into();
        let msg = SmoothConvexFunction::<f64>::from_spec(&spec).unwrap_err().to_string();
        assert!(msg.contains("exp_sum"), "{msg}");
    }

    #[test]
    fn composition_pulls_back_derivatives() {
        let f = SmoothConvexFunction::<f64>::from_spec(&FunctionSpec::exp_sum(
            vec![1.0, -0.5],
            0.25,
            DomainSpec::unit_box(2),
        ))
        .unwrap();
        let m = Matrix::diagonal(&[2.0, 0.5]);
        let g = f.compose_linear(&m).unwrap();
        assert_eq!(g.domain().bounding_box(), (vec![0.0, 0.0], vec![0.5, 2.0]));
        let x = [0.2, 1.1];
        assert!((g.value(&x) - f.value(&[0.4, 0.55])).abs() < 1e-15);
        let h = g.hessian(&x);
        let hf = f.hessian(&[0.4, 0.55]);
        assert!((h.get(0, 0) - 4.0 * hf.get(0, 0)).abs() < 1e-14);
        assert!((h.get(1, 1) - 0.25 * hf.get(1, 1)).abs() < 1e-14);
        let rebuilt = SmoothConvexFunction::<f64>::from_spec(g.spec()).unwrap();
        assert_eq!(rebuilt.value(&x), g.value(&x));
    }
}
