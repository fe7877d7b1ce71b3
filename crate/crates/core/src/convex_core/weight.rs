use serde::{Deserialize, Serialize};

use crate::convex_core::domain::Domain;
use crate::convex_core::params::{scalar, ParamReader, ParamValue, Parameters};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_vec, Scalar};

pub const WEIGHT_CATALOG: [&str; 3] = ["constant", "exp_neg", "affine_x"];

/// Serializable weight record. Entries: `constant` (`value`),
/// `exp_neg` (`rate`, giving `ω(x,t) = e^{-rate·t}`), and
/// `affine_x` (`c0`, `coeffs`, giving `ω(x,t) = c0 + coeffs·x`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub catalog_id: String,
    #[serde(default)]
    pub parameters: Parameters,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self::constant(1.0)
    }
}

impl WeightSpec {
    pub fn constant(value: f64) -> Self {
        Self { catalog_id: "constant".into(), parameters: [("value".to_string(), scalar(value))].into() }
    }

    pub fn exp_neg(rate: f64) -> Self {
        Self { catalog_id: "exp_neg".into(), parameters: [("rate".to_string(), scalar(rate))].into() }
    }

    pub fn affine_x(c0: f64, coeffs: Vec<f64>) -> Self {
        Self {
            catalog_id: "affine_x".into(),
            parameters: [("c0".to_string(), scalar(c0)), ("coeffs".to_string(), ParamValue::Vector(coeffs))].into(),
        }
    }
}

/// Continuous weight `ω(x, t)` where `t` is a function value.
#[derive(Clone, Debug)]
pub enum WeightFunction<T> {
    Constant(T),
    ExpNeg { rate: T },
    AffineX { c0: T, coeffs: Vec<T> },
}

impl<T: Scalar> WeightFunction<T> {
    pub fn one() -> Self {
        WeightFunction::Constant(T::one())
    }

    pub fn from_spec(spec: &WeightSpec, dim: usize) -> Result<Self> {
        let r = ParamReader::new("weight.parameters", &spec.parameters);
        let w = match spec.catalog_id.as_str() {
            "constant" => {
                let v = r.scalar_or("value", 1.0)?;
                if !(v > 0.0) {
                    return Err(Error::config("weight.parameters.value", "weight must be positive"));
                }
                WeightFunction::Constant(lit(v))
            }
            "exp_neg" => WeightFunction::ExpNeg { rate: lit(r.scalar_or("rate", 1.0)?) },
            "affine_x" => WeightFunction::AffineX { c0: lit(r.scalar("c0")?), coeffs: to_vec(&r.vector("coeffs", dim)?) },
            other => {
                return Err(Error::config(
                    "weight.catalog_id",
                    format!("unknown weight `{other}`; expected one of {WEIGHT_CATALOG:?}"),
                ))
            }
        };
        r.finish()?;
        Ok(w)
    }

    pub fn to_spec(&self) -> WeightSpec {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        match self {
            WeightFunction::Constant(c) => WeightSpec::constant(f(*c)),
            WeightFunction::ExpNeg { rate } => WeightSpec::exp_neg(f(*rate)),
            WeightFunction::AffineX { c0, coeffs } => WeightSpec::affine_x(f(*c0), coeffs.iter().map(|&c| f(c)).collect()),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[T], t: T) -> T {
        match self {
            WeightFunction::Constant(c) => *c,
            WeightFunction::ExpNeg { rate } => (-*rate * t).exp(),
            WeightFunction::AffineX { c0, coeffs } => {
                coeffs.iter().zip(x).fold(*c0, |acc, (&a, &xi)| acc + a * xi)
            }
        }
    }

    pub fn constant_value(&self) -> Option<T> {
        match self {
            WeightFunction::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// Polynomial degree in `x` when the weight does not depend on `t`.
    pub fn x_degree(&self) -> Option<usize> {
        match self {
            WeightFunction::Constant(_) => Some(0),
            WeightFunction::AffineX { .. } => Some(1),
            WeightFunction::ExpNeg { .. } => None,
        }
    }

    /// Checks positivity over the bounding box of `domain` where that can be
    /// decided in closed form.
    pub fn check_positive_on(&self, domain: &Domain<T>) -> Result<()> {
        if let WeightFunction::AffineX { c0, coeffs } = self {
            let (lo, hi) = domain.bounding_box();
            let min = coeffs
                .iter()
                .zip(lo.iter().zip(&hi))
                .fold(*c0, |acc, (&a, (&l, &h))| acc + (a * l).min(a * h));
            if !(min > T::zero()) {
                return Err(Error::InvalidWeight(format!("affine weight reaches {min} on the domain")));
            }
        }
        Ok(())
    }
}
