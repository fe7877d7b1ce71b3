//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the library is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn from_usize<T: Scalar>(x: usize) -> T {
    T::from_usize(x).expect("usize representable in scalar type")
}

#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so results are reproducible regardless of thread count.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    const LEAF: usize = 64;
    if values.len() <= LEAF {
        return values.iter().fold(T::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn to_vec<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| lit(x)).collect()
}

pub fn to_f64_vec<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(|&x| to_f64(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 55.0);
    }

    #[test]
    fn pairwise_sum_is_accurate_on_long_input() {
        let v = vec![0.1_f64; 1_000_000];
        assert!((pairwise_sum(&v) - 100_000.0).abs() < 1e-9);
    }
}
