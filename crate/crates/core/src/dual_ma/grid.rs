use serde::{Deserialize, Serialize};

use crate::convex_core::SmoothConvexFunction;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Uniform nodes `lo, lo + h, …, hi` along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    pub count: usize,
}

impl<T: Scalar> Axis<T> {
    pub fn new(lo: T, hi: T, count: usize) -> Result<Self> {
        if count < 2 || !(lo < hi) {
            return Err(Error::InvalidArgument("grid axis needs lo < hi and at least two nodes".into()));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn spacing(&self) -> T {
        (self.hi - self.lo) / from_usize::<T>(self.count - 1)
    }

    pub fn node(&self, i: usize) -> T {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + self.spacing() * from_usize::<T>(i)
        }
    }
}

/// Values on a regular grid, row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    axes: Vec<Axis<T>>,
    values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(axes: Vec<Axis<T>>, values: Vec<T>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one axis".into()));
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        if values.len() != total {
            return Err(Error::InvalidArgument(format!("expected {total} grid values, got {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        Ok(Self { axes, values })
    }

    /// Samples `f` at every node; the grid must lie in `dom f`.
    pub fn sample(f: &SmoothConvexFunction<T>, axes: Vec<Axis<T>>) -> Result<Self> {
        if axes.len() != f.dim() {
            return Err(Error::InvalidArgument("grid dimension mismatch".into()));
        }
        let total: usize = axes.iter().map(|a| a.count).product();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![T::zero(); axes.len()];
        for k in 0..total {
            node_into(&axes, k, &mut x);
            if !f.domain().contains(&x) {
                return Err(Error::Domain(format!("grid node {x:?} lies outside the function's domain")));
            }
            values.push(f.value(&x));
        }
        Self::new(axes, values)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, k: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim()];
        node_into(&self.axes, k, &mut x);
        x
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1usize; n];
        for d in (0..n.saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.axes[d + 1].count;
        }
        s
    }

    /// Index tuple of flat node `k`.
    pub(crate) fn index(&self, k: usize) -> Vec<usize> {
        let mut c = k;
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = c % self.axes[d].count;
            c /= self.axes[d].count;
        }
        idx
    }

    /// Largest violation of midpoint convexity along grid lines (`0` for a
    /// discretely convex grid function).
    pub fn convexity_defect(&self) -> T {
        let strides = self.strides();
        let mut worst = T::zero();
        for k in 0..self.len() {
            let idx = self.index(k);
            for d in 0..self.dim() {
                if idx[d] == 0 || idx[d] + 1 == self.axes[d].count {
                    continue;
                }
                let s = strides[d];
                let second = self.values[k - s] + self.values[k + s] - lit::<T>(2.0) * self.values[k];
                worst = worst.max(-second);
            }
        }
        worst
    }

    /// Range of the forward-difference slopes along each axis.
    pub fn slope_range(&self) -> (Vec<T>, Vec<T>) {
        let n = self.dim();
        let strides = self.strides();
        let mut lo = vec![T::infinity(); n];
        let mut hi = vec![T::neg_infinity(); n];
        for k in 0..self.len() {
            let idx = self.index(k);
            for d in 0..n {
                if idx[d] + 1 < self.axes[d].count {
                    let s = (self.values[k + strides[d]] - self.values[k]) / self.axes[d].spacing();
                    lo[d] = lo[d].min(s);
                    hi[d] = hi[d].max(s);
                }
            }
        }
        (lo, hi)
    }

    /// Plain text: one `axis lo hi count` line per axis, then one value per
    /// line in row-major order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.axes {
            s.push_str(&format!(
                "axis {:.16e} {:.16e} {}\n",
                a.lo.to_f64().unwrap_or(f64::NAN),
                a.hi.to_f64().unwrap_or(f64::NAN),
                a.count
            ));
        }
        for v in &self.values {
            s.push_str(&format!("{:.16e}\n", v.to_f64().unwrap_or(f64::NAN)));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut axes = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}", lineno + 1));
            let num = |tok: &str| tok.parse::<f64>().map(lit::<T>).map_err(|e| bad(&format!("`{tok}`: {e}")));
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "axis" {
                if !values.is_empty() || toks.len() != 4 {
                    return Err(bad("axis lines must precede values and read `axis lo hi count`"));
                }
                let count = toks[3].parse::<usize>().map_err(|e| bad(&e.to_string()))?;
                axes.push(Axis::new(num(toks[1])?, num(toks[2])?, count)?);
            } else {
                if toks.len() != 1 {
                    return Err(bad("expected a single value"));
                }
                values.push(num(toks[0])?);
            }
        }
        Self::new(axes, values)
    }
}

pub(crate) fn node_into<T: Scalar>(axes: &[Axis<T>], k: usize, x: &mut [T]) {
    let mut c = k;
    for d in (0..axes.len()).rev() {
        x[d] = axes[d].node(c % axes[d].count);
        c /= axes[d].count;
    }
}
