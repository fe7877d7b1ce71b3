use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convex_core::Domain;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Placement region: a union of axis-aligned cells, optionally clipped by a
/// convex domain.
#[derive(Clone, Debug)]
pub struct Region<T> {
    dim: usize,
    cells: Vec<(Vec<T>, Vec<T>)>,
    clip: Option<Domain<T>>,
}

impl<T: Scalar> Region<T> {
    pub fn from_domain(domain: &Domain<T>) -> Self {
        let clip = if domain.is_box() { None } else { Some(domain.clone()) };
        Self { dim: domain.dim(), cells: vec![domain.bounding_box()], clip }
    }

    pub fn from_cells(cells: Vec<(Vec<T>, Vec<T>)>, clip: Option<Domain<T>>) -> Result<Self> {
        let dim = cells.first().map(|c| c.0.len()).ok_or_else(|| Error::InvalidArgument("empty region".into()))?;
        for (lo, hi) in &cells {
            if lo.len() != dim || hi.len() != dim || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                return Err(Error::InvalidArgument("region cells must be non-degenerate boxes".into()));
            }
        }
        if clip.as_ref().is_some_and(|c| c.dim() != dim) {
            return Err(Error::InvalidArgument("clip domain dimension mismatch".into()));
        }
        Ok(Self { dim, cells, clip })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[(Vec<T>, Vec<T>)] {
        &self.cells
    }

    pub fn clip(&self) -> Option<&Domain<T>> {
        self.clip.as_ref()
    }

    /// Closed membership with a small relative slack.
    pub fn contains(&self, x: &[T]) -> bool {
        let eps = lit::<T>(1e-12);
        let in_cell = self.cells.iter().any(|(lo, hi)| {
            (0..self.dim).all(|d| {
                let slack = eps * (hi[d] - lo[d]).max(T::one());
                x[d] >= lo[d] - slack && x[d] <= hi[d] + slack
            })
        });
        in_cell && self.clip.as_ref().map_or(true, |c| c.contains(x))
    }

    pub fn bounding_box(&self) -> (Vec<T>, Vec<T>) {
        let mut lo = vec![T::infinity(); self.dim];
        let mut hi = vec![T::neg_infinity(); self.dim];
        for (a, b) in &self.cells {
            for d in 0..self.dim {
                lo[d] = lo[d].min(a[d]);
                hi[d] = hi[d].max(b[d]);
            }
        }
        (lo, hi)
    }

    fn cell_volume(lo: &[T], hi: &[T]) -> T {
        lo.iter().zip(hi).fold(T::one(), |a, (l, h)| a * (*h - *l))
    }
}

/// Fixed weighted sample cloud; `Σ w_i g(x_i)` approximates `∫ g ρ`.
#[derive(Clone, Debug)]
pub struct SampleCloud<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> SampleCloud<T> {
    pub fn from_parts(dim: usize, points: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 || points.len() != dim * weights.len() || weights.is_empty() {
            return Err(Error::InvalidArgument("sample cloud shape mismatch".into()));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidArgument("sample weights must be finite and nonnegative".into()));
        }
        if !weights.iter().any(|w| *w > T::zero()) {
            return Err(Error::InvalidArgument("density vanishes on the sample cloud".into()));
        }
        Ok(Self { dim, points, weights })
    }

    /// Jittered stratified samples in every cell (counts proportional to
    /// cell volume), weighted by `density · cell volume / strata`.
    pub fn draw<D>(region: &Region<T>, density: &D, size: usize, seed: u64) -> Result<Self>
    where
        D: Fn(&[T]) -> T + ?Sized,
    {
        let n = region.dim;
        let total_vol = region.cells.iter().fold(T::zero(), |a, (l, h)| a + Region::cell_volume(l, h));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(size * n);
        let mut weights = Vec::with_capacity(size);
        let mut x = vec![T::zero(); n];
        for (lo, hi) in &region.cells {
            let vol = Region::cell_volume(lo, hi);
            let share = (vol / total_vol * from_usize::<T>(size)).to_f64().unwrap_or(1.0).ceil().max(1.0) as usize;
            let k = strata_per_axis(share, n);
            let strata = k.pow(n as u32);
            let w = vol / from_usize::<T>(strata);
            let kf = from_usize::<T>(k);
            for s in 0..strata {
                let mut c = s;
                for d in (0..n).rev() {
                    let cell = c % k;
                    c /= k;
                    let u: f64 = rng.gen();
                    x[d] = lo[d] + (from_usize::<T>(cell) + lit(u)) / kf * (hi[d] - lo[d]);
                }
                if region.clip.as_ref().map_or(true, |c| c.contains(&x)) {
                    let rho = density(&x);
                    if !(rho >= T::zero()) || !rho.is_finite() {
                        return Err(Error::InvalidArgument(format!("density {rho} at {x:?} is not a finite nonnegative value")));
                    }
                    points.extend_from_slice(&x);
                    weights.push(rho * w);
                }
            }
        }
        if weights.is_empty() {
            return Err(Error::InvalidArgument("region has no interior samples".into()));
        }
        Self::from_parts(n, points, weights)
            .map_err(|_| Error::InvalidArgument("density vanishes on the region".into()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points_flat(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

pub(crate) fn strata_per_axis(samples: usize, n: usize) -> usize {
    let mut k = (samples as f64).powf(1.0 / n as f64).floor().max(1.0) as usize;
    while k.pow(n as u32) < samples {
        k += 1;
    }
    k
}
