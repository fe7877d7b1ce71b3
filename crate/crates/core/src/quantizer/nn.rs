//! Uniform bucket grid for exact nearest-centre queries in a Euclidean
//! (whitened) frame.

use crate::scalar::{from_usize, Scalar};

pub(crate) struct BucketGrid<'a, T> {
    dim: usize,
    centers: &'a [T],
    lo: Vec<T>,
    inv_h: Vec<T>,
    h_min: T,
    counts: Vec<usize>,
    strides: Vec<usize>,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl<'a, T: Scalar> BucketGrid<'a, T> {
    /// Grid over `[lo, hi]` holding the flat `centers`; roughly one centre per
    /// bucket.
    pub(crate) fn new(dim: usize, centers: &'a [T], lo: &[T], hi: &[T]) -> Self {
        let m = centers.len() / dim;
        let ext: Vec<T> = (0..dim).map(|d| (hi[d] - lo[d]).max(T::epsilon())).collect();
        let vol = ext.iter().fold(T::one(), |a, &e| a * e);
        let h = (vol / from_usize::<T>(m.max(1))).powf(T::one() / from_usize::<T>(dim));
        let counts: Vec<usize> = ext
            .iter()
            .map(|&e| (e / h).ceil().to_usize().unwrap_or(1).clamp(1, 4 * m.max(1)))
            .collect();
        let cell_h: Vec<T> = (0..dim).map(|d| ext[d] / from_usize::<T>(counts[d])).collect();
        let h_min = cell_h.iter().fold(T::infinity(), |a, &b| a.min(b));
        let inv_h = cell_h.iter().map(|&c| T::one() / c).collect();
        let mut strides = vec![1usize; dim];
        for d in (0..dim.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * counts[d + 1];
        }
        let total: usize = counts.iter().product();
        let mut grid = Self {
            dim,
            centers,
            lo: lo.to_vec(),
            inv_h,
            h_min,
            counts,
            strides,
            start: vec![0; total + 1],
            items: vec![0; m],
        };
        let keys: Vec<usize> = (0..m).map(|j| grid.key(&centers[j * dim..(j + 1) * dim])).collect();
        for &k in &keys {
            grid.start[k + 1] += 1;
        }
        for k in 0..total {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        for (j, &k) in keys.iter().enumerate() {
            grid.items[fill[k]] = j;
            fill[k] += 1;
        }
        grid
    }

    fn cell_coord(&self, x: T, d: usize) -> usize {
        let c = ((x - self.lo[d]) * self.inv_h[d]).floor();
        if c <= T::zero() {
            0
        } else {
            c.to_usize().unwrap_or(usize::MAX).min(self.counts[d] - 1)
        }
    }

    fn key(&self, x: &[T]) -> usize {
        (0..self.dim).map(|d| self.cell_coord(x[d], d) * self.strides[d]).sum()
    }

    #[inline]
    fn dist2(&self, j: usize, x: &[T]) -> T {
        let c = &self.centers[j * self.dim..(j + 1) * self.dim];
        let mut s = T::zero();
        for d in 0..self.dim {
            let t = c[d] - x[d];
            s = s + t * t;
        }
        s
    }

    /// Index (smallest on ties) and squared distance of the nearest centre.
    pub(crate) fn nearest(&self, x: &[T]) -> (usize, T) {
        let n = self.dim;
        let home: Vec<usize> = (0..n).map(|d| self.cell_coord(x[d], d)).collect();
        let max_ring = self.counts.iter().copied().max().unwrap_or(1);
        let mut best = (usize::MAX, T::infinity());
        let mut offset = vec![0isize; n];
        for ring in 0..=max_ring {
            let r = ring as isize;
            // enumerate the shell of Chebyshev radius `ring` around `home`
            for o in offset.iter_mut() {
                *o = -r;
            }
            loop {
                if offset.iter().any(|o| o.abs() == r) {
                    let mut key = 0usize;
                    let mut inside = true;
                    for d in 0..n {
                        let c = home[d] as isize + offset[d];
                        if c < 0 || c >= self.counts[d] as isize {
                            inside = false;
                            break;
                        }
                        key += c as usize * self.strides[d];
                    }
                    if inside {
                        for &j in &self.items[self.start[key]..self.start[key + 1]] {
                            let d2 = self.dist2(j, x);
                            if d2 < best.1 || (d2 == best.1 && j < best.0) {
                                best = (j, d2);
                            }
                        }
                    }
                }
                let mut done = true;
                for d in (0..n).rev() {
                    offset[d] += 1;
                    if offset[d] <= r {
                        done = false;
                        break;
                    }
                    offset[d] = -r;
                }
                if done {
                    break;
                }
            }
            // every centre outside the examined shells is at least ring·h away
            let reach = from_usize::<T>(ring) * self.h_min;
            if best.0 != usize::MAX && best.1 <= reach * reach {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in 1..=3 {
            let m = 57;
            let centers: Vec<f64> = (0..m * dim).map(|_| rng.gen::<f64>()).collect();
            let grid = BucketGrid::new(dim, &centers, &vec![0.0; dim], &vec![1.0; dim]);
            for _ in 0..500 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 1.4 - 0.2).collect();
                let (j, d2) = grid.nearest(&x);
                let brute = (0..m)
                    .map(|k| (k, (0..dim).map(|d| (centers[k * dim + d] - x[d]).powi(2)).sum::<f64>()))
                    .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                assert_eq!(j, brute.0);
                assert_eq!(d2, brute.1);
            }
        }
    }
}
