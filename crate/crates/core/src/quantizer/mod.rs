//! Placement subproblem: points minimizing `∫ min_s q(x−s)^p ρ(x) dx` over
//! a region, via Lloyd iterations on a fixed weighted sample cloud.

mod nn;
mod region;

pub(crate) use nn::BucketGrid;
pub use region::{Region, SampleCloud};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_core::{Domain, Matrix, QuadraticForm};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_legendre_on, integrate, Estimate, QuadratureSpec};
use crate::scalar::{from_usize, lit, pairwise_sum, Scalar};

#[derive(Clone, Debug)]
pub struct QuantizerConfig<T> {
    pub m: usize,
    pub p: T,
    pub metric: QuadraticForm<T>,
    pub max_iterations: usize,
    /// Stop once the relative objective decrease of one sweep falls below this.
    pub tolerance: T,
    pub restarts: usize,
    pub seed: u64,
    /// Sample cloud size; defaults to `max(2·10⁴, 200·m)`.
    pub cloud_size: Option<usize>,
}

impl<T: Scalar> QuantizerConfig<T> {
    pub fn new(m: usize, p: T, metric: QuadraticForm<T>, seed: u64) -> Self {
        Self { m, p, metric, max_iterations: 200, tolerance: lit(1e-7), restarts: 1, seed, cloud_size: None }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("point budget must be at least 1".into()));
        }
        if !(self.p > T::zero()) {
            return Err(Error::InvalidArgument("exponent p must be positive".into()));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.metric.dim() != dim {
            return Err(Error::InvalidMetric(format!("metric is {}-dimensional, region is {dim}", self.metric.dim())));
        }
        Ok(())
    }

    pub fn effective_cloud_size(&self) -> usize {
        self.cloud_size.unwrap_or((200 * self.m).max(20_000))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSet<T> {
    pub points: Vec<Vec<T>>,
    pub objective: T,
    pub iterations_used: usize,
    pub converged: bool,
    /// Objective after every assignment step of the returned run.
    pub trace: Vec<T>,
    pub restart_objectives: Vec<T>,
}

/// `Lᵀ` from `A = L Lᵀ`, so that `q(y) = ‖Lᵀ y‖²`.
pub fn whiten<T: Scalar>(q: &QuadraticForm<T>) -> Matrix<T> {
    q.factor().transpose()
}

/// [`whiten`] for a raw matrix; non-positive-definite input is rejected.
pub fn whiten_matrix<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    QuadraticForm::new(a.clone()).map(|q| whiten(&q))
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn pow_p<T: Scalar>(d2: T, p: T) -> T {
    if p == T::one() {
        d2
    } else if p == lit(2.0) {
        d2 * d2
    } else {
        d2.powf(p)
    }
}

fn whiten_flat<T: Scalar>(q: &QuadraticForm<T>, dim: usize, xs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); xs.len()];
    for (x, y) in xs.chunks(dim).zip(out.chunks_mut(dim)) {
        q.whiten_into(x, y);
    }
    out
}

fn bbox_of<T: Scalar>(dim: usize, sets: &[&[T]]) -> (Vec<T>, Vec<T>) {
    let mut lo = vec![T::infinity(); dim];
    let mut hi = vec![T::neg_infinity(); dim];
    for set in sets {
        for x in set.chunks(dim) {
            for d in 0..dim {
                lo[d] = lo[d].min(x[d]);
                hi[d] = hi[d].max(x[d]);
            }
        }
    }
    (lo, hi)
}

/// Nearest-centre assignment of whitened samples and the resulting
/// objective `Σ w_i ‖y_i − c_{a(i)}‖^{2p}`.
fn assign<T: Scalar>(dim: usize, ys: &[T], weights: &[T], centers: &[T], p: T) -> (Vec<(usize, T)>, T) {
    let (lo, hi) = bbox_of(dim, &[ys, centers]);
    let grid = BucketGrid::new(dim, centers, &lo, &hi);
    let nearest: Vec<(usize, T)> = ys.par_chunks(dim).map(|y| grid.nearest(y)).collect();
    let terms: Vec<T> = nearest.iter().zip(weights).map(|(&(_, d2), &w)| w * pow_p(d2, p)).collect();
    (nearest, pairwise_sum(&terms))
}

/// Objective of `points` on the cloud, exactly as tracked by the Lloyd loop.
pub fn cloud_objective<T: Scalar>(cloud: &SampleCloud<T>, q: &QuadraticForm<T>, p: T, points: &[Vec<T>]) -> T {
    let dim = cloud.dim();
    let ys = whiten_flat(q, dim, cloud.points_flat());
    let flat: Vec<T> = points.iter().flatten().copied().collect();
    let cs = whiten_flat(q, dim, &flat);
    assign(dim, &ys, cloud.weights(), &cs, p).1
}

/// Best of `config.restarts` Lloyd runs, each on its own sample cloud.
pub fn quantize<T, D>(region: &Region<T>, density: &D, config: &QuantizerConfig<T>) -> Result<PointSet<T>>
where
    T: Scalar,
    D: Fn(&[T]) -> T + Sync + ?Sized,
{
    config.validate(region.dim())?;
    let size = config.effective_cloud_size();
    let runs: Vec<Result<PointSet<T>>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let cloud = SampleCloud::draw(region, density, size, mix_seed(config.seed, 2 * r as u64))?;
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 2 * r as u64 + 1));
            lloyd(region, &cloud, config, &mut rng)
        })
        .collect();
    best_of(runs)
}

/// Lloyd runs on a caller-supplied cloud; restarts differ only in seeding.
pub fn quantize_on_cloud<T: Scalar>(
    region: &Region<T>,
    cloud: &SampleCloud<T>,
    config: &QuantizerConfig<T>,
) -> Result<PointSet<T>> {
    config.validate(region.dim())?;
    if cloud.dim() != region.dim() {
        return Err(Error::InvalidArgument("cloud dimension mismatch".into()));
    }
    let runs: Vec<Result<PointSet<T>>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 2 * r as u64 + 1));
            lloyd(region, cloud, config, &mut rng)
        })
        .collect();
    best_of(runs)
}

fn best_of<T: Scalar>(runs: Vec<Result<PointSet<T>>>) -> Result<PointSet<T>> {
    let runs: Vec<PointSet<T>> = runs.into_iter().collect::<Result<_>>()?;
    let objectives: Vec<T> = runs.iter().map(|r| r.objective).collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.objective < a.objective { b } else { a })
        .expect("at least one restart");
    Ok(PointSet { restart_objectives: objectives, ..best })
}

/// Centres at the mid-quantiles of `ρ^{1/(1+2p)}`, the asymptotically
/// optimal point density on a line.
fn seed_quantiles_1d<T: Scalar>(ys: &[T], weights: &[T], m: usize, p: T) -> Vec<T> {
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].partial_cmp(&ys[b]).unwrap_or(std::cmp::Ordering::Equal));
    let e = T::one() / (T::one() + lit::<T>(2.0) * p);
    let mass: Vec<T> = order.iter().map(|&i| weights[i].max(T::zero()).powf(e)).collect();
    let total = pairwise_sum(&mass);
    let mut out = Vec::with_capacity(m);
    let mut acc = T::zero();
    let mut k = 0;
    for j in 0..m {
        let target = total * (from_usize::<T>(j) + lit(0.5)) / from_usize::<T>(m);
        while k + 1 < order.len() && acc + mass[k] < target {
            acc = acc + mass[k];
            k += 1;
        }
        out.push(ys[order[k]]);
    }
    out
}

/// Density-proportional pool followed by greedy farthest-point selection.
fn seed_centers<T: Scalar>(dim: usize, ys: &[T], weights: &[T], m: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    let len = weights.len();
    let pool_size = (10 * m).max(m);
    let total = pairwise_sum(weights);
    let step = total / from_usize::<T>(pool_size);
    let mut pool = Vec::with_capacity(pool_size);
    let mut target = step * lit::<T>(rng.gen::<f64>());
    let mut acc = T::zero();
    let mut i = 0;
    while pool.len() < pool_size && i < len {
        acc = acc + weights[i];
        while target < acc && pool.len() < pool_size {
            pool.push(i);
            target = target + step;
        }
        i += 1;
    }
    while pool.len() < pool_size {
        pool.push(len - 1);
    }
    let d2 = |a: usize, b: usize| {
        (0..dim).fold(T::zero(), |s, d| {
            let t = ys[a * dim + d] - ys[b * dim + d];
            s + t * t
        })
    };
    let mut chosen = Vec::with_capacity(m);
    chosen.push(pool[rng.gen_range(0..pool.len())]);
    let mut min_d2 = vec![T::infinity(); pool.len()];
    while chosen.len() < m {
        let last = *chosen.last().expect("non-empty");
        let mut best = (0, T::neg_infinity());
        for (k, &s) in pool.iter().enumerate() {
            let v = d2(s, last);
            if v < min_d2[k] {
                min_d2[k] = v;
            }
            if min_d2[k] > best.1 {
                best = (k, min_d2[k]);
            }
        }
        chosen.push(pool[best.0]);
    }
    chosen.iter().flat_map(|&s| ys[s * dim..(s + 1) * dim].iter().copied()).collect()
}

struct Cell<'a, T> {
    dim: usize,
    ys: &'a [T],
    weights: &'a [T],
    members: &'a [usize],
    p: T,
}

impl<T: Scalar> Cell<'_, T> {
    fn cost(&self, c: &[T]) -> T {
        let terms: Vec<T> = self
            .members
            .iter()
            .map(|&i| {
                let y = &self.ys[i * self.dim..(i + 1) * self.dim];
                let d2 = (0..self.dim).fold(T::zero(), |s, d| s + (y[d] - c[d]) * (y[d] - c[d]));
                self.weights[i] * pow_p(d2, self.p)
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// Minimizer of `Σ w_i ‖y_i − c‖^{2p}` for weights `λ_i` (weighted mean).
    fn weighted_mean(&self, lambda: impl Fn(usize) -> T) -> Option<Vec<T>> {
        let mut sum = vec![T::zero(); self.dim];
        let mut mass = T::zero();
        for &i in self.members {
            let w = lambda(i);
            mass = mass + w;
            for d in 0..self.dim {
                sum[d] = sum[d] + w * self.ys[i * self.dim + d];
            }
        }
        (mass > T::zero() && mass.is_finite()).then(|| sum.into_iter().map(|s| s / mass).collect())
    }

    /// Candidate replacement for centre `c`: the mean for `p = 1`, otherwise
    /// damped reweighted-mean steps started from the better of mean and `c`.
    fn improve(&self, c: &[T], current: T) -> Option<(Vec<T>, T)> {
        let mean = self.weighted_mean(|i| self.weights[i])?;
        let mean_cost = self.cost(&mean);
        if self.p == T::one() {
            return (mean_cost < current).then_some((mean, mean_cost));
        }
        let (mut x, mut fx) = if mean_cost < current { (mean, mean_cost) } else { (c.to_vec(), current) };
        let floor = lit::<T>(1e-30);
        let two = lit::<T>(2.0);
        for _ in 0..20 {
            let Some(target) = self.weighted_mean(|i| {
                let y = &self.ys[i * self.dim..(i + 1) * self.dim];
                let d2 = (0..self.dim).fold(T::zero(), |s, d| s + (y[d] - x[d]) * (y[d] - x[d]));
                self.weights[i] * pow_p(d2.max(floor), self.p - T::one())
            }) else {
                break;
            };
            let mut step = T::one();
            let mut moved = false;
            for _ in 0..8 {
                let trial: Vec<T> = x.iter().zip(&target).map(|(&a, &b)| a + step * (b - a)).collect();
                let ft = self.cost(&trial);
                if ft < fx {
                    x = trial;
                    fx = ft;
                    moved = true;
                    break;
                }
                step = step / two;
            }
            if !moved {
                break;
            }
        }
        (fx < current).then_some((x, fx))
    }
}

fn lloyd<T: Scalar>(
    region: &Region<T>,
    cloud: &SampleCloud<T>,
    config: &QuantizerConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<PointSet<T>> {
    let dim = cloud.dim();
    let m = config.m;
    let p = config.p;
    let q = &config.metric;
    let ys = whiten_flat(q, dim, cloud.points_flat());
    let weights = cloud.weights();
    let mut centers =
        if dim == 1 { seed_quantiles_1d(&ys, weights, m, p) } else { seed_centers(dim, &ys, weights, m, rng) };
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let (nearest, objective) = assign(dim, &ys, weights, &centers, p);
        if let Some(&prev) = trace.last() {
            debug_assert!(objective <= prev + prev * lit(1e-10), "Lloyd objective increased");
            if prev - objective <= config.tolerance * prev {
                converged = true;
            }
        }
        trace.push(objective);
        if converged || iterations == config.max_iterations {
            break;
        }
        iterations += 1;

        // counting sort of samples by cell
        let mut start = vec![0usize; m + 1];
        for &(j, _) in &nearest {
            start[j + 1] += 1;
        }
        for j in 0..m {
            start[j + 1] += start[j];
        }
        let mut fill = start.clone();
        let mut members = vec![0usize; nearest.len()];
        for (i, &(j, _)) in nearest.iter().enumerate() {
            members[fill[j]] = i;
            fill[j] += 1;
        }
        let updates: Vec<Option<Vec<T>>> = (0..m)
            .into_par_iter()
            .map(|j| {
                let idx = &members[start[j]..start[j + 1]];
                if idx.is_empty() {
                    return None;
                }
                let cell = Cell { dim, ys: &ys, weights, members: idx, p };
                let current = pairwise_sum(&idx.iter().map(|&i| weights[i] * pow_p(nearest[i].1, p)).collect::<Vec<_>>());
                let c = &centers[j * dim..(j + 1) * dim];
                let (cand, _) = cell.improve(c, current)?;
                let mut x = vec![T::zero(); dim];
                q.unwhiten_into(&cand, &mut x);
                region.contains(&x).then_some(cand)
            })
            .collect();
        for (j, u) in updates.into_iter().enumerate() {
            if let Some(c) = u {
                centers[j * dim..(j + 1) * dim].copy_from_slice(&c);
            }
        }
        // empty cells move to the currently worst-served sample
        let mut sample_cost: Vec<T> = nearest.iter().zip(weights).map(|(&(_, d2), &w)| w * pow_p(d2, p)).collect();
        for j in 0..m {
            if start[j] == start[j + 1] {
                let (worst, _) = sample_cost
                    .iter()
                    .enumerate()
                    .fold((0, T::neg_infinity()), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
                log::debug!("re-seeding empty cell {j} at sample {worst}");
                centers[j * dim..(j + 1) * dim].copy_from_slice(&ys[worst * dim..(worst + 1) * dim]);
                sample_cost[worst] = T::zero();
            }
        }
    }
    let points = centers
        .chunks(dim)
        .map(|c| {
            let mut x = vec![T::zero(); dim];
            q.unwhiten_into(c, &mut x);
            x
        })
        .collect();
    let objective = *trace.last().expect("at least one assignment");
    Ok(PointSet { points, objective, iterations_used: iterations, converged, trace, restart_objectives: vec![] })
}

/// `∫_region min_s q(x−s)^p ρ(x) dx` on quadrature nodes from `spec`.
pub fn quantizer_objective<T, D>(
    region: &Domain<T>,
    density: &D,
    q: &QuadraticForm<T>,
    p: T,
    points: &[Vec<T>],
    spec: &QuadratureSpec,
) -> Result<Estimate<T>>
where
    T: Scalar,
    D: Fn(&[T]) -> T + Sync + ?Sized,
{
    let dim = region.dim();
    if points.is_empty() {
        return Err(Error::InvalidArgument("point set is empty".into()));
    }
    if points.iter().any(|s| s.len() != dim) || q.dim() != dim {
        return Err(Error::InvalidArgument("point or metric dimension mismatch".into()));
    }
    let flat: Vec<T> = points.iter().flatten().copied().collect();
    let cs = whiten_flat(q, dim, &flat);
    let (lo, hi) = region.bounding_box();
    // whitened image of the bounding box corners bounds the whitened region
    let corners: Vec<T> = (0..1usize << dim)
        .flat_map(|mask| {
            let (lo, hi) = (&lo, &hi);
            (0..dim).map(move |d| if mask >> d & 1 == 1 { hi[d] } else { lo[d] })
        })
        .collect();
    let wc = whiten_flat(q, dim, &corners);
    let (glo, ghi) = bbox_of(dim, &[&cs, &wc]);
    let grid = BucketGrid::new(dim, &cs, &glo, &ghi);
    integrate(region, spec, |x| {
        let mut y = vec![T::zero(); dim];
        q.whiten_into(x, &mut y);
        Ok(density(x) * pow_p(grid.nearest(&y).1, p))
    })
}

/// Exact objective of sorted 1D points on `[a, b]` (Euclidean metric).
pub fn objective_1d<T, D>(a: T, b: T, density: &D, p: T, points: &[T]) -> T
where
    T: Scalar,
    D: Fn(T) -> T + ?Sized,
{
    let rule = gauss_legendre(16);
    let half = lit::<T>(0.5);
    let mut total = T::zero();
    for (j, &s) in points.iter().enumerate() {
        let l = if j == 0 { a } else { (points[j - 1] + s) * half };
        let r = if j + 1 == points.len() { b } else { (points[j + 1] + s) * half };
        let g = |x: T| density(x) * pow_p((x - s) * (x - s), p);
        let mid = s.max(l).min(r);
        total = total + gauss_legendre_on(l, mid, &rule, g) + gauss_legendre_on(mid, r, &rule, g);
    }
    total
}

/// Exhaustive search over sorted tuples of a coarse grid on `[a, b]`, then
/// nested local grids halving the spacing until it drops below
/// `resolution`. Reference solver for `m ≤ 4`.
pub fn brute_force_1d<T, D>(a: T, b: T, density: &D, m: usize, p: T, resolution: T) -> Result<PointSet<T>>
where
    T: Scalar,
    D: Fn(T) -> T + ?Sized,
{
    if m == 0 || m > 4 {
        return Err(Error::InvalidArgument(format!("brute force supports 1 ≤ m ≤ 4, got {m}")));
    }
    if !(a < b) || !(p > T::zero()) || !(resolution > T::zero()) {
        return Err(Error::InvalidArgument("need a < b, p > 0 and positive resolution".into()));
    }
    let coarse = 48usize;
    let mut h = (b - a) / from_usize::<T>(coarse);
    let node = |i: usize| a + (from_usize::<T>(i) + lit(0.5)) * h;
    let mut best: (Vec<T>, T) = (vec![], T::infinity());
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let pts: Vec<T> = idx.iter().map(|&i| node(i)).collect();
        let v = objective_1d(a, b, density, p, &pts);
        if v < best.1 {
            best = (pts, v);
        }
        // next strictly increasing tuple
        let mut k = m;
        let mut advanced = false;
        while k > 0 {
            k -= 1;
            if idx[k] < coarse - (m - k) {
                idx[k] += 1;
                for t in k + 1..m {
                    idx[t] = idx[t - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    let mut levels = 0;
    while h > resolution {
        h = h * lit(0.5);
        levels += 1;
        let center = best.0.clone();
        let mut offs = vec![-2i32; m];
        loop {
            let pts: Vec<T> = center.iter().zip(&offs).map(|(&c, &o)| c + lit::<T>(o as f64) * h).collect();
            let valid = pts.iter().all(|&x| x >= a && x <= b) && pts.windows(2).all(|w| w[0] < w[1]);
            if valid {
                let v = objective_1d(a, b, density, p, &pts);
                if v < best.1 {
                    best = (pts, v);
                }
            }
            let mut k = m;
            let mut advanced = false;
            while k > 0 {
                k -= 1;
                offs[k] += 1;
                if offs[k] <= 2 {
                    advanced = true;
                    break;
                }
                offs[k] = -2;
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(PointSet {
        points: best.0.iter().map(|&x| vec![x]).collect(),
        objective: best.1,
        iterations_used: levels,
        converged: true,
        trace: vec![best.1],
        restart_objectives: vec![best.1],
    })
}

#[cfg(test)]
mod tests;
