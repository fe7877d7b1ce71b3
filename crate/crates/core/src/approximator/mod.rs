//! Circumscribed piecewise-affine approximations with at most `m` tangent
//! pieces.

mod exact1d;
mod partition;

pub use exact1d::{exact_1d_abscissas, exact_1d_optimal};
pub use partition::{
    allocate_budget, allocate_from_masses, partition_domain, piece_masses, Allocation, Partition, Piece,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex_core::{tangent_plane, Domain, PiecewiseAffineMax, QuadraticForm, SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::quadrature::{Nodes, QuadratureSpec};
use crate::quantizer::{mix_seed, quantize, QuantizerConfig, Region};
use crate::scalar::{from_usize, lit, Scalar};

pub const STRATEGY_NAMES: [&str; 5] = ["paper_partition", "global_density", "greedy_insertion", "uniform_grid", "exact_1d"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    /// Grid partition, mass-proportional budgets, per-piece quantization
    /// under the anchor metric. `l_pieces` defaults to `⌈m^{1/(n+1)}⌉`.
    PaperPartition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l_pieces: Option<usize>,
    },
    /// One quantization of the whole domain under the metric frozen at the
    /// centroid.
    GlobalDensity,
    /// Repeatedly add the tangent where `(f − l)^p ω` peaks on a fixed cloud.
    GreedyInsertion,
    /// Tangents at a cell-centred lattice.
    UniformGrid,
    /// One-dimensional optimum.
    Exact1d,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::PaperPartition { .. } => "paper_partition",
            Strategy::GlobalDensity => "global_density",
            Strategy::GreedyInsertion => "greedy_insertion",
            Strategy::UniformGrid => "uniform_grid",
            Strategy::Exact1d => "exact_1d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "paper_partition" => Strategy::PaperPartition { l_pieces: None },
            "global_density" => Strategy::GlobalDensity,
            "greedy_insertion" => Strategy::GreedyInsertion,
            "uniform_grid" => Strategy::UniformGrid,
            "exact_1d" => Strategy::Exact1d,
            other => {
                return Err(Error::config(
                    "strategy",
                    format!("unknown strategy `{other}`; expected one of: {}", STRATEGY_NAMES.join(", ")),
                ))
            }
        })
    }
}

/// Knobs shared by the quantizer-based strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub cloud_size: Option<usize>,
    /// Fixed cloud of the greedy strategy, independent of `m` so that
    /// envelopes are nested.
    pub greedy_cloud: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { restarts: 4, max_iterations: 200, tolerance: 1e-7, cloud_size: None, greedy_cloud: 1 << 15 }
    }
}

/// Envelope together with its construction data.
#[derive(Clone, Debug)]
pub struct Approximation<T> {
    pub envelope: PiecewiseAffineMax<T>,
    pub tangent_points: Vec<Vec<T>>,
    pub allocation: Option<Allocation<T>>,
}

pub fn build_approximation<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    strategy: &Strategy,
    seed: u64,
) -> Result<PiecewiseAffineMax<T>> {
    build_with_options(f, w, p, m, strategy, seed, &BuildOptions::default()).map(|a| a.envelope)
}

pub fn build_with_options<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    strategy: &Strategy,
    seed: u64,
    opts: &BuildOptions,
) -> Result<Approximation<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("budget m must be at least 1".into()));
    }
    if !(p > T::zero()) {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    w.check_positive_on(f.domain())?;
    // Weights that ignore f(x) see f only through its derivatives, so build
    // on the offset-free function: f + c then gets bit-identical tangent
    // points.
    if w.x_degree().is_some() && f.offset() != T::zero() {
        let c = f.offset();
        let mut a = build_with_options(&f.with_offset(-c), w, p, m, strategy, seed, opts)?;
        a.envelope = a.envelope.shifted(c);
        return Ok(a);
    }
    let n = f.dim();
    let (points, allocation) = match strategy {
        Strategy::Exact1d => {
            if n != 1 {
                return Err(Error::InvalidArgument("exact_1d strategy needs n = 1".into()));
            }
            (exact_1d_abscissas(f, w, p, m)?.into_iter().map(|t| vec![t]).collect(), None)
        }
        Strategy::PaperPartition { l_pieces } => {
            let l = l_pieces.unwrap_or_else(|| (m as f64).powf(1.0 / (n as f64 + 1.0)).ceil() as usize).max(1);
            let (pts, alloc) = paper_partition(f, w, p, m, l, seed, opts)?;
            (pts, Some(alloc))
        }
        Strategy::GlobalDensity => (global_density(f, w, p, m, seed, opts)?, None),
        Strategy::GreedyInsertion => (greedy_insertion(f, w, p, m, seed, opts)?, None),
        Strategy::UniformGrid => (uniform_grid(f.domain(), m), None),
    };
    let pieces = points.iter().map(|x| tangent_plane(f, x)).collect::<Result<Vec<_>>>()?;
    Ok(Approximation { envelope: PiecewiseAffineMax::new(pieces, m)?, tangent_points: points, allocation })
}

fn quantizer_config<T: Scalar>(m: usize, p: T, metric: QuadraticForm<T>, seed: u64, opts: &BuildOptions) -> QuantizerConfig<T> {
    QuantizerConfig {
        max_iterations: opts.max_iterations,
        tolerance: lit(opts.tolerance),
        restarts: opts.restarts.max(1),
        cloud_size: opts.cloud_size,
        ..QuantizerConfig::new(m, p, metric, seed)
    }
}

fn mass_quadrature(n: usize) -> QuadratureSpec {
    QuadratureSpec::tensor_grid(if n <= 2 { 8 } else { 4 })
}

fn paper_partition<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    l: usize,
    seed: u64,
    opts: &BuildOptions,
) -> Result<(Vec<Vec<T>>, Allocation<T>)> {
    let n = f.dim();
    let mut partition = partition_domain(f, w, l)?;
    for warning in &partition.warnings {
        log::warn!("{warning}");
    }
    let mut masses = piece_masses(&partition, f, w, p, &mass_quadrature(n))?;
    partition::merge_to_budget(&mut partition, &mut masses, m, f, w)?;
    let alloc = allocate_from_masses(&masses, m)?;
    let per_piece: Vec<Result<Vec<Vec<T>>>> = (0..partition.len())
        .into_par_iter()
        .map(|i| {
            let d = alloc.budgets[i];
            if d == 0 {
                return Ok(vec![]);
            }
            let region = partition.region(i)?;
            // within a piece the Hessian is frozen in the metric; the weight
            // alone shapes the point density
            let density = |x: &[T]| w.eval(x, f.value(x));
            let cfg = quantizer_config(d, p, partition.pieces[i].form.clone(), mix_seed(seed, i as u64), opts);
            Ok(quantize(&region, &density, &cfg)?.points)
        })
        .collect();
    let mut points = Vec::with_capacity(m);
    for r in per_piece {
        points.extend(r?);
    }
    Ok((points, alloc))
}

fn global_density<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    seed: u64,
    opts: &BuildOptions,
) -> Result<Vec<Vec<T>>> {
    let domain = f.domain();
    let n = from_usize::<T>(f.dim());
    let centroid = domain.centroid();
    let metric = QuadraticForm::new(f.hessian(&centroid))
        .map_err(|e| Error::NotPositiveDefinite(format!("at centroid {centroid:?}: {e}")))?;
    // (det)^{p/n} ω: the frozen metric then yields point density
    // ∝ (det)^{p/(n+2p)} ω^{n/(n+2p)}
    let density = |x: &[T]| f.hessian_det(x).max(T::zero()).powf(p / n) * w.eval(x, f.value(x));
    let cfg = quantizer_config(m, p, metric, seed, opts);
    Ok(quantize(&Region::from_domain(domain), &density, &cfg)?.points)
}

fn greedy_insertion<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    m: usize,
    seed: u64,
    opts: &BuildOptions,
) -> Result<Vec<Vec<T>>> {
    let domain = f.domain();
    let n = f.dim();
    let cloud = Nodes::stratified(domain, opts.greedy_cloud.max(1000), mix_seed(seed, 0x6EED));
    let xs: Vec<&[T]> = cloud.points().collect();
    let fx: Vec<T> = xs.iter().map(|x| f.value(x)).collect();
    let om: Vec<T> = xs.iter().zip(&fx).map(|(x, &v)| w.eval(x, v)).collect();
    let first = domain.centroid();
    let mut points = vec![first.clone()];
    let mut plane = tangent_plane(f, &first)?;
    let mut gap: Vec<T> = xs.iter().zip(&fx).map(|(x, &v)| v - plane.eval(x)).collect();
    while points.len() < m {
        let score = |i: usize| gap[i].max(T::zero()).powf(p) * om[i];
        let (best, best_score) =
            (0..xs.len()).fold((0, T::neg_infinity()), |b, i| if score(i) > b.1 { (i, score(i)) } else { b });
        if !(best_score > T::zero()) {
            break;
        }
        let x = xs[best].to_vec();
        plane = tangent_plane(f, &x)?;
        for (i, g) in gap.iter_mut().enumerate() {
            let v = fx[i] - plane.eval(xs[i]);
            if v < *g {
                *g = v;
            }
        }
        debug_assert_eq!(x.len(), n);
        points.push(x);
    }
    Ok(points)
}

/// Largest cell-centred lattice (counts proportional to the box extents)
/// with at most `m` points inside the domain.
fn uniform_grid<T: Scalar>(domain: &Domain<T>, m: usize) -> Vec<Vec<T>> {
    let n = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let ext: Vec<T> = (0..n).map(|d| hi[d] - lo[d]).collect();
    let lattice = |scale: f64| -> Vec<Vec<T>> {
        let counts: Vec<usize> =
            ext.iter().map(|&e| ((scale * e.to_f64().unwrap_or(1.0)).floor() as usize).max(1)).collect();
        let total: usize = counts.iter().product();
        if total > 64 * m.max(1) {
            return vec![vec![]; total.min(64 * m + 1)];
        }
        (0..total)
            .filter_map(|s| {
                let mut c = s;
                let mut x = vec![T::zero(); n];
                for d in (0..n).rev() {
                    let i = c % counts[d];
                    c /= counts[d];
                    x[d] = lo[d] + ext[d] * (from_usize::<T>(i) + lit(0.5)) / from_usize::<T>(counts[d]);
                }
                domain.contains(&x).then_some(x)
            })
            .collect()
    };
    let longest = ext.iter().fold(0.0f64, |a, e| a.max(e.to_f64().unwrap_or(0.0)));
    // bisection on the lattice scale
    let (mut lo_s, mut hi_s) = (0.0, (4.0 * m as f64 + 4.0) / longest);
    let mut best: Vec<Vec<T>> = vec![];
    for _ in 0..80 {
        let mid = 0.5 * (lo_s + hi_s);
        let pts = lattice(mid);
        if pts.len() <= m {
            if pts.len() >= best.len() && pts.iter().all(|x| !x.is_empty()) {
                best = pts;
            }
            lo_s = mid;
        } else {
            hi_s = mid;
        }
    }
    if best.is_empty() {
        best.push(domain.centroid());
    }
    best
}
