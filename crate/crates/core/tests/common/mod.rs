//! Helpers shared by the integration targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tangent_envelope::approximator::{
    allocate_budget, build_approximation, build_with_options, partition_domain, BuildOptions, Strategy,
};
use tangent_envelope::convex_core::{Domain, DomainSpec, FunctionSpec, Matrix, WeightFunction};
use tangent_envelope::error_eval::{max_violation, weighted_lp_error};
use tangent_envelope::quadrature::QuadratureSpec;
use tangent_envelope::{Error, Function, Weight};

pub fn function(spec: FunctionSpec) -> Function {
    Function::from_spec(&spec).expect("valid catalog spec")
}

pub fn interval(a: f64, b: f64) -> DomainSpec {
    DomainSpec::Box { lower: vec![a], upper: vec![b] }
}

pub fn square(a: f64, b: f64) -> DomainSpec {
    DomainSpec::Box { lower: vec![a, a], upper: vec![b, b] }
}

/// Every catalog entry on a 1D interval, a square and a disc.
pub fn catalog() -> Vec<Function> {
    let mut out = Vec::new();
    for dom in [interval(-1.0, 1.5), square(-1.0, 1.0), DomainSpec::Ball { center: vec![0.2, -0.1], radius: 0.9 }] {
        let n = match &dom {
            DomainSpec::Box { lower, .. } => lower.len(),
            _ => 2,
        };
        let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.5 } else { 0.4 }).collect()).collect();
        out.push(function(FunctionSpec::quadratic(a.clone(), vec![0.3; n], 0.1, dom.clone())));
        out.push(function(FunctionSpec::cosh_quadratic(a, 0.8, dom.clone())));
        out.push(function(FunctionSpec::exp_sum((0..n).map(|i| 1.0 + 0.5 * i as f64).collect(), 0.2, dom.clone())));
        out.push(function(FunctionSpec::quartic(0.3, dom.clone())));
        out.push(function(FunctionSpec::quartic(0.0, dom.clone())));
        out.push(function(FunctionSpec::huber(0.5, dom)));
    }
    out
}

pub fn c2_plus_catalog() -> Vec<Function> {
    catalog().into_iter().filter(|f| f.is_c2_plus()).collect()
}

pub fn strategies_for(n: usize) -> Vec<Strategy> {
    let mut s = vec![
        Strategy::PaperPartition { l_pieces: None },
        Strategy::GlobalDensity,
        Strategy::GreedyInsertion,
        Strategy::UniformGrid,
    ];
    if n == 1 {
        s.push(Strategy::Exact1d);
    }
    s
}

/// Uniform samples of `domain` by rejection from its bounding box.
pub fn uniform_samples(domain: &Domain<f64>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect();
        if domain.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn fast_build() -> BuildOptions {
    BuildOptions { restarts: 2, max_iterations: 60, ..BuildOptions::default() }
}

/// Largest `l − f` over 10⁵ uniform samples, for every strategy on every
/// catalog entry. Entries that are not C²₊ may be rejected by strategies
/// that need a positive definite Hessian. Returns `(worst violation, pairs
/// checked, pairs rejected)`.
pub fn circumscription_sweep(m: usize) -> Result<(f64, usize, usize), String> {
    let mut worst = f64::NEG_INFINITY;
    let (mut pairs, mut rejected) = (0, 0);
    for (i, f) in catalog().iter().enumerate() {
        let samples = uniform_samples(f.domain(), 100_000, 11 + i as u64);
        for s in strategies_for(f.dim()) {
            let a = match build_with_options(f, &Weight::one(), 1.0, m, &s, 5, &fast_build()) {
                Ok(a) => a,
                Err(Error::NotPositiveDefinite(_) | Error::InvalidMetric(_)) if !f.is_c2_plus() => {
                    rejected += 1;
                    continue;
                }
                Err(e) => return Err(format!("{} / {}: {e}", f.catalog_id(), s.name())),
            };
            let v = max_violation(f, &a.envelope, &samples).map_err(|e| e.to_string())?;
            if v > 1e-12 {
                return Err(format!("{} on {:?} with {}: violation {v:e}", f.catalog_id(), f.domain(), s.name()));
            }
            worst = worst.max(v);
            pairs += 1;
        }
    }
    Ok((worst, pairs, rejected))
}

/// Greedy errors at a fixed quadrature over increasing budgets.
pub fn greedy_errors(f: &Function, ms: &[usize]) -> Vec<f64> {
    let q = QuadratureSpec::default_for(f.domain());
    ms.iter()
        .map(|&m| {
            let l = build_approximation(f, &Weight::one(), 1.0, m, &Strategy::GreedyInsertion, 3).unwrap();
            weighted_lp_error(f, &l, 1.0, &Weight::one(), &q).unwrap().value
        })
        .collect()
}

/// `|err(f∘T, l∘T)·|det T| − err(f, l)| / err(f, l)` for a diagonal `T`
/// with a reflection.
pub fn affine_covariance_defect(f: &Function, strategy: &Strategy, m: usize) -> f64 {
    let n = f.dim();
    let diag: Vec<f64> = (0..n).map(|k| if k == 0 { -2.0 } else { 0.5 + k as f64 }).collect();
    let t = Matrix::diagonal(&diag);
    let l = build_approximation(f, &Weight::one(), 1.0, m, strategy, 2).unwrap();
    let ft = f.compose_linear(&t).unwrap();
    let lt = l.compose_linear(&t).unwrap();
    let q = QuadratureSpec::default_for(f.domain());
    let e = weighted_lp_error(f, &l, 1.0, &Weight::one(), &q).unwrap().value;
    let et = weighted_lp_error(&ft, &lt, 1.0, &Weight::one(), &q).unwrap().value;
    (et * t.det().abs() - e).abs() / e
}

/// Largest piece / error mismatch between building on `f + c` and shifting
/// the envelope of `f` by `c`.
pub fn vertical_shift_defect(f: &Function, strategy: &Strategy, m: usize, c: f64) -> f64 {
    let w = Weight::one();
    let l = build_approximation(f, &w, 1.0, m, strategy, 4).unwrap();
    let fc = f.with_offset(c);
    let lc = build_approximation(&fc, &w, 1.0, m, strategy, 4).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in l.shifted(c).pieces().zip(lc.pieces()) {
        worst = worst.max((a.offset - b.offset).abs());
        for (x, y) in a.slope.iter().zip(&b.slope) {
            worst = worst.max((x - y).abs());
        }
    }
    let q = QuadratureSpec::default_for(f.domain());
    let e = weighted_lp_error(f, &l, 1.0, &w, &q).unwrap().value;
    let ec = weighted_lp_error(&fc, &lc, 1.0, &w, &q).unwrap().value;
    worst.max((e - ec).abs())
}

/// Random 2D partitions and budgets; returns the number of configurations
/// where `Σ⌊τ_i m⌋ > m` or the budgets do not sum to `m`.
pub fn budget_violations(configs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..configs {
        let a = rng.gen_range(0.5..3.0);
        let b = rng.gen_range(-0.4..0.4);
        let kappa = rng.gen_range(0.0..1.5);
        let f = function(FunctionSpec::cosh_quadratic(vec![vec![a, b], vec![b, a]], kappa, square(-1.0, 1.0)));
        let w = WeightFunction::ExpNeg { rate: rng.gen_range(0.0..2.0) };
        let l_pieces = rng.gen_range(1..5usize);
        let m = rng.gen_range(l_pieces * l_pieces..400);
        let p = rng.gen_range(0.5..3.0);
        let part = partition_domain(&f, &w, l_pieces).unwrap();
        let alloc = allocate_budget(&part, &f, &w, p, m, &QuadratureSpec::tensor_grid(4)).unwrap();
        let floors: usize = alloc.floors.iter().sum();
        let total: usize = alloc.budgets.iter().sum();
        let total_mass: f64 = alloc.masses.iter().sum();
        let recomputed: usize = alloc.masses.iter().map(|v| (v / total_mass * m as f64).floor() as usize).sum();
        if floors > m || recomputed > m || total != m {
            bad += 1;
        }
    }
    bad
}
