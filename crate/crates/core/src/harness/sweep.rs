use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approximator::{build_with_options, BuildOptions, Strategy};
use crate::convex_core::{SmoothConvexFunction, WeightFunction};
use crate::error::{Error, Result};
use crate::error_eval::weighted_lp_error;
use crate::functionals::{
    reference_zador, theoretical_limit, weighted_mass, zador_estimate, ZadorConstant, ZadorOptions,
};
use crate::quadrature::QuadratureSpec;
use crate::scalar::{from_usize, lit, Scalar};

/// One row of a sweep over the budget `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub m: usize,
    pub error: T,
    pub error_bar: T,
    /// `m^{2p/n} · error`.
    pub rescaled: T,
    pub theory: T,
    /// `rescaled / theory`.
    pub ratio: T,
}

/// The first budget that failed; records stop just before it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub m: usize,
    pub message: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome<T> {
    pub records: Vec<SweepRecord<T>>,
    pub failure: Option<SweepFailure>,
    /// Constant the theory column is based on.
    pub zador: ZadorConstant<T>,
    /// `∫ (det D²f)^{p/(n+2p)} ω^{n/(n+2p)}` over the domain.
    pub mass: T,
}

impl<T> SweepOutcome<T> {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Everything a sweep needs besides the function, weight, exponent and
/// strategy.
#[derive(Clone, Debug)]
pub struct SweepOptions<T> {
    /// Error quadrature; the exact 1D rule for intervals and
    /// [`QuadratureSpec::default_for`] elsewhere when unset.
    pub quadrature: Option<QuadratureSpec>,
    pub seed: u64,
    pub build: BuildOptions,
    /// Overrides the reference constant (and the empirical fallback).
    pub zador: Option<ZadorConstant<T>>,
}

impl<T> Default for SweepOptions<T> {
    fn default() -> Self {
        Self { quadrature: None, seed: 0, build: BuildOptions::default(), zador: None }
    }
}

pub fn default_quadrature<T: Scalar>(f: &SmoothConvexFunction<T>) -> QuadratureSpec {
    if f.dim() == 1 && f.domain().is_box() {
        QuadratureSpec::exact_1d()
    } else {
        QuadratureSpec::default_for(f.domain())
    }
}

/// Reference constant when one is known, otherwise a small empirical run.
pub fn resolve_zador<T: Scalar>(n: usize, p: T, seed: u64) -> Result<ZadorConstant<T>> {
    if let Some(z) = reference_zador(n, p) {
        return Ok(z);
    }
    log::info!("no reference constant for n = {n}, p = {p}; estimating empirically");
    Ok(zador_estimate(n, p, &[32, 64, 128], 4, seed, &ZadorOptions::default())?.constant)
}

/// Builds and evaluates the approximation for each budget in parallel.
/// Records are ordered by `m`; the first failing budget truncates the list.
pub fn sweep_function<T: Scalar>(
    f: &SmoothConvexFunction<T>,
    w: &WeightFunction<T>,
    p: T,
    strategy: &Strategy,
    m_list: &[usize],
    opts: &SweepOptions<T>,
) -> Result<SweepOutcome<T>> {
    if !(p > T::zero()) || !p.is_finite() {
        return Err(Error::InvalidArgument("exponent p must be positive".into()));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::InvalidArgument("m_list must be non-empty with positive budgets".into()));
    }
    let n = f.dim();
    let zador = match &opts.zador {
        Some(z) => *z,
        None => resolve_zador(n, p, opts.seed)?,
    };
    let mass = weighted_mass(f, p, w, f.domain(), &default_quadrature(f))?.value;
    let theory = theoretical_limit(mass, p, n, &zador)?;
    let quad = opts.quadrature.clone().unwrap_or_else(|| default_quadrature(f));

    let mut ms = m_list.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let exponent = lit::<T>(2.0) * p / from_usize::<T>(n);
    let results: Vec<Result<SweepRecord<T>>> = ms
        .par_iter()
        .map(|&m| {
            let approx = build_with_options(f, w, p, m, strategy, opts.seed, &opts.build)?;
            let report = weighted_lp_error(f, &approx.envelope, p, w, &quad)?;
            let rescaled = from_usize::<T>(m).powf(exponent) * report.value;
            Ok(SweepRecord {
                m,
                error: report.value,
                error_bar: report.error_bar,
                rescaled,
                theory,
                ratio: rescaled / theory,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(ms.len());
    let mut failure = None;
    for (&m, r) in ms.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::error!("sweep aborted at m = {m}: {e}");
                failure = Some(SweepFailure { m, message: e.to_string(), exit_code: e.exit_code() });
                break;
            }
        }
    }
    Ok(SweepOutcome { records, failure, zador, mass })
}
