//! Configuration, sweeps over the budget `m`, limit fitting and result
//! tables.

mod config;
mod emit;
mod fit;
mod sweep;

pub use config::{default_m_list, parse_config, Config, DualSpec, OutputSpec};
pub use emit::{emit, format_real, parse, render, write_text, Format, CSV_HEADER};
pub use fit::{fit_limit, FitResult, EXPONENT_RANGE};
pub use sweep::{default_quadrature, resolve_zador, sweep_function, SweepFailure, SweepOptions, SweepOutcome, SweepRecord};


use crate::error::Result;
use crate::scalar::Scalar;

/// Runs the sweep a configuration describes.
pub fn sweep<T: Scalar>(config: &Config) -> Result<SweepOutcome<T>> {
    let f = config.function::<T>()?;
    let w = config.weight::<T>()?;
    sweep_function(&f, &w, crate::scalar::lit(config.p), &config.strategy(), &config.m_list, &config.sweep_options()?)
}
