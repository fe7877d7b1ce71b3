use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tangent_envelope::approximator::{build_with_options, Strategy};
use tangent_envelope::dual_ma::{dual_approximation_sweep, legendre_transform, Axis, GridFunction, SupportRestriction};
use tangent_envelope::functionals::{weighted_mass, z_zeta, zador_estimate, ZadorOptions, ZetaFunction};
use tangent_envelope::harness::{
    default_quadrature, fit_limit, parse_config, render, sweep, write_text, Config, Format, SweepOutcome,
};
use tangent_envelope::{Error, Result};

/// Circumscribed tangent-plane approximation of smooth convex functions:
/// build envelopes, measure their weighted error and sweep the budget.
///
/// Configs are TOML. Only `[function]` is required; defaults: ω ≡ 1, p = 1,
/// strategy exact_1d in 1D and global_density otherwise, m_list = 1,2,4,…,512,
/// seed 0, CSV on stdout, 4 restarts.
#[derive(Parser, Debug)]
#[command(name = "tangent-envelope", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `csv` or `record`.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "TANGENT_ENVELOPE_THREADS")]
    threads: Option<usize>,
    /// Comma-separated budgets, e.g. `1,2,4,8`.
    #[arg(long, global = true, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    /// Overrides `p`.
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Overrides `strategy` by name.
    #[arg(long, global = true)]
    strategy: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Build one envelope and print its pieces.
    Approximate {
        /// Budget (defaults to the largest entry of m_list).
        #[arg(long)]
        m: Option<usize>,
    },
    /// Weighted error of one envelope as a single sweep row.
    Error {
        #[arg(long)]
        m: Option<usize>,
    },
    /// Error table over m_list.
    Sweep,
    /// Empirical quantization constant on the unit cube.
    Zador {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 8)]
        trials: usize,
    },
    /// ∫ ζ(det D²f) with ζ(t) = t^a, and the weighted mass.
    Functional {
        /// Exponent of ζ (defaults to 1/(n+2)).
        #[arg(long)]
        zeta_power: Option<f64>,
    },
    /// Discrete Legendre transform of the sampled function.
    Legendre {
        /// Nodes per axis on both grids.
        #[arg(long, default_value_t = 129)]
        nodes: usize,
    },
    /// Sweep on the declared support region (`[dual] support`).
    DualSweep,
}

fn load(common: &Common) -> Result<Config> {
    let path = common.config.as_deref().ok_or_else(|| Error::Config {
        path: "--config".into(),
        message: "this verb needs a config file".into(),
    })?;
    let mut cfg = parse_config(path)?;
    if let Some(p) = common.p {
        cfg.p = p;
    }
    if let Some(s) = &common.strategy {
        cfg.strategy = Some(Strategy::from_name(s)?);
    }
    if let Some(ms) = &common.m_list {
        cfg.m_list = ms.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    if let Some(o) = &common.out {
        cfg.output.path = Some(o.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &Config) -> Option<&Path> {
    cfg.output.path.as_deref().map(Path::new)
}

fn json<S: Serialize>(value: &S) -> Result<String> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| Error::Parse(e.to_string()))
}

fn finish_sweep(cfg: &Config, outcome: &SweepOutcome<f64>) -> Result<ExitCode> {
    write_text(&render(&outcome.records, cfg.output.format)?, out_path(cfg))?;
    let fit = fit_limit(&outcome.records);
    log::info!(
        "constant δ = {} ({:?}), mass = {}, fitted limit {} (s = {}, degenerate = {})",
        outcome.zador.value,
        outcome.zador.provenance,
        outcome.mass,
        fit.limit,
        fit.exponent,
        fit.degenerate
    );
    match &outcome.failure {
        None => Ok(ExitCode::SUCCESS),
        Some(f) => {
            eprintln!("error: sweep aborted at m = {}: {}", f.m, f.message);
            Ok(ExitCode::from(f.exit_code as u8))
        }
    }
}

fn budget(cfg: &Config, m: Option<usize>) -> Result<usize> {
    match m {
        Some(0) => Err(Error::Config { path: "--m".into(), message: "must be at least 1".into() }),
        Some(m) => Ok(m),
        None => Ok(*cfg.m_list.iter().max().expect("validated non-empty")),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let common = &cli.common;
    match cli.verb {
        Verb::Approximate { m } => {
            let cfg = load(common)?;
            let m = budget(&cfg, m)?;
            let f = cfg.function::<f64>()?;
            let w = cfg.weight::<f64>()?;
            let a = build_with_options(&f, &w, cfg.p, m, &cfg.strategy(), cfg.seed, &cfg.build)?;
            write_text(&a.envelope.to_text(), out_path(&cfg))?;
        }
        Verb::Error { m } => {
            let mut cfg = load(common)?;
            cfg.m_list = vec![budget(&cfg, m)?];
            return finish_sweep(&cfg, &sweep(&cfg)?);
        }
        Verb::Sweep => {
            let cfg = load(common)?;
            return finish_sweep(&cfg, &sweep(&cfg)?);
        }
        Verb::DualSweep => {
            let cfg = load(common)?;
            let v = cfg.function::<f64>()?;
            let supp = SupportRestriction::new(cfg.support::<f64>()?)?;
            let outcome = dual_approximation_sweep(
                &v,
                &supp,
                cfg.p,
                &cfg.weight()?,
                &cfg.m_list,
                &cfg.strategy(),
                &cfg.sweep_options()?,
            )?;
            return finish_sweep(&cfg, &outcome);
        }
        Verb::Zador { dim, trials } => {
            let p = common.p.unwrap_or(1.0);
            let m_list = common.m_list.clone().unwrap_or_else(|| vec![16, 32, 64]);
            let est = zador_estimate(dim, p, &m_list, trials, common.seed.unwrap_or(0), &ZadorOptions::default())?;
            eprintln!(
                "δ_{{{p},{dim}}} ≈ {} ± {}",
                est.constant.value,
                est.constant.half_width.unwrap_or(f64::NAN)
            );
            let text = match common.format.unwrap_or_default() {
                Format::Record => json(&est)?,
                Format::Csv => {
                    let mut s = String::from("m,trial,rescaled\n");
                    for pt in &est.per_m {
                        for (t, r) in pt.rescaled.iter().enumerate() {
                            s.push_str(&format!("{},{},{:.16e}\n", pt.m, t, r));
                        }
                    }
                    s
                }
            };
            write_text(&text, common.out.as_deref())?;
        }
        Verb::Functional { zeta_power } => {
            let cfg = load(common)?;
            let f = cfg.function::<f64>()?;
            let w = cfg.weight::<f64>()?;
            let a = zeta_power.unwrap_or(1.0 / (f.dim() as f64 + 2.0));
            let quad = cfg.quadrature.clone().unwrap_or_else(|| default_quadrature(&f));
            let z = z_zeta(&f, &ZetaFunction::power(a)?, &quad)?;
            let mass = weighted_mass(&f, cfg.p, &w, f.domain(), &quad)?;
            #[derive(Serialize)]
            struct Out {
                zeta_power: f64,
                functional: f64,
                functional_error_bar: f64,
                outside_conc: bool,
                p: f64,
                weighted_mass: f64,
                weighted_mass_error_bar: f64,
            }
            let out = Out {
                zeta_power: a,
                functional: z.value,
                functional_error_bar: z.error_bar,
                outside_conc: z.outside_conc,
                p: cfg.p,
                weighted_mass: mass.value,
                weighted_mass_error_bar: mass.error_bar,
            };
            write_text(&json(&out)?, out_path(&cfg))?;
        }
        Verb::Legendre { nodes } => {
            let cfg = load(common)?;
            let f = cfg.function::<f64>()?;
            if !f.domain().is_box() {
                return Err(Error::Config { path: "function.domain".into(), message: "legendre needs a box".into() });
            }
            let (lo, hi) = f.domain().bounding_box();
            let axes = lo.iter().zip(&hi).map(|(&l, &h)| Axis::new(l, h, nodes)).collect::<Result<Vec<_>>>()?;
            let primal = GridFunction::sample(&f, axes)?;
            let (slo, shi) = primal.slope_range();
            let dual_axes = slo.iter().zip(&shi).map(|(&l, &h)| {
                let pad = 1e-9 * (h - l).abs().max(1.0);
                Axis::new(l - pad, h + pad, nodes)
            });
            let t = legendre_transform(&primal, dual_axes.collect::<Result<Vec<_>>>()?)?;
            write_text(&t.transform.to_text(), out_path(&cfg))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
