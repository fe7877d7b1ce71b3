//! Acceptance criteria, one `PASS`/`FAIL` line each. Runs without the
//! libtest harness so every line is printed; exits non-zero on any failure.

mod common;

use std::time::{Duration, Instant};

use common::*;
use tangent_envelope::approximator::Strategy;
use tangent_envelope::convex_core::{Domain, FunctionSpec, WeightSpec};
use tangent_envelope::dual_ma::{
    dual_approximation_sweep, legendre_transform, monge_ampere_det, monge_ampere_subgradient,
    weighted_affine_surface, Axis, GridFunction, SupportRestriction,
};
use tangent_envelope::functionals::{weighted_mass, zador_estimate, ZadorOptions};
use tangent_envelope::harness::{sweep, Config, SweepOptions, SweepOutcome};
use tangent_envelope::quadrature::QuadratureSpec;
use tangent_envelope::quantizer::brute_force_1d;
use tangent_envelope::{Function, Weight};

/// `5/(36√3)`, the constant the planar criteria are stated against.
fn stated_planar_constant() -> f64 {
    5.0 / (36.0 * 3f64.sqrt())
}

/// `5/(18√3)`: second moment of the unit-area regular hexagon about its
/// centre.
fn hexagon_second_moment() -> f64 {
    5.0 / (18.0 * 3f64.sqrt())
}

/// `∫_0^a e^{−x²/6} dx` by its alternating Taylor series.
fn gaussian_integral(a: f64) -> f64 {
    let mut term = a; // k = 0: a^{2k+1} / (6^k k!)
    let mut sum = 0.0;
    for k in 0..60 {
        sum += term / (2 * k + 1) as f64;
        term *= -a * a / (6.0 * (k + 1) as f64);
    }
    sum
}

struct Suite {
    failed: Vec<String>,
}

impl Suite {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id.to_string());
        }
    }

    fn error(&mut self, id: &str, what: impl std::fmt::Display) {
        self.line(id, false, format!("error: {what}"));
    }
}

fn config(text: &str) -> Config {
    Config::from_toml_str(text).expect("acceptance config parses")
}

const UNIT_INTERVAL: &str = r#"
[function]
catalog_id = "quadratic"
parameters = { a = [[1.0]] }
domain = { kind = "box", lower = [0.0], upper = [1.0] }
"#;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn worst_rel(out: &SweepOutcome<f64>, target: f64) -> f64 {
    out.records.iter().map(|r| rel(r.rescaled, target)).fold(0.0, f64::max)
}

fn criterion_1(s: &mut Suite) {
    // brute-force oracle for δ_{1,1}: m²·(optimal objective) on [0,1]
    let oracle = brute_force_1d(0.0, 1.0, &|_: f64| 1.0, 4, 1.0, 1e-10).map(|ps| 16.0 * ps.objective);
    let cfg = config(&format!("p = 1.0\nstrategy = \"exact_1d\"\nm_list = [1,2,4,8,16,32,64,128,256,512]\n{UNIT_INTERVAL}"));
    let t = Instant::now();
    let out = sweep::<f64>(&cfg);
    let elapsed = t.elapsed();
    match (oracle, out) {
        (Ok(delta), Ok(out)) => {
            let worst = worst_rel(&out, 1.0 / 24.0);
            let theory_ok = out.records.iter().all(|r| rel(r.theory, 1.0 / 24.0) <= 1e-12);
            let pass = out.is_complete()
                && out.records.len() == 10
                && worst <= 1e-9
                && theory_ok
                && rel(delta, 1.0 / 12.0) <= 1e-6
                && elapsed < Duration::from_secs(1);
            s.line(
                "1",
                pass,
                format!(
                    "1D exact law: max rel |rescaled − 1/24| = {worst:.2e} over m = 1..512; brute-force δ = {delta:.10}; {:.3} s",
                    elapsed.as_secs_f64()
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => s.error("1", e),
    }
}

fn criterion_2(s: &mut Suite) {
    let t = Instant::now();
    let exact = sweep::<f64>(&config(&format!(
        "p = 2.0\nstrategy = \"exact_1d\"\nm_list = [1,2,4,8,16,32,64,128,256,512]\n{UNIT_INTERVAL}"
    )));
    let lloyd = sweep::<f64>(&config(&format!("p = 2.0\nstrategy = \"global_density\"\nm_list = [256]\n{UNIT_INTERVAL}")));
    let elapsed = t.elapsed();
    match (exact, lloyd) {
        (Ok(exact), Ok(lloyd)) => {
            let worst = worst_rel(&exact, 1.0 / 320.0);
            let lr = lloyd.records.first().map(|r| rel(r.rescaled, 1.0 / 320.0)).unwrap_or(f64::INFINITY);
            let pass = exact.is_complete() && worst <= 1e-9 && lr <= 0.01 && elapsed < Duration::from_secs(10);
            s.line(
                "2",
                pass,
                format!(
                    "1D p = 2: exact max rel err vs 1/320 = {worst:.2e}; global_density at m = 256 off by {:.3}%; {:.2} s",
                    100.0 * lr,
                    elapsed.as_secs_f64()
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => s.error("2", e),
    }
}

fn criterion_3(s: &mut Suite) {
    let oracle_mass = gaussian_integral(1.0);
    let oracle_theory = oracle_mass.powi(3) / 24.0;
    let frozen = 0.035_399_534_354_647_647;
    let cfg = config(&format!(
        "p = 1.0\nstrategy = \"exact_1d\"\nm_list = [512]\nweight = {{ catalog_id = \"exp_neg\", parameters = {{ rate = 1.0 }} }}\n{UNIT_INTERVAL}"
    ));
    let t = Instant::now();
    match sweep::<f64>(&cfg) {
        Ok(out) => {
            let elapsed = t.elapsed();
            let r = out.records[0];
            let pass = out.is_complete()
                && (0.98..=1.02).contains(&r.ratio)
                && rel(r.theory, oracle_theory) <= 1e-10
                && rel(oracle_theory, frozen) <= 1e-12
                && elapsed < Duration::from_secs(30);
            s.line(
                "3",
                pass,
                format!(
                    "1D weighted: ratio at m = 512 = {:.6}; theory {:.12} vs series oracle {:.12}; {:.2} s",
                    r.ratio,
                    r.theory,
                    oracle_theory,
                    elapsed.as_secs_f64()
                ),
            );
        }
        Err(e) => s.error("3", e),
    }
}

fn criterion_4(s: &mut Suite) {
    let cfg = config(
        r#"
p = 1.0
strategy = "global_density"
m_list = [1024]
seed = 1
[build]
restarts = 4
[function]
catalog_id = "quadratic"
parameters = { a = [[1.0, 0.0], [0.0, 1.0]] }
domain = { kind = "box", lower = [0.0, 0.0], upper = [1.0, 1.0] }
"#,
    );
    let t = Instant::now();
    match sweep::<f64>(&cfg) {
        Ok(out) => {
            let elapsed = t.elapsed();
            let fast = elapsed < Duration::from_secs(120);
            let r = out.records[0];
            let stated = stated_planar_constant() / 2.0 * out.mass.powi(2);
            let ratio = r.rescaled / stated;
            s.line(
                "4",
                out.is_complete() && (0.94..=1.06).contains(&ratio) && fast,
                format!(
                    "2D law: ratio at m = 1024 against δ = 5/(36√3) is {ratio:.4} (rescaled {:.6}, theory {stated:.6}); {:.1} s",
                    r.rescaled,
                    elapsed.as_secs_f64()
                ),
            );
            let hex = hexagon_second_moment() / 2.0 * out.mass.powi(2);
            let ratio = r.rescaled / hex;
            s.line(
                "4 (companion)",
                out.is_complete() && (0.94..=1.06).contains(&ratio) && fast,
                format!("2D law against the hexagon constant δ = 5/(18√3): ratio {ratio:.4} (theory {hex:.6})"),
            );
        }
        Err(e) => s.error("4", e),
    }
}

fn criterion_5(s: &mut Suite) {
    let opts = ZadorOptions::default();
    let t = Instant::now();
    match zador_estimate::<f64>(1, 1.0, &[16, 32, 64], 8, 5, &opts) {
        Ok(est) => {
            let d = est.constant.value;
            s.line(
                "5a",
                rel(d, 1.0 / 12.0) <= 0.03 && t.elapsed() < Duration::from_secs(120),
                format!(
                    "Zador n = 1, p = 1 at m = 64 (8 trials): {d:.6} vs 1/12, off by {:.3}%; {:.1} s",
                    100.0 * rel(d, 1.0 / 12.0),
                    t.elapsed().as_secs_f64()
                ),
            );
        }
        Err(e) => s.error("5a", e),
    }
    let t = Instant::now();
    match zador_estimate::<f64>(2, 1.0, &[1024], 8, 5, &opts) {
        Ok(est) => {
            let elapsed = t.elapsed();
            let fast = elapsed < Duration::from_secs(120);
            let d = est.constant.value;
            let hw = est.constant.half_width.unwrap_or(f64::NAN);
            let stated = stated_planar_constant();
            s.line(
                "5b",
                rel(d, stated) <= 0.05 && fast,
                format!(
                    "Zador n = 2, p = 1 at m = 1024 (8 trials): {d:.6} ± {hw:.1e} vs 5/(36√3) = {stated:.6}, off by {:.1}%; {:.1} s",
                    100.0 * rel(d, stated),
                    elapsed.as_secs_f64()
                ),
            );
            let hex = hexagon_second_moment();
            s.line(
                "5b (companion)",
                rel(d, hex) <= 0.05 && fast,
                format!("same estimate vs 5/(18√3) = {hex:.6}: off by {:.2}%", 100.0 * rel(d, hex)),
            );
        }
        Err(e) => s.error("5b", e),
    }
}

fn criterion_6(s: &mut Suite) {
    let t = Instant::now();
    let circ = circumscription_sweep(12);
    let boxes: Vec<Function> = c2_plus_catalog().into_iter().filter(|f| f.domain().is_box()).collect();
    let greedy_ok = boxes.iter().all(|f| {
        let e = greedy_errors(f, &[1, 2, 3, 5, 8, 13, 21, 34]);
        e.windows(2).all(|w| w[1] <= w[0])
    });
    let mut cov = 0.0f64;
    let mut shift = 0.0f64;
    for f in &boxes {
        for st in [Strategy::GlobalDensity, Strategy::UniformGrid] {
            cov = cov.max(affine_covariance_defect(f, &st, 9));
        }
        for st in strategies_for(f.dim()) {
            shift = shift.max(vertical_shift_defect(f, &st, 7, 2.5));
        }
    }
    let budget_bad = budget_violations(100, 2024);
    let (circ_ok, circ_msg) = match circ {
        Ok((worst, pairs, rejected)) => (
            true,
            format!("max violation {worst:.1e} over {pairs} pairs ({rejected} non-C²₊ pairs rejected up front)"),
        ),
        Err(e) => (false, e),
    };
    let pass = circ_ok && greedy_ok && cov <= 1e-6 && shift <= 1e-12 && budget_bad == 0;
    s.line(
        "6",
        pass,
        format!(
            "properties: {circ_msg}; greedy monotone {greedy_ok}; affine covariance {cov:.1e}; vertical shift {shift:.1e}; budget violations {budget_bad}/100; {:.1} s",
            t.elapsed().as_secs_f64()
        ),
    );
}

fn criterion_7(s: &mut Suite) {
    let half = |a: f64, b: f64| function(FunctionSpec::half_norm_squared(interval(a, b)));
    let axis = |a: f64, b: f64, k: usize| Axis::new(a, b, k).unwrap();

    // involution at 512 nodes on interior nodes
    let u = half(-1.0, 1.0);
    let primal = GridFunction::sample(&u, vec![axis(-1.0, 1.0, 512)]).unwrap();
    let star = legendre_transform(&primal, vec![axis(-1.0, 1.0, 512)]).unwrap().transform;
    let back = legendre_transform(&star, vec![axis(-1.0, 1.0, 512)]).unwrap().transform;
    let involution = (1..511).map(|k| (back.values()[k] - primal.values()[k]).abs()).fold(0.0, f64::max);

    // quartic against (3/4) y^{4/3}
    let q = function(FunctionSpec::quartic(0.0, interval(-1.0, 1.0)));
    let qg = GridFunction::sample(&q, vec![axis(-1.0, 1.0, 2001)]).unwrap();
    let qt = legendre_transform(&qg, vec![axis(0.0, 1.0, 501)]).unwrap().transform;
    let quartic = (0..qt.len())
        .map(|k| (qt.values()[k] - 0.75 * qt.node(k)[0].powf(4.0 / 3.0)).abs())
        .fold(0.0, f64::max);

    // Monge–Ampère measure two ways
    let mut ma = 0.0f64;
    for f in c2_plus_catalog() {
        let quad = if f.domain().is_box() { QuadratureSpec::tensor_grid(64) } else { QuadratureSpec::monte_carlo(400_000, 9) };
        let det = monge_ampere_det(&f, f.domain(), &quad).unwrap().value;
        let sub = monge_ampere_subgradient(&f, f.domain(), 400).unwrap().value;
        ma = ma.max(rel(sub, det));
    }

    // affine surface as a weighted mass
    let mut ident = 0.0f64;
    let exp_w = Weight::from_spec(&WeightSpec::exp_neg(1.0), 1).unwrap();
    for f in c2_plus_catalog().into_iter().filter(|f| f.domain().is_box()) {
        let w = if f.dim() == 1 { exp_w.clone() } else { Weight::from_spec(&WeightSpec::exp_neg(1.0), 2).unwrap() };
        let supp = SupportRestriction::new(f.domain().clone()).unwrap();
        let quad = QuadratureSpec::tensor_grid(32);
        let a = weighted_affine_surface(&f, &supp, &quad).unwrap().value;
        let m = weighted_mass(&f, 1.0, &w, supp.region(), &quad).unwrap().value;
        ident = ident.max(rel(a, m));
    }

    // sweep on the support [−1, 1] of a quadratic defined on [−2, 2]
    let v = half(-2.0, 2.0);
    let supp = SupportRestriction::new(Domain::interval(-1.0, 1.0).unwrap()).unwrap();
    let t = Instant::now();
    let unweighted =
        dual_approximation_sweep(&v, &supp, 1.0, &Weight::one(), &[512], &Strategy::Exact1d, &SweepOptions::default());
    let weighted = dual_approximation_sweep(&v, &supp, 1.0, &exp_w, &[512], &Strategy::Exact1d, &SweepOptions::default());
    match (unweighted, weighted) {
        (Ok(a), Ok(b)) => {
            let r = a.records[0];
            let pass = involution <= 1e-4
                && quartic <= 1e-3
                && ma <= 0.02
                && ident <= 1e-12
                && (a.mass - 2.0).abs() <= 1e-12
                && rel(r.theory, 1.0 / 3.0) <= 1e-12
                && (0.98..=1.02).contains(&r.ratio);
            s.line(
                "7",
                pass,
                format!(
                    "dual: involution {involution:.1e}; quartic {quartic:.1e}; MA det vs subgradient {:.3}%; affine surface identity {ident:.1e}; sweep on [−1,1] mass {:.12}, ratio at m = 512 = {:.6}; {:.2} s",
                    100.0 * ma,
                    a.mass,
                    r.ratio,
                    t.elapsed().as_secs_f64()
                ),
            );
            let oracle = (2.0 * gaussian_integral(1.0)).powi(3) / 24.0;
            let rb = b.records[0];
            s.line(
                "7 (companion)",
                (0.98..=1.02).contains(&rb.ratio) && rel(rb.theory, oracle) <= 1e-10,
                format!(
                    "dual sweep with ω = e^{{−t}}: theory {:.12} vs series oracle {oracle:.12}, ratio {:.6}",
                    rb.theory, rb.ratio
                ),
            );
        }
        (Err(e), _) | (_, Err(e)) => s.error("7", e),
    }
}

fn main() {
    // `cargo test` passes libtest flags; a listing request gets an empty list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut s = Suite { failed: Vec::new() };
    criterion_1(&mut s);
    criterion_2(&mut s);
    criterion_3(&mut s);
    criterion_6(&mut s);
    criterion_7(&mut s);
    criterion_4(&mut s);
    criterion_5(&mut s);
    if s.failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: {} failing: {}", s.failed.len(), s.failed.join(", "));
        std::process::exit(1);
    }
}
