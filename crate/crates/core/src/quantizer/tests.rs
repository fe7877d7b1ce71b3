use super::*;
use proptest::prelude::*;
use rand::Rng;

fn unit(n: usize) -> Region<f64> {
    Region::from_domain(&Domain::unit_box(n))
}

fn uniform(_: &[f64]) -> f64 {
    1.0
}

#[test]
fn whiten_examples() {
    let id = QuadraticForm::<f64>::identity(2);
    assert_eq!(whiten(&id).as_slice(), Matrix::<f64>::identity(2).as_slice());
    let d = whiten_matrix(&Matrix::diagonal(&[4.0, 1.0])).unwrap();
    assert_eq!(d.as_slice(), &[2.0, 0.0, 0.0, 1.0]);
    let a = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
    let lt = whiten_matrix(&a).unwrap();
    let q: QuadraticForm<f64> = QuadraticForm::new(a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let y = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
        let mut z = [0.0; 2];
        lt.mul_vec(&y, &mut z);
        assert!((z[0] * z[0] + z[1] * z[1] - q.eval(&y)).abs() < 1e-12 * q.eval(&y).max(1.0));
    }
    assert!(matches!(whiten_matrix(&Matrix::diagonal(&[1.0, -1.0])), Err(Error::InvalidMetric(_))));
}

#[test]
fn two_points_on_interval() {
    let cfg = QuantizerConfig::new(2, 1.0, QuadraticForm::identity(1), 11);
    let s = quantize(&unit(1), &uniform, &cfg).unwrap();
    let mut xs: Vec<f64> = s.points.iter().map(|p| p[0]).collect();
    xs.sort_by(f64::total_cmp);
    assert!((xs[0] - 0.25).abs() < 2e-3 && (xs[1] - 0.75).abs() < 2e-3, "{xs:?}");
    assert!((s.objective - 1.0 / 48.0).abs() < 1e-4);
}

#[test]
fn single_point_on_interval() {
    let cfg = QuantizerConfig::new(1, 1.0, QuadraticForm::identity(1), 5);
    let s = quantize(&unit(1), &uniform, &cfg).unwrap();
    assert!((s.points[0][0] - 0.5).abs() < 1e-3);
    assert!((s.objective - 1.0 / 12.0).abs() < 1e-4);
}

#[test]
fn objective_trace_is_monotone_and_matches_cloud() {
    for p in [0.5, 1.0, 2.0] {
        let region = unit(2);
        let cloud = SampleCloud::draw(&region, &|x: &[f64]| 1.0 + x[0], 5000, 9).unwrap();
        let cfg = QuantizerConfig { max_iterations: 40, ..QuantizerConfig::new(17, p, QuadraticForm::identity(2), 1) };
        let s = quantize_on_cloud(&region, &cloud, &cfg).unwrap();
        assert!(s.trace.windows(2).all(|w| w[1] <= w[0]), "p = {p}: {:?}", s.trace);
        assert_eq!(s.objective, cloud_objective(&cloud, &cfg.metric, p, &s.points));
        assert!(s.points.iter().all(|x| region.contains(x)));
    }
}

#[test]
fn mirrored_cloud_gives_same_objective() {
    let region = unit(1);
    let cloud = SampleCloud::draw(&region, &uniform, 4000, 21).unwrap();
    let mirrored: Vec<f64> = cloud.points_flat().iter().map(|x| 1.0 - x).collect();
    let mirror = SampleCloud::from_parts(1, mirrored, cloud.weights().to_vec()).unwrap();
    let cfg = QuantizerConfig::new(5, 1.0, QuadraticForm::identity(1), 2);
    let a = quantize_on_cloud(&region, &cloud, &cfg).unwrap();
    let b = quantize_on_cloud(&region, &mirror, &cfg).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-6);
}

#[test]
fn superset_does_not_increase_objective() {
    let region = unit(2);
    let cloud = SampleCloud::draw(&region, &uniform, 4000, 4).unwrap();
    let cfg = QuantizerConfig::new(8, 1.0, QuadraticForm::identity(2), 3);
    let s = quantize_on_cloud(&region, &cloud, &cfg).unwrap();
    let mut bigger = s.points.clone();
    bigger.push(vec![0.1, 0.9]);
    bigger.push(vec![0.5, 0.5]);
    assert!(cloud_objective(&cloud, &cfg.metric, 1.0, &bigger) <= s.objective);
}

#[test]
fn whitened_equivalence_for_diagonal_metric() {
    // metric diag(4, 1) on [0,1]² versus identity on [0,2]×[0,1]
    let a = QuadraticForm::new(Matrix::diagonal(&[4.0, 1.0])).unwrap();
    let r1 = unit(2);
    let r2 = Region::from_domain(&Domain::new_box(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap());
    let cfg1 = QuantizerConfig { cloud_size: Some(4096), ..QuantizerConfig::new(6, 1.0, a, 8) };
    let cfg2 = QuantizerConfig { metric: QuadraticForm::identity(2), ..cfg1.clone() };
    let s1 = quantize(&r1, &uniform, &cfg1).unwrap();
    let s2 = quantize(&r2, &uniform, &cfg2).unwrap();
    // det(Lᵀ) = 2: the transformed problem integrates over twice the volume
    assert!((s1.objective * 2.0 - s2.objective).abs() < 1e-6 * s2.objective);
    for (x, y) in s1.points.iter().zip(&s2.points) {
        assert!((2.0 * x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
    }
}

#[test]
fn quantizer_objective_examples() {
    let id1 = QuadraticForm::identity(1);
    let e = quantizer_objective(&Domain::unit_box(1), &uniform, &id1, 1.0, &[vec![0.5]], &QuadratureSpec::exact_1d())
        .unwrap();
    assert!((e.value - 1.0 / 12.0).abs() < 1e-12);
    let id2 = QuadraticForm::identity(2);
    let e2 = quantizer_objective(
        &Domain::unit_box(2),
        &uniform,
        &id2,
        1.0,
        &[vec![0.5, 0.5]],
        &QuadratureSpec::tensor_grid(8),
    )
    .unwrap();
    assert!((e2.value - 1.0 / 6.0).abs() < 1e-12);
    let mut prev = f64::INFINITY;
    for k in [2usize, 4, 8, 10] {
        let grid: Vec<Vec<f64>> = (0..k * k * k)
            .map(|i| vec![(i / (k * k)) as f64, (i / k % k) as f64, (i % k) as f64].iter().map(|&c| (c + 0.5) / k as f64).collect())
            .collect();
        let v = quantizer_objective(&Domain::unit_box(3), &uniform, &QuadraticForm::identity(3), 1.0, &grid, &QuadratureSpec::monte_carlo(20_000, 1))
            .unwrap()
            .value;
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < 3.0 / 1200.0 * 1.1);
}

#[test]
fn brute_force_examples() {
    let u = |_: f64| 1.0;
    let one = brute_force_1d(0.0, 1.0, &u, 1, 1.0, 1e-4).unwrap();
    assert!((one.points[0][0] - 0.5).abs() < 1e-4);
    assert!((one.objective - 1.0 / 12.0).abs() < 1e-8);
    let two = brute_force_1d(0.0, 1.0, &u, 2, 1.0, 1e-4).unwrap();
    assert!((two.points[0][0] - 0.25).abs() < 1e-4 && (two.points[1][0] - 0.75).abs() < 1e-4);
    assert!((two.objective - 1.0 / 48.0).abs() < 1e-8);
    let quartic = brute_force_1d(0.0, 1.0, &u, 2, 2.0, 1e-4).unwrap();
    assert!((quartic.points[0][0] - 0.25).abs() < 1e-4);
    assert!((quartic.objective - 7.8125e-4).abs() < 1e-9);
    assert!(brute_force_1d(0.0, 1.0, &u, 5, 1.0, 1e-3).is_err());
}

#[test]
fn closed_form_constant_matches_brute_force() {
    use crate::functionals::zador_closed_form_1d;
    let u = |_: f64| 1.0;
    for p in [0.5, 1.0, 2.0] {
        let delta = zador_closed_form_1d(p).unwrap().value;
        for m in 1..=4usize {
            let s = brute_force_1d(0.0, 1.0, &u, m, p, 1e-4).unwrap();
            let rescaled = (m as f64).powf(2.0 * p) * s.objective;
            assert!((rescaled - delta).abs() < 1e-6 * delta, "p={p} m={m}: {rescaled} vs {delta}");
        }
    }
}

#[test]
fn lloyd_within_two_percent_of_brute_force() {
    let u = |_: f64| 1.0;
    for p in [1.0, 2.0] {
        for m in 1..=4usize {
            let oracle = brute_force_1d(0.0, 1.0, &u, m, p, 1e-4).unwrap();
            let cfg = QuantizerConfig::new(m, p, QuadraticForm::identity(1), 13);
            let s = quantize(&unit(1), &uniform, &cfg).unwrap();
            assert!(s.objective <= 1.02 * oracle.objective, "p={p} m={m}");
        }
    }
}

#[test]
fn zero_density_is_rejected() {
    let cfg = QuantizerConfig::new(3, 1.0, QuadraticForm::identity(1), 0);
    assert!(matches!(quantize(&unit(1), &|_: &[f64]| 0.0, &cfg), Err(Error::InvalidArgument(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn lloyd_is_monotone(seed in 0u64..1000, m in 1usize..12, p in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0])) {
        let region = unit(2);
        let cloud = SampleCloud::draw(&region, &|x: &[f64]| 0.2 + x[0] * x[1], 2000, seed).unwrap();
        let cfg = QuantizerConfig { max_iterations: 25, ..QuantizerConfig::new(m, p, QuadraticForm::identity(2), seed) };
        let s = quantize_on_cloud(&region, &cloud, &cfg).unwrap();
        prop_assert!(s.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(s.points.iter().all(|x| region.contains(x)));
        prop_assert_eq!(s.points.len(), m);
    }
}
