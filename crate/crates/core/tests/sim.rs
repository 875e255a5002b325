mod common;

use causal_twin::model::CausalFactors;
use causal_twin::sim::{reduced_form, simulate, validate, CoefficientSchedule, NoiseKind, SvarSpec};
use common::SEED;
use nalgebra::{DMatrix, DVector};

fn factors(a0: &[f64], a1: &[f64]) -> CausalFactors {
    CausalFactors::new(DMatrix::from_row_slice(2, 2, a0), DMatrix::from_row_slice(2, 2, a1)).unwrap()
}

#[test]
fn white_noise_has_identity_covariance() {
    let spec = SvarSpec::new(CoefficientSchedule::Constant(CausalFactors::zeros(3).unwrap()), 1.0, 10_000, SEED);
    let s = simulate(&spec).unwrap().series;
    let n = s.len() as f64;
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = (s.column(i), s.column(j));
            let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
            let c = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((c - target).abs() <= 0.05, "cov[{i}][{j}] = {c}");
        }
    }
}

#[test]
fn structural_residuals_are_the_noise_draws() {
    for kind in [NoiseKind::Gaussian, NoiseKind::Laplace] {
        let f = factors(&[0.0, 0.4, -0.2, 0.0], &[0.0, 0.3, 0.25, 0.0]);
        let mut spec = SvarSpec::new(
            CoefficientSchedule::Step { base: f.clone(), at: 300, after: factors(&[0.0; 4], &[0.0, -0.3, 0.1, 0.0]) },
            0.7,
            600,
            SEED,
        );
        spec.noise_kind = kind;
        let sim = simulate(&spec).unwrap();
        for n in 1..sim.series.len() {
            let t = &sim.truth[n];
            let y = DVector::from_column_slice(sim.series.row(n));
            let yp = DVector::from_column_slice(sim.series.row(n - 1));
            let e = (DMatrix::identity(2, 2) - t.a0()) * y - t.a1() * yp;
            let drawn = DVector::from_column_slice(&sim.noise[n]);
            assert!((e - drawn).amax() <= 1e-10, "n = {n}");
        }
    }
}

#[test]
fn lag_one_regression_recovers_reduced_form() {
    let f = factors(&[0.0, 0.5, 0.0, 0.0], &[0.0, 0.2, 0.3, 0.0]);
    let b = reduced_form(&f).unwrap();
    let spec = SvarSpec::new(CoefficientSchedule::Constant(f), 1.0, 20_000, SEED);
    let s = simulate(&spec).unwrap().series;
    let n = s.len();
    let x = DMatrix::from_fn(n - 1, 2, |i, j| s.row(i)[j]);
    let y = DMatrix::from_fn(n - 1, 2, |i, j| s.row(i + 1)[j]);
    let xtx = x.transpose() * &x;
    let est = xtx.lu().solve(&(x.transpose() * y)).unwrap().transpose();
    assert!((est - b).amax() <= 0.05);
}

#[test]
fn laplace_noise_has_requested_scale() {
    let mut spec = SvarSpec::new(CoefficientSchedule::Constant(CausalFactors::zeros(2).unwrap()), 2.0, 20_000, SEED);
    spec.noise_kind = NoiseKind::Laplace;
    let s = simulate(&spec).unwrap().series;
    let col = s.column(0);
    let var = col.iter().map(|v| v * v).sum::<f64>() / col.len() as f64;
    assert!((var.sqrt() - 2.0).abs() <= 0.05, "sd {}", var.sqrt());
    let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / col.len() as f64;
    assert!(m4 / (var * var) > 5.0);
}

#[test]
fn unstable_schedule_segment_is_reported() {
    let ok = factors(&[0.0; 4], &[0.0, 0.6, 0.6, 0.0]);
    let bad = factors(&[0.0; 4], &[0.0, 1.2, 1.2, 0.0]);
    let spec = SvarSpec::new(CoefficientSchedule::Step { base: ok, at: 50, after: bad }, 1.0, 100, 1);
    let report = validate(&spec);
    assert!(!report.passed());
    assert!(report.summary().contains("1.2"), "{}", report.summary());
    assert!(simulate(&spec).is_err());
}
