#![allow(dead_code)]

pub mod fixtures;

use causal_twin::model::{build_observation_matrix, layout_for, GraphSpec, StateLayout};
use causal_twin::sim::{random_stable_factors, simulate, CoefficientSchedule, Simulation, SvarSpec};
use causal_twin::{Belief, ObservationSeries};
use nalgebra::{DMatrix, DVector};

pub const SEED: u64 = 20040212;

pub fn layout(g: usize) -> StateLayout {
    layout_for(GraphSpec::with_nodes(g).unwrap()).unwrap()
}

/// Prior-regularized batch least squares through sample `end`, solved from
/// the normal equations
/// `(I/p0 + sum H'H/r) x = x0/p0 + sum H'y/r`
/// over the contiguous samples `1..=end`.
pub fn batch_least_squares(
    series: &ObservationSeries,
    layout: &StateLayout,
    p0: f64,
    r: f64,
    end: usize,
) -> DVector<f64> {
    let dim = layout.dim();
    let mut lhs = DMatrix::identity(dim, dim) / p0;
    let mut rhs = DVector::zeros(dim);
    for n in 1..=end {
        if !series.contiguous_with_previous(n) {
            continue;
        }
        let h = build_observation_matrix(series.row(n), series.row(n - 1), layout).unwrap();
        let y = DVector::from_column_slice(series.row(n));
        lhs += h.transpose() * &h / r;
        rhs += h.transpose() * y / r;
    }
    lhs.lu().solve(&rhs).expect("normal equations are positive definite")
}

pub fn lagged_only(g: usize, n: usize, scale: f64, seed: u64) -> Simulation {
    let base = random_stable_factors(g, 0.0, 0.5, 0.9, seed).unwrap();
    simulate(&SvarSpec::new(CoefficientSchedule::Constant(base), scale, n, seed)).unwrap()
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn max_abs_diff(a: &[Belief], b: &[Belief]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (&x.mean - &y.mean).amax().max((&x.cov - &y.cov).amax()))
        .fold(0.0, f64::max)
}
