//! Grid search over `(q, r)` by total innovation log-likelihood.

use std::thread;

use super::{filter_pass, NoiseConfig};
use crate::error::{Error, Result};
use crate::model::StateLayout;
use crate::series::ObservationSeries;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridScore {
    pub q: f64,
    pub r: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub best: NoiseConfig,
    pub best_index: usize,
    /// Scores in grid order: `q` outer, `r` inner.
    pub table: Vec<GridScore>,
}

/// Evaluates every grid point (in parallel), then picks the maximum
/// log-likelihood in grid order; ties keep the earliest point.
pub fn tune_noise(
    series: &ObservationSeries,
    layout: &StateLayout,
    q_grid: &[f64],
    r_grid: &[f64],
    p0: f64,
) -> Result<TuneOutcome> {
    if q_grid.is_empty() || r_grid.is_empty() {
        return Err(Error::Config("tuning grids must be non-empty".into()));
    }
    let points: Vec<(f64, f64)> = q_grid
        .iter()
        .flat_map(|&q| r_grid.iter().map(move |&r| (q, r)))
        .collect();
    for &(q, r) in &points {
        NoiseConfig::new(q, r, p0).map_err(|e| Error::GridPoint {
            q,
            r,
            source: Box::new(e),
        })?;
    }

    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(points.len());
    let chunk = points.len().div_ceil(workers);
    let scores: Vec<Result<GridScore>> = thread::scope(|scope| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&(q, r)| score_point(series, layout, q, r, p0))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("grid worker panicked"))
            .collect()
    });
    let table = scores.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best_index = 0;
    for (i, s) in table.iter().enumerate() {
        if s.loglik > table[best_index].loglik {
            best_index = i;
        }
    }
    let best = &table[best_index];
    Ok(TuneOutcome {
        best: NoiseConfig::new(best.q, best.r, p0)?,
        best_index,
        table,
    })
}

fn score_point(
    series: &ObservationSeries,
    layout: &StateLayout,
    q: f64,
    r: f64,
    p0: f64,
) -> Result<GridScore> {
    let wrap = |e: Error| Error::GridPoint {
        q,
        r,
        source: Box::new(e),
    };
    let noise = NoiseConfig::new(q, r, p0).map_err(wrap)?;
    let res = filter_pass(series, layout, &noise).map_err(wrap)?;
    Ok(GridScore {
        q,
        r,
        loglik: res.total_loglik,
    })
}
