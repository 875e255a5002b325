use nalgebra::{DMatrix, DVector};

use super::{predict, update, Belief, NoiseConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{build_observation_matrix, StateLayout};
use crate::series::ObservationSeries;

/// One forward step at measurement index `n`.
///
/// When the sample pair `(y[n-1], y[n])` spans a contiguity break the update
/// is skipped: `filtered == predicted`, `innovation` is `None` and the
/// log-likelihood increment is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub n: usize,
    pub predicted: Belief,
    pub filtered: Belief,
    pub innovation: Option<DVector<f64>>,
    pub innovation_cov: Option<DMatrix<f64>>,
    pub loglik: f64,
}

impl FilterStep {
    pub fn updated(&self) -> bool {
        self.innovation.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    pub initial: Belief,
    /// Steps for measurement indices `1..N`; index 0 only seeds `y[n-1]`.
    pub steps: Vec<FilterStep>,
    pub total_loglik: f64,
}

impl FilterResult {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.n).collect()
    }

    pub fn filtered(&self) -> Vec<Belief> {
        self.steps.iter().map(|s| s.filtered.clone()).collect()
    }

    pub fn last_filtered(&self) -> Option<&Belief> {
        self.steps.last().map(|s| &s.filtered)
    }
}

/// Streaming forward filter. The first pushed sample only primes the lag-1
/// regressor; every later sample produces a [`FilterStep`].
#[derive(Debug, Clone)]
pub struct CausalFilter {
    layout: StateLayout,
    noise: NoiseConfig,
    belief: Belief,
    previous: Option<Vec<f64>>,
}

impl CausalFilter {
    pub fn new(layout: StateLayout, noise: NoiseConfig) -> Result<Self> {
        let belief = noise.initial_belief(layout.dim())?;
        Ok(Self {
            layout,
            noise,
            belief,
            previous: None,
        })
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    /// Latest belief (filtered, or the prior before any update).
    pub fn belief(&self) -> &Belief {
        &self.belief
    }

    pub fn push(&mut self, y: &[f64], contiguous: bool) -> Result<Option<FilterStep>> {
        let g = self.layout.node_count();
        if y.len() != g {
            return Err(Error::DimensionMismatch {
                context: "measurement channels",
                expected: g,
                actual: y.len(),
            });
        }
        let Some(prev) = self.previous.replace(y.to_vec()) else {
            return Ok(None);
        };
        let predicted = predict(&self.belief, self.noise.q)?;
        let step = if contiguous {
            let h = build_observation_matrix(y, &prev, &self.layout)?;
            let y = DVector::from_column_slice(y);
            let u = update(&predicted, &h, &y, self.noise.r)?;
            if !linalg::is_healthy_covariance(&u.belief.cov) {
                return Err(Error::Singular(format!(
                    "filtered covariance at n={} lost symmetry or positive semidefiniteness",
                    predicted.n
                )));
            }
            FilterStep {
                n: predicted.n,
                filtered: u.belief,
                predicted,
                innovation: Some(u.innovation),
                innovation_cov: Some(u.innovation_cov),
                loglik: u.loglik,
            }
        } else {
            FilterStep {
                n: predicted.n,
                filtered: predicted.clone(),
                predicted,
                innovation: None,
                innovation_cov: None,
                loglik: 0.0,
            }
        };
        self.belief = step.filtered.clone();
        Ok(Some(step))
    }
}

/// Runs the forward filter over a whole series.
pub fn filter_pass(
    series: &ObservationSeries,
    layout: &StateLayout,
    noise: &NoiseConfig,
) -> Result<FilterResult> {
    check_series(series, layout)?;
    let mut filter = CausalFilter::new(layout.clone(), noise.clone())?;
    let initial = filter.belief().clone();
    let mut steps = Vec::with_capacity(series.len() - 1);
    for n in 0..series.len() {
        if let Some(step) = filter.push(series.row(n), series.contiguous_with_previous(n))? {
            steps.push(step);
        }
    }
    let total_loglik = steps.iter().map(|s| s.loglik).sum();
    Ok(FilterResult {
        initial,
        steps,
        total_loglik,
    })
}

pub(crate) fn check_series(series: &ObservationSeries, layout: &StateLayout) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: series.len(),
        });
    }
    if series.channels() != layout.node_count() {
        return Err(Error::DimensionMismatch {
            context: "series channels vs. graph nodes",
            expected: layout.node_count(),
            actual: series.channels(),
        });
    }
    Ok(())
}
