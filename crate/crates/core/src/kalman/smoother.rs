//! Rauch-Tung-Striebel smoothing and its fixed-lag streaming variant.
//!
//! With identity transition the backward recursion is
//!
//! ```text
//! C[n]      = P_f[n] P_p[n+1]^+
//! m_s[n]    = m_f[n] + C[n] (m_s[n+1] - m_p[n+1])
//! P_s[n]    = P_f[n] + C[n] (P_s[n+1] - P_p[n+1]) C[n]^T
//! ```
//!
//! where `^+` is an eigenvalue-thresholded pseudo-inverse, so a singular
//! predicted covariance (possible with `q = 0`) does not abort the pass.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::filter::check_series;
use super::{Belief, CausalFilter, FilterResult, FilterStep, NoiseConfig};
use crate::error::{Error, Result};
use crate::linalg::{pinv_symmetric, symmetrize, PINV_RELATIVE_TOLERANCE};
use crate::model::StateLayout;
use crate::series::ObservationSeries;

fn smoother_gain(filtered: &Belief, next_predicted: &Belief) -> DMatrix<f64> {
    &filtered.cov * pinv_symmetric(&next_predicted.cov, PINV_RELATIVE_TOLERANCE)
}

fn backward_step(
    filtered: &Belief,
    next_predicted: &Belief,
    next_smoothed: &Belief,
    gain: &DMatrix<f64>,
) -> Belief {
    let mean = &filtered.mean + gain * (&next_smoothed.mean - &next_predicted.mean);
    let mut cov = &filtered.cov + gain * (&next_smoothed.cov - &next_predicted.cov) * gain.transpose();
    symmetrize(&mut cov);
    Belief {
        n: filtered.n,
        mean,
        cov,
    }
}

/// Smoothed beliefs for every step of `result`, in forward order.
pub fn rts_smooth(result: &FilterResult) -> Result<Vec<Belief>> {
    let steps = &result.steps;
    let Some(last) = steps.last() else {
        return Err(Error::SeriesTooShort {
            required: 1,
            actual: 0,
        });
    };
    let mut smoothed = vec![last.filtered.clone(); steps.len()];
    for t in (0..steps.len() - 1).rev() {
        let gain = smoother_gain(&steps[t].filtered, &steps[t + 1].predicted);
        smoothed[t] = backward_step(
            &steps[t].filtered,
            &steps[t + 1].predicted,
            &smoothed[t + 1],
            &gain,
        );
    }
    Ok(smoothed)
}

struct WindowEntry {
    step: FilterStep,
    /// Gain linking this step to the next one, known once the next step exists.
    gain: Option<DMatrix<f64>>,
}

/// Streaming smoother that emits the estimate for index `n` once data
/// through `n + depth` has been filtered. The emitted value equals the RTS
/// estimate of the series truncated at `n + depth`.
pub struct FixedLagSmoother {
    filter: CausalFilter,
    depth: usize,
    window: VecDeque<WindowEntry>,
}

impl FixedLagSmoother {
    pub fn new(layout: StateLayout, noise: NoiseConfig, depth: usize) -> Result<Self> {
        Ok(Self {
            filter: CausalFilter::new(layout, noise)?,
            depth,
            window: VecDeque::with_capacity(depth + 1),
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Feeds one sample; returns the delayed estimate when one becomes due.
    pub fn push(&mut self, y: &[f64], contiguous: bool) -> Result<Option<Belief>> {
        let Some(step) = self.filter.push(y, contiguous)? else {
            return Ok(None);
        };
        if let Some(back) = self.window.back_mut() {
            back.gain = Some(smoother_gain(&back.step.filtered, &step.predicted));
        }
        self.window.push_back(WindowEntry { step, gain: None });
        if self.window.len() <= self.depth {
            return Ok(None);
        }
        let out = self.smooth_front();
        self.window.pop_front();
        Ok(Some(out))
    }

    /// Flushes the estimates still held in the window, each conditioned on
    /// all data seen so far.
    pub fn finish(mut self) -> Vec<Belief> {
        let mut out = self.smooth_window();
        out.truncate(self.window.len());
        self.window.clear();
        out
    }

    fn smooth_front(&self) -> Belief {
        self.smooth_window().swap_remove(0)
    }

    fn smooth_window(&self) -> Vec<Belief> {
        let Some(last) = self.window.back() else {
            return Vec::new();
        };
        let mut out = vec![last.step.filtered.clone(); self.window.len()];
        for t in (0..self.window.len() - 1).rev() {
            let here = &self.window[t];
            let next = &self.window[t + 1];
            let gain = here.gain.as_ref().expect("gain set once a successor exists");
            out[t] = backward_step(&here.step.filtered, &next.step.predicted, &out[t + 1], gain);
        }
        out
    }
}

/// Runs [`FixedLagSmoother`] over a whole series, including the final flush.
pub fn fixed_lag_smooth(
    series: &ObservationSeries,
    layout: &StateLayout,
    noise: &NoiseConfig,
    depth: usize,
) -> Result<Vec<Belief>> {
    check_series(series, layout)?;
    let mut smoother = FixedLagSmoother::new(layout.clone(), noise.clone(), depth)?;
    let mut out = Vec::with_capacity(series.len() - 1);
    for n in 0..series.len() {
        if let Some(b) = smoother.push(series.row(n), series.contiguous_with_previous(n))? {
            out.push(b);
        }
    }
    out.extend(smoother.finish());
    Ok(out)
}
