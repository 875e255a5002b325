//! Kalman estimation of causal factors under a random-walk (identity
//! transition) state model.
//!
//! The state `x[n]` is the flat causal-factor vector of a
//! [`StateLayout`](crate::model::StateLayout). It evolves as
//! `x[n+1] = x[n] + w[n]` with `w ~ N(0, q I)` and is observed through
//! `y[n] = H[n] x[n] + e[n]`, `e ~ N(0, r I)`, where `H[n]` is assembled from
//! the current and previous measurements.

mod diagnostics;
mod filter;
mod smoother;
mod tune;

pub use diagnostics::{autocorrelation, diagnose_innovations, innovation_diagnostics, InnovationDiagnostics};
pub use filter::{filter_pass, CausalFilter, FilterResult, FilterStep};
pub use smoother::{fixed_lag_smooth, rts_smooth, FixedLagSmoother};
pub use tune::{tune_noise, GridScore, TuneOutcome};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, spd_cholesky};

/// Smallest accepted eigenvalue ratio of the innovation covariance.
pub const INNOVATION_MIN_RCOND: f64 = 1e-13;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Isotropic noise settings: `Q = q I`, `R = r I`, `P0 = p0 I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub q: f64,
    pub r: f64,
    pub p0: f64,
    /// Initial state mean; `None` means the zero vector.
    pub x0: Option<DVector<f64>>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q: 1e-5,
            r: 1.0,
            p0: 1.0,
            x0: None,
        }
    }
}

impl NoiseConfig {
    pub fn new(q: f64, r: f64, p0: f64) -> Result<Self> {
        let cfg = Self {
            q,
            r,
            p0,
            x0: None,
        };
        cfg.check_scales()?;
        Ok(cfg)
    }

    pub fn with_initial_mean(mut self, x0: DVector<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    fn check_scales(&self) -> Result<()> {
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidNoise(format!("q must be >= 0, got {}", self.q)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidNoise(format!("r must be > 0, got {}", self.r)));
        }
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            return Err(Error::InvalidNoise(format!("p0 must be > 0, got {}", self.p0)));
        }
        Ok(())
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.check_scales()?;
        if let Some(x0) = &self.x0 {
            if x0.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "initial state mean",
                    expected: dim,
                    actual: x0.len(),
                });
            }
        }
        Ok(())
    }

    /// Belief at index 0 built from `x0` and `p0`.
    pub fn initial_belief(&self, dim: usize) -> Result<Belief> {
        self.validate(dim)?;
        Ok(Belief {
            n: 0,
            mean: self.x0.clone().unwrap_or_else(|| DVector::zeros(dim)),
            cov: DMatrix::identity(dim, dim) * self.p0,
        })
    }
}

/// Gaussian estimate of the state at time index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    pub n: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Belief {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Posterior standard deviation of each state entry.
    pub fn std_devs(&self) -> DVector<f64> {
        self.cov.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Output of a measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub belief: Belief,
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub loglik: f64,
}

/// Time update with identity transition: the mean is unchanged and `q` is
/// added to the covariance diagonal.
pub fn predict(belief: &Belief, q: f64) -> Result<Belief> {
    if !(q >= 0.0) {
        return Err(Error::InvalidNoise(format!("q must be >= 0, got {q}")));
    }
    let mut cov = belief.cov.clone();
    for i in 0..cov.nrows() {
        cov[(i, i)] += q;
    }
    Ok(Belief {
        n: belief.n + 1,
        mean: belief.mean.clone(),
        cov,
    })
}

/// Measurement update with `R = r I`, Joseph-form covariance and explicit
/// symmetrization.
pub fn update(belief: &Belief, h: &DMatrix<f64>, y: &DVector<f64>, r: f64) -> Result<Update> {
    if !(r > 0.0) {
        return Err(Error::InvalidNoise(format!("r must be > 0, got {r}")));
    }
    let dim = belief.dim();
    let g = h.nrows();
    if h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            context: "observation matrix columns",
            expected: dim,
            actual: h.ncols(),
        });
    }
    if y.len() != g {
        return Err(Error::DimensionMismatch {
            context: "measurement length",
            expected: g,
            actual: y.len(),
        });
    }

    let p = &belief.cov;
    let hp = h * p;
    let mut s = &hp * h.transpose();
    for i in 0..g {
        s[(i, i)] += r;
    }
    linalg::symmetrize(&mut s);
    let chol = spd_cholesky(&s, INNOVATION_MIN_RCOND, "innovation covariance")?;

    let innovation = y - h * &belief.mean;
    // S symmetric and P symmetric: K^T = S^-1 H P.
    let gain = chol.solve(&hp).transpose();
    let mean = &belief.mean + &gain * &innovation;

    let mut i_kh = -(&gain * h);
    for i in 0..dim {
        i_kh[(i, i)] += 1.0;
    }
    let mut cov = &i_kh * p * i_kh.transpose() + (&gain * gain.transpose()) * r;
    linalg::symmetrize(&mut cov);

    let whitened = chol.solve(&innovation);
    let nis = innovation.dot(&whitened);
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let loglik = -0.5 * (g as f64 * LN_2PI + log_det + nis);

    Ok(Update {
        belief: Belief {
            n: belief.n,
            mean,
            cov,
        },
        innovation,
        innovation_cov: s,
        loglik,
    })
}
