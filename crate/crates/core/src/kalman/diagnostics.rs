//! Filter-consistency checks on innovations.

use nalgebra::{DMatrix, DVector};

use super::{FilterResult, INNOVATION_MIN_RCOND};
use crate::error::{Error, Result};
use crate::linalg::spd_cholesky;

#[derive(Debug, Clone, PartialEq)]
pub struct InnovationDiagnostics {
    /// `autocorrelation[c][l - 1]` is the lag-`l` autocorrelation of channel
    /// `c`'s normalized innovations.
    pub autocorrelation: Vec<Vec<f64>>,
    /// Mean of `v^T S^-1 v`; close to `G` for a consistent filter.
    pub mean_nis: f64,
    /// Number of updated steps the statistics were computed over.
    pub steps: usize,
}

impl InnovationDiagnostics {
    /// Half-width `2 / sqrt(N)` of the whiteness band.
    pub fn white_band(&self) -> f64 {
        2.0 / (self.steps as f64).sqrt()
    }

    /// Fraction of all (channel, lag) autocorrelations inside the band.
    pub fn fraction_within_band(&self) -> f64 {
        let band = self.white_band();
        let all: Vec<f64> = self.autocorrelation.iter().flatten().copied().collect();
        if all.is_empty() {
            return 1.0;
        }
        all.iter().filter(|r| r.abs() <= band).count() as f64 / all.len() as f64
    }
}

/// Uncentered sample autocorrelation `sum x[t] x[t+l] / sum x[t]^2` for
/// `l = 1..=max_lag`. Innovations have zero mean under a correct model, so
/// no mean is removed.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let energy: f64 = x.iter().map(|v| v * v).sum();
    (1..=max_lag)
        .map(|lag| {
            if energy == 0.0 || lag >= x.len() {
                return 0.0;
            }
            x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / energy
        })
        .collect()
}

/// Diagnostics from raw innovation vectors and their covariances. Each
/// channel is normalized by `sqrt(S_cc)` before the autocorrelation.
pub fn diagnose_innovations(
    innovations: &[DVector<f64>],
    covariances: &[DMatrix<f64>],
    max_lag: usize,
) -> Result<InnovationDiagnostics> {
    let n = innovations.len();
    if max_lag == 0 {
        return Err(Error::InvariantViolation("max_lag must be positive".into()));
    }
    if n < 10 * max_lag {
        return Err(Error::SeriesTooShort {
            required: 10 * max_lag,
            actual: n,
        });
    }
    if covariances.len() != n {
        return Err(Error::DimensionMismatch {
            context: "innovation covariances",
            expected: n,
            actual: covariances.len(),
        });
    }
    let g = innovations[0].len();
    let mut normalized = vec![Vec::with_capacity(n); g];
    let mut nis_sum = 0.0;
    for (v, s) in innovations.iter().zip(covariances) {
        let chol = spd_cholesky(s, INNOVATION_MIN_RCOND, "innovation covariance")?;
        nis_sum += v.dot(&chol.solve(v));
        for c in 0..g {
            normalized[c].push(v[c] / s[(c, c)].sqrt());
        }
    }
    Ok(InnovationDiagnostics {
        autocorrelation: normalized
            .iter()
            .map(|x| autocorrelation(x, max_lag))
            .collect(),
        mean_nis: nis_sum / n as f64,
        steps: n,
    })
}

/// Diagnostics over the updated steps of a filter run.
pub fn innovation_diagnostics(
    result: &FilterResult,
    max_lag: usize,
) -> Result<InnovationDiagnostics> {
    let (v, s): (Vec<_>, Vec<_>) = result
        .steps
        .iter()
        .filter_map(|st| Some((st.innovation.clone()?, st.innovation_cov.clone()?)))
        .unzip();
    diagnose_innovations(&v, &s, max_lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn white_noise_stays_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 2000;
        let v: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(4, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let s = vec![DMatrix::identity(4, 4); n];
        let d = diagnose_innovations(&v, &s, 20).unwrap();
        assert!(d.fraction_within_band() >= 0.95, "{}", d.fraction_within_band());
        assert!((d.mean_nis - 4.0).abs() < 0.3);
    }

    #[test]
    fn constant_innovations_are_fully_correlated() {
        let v = vec![DVector::from_element(2, 0.7); 100];
        let s = vec![DMatrix::identity(2, 2); 100];
        let d = diagnose_innovations(&v, &s, 3).unwrap();
        assert!((d.autocorrelation[0][0] - 0.99).abs() < 1e-12);
        assert!(d.autocorrelation[1][0] > 0.98);
    }

    #[test]
    fn too_short_rejected() {
        let v = vec![DVector::zeros(2); 19];
        let s = vec![DMatrix::identity(2, 2); 19];
        assert!(matches!(
            diagnose_innovations(&v, &s, 2),
            Err(Error::SeriesTooShort { required: 20, .. })
        ));
    }
}
