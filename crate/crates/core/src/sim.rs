//! Ground-truth SVAR simulator.
//!
//! Samples `y_t = A0 y_t + A1 y_{t-1} + e_t` through the reduced form
//! `y_t = (I - A0)^-1 (A1 y_{t-1} + e_t)`. Randomness comes from ChaCha8
//! seeded with `seed_from_u64`, one draw per channel per step in channel
//! order.

use nalgebra::{DMatrix, DVector, LU};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{CausalFactors, GraphSpec};
use crate::series::ObservationSeries;

/// Largest accepted condition number of `I - A0`.
pub const MAX_CONDITION: f64 = 1e12;

/// Samples discarded before the returned series for constant schedules.
pub const DEFAULT_BURN_IN: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSchedule {
    Constant(CausalFactors),
    /// `base` for `n < at`, `after` from `at` on.
    Step {
        base: CausalFactors,
        at: usize,
        after: CausalFactors,
    },
    /// `base` up to `start`, linear interpolation to `end` reached at `stop`.
    Ramp {
        base: CausalFactors,
        end: CausalFactors,
        start: usize,
        stop: usize,
    },
}

impl CoefficientSchedule {
    pub fn base(&self) -> &CausalFactors {
        match self {
            Self::Constant(b) | Self::Step { base: b, .. } | Self::Ramp { base: b, .. } => b,
        }
    }

    pub fn node_count(&self) -> usize {
        self.base().node_count()
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Constant(_) => "constant",
            Self::Step { .. } => "step",
            Self::Ramp { .. } => "ramp",
        }
    }

    pub fn factors_at(&self, n: usize) -> CausalFactors {
        match self {
            Self::Constant(b) => b.clone(),
            Self::Step { base, at, after } => {
                if n < *at {
                    base.clone()
                } else {
                    after.clone()
                }
            }
            Self::Ramp {
                base,
                end,
                start,
                stop,
            } => {
                if n <= *start {
                    base.clone()
                } else if n >= *stop {
                    end.clone()
                } else {
                    let w = (n - start) as f64 / (stop - start) as f64;
                    let mix = |a: &DMatrix<f64>, b: &DMatrix<f64>| a + (b - a) * w;
                    let mut a0 = mix(base.a0(), end.a0());
                    let mut a1 = mix(base.a1(), end.a1());
                    a0.fill_diagonal(0.0);
                    a1.fill_diagonal(0.0);
                    CausalFactors::new(a0, a1).expect("interpolated factors keep shape")
                }
            }
        }
    }

    /// Indices at which a distinct coefficient value takes effect.
    fn change_points(&self, n_samples: usize) -> Vec<usize> {
        match self {
            Self::Constant(_) => vec![0],
            Self::Step { at, .. } => vec![0, *at],
            Self::Ramp { start, stop, .. } => {
                let mut v = vec![0];
                v.extend((*start + 1)..=(*stop).min(n_samples.saturating_sub(1)));
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvarSpec {
    pub schedule: CoefficientSchedule,
    pub noise_kind: NoiseKind,
    /// Per-channel standard deviation; a single entry applies to all channels.
    pub noise_scale: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Starting state before burn-in; zero when `None`.
    pub y_init: Option<Vec<f64>>,
    /// `None` means [`DEFAULT_BURN_IN`] for constant schedules and 0 otherwise.
    pub burn_in: Option<usize>,
}

impl SvarSpec {
    pub fn new(schedule: CoefficientSchedule, noise_scale: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            schedule,
            noise_kind: NoiseKind::Gaussian,
            noise_scale: vec![noise_scale],
            n_samples,
            seed,
            y_init: None,
            burn_in: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.schedule.node_count()
    }

    pub fn effective_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(match self.schedule {
            CoefficientSchedule::Constant(_) => DEFAULT_BURN_IN,
            _ => 0,
        })
    }

    pub fn scale_for(&self, channel: usize) -> f64 {
        if self.noise_scale.len() == 1 {
            self.noise_scale[0]
        } else {
            self.noise_scale[channel]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure {
    /// Sample index of the offending coefficient value, if any.
    pub index: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
    /// Largest reduced-form spectral radius seen over the schedule.
    pub max_spectral_radius: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return format!("ok (max spectral radius {:.6})", self.max_spectral_radius);
        }
        self.failures
            .iter()
            .map(|f| match f.index {
                Some(i) => format!("n={i}: {}", f.reason),
                None => f.reason.clone(),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// `B = (I - A0)^-1 A1`.
pub fn reduced_form(factors: &CausalFactors) -> Result<DMatrix<f64>> {
    let lu = structural_lu(factors)?;
    Ok(lu.solve(factors.a1()).expect("nonsingular after conditioning check"))
}

fn structural_lu(factors: &CausalFactors) -> Result<LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let g = factors.node_count();
    let m = DMatrix::identity(g, g) - factors.a0();
    let sv = m.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::Singular(format!(
            "I - A0 is singular or ill-conditioned (condition number {:e})",
            if lo > 0.0 { hi / lo } else { f64::INFINITY }
        )));
    }
    Ok(m.lu())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn validate(spec: &SvarSpec) -> ValidationReport {
    let mut failures = Vec::new();
    let fail = |failures: &mut Vec<ValidationFailure>, index: Option<usize>, reason: String| {
        failures.push(ValidationFailure { index, reason });
    };
    let g = spec.node_count();
    let n = spec.n_samples;
    if n < 2 {
        fail(&mut failures, None, format!("n_samples must be >= 2, got {n}"));
    }
    if spec.noise_scale.len() != 1 && spec.noise_scale.len() != g {
        fail(
            &mut failures,
            None,
            format!("noise_scale has {} entries for {g} channels", spec.noise_scale.len()),
        );
    }
    if let Some(bad) = spec.noise_scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        fail(&mut failures, None, format!("noise_scale must be > 0, got {bad}"));
    }
    if let Some(y0) = &spec.y_init {
        if y0.len() != g {
            fail(&mut failures, None, format!("y_init has {} entries for {g} channels", y0.len()));
        }
    }
    match &spec.schedule {
        CoefficientSchedule::Constant(_) => {}
        CoefficientSchedule::Step { at, after, .. } => {
            if !(*at > 0 && *at < n) {
                fail(&mut failures, None, format!("step index {at} must satisfy 0 < n0 < {n}"));
            }
            if after.node_count() != g {
                fail(&mut failures, None, "step replacement factors have a different node count".into());
            }
        }
        CoefficientSchedule::Ramp {
            end, start, stop, ..
        } => {
            if !(start < stop && *stop < n) {
                fail(
                    &mut failures,
                    None,
                    format!("ramp interval [{start}, {stop}] must satisfy 0 <= start < end < {n}"),
                );
            }
            if end.node_count() != g {
                fail(&mut failures, None, "ramp end factors have a different node count".into());
            }
        }
    }

    let mut max_radius = 0.0f64;
    if failures.is_empty() {
        for idx in spec.schedule.change_points(n) {
            match reduced_form(&spec.schedule.factors_at(idx)) {
                Ok(b) => {
                    let rho = spectral_radius(&b);
                    max_radius = max_radius.max(rho);
                    if !(rho < 1.0) {
                        fail(
                            &mut failures,
                            Some(idx),
                            format!("reduced form is not stable: spectral radius {rho:.6} >= 1"),
                        );
                    }
                }
                Err(e) => fail(&mut failures, Some(idx), e.to_string()),
            }
        }
    }
    ValidationReport {
        failures,
        max_spectral_radius: max_radius,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: ObservationSeries,
    /// True factors in effect at each returned sample index.
    pub truth: Vec<CausalFactors>,
    /// Structural noise draw `e_t` behind each returned sample. Row 0 is the
    /// last burn-in draw, or zeros without burn-in.
    pub noise: Vec<Vec<f64>>,
}

pub fn simulate(spec: &SvarSpec) -> Result<Simulation> {
    let report = validate(spec);
    if !report.passed() {
        return Err(Error::Validation(report.summary()));
    }
    let g = spec.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scales: Vec<f64> = (0..g).map(|c| spec.scale_for(c)).collect();
    let draw = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        DVector::from_iterator(
            g,
            scales.iter().map(|&s| match spec.noise_kind {
                NoiseKind::Gaussian => s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
                NoiseKind::Laplace => {
                    // Laplace with standard deviation s has scale s / sqrt(2).
                    let mag: f64 = Exp1.sample(rng);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    sign * mag * s * std::f64::consts::FRAC_1_SQRT_2
                }
            }),
        )
    };

    let mut regime: Option<(CausalFactors, LU<f64, nalgebra::Dyn, nalgebra::Dyn>)> = None;
    let mut step = |factors: &CausalFactors, prev: &DVector<f64>, e: &DVector<f64>| -> Result<DVector<f64>> {
        if regime.as_ref().is_none_or(|(f, _)| f != factors) {
            regime = Some((factors.clone(), structural_lu(factors)?));
        }
        let (_, lu) = regime.as_ref().expect("regime set above");
        Ok(lu
            .solve(&(factors.a1() * prev + e))
            .expect("nonsingular after conditioning check"))
    };

    let mut y = match &spec.y_init {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(g),
    };
    let mut e0 = DVector::zeros(g);
    let first = spec.schedule.factors_at(0);
    for _ in 0..spec.effective_burn_in() {
        e0 = draw(&mut rng);
        y = step(&first, &y, &e0)?;
    }

    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut truth = Vec::with_capacity(spec.n_samples);
    let mut noise = Vec::with_capacity(spec.n_samples);
    rows.push(y.as_slice().to_vec());
    truth.push(first);
    noise.push(e0.as_slice().to_vec());
    for n in 1..spec.n_samples {
        let factors = spec.schedule.factors_at(n);
        let e = draw(&mut rng);
        y = step(&factors, &y, &e)?;
        rows.push(y.as_slice().to_vec());
        noise.push(e.as_slice().to_vec());
        truth.push(factors);
    }
    let labels = GraphSpec::with_nodes(g)?.labels().to_vec();
    Ok(Simulation {
        series: ObservationSeries::from_rows(labels, rows)?,
        truth,
        noise,
    })
}

/// Random factors with off-diagonal entries uniform in `[-bound, bound]`,
/// redrawn until the reduced form has spectral radius below `max_radius`.
/// `instantaneous_bound = 0` gives a lagged-only model.
pub fn random_stable_factors(
    node_count: usize,
    instantaneous_bound: f64,
    lagged_bound: f64,
    max_radius: f64,
    seed: u64,
) -> Result<CausalFactors> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |bound: f64, rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(node_count, node_count, |i, j| {
            if i == j || bound == 0.0 {
                0.0
            } else {
                rng.random_range(-bound..=bound)
            }
        })
    };
    for _ in 0..10_000 {
        let a0 = draw(instantaneous_bound, &mut rng);
        let a1 = draw(lagged_bound, &mut rng);
        let f = CausalFactors::new(a0, a1)?;
        if let Ok(b) = reduced_form(&f) {
            if spectral_radius(&b) < max_radius {
                return Ok(f);
            }
        }
    }
    Err(Error::Validation(format!(
        "no stable factors with spectral radius < {max_radius} found in 10000 draws"
    )))
}
