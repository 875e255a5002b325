//! Run configuration.
//!
//! The config file is flat `key = value` text:
//!
//! ```text
//! # comment lines start with '#'; blank lines are ignored
//! mode = fixed-lag
//! lag_depth = 5
//! a1 = 0, 0.3; -0.2, 0
//! ```
//!
//! Keys are unique within a file. Lists are comma separated; matrices are
//! rows separated by `;` with comma-separated entries. Command-line flags are
//! applied as overrides of the same keys, so a flag always wins over the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::FeatureKind;
use crate::kalman::NoiseConfig;
use crate::model::{matrix_from_rows, CausalFactors, GraphSpec};
use crate::sim::{random_stable_factors, CoefficientSchedule, NoiseKind, SvarSpec};

/// Ordered `key -> value` map, the raw form of a config.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(Error::Config(format!("line {}: invalid key `{key}`", i + 1)));
            }
            let key = key.replace('-', "_");
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.replace('-', "_"), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
            })
            .transpose()
    }
}

impl fmt::Display for KeyValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("`{key}`: cannot parse list item `{s}`")))
        })
        .collect()
}

pub fn parse_matrix(key: &str, v: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';')
        .map(str::trim)
        .filter(|r| !r.is_empty())
        .map(|row| parse_list::<f64>(key, row))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Filter,
    #[default]
    Smooth,
    FixedLag,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Filter => "filter",
            Mode::Smooth => "smooth",
            Mode::FixedLag => "fixed-lag",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "filter" => Ok(Mode::Filter),
            "smooth" => Ok(Mode::Smooth),
            "fixed-lag" | "fixed_lag" => Ok(Mode::FixedLag),
            other => Err(Error::Config(format!(
                "unknown mode `{other}` (expected filter, smooth or fixed-lag)"
            ))),
        }
    }
}

/// Where the coefficient matrices for a simulation come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorSource {
    Explicit(CausalFactors),
    /// Seeded random draw, see [`random_stable_factors`].
    Random {
        instantaneous_bound: f64,
        lagged_bound: f64,
        max_radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub labels: Option<Vec<String>>,
    pub noise: NoiseConfig,
    pub mode: Mode,
    /// Present exactly when `mode` is fixed-lag.
    pub lag_depth: Option<usize>,
    pub feature: FeatureKind,
    pub channels: Vec<usize>,
    /// Seconds; `None` uses twice the median snapshot spacing.
    pub gap_threshold: Option<f64>,
    /// Standardize snapshot features before estimation.
    pub standardize: bool,
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub plots: bool,
    pub include_std: bool,
    pub q_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub tolerance: f64,
    /// Fraction of the run after which recovery errors are scored.
    pub score_start: f64,
    /// Raw key-values the config was built from, echoed into manifests.
    pub source: KeyValues,
}

const KNOWN_KEYS: &[&str] = &[
    "labels", "q", "r", "p0", "mode", "lag_depth", "feature", "channels", "gap_threshold",
    "standardize", "input", "output", "seed", "plots", "include_std", "q_grid", "r_grid",
    "tolerance", "score_start", "nodes", "n_samples", "noise_kind", "noise_scale", "schedule",
    "a0", "a1", "a0_after", "a1_after", "step_at", "a0_end", "a1_end", "ramp_start", "ramp_end",
    "burn_in", "y_init", "instantaneous_bound", "lagged_bound", "max_radius", "factor_seed",
];

impl RunConfig {
    pub fn from_key_values(kv: KeyValues) -> Result<Self> {
        if let Some((k, _)) = kv.iter().find(|(k, _)| !KNOWN_KEYS.contains(k)) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
        let defaults = NoiseConfig::default();
        let noise = NoiseConfig::new(
            kv.parsed("q")?.unwrap_or(defaults.q),
            kv.parsed("r")?.unwrap_or(defaults.r),
            kv.parsed("p0")?.unwrap_or(defaults.p0),
        )?;
        let mode: Mode = kv.parsed("mode")?.unwrap_or_default();
        let lag_depth: Option<usize> = kv.parsed("lag_depth")?;
        match (mode, lag_depth) {
            (Mode::FixedLag, None) => {
                return Err(Error::Config("mode fixed-lag requires `lag_depth`".into()))
            }
            (Mode::Filter | Mode::Smooth, Some(_)) => {
                return Err(Error::Config(format!(
                    "`lag_depth` is only valid with mode fixed-lag (mode is {})",
                    mode.name()
                )))
            }
            _ => {}
        }
        let labels: Option<Vec<String>> = kv.list("labels")?;
        if let Some(l) = &labels {
            GraphSpec::new(l.clone())?;
        }
        let score_start: f64 = kv.parsed("score_start")?.unwrap_or(0.75);
        if !(0.0..1.0).contains(&score_start) {
            return Err(Error::Config("`score_start` must be in [0, 1)".into()));
        }
        let gap_threshold: Option<f64> = kv.parsed("gap_threshold")?;
        if gap_threshold.is_some_and(|g| !(g >= 0.0)) {
            return Err(Error::Config("`gap_threshold` must be >= 0 seconds".into()));
        }
        Ok(Self {
            labels,
            noise,
            mode,
            lag_depth,
            feature: kv.parsed("feature")?.unwrap_or_default(),
            channels: kv.list("channels")?.unwrap_or_default(),
            gap_threshold,
            standardize: kv.flag("standardize")?.unwrap_or(true),
            input: kv.get("input").map(PathBuf::from),
            output: kv.get("output").map_or_else(|| PathBuf::from("."), PathBuf::from),
            seed: kv.parsed("seed")?.unwrap_or(0),
            plots: kv.flag("plots")?.unwrap_or(false),
            include_std: kv.flag("include_std")?.unwrap_or(false),
            q_grid: kv.list("q_grid")?.unwrap_or_default(),
            r_grid: kv.list("r_grid")?.unwrap_or_default(),
            tolerance: kv.parsed("tolerance")?.unwrap_or(0.05),
            score_start,
            source: kv,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(KeyValues::parse(text)?)
    }

    /// Simulation spec described by the config (`nodes`, `schedule`, `a0`,
    /// `a1`, ...). Missing `a0` means zero instantaneous effects.
    pub fn svar_spec(&self) -> Result<SvarSpec> {
        let kv = &self.source;
        let n_samples: usize = kv
            .parsed("n_samples")?
            .ok_or_else(|| Error::Config("simulation requires `n_samples`".into()))?;
        let nodes: Option<usize> = kv.parsed("nodes")?;
        let nodes = nodes.or(self.labels.as_ref().map(Vec::len));
        let factor_seed: u64 = kv.parsed("factor_seed")?.unwrap_or(self.seed);
        let base_source = self.factor_source("a0", "a1")?;
        let base = materialize(&base_source, nodes, factor_seed)?;
        let g = base.node_count();
        let schedule = match kv.get("schedule").unwrap_or("constant") {
            "constant" => CoefficientSchedule::Constant(base),
            "step" => {
                let at = kv
                    .parsed("step_at")?
                    .ok_or_else(|| Error::Config("step schedule requires `step_at`".into()))?;
                let after = self.replacement("a0_after", "a1_after", &base)?;
                CoefficientSchedule::Step { base, at, after }
            }
            "ramp" => {
                let start = kv
                    .parsed("ramp_start")?
                    .ok_or_else(|| Error::Config("ramp schedule requires `ramp_start`".into()))?;
                let stop = kv
                    .parsed("ramp_end")?
                    .ok_or_else(|| Error::Config("ramp schedule requires `ramp_end`".into()))?;
                let end = self.replacement("a0_end", "a1_end", &base)?;
                CoefficientSchedule::Ramp {
                    base,
                    end,
                    start,
                    stop,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown schedule `{other}` (expected constant, step or ramp)"
                )))
            }
        };
        if let Some(l) = &self.labels {
            if l.len() != g {
                return Err(Error::Config(format!("{} labels for {g} simulated nodes", l.len())));
            }
        }
        let noise_kind = match kv.get("noise_kind").unwrap_or("gaussian") {
            "gaussian" => NoiseKind::Gaussian,
            "laplace" => NoiseKind::Laplace,
            other => return Err(Error::Config(format!("unknown noise_kind `{other}`"))),
        };
        Ok(SvarSpec {
            schedule,
            noise_kind,
            noise_scale: kv.list("noise_scale")?.unwrap_or_else(|| vec![1.0]),
            n_samples,
            seed: self.seed,
            y_init: kv.list("y_init")?,
            burn_in: kv.parsed("burn_in")?,
        })
    }

    fn factor_source(&self, a0_key: &str, a1_key: &str) -> Result<Option<FactorSource>> {
        let kv = &self.source;
        let a1 = kv.get(a1_key);
        if a1 == Some("random") {
            return Ok(Some(FactorSource::Random {
                instantaneous_bound: if kv.get(a0_key) == Some("random") {
                    kv.parsed("instantaneous_bound")?.unwrap_or(0.2)
                } else {
                    0.0
                },
                lagged_bound: kv.parsed("lagged_bound")?.unwrap_or(0.5),
                max_radius: kv.parsed("max_radius")?.unwrap_or(0.9),
            }));
        }
        let Some(a1) = a1 else {
            return Ok(None);
        };
        let a1 = matrix_from_rows(&parse_matrix(a1_key, a1)?)?;
        let a0 = match kv.get(a0_key) {
            Some(v) => matrix_from_rows(&parse_matrix(a0_key, v)?)?,
            None => nalgebra::DMatrix::zeros(a1.nrows(), a1.nrows()),
        };
        Ok(Some(FactorSource::Explicit(CausalFactors::new(a0, a1)?)))
    }

    fn replacement(&self, a0_key: &str, a1_key: &str, base: &CausalFactors) -> Result<CausalFactors> {
        let kv = &self.source;
        let pick = |key: &str, fallback: &nalgebra::DMatrix<f64>| -> Result<nalgebra::DMatrix<f64>> {
            match kv.get(key) {
                Some(v) => matrix_from_rows(&parse_matrix(key, v)?),
                None => Ok(fallback.clone()),
            }
        };
        if kv.get(a0_key).is_none() && kv.get(a1_key).is_none() {
            return Err(Error::Config(format!("schedule requires `{a0_key}` or `{a1_key}`")));
        }
        CausalFactors::new(pick(a0_key, base.a0())?, pick(a1_key, base.a1())?)
    }
}

fn materialize(source: &Option<FactorSource>, nodes: Option<usize>, seed: u64) -> Result<CausalFactors> {
    match source {
        Some(FactorSource::Explicit(f)) => {
            if let Some(g) = nodes {
                if g != f.node_count() {
                    return Err(Error::Config(format!(
                        "`nodes` = {g} but coefficient matrices are {0}x{0}",
                        f.node_count()
                    )));
                }
            }
            Ok(f.clone())
        }
        Some(FactorSource::Random {
            instantaneous_bound,
            lagged_bound,
            max_radius,
        }) => {
            let g = nodes.ok_or_else(|| Error::Config("random factors require `nodes`".into()))?;
            random_stable_factors(g, *instantaneous_bound, *lagged_bound, *max_radius, seed)
        }
        None => {
            let g = nodes.ok_or_else(|| Error::Config("simulation requires `a1` or `nodes`".into()))?;
            CausalFactors::zeros(g)
        }
    }
}
