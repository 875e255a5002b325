//! The five pipeline commands behind the binary.
//!
//! Each command reads a [`RunConfig`], writes its artifacts into
//! `config.output`, and finishes with `manifest.txt`: a key-value file
//! holding the command, crate version, the effective config (prefixed
//! `config.`, output directory omitted), the seed, and SHA-256 digests of
//! every input and output file. Manifests carry no wall-clock data, so
//! identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::ingest::{read_snapshot_dir, to_observation_series};
use crate::kalman::{
    filter_pass, fixed_lag_smooth, innovation_diagnostics, rts_smooth, tune_noise, Belief,
    TuneOutcome,
};
use crate::model::{layout_for, pack, GraphSpec, StateLayout};
use crate::report::{trajectory_svg, TrajectoryTable};
use crate::series::{fmt_f64, ObservationSeries};
use crate::sim::simulate;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for a `recover` run whose errors exceed the tolerance.
pub const RECOVER_FAILED_EXIT: i32 = 6;

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SERIES_FILE: &str = "series.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const TUNE_FILE: &str = "tune.csv";
pub const RECOVER_FILE: &str = "recover.csv";

/// Lag window for the innovation whiteness figures in estimate manifests.
const DIAGNOSTIC_LAGS: usize = 20;

struct Manifest {
    lines: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut m = Self {
            lines: vec![
                ("command".into(), command.into()),
                ("version".into(), VERSION.into()),
                ("seed".into(), cfg.seed.to_string()),
            ],
            outputs: Vec::new(),
        };
        for (k, v) in cfg.source.iter().filter(|(k, _)| *k != "output") {
            m.push(format!("config.{k}"), v);
        }
        m
    }

    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = digest_path(path)?;
        self.push("input", path.display());
        self.push("input.sha256", digest);
        Ok(())
    }

    fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    fn write(mut self, dir: &Path) -> Result<PathBuf> {
        for p in std::mem::take(&mut self.outputs) {
            let name = p
                .strip_prefix(dir)
                .unwrap_or(&p)
                .to_string_lossy()
                .replace('\\', "/");
            let digest = digest_path(&p)?;
            self.push(format!("output.{name}.sha256"), digest);
        }
        let mut text = String::new();
        for (k, v) in &self.lines {
            text.push_str(k);
            text.push_str(" = ");
            text.push_str(v);
            text.push('\n');
        }
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }
}

/// SHA-256 of a file, or of a directory's regular files (name and contents,
/// in name order).
fn digest_path(path: &Path) -> Result<String> {
    let read = |p: &Path| fs::read(p).map_err(|e| Error::io(format!("reading {}", p.display()), e));
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(format!("listing {}", path.display()), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            h.update(f.file_name().unwrap_or_default().as_encoded_bytes());
            h.update([0]);
            h.update(read(&f)?);
        }
    } else {
        h.update(read(path)?);
    }
    Ok(hex::encode(h.finalize()))
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.output)
        .map_err(|e| Error::io(format!("creating {}", cfg.output.display()), e))?;
    Ok(cfg.output.clone())
}

fn required_input(cfg: &RunConfig) -> Result<&Path> {
    cfg.input
        .as_deref()
        .ok_or_else(|| Error::Config("this command requires `input` (--input PATH)".into()))
}

fn graph_for(cfg: &RunConfig, channels: usize) -> Result<GraphSpec> {
    match &cfg.labels {
        Some(l) if l.len() != channels => Err(Error::Config(format!(
            "{} labels given for {channels} channels",
            l.len()
        ))),
        Some(l) => GraphSpec::new(l.clone()),
        None => GraphSpec::with_nodes(channels),
    }
}

/// Series from a CSV file or a snapshot directory, relabelled from the config.
pub fn load_series(cfg: &RunConfig, input: &Path) -> Result<ObservationSeries> {
    let series = if input.is_dir() {
        let snaps = read_snapshot_dir(input, &cfg.channels)?;
        let gap = cfg
            .gap_threshold
            .map(|s| chrono::Duration::milliseconds((s * 1000.0).round() as i64));
        let raw = to_observation_series(&snaps, cfg.feature, gap)?;
        if cfg.standardize {
            raw.standardize()?
        } else {
            raw
        }
    } else {
        ObservationSeries::load_csv(input)?
    };
    match &cfg.labels {
        Some(l) => {
            graph_for(cfg, series.channels())?;
            series.with_labels(l.clone())
        }
        None => Ok(series),
    }
}

/// Mode-dependent factor beliefs for samples `1..N`.
pub fn estimate_beliefs(
    series: &ObservationSeries,
    layout: &StateLayout,
    cfg: &RunConfig,
) -> Result<Vec<Belief>> {
    match cfg.mode {
        Mode::Filter => Ok(filter_pass(series, layout, &cfg.noise)?.filtered()),
        Mode::Smooth => rts_smooth(&filter_pass(series, layout, &cfg.noise)?),
        Mode::FixedLag => {
            fixed_lag_smooth(series, layout, &cfg.noise, cfg.lag_depth.unwrap_or_default())
        }
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_plots(
    table: &TrajectoryTable,
    layout: &StateLayout,
    dir: &Path,
    manifest: &mut Manifest,
) -> Result<()> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|e| Error::io(format!("creating {}", plots.display()), e))?;
    for (k, label) in layout.graph().labels().iter().enumerate() {
        let path = plots.join(format!("{}.svg", sanitize(label)));
        fs::write(&path, trajectory_svg(table, layout, k)?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        manifest.output(path);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub series: PathBuf,
    pub truth: PathBuf,
    pub manifest: PathBuf,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let spec = cfg.svar_spec()?;
    let sim = simulate(&spec)?;
    let graph = graph_for(cfg, spec.node_count())?;
    let series = sim.series.with_labels(graph.labels().to_vec())?;
    let layout = layout_for(graph)?;
    let dir = prepare_output(cfg)?;
    let mut manifest = Manifest::new("simulate", cfg);
    manifest.push("schedule", spec.schedule.kind_name());
    manifest.push("burn_in", spec.effective_burn_in());

    let series_path = dir.join(SERIES_FILE);
    series.save_csv(&series_path)?;
    manifest.output(series_path.clone());
    let truth_path = dir.join(TRUTH_FILE);
    TrajectoryTable::from_truth(&layout, &sim.truth, series.timestamps())?.save_csv(&truth_path)?;
    manifest.output(truth_path.clone());
    let manifest = manifest.write(&dir)?;
    Ok(SimulateOutput {
        series: series_path,
        truth: truth_path,
        manifest,
    })
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<PathBuf> {
    let input = required_input(cfg)?;
    if !input.is_dir() {
        return Err(Error::Config(format!(
            "ingest expects a snapshot directory, got {}",
            input.display()
        )));
    }
    let series = load_series(cfg, input)?;
    let dir = prepare_output(cfg)?;
    let mut manifest = Manifest::new("ingest", cfg);
    manifest.input(input)?;
    manifest.push("feature", cfg.feature);
    manifest.push("samples", series.len());
    manifest.push(
        "gaps",
        series.contiguity().iter().skip(1).filter(|c| !**c).count(),
    );
    if let Some(s) = series.standardization() {
        manifest.push("standardization.mean", join(&s.mean));
        manifest.push("standardization.scale", join(&s.scale));
    }
    let path = dir.join(SERIES_FILE);
    series.save_csv(&path)?;
    manifest.output(path.clone());
    manifest.write(&dir)?;
    Ok(path)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<TrajectoryTable> {
    let input = required_input(cfg)?;
    let series = load_series(cfg, input)?;
    let layout = layout_for(graph_for(cfg, series.channels())?)?;
    let dir = prepare_output(cfg)?;
    let mut manifest = Manifest::new("estimate", cfg);
    manifest.input(input)?;
    manifest.push("mode", cfg.mode.name());

    let (beliefs, loglik) = match cfg.mode {
        Mode::FixedLag => (estimate_beliefs(&series, &layout, cfg)?, None),
        _ => {
            let result = filter_pass(&series, &layout, &cfg.noise)?;
            if let Ok(d) = innovation_diagnostics(&result, DIAGNOSTIC_LAGS) {
                manifest.push("diagnostics.mean_nis", fmt_f64(d.mean_nis));
                manifest.push("diagnostics.acf_within_band", fmt_f64(d.fraction_within_band()));
            }
            let loglik = result.total_loglik;
            let beliefs = match cfg.mode {
                Mode::Smooth => rts_smooth(&result)?,
                _ => result.filtered(),
            };
            (beliefs, Some(loglik))
        }
    };
    if let Some(ll) = loglik {
        manifest.push("total_loglik", fmt_f64(ll));
    }
    let table = TrajectoryTable::from_beliefs(&layout, &beliefs, series.timestamps(), cfg.include_std)?;
    let path = dir.join(TRAJECTORY_FILE);
    table.save_csv(&path)?;
    manifest.output(path);
    if cfg.plots {
        write_plots(&table, &layout, &dir, &mut manifest)?;
    }
    manifest.write(&dir)?;
    Ok(table)
}

pub fn cmd_tune(cfg: &RunConfig) -> Result<TuneOutcome> {
    let input = required_input(cfg)?;
    let series = load_series(cfg, input)?;
    let layout = layout_for(graph_for(cfg, series.channels())?)?;
    let outcome = tune_noise(&series, &layout, &cfg.q_grid, &cfg.r_grid, cfg.noise.p0)?;
    let dir = prepare_output(cfg)?;
    let mut manifest = Manifest::new("tune", cfg);
    manifest.input(input)?;

    let path = dir.join(TUNE_FILE);
    let err = |e: csv::Error| Error::io(format!("writing {}", path.display()), e.into());
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(["q", "r", "loglik", "best"]).map_err(err)?;
    for (i, s) in outcome.table.iter().enumerate() {
        w.write_record([
            fmt_f64(s.q),
            fmt_f64(s.r),
            fmt_f64(s.loglik),
            u8::from(i == outcome.best_index).to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    drop(w);
    manifest.output(path);
    manifest.push("selected.q", fmt_f64(outcome.best.q));
    manifest.push("selected.r", fmt_f64(outcome.best.r));
    manifest.push("selected.p0", fmt_f64(outcome.best.p0));
    manifest.push("selected.loglik", fmt_f64(outcome.table[outcome.best_index].loglik));
    manifest.write(&dir)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorScore {
    pub name: String,
    pub rmse: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverReport {
    /// First scored sample index.
    pub score_from: usize,
    pub scores: Vec<FactorScore>,
    pub tolerance: f64,
}

impl RecoverReport {
    pub fn max_rmse(&self) -> f64 {
        self.scores.iter().map(|s| s.rmse).fold(0.0, f64::max)
    }

    pub fn max_abs_error(&self) -> f64 {
        self.scores.iter().map(|s| s.max_abs_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rmse() <= self.tolerance && self.max_abs_error() <= self.tolerance
    }
}

/// Scores estimated against true factors over beliefs with `n >= score_from`.
pub fn score_recovery(
    layout: &StateLayout,
    beliefs: &[Belief],
    truth: &[crate::model::CausalFactors],
    score_from: usize,
    tolerance: f64,
) -> Result<RecoverReport> {
    let scored: Vec<&Belief> = beliefs.iter().filter(|b| b.n >= score_from).collect();
    if scored.is_empty() {
        return Err(Error::SeriesTooShort {
            required: score_from + 1,
            actual: beliefs.last().map_or(0, |b| b.n + 1),
        });
    }
    let dim = layout.dim();
    let mut sq = vec![0.0; dim];
    let mut worst = vec![0.0f64; dim];
    for b in &scored {
        let t = truth.get(b.n).ok_or(Error::IndexOutOfRange {
            index: b.n,
            limit: truth.len(),
        })?;
        let x = pack(t, layout)?;
        for i in 0..dim {
            let e = b.mean[i] - x[i];
            sq[i] += e * e;
            worst[i] = worst[i].max(e.abs());
        }
    }
    let names = layout.column_names();
    Ok(RecoverReport {
        score_from,
        scores: (0..dim)
            .map(|i| FactorScore {
                name: names[i].clone(),
                rmse: (sq[i] / scored.len() as f64).sqrt(),
                max_abs_error: worst[i],
            })
            .collect(),
        tolerance,
    })
}

pub fn cmd_recover(cfg: &RunConfig) -> Result<RecoverReport> {
    let spec = cfg.svar_spec()?;
    let sim = simulate(&spec)?;
    let graph = graph_for(cfg, spec.node_count())?;
    let series = sim.series.with_labels(graph.labels().to_vec())?;
    let layout = layout_for(graph)?;
    let beliefs = estimate_beliefs(&series, &layout, cfg)?;
    let score_from = (cfg.score_start * series.len() as f64).floor() as usize;
    let report = score_recovery(&layout, &beliefs, &sim.truth, score_from, cfg.tolerance)?;

    let dir = prepare_output(cfg)?;
    let mut manifest = Manifest::new("recover", cfg);
    manifest.push("schedule", spec.schedule.kind_name());
    manifest.push("mode", cfg.mode.name());
    let series_path = dir.join(SERIES_FILE);
    series.save_csv(&series_path)?;
    manifest.output(series_path);
    let truth_path = dir.join(TRUTH_FILE);
    TrajectoryTable::from_truth(&layout, &sim.truth, series.timestamps())?.save_csv(&truth_path)?;
    manifest.output(truth_path);
    let traj_path = dir.join(TRAJECTORY_FILE);
    TrajectoryTable::from_beliefs(&layout, &beliefs, series.timestamps(), cfg.include_std)?
        .save_csv(&traj_path)?;
    manifest.output(traj_path);

    let path = dir.join(RECOVER_FILE);
    let err = |e: csv::Error| Error::io(format!("writing {}", path.display()), e.into());
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(["factor", "rmse", "max_abs_error"]).map_err(err)?;
    for s in &report.scores {
        w.write_record([s.name.clone(), fmt_f64(s.rmse), fmt_f64(s.max_abs_error)])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    drop(w);
    manifest.output(path);
    manifest.push("score_from", report.score_from);
    manifest.push("tolerance", fmt_f64(report.tolerance));
    manifest.push("max_rmse", fmt_f64(report.max_rmse()));
    manifest.push("max_abs_error", fmt_f64(report.max_abs_error()));
    manifest.push("passed", report.passed());
    manifest.write(&dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::KeyValues;

    fn config(text: &str, out: &Path) -> RunConfig {
        let mut kv = KeyValues::parse(text).unwrap();
        kv.set("output", out.display().to_string());
        RunConfig::from_key_values(kv).unwrap()
    }

    #[test]
    fn simulate_writes_expected_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("n_samples = 100\na1 = 0, 0.3; 0.2, 0\nseed = 3\n", dir.path());
        let out = cmd_simulate(&cfg).unwrap();
        let series = fs::read_to_string(&out.series).unwrap();
        let truth = fs::read_to_string(&out.truth).unwrap();
        assert_eq!(series.lines().count(), 101);
        assert_eq!(truth.lines().count(), 101);
        assert_eq!(truth.lines().next().unwrap().split(',').count(), 5);
        let manifest = fs::read_to_string(&out.manifest).unwrap();
        assert!(manifest.contains("command = simulate\n"));
        assert!(manifest.contains("config.a1 = 0, 0.3; 0.2, 0\n"));
        assert!(manifest.contains("output.series.csv.sha256 = "));
    }

    #[test]
    fn recover_scores_every_factor() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(
            "n_samples = 400\na1 = 0, 0.3; 0.2, 0\nseed = 1\nmode = filter\nq = 0\nr = 1\n",
            dir.path(),
        );
        let report = cmd_recover(&cfg).unwrap();
        assert_eq!(report.scores.len(), 4);
        assert_eq!(report.score_from, 300);
        assert!(report.scores.iter().all(|s| s.rmse <= s.max_abs_error));
        let strict = RecoverReport {
            tolerance: 0.0,
            ..report.clone()
        };
        assert!(!strict.passed());
    }

    #[test]
    fn estimate_requires_input() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config("", dir.path());
        assert!(matches!(cmd_estimate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn labels_are_sanitized_for_file_names() {
        assert_eq!(sanitize("Bearing 1/x"), "Bearing_1_x");
    }
}
