use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_causal-twin");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.conf");
    fs::write(&p, text).unwrap();
    p
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const G4: &str = "nodes = 4\na1 = random\nnoise_scale = 0.5\nn_samples = 300\nseed = 11\n";

fn simulate_g4(dir: &Path) -> PathBuf {
    let conf = write_config(dir, G4);
    let out = dir.join("sim");
    run_ok(&["simulate", "--config", path(&conf), "--output", path(&out)]);
    out.join("series.csv")
}

#[test]
fn simulate_two_nodes_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "n_samples = 100\na1 = 0, 0.3; 0.2, 0\nseed = 5\n");
    run_ok(&["simulate", "--config", path(&conf), "--output", path(dir.path())]);
    let series = csv_rows(&dir.path().join("series.csv"));
    assert_eq!(series.len(), 101);
    assert_eq!(series[0], ["timestamp", "contiguous", "y1", "y2"]);
    let truth = csv_rows(&dir.path().join("truth.csv"));
    assert_eq!(truth.len(), 101);
    assert!(truth.iter().all(|r| r.len() == 5));
    assert_eq!(truth[1][1..], ["0", "0.3", "0", "0.2"]);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 5\n") && manifest.contains("version = "));
}

#[test]
fn unstable_lagged_matrix_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "n_samples = 100\na1 = 0, 1.2; 1.2, 0\n");
    let out = run(&["simulate", "--config", path(&conf), "--output", path(dir.path())]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spectral radius 1.2"), "{err}");
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_g4(a.path());
    simulate_g4(b.path());
    for f in ["series.csv", "truth.csv", "manifest.txt"] {
        assert_eq!(fs::read(a.path().join("sim").join(f)).unwrap(), fs::read(b.path().join("sim").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn estimate_smooth_has_all_factor_columns_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let out = dir.path().join("est");
    run_ok(&["estimate", "--input", path(&series), "--output", path(&out), "--mode", "smooth", "--plots"]);
    let rows = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(rows[0].len(), 25);
    assert_eq!(rows[0][0], "timestamp");
    assert_eq!(rows[0][1], "y1_from_y2_inst");
    assert_eq!(rows[0][24], "y4_from_y3_lag");
    assert_eq!(rows.len(), 300);
    for k in 1..=4 {
        let svg = fs::read_to_string(out.join(format!("plots/y{k}.svg"))).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 6);
        assert!(svg.contains("time index") && svg.contains("factor value"));
    }
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("input.sha256 = "));
    assert!(manifest.contains("output.plots/y1.svg.sha256 = "));
}

#[test]
fn filter_equals_fixed_lag_zero() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let f = dir.path().join("f");
    let l = dir.path().join("l");
    run_ok(&["estimate", "--input", path(&series), "--output", path(&f), "--mode", "filter"]);
    run_ok(&["estimate", "--input", path(&series), "--output", path(&l), "--mode", "fixed-lag", "--lag-depth", "0"]);
    assert_eq!(fs::read(f.join("trajectory.csv")).unwrap(), fs::read(l.join("trajectory.csv")).unwrap());
}

#[test]
fn zero_process_noise_smooth_rows_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let out = dir.path().join("e");
    run_ok(&["estimate", "--input", path(&series), "--output", path(&out), "--q", "0", "--r", "0.25"]);
    let rows = csv_rows(&out.join("trajectory.csv"));
    let last: Vec<f64> = rows.last().unwrap()[1..].iter().map(|v| v.parse().unwrap()).collect();
    for r in &rows[1..] {
        for (v, l) in r[1..].iter().zip(&last) {
            assert!((v.parse::<f64>().unwrap() - l).abs() <= 1e-10);
        }
    }
}

#[test]
fn include_std_doubles_factor_columns() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let out = dir.path().join("e");
    run_ok(&["estimate", "--input", path(&series), "--output", path(&out), "--set", "include_std=true"]);
    let rows = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(rows[0].len(), 49);
    assert_eq!(rows[0][25], "y1_from_y2_inst_sd");
}

#[test]
fn tune_grids() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let one = dir.path().join("one");
    run_ok(&["tune", "--input", path(&series), "--output", path(&one), "--set", "q_grid=1e-5", "--set", "r_grid=0.5"]);
    let rows = csv_rows(&one.join("tune.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], ["q", "r", "loglik", "best"]);
    assert_eq!(rows[1][3], "1");

    let nine = dir.path().join("nine");
    run_ok(&[
        "tune", "--input", path(&series), "--output", path(&nine),
        "--set", "q_grid=0, 1e-5, 1e-3", "--set", "r_grid=0.1, 0.25, 1",
    ]);
    let rows = csv_rows(&nine.join("tune.csv"));
    assert_eq!(rows.len(), 10);
    let ll: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    let flagged: Vec<usize> = (0..9).filter(|&i| rows[i + 1][3] == "1").collect();
    assert_eq!(flagged.len(), 1);
    assert!(ll.iter().all(|&v| v <= ll[flagged[0]]));
    let manifest = fs::read_to_string(nine.join("manifest.txt")).unwrap();
    assert!(manifest.contains(&format!("selected.r = {}", rows[flagged[0] + 1][1])));
}

#[test]
fn ingest_and_estimate_snapshot_directory() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/snapshots");
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["ingest", "--input", path(&fixtures), "--output", path(dir.path()), "--feature", "peak", "--channels", "0,1,2,3"]);
    let rows = csv_rows(&dir.path().join("series.csv"));
    assert_eq!(rows.len(), 7);
    let flags: Vec<&str> = rows[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(flags, ["0", "1", "1", "0", "1", "1"]);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("gaps = 1\n") && manifest.contains("standardization.mean = "));

    let est = dir.path().join("est");
    run_ok(&["estimate", "--input", path(&fixtures), "--output", path(&est), "--mode", "filter"]);
    assert_eq!(csv_rows(&est.join("trajectory.csv")).len(), 6);
}

#[test]
fn recover_pass_fail_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "nodes = 3\na1 = random\nnoise_scale = 0.5\nn_samples = 4000\nseed = 2\nmode = smooth\nq = 0\nr = 0.25\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = run_ok(&["recover", "--config", path(&conf), "--output", path(&a)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    run_ok(&["recover", "--config", path(&conf), "--output", path(&b)]);
    for f in ["recover.csv", "trajectory.csv", "truth.csv", "series.csv", "manifest.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let strict = run(&["recover", "--config", path(&conf), "--output", path(&a), "--set", "tolerance=0"]);
    assert_eq!(strict.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&strict.stdout).contains("FAIL"));
}

#[test]
fn usage_and_parse_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["estimate", "--output", path(dir.path())]).status.code(), Some(2));
    assert_eq!(run(&["estimate", "--mode", "sideways"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "timestamp,contiguous,y1,y2\n0,0,1,2\n1,1,x,3\n").unwrap();
    let out = run(&["estimate", "--input", path(&bad), "--output", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:3"));
    let missing = dir.path().join("missing.csv");
    assert_eq!(run(&["estimate", "--input", path(&missing)]).status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let series = simulate_g4(dir.path());
    let conf = write_config(dir.path(), "mode = filter\nq = 0.5\n");
    let out = dir.path().join("o");
    run_ok(&["estimate", "--config", path(&conf), "--input", path(&series), "--output", path(&out), "--q", "0"]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("config.q = 0\n") && manifest.contains("config.mode = filter\n"));
}
