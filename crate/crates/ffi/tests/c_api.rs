use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use causal_twin::kalman::{filter_pass, fixed_lag_smooth};
use causal_twin::model::{layout_for, GraphSpec};
use causal_twin::{NoiseConfig, ObservationSeries};
use causal_twin_ffi::*;

fn values(n: usize, g: usize) -> Vec<f64> {
    (0..n * g).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect()
}

fn noise() -> CtNoise {
    CtNoise { q: 1e-3, r: 0.5, p0: 1.0 }
}

fn reference(n: usize, g: usize) -> ObservationSeries {
    let rows = values(n, g).chunks(g).map(<[f64]>::to_vec).collect();
    ObservationSeries::from_rows(GraphSpec::with_nodes(g).unwrap().labels().to_vec(), rows).unwrap()
}

fn last_error() -> String {
    let p = ct_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn estimate_matches_core_filter() {
    let (n, g) = (30, 3);
    let v = values(n, g);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ct_series_new(v.as_ptr(), n, g, ptr::null(), &mut s), CtStatus::Ok);
        assert_eq!(ct_series_len(s), n);
        assert_eq!(ct_series_channels(s), g);
        let mut t = ptr::null_mut();
        assert_eq!(ct_estimate(s, CtMode::Filter, noise(), 0, &mut t), CtStatus::Ok);
        let dim = ct_trajectory_dim(t);
        let rows = ct_trajectory_rows(t);
        assert_eq!((dim, rows), (12, n - 1));
        let mut means = vec![0.0; dim * rows];
        assert_eq!(ct_trajectory_means(t, means.as_mut_ptr(), means.len()), CtStatus::Ok);
        let mut idx = vec![0usize; rows];
        assert_eq!(ct_trajectory_indices(t, idx.as_mut_ptr(), rows), CtStatus::Ok);
        assert_eq!(idx, (1..n).collect::<Vec<_>>());
        let mut sd = vec![0.0; dim * rows];
        assert_eq!(ct_trajectory_std_devs(t, sd.as_mut_ptr(), sd.len()), CtStatus::Ok);
        assert!(sd.iter().all(|&x| x > 0.0));

        let layout = layout_for(GraphSpec::with_nodes(g).unwrap()).unwrap();
        let nc = NoiseConfig::new(1e-3, 0.5, 1.0).unwrap();
        let core = filter_pass(&reference(n, g), &layout, &nc).unwrap().filtered();
        for (row, b) in means.chunks(dim).zip(&core) {
            assert_eq!(row, b.mean.as_slice());
        }
        ct_trajectory_free(t);
        ct_series_free(s);
    }
}

#[test]
fn streaming_fixed_lag_matches_batch() {
    let (n, g, depth) = (25, 2, 4);
    let v = values(n, g);
    let layout = layout_for(GraphSpec::with_nodes(g).unwrap()).unwrap();
    let nc = NoiseConfig::new(1e-3, 0.5, 1.0).unwrap();
    let batch = fixed_lag_smooth(&reference(n, g), &layout, &nc, depth).unwrap();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(ct_fixed_lag_new(g, noise(), depth, &mut h), CtStatus::Ok);
        let dim = ct_state_dim(g);
        let mut got: Vec<(usize, Vec<f64>)> = Vec::new();
        for row in v.chunks(g) {
            let mut mean = vec![0.0; dim];
            let (mut idx, mut ready) = (0usize, 0u8);
            let st = ct_fixed_lag_push(h, row.as_ptr(), g, 1, mean.as_mut_ptr(), dim, &mut idx, &mut ready);
            assert_eq!(st, CtStatus::Ok);
            if ready == 1 {
                got.push((idx, mean));
            }
        }
        assert_eq!(got.len(), n - 1 - depth);
        let mut tail = ptr::null_mut();
        assert_eq!(ct_fixed_lag_finish(h, &mut tail), CtStatus::Ok);
        let rows = ct_trajectory_rows(tail);
        assert_eq!(rows, depth);
        let mut means = vec![0.0; rows * dim];
        assert_eq!(ct_trajectory_means(tail, means.as_mut_ptr(), means.len()), CtStatus::Ok);
        let mut idx = vec![0usize; rows];
        ct_trajectory_indices(tail, idx.as_mut_ptr(), rows);
        got.extend(idx.into_iter().zip(means.chunks(dim).map(<[f64]>::to_vec)));
        for ((i, m), b) in got.iter().zip(&batch) {
            assert_eq!(*i, b.n);
            assert_eq!(m.as_slice(), b.mean.as_slice());
        }
        let (mut i, mut r) = (0usize, 0u8);
        let mut mean = vec![0.0; dim];
        let st = ct_fixed_lag_push(h, v.as_ptr(), g, 1, mean.as_mut_ptr(), dim, &mut i, &mut r);
        assert_eq!(st, CtStatus::InvalidArgument);
        ct_trajectory_free(tail);
        ct_fixed_lag_free(h);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        let v = values(4, 1);
        assert_eq!(ct_series_new(v.as_ptr(), 4, 1, ptr::null(), &mut s), CtStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(last_error().contains("degenerate graph"));

        assert_eq!(ct_series_new(ptr::null(), 4, 2, ptr::null(), &mut s), CtStatus::NullPointer);
        let v = values(4, 2);
        assert_eq!(ct_series_new(v.as_ptr(), 4, 2, ptr::null(), &mut s), CtStatus::Ok);
        let mut t = ptr::null_mut();
        let bad = CtNoise { q: -1.0, ..noise() };
        assert_eq!(ct_estimate(s, CtMode::Smooth, bad, 0, &mut t), CtStatus::InvalidArgument);
        assert_eq!(ct_estimate(s, CtMode::Smooth, noise(), 0, &mut t), CtStatus::Ok);
        let mut small = vec![0.0; 3];
        assert_eq!(ct_trajectory_means(t, small.as_mut_ptr(), 3), CtStatus::BufferTooSmall);
        assert!(last_error().contains("needed"));
        ct_trajectory_free(t);
        ct_series_free(s);

        let missing = c"/nonexistent/series.csv";
        assert_eq!(ct_series_load_csv(missing.as_ptr(), &mut s), CtStatus::Io);
        ct_series_free(ptr::null_mut());
    }
}

#[test]
fn column_names_follow_layout() {
    let mut buf = [0 as std::ffi::c_char; 32];
    unsafe {
        assert_eq!(ct_column_name(3, 1, buf.as_mut_ptr(), buf.len()), CtStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "y1_from_y3_inst");
        assert_eq!(ct_column_name(3, 12, buf.as_mut_ptr(), buf.len()), CtStatus::InvalidArgument);
        assert_eq!(ct_column_name(3, 1, buf.as_mut_ptr(), 4), CtStatus::BufferTooSmall);
    }
    assert_eq!(ct_state_dim(4), 24);
    let d = ct_noise_default();
    assert_eq!((d.q, d.r, d.p0), (1e-5, 1.0, 1.0));
    let v = unsafe { CStr::from_ptr(ct_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "causal_twin.h"

int main(void) {
    double y[20];
    for (int i = 0; i < 20; i++) y[i] = (i % 7) * 0.3 - 0.9;
    CtSeries *s = NULL;
    if (ct_series_new(y, 10, 2, NULL, &s) != CT_STATUS_OK) return 1;
    CtTrajectory *t = NULL;
    if (ct_estimate(s, CT_MODE_SMOOTH, ct_noise_default(), 0, &t) != CT_STATUS_OK) return 2;
    printf("%zu %zu\n", ct_trajectory_rows(t), ct_trajectory_dim(t));
    ct_trajectory_free(t);
    ct_series_free(s);
    return 0;
}
"#;

/// Compiles and links a C client against the static library when a C
/// compiler and the archive are available.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include = manifest.join("include");
    assert!(include.join("causal_twin.h").is_file());
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let archive = profile_dir.join("libcausal_twin_ffi.a");
    if !archive.is_file() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link check: static library or cc unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("client");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "9 4\n");
}
