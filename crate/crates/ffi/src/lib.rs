//! C ABI over the causal-twin estimator.
//!
//! Objects cross the boundary as opaque handles created by `ct_*_new` /
//! `ct_*_load` style functions and released with the matching `ct_*_free`.
//! Every fallible call returns a [`CtStatus`]; on failure a description is
//! available from [`ct_last_error_message`] until the next failing call on
//! the same thread. Matrices are row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use causal_twin::config::Mode;
use causal_twin::kalman::{filter_pass, fixed_lag_smooth, rts_smooth, FixedLagSmoother};
use causal_twin::model::{layout_for, GraphSpec, StateLayout};
use causal_twin::{Belief, Error, ErrorClass, NoiseConfig, ObservationSeries};

/// Result of every fallible call. Values match the CLI exit codes where
/// both exist.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    Io = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    Numerical = 5,
    NullPointer = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

/// Estimation mode for [`ct_estimate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtMode {
    Filter = 0,
    Smooth = 1,
    FixedLag = 2,
}

/// Noise settings: random-walk variance `q`, measurement variance `r`,
/// initial factor variance `p0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtNoise {
    pub q: f64,
    pub r: f64,
    pub p0: f64,
}

/// Observed multichannel series.
pub struct CtSeries {
    inner: ObservationSeries,
}

/// Estimated factor trajectory: one row per estimated sample index.
pub struct CtTrajectory {
    layout: StateLayout,
    beliefs: Vec<Belief>,
}

/// Streaming fixed-lag smoother.
pub struct CtFixedLag {
    inner: Option<FixedLagSmoother>,
    layout: StateLayout,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Buffer { needed: usize, given: usize },
    Argument(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(class: ErrorClass) -> CtStatus {
    match class {
        ErrorClass::Io => CtStatus::Io,
        ErrorClass::Usage => CtStatus::InvalidArgument,
        ErrorClass::Parse => CtStatus::Parse,
        ErrorClass::Validation => CtStatus::Validation,
        ErrorClass::Numerical => CtStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CtStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(e.class())
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CtStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, given })) => {
            set_error(format!("buffer holds {given} values, {needed} needed"));
            CtStatus::BufferTooSmall
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_error(msg);
            CtStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            CtStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure::Buffer { needed, given: len });
    }
    if p.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

fn noise_config(noise: CtNoise) -> Result<NoiseConfig, Failure> {
    Ok(NoiseConfig::new(noise.q, noise.r, noise.p0)?)
}

fn default_layout(channels: usize) -> Result<StateLayout, Failure> {
    Ok(layout_for(GraphSpec::with_nodes(channels)?)?)
}

/// Message for the most recent failure on this thread, or NULL. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of causal factors tracked for `nodes` assets: `2 * nodes * (nodes - 1)`.
#[no_mangle]
pub extern "C" fn ct_state_dim(nodes: usize) -> usize {
    2 * nodes * nodes.saturating_sub(1)
}

/// Default `(q, r, p0)` noise settings.
#[no_mangle]
pub extern "C" fn ct_noise_default() -> CtNoise {
    let d = NoiseConfig::default();
    CtNoise {
        q: d.q,
        r: d.r,
        p0: d.p0,
    }
}

/// Writes the CSV column name of factor `index` (nodes labelled `y1..yG`)
/// into `buf` as a NUL-terminated string.
///
/// # Safety
/// `buf` must point to `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ct_column_name(
    nodes: usize,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
) -> CtStatus {
    guard(|| {
        let layout = default_layout(nodes)?;
        let name = layout.column_name(index).ok_or(Error::IndexOutOfRange {
            index,
            limit: layout.dim(),
        })?;
        if buf_len < name.len() + 1 {
            return Err(Failure::Buffer {
                needed: name.len() + 1,
                given: buf_len,
            });
        }
        if buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        ptr::copy_nonoverlapping(name.as_ptr().cast::<c_char>(), buf, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// Builds a series from `samples x channels` row-major values. `contiguous`
/// may be NULL (all samples contiguous) or hold one flag per sample;
/// flag 0 is ignored.
///
/// # Safety
/// `values` must hold `samples * channels` doubles, `contiguous` (if not
/// NULL) `samples` bytes, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_series_new(
    values: *const f64,
    samples: usize,
    channels: usize,
    contiguous: *const u8,
    out: *mut *mut CtSeries,
) -> CtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let total = samples
            .checked_mul(channels)
            .ok_or_else(|| Failure::Argument("samples * channels overflows".into()))?;
        let data = slice(values, total, "values")?;
        let rows: Vec<Vec<f64>> = data.chunks(channels.max(1)).map(<[f64]>::to_vec).collect();
        let labels = GraphSpec::with_nodes(channels)?.labels().to_vec();
        let series = if contiguous.is_null() {
            ObservationSeries::from_rows(labels, rows)?
        } else {
            let flags = slice(contiguous, samples, "contiguous")?;
            let first = ObservationSeries::from_rows(labels.clone(), rows.clone())?;
            ObservationSeries::new(
                labels,
                rows,
                first.timestamps().to_vec(),
                flags.iter().map(|&f| f != 0).collect(),
            )?
        };
        *out = Box::into_raw(Box::new(CtSeries { inner: series }));
        Ok(())
    })
}

/// Loads a series CSV (`timestamp,contiguous,<channels...>`).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_series_load_csv(path: *const c_char, out: *mut *mut CtSeries) -> CtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let path = CStr::from_ptr(as_ref(path, "path")?)
            .to_str()
            .map_err(|_| Failure::Argument("path is not valid UTF-8".into()))?;
        let series = ObservationSeries::load_csv(Path::new(path))?;
        *out = Box::into_raw(Box::new(CtSeries { inner: series }));
        Ok(())
    })
}

/// Sample count, or 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_series_len(series: *const CtSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.len())
}

/// Channel count, or 0 for NULL.
///
/// # Safety
/// `series` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_series_channels(series: *const CtSeries) -> usize {
    series.as_ref().map_or(0, |s| s.inner.channels())
}

/// # Safety
/// `series` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_series_free(series: *mut CtSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Estimates the factor trajectory of `series`. `lag_depth` is used only
/// with [`CtMode::FixedLag`].
///
/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_estimate(
    series: *const CtSeries,
    mode: CtMode,
    noise: CtNoise,
    lag_depth: usize,
    out: *mut *mut CtTrajectory,
) -> CtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let series = &as_ref(series, "series")?.inner;
        let layout = default_layout(series.channels())?;
        let noise = noise_config(noise)?;
        let mode = match mode {
            CtMode::Filter => Mode::Filter,
            CtMode::Smooth => Mode::Smooth,
            CtMode::FixedLag => Mode::FixedLag,
        };
        let beliefs = match mode {
            Mode::Filter => filter_pass(series, &layout, &noise)?.filtered(),
            Mode::Smooth => rts_smooth(&filter_pass(series, &layout, &noise)?)?,
            Mode::FixedLag => fixed_lag_smooth(series, &layout, &noise, lag_depth)?,
        };
        *out = Box::into_raw(Box::new(CtTrajectory { layout, beliefs }));
        Ok(())
    })
}

/// Row count, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_rows(traj: *const CtTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.beliefs.len())
}

/// Factors per row, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_dim(traj: *const CtTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.layout.dim())
}

/// Series sample index of each row, written into `buf` (`rows` entries).
///
/// # Safety
/// `traj` must be a live handle and `buf` hold `buf_len` entries.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_indices(
    traj: *const CtTrajectory,
    buf: *mut usize,
    buf_len: usize,
) -> CtStatus {
    guard(|| {
        let t = as_ref(traj, "trajectory")?;
        let needed = t.beliefs.len();
        if buf_len < needed {
            return Err(Failure::Buffer {
                needed,
                given: buf_len,
            });
        }
        if needed > 0 && buf.is_null() {
            return Err(Failure::Null("buf"));
        }
        for (i, b) in t.beliefs.iter().enumerate() {
            *buf.add(i) = b.n;
        }
        Ok(())
    })
}

/// Copies the `rows x dim` posterior means, row-major.
///
/// # Safety
/// `traj` must be a live handle and `buf` hold `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_means(
    traj: *const CtTrajectory,
    buf: *mut f64,
    buf_len: usize,
) -> CtStatus {
    guard(|| {
        let t = as_ref(traj, "trajectory")?;
        let dim = t.layout.dim();
        let out = out_slice(buf, buf_len, dim * t.beliefs.len())?;
        for (row, b) in out.chunks_mut(dim).zip(&t.beliefs) {
            row.copy_from_slice(b.mean.as_slice());
        }
        Ok(())
    })
}

/// Copies the `rows x dim` posterior standard deviations, row-major.
///
/// # Safety
/// `traj` must be a live handle and `buf` hold `buf_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_std_devs(
    traj: *const CtTrajectory,
    buf: *mut f64,
    buf_len: usize,
) -> CtStatus {
    guard(|| {
        let t = as_ref(traj, "trajectory")?;
        let dim = t.layout.dim();
        let out = out_slice(buf, buf_len, dim * t.beliefs.len())?;
        for (row, b) in out.chunks_mut(dim).zip(&t.beliefs) {
            row.copy_from_slice(b.std_devs().as_slice());
        }
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_trajectory_free(traj: *mut CtTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Creates a streaming fixed-lag smoother for `nodes` assets.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_fixed_lag_new(
    nodes: usize,
    noise: CtNoise,
    lag_depth: usize,
    out: *mut *mut CtFixedLag,
) -> CtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let layout = default_layout(nodes)?;
        let smoother = FixedLagSmoother::new(layout.clone(), noise_config(noise)?, lag_depth)?;
        *out = Box::into_raw(Box::new(CtFixedLag {
            inner: Some(smoother),
            layout,
        }));
        Ok(())
    })
}

/// Feeds one sample of `channels` values. When an estimate becomes due,
/// `*ready` is set to 1, `*index` to its sample index and `mean` receives
/// the `dim` factor means; otherwise `*ready` is 0.
///
/// # Safety
/// `smoother` must be a live handle, `y` hold `channels` doubles, `mean`
/// hold `mean_len` doubles, and `index` and `ready` be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_fixed_lag_push(
    smoother: *mut CtFixedLag,
    y: *const f64,
    channels: usize,
    contiguous: u8,
    mean: *mut f64,
    mean_len: usize,
    index: *mut usize,
    ready: *mut u8,
) -> CtStatus {
    guard(|| {
        let h = as_mut(smoother, "smoother")?;
        let ready = as_mut(ready, "ready")?;
        *ready = 0;
        let index = as_mut(index, "index")?;
        let dim = h.layout.dim();
        if mean_len < dim {
            return Err(Failure::Buffer {
                needed: dim,
                given: mean_len,
            });
        }
        let y = slice(y, channels, "y")?;
        let inner = h
            .inner
            .as_mut()
            .ok_or_else(|| Failure::Argument("smoother already finished".into()))?;
        if let Some(b) = inner.push(y, contiguous != 0)? {
            out_slice(mean, mean_len, dim)?.copy_from_slice(b.mean.as_slice());
            *index = b.n;
            *ready = 1;
        }
        Ok(())
    })
}

/// Flushes the estimates still held in the window as a trajectory. The
/// smoother accepts no further samples afterwards.
///
/// # Safety
/// `smoother` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_fixed_lag_finish(
    smoother: *mut CtFixedLag,
    out: *mut *mut CtTrajectory,
) -> CtStatus {
    guard(|| {
        let out = as_mut(out, "out")?;
        *out = ptr::null_mut();
        let h = as_mut(smoother, "smoother")?;
        let inner = h
            .inner
            .take()
            .ok_or_else(|| Failure::Argument("smoother already finished".into()))?;
        *out = Box::into_raw(Box::new(CtTrajectory {
            layout: h.layout.clone(),
            beliefs: inner.finish(),
        }));
        Ok(())
    })
}

/// # Safety
/// `smoother` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ct_fixed_lag_free(smoother: *mut CtFixedLag) {
    if !smoother.is_null() {
        drop(Box::from_raw(smoother));
    }
}
