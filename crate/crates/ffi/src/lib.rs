//! C ABI over the swatrack tracker.
//!
//! Frames and trackers are opaque handles created and released through this
//! interface. Every fallible call returns an [`SwtStatus`]; on failure the
//! message is available from [`swt_last_error`] on the same thread until the
//! next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use swatrack::appearance::{bhattacharyya_fitness, BinnedFrame, BoundingBox, Frame, Rgb};
use swatrack::tracker::{init_target, track_frame, TargetState, TrackRecord, TrackerConfig};
use swatrack::{eval, frame_io, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Initialization = 4,
    Io = 5,
    Parse = 6,
    Evaluation = 7,
    UndefinedMetric = 8,
    Panic = 9,
}

/// Axis-aligned box; `(x, y)` is the top-left corner.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwtBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// The tunable subset of the tracker configuration. Fill it with
/// [`swt_tracker_config_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwtTrackerConfig {
    pub particles: usize,
    pub k_init: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub omega0: f64,
    pub c10: f64,
    pub c20: f64,
    pub ef0: f64,
    pub t_minf: f64,
    pub seed: u64,
    /// Zero runs plain PSO with EF fixed at 1.
    pub adaptive: bool,
}

/// One frame's estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwtRecord {
    pub frame_index: usize,
    pub bbox: SwtBox,
    pub fitness: f64,
    pub iterations_used: usize,
    pub evaluations: usize,
    pub lost: bool,
}

/// An RGB image.
pub struct SwtFrame {
    inner: Frame,
}

/// A single-target tracker.
pub struct SwtTracker {
    cfg: TrackerConfig,
    state: TargetState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> SwtStatus {
    match err {
        Error::Config(_) => SwtStatus::Config,
        Error::Initialization(_) => SwtStatus::Initialization,
        Error::Evaluation { .. } => SwtStatus::Evaluation,
        Error::UndefinedMetric(_) => SwtStatus::UndefinedMetric,
        Error::Io { .. } => SwtStatus::Io,
        Error::Ppm { .. } | Error::Csv { .. } => SwtStatus::Parse,
        Error::EmptyReport | Error::FrameMismatch { .. } => SwtStatus::InvalidArgument,
    }
}

struct Failure(SwtStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SwtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SwtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SwtStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SwtStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_box(b: &SwtBox) -> Result<BoundingBox, Failure> {
    Ok(BoundingBox::new(b.x, b.y, b.w, b.h)?)
}

fn from_box(b: &BoundingBox) -> SwtBox {
    SwtBox { x: b.x, y: b.y, w: b.w, h: b.h }
}

fn from_record(r: &TrackRecord) -> SwtRecord {
    SwtRecord {
        frame_index: r.frame_index,
        bbox: from_box(&r.bbox),
        fitness: r.fitness,
        iterations_used: r.iterations_used,
        evaluations: r.evaluations,
        lost: r.lost,
    }
}

fn to_config(c: &SwtTrackerConfig) -> TrackerConfig {
    TrackerConfig {
        particles: c.particles,
        k_init: c.k_init,
        k_min: c.k_min,
        k_max: c.k_max,
        omega0: c.omega0,
        c10: c.c10,
        c20: c.c20,
        ef0: c.ef0,
        t_minf: c.t_minf,
        seed: c.seed,
        adaptive: c.adaptive,
        ..TrackerConfig::default()
    }
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn swt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn swt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a frame from `width * height` packed RGB triples (row-major,
/// `3 * width * height` bytes).
///
/// # Safety
/// `rgb` must point to `len` readable bytes and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn swt_frame_new(
    width: usize,
    height: usize,
    rgb: *const u8,
    len: usize,
    out_frame: *mut *mut SwtFrame,
) -> SwtStatus {
    guard(|| {
        let slot = out(out_frame, "out_frame")?;
        if rgb.is_null() {
            return Err(null("rgb"));
        }
        let expected = width.checked_mul(height).and_then(|n| n.checked_mul(3));
        if expected != Some(len) {
            return Err(Failure(
                SwtStatus::InvalidArgument,
                format!("{len} bytes given for a {width}x{height} RGB frame"),
            ));
        }
        let bytes = std::slice::from_raw_parts(rgb, len);
        let pixels: Vec<Rgb> = bytes.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let frame = Frame::new(width, height, pixels)?;
        *slot = Box::into_raw(Box::new(SwtFrame { inner: frame }));
        Ok(())
    })
}

/// Reads a binary PPM (P6) file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_frame` writable.
#[no_mangle]
pub unsafe extern "C" fn swt_frame_load_ppm(path: *const c_char, out_frame: *mut *mut SwtFrame) -> SwtStatus {
    guard(|| {
        let slot = out(out_frame, "out_frame")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(SwtStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let frame = frame_io::load_ppm(path)?;
        *slot = Box::into_raw(Box::new(SwtFrame { inner: frame }));
        Ok(())
    })
}

/// Releases a frame. Null is ignored.
///
/// # Safety
/// `frame` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn swt_frame_free(frame: *mut SwtFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Width in pixels, or 0 for null.
///
/// # Safety
/// `frame` must be null or a live frame handle.
#[no_mangle]
pub unsafe extern "C" fn swt_frame_width(frame: *const SwtFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.inner.width())
}

/// Height in pixels, or 0 for null.
///
/// # Safety
/// `frame` must be null or a live frame handle.
#[no_mangle]
pub unsafe extern "C" fn swt_frame_height(frame: *const SwtFrame) -> usize {
    frame.as_ref().map_or(0, |f| f.inner.height())
}

/// Writes the default configuration into `out_config`.
///
/// # Safety
/// `out_config` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swt_tracker_config_default(out_config: *mut SwtTrackerConfig) -> SwtStatus {
    guard(|| {
        let d = TrackerConfig::default();
        *out(out_config, "out_config")? = SwtTrackerConfig {
            particles: d.particles,
            k_init: d.k_init,
            k_min: d.k_min,
            k_max: d.k_max,
            omega0: d.omega0,
            c10: d.c10,
            c20: d.c20,
            ef0: d.ef0,
            t_minf: d.t_minf,
            seed: d.seed,
            adaptive: d.adaptive,
        };
        Ok(())
    })
}

/// Creates a tracker from the target's box in its first frame. A null
/// `config` means defaults.
///
/// # Safety
/// Pointers must be null (where allowed) or valid; `out_tracker` writable.
#[no_mangle]
pub unsafe extern "C" fn swt_tracker_new(
    config: *const SwtTrackerConfig,
    first_frame: *const SwtFrame,
    initial_box: SwtBox,
    out_tracker: *mut *mut SwtTracker,
) -> SwtStatus {
    guard(|| {
        let slot = out(out_tracker, "out_tracker")?;
        let frame = deref(first_frame, "first_frame")?;
        let cfg = config.as_ref().map_or_else(TrackerConfig::default, to_config);
        let state = init_target(&frame.inner, to_box(&initial_box)?, &cfg)?;
        *slot = Box::into_raw(Box::new(SwtTracker { cfg, state }));
        Ok(())
    })
}

/// Estimates the target in the next frame.
///
/// # Safety
/// `tracker` and `frame` must be live handles; `out_record` writable.
#[no_mangle]
pub unsafe extern "C" fn swt_tracker_step(
    tracker: *mut SwtTracker,
    frame: *const SwtFrame,
    out_record: *mut SwtRecord,
) -> SwtStatus {
    guard(|| {
        let slot = out(out_record, "out_record")?;
        let tracker = out(tracker, "tracker")?;
        let frame = deref(frame, "frame")?;
        let record = track_frame(&mut tracker.state, &frame.inner, &tracker.cfg)?;
        *slot = from_record(&record);
        Ok(())
    })
}

/// Releases a tracker. Null is ignored.
///
/// # Safety
/// `tracker` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn swt_tracker_free(tracker: *mut SwtTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Harmonic mean of recall and precision of `estimate` against `truth`.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn swt_f_measure(truth: SwtBox, estimate: SwtBox, out_value: *mut f64) -> SwtStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        *slot = eval::f_measure(&to_box(&truth)?, &to_box(&estimate)?)?;
        Ok(())
    })
}

/// Bhattacharyya coefficient between the colour histograms under two boxes.
/// Yields 0 when either box covers no pixels.
///
/// # Safety
/// Frame handles must be live; `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn swt_similarity(
    frame_a: *const SwtFrame,
    box_a: SwtBox,
    frame_b: *const SwtFrame,
    box_b: SwtBox,
    out_value: *mut f64,
) -> SwtStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let (fa, fb) = (deref(frame_a, "frame_a")?, deref(frame_b, "frame_b")?);
        let layout = TrackerConfig::default().layout;
        let p = BinnedFrame::new(&fa.inner, layout).histogram(&to_box(&box_a)?);
        let q = BinnedFrame::new(&fb.inner, layout).histogram(&to_box(&box_b)?);
        *slot = bhattacharyya_fitness(&p, &q).fitness();
        Ok(())
    })
}
