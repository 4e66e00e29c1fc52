//! C ABI for qslab.
//!
//! Every fallible call returns a [`QslabStatus`] and writes results through
//! out-pointers. On failure the message is kept per thread and can be read
//! with [`qslab_last_error`]. Channels are opaque handles created by the
//! `qslab_channel_*` constructors and released with [`qslab_channel_free`].
//! Strings returned by the library must be released with
//! [`qslab_string_free`].
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qslab::qsl::{compute, AdSpeedForm, BoundKind, BoundOptions};
use qslab::sweep::fig_preset;
use qslab::{BlochState, ChannelModel, QslError};

/// Result code of every fallible call. Zero means success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidState = 3,
    NegativeTime = 4,
    SingularRate = 5,
    Degenerate = 6,
    GridTooCoarse = 7,
    NoConvergence = 8,
    NonFinite = 9,
    NegativeRadicand = 10,
    Io = 11,
    InvalidUtf8 = 12,
    /// A sweep finished but some points failed.
    Partial = 13,
    Panic = 14,
}

impl From<&QslError> for QslabStatus {
    fn from(e: &QslError) -> Self {
        match e {
            QslError::InvalidParameter(_) => QslabStatus::InvalidParameter,
            QslError::InvalidState { .. } => QslabStatus::InvalidState,
            QslError::NegativeTime(_) => QslabStatus::NegativeTime,
            QslError::SingularRate { .. } => QslabStatus::SingularRate,
            QslError::Degenerate(_) => QslabStatus::Degenerate,
            QslError::GridTooCoarse { .. } => QslabStatus::GridTooCoarse,
            QslError::NoConvergence { .. } => QslabStatus::NoConvergence,
            QslError::NonFinite(_) => QslabStatus::NonFinite,
            QslError::NegativeRadicand { .. } => QslabStatus::NegativeRadicand,
            QslError::Io(_) => QslabStatus::Io,
        }
    }
}

/// Opaque channel handle.
pub struct QslabChannel {
    inner: ChannelModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    // interior NULs cannot cross the boundary, so drop them
    let msg = CString::new(msg.replace('\0', "")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard<F>(f: F) -> QslabStatus
where
    F: FnOnce() -> Result<(), (QslabStatus, String)>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QslabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_owned());
            QslabStatus::Panic
        }
    }
}

fn lib_err(e: QslError) -> (QslabStatus, String) {
    (QslabStatus::from(&e), e.to_string())
}

fn null(what: &str) -> (QslabStatus, String) {
    (QslabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn channel_ref<'a>(
    ch: *const QslabChannel,
) -> Result<&'a ChannelModel, (QslabStatus, String)> {
    ch.as_ref().map(|c| &c.inner).ok_or_else(|| null("channel"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (QslabStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (QslabStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        (
            QslabStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn make_channel(
    out: *mut *mut QslabChannel,
    build: impl FnOnce() -> qslab::Result<ChannelModel>,
) -> QslabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = build().map_err(lib_err)?;
        out.write(Box::into_raw(Box::new(QslabChannel { inner })));
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next qslab call on the same thread.
#[no_mangle]
pub extern "C" fn qslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Ornstein-Uhlenbeck dephasing with coupling `mu` and bandwidth `gamma_big`.
#[no_mangle]
pub unsafe extern "C" fn qslab_channel_oun(
    mu: f64,
    gamma_big: f64,
    out: *mut *mut QslabChannel,
) -> QslabStatus {
    make_channel(out, || ChannelModel::oun(mu, gamma_big))
}

/// Random telegraph dephasing with amplitude `a` and switching rate `mu`.
#[no_mangle]
pub unsafe extern "C" fn qslab_channel_rtn(
    a: f64,
    mu: f64,
    out: *mut *mut QslabChannel,
) -> QslabStatus {
    make_channel(out, || ChannelModel::rtn(a, mu))
}

/// Non-Markovian amplitude damping with coupling `mu` and width `gamma_big`.
#[no_mangle]
pub unsafe extern "C" fn qslab_channel_nmad(
    mu: f64,
    gamma_big: f64,
    out: *mut *mut QslabChannel,
) -> QslabStatus {
    make_channel(out, || ChannelModel::nmad(mu, gamma_big))
}

/// Releases a handle. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qslab_channel_free(ch: *mut QslabChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// Human-readable tag such as `oun(mu=1,gamma_big=0.1)`; free with
/// [`qslab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn qslab_channel_tag(
    ch: *const QslabChannel,
    out: *mut *mut c_char,
) -> QslabStatus {
    guard(|| {
        let c = channel_ref(ch)?;
        let s = CString::new(c.tag()).map_err(|e| (QslabStatus::InvalidUtf8, e.to_string()))?;
        write_out(out, s.into_raw(), "out")
    })
}

/// Releases a string returned by this library. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qslab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decoherence function p(t).
#[no_mangle]
pub unsafe extern "C" fn qslab_decoherence(
    ch: *const QslabChannel,
    t: f64,
    out: *mut f64,
) -> QslabStatus {
    guard(|| {
        let v = channel_ref(ch)?.decoherence_p(t).map_err(lib_err)?;
        write_out(out, v, "out")
    })
}

/// Time-local rate γ(t).
#[no_mangle]
pub unsafe extern "C" fn qslab_rate(ch: *const QslabChannel, t: f64, out: *mut f64) -> QslabStatus {
    guard(|| {
        let v = channel_ref(ch)?.rate_gamma(t).map_err(lib_err)?;
        write_out(out, v, "out")
    })
}

/// Evolves the Bloch vector `r_in[3]` to time `t`, writing `r_out[3]`.
/// The two arrays may alias.
#[no_mangle]
pub unsafe extern "C" fn qslab_evolve(
    ch: *const QslabChannel,
    r_in: *const f64,
    t: f64,
    r_out: *mut f64,
) -> QslabStatus {
    guard(|| {
        let c = channel_ref(ch)?;
        if r_in.is_null() {
            return Err(null("r_in"));
        }
        if r_out.is_null() {
            return Err(null("r_out"));
        }
        let s = BlochState::new(*r_in, *r_in.add(1), *r_in.add(2)).map_err(lib_err)?;
        let r = c.evolve(&s, t).map_err(lib_err)?.to_bloch();
        r_out.write(r.rx);
        r_out.add(1).write(r.ry);
        r_out.add(2).write(r.rz);
        Ok(())
    })
}

/// Memory measure ζ over `[0, horizon]` on a grid of `grid` points.
/// `gamma_star` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn qslab_zeta(
    ch: *const QslabChannel,
    horizon: f64,
    grid: usize,
    zeta: *mut f64,
    gamma_star: *mut f64,
) -> QslabStatus {
    guard(|| {
        let r = qslab::zeta(channel_ref(ch)?, horizon, grid).map_err(lib_err)?;
        write_out(zeta, r.zeta, "zeta")?;
        if !gamma_star.is_null() {
            gamma_star.write(r.gamma_star);
        }
        Ok(())
    })
}

/// Speed-limit bound named by `bound` (`relative_purity`, `fisher_speed`,
/// `bures_dl_op`, `wu_mixed_tr`, ...) for the Bloch vector `r[3]`.
#[no_mangle]
pub unsafe extern "C" fn qslab_qsl(
    ch: *const QslabChannel,
    r: *const f64,
    tau: f64,
    bound: *const c_char,
    closed_form: bool,
    out: *mut f64,
) -> QslabStatus {
    guard(|| {
        let c = channel_ref(ch)?;
        if r.is_null() {
            return Err(null("r"));
        }
        let kind: BoundKind = read_str(bound, "bound")?.parse().map_err(lib_err)?;
        let s = BlochState::new(*r, *r.add(1), *r.add(2)).map_err(lib_err)?;
        let opts = BoundOptions {
            closed_form,
            ad_speed: AdSpeedForm::Derived,
        };
        let v = compute(c, &s, tau, kind, opts).map_err(lib_err)?;
        write_out(out, v.value, "out")
    })
}

/// Writes figure preset `id` (1-4) as CSV, SVG and JSON under `out_dir`.
/// `jobs` = 0 uses every core. Returns `Partial` if some points failed.
#[no_mangle]
pub unsafe extern "C" fn qslab_fig_preset(
    id: u8,
    out_dir: *const c_char,
    jobs: usize,
) -> QslabStatus {
    guard(|| {
        let dir = read_str(out_dir, "out_dir")?;
        let out = fig_preset(id, Path::new(dir), jobs).map_err(lib_err)?;
        match out.failed_points() {
            0 => Ok(()),
            n => Err((QslabStatus::Partial, format!("{n} sweep point(s) failed"))),
        }
    })
}
