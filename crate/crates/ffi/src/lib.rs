//! C ABI over the uekit scores and metrics.
//!
//! Every function returns a [`UekitStatus`]; results go through out-pointers.
//! On failure the message is available from [`uekit_last_error`] until the
//! next call on the same thread. Models are opaque handles released with the
//! matching `_free` function. Arrays are row-major and borrowed for the
//! duration of the call only.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use uekit::confidence::{minmax_normalize, ConfidenceVector, CorrectnessVector};
use uekit::features::{IsofModel, LofModel, TrainStats};
use uekit::metrics::{self, BinningConfig};
use uekit::prob_scores;
use uekit::selective;
use uekit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UekitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The quantity is undefined for this input (NA).
    Undefined = 3,
    Factorization = 4,
    Panic = 5,
}

/// Fitted class centroids and shared precision matrix.
pub struct UekitTrainStats(TrainStats);

/// Fitted Local Outlier Factor model.
pub struct UekitLof(LofModel);

/// Fitted Isolation Forest.
pub struct UekitIsof(IsofModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> UekitStatus {
    match e {
        Error::Undefined(_) => UekitStatus::Undefined,
        Error::Factorization { .. } => UekitStatus::Factorization,
        _ => UekitStatus::InvalidInput,
    }
}

struct Fail(UekitStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> UekitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            UekitStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UekitStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(UekitStatus::NullPointer, "null pointer argument".into())
}

unsafe fn view<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn rows(p: *const f64, n: usize, width: usize) -> Result<Vec<Vec<f64>>, Fail> {
    if width == 0 {
        return Err(Fail(UekitStatus::InvalidInput, "row width must be positive".into()));
    }
    let flat = view(p, n.checked_mul(width).ok_or_else(|| Fail(UekitStatus::InvalidInput, "size overflow".into()))?)?;
    Ok(flat.chunks(width).map(<[f64]>::to_vec).collect())
}

unsafe fn correctness(p: *const u8, n: usize) -> Result<CorrectnessVector, Fail> {
    Ok(CorrectnessVector::new(view(p, n)?.iter().map(|&b| b != 0).collect()))
}

unsafe fn confidence(p: *const f64, n: usize) -> Result<ConfidenceVector, Fail> {
    Ok(ConfidenceVector::new(view(p, n)?.to_vec())?)
}

/// Message of the last failed call on this thread (empty after success).
#[no_mangle]
pub extern "C" fn uekit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uekit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn one_row(probs: &[f64]) -> Result<(), Fail> {
    if probs.len() < 2 {
        return Err(Fail(UekitStatus::InvalidInput, "at least two classes required".into()));
    }
    Ok(())
}

/// Softmax response `1 - max p` of one probability row.
///
/// # Safety
/// `probs` must point to `class_count` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn uekit_sr(probs: *const f64, class_count: usize, out: *mut f64) -> UekitStatus {
    guard(|| {
        let p = view(probs, class_count)?;
        one_row(p)?;
        put(out, prob_scores::sr(p))
    })
}

/// Natural-log entropy of one probability row.
///
/// # Safety
/// As [`uekit_sr`].
#[no_mangle]
pub unsafe extern "C" fn uekit_ent(probs: *const f64, class_count: usize, out: *mut f64) -> UekitStatus {
    guard(|| {
        let p = view(probs, class_count)?;
        one_row(p)?;
        put(out, prob_scores::ent(p))
    })
}

/// Scores computed from `passes × class_count` stochastic probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UekitPassScore {
    Smp = 0,
    EntMc = 1,
    Pv = 2,
    Bald = 3,
}

/// One multi-pass score of a single instance.
///
/// # Safety
/// `probs` must point to `passes * class_count` doubles and `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn uekit_pass_score(
    kind: UekitPassScore,
    probs: *const f64,
    passes: usize,
    class_count: usize,
    out: *mut f64,
) -> UekitStatus {
    guard(|| {
        if passes == 0 {
            return Err(Fail(UekitStatus::InvalidInput, "at least one pass required".into()));
        }
        let p = rows(probs, passes, class_count)?;
        one_row(&p[0])?;
        let v = match kind {
            UekitPassScore::Smp => prob_scores::smp(&p),
            UekitPassScore::EntMc => prob_scores::ent_mc(&p),
            UekitPassScore::Pv => prob_scores::pv(&p),
            UekitPassScore::Bald => prob_scores::bald(&p),
        };
        put(out, v)
    })
}

/// Confidence `1 - minmax(u)`; a constant vector maps to 0.5.
///
/// # Safety
/// `scores` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn uekit_confidence(scores: *const f64, n: usize, out: *mut f64) -> UekitStatus {
    guard(|| {
        let u = view(scores, n)?;
        let norm = minmax_normalize(u)?;
        if out.is_null() {
            return Err(null());
        }
        for (i, v) in norm.into_iter().enumerate() {
            out.add(i).write(1.0 - v);
        }
        Ok(())
    })
}

/// Confidence-based metrics over `n` instances.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UekitMetric {
    RocAuc = 0,
    CSlope = 1,
    Citl = 2,
    /// Uses `bins` equal-width bins.
    Ece = 3,
    RcAuc = 4,
    NrcAuc = 5,
}

/// One metric from correctness flags (non-zero = correct) and confidences in [0, 1].
///
/// # Safety
/// `correct` must hold `n` bytes, `conf` `n` doubles, and `out` one writable double.
#[no_mangle]
pub unsafe extern "C" fn uekit_metric(
    metric: UekitMetric,
    correct: *const u8,
    conf: *const f64,
    n: usize,
    bins: usize,
    out: *mut f64,
) -> UekitStatus {
    guard(|| {
        let y = correctness(correct, n)?;
        let c = confidence(conf, n)?;
        let v = match metric {
            UekitMetric::RocAuc => metrics::roc_auc(&y, &c)?,
            UekitMetric::CSlope => metrics::c_slope(&y, &c)?.slope,
            UekitMetric::Citl => metrics::citl(&y, &c)?,
            UekitMetric::Ece => metrics::ece(&y, &c, BinningConfig::new(bins)?)?,
            UekitMetric::RcAuc => selective::rc_auc(&selective::rc_curve(&c, &y)?),
            UekitMetric::NrcAuc => {
                let model = selective::rc_auc(&selective::rc_curve(&c, &y)?);
                selective::nrc_auc(model, selective::rc_auc_baselines(&y)?)?
            }
        };
        put(out, v)
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null());
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

/// Fits centroids and the pooled covariance from `n × dim` embeddings.
///
/// # Safety
/// `embeddings` must hold `n * dim` doubles, `labels` `n` entries, `out` one writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uekit_train_stats_fit(
    embeddings: *const f64,
    labels: *const usize,
    n: usize,
    dim: usize,
    class_count: usize,
    out: *mut *mut UekitTrainStats,
) -> UekitStatus {
    guard(|| {
        let h = rows(embeddings, n, dim)?;
        let y = view(labels, n)?;
        store(out, UekitTrainStats(TrainStats::fit(&h, y, class_count)?))
    })
}

/// Minimum squared Mahalanobis distance of one embedding to the class centroids.
///
/// # Safety
/// `stats` must come from [`uekit_train_stats_fit`]; `h` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn uekit_train_stats_mahalanobis(
    stats: *const UekitTrainStats,
    h: *const f64,
    dim: usize,
    out: *mut f64,
) -> UekitStatus {
    guard(|| {
        let s = borrow(stats)?;
        put(out, s.0.mahalanobis(view(h, dim)?)?)
    })
}

/// # Safety
/// `stats` must come from [`uekit_train_stats_fit`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uekit_train_stats_free(stats: *mut UekitTrainStats) {
    if !stats.is_null() {
        drop(Box::from_raw(stats));
    }
}

/// Fits LOF on `n × dim` training embeddings with `k` neighbours.
///
/// # Safety
/// `embeddings` must hold `n * dim` doubles; `out` one writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uekit_lof_fit(
    embeddings: *const f64,
    n: usize,
    dim: usize,
    k: usize,
    out: *mut *mut UekitLof,
) -> UekitStatus {
    guard(|| store(out, UekitLof(LofModel::fit(&rows(embeddings, n, dim)?, k)?)))
}

/// # Safety
/// `model` must come from [`uekit_lof_fit`]; `h` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn uekit_lof_score(model: *const UekitLof, h: *const f64, dim: usize, out: *mut f64) -> UekitStatus {
    guard(|| {
        let m = borrow(model)?;
        put(out, m.0.score(view(h, dim)?)?)
    })
}

/// # Safety
/// `model` must come from [`uekit_lof_fit`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uekit_lof_free(model: *mut UekitLof) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fits an Isolation Forest; identical arguments give identical forests.
///
/// # Safety
/// `embeddings` must hold `n * dim` doubles; `out` one writable pointer.
#[no_mangle]
pub unsafe extern "C" fn uekit_isof_fit(
    embeddings: *const f64,
    n: usize,
    dim: usize,
    trees: usize,
    subsample: usize,
    seed: u64,
    out: *mut *mut UekitIsof,
) -> UekitStatus {
    guard(|| store(out, UekitIsof(IsofModel::fit(&rows(embeddings, n, dim)?, trees, subsample, seed)?)))
}

/// Anomaly score in (0, 1]; higher is more isolated.
///
/// # Safety
/// `model` must come from [`uekit_isof_fit`]; `h` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn uekit_isof_score(model: *const UekitIsof, h: *const f64, dim: usize, out: *mut f64) -> UekitStatus {
    guard(|| {
        let m = borrow(model)?;
        put(out, m.0.score(view(h, dim)?)?)
    })
}

/// # Safety
/// `model` must come from [`uekit_isof_fit`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn uekit_isof_free(model: *mut UekitIsof) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
