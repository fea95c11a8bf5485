//! C ABI for pdesift.
//!
//! Objects cross the boundary as opaque handles created by `pds_*` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`PdsStatus`]; on failure a description is available from
//! [`pds_last_error`] on the same thread. Strings are UTF-8 and copied into
//! caller buffers: the call reports the length it needs (without the
//! terminating NUL) and writes as much as fits, always NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pdesift::dictionary::build_problem;
use pdesift::field::{load_snapshot, save_snapshot, SnapshotHeader};
use pdesift::harness::{truth_labels, ExperimentConfig, FitConfig};
use pdesift::solvers::{add_noise, simulate, NoiseSpec, SystemKind};
use pdesift::ssvb::{discover, DiscoveredModel};
use pdesift::{Error, Field};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// A configuration or system specification was rejected.
    Config = 3,
    /// The computation failed (solver instability, singular system, ...).
    Computation = 4,
    /// Reading or writing a file failed.
    Io = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// A gridded field together with its snapshot metadata.
pub struct PdsField {
    header: SnapshotHeader,
    field: Field,
}

/// A discovered equation with its posterior summary.
pub struct PdsModel {
    model: DiscoveredModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(PdsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_) => PdsStatus::Io,
            Error::Config(_) | Error::InvalidSystem(_) | Error::InvalidGrid(_) | Error::Json(_) | Error::Format(_) => {
                PdsStatus::Config
            }
            _ => PdsStatus::Computation,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(PdsStatus::InvalidArgument, msg.into())
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> PdsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            PdsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdsStatus::Panic
        }
    }
}

fn null_check<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(PdsStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    null_check(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

/// Copies `s` into `buf` (capacity `cap`, including the NUL) and stores the
/// full length in `needed` when non-null.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) {
    if !needed.is_null() {
        *needed = s.len();
    }
    if buf.is_null() || cap == 0 {
        return;
    }
    let n = s.len().min(cap - 1);
    ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, n);
    *buf.add(n) = 0;
}

unsafe fn write_values(values: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    null_check(buf, "buf")?;
    if len < values.len() {
        return Err(invalid(format!("buffer holds {len} values, {} required", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf`.
///
/// Returns the full message length; an empty message means the last call
/// succeeded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn pds_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        write_str(&msg, buf, cap, ptr::null_mut());
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pds_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Simulates a benchmark system (`heat1d`, `heat2d`, `burgers`, `kdv`, `ks`,
/// `wave1d`) on its benchmark grid and adds Gaussian noise of relative
/// `noise` level drawn from `seed`.
///
/// # Safety
/// `system` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_simulate(
    system: *const c_char,
    noise: f64,
    seed: u64,
    out: *mut *mut PdsField,
) -> PdsStatus {
    guard(|| {
        null_check(out, "out")?;
        let kind: SystemKind = read_str(system, "system")?
            .parse()
            .map_err(|e: Error| invalid(e.to_string()))?;
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(invalid(format!("noise level {noise} must be finite and >= 0")));
        }
        let spec = ExperimentConfig::benchmark(kind).system;
        let noise_spec = NoiseSpec { level: noise, seed };
        let field = add_noise(&simulate(&spec)?, &noise_spec)?;
        let mut header = SnapshotHeader::for_grid(field.grid());
        header.system = Some(kind.to_string());
        header.coefficients = truth_labels(&spec.true_model()?).into_iter().collect();
        header.noise = (noise > 0.0).then_some(noise_spec);
        *out = Box::into_raw(Box::new(PdsField { header, field }));
        Ok(())
    })
}

/// Loads a field snapshot file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_field_load(path: *const c_char, out: *mut *mut PdsField) -> PdsStatus {
    guard(|| {
        null_check(out, "out")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let (header, field) = load_snapshot(&path)?;
        *out = Box::into_raw(Box::new(PdsField { header, field }));
        Ok(())
    })
}

/// Writes a field snapshot file.
///
/// # Safety
/// `field` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pds_field_save(field: *const PdsField, path: *const c_char) -> PdsStatus {
    guard(|| {
        null_check(field, "field")?;
        let path = PathBuf::from(read_str(path, "path")?);
        let f = &*field;
        save_snapshot(&path, &f.header, &f.field)?;
        Ok(())
    })
}

/// Grid dimensions; `ny` is 1 for one-dimensional fields.
///
/// # Safety
/// `field` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_field_shape(
    field: *const PdsField,
    nt: *mut usize,
    nx: *mut usize,
    ny: *mut usize,
) -> PdsStatus {
    guard(|| {
        null_check(field, "field")?;
        null_check(nt, "nt")?;
        null_check(nx, "nx")?;
        null_check(ny, "ny")?;
        let g = (*field).field.grid();
        *nt = g.nt;
        *nx = g.nx;
        *ny = g.ny_or_one();
        Ok(())
    })
}

/// Copies the values in row-major `(t, x, y)` order into `buf`, which must
/// hold at least `nt * nx * ny` values.
///
/// # Safety
/// `field` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pds_field_values(field: *const PdsField, buf: *mut f64, len: usize) -> PdsStatus {
    guard(|| {
        null_check(field, "field")?;
        write_values((*field).field.values(), buf, len)
    })
}

/// Releases a field; null is ignored.
///
/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pds_field_free(field: *mut PdsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Discovers the governing equation of `field`.
///
/// Starts from the tuned benchmark settings of the field's system (library
/// defaults for fields without a system tag). `config_json`, when not null,
/// is a partial JSON fit configuration (`dict`, `deriv`, `vb`, `stridge`)
/// whose fields override those settings. `seed` drives row subsampling.
///
/// # Safety
/// `field` must be a live handle; `config_json` null or NUL-terminated;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_discover(
    field: *const PdsField,
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut PdsModel,
) -> PdsStatus {
    guard(|| {
        null_check(field, "field")?;
        null_check(out, "out")?;
        let f = &*field;
        let kind = f.header.system.as_deref().and_then(|s| s.parse::<SystemKind>().ok());
        let base: FitConfig = kind.map(|k| ExperimentConfig::benchmark(k).fit()).unwrap_or_default();
        let config = if config_json.is_null() {
            base
        } else {
            let overrides: serde_json::Value = serde_json::from_str(read_str(config_json, "config_json")?)
                .map_err(|e| Failure(PdsStatus::Config, format!("invalid config: {e}")))?;
            base.with_overrides(overrides)?
        };
        let noise = f.header.noise.map(|n| n.level).unwrap_or(0.0);
        let time_order = kind.map(SystemKind::time_order).unwrap_or(1);
        let settings = config.problem_settings(kind, f.field.grid().is_2d(), time_order, noise, seed);
        let problem = build_problem(&f.field, &settings)?;
        let (_, model) = discover(&problem, &config.vb, &config.stridge, time_order)?;
        *out = Box::into_raw(Box::new(PdsModel { model }));
        Ok(())
    })
}

/// Number of dictionary terms.
///
/// # Safety
/// `model` must be null or a live handle; null gives 0.
#[no_mangle]
pub unsafe extern "C" fn pds_model_num_terms(model: *const PdsModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.terms.len())
}

/// Label of term `index`, e.g. `u*u_x`.
///
/// # Safety
/// `model` must be a live handle; `buf` null or valid for `cap` bytes;
/// `needed` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_label(
    model: *const PdsModel,
    index: usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        let terms = &(*model).model.terms;
        let term = terms
            .get(index)
            .ok_or_else(|| invalid(format!("term index {index} out of range 0..{}", terms.len())))?;
        write_str(&term.label(), buf, cap, needed);
        Ok(())
    })
}

/// Posterior inclusion probabilities, one per term.
///
/// # Safety
/// `model` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_pip(model: *const PdsModel, buf: *mut f64, len: usize) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        write_values((*model).model.pip.as_slice(), buf, len)
    })
}

/// Posterior mean coefficients, one per term, zero off the support.
///
/// # Safety
/// `model` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_mean(model: *const PdsModel, buf: *mut f64, len: usize) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        write_values((*model).model.mu_hat.as_slice(), buf, len)
    })
}

/// Posterior standard deviations, one per term, zero off the support.
///
/// # Safety
/// `model` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_std(model: *const PdsModel, buf: *mut f64, len: usize) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        let std: Vec<f64> = (*model)
            .model
            .sigma_hat
            .diagonal()
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        write_values(&std, buf, len)
    })
}

/// The identified equation as text, e.g. `u_t = 2.000000 u_xx`.
///
/// # Safety
/// `model` must be a live handle; `buf` null or valid for `cap` bytes;
/// `needed` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_equation(
    model: *const PdsModel,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        write_str(&(*model).model.equation(), buf, cap, needed);
        Ok(())
    })
}

/// The model in the JSON form written by `pdesift discover --out`.
///
/// # Safety
/// `model` must be a live handle; `buf` null or valid for `cap` bytes;
/// `needed` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pds_model_json(
    model: *const PdsModel,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> PdsStatus {
    guard(|| {
        null_check(model, "model")?;
        let json = serde_json::to_string(&(*model).model.to_export()).map_err(Error::from)?;
        write_str(&json, buf, cap, needed);
        Ok(())
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pds_model_free(model: *mut PdsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
