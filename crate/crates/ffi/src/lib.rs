//! C interface to the eigenframe pipeline.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `ef_*_free`. Every fallible call returns an `EfStatus`; on
//! failure `ef_last_error` gives the message for the calling thread.
//! Strings handed out by the library are released with `ef_string_free`.

use eigenframe::analysis::Analysis;
use eigenframe::cli::pipeline;
use eigenframe::cli::{Job, JobConfig};
use eigenframe::solver::{report_json, SolutionField};
use eigenframe::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes; the first six match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EfStatus {
    Ok = 0,
    Config = 1,
    Unclassified = 2,
    NonConstantRank = 3,
    TrivialOnly = 4,
    Integration = 5,
    NullArgument = 6,
    InvalidUtf8 = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A parsed and validated job file.
pub struct EfJob {
    config: JobConfig,
    job: Job,
}

/// Classification of a job's frame.
pub struct EfAnalysis {
    analysis: Analysis,
}

/// Eigenvalues and flux on the job's grid, with residuals.
pub struct EfSolution {
    field: SolutionField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EfStatus {
    match pipeline::exit_code(e) {
        3 => EfStatus::NonConstantRank,
        4 => EfStatus::TrivialOnly,
        5 => EfStatus::Integration,
        _ => EfStatus::Config,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (EfStatus, String)>) -> EfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EfStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            EfStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (EfStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (EfStatus, String) {
    (EfStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (EfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (EfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut *mut T, what: &str) -> Result<&'a mut *mut T, (EfStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = ptr::null_mut();
    Ok(&mut *p)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn new_job(config: JobConfig) -> Result<Box<EfJob>, (EfStatus, String)> {
    let job = Job::new(config.clone()).map_err(lib_err)?;
    Ok(Box::new(EfJob { config, job }))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ef_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ef_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parses a job from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_job_from_toml(text: *const c_char, out: *mut *mut EfJob) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let text = read_str(text, "text")?;
        let config = JobConfig::parse(text).map_err(lib_err)?;
        *out = Box::into_raw(new_job(config)?);
        Ok(())
    })
}

/// Reads a job file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_job_from_file(path: *const c_char, out: *mut *mut EfJob) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = read_str(path, "path")?;
        let config = JobConfig::load(std::path::Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(new_job(config)?);
        Ok(())
    })
}

/// Overrides one tolerance, e.g. `("curl_tol", "1e-4")` or `("seed", "7")`.
///
/// # Safety
/// `job` must come from `ef_job_from_*`; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ef_job_set_tolerance(job: *mut EfJob, key: *const c_char, value: *const c_char) -> EfStatus {
    guard(|| {
        let job = job.as_mut().ok_or_else(|| null("job"))?;
        let key = read_str(key, "key")?;
        let value = read_str(value, "value")?;
        let mut config = job.config.clone();
        config.tolerances.set(key, value).map_err(|m| (EfStatus::Config, m))?;
        *job = *new_job(config)?;
        Ok(())
    })
}

/// The job's effective configuration as TOML.
///
/// # Safety
/// `job` must come from `ef_job_from_*` and `out` be a valid pointer. The
/// string is released with `ef_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ef_job_config_toml(job: *const EfJob, out: *mut *mut c_char) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let job = job.as_ref().ok_or_else(|| null("job"))?;
        *out = into_c_string(job.config.to_toml());
        Ok(())
    })
}

/// # Safety
/// `job` must come from `ef_job_from_*` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_job_free(job: *mut EfJob) {
    if !job.is_null() {
        drop(Box::from_raw(job));
    }
}

/// Classifies the job's frame. When the frame is unclassified or its rank
/// varies, the analysis is still returned alongside the matching status.
///
/// # Safety
/// `job` must come from `ef_job_from_*` and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_analyze(job: *const EfJob, out: *mut *mut EfAnalysis) -> EfStatus {
    let mut code = 0;
    let status = guard(|| {
        let out = out_ptr(out, "out")?;
        let job = job.as_ref().ok_or_else(|| null("job"))?;
        let analysis = pipeline::analyze_job(&job.job).map_err(lib_err)?;
        code = pipeline::analysis_exit_code(&analysis);
        *out = Box::into_raw(Box::new(EfAnalysis { analysis }));
        Ok(())
    });
    match (status, code) {
        (EfStatus::Ok, 2) => {
            set_error("the frame is not covered by the classification");
            EfStatus::Unclassified
        }
        (EfStatus::Ok, 3) => {
            set_error("the constraint rank is not constant on the domain");
            EfStatus::NonConstantRank
        }
        _ => status,
    }
}

/// Rank of the constraint matrix, or `SIZE_MAX` for a null handle.
///
/// # Safety
/// `a` must come from `ef_analyze` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_analysis_rank(a: *const EfAnalysis) -> usize {
    a.as_ref().map_or(usize::MAX, |a| a.analysis.report.rank)
}

/// Copies the case label (e.g. `N3-IIa`) into `buf` including the NUL;
/// `needed` receives the required size.
///
/// # Safety
/// `a` must come from `ef_analyze`; `buf` must hold `len` bytes or be null
/// with `len` 0; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn ef_analysis_case(a: *const EfAnalysis, buf: *mut c_char, len: usize, needed: *mut usize) -> EfStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(|| null("analysis"))?;
        let name = a.analysis.report.label.name().as_bytes();
        if !needed.is_null() {
            *needed = name.len() + 1;
        }
        if len < name.len() + 1 || buf.is_null() {
            return Err((EfStatus::BufferTooSmall, format!("case label needs {} bytes", name.len() + 1)));
        }
        ptr::copy_nonoverlapping(name.as_ptr(), buf as *mut u8, name.len());
        *buf.add(name.len()) = 0;
        Ok(())
    })
}

/// Full classification report as JSON.
///
/// # Safety
/// `job` and `a` must be live handles, `a` produced from `job`; `out` must
/// be a valid pointer. The string is released with `ef_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ef_analysis_json(job: *const EfJob, a: *const EfAnalysis, out: *mut *mut c_char) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let job = job.as_ref().ok_or_else(|| null("job"))?;
        let a = a.as_ref().ok_or_else(|| null("analysis"))?;
        *out = into_c_string(pipeline::analysis_json(&job.job, &a.analysis).to_string());
        Ok(())
    })
}

/// # Safety
/// `a` must come from `ef_analyze` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_analysis_free(a: *mut EfAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Integrates the eigenvalues from the job's `[initial]` data, reconstructs
/// the flux and computes residuals.
///
/// # Safety
/// `job` and `a` must be live handles, `a` produced from `job`; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ef_solve(job: *const EfJob, a: *const EfAnalysis, out: *mut *mut EfSolution) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let job = job.as_ref().ok_or_else(|| null("job"))?;
        let a = a.as_ref().ok_or_else(|| null("analysis"))?;
        let field = pipeline::solve_job(&job.job, &a.analysis).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EfSolution { field }));
        Ok(())
    })
}

/// Number of grid nodes, or 0 for a null handle.
///
/// # Safety
/// `s` must come from `ef_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_nodes(s: *const EfSolution) -> usize {
    s.as_ref().map_or(0, |s| s.field.grid.len())
}

/// Number of state variables, or 0 for a null handle.
///
/// # Safety
/// `s` must come from `ef_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_dim(s: *const EfSolution) -> usize {
    s.as_ref().map_or(0, |s| s.field.lambdas.len())
}

enum Column {
    Points,
    Lambdas,
    Flux,
}

unsafe fn copy_columns(s: *const EfSolution, out: *mut f64, len: usize, which: Column) -> EfStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let f = &s.field;
        let (nodes, n) = (f.grid.len(), f.lambdas.len());
        if len < nodes * n {
            return Err((EfStatus::BufferTooSmall, format!("need {} values", nodes * n)));
        }
        let dst = std::slice::from_raw_parts_mut(out, nodes * n);
        for node in 0..nodes {
            let row = &mut dst[node * n..(node + 1) * n];
            match which {
                Column::Points => row.copy_from_slice(&f.grid.point(node)),
                Column::Lambdas => row.iter_mut().zip(&f.lambdas).for_each(|(d, l)| *d = l[node]),
                Column::Flux => {
                    let flux = f.flux.as_ref().ok_or_else(|| (EfStatus::Integration, "no flux".to_string()))?;
                    row.iter_mut().zip(flux).for_each(|(d, l)| *d = l[node]);
                }
            }
        }
        Ok(())
    })
}

/// Node coordinates, `nodes × dim` row-major in grid storage order.
///
/// # Safety
/// `s` must come from `ef_solve`; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_points(s: *const EfSolution, out: *mut f64, len: usize) -> EfStatus {
    copy_columns(s, out, len, Column::Points)
}

/// Eigenvalues, `nodes × dim` row-major.
///
/// # Safety
/// `s` must come from `ef_solve`; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_lambdas(s: *const EfSolution, out: *mut f64, len: usize) -> EfStatus {
    copy_columns(s, out, len, Column::Lambdas)
}

/// Flux components, `nodes × dim` row-major.
///
/// # Safety
/// `s` must come from `ef_solve`; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_flux(s: *const EfSolution, out: *mut f64, len: usize) -> EfStatus {
    copy_columns(s, out, len, Column::Flux)
}

/// Curl and eigenvector residuals of the reconstructed flux.
///
/// # Safety
/// `s` must come from `ef_solve`; `curl` and `eigen` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_residuals(s: *const EfSolution, curl: *mut f64, eigen: *mut f64) -> EfStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        if curl.is_null() || eigen.is_null() {
            return Err(null("curl or eigen"));
        }
        let r = s
            .field
            .residuals
            .as_ref()
            .ok_or_else(|| (EfStatus::Integration, "no residuals".to_string()))?;
        *curl = r.curl;
        *eigen = r.eigen;
        Ok(())
    })
}

/// The machine-readable solve report as JSON.
///
/// # Safety
/// `s` must come from `ef_solve` and `out` be a valid pointer. The string
/// is released with `ef_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_json(s: *const EfSolution, out: *mut *mut c_char) -> EfStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let s = s.as_ref().ok_or_else(|| null("solution"))?;
        *out = into_c_string(serde_json::to_string(&report_json(&s.field)).unwrap_or_default());
        Ok(())
    })
}

/// # Safety
/// `s` must come from `ef_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn ef_solution_free(s: *mut EfSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a string returned by this library or null.
#[no_mangle]
pub unsafe extern "C" fn ef_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
