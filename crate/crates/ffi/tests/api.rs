use eigenframe_ffi::*;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

fn fixture(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.toml"));
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ef_last_error()).to_string_lossy().into_owned() }
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p).to_string_lossy().into_owned() };
    unsafe { ef_string_free(p) };
    s
}

fn load(name: &str) -> *mut EfJob {
    let mut job = ptr::null_mut();
    assert_eq!(unsafe { ef_job_from_file(fixture(name).as_ptr(), &mut job) }, EfStatus::Ok, "{}", last_error());
    job
}

fn case_label(a: *const EfAnalysis) -> String {
    let mut needed = 0;
    let s = unsafe { ef_analysis_case(a, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(s, EfStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(unsafe { ef_analysis_case(a, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, EfStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned() }
}

#[test]
fn analyze_and_solve_a_trivial_case() {
    let job = load("rich_rank2");
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { ef_analyze(job, &mut a) }, EfStatus::Ok);
    assert_eq!(case_label(a), "MaxRank-Trivial");
    assert_eq!(unsafe { ef_analysis_rank(a) }, 2);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ef_analysis_json(job, a, &mut json) }, EfStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["case"], "MaxRank-Trivial");

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ef_solve(job, a, &mut s) }, EfStatus::Ok, "{}", last_error());
    let (nodes, n) = unsafe { (ef_solution_nodes(s), ef_solution_dim(s)) };
    assert_eq!((nodes, n), (125, 3));

    let mut lambdas = vec![0.0; nodes * n];
    assert_eq!(unsafe { ef_solution_lambdas(s, lambdas.as_mut_ptr(), lambdas.len()) }, EfStatus::Ok);
    assert!(lambdas.iter().all(|&l| l == 0.5));

    // a trivial solution has flux 0.5 (u − ū)
    let mut points = vec![0.0; nodes * n];
    let mut flux = vec![0.0; nodes * n];
    unsafe {
        assert_eq!(ef_solution_points(s, points.as_mut_ptr(), points.len()), EfStatus::Ok);
        assert_eq!(ef_solution_flux(s, flux.as_mut_ptr(), flux.len()), EfStatus::Ok);
    }
    let base: Vec<f64> = (0..n).map(|i| points[i] - 2.0 * flux[i]).collect();
    for node in 0..nodes {
        for i in 0..n {
            assert!((flux[node * n + i] - 0.5 * (points[node * n + i] - base[i])).abs() < 1e-12);
        }
    }

    let (mut curl, mut eigen) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { ef_solution_residuals(s, &mut curl, &mut eigen) }, EfStatus::Ok);
    assert!(curl < 1e-10 && eigen < 1e-8, "{curl} {eigen}");

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { ef_solution_json(s, &mut report) }, EfStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(report)).unwrap();
    assert_eq!(v["residuals"]["curl"].as_f64().unwrap(), curl);

    let mut short = vec![0.0; 3];
    assert_eq!(unsafe { ef_solution_lambdas(s, short.as_mut_ptr(), short.len()) }, EfStatus::BufferTooSmall);
    unsafe {
        ef_solution_free(s);
        ef_analysis_free(a);
        ef_job_free(job);
    }
}

#[test]
fn status_codes_match_the_command_line() {
    let text = std::fs::read_to_string(fixture("nonrich_IIa_trivial").to_str().unwrap()).unwrap();

    let bad = CString::new(text.replace("\"u1\"]", "\"u1 *\"]")).unwrap();
    let mut job = ptr::null_mut();
    assert_eq!(unsafe { ef_job_from_toml(bad.as_ptr(), &mut job) }, EfStatus::Config);
    assert!(job.is_null());
    assert!(last_error().contains("frame.r2[3]"), "{}", last_error());

    let data = CString::new(text.replace("lambda = \"-0.25\"", "lambda2 = \"1\"\nlambda3 = \"2\"")).unwrap();
    assert_eq!(unsafe { ef_job_from_toml(data.as_ptr(), &mut job) }, EfStatus::Ok);
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { ef_analyze(job, &mut a) }, EfStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { ef_solve(job, a, &mut s) }, EfStatus::TrivialOnly);
    assert!(s.is_null() && !last_error().is_empty());
    unsafe {
        ef_analysis_free(a);
        ef_job_free(job);
    }
}

#[test]
fn tolerance_overrides_reach_the_effective_config() {
    let job = load("constant_frame");
    let key = CString::new("curl_tol").unwrap();
    let value = CString::new("2.5e-4").unwrap();
    assert_eq!(unsafe { ef_job_set_tolerance(job, key.as_ptr(), value.as_ptr()) }, EfStatus::Ok);
    let junk = CString::new("no_such_tol").unwrap();
    assert_eq!(unsafe { ef_job_set_tolerance(job, junk.as_ptr(), value.as_ptr()) }, EfStatus::Config);

    let mut toml = ptr::null_mut();
    assert_eq!(unsafe { ef_job_config_toml(job, &mut toml) }, EfStatus::Ok);
    let text = take_string(toml);
    let cfg = eigenframe::cli::JobConfig::parse(&text).unwrap();
    assert_eq!(cfg.tolerances.curl_tol, 2.5e-4);
    unsafe { ef_job_free(job) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut job = ptr::null_mut();
    unsafe {
        assert_eq!(ef_job_from_toml(ptr::null(), &mut job), EfStatus::NullArgument);
        assert_eq!(ef_analyze(ptr::null(), ptr::null_mut()), EfStatus::NullArgument);
        assert_eq!(ef_analysis_rank(ptr::null()), usize::MAX);
        assert_eq!(ef_solution_nodes(ptr::null()), 0);
        ef_job_free(ptr::null_mut());
        ef_analysis_free(ptr::null_mut());
        ef_solution_free(ptr::null_mut());
        ef_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(ef_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
