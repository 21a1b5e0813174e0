//! Command-line front end: job files, the pipeline, the example corpus and
//! the commands built on them.

pub mod config;
pub mod fixtures;
pub mod pipeline;

pub use config::{Job, JobConfig, Overrides};
pub use fixtures::{run_fixture, ExampleFixture, FixtureResult};
pub use pipeline::{analysis_exit_code, exit_code};

use crate::error::{Error, Result};
use crate::solver::{format_residual_text, report_json};
use std::io::Write;
use std::path::{Path, PathBuf};

fn load_job(cfg: &Path, overrides: &Overrides) -> Result<Job> {
    let mut config = JobConfig::load(cfg)?;
    config.apply(overrides)?;
    Job::new(config)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn emit_json(out: &mut dyn Write, v: &serde_json::Value) -> Result<()> {
    emit(out, &(serde_json::to_string_pretty(v).expect("reports serialize") + "\n"))
}

/// `analyze <cfg>`: prints the classification; returns the exit status.
pub fn cmd_analyze(cfg: &Path, overrides: &Overrides, json: bool, out: &mut dyn Write) -> Result<i32> {
    let job = load_job(cfg, overrides)?;
    let a = pipeline::analyze_job(&job)?;
    if json {
        emit_json(out, &pipeline::analysis_json(&job, &a))?;
    } else {
        emit(out, &pipeline::analysis_text(&job, &a))?;
    }
    Ok(analysis_exit_code(&a))
}

/// `solve <cfg>`: integrates, writes CSV, JSON and text reports and prints
/// the residual summary.
pub fn cmd_solve(cfg: &Path, overrides: &Overrides, json: bool, out: &mut dyn Write) -> Result<i32> {
    let job = load_job(cfg, overrides)?;
    let a = pipeline::analyze_job(&job)?;
    let code = analysis_exit_code(&a);
    if code != 0 {
        emit(out, &pipeline::analysis_text(&job, &a))?;
        return Ok(code);
    }
    let field = pipeline::solve_job(&job, &a)?;
    let dir = job.config.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let written = pipeline::write_outputs(&job, &field, &dir)?;
    if json {
        emit_json(out, &report_json(&field))?;
    } else {
        emit(out, &format_residual_text(&field))?;
        for p in written {
            emit(out, &format!("wrote: {}\n", p.display()))?;
        }
    }
    Ok(0)
}

/// `verify <csv> <cfg>`: residuals of a previously written grid.
pub fn cmd_verify(csv: &Path, cfg: &Path, overrides: &Overrides, json: bool, out: &mut dyn Write) -> Result<i32> {
    let job = load_job(cfg, overrides)?;
    let text = std::fs::read_to_string(csv).map_err(|e| Error::Io(format!("{}: {e}", csv.display())))?;
    let a = pipeline::analyze_job(&job)?;
    let field = pipeline::verify_csv(&job, &a, &text)?;
    if json {
        emit_json(out, &report_json(&field))?;
    } else {
        emit(out, &format_residual_text(&field))?;
    }
    Ok(0)
}

/// Exit status when a fixture does not reproduce its expectations.
pub const FIXTURE_MISMATCH: i32 = 5;

/// `examples [name|--all]`: runs fixtures and prints a pass/fail table.
pub fn cmd_examples(name: Option<&str>, overrides: &Overrides, json: bool, out: &mut dyn Write) -> Result<i32> {
    let list = match name {
        Some(n) => vec![fixtures::find(n)?],
        None => fixtures::all()?,
    };
    let mut results = Vec::new();
    for fx in &list {
        let r = run_fixture(fx, overrides);
        if !json {
            emit(out, &(r.summary() + "\n"))?;
            out.flush()?;
        }
        results.push(r);
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    if json {
        let rows: Vec<serde_json::Value> = results
            .iter()
            .map(|r| {
                serde_json::json!({
                    "name": r.name,
                    "pass": r.passed(),
                    "error": r.error,
                    "checks": r.checks.iter().map(|c| serde_json::json!({
                        "name": c.name, "pass": c.pass, "detail": c.detail,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        emit_json(out, &serde_json::json!({ "passed": passed, "total": results.len(), "fixtures": rows }))?;
    } else {
        emit(out, &format!("{passed}/{} PASS\n", results.len()))?;
    }
    Ok(if passed == results.len() { 0 } else { FIXTURE_MISMATCH })
}
