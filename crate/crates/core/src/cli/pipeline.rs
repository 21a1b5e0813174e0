//! parse → geometry → analysis → solve → verify for one job.

use super::config::Job;
use crate::analysis::{analyze, Analysis, CaseLabel, ReducedKind, Verdict};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Expr, SymbolTable, Tape};
use crate::solver::{self, format_residual_text, read_csv, report_json, verify, write_csv, InitialData, SolutionField};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Marker line preceding the effective config in text reports.
pub const EFFECTIVE_CONFIG_MARKER: &str = "# effective config";

pub fn analyze_job(job: &Job) -> Result<Analysis> {
    analyze(&job.frame, job.chart.as_ref(), &job.tol)
}

fn eval_at(e: &Expr, vars: &[String], x: &[f64], at: &str) -> Result<f64> {
    let v = Tape::compile(std::slice::from_ref(e), vars)?
        .eval_vec(x)
        .map_err(|err| Error::Config(format!("{at}: {err}")))?[0];
    if !v.is_finite() {
        return Err(Error::Config(format!("{at}: not finite at the base point")));
    }
    Ok(v)
}

fn is_eigenvalue_name(key: &str, n: usize) -> bool {
    key.strip_prefix("lambda")
        .and_then(|i| i.parse::<usize>().ok())
        .is_some_and(|i| (1..=n).contains(&i))
}

/// Turns `[initial]` into data for the system the analysis produced.
pub fn initial_data(job: &Job, analysis: &Analysis) -> Result<InitialData> {
    let init = job
        .config
        .initial
        .as_ref()
        .ok_or_else(|| Error::Config("[initial]: required to solve".into()))?;
    let report = &analysis.report;
    let vars = &job.config.problem.vars;
    let base = job.grid.base_point();
    let param_st = SymbolTable::new(std::slice::from_ref(&init.param));
    let constant = |key: &str, text: &str| -> Result<f64> {
        let at = format!("initial.values.{key}");
        let e = job.expr(text, &at)?;
        eval_at(&e, vars, &base, &at)
    };

    if report.trivial_only || report.label == CaseLabel::MaxRankTrivial {
        let keys: Vec<&str> = init.values.keys().map(String::as_str).collect();
        if keys != ["lambda"] {
            return Err(Error::TrivialOnly(format!(
                "case {} admits only the trivial solution: give `lambda = <constant>` alone (got {})",
                report.label,
                keys.join(", ")
            )));
        }
        let text = &init.values["lambda"];
        if job.expr(text, "").is_err() && parse_with(text, &param_st).is_ok() {
            return Err(Error::TrivialOnly(format!(
                "case {} admits only constant eigenvalues, not functions of {}",
                report.label, init.param
            )));
        }
        return Ok(InitialData::constants(&[constant("lambda", text)?]));
    }

    let red = match &analysis.reduced {
        Some(r) => r,
        None if report.rich => {
            return Err(Error::Config(
                "rich frame without a [chart]: Riemann invariants are needed to solve".into(),
            ))
        }
        None => return Err(Error::Classification(format!("no solver for case {}", report.label))),
    };
    let functions = match red.kind {
        ReducedKind::FrobeniusIIa => 0,
        ReducedKind::ReducedIIb => 1,
        ReducedKind::DarbouxRich => red.simple.len(),
    };
    if let Some(k) = init
        .values
        .keys()
        .find(|k| !red.unknowns.contains(k) && !is_eigenvalue_name(k, report.n))
    {
        return Err(Error::Config(format!(
            "initial.values.{k}: not an unknown of case {} (expected {})",
            report.label,
            red.unknowns.join(", ")
        )));
    }
    let mut data = InitialData {
        constants: Vec::new(),
        functions: Vec::new(),
        param: init.param.clone(),
    };
    for (k, name) in red.unknowns.iter().enumerate() {
        let text = init.values.get(name).ok_or_else(|| {
            Error::Config(format!(
                "initial.values.{name}: missing (case {} needs {})",
                report.label,
                red.unknowns.join(", ")
            ))
        })?;
        if k < functions {
            let f = parse_with(text, &param_st)
                .map_err(|e| Error::Config(format!("initial.values.{name} (a function of {}): {e}", init.param)))?;
            data.functions.push(f);
        } else {
            data.constants.push(constant(name, text)?);
        }
    }
    Ok(data)
}

/// Eigenvalues given in `[initial]` beyond the unknowns must agree with the
/// solution at the base node.
fn check_given_eigenvalues(job: &Job, analysis: &Analysis, field: &SolutionField) -> Result<()> {
    let (Some(init), Some(red)) = (&job.config.initial, &analysis.reduced) else {
        return Ok(());
    };
    let node = field.grid.base_flat();
    let base = field.grid.base_point();
    for (key, text) in &init.values {
        if red.unknowns.contains(key) || !is_eigenvalue_name(key, analysis.report.n) {
            continue;
        }
        let i: usize = key["lambda".len()..].parse::<usize>().unwrap_or(1) - 1;
        let at = format!("initial.values.{key}");
        let given = eval_at(&job.expr(text, &at)?, &job.config.problem.vars, &base, &at)?;
        let got = field.lambdas[i][node];
        if (given - got).abs() > 1e-8 * (1.0 + given.abs()) {
            return Err(Error::Config(format!(
                "{at} = {given} disagrees with the value {got} the other data imply at the base point"
            )));
        }
    }
    Ok(())
}

/// Integrates, reconstructs the flux and attaches residuals.
pub fn solve_job(job: &Job, analysis: &Analysis) -> Result<SolutionField> {
    let data = initial_data(job, analysis)?;
    let mut field = solver::solve(analysis, &data, &job.grid, job.w_grid.as_ref(), &job.opts, &job.tol)?;
    check_given_eigenvalues(job, analysis, &field)?;
    solver::finish(analysis, &mut field, &job.tol)?;
    Ok(field)
}

/// Residuals of a field read back from CSV.
pub fn verify_csv(job: &Job, analysis: &Analysis, csv: &str) -> Result<SolutionField> {
    let n = job.config.n();
    let data = read_csv(csv, n)?;
    data.matches(&job.grid)?;
    let residuals = verify(&analysis.connection, &job.grid, &data.lambdas, &data.flux, &analysis.report, &job.tol)?;
    Ok(SolutionField {
        grid: job.grid.clone(),
        lambdas: data.lambdas,
        flux: Some(data.flux),
        residuals: Some(residuals),
        report: analysis.report.clone(),
        data_description: "read from CSV".into(),
        unknowns: None,
        path_difference: None,
    })
}

fn one_based(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect()
}

fn format_sets(sets: &[Vec<usize>]) -> String {
    let parts: Vec<String> = one_based(sets)
        .iter()
        .map(|s| {
            let v: Vec<String> = s.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", v.join(","))
        })
        .collect();
    parts.join(" ")
}

/// `key: value` lines describing the classification.
pub fn analysis_text(job: &Job, a: &Analysis) -> String {
    let r = &a.report;
    let mut s = String::new();
    let _ = writeln!(s, "problem: {}", job.config.problem.name);
    let _ = writeln!(s, "n: {}", r.n);
    let _ = writeln!(
        s,
        "rank: {}{}",
        r.rank,
        if r.rank_constant { "" } else { " (not constant over the samples)" }
    );
    let _ = writeln!(s, "case: {}", r.label);
    let _ = writeln!(s, "rich: {}", r.rich);
    if let Some(rel) = &r.relation {
        let _ = writeln!(s, "relation: {rel}");
    }
    if !r.relabeling.is_empty() {
        let p: Vec<String> = r.relabeling.iter().map(|i| (i + 1).to_string()).collect();
        let _ = writeln!(s, "relabeling: ({})", p.join(","));
    }
    if !r.index_sets.is_empty() {
        let _ = writeln!(s, "index sets: {}", format_sets(&r.index_sets));
    }
    let _ = writeln!(s, "compat: {}", r.compat);
    let _ = writeln!(s, "trivial only: {}", r.trivial_only);
    let _ = writeln!(s, "family: {}", r.family);
    let f = &a.flatness;
    let _ = writeln!(
        s,
        "flatness: torsion {:.3e}, curvature {:.3e}, inverse {:.3e}",
        f.torsion, f.curvature, f.inverse
    );
    if let Some(c) = &a.chart {
        let _ = writeln!(
            s,
            "chart: normalization {:.3e}, inverse {:.3e}, off-diagonal Z {:.3e}",
            c.report.normalization, c.report.inverse, c.off_diagonal_z
        );
    }
    if let Some(red) = &a.reduced {
        let _ = writeln!(s, "unknowns: {}", red.unknowns.join(", "));
    }
    for note in &r.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

pub fn analysis_json(job: &Job, a: &Analysis) -> Value {
    let r = &a.report;
    let (verdict, residual) = match r.compat {
        Verdict::Holds { residual } => ("holds", Some(residual)),
        Verdict::Fails { residual } => ("fails", Some(residual)),
        Verdict::NotApplicable => ("n/a", None),
    };
    let chart = a.chart.as_ref().map(|c| {
        json!({
            "normalization": c.report.normalization,
            "inverse": c.report.inverse,
            "off_diagonal_z": c.off_diagonal_z,
        })
    });
    let compat_residuals: serde_json::Map<String, Value> =
        a.compat_residuals.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    json!({
        "problem": job.config.problem.name,
        "case": r.label.name(),
        "rank": r.rank,
        "rank_constant": r.rank_constant,
        "rich": r.rich,
        "relation": r.relation,
        "relabeling": r.relabeling.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "index_sets": one_based(&r.index_sets),
        "compat": { "verdict": verdict, "residual": residual },
        "compat_residuals": compat_residuals,
        "trivial_only": r.trivial_only,
        "family": r.family,
        "flatness": {
            "torsion": a.flatness.torsion,
            "curvature": a.flatness.curvature,
            "inverse": a.flatness.inverse,
        },
        "chart": chart,
        "unknowns": a.reduced.as_ref().map(|red| red.unknowns.clone()),
        "notes": r.notes,
    })
}

/// Residual summary followed by the effective config.
pub fn solve_text(job: &Job, field: &SolutionField) -> String {
    format!(
        "{}\n{EFFECTIVE_CONFIG_MARKER}\n{}",
        format_residual_text(field),
        job.config.to_toml()
    )
}

/// The TOML following the effective-config marker of a text report.
pub fn effective_config(report: &str) -> Option<&str> {
    report
        .find(EFFECTIVE_CONFIG_MARKER)
        .map(|i| &report[i + EFFECTIVE_CONFIG_MARKER.len()..])
}

/// Writes `<name>.csv`, `<name>.json` and `<name>.txt` into `dir`.
pub fn write_outputs(job: &Job, field: &SolutionField, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let name = &job.config.problem.name;
    let io = |p: &Path, e: std::io::Error| Error::Io(format!("{}: {e}", p.display()));
    let csv = dir.join(format!("{name}.csv"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&csv).map_err(|e| io(&csv, e))?);
    write_csv(field, &mut file)?;
    std::io::Write::flush(&mut file).map_err(|e| io(&csv, e))?;
    let json_path = dir.join(format!("{name}.json"));
    let json = serde_json::to_string_pretty(&report_json(field)).expect("reports serialize");
    std::fs::write(&json_path, json + "\n").map_err(|e| io(&json_path, e))?;
    let txt = dir.join(format!("{name}.txt"));
    std::fs::write(&txt, solve_text(job, field)).map_err(|e| io(&txt, e))?;
    Ok(vec![csv, json_path, txt])
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConstantRank(_) => 3,
        Error::TrivialOnly(_) => 4,
        Error::Integration(_) | Error::Domain { .. } => 5,
        _ => 1,
    }
}

/// Exit status for a successful analysis.
pub fn analysis_exit_code(a: &Analysis) -> i32 {
    if !a.report.rank_constant {
        3
    } else if a.report.label == CaseLabel::Unclassified {
        2
    } else {
        0
    }
}
