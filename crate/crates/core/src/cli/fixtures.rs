//! The bundled example corpus and the end-to-end check of each example.

use super::config::{Expected, Job, JobConfig, Overrides};
use super::pipeline::{analyze_job, solve_job};
use crate::analysis::{Analysis, CaseLabel, ReducedKind, Verdict};
use crate::error::{Error, Result};
use crate::expr::Tape;
use crate::solver::{Grid, SolutionField};
use std::path::PathBuf;

/// Environment variable naming a directory of `*.toml` fixtures to use
/// instead of the bundled ones.
pub const EXAMPLES_ENV: &str = "EIGENFRAME_EXAMPLES";

const BUNDLED: [(&str, &str); 11] = [
    ("euler_nonrich", include_str!("../../fixtures/euler_nonrich.toml")),
    ("euler_rich", include_str!("../../fixtures/euler_rich.toml")),
    ("constant_frame", include_str!("../../fixtures/constant_frame.toml")),
    ("n2", include_str!("../../fixtures/n2.toml")),
    ("rich_orth", include_str!("../../fixtures/rich_orth.toml")),
    ("rich_rank1", include_str!("../../fixtures/rich_rank1.toml")),
    ("rich_rank2", include_str!("../../fixtures/rich_rank2.toml")),
    ("nonrich_IIa_trivial", include_str!("../../fixtures/nonrich_IIa_trivial.toml")),
    ("nonrich_IIb_trivial", include_str!("../../fixtures/nonrich_IIb_trivial.toml")),
    ("nonrich_IIb_nontrivial", include_str!("../../fixtures/nonrich_IIb_nontrivial.toml")),
    ("nonrich_n4_maximalrank", include_str!("../../fixtures/nonrich_n4_maximalrank.toml")),
];

#[derive(Clone, Debug)]
pub struct ExampleFixture {
    pub name: String,
    pub config: JobConfig,
}

fn fixture(name: &str, text: &str) -> Result<ExampleFixture> {
    let config = JobConfig::parse(text).map_err(|e| Error::Config(format!("fixture {name}: {e}")))?;
    Ok(ExampleFixture {
        name: name.to_string(),
        config,
    })
}

fn override_dir() -> Option<PathBuf> {
    std::env::var_os(EXAMPLES_ENV).map(PathBuf::from)
}

/// Every fixture, from the override directory when it is set.
pub fn all() -> Result<Vec<ExampleFixture>> {
    match override_dir() {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            paths.sort();
            paths
                .iter()
                .map(|p| {
                    let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                    fixture(&name, &text)
                })
                .collect()
        }
        None => BUNDLED.iter().map(|(n, t)| fixture(n, t)).collect(),
    }
}

pub fn find(name: &str) -> Result<ExampleFixture> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    all()?.into_iter().find(|f| f.name == name).ok_or_else(|| {
        let names: Vec<String> = all().map(|v| v.into_iter().map(|f| f.name).collect()).unwrap_or_default();
        Error::Config(format!("no example named `{name}` (available: {})", names.join(", ")))
    })
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct FixtureResult {
    pub name: String,
    pub checks: Vec<Check>,
    /// Pipeline error that stopped the run.
    pub error: Option<String>,
    pub analysis: Option<Analysis>,
    pub field: Option<SolutionField>,
}

impl FixtureResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One table row plus a line per failed check.
    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let shown: Vec<String> = self
            .checks
            .iter()
            .filter(|c| c.pass)
            .map(|c| format!("{} {}", c.name, c.detail))
            .collect();
        let mut s = format!("{:<24} {verdict}  {}", self.name, shown.join("; "));
        for c in self.checks.iter().filter(|c| !c.pass) {
            s.push_str(&format!("\n    {}: {}", c.name, c.detail));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n    error: {e}"));
        }
        s
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn equal<T: PartialEq + std::fmt::Debug>(&mut self, name: &str, expected: &Option<T>, got: T) {
        if let Some(e) = expected {
            let pass = *e == got;
            let detail = if pass { format!("{got:?}") } else { format!("expected {e:?}, got {got:?}") };
            self.0.push(Check {
                name: name.into(),
                pass,
                detail,
            });
        }
    }

    fn below(&mut self, name: &str, value: f64, bound: f64) {
        self.0.push(Check {
            name: name.into(),
            pass: value < bound,
            detail: format!("{value:.2e} (bound {bound:.0e})"),
        });
    }

    fn above(&mut self, name: &str, value: f64, bound: f64) {
        self.0.push(Check {
            name: name.into(),
            pass: value > bound,
            detail: format!("{value:.2e} (must exceed {bound:.0e})"),
        });
    }
}

fn analysis_checks(ex: &Expected, a: &Analysis, job: &Job, checks: &mut Checks) {
    let r = &a.report;
    checks.equal("case", &ex.case, r.label.name().to_string());
    checks.equal("rank", &ex.rank, r.rank);
    checks.equal("relation", &ex.relation, r.relation.clone().unwrap_or_default());
    let verdict = match r.compat {
        Verdict::Holds { .. } => "holds",
        Verdict::Fails { .. } => "fails",
        Verdict::NotApplicable => "n/a",
    };
    checks.equal("compat", &ex.compat, verdict.to_string());
    if let (Some(bound), Verdict::Fails { residual } | Verdict::Holds { residual }) = (ex.compat_above, &r.compat) {
        checks.above("compat residual", *residual, bound);
    }
    checks.equal("family", &ex.family, r.family.clone());
    checks.equal("trivial only", &ex.trivial_only, r.trivial_only);
    let sets: Vec<Vec<usize>> = r.index_sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect();
    checks.equal("index sets", &ex.index_sets, sets);
    if let (Some(bound), Some(c)) = (ex.off_diagonal_z, &a.chart) {
        checks.below("off-diagonal Z", c.off_diagonal_z, bound);
    }
    let f = &a.flatness;
    checks.below("flatness", f.torsion.max(f.curvature), job.tol.flat_tol);
    if let Some(c) = &a.chart {
        checks.below("chart", c.report.normalization.max(c.report.inverse), job.tol.chart_tol);
    }
}

/// `max |values − closed form|` over the nodes of `grid`.
fn closed_form_error(job: &Job, texts: &[String], grid: &Grid, values: &[Vec<f64>], in_w: bool, at: &str) -> Result<f64> {
    let exprs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let at = format!("{at}[{}]", i + 1);
            if in_w {
                job.w_expr(t, &at)
            } else {
                job.expr(t, &at)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let vars = if in_w {
        job.chart.as_ref().map(|c| c.w_vars.clone()).unwrap_or_default()
    } else {
        job.config.problem.vars.clone()
    };
    let tape = Tape::compile(&exprs, &vars)?;
    let mut err = 0.0_f64;
    for node in 0..grid.len() {
        let exact = tape.eval_vec(&grid.point(node))?;
        for (v, e) in values.iter().zip(&exact) {
            err = err.max((v[node] - e).abs());
        }
    }
    Ok(err)
}

fn solution_checks(ex: &Expected, a: &Analysis, field: &SolutionField, job: &Job, checks: &mut Checks) -> Result<()> {
    let tol = ex.tol.unwrap_or(1e-4);
    if let Some(lambda) = &ex.lambda {
        if lambda.len() != field.lambdas.len() {
            return Err(Error::Config(format!("expected.lambda: needs {} entries", field.lambdas.len())));
        }
        let err = closed_form_error(job, lambda, &field.grid, &field.lambdas, false, "expected.lambda")?;
        checks.below("λ error", err, tol);
    }
    if !ex.unknowns.is_empty() {
        let unk = field
            .unknowns
            .as_ref()
            .ok_or_else(|| Error::Config("expected.unknowns: this case has no reduced unknowns".into()))?;
        let in_w = a.reduced.as_ref().is_some_and(|r| r.kind == ReducedKind::DarbouxRich);
        let mut texts = Vec::new();
        let mut values = Vec::new();
        for (name, text) in &ex.unknowns {
            let k = unk
                .names
                .iter()
                .position(|u| u == name)
                .ok_or_else(|| Error::Config(format!("expected.unknowns.{name}: not an unknown of this case")))?;
            texts.push(text.clone());
            values.push(unk.values[k].clone());
        }
        let err = closed_form_error(job, &texts, &unk.grid, &values, in_w, "expected.unknowns")?;
        checks.below("unknowns error", err, tol);
    }
    if let Some(res) = &field.residuals {
        let trivial = a.report.trivial_only || a.report.label == CaseLabel::MaxRankTrivial;
        checks.below("curl", res.curl, if trivial { 1e-10 } else { job.tol.curl_tol });
        if !res.hyperbolicity.forced.is_empty() {
            checks.below("forced equalities", res.hyperbolicity.forced_residual, job.tol.integ_tol);
        }
    }
    Ok(())
}

/// Runs a fixture end to end and compares with its expectations.
pub fn run_fixture(fx: &ExampleFixture, overrides: &Overrides) -> FixtureResult {
    let mut result = FixtureResult {
        name: fx.name.clone(),
        checks: Vec::new(),
        error: None,
        analysis: None,
        field: None,
    };
    let mut checks = Checks(Vec::new());
    let outcome = (|| -> Result<()> {
        let mut cfg = fx.config.clone();
        cfg.apply(overrides)?;
        let job = Job::new(cfg)?;
        let ex = job.config.expected.clone().unwrap_or_default();
        let a = analyze_job(&job)?;
        analysis_checks(&ex, &a, &job, &mut checks);
        if job.config.initial.is_some() {
            let field = solve_job(&job, &a)?;
            solution_checks(&ex, &a, &field, &job, &mut checks)?;
            result.field = Some(field);
        }
        result.analysis = Some(a);
        Ok(())
    })();
    if let Err(e) = outcome {
        result.error = Some(e.to_string());
    }
    result.checks = checks.0;
    result
}
