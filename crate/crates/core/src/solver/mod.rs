//! Integration of the reduced systems on grids, flux reconstruction and
//! verification of the resulting conservation law.

mod darboux;
mod flux;
mod frobenius;
pub mod grid;
mod iib;
pub mod ode;
mod output;
mod verify;

pub use darboux::integrate_darboux;
pub use flux::{reconstruct_flux, FluxResult};
pub use frobenius::integrate_frobenius;
pub use grid::Grid;
pub use iib::integrate_iib;
pub use output::{format_residual_text, read_csv, report_json, write_csv, CsvField};
pub use verify::{verify, Hyperbolicity, ResidualReport};

use crate::analysis::{Analysis, CaseLabel, CaseReport, ReducedKind, ReducedSystem};
use crate::error::{Error, Result};
use crate::expr::{Expr, Tape};
use crate::tolerances::Tolerances;
use rayon::prelude::*;

/// Data selecting one member of the solution family.
#[derive(Clone, Debug, Default)]
pub struct InitialData {
    /// IIa: the two free unknowns at the base node. IIb: `λ^2` at the base
    /// node. Rich: one value per index set. Trivial: the common eigenvalue.
    pub constants: Vec<f64>,
    /// IIb: `λ^1` along the first flow line. Rich: one function per simple
    /// index, of the matching chart coordinate.
    pub functions: Vec<Expr>,
    /// Name of the variable the functions are written in.
    pub param: String,
}

impl InitialData {
    pub fn constants(values: &[f64]) -> InitialData {
        InitialData {
            constants: values.to_vec(),
            functions: Vec::new(),
            param: "t".into(),
        }
    }

    pub fn describe(&self) -> String {
        let c: Vec<String> = self.constants.iter().map(|v| format!("{v}")).collect();
        let f: Vec<String> = self.functions.iter().map(|e| e.to_string()).collect();
        format!("constants [{}]; functions of {} [{}]", c.join(", "), self.param, f.join(", "))
    }

    pub(crate) fn function_tapes(&self) -> Result<Vec<Tape>> {
        self.functions
            .iter()
            .map(|f| Tape::compile(std::slice::from_ref(f), std::slice::from_ref(&self.param)))
            .collect()
    }

    fn expect(&self, constants: usize, functions: usize, what: &str) -> Result<()> {
        if self.constants.len() != constants || self.functions.len() != functions {
            return Err(Error::Config(format!(
                "{what} needs {constants} constant(s) and {functions} function(s), got {} and {}",
                self.constants.len(),
                self.functions.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// RK4 steps per grid cell.
    pub substeps: usize,
    /// Evaluate coefficients that fail on a face of the box by extrapolating
    /// from the interior.
    pub boundary_limit: bool,
    /// Repeat the axis sweeps in reverse order and report the difference.
    pub path_check: bool,
    /// Cap on Gauss-Seidel passes for coupled chart systems.
    pub max_passes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            substeps: 4,
            boundary_limit: false,
            path_check: true,
            max_passes: 60,
        }
    }
}

/// Reduced unknowns on the grid they were integrated on.
#[derive(Clone, Debug)]
pub struct UnknownField {
    pub names: Vec<String>,
    pub grid: Grid,
    /// `values[u][node]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SolutionField {
    /// Grid in the state variables.
    pub grid: Grid,
    /// `lambdas[i][node]`.
    pub lambdas: Vec<Vec<f64>>,
    /// `flux[i][node]`, once reconstructed.
    pub flux: Option<Vec<Vec<f64>>>,
    pub residuals: Option<ResidualReport>,
    pub report: CaseReport,
    pub data_description: String,
    pub unknowns: Option<UnknownField>,
    /// Relative difference between two integration orders, when checked.
    pub path_difference: Option<f64>,
}

/// Integrates whichever system the analysis produced. `w_grid` is required
/// for rich frames; trivial-only cases accept a single constant.
pub fn solve(
    analysis: &Analysis,
    data: &InitialData,
    grid: &Grid,
    w_grid: Option<&Grid>,
    opts: &SolveOptions,
    tol: &Tolerances,
) -> Result<SolutionField> {
    let report = &analysis.report;
    if report.trivial_only || report.label == CaseLabel::MaxRankTrivial {
        return solve_trivial(analysis, data, grid);
    }
    match analysis.reduced.as_ref().map(|r| r.kind) {
        Some(ReducedKind::FrobeniusIIa) => integrate_frobenius(analysis, data, grid, opts, tol),
        Some(ReducedKind::ReducedIIb) => integrate_iib(analysis, data, grid, opts, tol),
        Some(ReducedKind::DarbouxRich) => {
            let w = w_grid.ok_or_else(|| Error::Config("rich frames need a chart grid to solve".into()))?;
            integrate_darboux(analysis, data, w, grid, opts, tol)
        }
        None if report.rich => Err(Error::Config(
            "rich frame without a [chart]: Riemann invariants are needed to solve".into(),
        )),
        None => Err(Error::Classification(format!("no solver for case {}", report.label))),
    }
}

/// Reconstructs the flux of a solved field and attaches the residual report.
/// Two path orders must agree within `curl_tol` times the box diameter.
pub fn finish(analysis: &Analysis, field: &mut SolutionField, tol: &Tolerances) -> Result<()> {
    let conn = &analysis.connection;
    let diameter = crate::geometry::DomainBox::new(field.grid.lower(), field.grid.upper())?.diameter();
    let flux = reconstruct_flux(conn, &field.grid, &field.lambdas, tol.curl_tol * diameter)?;
    let residuals = verify(conn, &field.grid, &field.lambdas, &flux.flux, &field.report, tol)?;
    field.flux = Some(flux.flux);
    field.residuals = Some(residuals);
    Ok(())
}

/// The trivial solution `λ^i ≡ λ̂` for cases admitting nothing else.
pub fn solve_trivial(analysis: &Analysis, data: &InitialData, grid: &Grid) -> Result<SolutionField> {
    if data.constants.len() != 1 || !data.functions.is_empty() {
        return Err(Error::TrivialOnly(format!(
            "case {} admits only constant eigenvalues; give exactly one constant",
            analysis.report.label
        )));
    }
    let v = data.constants[0];
    Ok(SolutionField {
        grid: grid.clone(),
        lambdas: vec![vec![v; grid.len()]; analysis.report.n],
        flux: None,
        residuals: None,
        report: analysis.report.clone(),
        data_description: data.describe(),
        unknowns: None,
        path_difference: None,
    })
}

/// Coefficient evaluation with an optional limit taken from the interior on
/// faces of the box where the expressions cannot be evaluated.
pub(crate) struct CoeffEval<'a> {
    pub tape: &'a Tape,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub boundary_limit: bool,
}

impl CoeffEval<'_> {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let direct = self.tape.eval(x, out);
        if direct.is_ok() && out.iter().all(|v| v.is_finite()) {
            return Ok(());
        }
        let fail = || match &direct {
            Err(e) => Error::Integration(format!("coefficient evaluation failed at {}: {}", ode::format_point(x), Error::from(e.clone()))),
            Ok(()) => Error::Integration(format!("non-finite coefficient at {}", ode::format_point(x))),
        };
        if !self.boundary_limit {
            return Err(fail());
        }
        let n = x.len();
        let mut dir = vec![0.0; n];
        for a in 0..n {
            let w = self.upper[a] - self.lower[a];
            if (x[a] - self.lower[a]).abs() <= 1e-12 * w {
                dir[a] = w;
            } else if (x[a] - self.upper[a]).abs() <= 1e-12 * w {
                dir[a] = -w;
            }
        }
        if dir.iter().all(|d| *d == 0.0) {
            return Err(fail());
        }
        // quadratic extrapolation from three interior points
        let delta = 1e-3;
        let mut samples = Vec::with_capacity(3);
        for k in 1..=3 {
            let p: Vec<f64> = (0..n).map(|a| x[a] + k as f64 * delta * dir[a]).collect();
            let v = self.tape.eval_vec(&p).map_err(|_| fail())?;
            if v.iter().any(|c| !c.is_finite()) {
                return Err(fail());
            }
            samples.push(v);
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = 3.0 * samples[0][i] - 3.0 * samples[1][i] + samples[2][i];
        }
        Ok(())
    }
}

/// `λ^i = Σ_u T_iu(x) v^u` at every node, where `points[node]` is the point
/// the reconstruction coefficients are evaluated at.
pub(crate) fn reconstruct_lambdas(red: &ReducedSystem, points: &[Vec<f64>], unknowns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let tape = red.lambda_tape()?;
    let nu = red.n_unknowns();
    let n = red.lambdas.len();
    let per_node: Vec<Vec<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(node, x)| {
            let t = tape
                .eval_vec(x)
                .map_err(|e| Error::Integration(format!("eigenvalue reconstruction at {}: {e}", ode::format_point(x))))?;
            Ok((0..n)
                .map(|i| (0..nu).map(|u| t[i * nu + u] * unknowns[u][node]).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..n).map(|i| per_node.iter().map(|v| v[i]).collect()).collect())
}

/// Largest `|a − b| / (1 + max|a|)` over all fields.
pub(crate) fn relative_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let scale = 1.0 + a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
