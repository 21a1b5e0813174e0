use super::ode::{sweep_axis, NodeStates};
use super::{reconstruct_lambdas, relative_difference, CoeffEval, Grid, InitialData, SolutionField, SolveOptions, UnknownField};
use crate::analysis::{Analysis, ReducedKind};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// Integrates the IIa system from the two free unknowns at the base node by
/// axis sweeps, then rebuilds the eliminated eigenvalue.
pub fn integrate_frobenius(
    analysis: &Analysis,
    data: &InitialData,
    grid: &Grid,
    opts: &SolveOptions,
    tol: &Tolerances,
) -> Result<SolutionField> {
    let red = analysis
        .reduced
        .as_ref()
        .filter(|r| r.kind == ReducedKind::FrobeniusIIa)
        .ok_or_else(|| Error::Classification("no Frobenius system to integrate".into()))?;
    if !analysis.report.compat.holds() {
        return Err(Error::TrivialOnly("Frobenius compatibility fails; only the trivial solution exists".into()));
    }
    data.expect(2, 0, "a Frobenius system")?;
    let n = analysis.report.n;
    let order: Vec<usize> = (0..n).collect();
    let v = sweep_unknowns(analysis, &data.constants, grid, &order, opts)?;
    let path_difference = if opts.path_check {
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        let w = sweep_unknowns(analysis, &data.constants, grid, &reversed, opts)?;
        let d = relative_difference(&v, &w);
        if d > tol.path_tol {
            return Err(Error::Integration(format!(
                "integration orders disagree by {d:.3e} (path_tol {:.1e})",
                tol.path_tol
            )));
        }
        Some(d)
    } else {
        None
    };
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|f| grid.point(f)).collect();
    let lambdas = reconstruct_lambdas(red, &points, &v)?;
    Ok(SolutionField {
        grid: grid.clone(),
        lambdas,
        flux: None,
        residuals: None,
        report: analysis.report.clone(),
        data_description: data.describe(),
        unknowns: Some(UnknownField {
            names: red.unknowns.clone(),
            grid: grid.clone(),
            values: v,
        }),
        path_difference,
    })
}

/// Free unknowns on the grid, sweeping the axes in `order`.
fn sweep_unknowns(
    analysis: &Analysis,
    start: &[f64],
    grid: &Grid,
    order: &[usize],
    opts: &SolveOptions,
) -> Result<Vec<Vec<f64>>> {
    let red = analysis.reduced.as_ref().unwrap();
    let (coeff_tape, _) = red.coefficient_tape()?;
    let cp = analysis.connection.permuted(&red.perm);
    let l_tape = cp.l_tape()?;
    let nu = red.n_unknowns();
    let nd = red.n_directions();
    let n = analysis.report.n;
    let coeffs = CoeffEval {
        tape: &coeff_tape,
        lower: grid.lower(),
        upper: grid.upper(),
        boundary_limit: opts.boundary_limit,
    };
    let lmat = CoeffEval {
        tape: &l_tape,
        lower: grid.lower(),
        upper: grid.upper(),
        boundary_limit: opts.boundary_limit,
    };

    let mut states = NodeStates::new(grid.len(), nu);
    states.set(grid.base_flat(), start);
    for &axis in order {
        // ∂_axis v^s = Σ_d L^d_axis r_d(v^s)
        let rhs = |_: usize, x: &[f64], y: &[f64], dy: &mut [f64]| {
            let mut c = vec![0.0; nu * nd * nu];
            let mut l = vec![0.0; n * n];
            coeffs.eval(x, &mut c)?;
            lmat.eval(x, &mut l)?;
            for (s, out) in dy.iter_mut().enumerate() {
                let mut acc = 0.0;
                for d in 0..nd {
                    let rd: f64 = (0..nu).map(|b| c[(s * nd + d) * nu + b] * y[b]).sum();
                    acc += l[d * n + axis] * rd;
                }
                *out = acc;
            }
            Ok(())
        };
        sweep_axis(grid, &mut states, axis, opts.substeps, &rhs)?;
    }
    Ok((0..nu).map(|u| states.component(u)).collect())
}
