//! Rich frames in Riemann invariants. Every unknown is swept from its own
//! data (the line along its free axis, or the base node for a shared
//! eigenvalue) across its prescribed axes; the coupling to the other
//! unknowns is read from their current values, and passes repeat until
//! nothing changes.

use super::grid::{cubic_stencil, interp_grid};
use super::ode::{format_point, sweep_axis, NodeStates};
use super::{reconstruct_lambdas, CoeffEval, Grid, InitialData, SolutionField, SolveOptions, UnknownField};
use crate::analysis::{Analysis, ReducedKind, ReducedSystem};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;
use rayon::prelude::*;

pub fn integrate_darboux(
    analysis: &Analysis,
    data: &InitialData,
    w_grid: &Grid,
    u_grid: &Grid,
    opts: &SolveOptions,
    _tol: &Tolerances,
) -> Result<SolutionField> {
    let red = analysis
        .reduced
        .as_ref()
        .filter(|r| r.kind == ReducedKind::DarbouxRich)
        .ok_or_else(|| Error::Classification("no chart system to integrate".into()))?;
    let chart = analysis
        .chart
        .as_ref()
        .ok_or_else(|| Error::Config("rich frames need a chart to solve".into()))?;
    if !analysis.report.compat.holds() {
        return Err(Error::TrivialOnly("the chart system is not compatible".into()));
    }
    data.expect(red.sets.len(), red.simple.len(), "the chart system")?;
    let values = solve_on_w(red, data, w_grid, opts)?;

    // pull back to the state grid
    let rho = chart.chart.rho_tape(analysis.connection.vars())?;
    let (lo, hi) = (w_grid.lower(), w_grid.upper());
    let w_points: Vec<Vec<f64>> = (0..u_grid.len())
        .into_par_iter()
        .map(|f| {
            let u = u_grid.point(f);
            let w = rho
                .eval_vec(&u)
                .map_err(|e| Error::Integration(format!("chart map at {}: {e}", format_point(&u))))?;
            for a in 0..w.len() {
                let slack = 1e-9 * (hi[a] - lo[a]);
                if !(w[a] >= lo[a] - slack && w[a] <= hi[a] + slack) {
                    return Err(Error::Integration(format!(
                        "state node {} maps to {} outside the chart grid",
                        format_point(&u),
                        format_point(&w)
                    )));
                }
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    let pulled: Vec<Vec<f64>> = values
        .iter()
        .map(|v| w_points.par_iter().map(|w| interp_grid(w_grid, v, w)).collect())
        .collect();
    let lambdas = reconstruct_lambdas(red, &w_points, &pulled)?;
    Ok(SolutionField {
        grid: u_grid.clone(),
        lambdas,
        flux: None,
        residuals: None,
        report: analysis.report.clone(),
        data_description: data.describe(),
        unknowns: Some(UnknownField {
            names: red.unknowns.clone(),
            grid: w_grid.clone(),
            values,
        }),
        path_difference: None,
    })
}

/// Unknowns on the chart grid, `values[u][node]`.
fn solve_on_w(red: &ReducedSystem, data: &InitialData, grid: &Grid, opts: &SolveOptions) -> Result<Vec<Vec<f64>>> {
    let n = grid.dim();
    let nu = red.n_unknowns();
    let nd = red.n_directions();
    let s1 = red.simple.len();
    let phis = data.function_tapes()?;
    let eval_phi = |u: usize, x: f64| -> Result<f64> {
        let v = phis[u]
            .eval_vec(&[x])
            .map_err(|e| Error::Integration(format!("initial function {} at {x}: {e}", u + 1)))?[0];
        if !v.is_finite() {
            return Err(Error::Integration(format!("initial function {} is not finite at {x}", u + 1)));
        }
        Ok(v)
    };
    let (tape, _) = red.coefficient_tape()?;
    let coeffs = CoeffEval {
        tape: &tape,
        lower: grid.lower(),
        upper: grid.upper(),
        boundary_limit: opts.boundary_limit,
    };

    // starting values: data spread along the other axes
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(nu);
    for u in 0..nu {
        let v = if u < s1 {
            let axis = red.simple[u];
            let line: Vec<f64> = grid.axes[axis].iter().map(|&x| eval_phi(u, x)).collect::<Result<_>>()?;
            (0..grid.len()).map(|f| line[grid.multi(f)[axis]]).collect()
        } else {
            vec![data.constants[u - s1]; grid.len()]
        };
        values.push(v);
    }

    let magnitude = |vals: &[Vec<f64>]| 1.0 + vals.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut converged = false;
    for _ in 0..opts.max_passes.max(1) {
        let mut change = 0.0_f64;
        for u in 0..nu {
            let free = (u < s1).then(|| red.simple[u]);
            let mut states = NodeStates::new(grid.len(), 1);
            match free {
                Some(axis) => {
                    for node in grid.line(grid.base_flat(), axis) {
                        states.set(node, &[eval_phi(u, grid.point(node)[axis])?]);
                    }
                }
                None => states.set(grid.base_flat(), &[data.constants[u - s1]]),
            }
            for axis in (0..n).filter(|&a| Some(a) != free) {
                let current = &values;
                let rhs = |source: usize, x: &[f64], y: &[f64], dy: &mut [f64]| -> Result<()> {
                    let mut c = vec![0.0; nu * nd * nu];
                    coeffs.eval(x, &mut c)?;
                    let row = &c[(u * nd + axis) * nu..(u * nd + axis + 1) * nu];
                    let mut acc = row[u] * y[0];
                    if row.iter().enumerate().any(|(b, cb)| b != u && *cb != 0.0) {
                        let (start, w) = cubic_stencil(&grid.axes[axis], x[axis]);
                        let stride = grid.stride(axis);
                        let first = source - grid.multi(source)[axis] * stride + start * stride;
                        for (b, cb) in row.iter().enumerate() {
                            if b == u || *cb == 0.0 {
                                continue;
                            }
                            let vals: Vec<f64> = (0..w.len()).map(|i| current[b][first + i * stride]).collect();
                            let vb = if vals.iter().all(|v| *v == vals[0]) {
                                vals[0]
                            } else {
                                w.iter().zip(&vals).map(|(a, b)| a * b).sum()
                            };
                            acc += cb * vb;
                        }
                    }
                    dy[0] = acc;
                    Ok(())
                };
                sweep_axis(grid, &mut states, axis, opts.substeps, &rhs)?;
            }
            let new = states.component(0);
            if u >= s1 {
                check_preserved(grid, &new, &red.sets[u - s1], &red.unknowns[u])?;
            }
            change = change.max(
                new.iter()
                    .zip(&values[u])
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
            );
            values[u] = new;
        }
        if change <= 1e-13 * magnitude(&values) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Integration(format!(
            "coupled sweeps did not settle after {} passes",
            opts.max_passes
        )));
    }
    Ok(values)
}

/// A shared eigenvalue must not change along the axes of its own index set.
fn check_preserved(grid: &Grid, values: &[f64], set: &[usize], name: &str) -> Result<()> {
    for &axis in set {
        let stride = grid.stride(axis);
        let base = grid.base_index[axis];
        for node in 0..grid.len() {
            let k = grid.multi(node)[axis];
            let reference = values[node - k * stride + base * stride];
            let drift = (values[node] - reference).abs();
            if drift > 1e-10 {
                return Err(Error::Integration(format!(
                    "{name} drifts by {drift:.3e} along axis {} at {}",
                    axis + 1,
                    format_point(&grid.point(node))
                )));
            }
        }
    }
    Ok(())
}
