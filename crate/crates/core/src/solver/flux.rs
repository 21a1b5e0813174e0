//! Flux from `A = R Λ L` by trapezoid integration along axis staircases,
//! with the Euler-Maclaurin end correction.

use super::Grid;
use crate::error::{Error, Result};
use crate::geometry::Connection;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct FluxResult {
    /// `flux[i][node]` with `f = 0` at the base node.
    pub flux: Vec<Vec<f64>>,
    /// Largest difference between the staircases in axis order and in
    /// reversed order.
    pub path_difference: f64,
}

/// `A` at every node, row-major `n x n` per node.
pub fn jacobian_field(conn: &Connection, grid: &Grid, lambdas: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = conn.n();
    let r_tape = conn.frame.tape()?;
    let l_tape = conn.l_tape()?;
    (0..grid.len())
        .into_par_iter()
        .map(|node| {
            let x = grid.point(node);
            let wrap = |e: crate::expr::TapeError| {
                Error::Integration(format!("frame evaluation at {}: {}", super::ode::format_point(&x), Error::from(e)))
            };
            let mut r = vec![0.0; n * n];
            let mut l = vec![0.0; n * n];
            r_tape.eval(&x, &mut r).map_err(wrap)?;
            l_tape.eval(&x, &mut l).map_err(wrap)?;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] = (0..n).map(|m| r[i * n + m] * lambdas[m][node] * l[m * n + j]).sum();
                }
            }
            Ok(a)
        })
        .collect()
}

/// Integrates `df^i = Σ_j A^i_j du^j` from the base node. Fails when the two
/// staircase orders differ by more than `bound`.
pub fn reconstruct_flux(conn: &Connection, grid: &Grid, lambdas: &[Vec<f64>], bound: f64) -> Result<FluxResult> {
    if lambdas.iter().any(|l| l.len() != grid.len() || l.iter().any(|v| !v.is_finite())) {
        return Err(Error::Integration("eigenvalue field is missing nodes".into()));
    }
    let a = jacobian_field(conn, grid, lambdas)?;
    let n = grid.dim();
    let order: Vec<usize> = (0..n).collect();
    let reversed: Vec<usize> = order.iter().rev().copied().collect();
    let f1 = staircase(grid, &a, &order);
    let f2 = staircase(grid, &a, &reversed);
    let path_difference = f1
        .iter()
        .flatten()
        .zip(f2.iter().flatten())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if path_difference > bound {
        return Err(Error::Integration(format!(
            "flux depends on the integration path: staircases differ by {path_difference:.3e} (bound {bound:.3e})"
        )));
    }
    Ok(FluxResult {
        flux: f1,
        path_difference,
    })
}

/// Derivative along a uniform line to fourth order. Lines shorter than five
/// nodes get zeros, which turns the end correction off.
fn line_derivative(g: &[f64], h: f64) -> Vec<f64> {
    let m = g.len();
    if m < 5 {
        return vec![0.0; m];
    }
    (0..m)
        .map(|k| {
            let d = if k >= 2 && k + 2 < m {
                8.0 * (g[k + 1] - g[k - 1]) - (g[k + 2] - g[k - 2])
            } else if k < 2 {
                let o = k;
                let s = &g[k - o..k - o + 5];
                // one-sided five-point stencil, shifted by `o`
                let w: [[f64; 5]; 2] = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
                (0..5).map(|i| w[o][i] * s[i]).sum()
            } else {
                let o = m - 1 - k;
                let s = &g[m - 5..];
                let w: [[f64; 5]; 2] = [[3.0, -16.0, 36.0, -48.0, 25.0], [-1.0, 6.0, -18.0, 10.0, 3.0]];
                (0..5).map(|i| w[o][i] * s[i]).sum()
            };
            d / (12.0 * h)
        })
        .collect()
}

fn staircase(grid: &Grid, a: &[Vec<f64>], order: &[usize]) -> Vec<Vec<f64>> {
    let n = grid.dim();
    let mut f = vec![vec![0.0; n]; grid.len()];
    let mut filled = vec![false; grid.len()];
    filled[grid.base_flat()] = true;
    for &axis in order {
        let sources: Vec<usize> = (0..grid.len()).filter(|&s| filled[s]).collect();
        let coords = &grid.axes[axis];
        let lines: Vec<(Vec<usize>, Vec<Vec<f64>>)> = sources
            .par_iter()
            .map(|&s| {
                let line = grid.line(s, axis);
                let k0 = grid.multi(s)[axis];
                let m = line.len();
                let h = grid.spacing(axis);
                let g: Vec<Vec<f64>> = (0..n).map(|i| line.iter().map(|&p| a[p][i * n + axis]).collect()).collect();
                let dg: Vec<Vec<f64>> = g.iter().map(|gi| line_derivative(gi, h)).collect();
                let mut vals = vec![Vec::new(); m];
                vals[k0] = f[s].clone();
                for dir in [1isize, -1] {
                    let mut k = k0 as isize;
                    let mut trap = f[s].clone();
                    while (0..m as isize).contains(&(k + dir)) {
                        let next = (k + dir) as usize;
                        let step = coords[next] - coords[k as usize];
                        for (i, v) in trap.iter_mut().enumerate() {
                            *v += 0.5 * step * (g[i][k as usize] + g[i][next]);
                        }
                        vals[next] = (0..n)
                            .map(|i| trap[i] - h * h / 12.0 * (dg[i][next] - dg[i][k0]))
                            .collect();
                        k += dir;
                    }
                }
                (line, vals)
            })
            .collect();
        for (line, vals) in lines {
            for (node, v) in line.into_iter().zip(vals) {
                f[node] = v;
                filled[node] = true;
            }
        }
    }
    (0..n).map(|i| f.iter().map(|v| v[i]).collect()).collect()
}
