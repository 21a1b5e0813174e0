//! Checks on a solved field: the Jacobian condition, the eigenstructure of
//! the reconstructed flux and hyperbolicity.

use super::flux::jacobian_field;
use super::Grid;
use crate::analysis::{CaseLabel, CaseReport};
use crate::error::{Error, Result};
use crate::geometry::Connection;
use crate::tolerances::Tolerances;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hyperbolicity {
    /// Every node has pairwise distinct eigenvalues.
    pub strict: bool,
    pub strict_nodes: usize,
    pub nodes: usize,
    /// Smallest `|λ^i − λ^j|` over nodes and pairs.
    pub min_gap: f64,
    /// Pairs equal at every node, e.g. `λ1=λ2`.
    pub multiplicities: Vec<String>,
    /// Equalities the case forces.
    pub forced: Vec<String>,
    /// Largest violation of a forced equality.
    pub forced_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max |∂_k A^i_j − ∂_j A^i_k|` by central differences at interior nodes.
    pub curl: f64,
    /// `max |Df R_i − λ^i R_i| / |R_i|` with `Df` differenced from the flux.
    pub eigen: f64,
    /// Largest relative residual of the algebraic eigenvalue equations.
    pub algebraic: f64,
    /// `max |f(ū)|`.
    pub base_flux: f64,
    pub hyperbolicity: Hyperbolicity,
}

pub fn verify(
    conn: &Connection,
    grid: &Grid,
    lambdas: &[Vec<f64>],
    flux: &[Vec<f64>],
    report: &CaseReport,
    tol: &Tolerances,
) -> Result<ResidualReport> {
    let n = conn.n();
    if lambdas.len() != n || flux.len() != n {
        return Err(Error::Config(format!("expected {n} eigenvalue and flux columns")));
    }
    let a = jacobian_field(conn, grid, lambdas)?;
    // fourth-order central differences two nodes away from the faces when
    // every axis is long enough, second order otherwise
    let margin = if grid.axes.iter().all(|a| a.len() >= 5) { 2 } else { 1 };
    let interior: Vec<usize> = (0..grid.len())
        .filter(|&f| {
            grid.multi(f)
                .iter()
                .zip(&grid.axes)
                .all(|(k, ax)| *k >= margin && *k + margin < ax.len())
        })
        .collect();
    let central = |values: &dyn Fn(usize) -> f64, node: usize, axis: usize| -> f64 {
        let s = grid.stride(axis);
        let h = grid.spacing(axis);
        if margin == 2 {
            (8.0 * (values(node + s) - values(node - s)) - (values(node + 2 * s) - values(node - 2 * s))) / (12.0 * h)
        } else {
            (values(node + s) - values(node - s)) / (2.0 * h)
        }
    };

    let curl = interior
        .par_iter()
        .map(|&node| {
            let mut m = 0.0_f64;
            for i in 0..n {
                for j in 0..n {
                    for k in (j + 1)..n {
                        let dk = central(&|f| a[f][i * n + j], node, k);
                        let dj = central(&|f| a[f][i * n + k], node, j);
                        m = m.max((dk - dj).abs());
                    }
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);

    let r_tape = conn.frame.tape()?;
    let eigen = interior
        .par_iter()
        .map(|&node| -> Result<f64> {
            let r = r_tape.eval_vec(&grid.point(node))?;
            let df: Vec<f64> = (0..n * n)
                .map(|ij| central(&|f| flux[ij / n][f], node, ij % n))
                .collect();
            let mut worst = 0.0_f64;
            for m in 0..n {
                let col: Vec<f64> = (0..n).map(|i| r[i * n + m]).collect();
                let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
                let res = (0..n)
                    .map(|i| {
                        let dfr: f64 = (0..n).map(|j| df[i * n + j] * col[j]).sum();
                        (dfr - lambdas[m][node] * col[i]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(res / norm);
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;

    let g_tape = conn.gamma.tape(conn.vars())?;
    let algebraic = (0..grid.len())
        .into_par_iter()
        .map(|node| -> Result<f64> {
            let g = g_tape.eval_vec(&grid.point(node))?;
            let gamma = |k: usize, i: usize, j: usize| g[(k * n + i) * n + j];
            let lam: Vec<f64> = (0..n).map(|i| lambdas[i][node]).collect();
            let gscale = 1.0 + g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let lscale = 1.0 + lam.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut worst = 0.0_f64;
            for k in 0..n {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if k == i || k == j {
                            continue;
                        }
                        let r = (lam[i] - lam[k]) * gamma(k, j, i) - (lam[j] - lam[k]) * gamma(k, i, j);
                        worst = worst.max(r.abs() / (gscale * lscale));
                    }
                }
            }
            Ok(worst)
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;

    let base = grid.base_flat();
    let base_flux = flux.iter().fold(0.0_f64, |m, f| m.max(f[base].abs()));
    Ok(ResidualReport {
        curl,
        eigen,
        algebraic,
        base_flux,
        hyperbolicity: hyperbolicity(lambdas, report, tol.integ_tol),
    })
}

fn hyperbolicity(lambdas: &[Vec<f64>], report: &CaseReport, integ_tol: f64) -> Hyperbolicity {
    let n = lambdas.len();
    let nodes = lambdas.first().map_or(0, |l| l.len());
    let pair_max = |i: usize, j: usize| {
        lambdas[i]
            .iter()
            .zip(&lambdas[j])
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let mut min_gap = f64::INFINITY;
    let mut strict_nodes = 0;
    for node in 0..nodes {
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                gap = gap.min((lambdas[i][node] - lambdas[j][node]).abs());
            }
        }
        if gap > integ_tol {
            strict_nodes += 1;
        }
        min_gap = min_gap.min(gap);
    }
    let mut multiplicities = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if pair_max(i, j) <= integ_tol {
                multiplicities.push(format!("λ{}=λ{}", i + 1, j + 1));
            }
        }
    }
    let mut forced_pairs: Vec<(usize, usize)> = Vec::new();
    for set in &report.index_sets {
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                forced_pairs.push((i, j));
            }
        }
    }
    if report.label == CaseLabel::N3IIb && report.relabeling.len() == 3 {
        let (i, j) = (report.relabeling[1], report.relabeling[2]);
        forced_pairs.push((i.min(j), i.max(j)));
    }
    forced_pairs.sort();
    forced_pairs.dedup();
    let forced_residual = forced_pairs.iter().fold(0.0_f64, |m, &(i, j)| m.max(pair_max(i, j)));
    Hyperbolicity {
        strict: nodes > 0 && strict_nodes == nodes,
        strict_nodes,
        nodes,
        min_gap: if min_gap.is_finite() { min_gap } else { 0.0 },
        multiplicities,
        forced: forced_pairs.iter().map(|(i, j)| format!("λ{}=λ{}", i + 1, j + 1)).collect(),
        forced_residual,
    }
}
