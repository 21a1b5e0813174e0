//! Riemann invariants supplied by the user and the connection pulled back
//! to them.

use super::{sample_points, symbolic_inverse, Connection, DomainBox, Tensor3};
use crate::error::{Error, Result};
use crate::expr::{differentiate, Expr, Tape};
use crate::tolerances::Tolerances;
use std::collections::HashMap;

/// Coordinates `w = ρ(u)` in which the frame becomes `∂/∂w^i`.
#[derive(Clone, Debug)]
pub struct RiemannChart {
    pub w_vars: Vec<String>,
    /// `w^i(u)`.
    pub rho: Vec<Expr>,
    /// `u^j(w)`.
    pub rho_inv: Vec<Expr>,
    pub w_box: DomainBox,
    pub w_base: Vec<f64>,
}

/// `Z^k_ij` as expressions in the chart variables.
#[derive(Clone, Debug)]
pub struct ZTensor {
    pub w_vars: Vec<String>,
    pub z: Tensor3,
    /// Pulled-back frame `S^m_j(w)`.
    pub s: Vec<Vec<Expr>>,
}

/// Residuals of the chart checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChartReport {
    /// `max |∇w^i · R_j − δ^i_j|` over u-samples.
    pub normalization: f64,
    /// `max |ρ(ρ⁻¹(w)) − w|` over w-samples.
    pub inverse: f64,
    /// `max |Z − Γ∘ρ⁻¹| / (1 + |Z|)` over w-samples.
    pub cross_check: f64,
}

impl RiemannChart {
    /// Maps a u-point to w.
    pub fn rho_tape(&self, u_vars: &[String]) -> Result<Tape> {
        Tape::compile(&self.rho, u_vars)
    }

    /// Maps a w-point to u.
    pub fn rho_inv_tape(&self) -> Result<Tape> {
        Tape::compile(&self.rho_inv, &self.w_vars)
    }

    fn substitution(&self, u_vars: &[String]) -> HashMap<String, Expr> {
        u_vars.iter().cloned().zip(self.rho_inv.iter().cloned()).collect()
    }
}

/// Verifies the chart and returns `Z^k_ij = (S⁻¹ ∂S/∂w^i)^k_j`.
pub fn pullback_z(conn: &Connection, chart: &RiemannChart, tol: &Tolerances) -> Result<(ZTensor, ChartReport)> {
    let n = conn.n();
    let u_vars = conn.vars();
    if chart.rho.len() != n || chart.rho_inv.len() != n || chart.w_vars.len() != n {
        return Err(Error::Config(format!("chart must have {n} components")));
    }
    let mut report = ChartReport::default();

    // normalization ∇w^i · R_j = δ at u-samples
    let mut grad_dot = Vec::with_capacity(n * n);
    for i in 0..n {
        let grad: Vec<Expr> = u_vars.iter().map(|v| differentiate(&chart.rho[i], v)).collect();
        for j in 0..n {
            let mut acc = Expr::zero();
            for m in 0..n {
                acc = acc + &grad[m] * &conn.frame.r[m][j];
            }
            grad_dot.push(acc);
        }
    }
    let norm_tape = Tape::compile(&grad_dot, u_vars)?;
    let u_samples = sample_points(&conn.frame.domain, tol.samples, tol.seed);
    for x in &u_samples {
        let v = norm_tape.eval_vec(x)?;
        for i in 0..n {
            for j in 0..n {
                let e = (v[i * n + j] - if i == j { 1.0 } else { 0.0 }).abs();
                report.normalization = report.normalization.max(e);
            }
        }
    }
    if report.normalization > tol.chart_tol {
        return Err(Error::Chart(format!(
            "normalization grad(w^i).R_j = delta violated by {:e}; the frame is not scaled to the chart",
            report.normalization
        )));
    }

    // ρ ∘ ρ⁻¹ = id at w-samples
    let sub = chart.substitution(u_vars);
    let round_trip: Vec<Expr> = chart.rho.iter().map(|e| e.substitute(&sub)).collect();
    let rt_tape = Tape::compile(&round_trip, &chart.w_vars)?;
    let w_samples = sample_points(&chart.w_box, tol.samples, tol.seed ^ 0x5a5a);
    for w in &w_samples {
        let v = rt_tape.eval_vec(w)?;
        for (a, b) in v.iter().zip(w) {
            report.inverse = report.inverse.max((a - b).abs() / (1.0 + b.abs()));
        }
    }
    if report.inverse > tol.chart_tol {
        return Err(Error::Chart(format!(
            "rho(rho_inv(w)) differs from w by {:e}",
            report.inverse
        )));
    }

    // S(w) = R(ρ⁻¹(w)), Z^k_ij = Σ_m (S⁻¹)^k_m ∂S^m_j/∂w^i
    let s: Vec<Vec<Expr>> = conn
        .frame
        .r
        .iter()
        .map(|row| row.iter().map(|e| e.substitute(&sub)).collect())
        .collect();
    let (s_inv, _) = symbolic_inverse(&s)?;
    let mut z = Tensor3::zeros(n);
    for i in 0..n {
        let ds: Vec<Vec<Expr>> = s
            .iter()
            .map(|row| row.iter().map(|e| differentiate(e, &chart.w_vars[i])).collect())
            .collect();
        for k in 0..n {
            for j in 0..n {
                let mut acc = Expr::zero();
                for m in 0..n {
                    acc = acc + &s_inv[k][m] * &ds[m][j];
                }
                z.set(k, i, j, acc);
            }
        }
    }

    // cross-check against Γ evaluated at ρ⁻¹(w)
    let z_tape = z.tape(&chart.w_vars)?;
    let g_tape = conn.gamma.tape(u_vars)?;
    let inv_tape = chart.rho_inv_tape()?;
    for w in &w_samples {
        let zv = z_tape.eval_vec(w)?;
        let u = inv_tape.eval_vec(w)?;
        let gv = g_tape.eval_vec(&u)?;
        for (a, b) in zv.iter().zip(&gv) {
            report.cross_check = report.cross_check.max((a - b).abs() / (1.0 + a.abs()));
        }
    }
    if report.cross_check > tol.chart_tol {
        return Err(Error::Chart(format!(
            "Z computed from the pulled-back frame disagrees with Christoffel symbols by {:e}",
            report.cross_check
        )));
    }
    Ok((
        ZTensor {
            w_vars: chart.w_vars.clone(),
            z,
            s,
        },
        report,
    ))
}
