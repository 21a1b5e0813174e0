//! Residuals of candidate eigenvalue functions given as expressions in the
//! state variables. Used to check closed forms and solver output.

use super::Sampler;
use crate::error::Result;
use crate::expr::{differentiate, Expr};
use crate::geometry::Connection;

/// Largest residual of the differential and algebraic eigenvalue equations
/// `r_i(λ^j) = Γ^j_ji (λ^i − λ^j)` and `(λ^i − λ^k) Γ^k_ji = (λ^j − λ^k) Γ^k_ij`.
pub fn sev_residual(conn: &Connection, lambdas: &[Expr], sampler: &Sampler) -> Result<f64> {
    let n = conn.n();
    let g = &conn.gamma;
    let mut exprs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                exprs.push(conn.apply_field(i, &lambdas[j]) - g.get(j, j, i) * (&lambdas[i] - &lambdas[j]));
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                if k != i && k != j {
                    exprs.push(
                        (&lambdas[i] - &lambdas[k]) * g.get(k, j, i) - (&lambdas[j] - &lambdas[k]) * g.get(k, i, j),
                    );
                }
            }
        }
    }
    max_over(sampler, &exprs)
}

/// Largest `|∂_k A^i_j − ∂_j A^i_k|` for `A = R Λ L`, differentiated
/// directly in the state variables without using the connection.
pub fn curl_residual(conn: &Connection, lambdas: &[Expr], sampler: &Sampler) -> Result<f64> {
    let n = conn.n();
    let vars = conn.vars();
    let r = &conn.frame.r;
    let a: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Expr::zero();
                    for m in 0..n {
                        acc = acc + &r[i][m] * &lambdas[m] * &conn.l[m][j];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut exprs = Vec::new();
    for row in &a {
        for j in 0..n {
            for k in (j + 1)..n {
                exprs.push(differentiate(&row[j], &vars[k]) - differentiate(&row[k], &vars[j]));
            }
        }
    }
    max_over(sampler, &exprs)
}

fn max_over(sampler: &Sampler, exprs: &[Expr]) -> Result<f64> {
    if exprs.is_empty() {
        return Ok(0.0);
    }
    let vals = sampler.eval(exprs)?;
    Ok(vals.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())))
}
