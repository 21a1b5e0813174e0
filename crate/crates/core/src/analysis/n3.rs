//! Rank-one systems of three equations: elimination to a Frobenius system
//! (all three eigenvalues in the relation) or to the reduced system with
//! `λ^2 = λ^3` (two eigenvalues in the relation).

use super::{CaseLabel, CaseReport, LinearForm, ReducedKind, ReducedSystem, Sampler};
use crate::error::{Error, Result};
use crate::expr::{simplify, Expr};
use crate::geometry::Connection;

/// `φ^s_i` of `r_i(λ^s) = φ^s_i (λ^2 − λ^3)` for the relabeled connection,
/// as `phi[s][i]` with `s = 0` for `λ^2` and `s = 1` for `λ^3`.
pub fn iia_phi(cp: &Connection) -> [[Expr; 3]; 2] {
    let g = |k, i, j| cp.gamma.get(k, i, j).clone();
    let g132 = g(0, 2, 1);
    let g123 = g(0, 1, 2);
    let c = cp.c.get(0, 2, 1).clone();
    let q132 = &g132 / &c;
    let q123 = &g123 / &c;
    let p21 = g(1, 1, 0) * &q123;
    let p31 = g(2, 2, 0) * &q132;
    let p22 = (&g123 / &g132) * (g(2, 2, 1) - g(0, 0, 1)) - (&c / &g132) * cp.apply_field(1, &q132);
    let p32 = g(2, 2, 1);
    let p33 = (&g132 / &g123) * (g(0, 0, 2) - g(1, 1, 2)) + (&c / &g123) * cp.apply_field(2, &q123);
    let p23 = -g(1, 1, 2);
    [
        [simplify(&p21), simplify(&p22), simplify(&p23)],
        [simplify(&p31), simplify(&p32), simplify(&p33)],
    ]
}

fn unknown_name(original: usize) -> String {
    format!("lambda{}", original + 1)
}

/// Eliminates `λ^1` (after relabeling) and returns the Frobenius system for
/// the remaining two eigenvalues. Directions are the relabeled frame fields:
/// direction `d` is `R_{perm[d]}`.
pub fn reduce_iia(conn: &Connection, report: &CaseReport, sampler: &Sampler) -> Result<ReducedSystem> {
    if report.label != CaseLabel::N3IIa {
        return Err(Error::Classification(format!("reduce_iia called for {}", report.label)));
    }
    let perm = report.relabeling.clone();
    let cp = conn.permuted(&perm);
    let g132 = cp.gamma.get(0, 2, 1).clone();
    let g123 = cp.gamma.get(0, 1, 2).clone();
    let c = cp.c.get(0, 2, 1).clone();
    for (name, e) in [("c^1_32", &c), ("Γ^1_32", &g132), ("Γ^1_23", &g123)] {
        if !sampler.nonzero_everywhere(e)? {
            return Err(Error::Degenerate(format!("relabeled {name} vanishes at a sample point")));
        }
    }
    let phi = iia_phi(&cp);
    let all: Vec<Expr> = phi.iter().flatten().cloned().collect();
    sampler
        .eval(&all)
        .map_err(|e| Error::Degenerate(format!("φ cannot be evaluated at every sample: {e}")))?;
    let rhs = phi
        .iter()
        .map(|row| row.iter().map(|p| Some(LinearForm::difference(p.clone(), 0, 1))).collect())
        .collect();
    let mut lambdas = vec![LinearForm::zero(); 3];
    lambdas[perm[0]] = LinearForm(vec![(0, simplify(&(&g132 / &c))), (1, simplify(&(-(&g123 / &c))))]);
    lambdas[perm[1]] = LinearForm::unit(0);
    lambdas[perm[2]] = LinearForm::unit(1);
    Ok(ReducedSystem {
        kind: ReducedKind::FrobeniusIIa,
        unknowns: vec![unknown_name(perm[1]), unknown_name(perm[2])],
        vars: conn.vars().to_vec(),
        rhs,
        lambdas,
        perm,
        sets: Vec::new(),
        simple: Vec::new(),
    })
}

/// Integrability conditions of the IIa Frobenius system,
/// `r_i(φ^s_j) − r_j(φ^s_i) − (φ^2_j φ^3_i − φ^2_i φ^3_j) − Σ_k c^k_ij φ^s_k`
/// for `i < j`. Returns the largest residual and one entry per condition.
pub fn check_frobenius_compat(
    conn: &Connection,
    red: &ReducedSystem,
    sampler: &Sampler,
) -> Result<(f64, Vec<(String, f64)>)> {
    if red.kind != ReducedKind::FrobeniusIIa {
        return Err(Error::Classification(format!("Frobenius check on a {} system", red.kind)));
    }
    let cp = conn.permuted(&red.perm);
    let phi = iia_phi(&cp);
    let mut names = Vec::new();
    let mut exprs = Vec::new();
    for s in 0..2 {
        for i in 0..3 {
            for j in (i + 1)..3 {
                let mut e = cp.apply_field(i, &phi[s][j]) - cp.apply_field(j, &phi[s][i])
                    - (&phi[0][j] * &phi[1][i] - &phi[0][i] * &phi[1][j]);
                for k in 0..3 {
                    e = e - cp.c.get(k, i, j) * &phi[s][k];
                }
                names.push(format!("s={} (i,j)=({},{})", s + 2, i + 1, j + 1));
                exprs.push(e);
            }
        }
    }
    let vals = sampler.eval(&exprs)?;
    let per: Vec<(String, f64)> = names
        .into_iter()
        .enumerate()
        .map(|(c, name)| (name, vals.iter().fold(0.0_f64, |m, v| m.max(v[c].abs()))))
        .collect();
    let max = per.iter().fold(0.0_f64, |m, (_, v)| m.max(*v));
    Ok((max, per))
}

#[derive(Clone, Debug)]
pub enum IibOutcome {
    Reduced(ReducedSystem),
    /// `Γ^3_31 ≠ Γ^2_21`; `gap` is the largest sampled difference.
    Trivial { gap: f64 },
}

/// Reduction with `λ^3 = λ^2` after relabeling the absent eigenvalue to
/// position 1. Directions are the relabeled frame fields.
pub fn reduce_iib(conn: &Connection, report: &CaseReport, sampler: &Sampler) -> Result<IibOutcome> {
    if report.label != CaseLabel::N3IIb {
        return Err(Error::Classification(format!("reduce_iib called for {}", report.label)));
    }
    let perm = report.relabeling.clone();
    let cp = conn.permuted(&perm);
    let g = |k, i, j| cp.gamma.get(k, i, j).clone();
    let checks = [
        ("c^1_32", cp.c.get(0, 2, 1).clone()),
        ("Γ^2_31", g(1, 2, 0)),
        ("Γ^3_21", g(2, 1, 0)),
    ];
    for (name, e) in &checks {
        if !sampler.zero_everywhere(e)? {
            let m = sampler.max_abs(e)?;
            return Err(Error::Classification(format!(
                "relabeled {name} should vanish for this case but reaches {m:.3e}"
            )));
        }
    }
    let diff = g(2, 2, 0) - g(1, 1, 0);
    if !sampler.zero_everywhere(&diff)? {
        return Ok(IibOutcome::Trivial {
            gap: sampler.max_abs(&diff)?,
        });
    }
    let rhs = vec![
        vec![
            None,
            Some(LinearForm::difference(g(0, 0, 1), 1, 0)),
            Some(LinearForm::difference(g(0, 0, 2), 1, 0)),
        ],
        vec![
            Some(LinearForm::difference(g(2, 2, 0), 0, 1)),
            Some(LinearForm::zero()),
            Some(LinearForm::zero()),
        ],
    ];
    let mut lambdas = vec![LinearForm::zero(); 3];
    lambdas[perm[0]] = LinearForm::unit(0);
    lambdas[perm[1]] = LinearForm::unit(1);
    lambdas[perm[2]] = LinearForm::unit(1);
    Ok(IibOutcome::Reduced(ReducedSystem {
        kind: ReducedKind::ReducedIIb,
        unknowns: vec![unknown_name(perm[0]), unknown_name(perm[1])],
        vars: conn.vars().to_vec(),
        rhs,
        lambdas,
        perm,
        sets: Vec::new(),
        simple: Vec::new(),
    }))
}
