//! The reduced system with `λ^2 = λ^3`, integrated along the flows of the
//! relabeled frame fields. Each node is reached as `Φ3(t3) ∘ Φ2(t2) ∘ Φ1(t1)`
//! applied to the base node, with `(t1, t2, t3)` found by Newton iteration,
//! and the unknowns are carried along that same path.

use super::ode::{format_point, rk4_step, NodeStates};
use super::{reconstruct_lambdas, CoeffEval, Grid, InitialData, SolutionField, SolveOptions, UnknownField};
use crate::analysis::{Analysis, ReducedKind};
use crate::error::{Error, Result};
use crate::expr::Tape;
use crate::geometry::DomainBox;
use crate::tolerances::Tolerances;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Fraction of the box width flows may overshoot on the way to a node.
const FLOW_SLACK: f64 = 0.5;

pub fn integrate_iib(
    analysis: &Analysis,
    data: &InitialData,
    grid: &Grid,
    opts: &SolveOptions,
    tol: &Tolerances,
) -> Result<SolutionField> {
    let red = analysis
        .reduced
        .as_ref()
        .filter(|r| r.kind == ReducedKind::ReducedIIb)
        .ok_or_else(|| Error::Classification("no reduced IIb system to integrate".into()))?;
    data.expect(1, 1, "the reduced IIb system")?;
    let frame_tape = analysis.connection.frame.permuted(&red.perm).tape()?;
    let (coeff_tape, _) = red.coefficient_tape()?;
    let phi = data.function_tapes()?.remove(0);
    let domain = DomainBox::new(grid.lower(), grid.upper())?;
    let flows = Flows {
        n: grid.dim(),
        frame: &frame_tape,
        coeffs: CoeffEval {
            tape: &coeff_tape,
            lower: grid.lower(),
            upper: grid.upper(),
            boundary_limit: opts.boundary_limit,
        },
        phi: &phi,
        steps: opts.substeps * grid.axes.iter().map(|a| a.len()).max().unwrap_or(2),
        domain: &domain,
        origin: grid.base_point(),
        start: data.constants[0],
        integ_tol: tol.integ_tol,
    };
    let n = grid.dim();
    let nu = red.n_unknowns();

    // continuation outward from the base node, one axis at a time
    let mut states = NodeStates::new(grid.len(), n + nu);
    let base = flows.solve_node(&grid.base_point(), &vec![0.0; n])?;
    states.set(grid.base_flat(), &base);
    for axis in 0..n {
        let sources: Vec<usize> = (0..grid.len()).filter(|&f| states.filled[f]).collect();
        let lines: Vec<Vec<(usize, Vec<f64>)>> = sources
            .par_iter()
            .map(|&s| {
                let line = grid.line(s, axis);
                let k0 = grid.multi(s)[axis];
                let mut out = Vec::new();
                for range in [(k0 + 1..line.len()).collect::<Vec<_>>(), (0..k0).rev().collect()] {
                    let mut guess = states.get(s)[..n].to_vec();
                    for k in range {
                        let sol = flows.solve_node(&grid.point(line[k]), &guess)?;
                        guess = sol[..n].to_vec();
                        out.push((line[k], sol));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (node, v) in lines.into_iter().flatten() {
            states.set(node, &v);
        }
    }
    let unknowns: Vec<Vec<f64>> = (0..nu).map(|u| states.component(n + u)).collect();
    let points: Vec<Vec<f64>> = (0..grid.len()).map(|f| grid.point(f)).collect();
    let lambdas = reconstruct_lambdas(red, &points, &unknowns)?;
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
            values: unknowns,
        }),
        path_difference: None,
    })
}

struct Flows<'a> {
    n: usize,
    frame: &'a Tape,
    coeffs: CoeffEval<'a>,
    phi: &'a Tape,
    steps: usize,
    domain: &'a DomainBox,
    origin: Vec<f64>,
    start: f64,
    integ_tol: f64,
}

impl Flows<'_> {
    fn field(&self, x: &[f64], d: usize, out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let mut r = vec![0.0; n * n];
        self.frame
            .eval(x, &mut r)
            .map_err(|e| Error::Integration(format!("frame evaluation at {}: {}", format_point(x), Error::from(e))))?;
        for m in 0..n {
            out[m] = r[m * n + d];
        }
        Ok(())
    }

    fn check_inside(&self, x: &[f64]) -> Result<()> {
        if !self.domain.contains_with_slack(x, FLOW_SLACK) {
            return Err(Error::Integration(format!("frame flow leaves the domain at {}", format_point(x))));
        }
        Ok(())
    }

    /// End point of the composed flows.
    fn endpoint(&self, t: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.origin.clone();
        for (d, &td) in t.iter().enumerate() {
            let h = td / self.steps as f64;
            for k in 0..self.steps {
                rk4_step(&mut |_, y, dy| self.field(y, d, dy), k as f64 * h, (k + 1) as f64 * h, &mut x)?;
                self.check_inside(&x)?;
            }
        }
        Ok(x)
    }

    /// End point followed by the two unknowns carried along the path.
    fn carry(&self, t: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let nd = n;
        let nu = 2;
        let mut state = self.origin.clone();
        state.extend([self.eval_phi(0.0)?, self.start]);
        let mut after_first = self.start;
        for (d, &td) in t.iter().enumerate() {
            let h = td / self.steps as f64;
            for k in 0..self.steps {
                let mut f = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                    self.field(&y[..n], d, &mut dy[..n])?;
                    let mut c = vec![0.0; nu * nd * nu];
                    self.coeffs.eval(&y[..n], &mut c)?;
                    let v = if d == 0 { [self.eval_phi(s)?, y[n + 1]] } else { [y[n], y[n + 1]] };
                    for u in 0..nu {
                        dy[n + u] = if d == 0 && u == 0 {
                            0.0
                        } else {
                            (0..nu).map(|b| c[(u * nd + d) * nu + b] * v[b]).sum()
                        };
                    }
                    Ok(())
                };
                rk4_step(&mut f, k as f64 * h, (k + 1) as f64 * h, &mut state)?;
            }
            if d == 0 {
                state[n] = self.eval_phi(td)?;
                after_first = state[n + 1];
            }
        }
        let drift = (state[n + 1] - after_first).abs();
        if drift > self.integ_tol {
            return Err(Error::Integration(format!(
                "λ2 drifts by {drift:.3e} along the second and third flows near {}",
                format_point(&state[..n])
            )));
        }
        Ok(state)
    }

    fn eval_phi(&self, s: f64) -> Result<f64> {
        let v = self
            .phi
            .eval_vec(&[s])
            .map_err(|e| Error::Integration(format!("initial function at t = {s}: {e}")))?[0];
        if !v.is_finite() {
            return Err(Error::Integration(format!("initial function is not finite at t = {s}")));
        }
        Ok(v)
    }

    /// Flow times reaching `target` and the unknowns there.
    fn solve_node(&self, target: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let scale = 1.0 + self.domain.diameter();
        let residual = |t: &[f64]| -> Result<Vec<f64>> {
            let x = self.endpoint(t)?;
            Ok(x.iter().zip(target).map(|(a, b)| a - b).collect())
        };
        let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut t = guess.to_vec();
        let mut f = residual(&t)?;
        let mut converged = false;
        for _ in 0..50 {
            if norm(&f) < 1e-12 * scale {
                converged = true;
                break;
            }
            let mut jac = DMatrix::zeros(n, n);
            for k in 0..n {
                let h = 1e-7 * (1.0 + t[k].abs());
                let mut tk = t.clone();
                tk[k] += h;
                let fk = residual(&tk)?;
                for m in 0..n {
                    jac[(m, k)] = (fk[m] - f[m]) / h;
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_column_slice(&f))
                .ok_or_else(|| Error::Integration(format!("flow coordinates are singular near {}", format_point(target))))?;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..20 {
                let trial: Vec<f64> = (0..n).map(|k| t[k] - alpha * step[k]).collect();
                if let Ok(ft) = residual(&trial) {
                    if norm(&ft) < norm(&f) {
                        t = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if !converged && norm(&f) >= 1e-9 * scale {
            return Err(Error::Integration(format!(
                "no frame-flow path reaches {} (miss {:.3e})",
                format_point(target),
                norm(&f)
            )));
        }
        let carried = self.carry(&t)?;
        let mut out = t;
        out.extend_from_slice(&carried[n..]);
        Ok(out)
    }
}
