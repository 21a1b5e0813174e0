use super::{flatten, symbolic_inverse, Frame};
use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr, Tape};
use crate::tolerances::Tolerances;
use rayon::prelude::*;

/// Three-index array `X^k_ij` stored densely.
#[derive(Clone, Debug)]
pub struct Tensor3 {
    n: usize,
    data: Vec<Expr>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Tensor3 {
        Tensor3 {
            n,
            data: vec![Expr::zero(); n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.data[self.idx(k, i, j)]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, e: Expr) {
        let ix = self.idx(k, i, j);
        self.data[ix] = e;
    }

    /// All entries in `(k, i, j)` order.
    pub fn flat(&self) -> &[Expr] {
        &self.data
    }

    /// Relabels indices: entry `(a, b, c)` of the result is entry
    /// `(perm[a], perm[b], perm[c])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Tensor3 {
        let mut t = Tensor3::zeros(self.n);
        for a in 0..self.n {
            for b in 0..self.n {
                for c in 0..self.n {
                    t.set(a, b, c, self.get(perm[a], perm[b], perm[c]).clone());
                }
            }
        }
        t
    }

    pub fn tape(&self, vars: &[String]) -> Result<Tape> {
        Tape::compile(&self.data, vars)
    }
}

/// Coframe, structure coefficients and Christoffel symbols of a frame.
#[derive(Clone, Debug)]
pub struct Connection {
    pub frame: Frame,
    /// `l[k][m]`: component m of the covector L^k.
    pub l: Vec<Vec<Expr>>,
    pub det: Expr,
    /// `c^k_ij`, antisymmetric in i, j.
    pub c: Tensor3,
    /// `Γ^k_ij`.
    pub gamma: Tensor3,
}

/// Coframe `L = R⁻¹` by adjugate. Fails for n > 4 or when the frame is
/// numerically singular at the base point.
pub fn invert_frame(frame: &Frame, tol: &Tolerances) -> Result<(Vec<Vec<Expr>>, Expr)> {
    let (l, det) = symbolic_inverse(&frame.r)?;
    let tape = Tape::compile(&[det.clone()], &frame.vars)?;
    let d = tape.eval_vec(&frame.base)?[0];
    let rv = frame.tape()?.eval_vec(&frame.base)?;
    let norm = rv.iter().map(|x| x * x).sum::<f64>().sqrt();
    if d.abs() <= tol.rank_tol * norm.powi(frame.n() as i32) {
        return Err(Error::SingularFrame(format!(
            "det R = {d:e} at base point {:?}",
            frame.base
        )));
    }
    Ok((l, det))
}

/// `D[m][j][p] = ∂R^m_j / ∂u^p`.
fn frame_jacobian(frame: &Frame) -> Vec<Vec<Vec<Expr>>> {
    frame
        .r
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| frame.vars.iter().map(|v| differentiate(e, v)).collect())
                .collect()
        })
        .collect()
}

/// `r_i(R^m_j)` for all m, i, j, as `out[m][i][j]`.
fn frame_derivatives(frame: &Frame) -> Vec<Vec<Vec<Expr>>> {
    let n = frame.n();
    let d = frame_jacobian(frame);
    (0..n)
        .map(|m| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut acc = Expr::zero();
                            for p in 0..n {
                                acc = acc + &frame.r[p][i] * &d[m][j][p];
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `c^k_ij = Σ_m L^k_m (r_i(R^m_j) − r_j(R^m_i))`; the lower triangle is the
/// negation of the upper one.
pub fn structure_coefficients(frame: &Frame, l: &[Vec<Expr>]) -> Tensor3 {
    let n = frame.n();
    let dr = frame_derivatives(frame);
    let mut c = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let mut acc = Expr::zero();
                for m in 0..n {
                    let bracket = &dr[m][i][j] - &dr[m][j][i];
                    acc = acc + &l[k][m] * bracket;
                }
                let acc = simplify(&acc);
                c.set(k, j, i, -&acc);
                c.set(k, i, j, acc);
            }
        }
    }
    c
}

/// `Γ^k_ij = L^k (DR_j) R_i = Σ_m L^k_m r_i(R^m_j)`.
pub fn christoffel(frame: &Frame, l: &[Vec<Expr>]) -> Tensor3 {
    let n = frame.n();
    let dr = frame_derivatives(frame);
    let mut g = Tensor3::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = Expr::zero();
                for m in 0..n {
                    acc = acc + &l[k][m] * &dr[m][i][j];
                }
                g.set(k, i, j, simplify(&acc));
            }
        }
    }
    g
}

impl Connection {
    pub fn build(frame: &Frame, tol: &Tolerances) -> Result<Connection> {
        let (l, det) = invert_frame(frame, tol)?;
        let c = structure_coefficients(frame, &l);
        let gamma = christoffel(frame, &l);
        Ok(Connection {
            frame: frame.clone(),
            l,
            det,
            c,
            gamma,
        })
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn vars(&self) -> &[String] {
        &self.frame.vars
    }

    /// The connection of the relabeled frame whose field `a` is `R_{perm[a]}`.
    pub fn permuted(&self, perm: &[usize]) -> Connection {
        let l = perm.iter().map(|&p| self.l[p].clone()).collect();
        Connection {
            frame: self.frame.permuted(perm),
            l,
            det: self.det.clone(),
            c: self.c.permuted(perm),
            gamma: self.gamma.permuted(perm),
        }
    }

    /// `r_i(f)` for the frame field `i`.
    pub fn apply_field(&self, i: usize, f: &Expr) -> Expr {
        self.frame.apply_field(i, f)
    }

    pub fn l_tape(&self) -> Result<Tape> {
        Tape::compile(&flatten(&self.l), &self.frame.vars)
    }
}

/// Maximum residuals of the identities every flat symmetric connection obeys.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatnessReport {
    /// `max |R L − I|`.
    pub inverse: f64,
    /// `max |c^i_km − Γ^i_km + Γ^i_mk|`.
    pub torsion: f64,
    /// Curvature identity residual.
    pub curvature: f64,
    /// Smallest `|det R|` seen over the samples.
    pub min_det: f64,
}

impl FlatnessReport {
    pub fn passes(&self, tol: &Tolerances) -> bool {
        self.torsion < tol.flat_tol && self.curvature < tol.flat_tol && self.inverse < 1e-9
    }
}

/// Evaluates the torsion and curvature identities at `samples`.
pub fn check_flat_symmetric(conn: &Connection, samples: &[Vec<f64>]) -> Result<FlatnessReport> {
    let n = conn.n();
    let vars = conn.vars();
    let g = &conn.gamma;
    // r_m(Γ^j_ki), flattened as ((m*n + j)*n + k)*n + i
    let mut dg = Vec::with_capacity(n * n * n * n);
    let partials: Vec<Vec<Expr>> = g
        .flat()
        .iter()
        .map(|e| vars.iter().map(|v| differentiate(e, v)).collect())
        .collect();
    for m in 0..n {
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    let idx = (j * n + k) * n + i;
                    let mut acc = Expr::zero();
                    for p in 0..n {
                        acc = acc + &conn.frame.r[p][m] * &partials[idx][p];
                    }
                    dg.push(acc);
                }
            }
        }
    }
    let mut all = Vec::new();
    all.extend(flatten(&conn.frame.r));
    all.extend(flatten(&conn.l));
    all.extend(conn.c.flat().iter().cloned());
    all.extend(g.flat().iter().cloned());
    all.extend(dg);
    all.push(conn.det.clone());
    let tape = Tape::compile(&all, vars)?;

    let per_sample: Vec<Result<FlatnessReport>> = samples
        .par_iter()
        .map(|x| {
            let v = tape.eval_vec(x)?;
            let nn = n * n;
            let n3 = nn * n;
            let r = &v[0..nn];
            let l = &v[nn..2 * nn];
            let c = &v[2 * nn..2 * nn + n3];
            let gm = &v[2 * nn + n3..2 * nn + 2 * n3];
            let dgv = &v[2 * nn + 2 * n3..2 * nn + 2 * n3 + n3 * n];
            let det = v[v.len() - 1];
            let t = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
            let mut rep = FlatnessReport {
                min_det: det.abs(),
                ..Default::default()
            };
            for a in 0..n {
                for b in 0..n {
                    let s: f64 = (0..n).map(|k| r[a * n + k] * l[k * n + b]).sum();
                    let e = (s - if a == b { 1.0 } else { 0.0 }).abs();
                    rep.inverse = rep.inverse.max(e);
                }
            }
            for i in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let e = (c[t(i, k, m)] - gm[t(i, k, m)] + gm[t(i, m, k)]).abs();
                        rep.torsion = rep.torsion.max(e);
                    }
                }
            }
            let d = |m: usize, j: usize, k: usize, i: usize| dgv[((m * n + j) * n + k) * n + i];
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        for i in 0..n {
                            let lhs = d(m, j, k, i) - d(k, j, m, i);
                            let mut rhs = 0.0;
                            for s in 0..n {
                                rhs += gm[t(j, k, s)] * gm[t(s, m, i)] - gm[t(j, m, s)] * gm[t(s, k, i)]
                                    - c[t(s, k, m)] * gm[t(j, s, i)];
                            }
                            rep.curvature = rep.curvature.max((lhs - rhs).abs());
                        }
                    }
                }
            }
            Ok(rep)
        })
        .collect();
    let mut out = FlatnessReport {
        min_det: f64::INFINITY,
        ..Default::default()
    };
    for r in per_sample {
        let r = r?;
        out.inverse = out.inverse.max(r.inverse);
        out.torsion = out.torsion.max(r.torsion);
        out.curvature = out.curvature.max(r.curvature);
        out.min_det = out.min_det.min(r.min_det);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::geometry::{sample_points, DomainBox};

    pub(crate) fn frame_from(rows: &[&[&str]], vars: &[&str], lo: &[f64], hi: &[f64]) -> Frame {
        let names: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let r = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_expr(s, vars).unwrap()).collect())
            .collect();
        let base = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Frame::new(names, r, DomainBox::new(lo.to_vec(), hi.to_vec()).unwrap(), base).unwrap()
    }

    fn eval_tensor(t: &Tensor3, vars: &[String], x: &[f64]) -> Vec<f64> {
        t.tape(vars).unwrap().eval_vec(x).unwrap()
    }

    #[test]
    fn identity_frame_has_identity_coframe() {
        let f = frame_from(
            &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]],
            &["u1", "u2", "u3"],
            &[0.0; 3],
            &[1.0; 3],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        for (k, row) in conn.l.iter().enumerate() {
            for (m, e) in row.iter().enumerate() {
                assert_eq!(e.as_const(), Some(if k == m { 1.0 } else { 0.0 }));
            }
        }
        assert!(conn.gamma.flat().iter().all(|e| e.is_zero()));
        assert!(conn.c.flat().iter().all(|e| e.is_zero()));
    }

    #[test]
    fn commuting_frame_with_single_connection_component() {
        // fields (1,0,u2), (0,1,u1), (0,0,-1)
        let f = frame_from(
            &[&["1", "0", "0"], &["0", "1", "0"], &["u2", "u1", "-1"]],
            &["u1", "u2", "u3"],
            &[-1.0; 3],
            &[1.0; 3],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let x = [0.3, -0.4, 0.7];
        let c = eval_tensor(&conn.c, &f.vars, &x);
        assert!(c.iter().all(|v| v.abs() < 1e-14));
        let g = eval_tensor(&conn.gamma, &f.vars, &x);
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let v = g[(k * 3 + i) * 3 + j];
                    let expected = if k == 2 && ((i, j) == (0, 1) || (i, j) == (1, 0)) { -1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-14, "Γ^{k}_{i}{j} = {v}");
                }
            }
        }
    }

    #[test]
    fn bracket_r1_r3_is_r2() {
        // fields (0,1,0), (1,0,0), (u2,u3,1)
        let f = frame_from(
            &[&["0", "1", "u2"], &["1", "0", "u3"], &["0", "0", "1"]],
            &["u1", "u2", "u3"],
            &[-1.0; 3],
            &[1.0; 3],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let c = eval_tensor(&conn.c, &f.vars, &[0.2, 0.5, -0.3]);
        for k in 0..3 {
            let v = c[(k * 3) * 3 + 2];
            assert!((v - if k == 1 { 1.0 } else { 0.0 }).abs() < 1e-14);
            // antisymmetric view
            assert_eq!(v, -c[(k * 3 + 2) * 3]);
        }
    }

    #[test]
    fn singular_frame_rejected() {
        let f = frame_from(&[&["u1", "u1"], &["1", "1"]], &["u1", "u2"], &[0.5, 0.5], &[1.0, 1.0]);
        assert!(matches!(
            Connection::build(&f, &Tolerances::default()),
            Err(Error::SingularFrame(_))
        ));
    }

    #[test]
    fn identities_hold_for_a_curved_frame() {
        let f = frame_from(
            &[&["u1+u3", "1", "u2"], &["1", "0", "u3"], &["0", "0", "-u2"]],
            &["u1", "u2", "u3"],
            &[0.1, 0.5, 0.1],
            &[1.0, 1.5, 1.0],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let s = sample_points(&f.domain, 20, 1);
        let rep = check_flat_symmetric(&conn, &s).unwrap();
        assert!(rep.torsion < 1e-12 && rep.curvature < 1e-10 && rep.inverse < 1e-12, "{rep:?}");
    }

    #[test]
    fn constant_frame_identities_are_exact() {
        let f = frame_from(
            &[&["1", "2", "0"], &["0", "1", "3"], &["1", "0", "1"]],
            &["u1", "u2", "u3"],
            &[0.0; 3],
            &[1.0; 3],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let rep = check_flat_symmetric(&conn, &sample_points(&f.domain, 10, 3)).unwrap();
        assert_eq!(rep.torsion, 0.0);
        assert_eq!(rep.curvature, 0.0);
    }
}
