//! Rich frames: index sets forced to share an eigenvalue and the system for
//! the remaining unknowns in Riemann invariants.

use super::{LinearForm, ReducedKind, ReducedSystem, Sampler};
use crate::error::{Error, Result};
use crate::expr::{differentiate, simplify, Expr};
use crate::geometry::Tensor3;

#[derive(Clone, Debug)]
pub struct RichReduction {
    /// Sets `A_α`, each sorted, ordered by smallest member.
    pub sets: Vec<Vec<usize>>,
    /// Indices whose eigenvalue is not tied to another.
    pub simple: Vec<usize>,
    pub system: ReducedSystem,
    /// All eigenvalues forced equal.
    pub trivial: bool,
    /// Passes of the merging loop.
    pub iterations: usize,
    /// Largest residual of the three structural properties of the final sets.
    pub structure_residual: f64,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, a: usize) -> usize {
        let mut r = a;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = a;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.0[hi] = lo;
        true
    }

    fn groups(&mut self, n: usize) -> Vec<Vec<usize>> {
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|g| !g.is_empty()).collect()
    }
}

/// Groups indices whose eigenvalues must coincide and rewrites the system
/// without algebraic constraints. `z` holds `Z^k_ij` in `vars`.
pub fn reduce_rich(z: &Tensor3, vars: &[String], sampler: &Sampler) -> Result<RichReduction> {
    let n = z.n();
    let zero = sampler.zero_mask(z.flat())?;
    let is_zero = |k: usize, i: usize, j: usize| zero[(k * n + i) * n + j];

    let mut uf = UnionFind((0..n).collect());
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if i != j && k != i && k != j && !is_zero(k, i, j) {
                    uf.union(i, j);
                }
            }
        }
    }

    // Z^k_ki agreeing across a set decides whether i joins it.
    let agrees = |set: &[usize], i: usize| -> Result<bool> {
        let first = z.get(set[0], set[0], i);
        for &k in &set[1..] {
            let d = z.get(k, k, i) - first;
            if !sampler.zero_everywhere(&d)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let mut iterations = 0;
    loop {
        iterations += 1;
        let groups: Vec<Vec<usize>> = uf.groups(n).into_iter().filter(|g| g.len() >= 2).collect();
        let mut merged = false;
        'search: for set in &groups {
            for i in 0..n {
                if set.contains(&i) {
                    continue;
                }
                if !agrees(set, i)? {
                    uf.union(set[0], i);
                    merged = true;
                    break 'search;
                }
            }
        }
        if !merged {
            break;
        }
        if iterations > n {
            return Err(Error::Classification("merging of index sets did not terminate".into()));
        }
    }

    let mut sets: Vec<Vec<usize>> = uf.groups(n).into_iter().filter(|g| g.len() >= 2).collect();
    sets.sort();
    let simple: Vec<usize> = (0..n).filter(|i| !sets.iter().any(|s| s.contains(i))).collect();
    let set_of = |i: usize| sets.iter().position(|s| s.contains(&i));

    // structural properties of the final sets
    let mut checks = Vec::new();
    for (a, set) in sets.iter().enumerate() {
        for i in (0..n).filter(|i| set_of(*i) != Some(a)) {
            for &j in &set[1..] {
                checks.push(z.get(j, j, i) - z.get(set[0], set[0], i));
            }
            for &si in set {
                for k in (0..n).filter(|&k| k != si && k != i) {
                    checks.push(z.get(k, si, i).clone());
                }
            }
        }
    }
    for &i in &simple {
        for &j in &simple {
            for k in 0..n {
                if i != j && k != i && k != j {
                    checks.push(z.get(k, i, j).clone());
                }
            }
        }
    }
    let mut structure_residual = 0.0_f64;
    if !checks.is_empty() {
        let vals = sampler.eval(&checks)?;
        for (s, row) in vals.iter().enumerate() {
            for v in row {
                structure_residual = structure_residual.max(v.abs() / sampler.scale[s]);
            }
        }
    }
    if structure_residual > 1e-7 {
        return Err(Error::Classification(format!(
            "index sets violate the structural properties by {structure_residual:.3e}; the zero tolerance is too loose"
        )));
    }

    let mut unknowns: Vec<String> = simple.iter().map(|j| format!("kappa{}", j + 1)).collect();
    unknowns.extend((0..sets.len()).map(|a| format!("h{}", a + 1)));
    let slot = |i: usize| match set_of(i) {
        Some(a) => simple.len() + a,
        None => simple.iter().position(|&s| s == i).unwrap(),
    };
    let mut rhs = Vec::with_capacity(unknowns.len());
    for &j in &simple {
        let u = slot(j);
        rhs.push(
            (0..n)
                .map(|i| (i != j).then(|| LinearForm::difference(z.get(j, j, i).clone(), slot(i), u)))
                .collect(),
        );
    }
    for (a, set) in sets.iter().enumerate() {
        let u = simple.len() + a;
        rhs.push(
            (0..n)
                .map(|i| {
                    Some(if set.contains(&i) {
                        LinearForm::zero()
                    } else {
                        LinearForm::difference(z.get(set[0], set[0], i).clone(), slot(i), u)
                    })
                })
                .collect(),
        );
    }
    let lambdas = (0..n).map(|i| LinearForm::unit(slot(i))).collect();
    let trivial = sets.len() == 1 && sets[0].len() == n;
    Ok(RichReduction {
        system: ReducedSystem {
            kind: ReducedKind::DarbouxRich,
            unknowns,
            vars: vars.to_vec(),
            rhs,
            lambdas,
            perm: (0..n).collect(),
            sets: sets.clone(),
            simple: simple.clone(),
        },
        sets,
        simple,
        trivial,
        iterations,
        structure_residual,
    })
}

/// Compatibility of a system written along coordinate axes: for every
/// unknown and every pair of prescribed axes the two mixed second
/// derivatives must agree for all values of the unknowns. Each coefficient
/// of the difference is a separate condition.
pub fn check_darboux_compat(red: &ReducedSystem, sampler: &Sampler) -> Result<(f64, Vec<(String, f64)>)> {
    let nu = red.n_unknowns();
    let nd = red.n_directions();
    let coeffs: Vec<Vec<Option<Vec<Expr>>>> = red
        .rhs
        .iter()
        .map(|row| row.iter().map(|f| f.as_ref().map(|f| f.collect(nu))).collect())
        .collect();
    let mut names = Vec::new();
    let mut exprs = Vec::new();
    for a in 0..nu {
        for d1 in 0..nd {
            for d2 in (d1 + 1)..nd {
                let (Some(c1), Some(c2)) = (&coeffs[a][d1], &coeffs[a][d2]) else {
                    continue;
                };
                // ∂_{d2}(Σ_b c1_b v^b) − ∂_{d1}(Σ_b c2_b v^b)
                let mut out: Vec<Expr> = (0..nu)
                    .map(|b| differentiate(&c1[b], &red.vars[d2]) - differentiate(&c2[b], &red.vars[d1]))
                    .collect();
                for b in 0..nu {
                    for (cb, dir, sign) in [(&c1[b], d2, 1.0), (&c2[b], d1, -1.0)] {
                        if cb.is_zero() {
                            continue;
                        }
                        let Some(inner) = &coeffs[b][dir] else {
                            return Err(Error::Classification(format!(
                                "system is not closed: {} needs the free derivative of {} along axis {}",
                                red.unknowns[a],
                                red.unknowns[b],
                                dir + 1
                            )));
                        };
                        for (c, o) in inner.iter().zip(out.iter_mut()) {
                            *o = &*o + Expr::constant(sign) * cb * c;
                        }
                    }
                }
                for (b, e) in out.into_iter().enumerate() {
                    let e = simplify(&e);
                    if e.is_zero() {
                        continue;
                    }
                    names.push(format!("{} axes ({},{}) coefficient of {}", red.unknowns[a], d1 + 1, d2 + 1, red.unknowns[b]));
                    exprs.push(e);
                }
            }
        }
    }
    if exprs.is_empty() {
        return Ok((0.0, Vec::new()));
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
