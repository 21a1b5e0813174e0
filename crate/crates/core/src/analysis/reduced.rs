use crate::expr::{Expr, Tape};
use crate::error::Result;

/// `Σ coef_u · unknown_u`.
#[derive(Clone, Debug, Default)]
pub struct LinearForm(pub Vec<(usize, Expr)>);

impl LinearForm {
    pub fn zero() -> LinearForm {
        LinearForm(Vec::new())
    }

    pub fn unit(u: usize) -> LinearForm {
        LinearForm(vec![(u, Expr::one())])
    }

    /// `c · (unknown_a − unknown_b)`.
    pub fn difference(c: Expr, a: usize, b: usize) -> LinearForm {
        if c.is_zero() || a == b {
            return LinearForm::zero();
        }
        LinearForm(vec![(a, c.clone()), (b, -c)])
    }

    pub fn terms(&self) -> &[(usize, Expr)] {
        &self.0
    }

    /// Sums coefficients per unknown.
    pub fn collect(&self, n_unknowns: usize) -> Vec<Expr> {
        let mut out = vec![Expr::zero(); n_unknowns];
        for (u, c) in &self.0 {
            out[*u] = &out[*u] + c;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReducedKind {
    FrobeniusIIa,
    ReducedIIb,
    DarbouxRich,
}

impl std::fmt::Display for ReducedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReducedKind::FrobeniusIIa => "Frobenius-IIa",
            ReducedKind::ReducedIIb => "Reduced-IIb",
            ReducedKind::DarbouxRich => "Darboux-Rich",
        })
    }
}

/// A first-order system without algebraic constraints.
///
/// `rhs[u][d]` prescribes the derivative of unknown `u` in direction `d`
/// (a frame field for the n=3 systems, a chart axis for rich frames), or is
/// `None` where that derivative is free. `lambdas[i]` rebuilds the original
/// eigenvalue `λ^i` from the unknowns.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub kind: ReducedKind,
    pub unknowns: Vec<String>,
    /// Variables the coefficient expressions are written in.
    pub vars: Vec<String>,
    pub rhs: Vec<Vec<Option<LinearForm>>>,
    pub lambdas: Vec<LinearForm>,
    /// Relabeling applied before reduction; relabeled index `a` is original `perm[a]`.
    pub perm: Vec<usize>,
    /// Rich frames: index sets forced equal (original indices).
    pub sets: Vec<Vec<usize>>,
    /// Rich frames: indices carrying their own unknown.
    pub simple: Vec<usize>,
}

impl ReducedSystem {
    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn n_directions(&self) -> usize {
        self.rhs.first().map_or(0, |r| r.len())
    }

    /// Compiles the collected coefficients of every prescribed derivative:
    /// output block `(u, d)` holds `n_unknowns` values; free slots compile to
    /// zeros and are flagged in the returned mask.
    pub fn coefficient_tape(&self) -> Result<(Tape, Vec<Vec<bool>>)> {
        let nu = self.n_unknowns();
        let nd = self.n_directions();
        let mut exprs = Vec::with_capacity(nu * nd * nu);
        let mut mask = vec![vec![false; nd]; nu];
        for u in 0..nu {
            for d in 0..nd {
                match &self.rhs[u][d] {
                    Some(f) => {
                        mask[u][d] = true;
                        exprs.extend(f.collect(nu));
                    }
                    None => exprs.extend(std::iter::repeat_n(Expr::zero(), nu)),
                }
            }
        }
        Ok((Tape::compile(&exprs, &self.vars)?, mask))
    }

    /// Compiles the reconstruction of every λ^i: `n * n_unknowns` outputs.
    pub fn lambda_tape(&self) -> Result<Tape> {
        let nu = self.n_unknowns();
        let exprs: Vec<Expr> = self.lambdas.iter().flat_map(|f| f.collect(nu)).collect();
        Tape::compile(&exprs, &self.vars)
    }
}
