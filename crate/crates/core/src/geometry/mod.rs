//! Frames, coframes, structure coefficients and Christoffel symbols.
//!
//! Index conventions follow the component layout used everywhere else in
//! the crate: `r[m][j]` is the m-th component of the field `R_j` (so fields
//! are columns), `l[k][m]` is the m-th component of the covector `L^k`, and
//! tensors with three indices are addressed as `(k, i, j)` for `X^k_ij`.

mod chart;
mod connection;
mod linalg;
mod sampling;

pub use chart::{pullback_z, ChartReport, RiemannChart, ZTensor};
pub use connection::{
    check_flat_symmetric, christoffel, invert_frame, structure_coefficients, Connection,
    FlatnessReport, Tensor3,
};
pub use linalg::{symbolic_det, symbolic_inverse};
pub use sampling::sample_points;

use crate::error::{Error, Result};
use crate::expr::{Expr, Tape};

/// Closed axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<DomainBox> {
        if lower.len() != upper.len() {
            return Err(Error::Config("box bounds have different lengths".into()));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::Config(format!("box axis {} is empty: [{a}, {b}]", i + 1)));
            }
        }
        Ok(DomainBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (a, b))| *x >= *a && *x <= *b)
    }

    /// Like `contains` with a relative slack on every side.
    pub fn contains_with_slack(&self, p: &[f64], slack: f64) -> bool {
        p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(x, (a, b))| {
            let s = slack * (b - a);
            *x >= *a - s && *x <= *b + s
        })
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// A frame of `n` vector fields given symbolically on a box.
#[derive(Clone, Debug)]
pub struct Frame {
    pub vars: Vec<String>,
    /// `r[m][j]`: component m of field j.
    pub r: Vec<Vec<Expr>>,
    pub domain: DomainBox,
    pub base: Vec<f64>,
}

impl Frame {
    pub fn new(vars: Vec<String>, r: Vec<Vec<Expr>>, domain: DomainBox, base: Vec<f64>) -> Result<Frame> {
        let n = vars.len();
        if n == 0 {
            return Err(Error::Config("frame needs at least one variable".into()));
        }
        if r.len() != n || r.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!("frame must be {n}x{n}")));
        }
        if domain.dim() != n || base.len() != n {
            return Err(Error::Config("box/base dimension does not match the frame".into()));
        }
        if !domain.contains(&base) {
            return Err(Error::Config(format!("base point {base:?} lies outside the domain box")));
        }
        for row in &r {
            for e in row {
                for v in e.free_vars() {
                    if !vars.contains(&v) {
                        return Err(Error::UnboundVariable(v));
                    }
                }
            }
        }
        Ok(Frame { vars, r, domain, base })
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// Column `j` as a vector of components.
    pub fn field(&self, j: usize) -> Vec<Expr> {
        self.r.iter().map(|row| row[j].clone()).collect()
    }

    /// The frame with its fields reordered: new field `a` is old field `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Frame {
        let r = self
            .r
            .iter()
            .map(|row| perm.iter().map(|&p| row[p].clone()).collect())
            .collect();
        Frame {
            vars: self.vars.clone(),
            r,
            domain: self.domain.clone(),
            base: self.base.clone(),
        }
    }

    /// `r_i(f) = Σ_m R^m_i ∂f/∂u^m`.
    pub fn apply_field(&self, i: usize, f: &Expr) -> Expr {
        f.directional(&self.vars, &self.field(i))
    }

    /// Matrix-valued evaluator for the frame components, row-major.
    pub fn tape(&self) -> Result<Tape> {
        let flat: Vec<Expr> = self.r.iter().flatten().cloned().collect();
        Tape::compile(&flat, &self.vars)
    }
}

/// Flattened `n x n` matrix of expressions, row-major.
pub(crate) fn flatten(m: &[Vec<Expr>]) -> Vec<Expr> {
    m.iter().flatten().cloned().collect()
}
