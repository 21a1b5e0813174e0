use crate::error::Result;
use crate::expr::{Expr, Tape};
use crate::geometry::{sample_points, DomainBox, Tensor3};
use crate::tolerances::Tolerances;
use rayon::prelude::*;

/// Sample points together with the local scale used by zero tests.
///
/// The scale at a point is `1 + max |X^k_ij|` over the reference tensor, so
/// "zero" means small compared with the connection itself.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub vars: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub scale: Vec<f64>,
    pub zero_tol: f64,
}

impl Sampler {
    pub fn new(vars: &[String], domain: &DomainBox, reference: &Tensor3, tol: &Tolerances, seed: u64) -> Result<Sampler> {
        let points = sample_points(domain, tol.samples, seed);
        Sampler::at(vars, points, reference, tol.zero_tol)
    }

    pub fn at(vars: &[String], points: Vec<Vec<f64>>, reference: &Tensor3, zero_tol: f64) -> Result<Sampler> {
        let tape = reference.tape(vars)?;
        let scale = points
            .par_iter()
            .map(|p| {
                let v = tape.eval_vec(p)?;
                Ok(1.0 + v.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Sampler {
            vars: vars.to_vec(),
            points,
            scale,
            zero_tol,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of `exprs` at every sample, `out[sample][expr]`.
    pub fn eval(&self, exprs: &[Expr]) -> Result<Vec<Vec<f64>>> {
        let tape = Tape::compile(exprs, &self.vars)?;
        self.eval_tape(&tape)
    }

    pub fn eval_tape(&self, tape: &Tape) -> Result<Vec<Vec<f64>>> {
        self.points.par_iter().map(|p| tape.eval_vec(p)).collect()
    }

    fn is_small(&self, v: f64, s: usize) -> bool {
        v.abs() < self.zero_tol * self.scale[s]
    }

    /// True when `e` is negligible at every sample.
    pub fn zero_everywhere(&self, e: &Expr) -> Result<bool> {
        if e.is_zero() {
            return Ok(true);
        }
        let v = self.eval(std::slice::from_ref(e))?;
        Ok(v.iter().enumerate().all(|(s, x)| self.is_small(x[0], s)))
    }

    /// True when `e` is clearly non-zero at every sample.
    pub fn nonzero_everywhere(&self, e: &Expr) -> Result<bool> {
        if e.is_zero() {
            return Ok(false);
        }
        let v = self.eval(std::slice::from_ref(e))?;
        Ok(v.iter().enumerate().all(|(s, x)| !self.is_small(x[0], s)))
    }

    /// Zero flags for many expressions at once: `true` where the expression
    /// is negligible at every sample.
    pub fn zero_mask(&self, exprs: &[Expr]) -> Result<Vec<bool>> {
        let v = self.eval(exprs)?;
        Ok((0..exprs.len())
            .map(|e| exprs[e].is_zero() || v.iter().enumerate().all(|(s, x)| self.is_small(x[e], s)))
            .collect())
    }

    /// `max |e|` over the samples.
    pub fn max_abs(&self, e: &Expr) -> Result<f64> {
        let v = self.eval(std::slice::from_ref(e))?;
        Ok(v.iter().fold(0.0, |m, x| m.max(x[0].abs())))
    }
}
