//! Numeric evaluation.
//!
//! Large expressions are evaluated through a [`Tape`]: a flat instruction list
//! with common subexpressions merged, compiled once and run at many points.

use super::{BinaryOp, Expr, Node, UnaryOp};
use crate::error::{DomainKind, Error, Result};
use std::collections::HashMap;
use std::sync::Arc;

pub(crate) fn apply_unary(op: UnaryOp, a: f64) -> std::result::Result<f64, DomainKind> {
    let r = match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sqrt => {
            if a < 0.0 {
                return Err(DomainKind::SqrtOfNegative);
            }
            a.sqrt()
        }
        UnaryOp::Exp => a.exp(),
        UnaryOp::Ln => {
            if a <= 0.0 {
                return Err(DomainKind::LogOfNonPositive);
            }
            a.ln()
        }
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Tan => a.tan(),
        UnaryOp::Arctan => a.atan(),
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(DomainKind::NonFinite)
    }
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> std::result::Result<f64, DomainKind> {
    let r = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b == 0.0 {
                return Err(DomainKind::DivisionByZero);
            }
            a / b
        }
        BinaryOp::Pow => {
            if b.fract() == 0.0 && b.abs() <= 64.0 {
                if a == 0.0 && b < 0.0 {
                    return Err(DomainKind::DivisionByZero);
                }
                a.powi(b as i32)
            } else {
                if a < 0.0 {
                    return Err(DomainKind::NegativeBaseFractionalPower);
                }
                if a == 0.0 && b < 0.0 {
                    return Err(DomainKind::DivisionByZero);
                }
                a.powf(b)
            }
        }
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(DomainKind::NonFinite)
    }
}

/// A named assignment of variable values.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    entries: Vec<(String, f64)>,
}

impl Point {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Point> {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(n, v)| (n.into(), v)).collect();
        for (i, (n, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(m, _)| m == n) {
                return Err(Error::Config(format!("duplicate variable `{n}` in point")));
            }
        }
        Ok(Point { entries })
    }

    /// Pairs `names` with `values` positionally.
    pub fn from_slices(names: &[String], values: &[f64]) -> Point {
        Point {
            entries: names.iter().cloned().zip(values.iter().copied()).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }
}

/// Evaluates `e` at `p`. Every free variable must be bound.
pub fn evaluate(e: &Expr, p: &Point) -> Result<f64> {
    let names = p.names();
    let tape = Tape::compile(std::slice::from_ref(e), &names)?;
    let mut out = [0.0];
    tape.eval(&p.values(), &mut out)?;
    Ok(out[0])
}

#[derive(Clone, Copy, Debug)]
enum Instr {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Var(usize),
    Unary(UnaryOp, u32),
    Binary(BinaryOp, u32, u32),
}

/// Failure while running a tape: which instruction and why.
#[derive(Clone, Debug, PartialEq)]
pub struct TapeError {
    pub kind: DomainKind,
    pub subtree: String,
}

impl From<TapeError> for Error {
    fn from(e: TapeError) -> Error {
        Error::Domain {
            kind: e.kind,
            subtree: e.subtree,
        }
    }
}

/// Compiled evaluator for a list of expressions sharing one variable order.
#[derive(Clone, Debug)]
pub struct Tape {
    vars: Vec<Arc<str>>,
    instrs: Vec<Instr>,
    outputs: Vec<u32>,
    sources: Vec<Expr>,
}

impl Tape {
    /// Compiles `exprs` against the variable order `vars`. Fails on a free
    /// variable not listed in `vars`.
    pub fn compile(exprs: &[Expr], vars: &[String]) -> Result<Tape> {
        let var_index: HashMap<&str, usize> =
            vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let mut tape = Tape {
            vars: vars.iter().map(|v| Arc::from(v.as_str())).collect(),
            instrs: Vec::new(),
            outputs: Vec::new(),
            sources: Vec::new(),
        };
        let mut by_ptr: HashMap<*const (), u32> = HashMap::new();
        let mut by_key: HashMap<Key, u32> = HashMap::new();
        for e in exprs {
            let slot = tape.emit(e, &var_index, &mut by_ptr, &mut by_key)?;
            tape.outputs.push(slot);
        }
        Ok(tape)
    }

    fn emit(
        &mut self,
        root: &Expr,
        var_index: &HashMap<&str, usize>,
        by_ptr: &mut HashMap<*const (), u32>,
        by_key: &mut HashMap<Key, u32>,
    ) -> Result<u32> {
        // explicit post-order traversal; deep trees would overflow the stack
        let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
        while let Some((e, expanded)) = stack.pop() {
            if by_ptr.contains_key(&e.ptr()) {
                continue;
            }
            if !expanded {
                stack.push((e.clone(), true));
                match e.node() {
                    Node::Unary(_, a) => stack.push((a.clone(), false)),
                    Node::Binary(_, a, b) => {
                        stack.push((b.clone(), false));
                        stack.push((a.clone(), false));
                    }
                    _ => {}
                }
                continue;
            }
            let (key, instr) = match e.node() {
                Node::Const(c) => (Key::Const(c.to_bits()), Instr::Const(*c)),
                Node::Var(v) => {
                    let i = *var_index
                        .get(&**v)
                        .ok_or_else(|| Error::UnboundVariable(v.to_string()))?;
                    (Key::Var(i), Instr::Var(i))
                }
                Node::Unary(op, a) => {
                    let sa = by_ptr[&a.ptr()];
                    (Key::Unary(*op, sa), Instr::Unary(*op, sa))
                }
                Node::Binary(op, a, b) => {
                    let sa = by_ptr[&a.ptr()];
                    let sb = by_ptr[&b.ptr()];
                    (Key::Binary(*op, sa, sb), Instr::Binary(*op, sa, sb))
                }
            };
            let slot = match by_key.get(&key) {
                Some(s) => *s,
                None => {
                    let s = self.instrs.len() as u32;
                    self.instrs.push(instr);
                    self.sources.push(e.clone());
                    by_key.insert(key, s);
                    s
                }
            };
            by_ptr.insert(e.ptr(), slot);
        }
        Ok(by_ptr[&root.ptr()])
    }

    pub fn vars(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.to_string()).collect()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    /// Runs the tape with `x` bound positionally to the compile-time
    /// variables, writing one value per compiled expression into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> std::result::Result<(), TapeError> {
        let mut scratch = Vec::with_capacity(self.instrs.len());
        self.eval_with(x, out, &mut scratch)
    }

    /// Like [`Tape::eval`] but reuses a caller-owned scratch buffer.
    pub fn eval_with(
        &self,
        x: &[f64],
        out: &mut [f64],
        scratch: &mut Vec<f64>,
    ) -> std::result::Result<(), TapeError> {
        debug_assert_eq!(x.len(), self.vars.len());
        scratch.clear();
        for (i, ins) in self.instrs.iter().enumerate() {
            let v = match *ins {
                Instr::Const(c) => Ok(c),
                Instr::Var(j) => Ok(x[j]),
                Instr::Unary(op, a) => apply_unary(op, scratch[a as usize]),
                Instr::Binary(op, a, b) => apply_binary(op, scratch[a as usize], scratch[b as usize]),
            };
            match v {
                Ok(v) => scratch.push(v),
                Err(kind) => {
                    return Err(TapeError {
                        kind,
                        subtree: self.sources[i].to_string_truncated(160),
                    })
                }
            }
        }
        for (o, s) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[*s as usize];
        }
        Ok(())
    }

    /// Convenience wrapper returning a fresh vector.
    pub fn eval_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval(x, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    #[test]
    fn evaluates_simple_product() {
        let e = parse_expr("u1*u2", &["u1", "u2"]).unwrap();
        let p = Point::new([("u1", 2.0), ("u2", 3.0)]).unwrap();
        assert_eq!(evaluate(&e, &p).unwrap(), 6.0);
    }

    #[test]
    fn sqrt_of_negated_symbol() {
        let e = parse_expr("sqrt(-p_v)", &["p_v"]).unwrap();
        let p = Point::new([("p_v", -4.0)]).unwrap();
        assert_eq!(evaluate(&e, &p).unwrap(), 2.0);
    }

    #[test]
    fn division_by_zero_reports_subtree() {
        let e = parse_expr("1/u1", &["u1"]).unwrap();
        let p = Point::new([("u1", 0.0)]).unwrap();
        match evaluate(&e, &p) {
            Err(Error::Domain { kind, subtree }) => {
                assert_eq!(kind, DomainKind::DivisionByZero);
                assert_eq!(subtree, "1 / u1");
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let e = parse_expr("x + y", &["x", "y"]).unwrap();
        let p = Point::new([("x", 1.0)]).unwrap();
        assert!(matches!(evaluate(&e, &p), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn duplicate_point_names_rejected() {
        assert!(Point::new([("x", 1.0), ("x", 2.0)]).is_err());
    }

    #[test]
    fn tape_merges_common_subexpressions() {
        let vars = vec!["x".to_string()];
        let a = parse_expr("sin(x)*sin(x) + sin(x)", &["x"]).unwrap();
        let t = Tape::compile(&[a], &vars).unwrap();
        // x, sin(x), product, sum
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn fractional_power_of_negative_base() {
        let e = parse_expr("x^0.5", &["x"]).unwrap();
        let p = Point::new([("x", -1.0)]).unwrap();
        assert!(matches!(
            evaluate(&e, &p),
            Err(Error::Domain { kind: DomainKind::NegativeBaseFractionalPower, .. })
        ));
        let e = parse_expr("x^3", &["x"]).unwrap();
        assert_eq!(evaluate(&e, &p).unwrap(), -1.0);
    }
}
