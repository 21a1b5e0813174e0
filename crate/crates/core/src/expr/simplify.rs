//! Local rewriting and constant folding.
//!
//! Every rule either removes nodes or moves a negation outward, so repeated
//! application terminates. The smart constructors here are also what the
//! arithmetic operators use, which makes [`simplify`] idempotent: a node
//! produced by a rewrite is always rebuilt to itself.

use super::eval::{apply_binary, apply_unary};
use super::{BinaryOp, Expr, Node, UnaryOp};
use std::collections::HashMap;

/// Returns a semantically equal expression in canonical form.
pub fn simplify(e: &Expr) -> Expr {
    fn go(e: &Expr, memo: &mut HashMap<*const (), Expr>) -> Expr {
        if let Some(r) = memo.get(&e.ptr()) {
            return r.clone();
        }
        let r = match e.node() {
            Node::Const(_) | Node::Var(_) => e.clone(),
            Node::Unary(op, a) => rewrite_unary(*op, go(a, memo)),
            Node::Binary(op, a, b) => {
                let a = go(a, memo);
                let b = go(b, memo);
                rewrite_binary(*op, a, b)
            }
        };
        memo.insert(e.ptr(), r.clone());
        r
    }
    go(e, &mut HashMap::new())
}

fn fold(v: Result<f64, crate::error::DomainKind>) -> Option<Expr> {
    match v {
        Ok(x) if x.is_finite() => Some(Expr::constant(x)),
        _ => None,
    }
}

pub(crate) fn rewrite_unary(op: UnaryOp, a: Expr) -> Expr {
    if let Some(c) = a.as_const() {
        if let Some(r) = fold(apply_unary(op, c)) {
            return r;
        }
    }
    if op == UnaryOp::Neg {
        match a.node() {
            Node::Unary(UnaryOp::Neg, x) => return x.clone(),
            Node::Binary(BinaryOp::Sub, x, y) => {
                return rewrite_binary(BinaryOp::Sub, y.clone(), x.clone())
            }
            Node::Binary(BinaryOp::Mul, c, y) if c.as_const().is_some() => {
                let c = c.as_const().unwrap();
                return rewrite_binary(BinaryOp::Mul, Expr::constant(-c), y.clone());
            }
            _ => {}
        }
    }
    Expr::raw_unary(op, a)
}

fn neg_inner(e: &Expr) -> Option<&Expr> {
    match e.node() {
        Node::Unary(UnaryOp::Neg, x) => Some(x),
        _ => None,
    }
}

pub(crate) fn rewrite_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    let ca = a.as_const();
    let cb = b.as_const();
    if let (Some(x), Some(y)) = (ca, cb) {
        if let Some(r) = fold(apply_binary(op, x, y)) {
            return r;
        }
    }
    match op {
        BinaryOp::Add => {
            if ca == Some(0.0) {
                return b;
            }
            if cb == Some(0.0) {
                return a;
            }
            if let Some(x) = neg_inner(&b) {
                return rewrite_binary(BinaryOp::Sub, a, x.clone());
            }
            if let Some(x) = neg_inner(&a) {
                return rewrite_binary(BinaryOp::Sub, b, x.clone());
            }
            if let Some(c) = cb {
                if c < 0.0 {
                    return rewrite_binary(BinaryOp::Sub, a, Expr::constant(-c));
                }
            }
        }
        BinaryOp::Sub => {
            if cb == Some(0.0) {
                return a;
            }
            if ca == Some(0.0) {
                return rewrite_unary(UnaryOp::Neg, b);
            }
            if a == b {
                return Expr::zero();
            }
            if let Some(x) = neg_inner(&b) {
                return rewrite_binary(BinaryOp::Add, a, x.clone());
            }
            if let Some(c) = cb {
                if c < 0.0 {
                    return rewrite_binary(BinaryOp::Add, a, Expr::constant(-c));
                }
            }
        }
        BinaryOp::Mul => {
            if ca == Some(0.0) || cb == Some(0.0) {
                return Expr::zero();
            }
            if ca == Some(1.0) {
                return b;
            }
            if cb == Some(1.0) {
                return a;
            }
            if ca == Some(-1.0) {
                return rewrite_unary(UnaryOp::Neg, b);
            }
            if cb == Some(-1.0) {
                return rewrite_unary(UnaryOp::Neg, a);
            }
            if cb.is_some() && ca.is_none() {
                return rewrite_binary(BinaryOp::Mul, b, a);
            }
            if let (Some(x), Some(y)) = (neg_inner(&a), neg_inner(&b)) {
                return rewrite_binary(BinaryOp::Mul, x.clone(), y.clone());
            }
            if let Some(x) = neg_inner(&a) {
                let m = rewrite_binary(BinaryOp::Mul, x.clone(), b);
                return rewrite_unary(UnaryOp::Neg, m);
            }
            if let Some(y) = neg_inner(&b) {
                let m = rewrite_binary(BinaryOp::Mul, a, y.clone());
                return rewrite_unary(UnaryOp::Neg, m);
            }
            if let (Some(c1), Node::Binary(BinaryOp::Mul, l, r)) = (ca, b.node()) {
                if let Some(c2) = l.as_const() {
                    let c = c1 * c2;
                    if c.is_finite() {
                        return rewrite_binary(BinaryOp::Mul, Expr::constant(c), r.clone());
                    }
                }
            }
        }
        BinaryOp::Div => {
            if ca == Some(0.0) {
                return Expr::zero();
            }
            if cb == Some(1.0) {
                return a;
            }
            if cb == Some(-1.0) {
                return rewrite_unary(UnaryOp::Neg, a);
            }
            if let Some(x) = neg_inner(&a) {
                let d = rewrite_binary(BinaryOp::Div, x.clone(), b);
                return rewrite_unary(UnaryOp::Neg, d);
            }
            if let Some(y) = neg_inner(&b) {
                let d = rewrite_binary(BinaryOp::Div, a, y.clone());
                return rewrite_unary(UnaryOp::Neg, d);
            }
        }
        BinaryOp::Pow => {
            if cb == Some(1.0) {
                return a;
            }
            if cb == Some(0.0) || ca == Some(1.0) {
                return Expr::one();
            }
        }
    }
    Expr::raw_binary(op, a, b)
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;
    use super::*;

    fn s(text: &str, vars: &[&str]) -> Expr {
        simplify(&parse_expr(text, vars).unwrap())
    }

    #[test]
    fn drops_neutral_elements() {
        assert_eq!(s("0*u1 + u2", &["u1", "u2"]), Expr::var("u2"));
        assert_eq!(s("u1^1 * 1", &["u1"]), Expr::var("u1"));
        assert_eq!(s("u1 - 0", &["u1"]), Expr::var("u1"));
    }

    #[test]
    fn cancels_identical_difference() {
        assert!(s("u1*u2 - u1*u2", &["u1", "u2"]).is_zero());
    }

    #[test]
    fn folds_constants() {
        assert_eq!(s("2*3 + sqrt(16)", &[]), Expr::constant(10.0));
        assert_eq!(s("-(-(x))", &["x"]), Expr::var("x"));
    }

    #[test]
    fn keeps_invalid_constant_subtrees() {
        let e = s("sqrt(-1)", &[]);
        assert!(e.as_const().is_none());
    }

    #[test]
    fn negation_moves_outward() {
        let e = s("(-x)*y", &["x", "y"]);
        assert_eq!(e, -(Expr::var("x") * Expr::var("y")));
        let e = s("2*(-x)", &["x"]);
        assert_eq!(e, Expr::constant(-2.0) * Expr::var("x"));
    }
}
