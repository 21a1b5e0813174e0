use super::{simplify, BinaryOp, Expr, Node, UnaryOp};
use std::collections::HashMap;

/// Exact partial derivative of `e` with respect to `var`, simplified.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    let mut memo = HashMap::new();
    simplify(&d(e, var, &mut memo))
}

fn d(e: &Expr, var: &str, memo: &mut HashMap<*const (), Expr>) -> Expr {
    if let Some(r) = memo.get(&e.ptr()) {
        return r.clone();
    }
    let r = match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Unary(op, a) => {
            let da = d(a, var, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                match op {
                    UnaryOp::Neg => -da,
                    UnaryOp::Sqrt => da / (Expr::constant(2.0) * e),
                    UnaryOp::Exp => da * e,
                    UnaryOp::Ln => da / a,
                    UnaryOp::Sin => da * a.cos(),
                    UnaryOp::Cos => -(da * a.sin()),
                    UnaryOp::Tan => da / a.cos().powf(2.0),
                    UnaryOp::Arctan => da / (Expr::one() + a.powf(2.0)),
                }
            }
        }
        Node::Binary(op, a, b) => {
            let da = d(a, var, memo);
            let db = d(b, var, memo);
            match op {
                BinaryOp::Add => da + db,
                BinaryOp::Sub => da - db,
                BinaryOp::Mul => da * b + a * db,
                BinaryOp::Div => {
                    if db.is_zero() {
                        da / b
                    } else {
                        (da * b - a * db) / b.powf(2.0)
                    }
                }
                BinaryOp::Pow => {
                    if db.is_zero() {
                        if da.is_zero() {
                            Expr::zero()
                        } else if let Some(c) = b.as_const() {
                            Expr::constant(c) * a.powf(c - 1.0) * da
                        } else {
                            b * Expr::binary(BinaryOp::Pow, a.clone(), b - 1.0) * da
                        }
                    } else if da.is_zero() {
                        e * a.ln() * db
                    } else {
                        e * (db * a.ln() + b * da / a)
                    }
                }
            }
        }
    };
    memo.insert(e.ptr(), r.clone());
    r
}
