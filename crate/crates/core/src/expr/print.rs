//! Infix printing in the parser's own grammar.

use super::{BinaryOp, Expr, Node, UnaryOp};
use std::fmt::{self, Write};

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
        Node::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
        Node::Binary(BinaryOp::Pow, ..) => 3,
        Node::Const(c) if *c < 0.0 => 0,
        Node::Unary(UnaryOp::Neg, _) => 0,
        _ => 4,
    }
}

fn op_str(op: BinaryOp) -> &'static str {
    match op {
        BinaryOp::Add => " + ",
        BinaryOp::Sub => " - ",
        BinaryOp::Mul => " * ",
        BinaryOp::Div => " / ",
        BinaryOp::Pow => "^",
    }
}

fn write_child(w: &mut dyn Write, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        w.write_char('(')?;
        write_expr(w, e)?;
        w.write_char(')')
    } else {
        write_expr(w, e)
    }
}

fn write_expr(w: &mut dyn Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(w, "{c}"),
        Node::Var(v) => w.write_str(v),
        Node::Unary(UnaryOp::Neg, a) => {
            w.write_char('-')?;
            write_child(w, a, prec(a) < 4)
        }
        Node::Unary(op, a) => {
            w.write_str(op.name())?;
            w.write_char('(')?;
            write_expr(w, a)?;
            w.write_char(')')
        }
        Node::Binary(op, a, b) => {
            let p = prec(e);
            // a leading minus is part of `base`, so it never needs parentheses on the left
            let left_paren = if *op == BinaryOp::Pow {
                prec(a) <= p
            } else {
                prec(a) != 0 && prec(a) < p
            };
            let right_paren = prec(b) <= p;
            write_child(w, a, left_paren)?;
            w.write_str(op_str(*op))?;
            write_child(w, b, right_paren)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

struct Budget {
    buf: String,
    left: usize,
}

impl Write for Budget {
    fn write_str(&mut self, s: &str) -> fmt::Result {
        if s.len() > self.left {
            let mut cut = self.left;
            while !s.is_char_boundary(cut) {
                cut -= 1;
            }
            self.buf.push_str(&s[..cut]);
            self.left = 0;
            return Err(fmt::Error);
        }
        self.buf.push_str(s);
        self.left -= s.len();
        Ok(())
    }
}

impl Expr {
    /// Printed form cut to roughly `max` bytes; used in diagnostics where
    /// the full tree may be enormous.
    pub fn to_string_truncated(&self, max: usize) -> String {
        let mut b = Budget {
            buf: String::new(),
            left: max,
        };
        if write_expr(&mut b, self).is_err() {
            b.buf.push_str("...");
        }
        b.buf
    }
}
