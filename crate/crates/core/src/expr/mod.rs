//! Symbolic expressions over named real variables.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Subtrees may be
//! shared, so the structure is really a DAG; every traversal in this module
//! memoizes on node identity to stay linear in the number of distinct nodes.
//!
//! The arithmetic operators on `Expr` apply the local rewrites of
//! [`simplify`] as they build, which keeps derivative trees small.

mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

pub use diff::differentiate;
pub use eval::{evaluate, Point, Tape, TapeError};
pub use parse::{parse_expr, parse_with, SymbolTable, FUNCTIONS};
pub use simplify::simplify;

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Arctan,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sqrt" => UnaryOp::Sqrt,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "arctan" => UnaryOp::Arctan,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Unary(UnaryOp, Expr),
    Binary(BinaryOp, Expr, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    hash: u64,
}

/// Immutable symbolic expression. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash {
            return false;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Unary(o1, a), Node::Unary(o2, b)) => o1 == o2 && a == b,
            (Node::Binary(o1, a1, b1), Node::Binary(o2, a2, b2)) => {
                o1 == o2 && a1 == a2 && b1 == b2
            }
            _ => false,
        }
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

fn node_hash(node: &Node) -> u64 {
    let mut h = DefaultHasher::new();
    match node {
        Node::Const(c) => {
            0u8.hash(&mut h);
            c.to_bits().hash(&mut h);
        }
        Node::Var(v) => {
            1u8.hash(&mut h);
            v.hash(&mut h);
        }
        Node::Unary(op, a) => {
            2u8.hash(&mut h);
            op.hash(&mut h);
            a.0.hash.hash(&mut h);
        }
        Node::Binary(op, a, b) => {
            3u8.hash(&mut h);
            op.hash(&mut h);
            a.0.hash.hash(&mut h);
            b.0.hash.hash(&mut h);
        }
    }
    h.finish()
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        let hash = node_hash(&node);
        Expr(Arc::new(Inner { node, hash }))
    }

    /// A constant. Non-finite values are rejected since the tree must only
    /// ever hold finite reals.
    pub fn constant(c: f64) -> Expr {
        assert!(c.is_finite(), "non-finite constant {c}");
        // normalize -0.0 so structural equality matches numeric equality
        Expr::from_node(Node::Const(if c == 0.0 { 0.0 } else { c }))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    /// Builds a unary node without any rewriting.
    pub fn raw_unary(op: UnaryOp, a: Expr) -> Expr {
        Expr::from_node(Node::Unary(op, a))
    }

    /// Builds a binary node without any rewriting.
    pub fn raw_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        Expr::from_node(Node::Binary(op, a, b))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, v: f64) -> bool {
        self.as_const() == Some(v)
    }

    pub fn is_zero(&self) -> bool {
        self.is_const(0.0)
    }

    pub(crate) fn ptr(&self) -> *const () {
        Arc::as_ptr(&self.0) as *const ()
    }

    /// Unary application with local rewriting.
    pub fn unary(op: UnaryOp, a: Expr) -> Expr {
        simplify::rewrite_unary(op, a)
    }

    /// Binary application with local rewriting.
    pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
        simplify::rewrite_binary(op, a, b)
    }

    pub fn sqrt(&self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self.clone())
    }
    pub fn exp(&self) -> Expr {
        Expr::unary(UnaryOp::Exp, self.clone())
    }
    pub fn ln(&self) -> Expr {
        Expr::unary(UnaryOp::Ln, self.clone())
    }
    pub fn sin(&self) -> Expr {
        Expr::unary(UnaryOp::Sin, self.clone())
    }
    pub fn cos(&self) -> Expr {
        Expr::unary(UnaryOp::Cos, self.clone())
    }
    pub fn tan(&self) -> Expr {
        Expr::unary(UnaryOp::Tan, self.clone())
    }
    pub fn arctan(&self) -> Expr {
        Expr::unary(UnaryOp::Arctan, self.clone())
    }
    pub fn pow(&self, e: impl Into<Expr>) -> Expr {
        Expr::binary(BinaryOp::Pow, self.clone(), e.into())
    }
    pub fn powf(&self, e: f64) -> Expr {
        self.pow(Expr::constant(e))
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.node() {
                Node::Unary(_, a) => stack.push(a.clone()),
                Node::Binary(_, a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                _ => {}
            }
        }
        seen.len()
    }

    /// Sorted list of free variable names.
    pub fn free_vars(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut names = std::collections::BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr()) {
                continue;
            }
            match e.node() {
                Node::Var(v) => {
                    names.insert(v.to_string());
                }
                Node::Unary(_, a) => stack.push(a.clone()),
                Node::Binary(_, a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
                Node::Const(_) => {}
            }
        }
        names.into_iter().collect()
    }

    /// Replaces variables by expressions. Variables missing from `map` are
    /// left untouched.
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        fn go(e: &Expr, map: &HashMap<String, Expr>, memo: &mut HashMap<*const (), Expr>) -> Expr {
            if let Some(r) = memo.get(&e.ptr()) {
                return r.clone();
            }
            let r = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(v) => map.get(&**v).cloned().unwrap_or_else(|| e.clone()),
                Node::Unary(op, a) => Expr::unary(*op, go(a, map, memo)),
                Node::Binary(op, a, b) => Expr::binary(*op, go(a, map, memo), go(b, map, memo)),
            };
            memo.insert(e.ptr(), r.clone());
            r
        }
        go(self, map, &mut HashMap::new())
    }

    /// Directional derivative Σ_m v^m ∂e/∂x^m.
    pub fn directional(&self, vars: &[String], v: &[Expr]) -> Expr {
        let mut acc = Expr::zero();
        for (name, comp) in vars.iter().zip(v) {
            if comp.is_zero() {
                continue;
            }
            acc = acc + comp.clone() * differentiate(self, name);
        }
        acc
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

impl From<&Expr> for Expr {
    fn from(e: &Expr) -> Expr {
        e.clone()
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self.clone(), Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::binary($op, Expr::constant(self), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_equality_ignores_sharing() {
        let a = Expr::var("x") * Expr::var("y");
        let b = Expr::var("x") * Expr::var("y");
        assert_eq!(a, b);
        assert_ne!(a, Expr::var("y") * Expr::var("x"));
    }

    #[test]
    fn substitute_replaces_only_named() {
        let e = Expr::var("x") + Expr::var("y");
        let mut m = HashMap::new();
        m.insert("x".to_string(), Expr::constant(2.0));
        let r = e.substitute(&m);
        assert_eq!(r, Expr::constant(2.0) + Expr::var("y"));
    }

    #[test]
    fn free_vars_sorted() {
        let e = parse_expr("b*sin(a) + c", &["a", "b", "c"]).unwrap();
        assert_eq!(e.free_vars(), vec!["a", "b", "c"]);
    }
}
