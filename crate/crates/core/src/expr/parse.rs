//! Recursive-descent parser.
//!
//! ```text
//! expr     := term (('+'|'-') term)*
//! term     := factor (('*'|'/') factor)*
//! factor   := base ('^' exponent)?
//! exponent := factor
//! base     := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' base
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` reads as `(-x)^2`.

use super::{BinaryOp, Expr, UnaryOp};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Names usable as functions, each of arity one.
pub const FUNCTIONS: [&str; 7] = ["sqrt", "exp", "ln", "sin", "cos", "tan", "arctan"];

/// Identifiers the parser accepts: plain variables plus named aliases that
/// are spliced in as whole subtrees.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    vars: Vec<String>,
    aliases: HashMap<String, Expr>,
}

impl SymbolTable {
    pub fn new<S: AsRef<str>>(vars: &[S]) -> SymbolTable {
        SymbolTable {
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            aliases: HashMap::new(),
        }
    }

    pub fn add_alias(&mut self, name: &str, e: Expr) {
        self.aliases.insert(name.to_string(), e);
    }

    pub fn alias(&self, name: &str) -> Option<&Expr> {
        self.aliases.get(name)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    fn resolve(&self, name: &str) -> Option<Expr> {
        if let Some(e) = self.aliases.get(name) {
            return Some(e.clone());
        }
        if self.vars.iter().any(|v| v == name) {
            return Some(Expr::var(name));
        }
        None
    }
}

/// Parses `text` with `vars` as the only admissible variable names.
pub fn parse_expr<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr> {
    parse_with(text, &SymbolTable::new(vars))
}

/// Parses `text` resolving identifiers through `symbols`.
pub fn parse_with(text: &str, symbols: &SymbolTable) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        symbols,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    symbols: &'a SymbolTable,
}

impl Parser<'_> {
    fn err(&self, message: String) -> Error {
        Error::Syntax {
            offset: self.pos,
            message,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            let found = match self.src.get(self.pos) {
                Some(b) => format!("`{}`", *b as char),
                None => "end of input".to_string(),
            };
            Err(self.err(format!("expected `{}`, found {found}", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinaryOp::Add,
                Some(b'-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::raw_binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinaryOp::Mul,
                Some(b'/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::raw_binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::raw_binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input".into())),
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::raw_unary(UnaryOp::Neg, self.base()?))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii slice");
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(format!("malformed number `{text}`")))?;
        if !v.is_finite() {
            return Err(self.err(format!("number `{text}` out of range")));
        }
        self.pos = i;
        Ok(Expr::constant(v))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_alphanumeric() || s[i] == b'_') {
            i += 1;
        }
        let name = std::str::from_utf8(&s[start..i]).expect("ascii slice").to_string();
        self.pos = i;
        if self.peek() == Some(b'(') {
            let op = UnaryOp::from_name(&name).ok_or(Error::UnknownIdentifier {
                name: name.clone(),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            if args.len() != 1 {
                return Err(Error::Arity {
                    name,
                    expected: 1,
                    found: args.len(),
                    offset: start,
                });
            }
            return Ok(Expr::raw_unary(op, args.pop().unwrap()));
        }
        self.symbols
            .resolve(&name)
            .ok_or(Error::UnknownIdentifier { name, offset: start })
    }
}
