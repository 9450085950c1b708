//! A small arithmetic expression language for user-supplied Hamiltonians.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | '+' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-p^2`
//! is `-(p^2)`. Functions: `abs`, `min`, `max` (two or more arguments),
//! `exp`, `sin`, `cos`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Exp,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn check_arity(self, name: &str, got: usize) -> Result<()> {
        let ok = match self {
            Func::Min | Func::Max => got >= 2,
            _ => got == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Arity {
                name: name.to_string(),
                expected: if matches!(self, Func::Min | Func::Max) { 2 } else { 1 },
                got,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl Node {
    fn uses(&self, var: usize) -> bool {
        match self {
            Node::Num(_) => false,
            Node::Var(i) => *i == var,
            Node::Neg(a) => a.uses(var),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.uses(var) || b.uses(var)
            }
            Node::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }

    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => {
                let base = a.eval(vars);
                match **b {
                    // Integer exponents keep negative bases real.
                    Node::Num(e) if e.fract() == 0.0 && e.abs() <= 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(vars)),
                }
            }
            Node::Call(f, args) => match f {
                Func::Abs => args[0].eval(vars).abs(),
                Func::Exp => args[0].eval(vars).exp(),
                Func::Sin => args[0].eval(vars).sin(),
                Func::Cos => args[0].eval(vars).cos(),
                Func::Min => args
                    .iter()
                    .map(|a| a.eval(vars))
                    .fold(f64::INFINITY, f64::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(vars))
                    .fold(f64::NEG_INFINITY, f64::max),
            },
        }
    }
}

/// A parsed expression over a fixed, ordered set of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    variables: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parses `src`, resolving identifiers against `variables`. The variable
    /// order fixes the slot order expected by [`Expr::eval`].
    pub fn parse(src: &str, variables: &[&str]) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            variables,
            src_len: src.len(),
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", tok.kind.describe()),
            });
        }
        Ok(Expr {
            source: src.to_string(),
            variables: variables.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    /// Evaluates with `vars[i]` bound to the i-th declared variable.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        debug_assert_eq!(vars.len(), self.variables.len());
        self.root.eval(vars)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Whether the variable `name` occurs in the expression.
    pub fn uses(&self, name: &str) -> bool {
        self.variables
            .iter()
            .position(|v| v == name)
            .is_some_and(|i| self.root.uses(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '^' => TokenKind::Caret,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part: 1e-3, 2.5E+4
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value = text.parse::<f64>().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                out.push(Token {
                    kind: TokenKind::Num(value),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [&'a str],
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<()> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(()),
            Some(t) => Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            }),
            None => Err(Error::Syntax {
                pos: self.src_len,
                msg: format!("expected {}, found end of input", kind.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self.next().ok_or(Error::Syntax {
            pos: self.src_len,
            msg: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Num(v) => Ok(Node::Num(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.eat(&TokenKind::LParen) {
                    let func = Func::lookup(&name).ok_or_else(|| Error::UnknownIdentifier {
                        name: name.clone(),
                        pos: tok.pos,
                    })?;
                    let mut args = vec![self.expr()?];
                    while self.eat(&TokenKind::Comma) {
                        args.push(self.expr()?);
                    }
                    self.expect(TokenKind::RParen)?;
                    func.check_arity(&name, args.len())?;
                    Ok(Node::Call(func, args))
                } else if let Some(idx) = self.variables.iter().position(|v| *v == name) {
                    Ok(Node::Var(idx))
                } else {
                    Err(Error::UnknownIdentifier { name, pos: tok.pos })
                }
            }
            other => Err(Error::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval1(src: &str, p: f64, x: f64) -> f64 {
        Expr::parse(src, &["p", "x"]).unwrap().eval(&[p, x])
    }

    #[test]
    fn evaluates_simple_forms() {
        assert_eq!(eval1("abs(p) - 1", 1.0, 0.0), 0.0);
        assert_eq!(eval1("(p-1)^2 - 1", 1.0, 0.0), -1.0);
        assert_eq!(eval1("max(abs(p)-1, 0) + x", 2.0, 0.5), 1.5);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval1("-p^2", 3.0, 0.0), -9.0);
        assert_eq!(eval1("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(eval1("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(eval1("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(eval1("2 * p + 1", 2.0, 0.0), 5.0);
        assert_eq!(eval1("(-2)^3", 0.0, 0.0), -8.0);
        assert_eq!(eval1("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
        assert_eq!(eval1("min(p, x, -4)", 1.0, 2.0), -4.0);
    }

    #[test]
    fn transcendental_functions() {
        assert!((eval1("exp(x) + sin(p) + cos(0)", 0.0, 1.0) - (1f64.exp() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn reports_syntax_errors_with_position() {
        match Expr::parse("abs(p) + * 2", &["p", "x"]) {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expr::parse("(p + 1", &["p"]),
            Err(Error::Syntax { pos: 6, .. })
        ));
        assert!(matches!(
            Expr::parse("p $ 1", &["p"]),
            Err(Error::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            Expr::parse("p 1", &["p"]),
            Err(Error::Syntax { pos: 2, .. })
        ));
    }

    #[test]
    fn reports_unknown_identifiers_and_arity() {
        assert_eq!(
            Expr::parse("q + 1", &["p", "x"]),
            Err(Error::UnknownIdentifier {
                name: "q".into(),
                pos: 0
            })
        );
        assert!(matches!(
            Expr::parse("tan(p)", &["p"]),
            Err(Error::UnknownIdentifier { .. })
        ));
        assert_eq!(
            Expr::parse("abs(p, x)", &["p", "x"]),
            Err(Error::Arity {
                name: "abs".into(),
                expected: 1,
                got: 2
            })
        );
        assert!(matches!(
            Expr::parse("max(p)", &["p"]),
            Err(Error::Arity { .. })
        ));
    }

    #[test]
    fn two_dimensional_variables() {
        let e = Expr::parse("max(abs(p1)-1, abs(p2)-2) + x1 * x2", &["p1", "p2", "x1", "x2"]).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 2.0, 1.0]), 4.0);
        assert_eq!(e.variables().len(), 4);
    }
}
