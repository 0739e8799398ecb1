//! Tiny expression language for branch formulas, weights and test functions.
//!
//! Grammar: `+ - * / % ^` with usual precedence (`^` right-associative),
//! parentheses, unary minus, variables `x`, `y`, `z` (by dimension),
//! constants `pi` and `e`, and the functions
//! `sin cos tan exp log sqrt abs floor mod min max`.
//! `mod(a, b)` and `a % b` are the mathematical modulus `a - b*floor(a/b)`.
//!
//! Keeping map configs in strings (rather than closures) keeps them
//! serializable, which the CLI config format relies on.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Floor,
    Mod,
    Min,
    Max,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Mod | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "floor" => Func::Floor,
            "mod" => Func::Mod,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Rem(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression over variables `x`, `y`, `z`.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    source: String,
    max_var: usize,
}

fn math_mod(a: f64, b: f64) -> f64 {
    a - b * (a / b).floor()
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens, pos: 0, source };
        let root = p.parse_expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input at token {} in '{source}'",
                p.pos
            )));
        }
        let mut max_var = 0;
        max_var_of(&root, &mut max_var);
        Ok(Expr {
            root,
            source: source.to_string(),
            max_var,
        })
    }

    /// Highest variable index used plus one (0 for constant expressions).
    pub fn num_vars(&self) -> usize {
        self.max_var
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate at a point; `vars` must contain at least `num_vars` entries.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        eval_node(&self.root, vars)
    }

    /// Convenience for one-dimensional use.
    pub fn eval1(&self, x: f64) -> f64 {
        self.eval(&[x])
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)
    }
}

fn max_var_of(node: &Node, max: &mut usize) {
    match node {
        Node::Var(i) => *max = (*max).max(i + 1),
        Node::Const(_) => {}
        Node::Neg(a) => max_var_of(a, max),
        Node::Add(a, b)
        | Node::Sub(a, b)
        | Node::Mul(a, b)
        | Node::Div(a, b)
        | Node::Rem(a, b)
        | Node::Pow(a, b) => {
            max_var_of(a, max);
            max_var_of(b, max);
        }
        Node::Call(_, args) => args.iter().for_each(|a| max_var_of(a, max)),
    }
}

fn eval_node(node: &Node, vars: &[f64]) -> f64 {
    match node {
        Node::Const(c) => *c,
        Node::Var(i) => vars.get(*i).copied().unwrap_or(f64::NAN),
        Node::Neg(a) => -eval_node(a, vars),
        Node::Add(a, b) => eval_node(a, vars) + eval_node(b, vars),
        Node::Sub(a, b) => eval_node(a, vars) - eval_node(b, vars),
        Node::Mul(a, b) => eval_node(a, vars) * eval_node(b, vars),
        Node::Div(a, b) => eval_node(a, vars) / eval_node(b, vars),
        Node::Rem(a, b) => math_mod(eval_node(a, vars), eval_node(b, vars)),
        Node::Pow(a, b) => eval_node(a, vars).powf(eval_node(b, vars)),
        Node::Call(f, args) => {
            let a = eval_node(&args[0], vars);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Floor => a.floor(),
                Func::Mod => math_mod(a, eval_node(&args[1], vars)),
                Func::Min => a.min(eval_node(&args[1], vars)),
                Func::Max => a.max(eval_node(&args[1], vars)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '%' => {
                out.push(Token::Percent);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::Expr(format!("bad number '{text}' in '{src}'")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Expr(format!("unexpected character '{other}' in '{src}'")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    source: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!(
                "expected {t:?}, got {got:?} in '{}'",
                self.source
            ))),
        }
    }

    fn parse_expr(&mut self) -> Result<Node> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.parse_term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.parse_term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Node> {
        let mut lhs = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.parse_factor()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.parse_factor()?));
                }
                Some(Token::Percent) => {
                    self.bump();
                    lhs = Node::Rem(Box::new(lhs), Box::new(self.parse_factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // right-associative power binds tighter than unary minus on the left,
    // i.e. -x^2 parses as -(x^2)
    fn parse_factor(&mut self) -> Result<Node> {
        if let Some(Token::Minus) = self.peek() {
            self.bump();
            return Ok(Node::Neg(Box::new(self.parse_factor()?)));
        }
        let base = self.parse_primary()?;
        if let Some(Token::Caret) = self.peek() {
            self.bump();
            let exp = self.parse_factor()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_primary(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Node::Const(v)),
            Some(Token::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                if let Some(Token::LParen) = self.peek() {
                    let f = Func::from_name(&name).ok_or_else(|| {
                        Error::Expr(format!("unknown function '{name}' in '{}'", self.source))
                    })?;
                    self.bump();
                    let mut args = vec![self.parse_expr()?];
                    while let Some(Token::Comma) = self.peek() {
                        self.bump();
                        args.push(self.parse_expr()?);
                    }
                    self.expect(Token::RParen)?;
                    if args.len() != f.arity() {
                        return Err(Error::Expr(format!(
                            "function '{name}' takes {} argument(s), got {}",
                            f.arity(),
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(f, args));
                }
                match name.as_str() {
                    "x" => Ok(Node::Var(0)),
                    "y" => Ok(Node::Var(1)),
                    "z" => Ok(Node::Var(2)),
                    "pi" => Ok(Node::Const(std::f64::consts::PI)),
                    "e" => Ok(Node::Const(std::f64::consts::E)),
                    _ => Err(Error::Expr(format!(
                        "unknown identifier '{name}' in '{}'",
                        self.source
                    ))),
                }
            }
            got => Err(Error::Expr(format!(
                "unexpected token {got:?} in '{}'",
                self.source
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("2*x - 1").unwrap();
        assert_relative_eq!(e.eval1(0.75), 0.5);
        let e = Expr::parse("1 + 2 * 3 ^ 2").unwrap();
        assert_relative_eq!(e.eval1(0.0), 19.0);
        let e = Expr::parse("2 ^ 3 ^ 2").unwrap(); // right assoc
        assert_relative_eq!(e.eval1(0.0), 512.0);
        let e = Expr::parse("-x^2").unwrap();
        assert_relative_eq!(e.eval1(3.0), -9.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = Expr::parse("cos(2*pi*x)").unwrap();
        assert_relative_eq!(e.eval1(0.5), -1.0, epsilon = 1e-15);
        let e = Expr::parse("mod(2*x, 1)").unwrap();
        assert_relative_eq!(e.eval1(0.7), 0.4, epsilon = 1e-15);
        let e = Expr::parse("3*x % 1").unwrap();
        assert_relative_eq!(e.eval1(0.5), 0.5, epsilon = 1e-15);
        let e = Expr::parse("mod(-0.3, 1)").unwrap();
        assert_relative_eq!(e.eval1(0.0), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn variables_by_dimension() {
        let e = Expr::parse("x + 2*y").unwrap();
        assert_eq!(e.num_vars(), 2);
        assert_relative_eq!(e.eval(&[1.0, 2.0]), 5.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("x $ 2").is_err());
        assert!(Expr::parse("w + 1").is_err());
        assert!(Expr::parse("min(x)").is_err());
    }
}
