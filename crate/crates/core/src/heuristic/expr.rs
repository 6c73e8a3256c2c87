//! Arithmetic expressions over named parameters.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative
//! atom   := number | name | func '(' expr ')' | '(' expr ')'
//! func   := exp | log
//! ```
//!
//! `−`, `×` and `÷` are accepted as synonyms for `-`, `*` and `/`.
//! Numbers may use exponents (`1.5e-3`). `-p^2` parses as `-(p^2)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Log(Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

/// A compiled expression; variables are bound to parameter positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' | '*' | '/' | '^' | '-' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '\u{2212}' => {
                out.push(Tok::Op('-'));
                i += 1;
            }
            '\u{00d7}' => {
                out.push(Tok::Op('*'));
                i += 1;
            }
            '\u{00f7}' => {
                out.push(Tok::Op('/'));
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("expression: bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::invalid(format!("expression: unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_rparen(&mut self) -> Result<()> {
        match self.bump() {
            Some(Tok::RParen) => Ok(()),
            _ => Err(Error::invalid("expression: missing `)`")),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { Op::Add } else { Op::Sub };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { Op::Mul } else { Op::Div };
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) && (name == "exp" || name == "log") {
                    self.pos += 1;
                    let arg = Box::new(self.expr()?);
                    self.expect_rparen()?;
                    return Ok(if name == "exp" { Node::Exp(arg) } else { Node::Log(arg) });
                }
                match self.names.iter().position(|n| *n == name) {
                    Some(i) => Ok(Node::Var(i)),
                    None => Err(Error::invalid(format!("expression: unknown name `{name}`"))),
                }
            }
            Some(t) => Err(Error::invalid(format!("expression: unexpected token {t:?}"))),
            None => Err(Error::invalid("expression: unexpected end of input")),
        }
    }
}

impl Expression {
    /// Parse `source`, binding identifiers to positions in `names`.
    pub fn parse(source: &str, names: &[String]) -> Result<Self> {
        let mut p = Parser { toks: lex(source)?, pos: 0, names };
        let root = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(Error::invalid(format!("expression: trailing input in `{source}`")));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate with `values[i]` bound to the i-th name; non-finite results
    /// are evaluation failures.
    pub fn eval(&self, values: &[f64]) -> Result<f64> {
        let v = eval(&self.root, values);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationFailure(format!("`{}` is not finite at {values:?}", self.source)))
        }
    }
}

fn eval(n: &Node, vals: &[f64]) -> f64 {
    match n {
        Node::Const(c) => *c,
        Node::Var(i) => vals[*i],
        Node::Neg(a) => -eval(a, vals),
        Node::Exp(a) => eval(a, vals).exp(),
        Node::Log(a) => eval(a, vals).ln(),
        Node::Bin(op, a, b) => {
            let (x, y) = (eval(a, vals), eval(b, vals));
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => {
                    // integral exponents stay exact for negative bases
                    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
                        x.powi(y as i32)
                    } else {
                        x.powf(y)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ev(src: &str, vals: &[f64]) -> f64 {
        Expression::parse(src, &names(&["p", "q"])).unwrap().eval(vals).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[0.0, 0.0]), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[0.0, 0.0]), 512.0);
        assert_eq!(ev("-p^2", &[3.0, 0.0]), -9.0);
        assert_eq!(ev("(1 + 2) * 3", &[0.0, 0.0]), 9.0);
        assert_eq!(ev("8 / 4 / 2", &[0.0, 0.0]), 1.0);
        assert_eq!(ev("10 - 3 - 2", &[0.0, 0.0]), 5.0);
        assert_eq!(ev("2^-1", &[0.0, 0.0]), 0.5);
        assert_eq!(ev("p * q", &[3.0, 4.0]), 12.0);
    }

    #[test]
    fn unicode_operators_and_functions() {
        assert_eq!(ev("6 \u{00f7} 2 \u{00d7} 3 \u{2212} 1", &[0.0, 0.0]), 8.0);
        assert!((ev("exp(log(p))", &[2.5, 0.0]) - 2.5).abs() < 1e-15);
        assert_eq!(ev("1.5e2 + 2E-1", &[0.0, 0.0]), 150.2);
        assert_eq!(ev("(-2)^3", &[0.0, 0.0]), -8.0);
    }

    #[test]
    fn errors() {
        let n = names(&["p"]);
        for bad in ["", "1 +", "(1", "1)", "x", "p $ 2", "exp 2", "1 2"] {
            assert!(Expression::parse(bad, &n).is_err(), "{bad}");
        }
        let e = Expression::parse("log(p)", &n).unwrap();
        assert!(matches!(e.eval(&[-1.0]), Err(Error::EvaluationFailure(_))));
    }
}
