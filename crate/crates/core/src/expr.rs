//! Parser for scalar tokens ("sqrt(2)", "1/2+sqrt(5)/3", "0.25-1.5i") and
//! polynomial expressions in named variables.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{ExactComplex, Quad};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A numeric literal; `decimal` marks a point or exponent in the source.
    Num { value: BigRational, decimal: bool },
    Var(String),
    I,
    Sqrt(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational, bool),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let ch = chars[k];
        if ch.is_whitespace() {
            k += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                k += 1;
            }
            // Exponent only when followed by a digit or sign+digit.
            if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                let mut j = k + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    k = j;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let text: String = chars[start..k].iter().collect();
            let (v, dec) = parse_decimal(&text)?;
            out.push(Tok::Num(v, dec));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            out.push(Tok::Ident(chars[start..k].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Tok::Op(ch));
            k += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character '{ch}' in \"{s}\"")));
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Result<(BigRational, bool)> {
    let bad = || Error::Parse(format!("malformed number \"{text}\""));
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let decimal = mant.contains('.') || text.contains(['e', 'E']);
    let (ip, fp) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if ip.is_empty() && fp.is_empty() || fp.contains('.') {
        return Err(bad());
    }
    let digits = format!("{ip}{fp}");
    let n: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let v = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    Ok((v, decimal))
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    src: String,
}

impl Parser {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} in \"{}\"", self.src))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(self.peek(), Some(Tok::Num(..) | Tok::Ident(_) | Tok::Op('('))) {
                // Juxtaposition, as in "2i" or "3w1".
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat_op('^') {
            let neg = self.eat_op('-');
            let e = match self.toks.get(self.pos) {
                Some(Tok::Num(v, false)) if v.is_integer() => v.to_integer().to_i64(),
                _ => None,
            }
            .ok_or_else(|| self.err("exponent must be an integer literal"))?;
            self.pos += 1;
            return Ok(Expr::Pow(Box::new(base), if neg { -e } else { e }));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(v, d)) => {
                self.pos += 1;
                Ok(Expr::Num { value: v, decimal: d })
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "sqrt" {
                    if !self.eat_op('(') {
                        return Err(self.err("sqrt needs parentheses"));
                    }
                    let arg = self.expr()?;
                    if !self.eat_op(')') {
                        return Err(self.err("missing ')'"));
                    }
                    return Ok(Expr::Sqrt(Box::new(arg)));
                }
                if name == "i" || name == "I" {
                    return Ok(Expr::I);
                }
                Ok(Expr::Var(name))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_op(')') {
                    return Err(self.err("missing ')'"));
                }
                Ok(e)
            }
            _ => Err(self.err("expected a number, variable or '('")),
        }
    }
}

pub fn parse(s: &str) -> Result<Expr> {
    let toks = tokenize(s)?;
    let mut p = Parser {
        toks,
        pos: 0,
        src: s.to_string(),
    };
    if p.toks.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Why an expression has no exact value.
#[derive(Debug, Clone, PartialEq)]
pub enum NotExact {
    /// Contains a decimal literal: evaluate as a float instead.
    Decimal,
    Other(Error),
}

fn other(msg: String) -> NotExact {
    NotExact::Other(Error::Parse(msg))
}

pub fn eval_exact(e: &Expr) -> std::result::Result<ExactComplex, NotExact> {
    Ok(match e {
        Expr::Num { decimal: true, .. } => return Err(NotExact::Decimal),
        Expr::Num { value, .. } => ExactComplex::real(Quad::rational(value.clone())),
        Expr::Var(v) => return Err(other(format!("variable '{v}' in a scalar token"))),
        Expr::I => ExactComplex::i(),
        Expr::Sqrt(a) => {
            let x = eval_exact(a)?;
            if !x.is_real() || !x.re.is_rational() {
                return Err(other("sqrt of a non-rational argument".into()));
            }
            let r = x.re.rat.clone();
            if r.is_negative() {
                let s = Quad::sqrt_rational(&-r).map_err(NotExact::Other)?;
                ExactComplex::new(Quad::zero(), s)
            } else {
                ExactComplex::real(Quad::sqrt_rational(&r).map_err(NotExact::Other)?)
            }
        }
        Expr::Neg(a) => -eval_exact(a)?,
        Expr::Add(a, b) => checked(eval_exact(a)?, eval_exact(b)?, |x, y| x + y)?,
        Expr::Sub(a, b) => checked(eval_exact(a)?, eval_exact(b)?, |x, y| x - y)?,
        Expr::Mul(a, b) => checked(eval_exact(a)?, eval_exact(b)?, |x, y| x * y)?,
        Expr::Div(a, b) => {
            let y = eval_exact(b)?;
            if y.is_zero() {
                return Err(other("division by zero".into()));
            }
            checked(eval_exact(a)?, y, |x, y| x / y)?
        }
        Expr::Pow(a, k) => {
            let x = eval_exact(a)?;
            let base = if *k < 0 {
                x.recip().ok_or_else(|| other("zero to a negative power".into()))?
            } else {
                x
            };
            let mut acc = ExactComplex::one();
            for _ in 0..k.unsigned_abs() {
                acc = &acc * &base;
            }
            acc
        }
    })
}

fn checked(
    x: ExactComplex,
    y: ExactComplex,
    f: impl Fn(ExactComplex, ExactComplex) -> ExactComplex,
) -> std::result::Result<ExactComplex, NotExact> {
    crate::scalar::common_disc([&x.re, &x.im, &y.re, &y.im]).map_err(NotExact::Other)?;
    Ok(f(x, y))
}

pub fn eval_complex(e: &Expr) -> Result<Complex64> {
    let p = eval_poly(e, 0, &|_| None)?;
    Ok(p.as_constant().expect("no variables"))
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Evaluate as a polynomial; `var` maps a variable name to its index.
pub fn eval_poly(e: &Expr, nvars: usize, var: &dyn Fn(&str) -> Option<usize>) -> Result<Poly> {
    let c = |z: Complex64| Poly::constant(nvars, z);
    Ok(match e {
        Expr::Num { value, .. } => c(Complex64::new(rat_to_f64(value), 0.0)),
        Expr::Var(v) => {
            let k = var(v).ok_or_else(|| Error::Parse(format!("unknown variable '{v}'")))?;
            Poly::var(nvars, k)
        }
        Expr::I => c(Complex64::new(0.0, 1.0)),
        Expr::Sqrt(a) => {
            let x = eval_poly(a, nvars, var)?
                .as_constant()
                .ok_or_else(|| Error::Parse("sqrt of a non-constant".into()))?;
            c(x.sqrt())
        }
        Expr::Neg(a) => eval_poly(a, nvars, var)?.scale(Complex64::new(-1.0, 0.0)),
        Expr::Add(a, b) => eval_poly(a, nvars, var)?.add(&eval_poly(b, nvars, var)?),
        Expr::Sub(a, b) => eval_poly(a, nvars, var)?.sub(&eval_poly(b, nvars, var)?),
        Expr::Mul(a, b) => eval_poly(a, nvars, var)?.mul(&eval_poly(b, nvars, var)?),
        Expr::Div(a, b) => {
            let d = eval_poly(b, nvars, var)?
                .as_constant()
                .ok_or_else(|| Error::Parse("division by a non-constant".into()))?;
            if d == Complex64::new(0.0, 0.0) {
                return Err(Error::Parse("division by zero".into()));
            }
            eval_poly(a, nvars, var)?.scale(d.inv())
        }
        Expr::Pow(a, k) => {
            let base = eval_poly(a, nvars, var)?;
            if *k < 0 {
                let x = base
                    .as_constant()
                    .ok_or_else(|| Error::Parse("negative power of a non-constant".into()))?;
                c(x.powi(*k as i32))
            } else {
                base.pow(*k as u32)
            }
        }
    })
}

/// A parsed scalar token: exact when possible, float otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(ExactComplex),
    Float(Complex64),
}

impl Scalar {
    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(x) => x.to_c64(),
            Scalar::Float(z) => *z,
        }
    }

    pub fn exact(&self) -> Option<&ExactComplex> {
        match self {
            Scalar::Exact(x) => Some(x),
            Scalar::Float(_) => None,
        }
    }
}

pub fn parse_scalar(s: &str) -> Result<Scalar> {
    let e = parse(s)?;
    match eval_exact(&e) {
        Ok(x) => Ok(Scalar::Exact(x)),
        Err(NotExact::Decimal) => Ok(Scalar::Float(eval_complex(&e)?)),
        Err(NotExact::Other(Error::MixedDiscriminant(..))) => Ok(Scalar::Float(eval_complex(&e)?)),
        Err(NotExact::Other(err)) => Err(err),
    }
}

/// Real exact scalar, or an error naming the token.
pub fn parse_real_quad(s: &str) -> Result<Option<Quad>> {
    match parse_scalar(s)? {
        Scalar::Exact(x) if x.is_real() => Ok(Some(x.re)),
        Scalar::Exact(_) => Err(Error::Parse(format!("\"{s}\" is not real"))),
        Scalar::Float(z) if z.im == 0.0 => Ok(None),
        Scalar::Float(_) => Err(Error::Parse(format!("\"{s}\" is not real"))),
    }
}

/// Parse a polynomial in variables named by `var`.
pub fn parse_poly(s: &str, nvars: usize, var: &dyn Fn(&str) -> Option<usize>) -> Result<Poly> {
    eval_poly(&parse(s)?, nvars, var)
}

/// Variable lookup for `w1..wn` (also accepting `z1..zn`).
pub fn w_vars(n: usize) -> impl Fn(&str) -> Option<usize> {
    move |name: &str| {
        let rest = name.strip_prefix('w').or_else(|| name.strip_prefix('z'))?;
        let k: usize = rest.parse().ok()?;
        (1..=n).contains(&k).then(|| k - 1)
    }
}

/// Variable lookup for torus coordinates `x1..xg, y1..yg` (x then y).
pub fn xy_vars(g: usize) -> impl Fn(&str) -> Option<usize> {
    move |name: &str| {
        let (off, rest) = if let Some(r) = name.strip_prefix('x') {
            (0, r)
        } else if let Some(r) = name.strip_prefix('y') {
            (g, r)
        } else {
            return None;
        };
        let k: usize = rest.parse().ok()?;
        (1..=g).contains(&k).then(|| off + k - 1)
    }
}
