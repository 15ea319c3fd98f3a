//! Small arithmetic expressions in one variable.
//!
//! Grammar: `+ - * / ^` (also `**`), unary minus, parentheses, numbers, the
//! constants `pi`, `e`, `i`, the variable (`x` or `t`, fixed per parse), and
//! `sin`, `cos`, `exp`. Values are complex.
//!
//! Expressions built from polynomials, exponentials and sines/cosines of affine
//! arguments convert to an [`ExpPoly`], which has exact Fourier/Laplace-type
//! integrals.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::quad::GaussLegendre;
use crate::scalar::{Scalar, Wide, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(C64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.position, self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let save = i;
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError {
                position: start,
                message: alloc::format!("bad number `{}`", text),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if c == '*' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
            out.push((i, Tok::Op('^')));
            i += 2;
        } else if "+-*/^".contains(c) {
            out.push((i, Tok::Op(c)));
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::RParen));
            i += 1;
        } else {
            return Err(ParseError { position: i, message: alloc::format!("unexpected character `{}`", c) });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    var: &'a str,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError { position: self.offset(), message: msg.to_string() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c != '+' && c != '-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == '+' { Expr::Add(Box::new(lhs), Box::new(rhs)) } else { Expr::Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let c = *c;
            if c != '*' && c != '/' {
                break;
            }
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == '*' { Expr::Mul(Box::new(lhs), Box::new(rhs)) } else { Expr::Div(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            if exp.mentions_var() {
                return self.err("exponent must not depend on the variable");
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of expression"),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(C64::new(v, 0.0))),
            Tok::LParen => {
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == self.var {
                    return Ok(Expr::Var);
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Num(C64::new(core::f64::consts::PI, 0.0))),
                    "e" => Ok(Expr::Num(C64::new(core::f64::consts::E, 0.0))),
                    "i" => Ok(Expr::Num(C64::new(0.0, 1.0))),
                    "sin" | "cos" | "exp" => {
                        if self.peek() != Some(&Tok::LParen) {
                            return self.err("expected `(` after function name");
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(&Tok::RParen) {
                            return self.err("expected `)`");
                        }
                        self.pos += 1;
                        let arg = Box::new(arg);
                        Ok(match name.as_str() {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            _ => Expr::Exp(arg),
                        })
                    }
                    _ => {
                        self.pos -= 1;
                        self.err(&alloc::format!("unknown identifier `{}`", name))
                    }
                }
            }
            _ => {
                self.pos -= 1;
                self.err("expected a number, variable, function or `(`")
            }
        }
    }
}

impl Expr {
    /// Parses `src` with `var` as the free variable.
    pub fn parse(src: &str, var: &str) -> Result<Expr, ParseError> {
        let toks = tokenize(src)?;
        let mut p = Parser { toks, pos: 0, var, end: src.len() };
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(C64::new(v, 0.0))
    }

    pub fn mentions_var(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.mentions_var() || b.mentions_var()
            }
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.mentions_var(),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.eval_c(C64::new(x, 0.0))
    }

    pub fn eval_c(&self, x: C64) -> C64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval_c(x) + b.eval_c(x),
            Expr::Sub(a, b) => a.eval_c(x) - b.eval_c(x),
            Expr::Mul(a, b) => a.eval_c(x) * b.eval_c(x),
            Expr::Div(a, b) => a.eval_c(x) / b.eval_c(x),
            Expr::Pow(a, b) => {
                let base = a.eval_c(x);
                let p = b.eval_c(x);
                if p.im == 0.0 && p.re.fract() == 0.0 && p.re.abs() <= 1024.0 {
                    base.powi(p.re as i32)
                } else {
                    base.powc(p)
                }
            }
            Expr::Neg(a) => -a.eval_c(x),
            Expr::Sin(a) => a.eval_c(x).sin(),
            Expr::Cos(a) => a.eval_c(x).cos(),
            Expr::Exp(a) => a.eval_c(x).exp(),
        }
    }

    fn constant(&self) -> Option<C64> {
        if self.mentions_var() {
            None
        } else {
            Some(self.eval_c(C64::new(0.0, 0.0)))
        }
    }

    /// Symbolic derivative with light constant folding.
    pub fn derivative(&self) -> Expr {
        use Expr::*;
        let d = match self {
            Num(_) => Expr::num(0.0),
            Var => Expr::num(1.0),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
            Div(a, b) => div(
                sub(mul(a.derivative(), (**b).clone()), mul((**a).clone(), b.derivative())),
                pow((**b).clone(), Expr::num(2.0)),
            ),
            Pow(a, b) => {
                let one = Expr::num(1.0);
                mul(mul((**b).clone(), pow((**a).clone(), sub((**b).clone(), one))), a.derivative())
            }
            Neg(a) => neg(a.derivative()),
            Sin(a) => mul(Cos(a.clone()), a.derivative()),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative())),
            Exp(a) => mul(Exp(a.clone()), a.derivative()),
        };
        d
    }

    pub fn nth_derivative(&self, k: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..k {
            e = e.derivative();
        }
        e
    }

    /// Exponential-polynomial form, when the tree admits one.
    pub fn to_exp_poly(&self) -> Option<ExpPoly> {
        use Expr::*;
        Some(match self {
            Num(v) => ExpPoly::constant(*v),
            Var => ExpPoly { terms: vec![ExpTerm { beta: C64::new(0.0, 0.0), poly: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)] }] },
            Add(a, b) => a.to_exp_poly()?.add(&b.to_exp_poly()?),
            Sub(a, b) => a.to_exp_poly()?.add(&b.to_exp_poly()?.scale(C64::new(-1.0, 0.0))),
            Neg(a) => a.to_exp_poly()?.scale(C64::new(-1.0, 0.0)),
            Mul(a, b) => a.to_exp_poly()?.mul(&b.to_exp_poly()?),
            Div(a, b) => {
                let c = b.constant()?;
                if c.norm() == 0.0 {
                    return None;
                }
                a.to_exp_poly()?.scale(c.inv())
            }
            Pow(a, b) => {
                let p = b.constant()?;
                if p.im != 0.0 || p.re < 0.0 || p.re.fract() != 0.0 || p.re > 64.0 {
                    if let Some(c) = a.constant() {
                        return Some(ExpPoly::constant(self.eval_c(c * 0.0)));
                    }
                    return None;
                }
                let base = a.to_exp_poly()?;
                let mut acc = ExpPoly::constant(C64::new(1.0, 0.0));
                for _ in 0..(p.re as usize) {
                    acc = acc.mul(&base);
                }
                acc
            }
            Exp(a) => {
                let (c0, c1) = a.to_exp_poly()?.affine()?;
                ExpPoly { terms: vec![ExpTerm { beta: c1, poly: vec![c0.exp()] }] }
            }
            Sin(a) | Cos(a) => {
                let (c0, c1) = a.to_exp_poly()?.affine()?;
                let i = C64::new(0.0, 1.0);
                let ep = ExpTerm { beta: i * c1, poly: vec![(i * c0).exp()] };
                let em = ExpTerm { beta: -i * c1, poly: vec![(-i * c0).exp()] };
                let (sp, sm) = if matches!(self, Sin(_)) {
                    (C64::new(0.0, -0.5), C64::new(0.0, 0.5))
                } else {
                    (C64::new(0.5, 0.0), C64::new(0.5, 0.0))
                };
                ExpPoly { terms: vec![ep.scaled(sp), em.scaled(sm)] }.merged()
            }
        })
    }
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(c) if c.re == v && c.im == 0.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return b;
    }
    if is_num(&b, 0.0) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 0.0) {
        return a;
    }
    if is_num(&a, 0.0) {
        return neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) || is_num(&b, 0.0) {
        return Expr::num(0.0);
    }
    if is_num(&a, 1.0) {
        return b;
    }
    if is_num(&b, 1.0) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x * y);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return Expr::num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        return a;
    }
    if is_num(&b, 0.0) {
        return Expr::num(1.0);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x.powc(*y));
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn fmt_num(f: &mut fmt::Formatter<'_>, v: C64) -> fmt::Result {
    if v.im == 0.0 {
        if v.re < 0.0 {
            write!(f, "(-{:?})", -v.re)
        } else {
            write!(f, "{:?}", v.re)
        }
    } else if v.re == 0.0 {
        write!(f, "({:?}*i)", v.im)
    } else {
        write!(f, "({:?}+{:?}*i)", v.re, v.im)
    }
}

/// Fully parenthesised output that parses back to the same tree shape.
pub struct Display<'a> {
    expr: &'a Expr,
    var: &'a str,
}

impl Expr {
    pub fn display<'a>(&'a self, var: &'a str) -> Display<'a> {
        Display { expr: self, var }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.var;
        fn d<'b>(e: &'b Expr, var: &'b str) -> Display<'b> {
            Display { expr: e, var }
        }
        match self.expr {
            Expr::Num(c) => fmt_num(f, *c),
            Expr::Var => write!(f, "{}", v),
            Expr::Add(a, b) => write!(f, "({} + {})", d(a, v), d(b, v)),
            Expr::Sub(a, b) => write!(f, "({} - {})", d(a, v), d(b, v)),
            Expr::Mul(a, b) => write!(f, "({} * {})", d(a, v), d(b, v)),
            Expr::Div(a, b) => write!(f, "({} / {})", d(a, v), d(b, v)),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", d(a, v), d(b, v)),
            Expr::Neg(a) => write!(f, "(-{})", d(a, v)),
            Expr::Sin(a) => write!(f, "sin({})", d(a, v)),
            Expr::Cos(a) => write!(f, "cos({})", d(a, v)),
            Expr::Exp(a) => write!(f, "exp({})", d(a, v)),
        }
    }
}

/// One term `p(x) e^{βx}`, coefficients of `p` in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpTerm {
    pub beta: C64,
    pub poly: Vec<C64>,
}

impl ExpTerm {
    fn scaled(mut self, c: C64) -> ExpTerm {
        for p in &mut self.poly {
            *p *= c;
        }
        self
    }
}

/// Finite sum of polynomial × exponential terms.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExpPoly {
    pub terms: Vec<ExpTerm>,
}

fn poly_eval(p: &[C64], x: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn poly_derivative(p: &[C64]) -> Vec<C64> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
}

impl ExpPoly {
    pub fn constant(c: C64) -> ExpPoly {
        ExpPoly { terms: vec![ExpTerm { beta: C64::new(0.0, 0.0), poly: vec![c] }] }
    }

    /// Polynomial with ascending real coefficients.
    pub fn polynomial(coeffs: &[C64]) -> ExpPoly {
        ExpPoly { terms: vec![ExpTerm { beta: C64::new(0.0, 0.0), poly: coeffs.to_vec() }] }
    }

    fn merged(mut self) -> ExpPoly {
        let mut out: Vec<ExpTerm> = Vec::new();
        for t in self.terms.drain(..) {
            if let Some(o) = out.iter_mut().find(|o| o.beta == t.beta) {
                if o.poly.len() < t.poly.len() {
                    o.poly.resize(t.poly.len(), C64::new(0.0, 0.0));
                }
                for (k, c) in t.poly.iter().enumerate() {
                    o.poly[k] += c;
                }
            } else {
                out.push(t);
            }
        }
        for t in &mut out {
            while t.poly.len() > 1 && t.poly.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
                t.poly.pop();
            }
        }
        out.retain(|t| t.poly.iter().any(|c| c.norm() != 0.0));
        ExpPoly { terms: out }
    }

    fn add(&self, o: &ExpPoly) -> ExpPoly {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        ExpPoly { terms }.merged()
    }

    fn scale(&self, c: C64) -> ExpPoly {
        ExpPoly { terms: self.terms.iter().cloned().map(|t| t.scaled(c)).collect() }.merged()
    }

    fn mul(&self, o: &ExpPoly) -> ExpPoly {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                let mut poly = vec![C64::new(0.0, 0.0); a.poly.len() + b.poly.len() - 1];
                for (i, x) in a.poly.iter().enumerate() {
                    for (j, y) in b.poly.iter().enumerate() {
                        poly[i + j] += x * y;
                    }
                }
                terms.push(ExpTerm { beta: a.beta + b.beta, poly });
            }
        }
        ExpPoly { terms }.merged()
    }

    /// `(c0, c1)` if this is `c0 + c1 x`.
    fn affine(&self) -> Option<(C64, C64)> {
        match self.terms.as_slice() {
            [] => Some((C64::new(0.0, 0.0), C64::new(0.0, 0.0))),
            [t] if t.beta.norm() == 0.0 && t.poly.len() <= 2 => {
                Some((t.poly[0], t.poly.get(1).copied().unwrap_or(C64::new(0.0, 0.0))))
            }
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        let xc = C64::new(x, 0.0);
        self.terms.iter().map(|t| poly_eval(&t.poly, xc) * (t.beta * x).exp()).sum()
    }

    /// `∫_lo^hi p(x - origin) e^{βx}·e^{γx} dx` summed over terms, where the
    /// polynomials are taken in the shifted variable `x - origin`.
    pub fn integrate_exp(&self, gamma: C64, lo: f64, hi: f64, origin: f64) -> Wide {
        let mut total = Wide::ZERO;
        for t in &self.terms {
            let g = t.beta + gamma;
            // e^{g·origin} ∫_{lo-o}^{hi-o} p(u) e^{gu} du
            let shift = Wide::exp_c(g * origin);
            total += shift * integrate_poly_exp(&t.poly, g, lo - origin, hi - origin);
        }
        total
    }
}

/// `∫_a^b p(u) e^{gu} du` without overflow.
pub fn integrate_poly_exp(p: &[C64], g: C64, a: f64, b: f64) -> Wide {
    let len = b - a;
    if len == 0.0 || p.is_empty() {
        return Wide::ZERO;
    }
    if g.norm() * len.abs() < 1.0 {
        // antiderivative would cancel badly; the integrand is gentle here
        let n = (p.len() / 2 + 12).min(64);
        let rule = GaussLegendre::new(n);
        let base = Wide::exp_c(g * a);
        let v = rule.integrate(0.0, len, |u| poly_eval(p, C64::new(a + u, 0.0)) * (g * u).exp());
        return base * Wide::from_c(v);
    }
    // e^{gu} Σ_k (-1)^k p^{(k)}(u) / g^{k+1}
    let anti = |u: f64| -> Wide {
        let mut s = C64::new(0.0, 0.0);
        let mut d: Vec<C64> = p.to_vec();
        let mut gk = g;
        let mut sign = 1.0;
        while !d.is_empty() {
            s += poly_eval(&d, C64::new(u, 0.0)) * sign / gk;
            d = poly_derivative(&d);
            gk *= g;
            sign = -sign;
        }
        Wide::exp_c(g * u) * Wide::from_c(s)
    };
    anti(b) - anti(a)
}
