//! Expression language for Hamiltonian entries.
//!
//! The grammar is deliberately small: `kx` and `ky` may appear only inside
//! `sin`, `cos`, or `exp` of linear integer combinations, which guarantees
//! every well-typed expression lowers to a finite Fourier series (a
//! trigonometric polynomial, hence finite hopping range). Parameters are
//! substituted numerically before lowering.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;

const INT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Kx,
    Ky,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

/// Parsed expression tree.
#[derive(Debug, Clone)]
pub enum Expr {
    Num(f64),
    ImagUnit,
    Var(Axis),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0 }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: 1, col: self.pos + 1, msg: msg.into() }
    }

    fn tokenize(mut self) -> Result<Vec<(Token, usize)>> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let start = self.pos;
            let b = self.src[self.pos];
            match b {
                b' ' | b'\t' => {
                    self.pos += 1;
                }
                b'+' => {
                    out.push((Token::Plus, start));
                    self.pos += 1;
                }
                b'-' => {
                    out.push((Token::Minus, start));
                    self.pos += 1;
                }
                b'*' => {
                    out.push((Token::Star, start));
                    self.pos += 1;
                }
                b'/' => {
                    out.push((Token::Slash, start));
                    self.pos += 1;
                }
                b'(' => {
                    out.push((Token::LParen, start));
                    self.pos += 1;
                }
                b')' => {
                    out.push((Token::RParen, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'.' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                    {
                        end += 1;
                    }
                    // scientific notation
                    if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                        let mut exp_end = end + 1;
                        if exp_end < self.src.len()
                            && (self.src[exp_end] == b'+' || self.src[exp_end] == b'-')
                        {
                            exp_end += 1;
                        }
                        if exp_end < self.src.len() && self.src[exp_end].is_ascii_digit() {
                            while exp_end < self.src.len() && self.src[exp_end].is_ascii_digit() {
                                exp_end += 1;
                            }
                            end = exp_end;
                        }
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    let value: f64 = text
                        .parse()
                        .map_err(|_| self.error(format!("bad numeric literal `{text}`")))?;
                    out.push((Token::Num(value), start));
                    self.pos = end;
                }
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                    let mut end = self.pos;
                    while end < self.src.len()
                        && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                    {
                        end += 1;
                    }
                    let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                    out.push((Token::Ident(text.to_string()), start));
                    self.pos = end;
                }
                _ => return Err(self.error(format!("unexpected character `{}`", b as char))),
            }
        }
        Ok(out)
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
}

impl Parser {
    fn error_at(&self, msg: impl Into<String>) -> Error {
        let col = self
            .tokens
            .get(self.pos)
            .map(|&(_, c)| c + 1)
            .unwrap_or_else(|| self.tokens.last().map(|&(_, c)| c + 2).unwrap_or(1));
        Error::Parse { line: 1, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.peek() {
            Some(found) if *found == t => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(self.error_at(format!("expected {t:?}, found {found:?}"))),
            None => Err(self.error_at(format!("expected {t:?}, found end of expression"))),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // factor := ('+'|'-')* primary
    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(Token::Plus) => {
                self.pos += 1;
                self.factor()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::Ident(name)) => {
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(f) = func {
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                if self.peek() == Some(&Token::LParen) {
                    return Err(self.error_at(format!(
                        "unknown function `{name}` (only sin, cos, exp are available)"
                    )));
                }
                match name.as_str() {
                    "i" => Ok(Expr::ImagUnit),
                    "kx" => Ok(Expr::Var(Axis::Kx)),
                    "ky" => Ok(Expr::Var(Axis::Ky)),
                    _ => Ok(Expr::Param(name)),
                }
            }
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.error_at(format!("unexpected token {t:?}")))
            }
            None => Err(self.error_at("unexpected end of expression")),
        }
    }
}

impl Expr {
    /// Parse an expression string.
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = Lexer::new(src).tokenize()?;
        if tokens.is_empty() {
            return Err(Error::Parse { line: 1, col: 1, msg: "empty expression".into() });
        }
        let mut parser = Parser { tokens, pos: 0 };
        let e = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(parser.error_at("trailing input after expression"));
        }
        Ok(e)
    }

    /// Collect the parameter names referenced by the expression.
    pub fn referenced_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(name) => {
                if !out.iter().any(|n| n == name) {
                    out.push(name.clone());
                }
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.referenced_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.referenced_params(out);
                b.referenced_params(out);
            }
            _ => {}
        }
    }

    /// Direct numeric evaluation at momentum `k` with the given parameters.
    ///
    /// This is the reference semantics the lowered Fourier series must match;
    /// it intentionally shares no code with [`Expr::lower`].
    pub fn eval_at(&self, k: [f64; 2], params: &BTreeMap<String, f64>) -> Result<Complex64> {
        let one_i = Complex64::new(0.0, 1.0);
        Ok(match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::ImagUnit => one_i,
            Expr::Var(Axis::Kx) => Complex64::new(k[0], 0.0),
            Expr::Var(Axis::Ky) => Complex64::new(k[1], 0.0),
            Expr::Param(name) => Complex64::new(
                *params.get(name).ok_or_else(|| Error::UnknownParam(name.clone()))?,
                0.0,
            ),
            Expr::Neg(a) => -a.eval_at(k, params)?,
            Expr::Add(a, b) => a.eval_at(k, params)? + b.eval_at(k, params)?,
            Expr::Sub(a, b) => a.eval_at(k, params)? - b.eval_at(k, params)?,
            Expr::Mul(a, b) => a.eval_at(k, params)? * b.eval_at(k, params)?,
            Expr::Div(a, b) => a.eval_at(k, params)? / b.eval_at(k, params)?,
            Expr::Call(Func::Sin, a) => a.eval_at(k, params)?.sin(),
            Expr::Call(Func::Cos, a) => a.eval_at(k, params)?.cos(),
            Expr::Call(Func::Exp, a) => a.eval_at(k, params)?.exp(),
        })
    }

    /// Lower to the exact finite Fourier series of the expression.
    pub fn lower(&self, params: &BTreeMap<String, f64>) -> Result<FourierSeries> {
        let one_i = Complex64::new(0.0, 1.0);
        Ok(match self {
            Expr::Num(v) => FourierSeries::constant(Complex64::new(*v, 0.0)),
            Expr::ImagUnit => FourierSeries::constant(one_i),
            Expr::Var(_) => {
                return Err(Error::NonTrigPolynomial(
                    "momentum variable outside sin/cos/exp".into(),
                ))
            }
            Expr::Param(name) => FourierSeries::constant(Complex64::new(
                *params.get(name).ok_or_else(|| Error::UnknownParam(name.clone()))?,
                0.0,
            )),
            Expr::Neg(a) => a.lower(params)?.neg(),
            Expr::Add(a, b) => a.lower(params)?.add(&b.lower(params)?),
            Expr::Sub(a, b) => a.lower(params)?.sub(&b.lower(params)?),
            Expr::Mul(a, b) => a.lower(params)?.mul(&b.lower(params)?),
            Expr::Div(a, b) => {
                let denom = b.lower(params)?;
                let c = denom.try_constant().ok_or(Error::DivisionByK)?;
                if c.norm() == 0.0 {
                    return Err(Error::InvalidArgument("division by zero constant".into()));
                }
                a.lower(params)?.scale(c.inv())
            }
            Expr::Call(func, arg) => {
                let lin = arg.as_linear_form(params)?;
                match func {
                    // sin L = (e^{iL} - e^{-iL}) / 2i
                    Func::Sin => {
                        let plus = lin.exp_i(false)?;
                        let minus = lin.exp_i(true)?;
                        plus.sub(&minus).scale((Complex64::new(0.0, 2.0)).inv())
                    }
                    // cos L = (e^{iL} + e^{-iL}) / 2
                    Func::Cos => {
                        let plus = lin.exp_i(false)?;
                        let minus = lin.exp_i(true)?;
                        plus.add(&minus).scale(Complex64::new(0.5, 0.0))
                    }
                    Func::Exp => lin.exp_raw()?,
                }
            }
        })
    }

    /// Interpret the expression as `cx*kx + cy*ky + c0` with complex
    /// coefficients, or fail. Used for arguments of sin/cos/exp.
    fn as_linear_form(&self, params: &BTreeMap<String, f64>) -> Result<LinearForm> {
        let nontrig =
            |what: &str| Error::NonTrigPolynomial(format!("{what} inside a sin/cos/exp argument"));
        Ok(match self {
            Expr::Num(v) => LinearForm::constant(Complex64::new(*v, 0.0)),
            Expr::ImagUnit => LinearForm::constant(Complex64::new(0.0, 1.0)),
            Expr::Var(Axis::Kx) => LinearForm {
                cx: Complex64::new(1.0, 0.0),
                cy: Complex64::new(0.0, 0.0),
                c0: Complex64::new(0.0, 0.0),
            },
            Expr::Var(Axis::Ky) => LinearForm {
                cx: Complex64::new(0.0, 0.0),
                cy: Complex64::new(1.0, 0.0),
                c0: Complex64::new(0.0, 0.0),
            },
            Expr::Param(name) => LinearForm::constant(Complex64::new(
                *params.get(name).ok_or_else(|| Error::UnknownParam(name.clone()))?,
                0.0,
            )),
            Expr::Neg(a) => a.as_linear_form(params)?.scale(-Complex64::new(1.0, 0.0)),
            Expr::Add(a, b) => a.as_linear_form(params)?.add(&b.as_linear_form(params)?),
            Expr::Sub(a, b) => a
                .as_linear_form(params)?
                .add(&b.as_linear_form(params)?.scale(-Complex64::new(1.0, 0.0))),
            Expr::Mul(a, b) => {
                let la = a.as_linear_form(params)?;
                let lb = b.as_linear_form(params)?;
                if la.is_constant() {
                    lb.scale(la.c0)
                } else if lb.is_constant() {
                    la.scale(lb.c0)
                } else {
                    return Err(nontrig("product of momentum-dependent factors"));
                }
            }
            Expr::Div(a, b) => {
                let la = a.as_linear_form(params)?;
                let lb = b.as_linear_form(params)?;
                if !lb.is_constant() {
                    return Err(Error::DivisionByK);
                }
                if lb.c0.norm() == 0.0 {
                    return Err(Error::InvalidArgument("division by zero constant".into()));
                }
                la.scale(lb.c0.inv())
            }
            Expr::Call(..) => return Err(nontrig("nested sin/cos/exp")),
        })
    }
}

/// `cx*kx + cy*ky + c0` with complex coefficients.
#[derive(Debug, Clone, Copy)]
struct LinearForm {
    cx: Complex64,
    cy: Complex64,
    c0: Complex64,
}

impl LinearForm {
    fn constant(c0: Complex64) -> Self {
        Self { cx: Complex64::new(0.0, 0.0), cy: Complex64::new(0.0, 0.0), c0 }
    }

    fn is_constant(&self) -> bool {
        self.cx.norm() == 0.0 && self.cy.norm() == 0.0
    }

    fn add(&self, other: &Self) -> Self {
        Self { cx: self.cx + other.cx, cy: self.cy + other.cy, c0: self.c0 + other.c0 }
    }

    fn scale(&self, c: Complex64) -> Self {
        Self { cx: self.cx * c, cy: self.cy * c, c0: self.c0 * c }
    }

    /// `exp(+-i L)` as a Fourier monomial; requires integer real k coefficients.
    fn exp_i(&self, negate: bool) -> Result<FourierSeries> {
        let sign = if negate { -1.0 } else { 1.0 };
        let lx = real_integer(self.cx)?;
        let ly = real_integer(self.cy)?;
        let phase = (Complex64::new(0.0, sign) * self.c0).exp();
        Ok(FourierSeries::monomial((sign as i32 * lx, sign as i32 * ly), phase))
    }

    /// `exp(L)` as a Fourier monomial; requires pure-imaginary integer
    /// k coefficients, i.e. `L = i*(l1 kx + l2 ky) + c0`.
    fn exp_raw(&self) -> Result<FourierSeries> {
        let minus_i = Complex64::new(0.0, -1.0);
        let lx = real_integer(self.cx * minus_i)?;
        let ly = real_integer(self.cy * minus_i)?;
        Ok(FourierSeries::monomial((lx, ly), self.c0.exp()))
    }
}

fn real_integer(c: Complex64) -> Result<i32> {
    let err = || {
        Error::NonTrigPolynomial(format!(
            "momentum coefficient {c} is not an integer of the required kind"
        ))
    };
    if c.im.abs() > INT_TOL {
        return Err(err());
    }
    let rounded = c.re.round();
    if (c.re - rounded).abs() > INT_TOL || rounded.abs() > i32::MAX as f64 {
        return Err(err());
    }
    Ok(rounded as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_params() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lowers_cos_kx() {
        let s = Expr::parse("cos(kx)").unwrap().lower(&no_params()).unwrap();
        assert!((s.coefficient((1, 0)) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((s.coefficient((-1, 0)) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn lowers_i_times_cos_kx_minus_one() {
        let s = Expr::parse("i*(cos(kx)-1)").unwrap().lower(&no_params()).unwrap();
        assert!((s.coefficient((1, 0)) - c(0.0, 0.5)).norm() < 1e-15);
        assert!((s.coefficient((-1, 0)) - c(0.0, 0.5)).norm() < 1e-15);
        assert!((s.coefficient((0, 0)) - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn lowers_product_2_sin_kx_cos_ky() {
        // 2 sin kx cos ky = -i/2 (e^{i(kx+ky)} + e^{i(kx-ky)}) + i/2 (...)
        let s = Expr::parse("2*sin(kx)*cos(ky)").unwrap().lower(&no_params()).unwrap();
        assert!((s.coefficient((1, 1)) - c(0.0, -0.5)).norm() < 1e-15);
        assert!((s.coefficient((1, -1)) - c(0.0, -0.5)).norm() < 1e-15);
        assert!((s.coefficient((-1, 1)) - c(0.0, 0.5)).norm() < 1e-15);
        assert!((s.coefficient((-1, -1)) - c(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(s.len(), 4);
        // numeric cross-check on a 16x16 grid
        let expr = Expr::parse("2*sin(kx)*cos(ky)").unwrap();
        for ix in 0..16 {
            for iy in 0..16 {
                let k = [
                    -std::f64::consts::PI + ix as f64 * std::f64::consts::TAU / 16.0,
                    -std::f64::consts::PI + iy as f64 * std::f64::consts::TAU / 16.0,
                ];
                let direct = expr.eval_at(k, &no_params()).unwrap();
                assert!((s.eval(k) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_of_imaginary_integer_combination() {
        let s = Expr::parse("exp(i*(2*kx - ky))").unwrap().lower(&no_params()).unwrap();
        assert!((s.coefficient((2, -1)) - c(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn rejects_non_polynomial_constructs() {
        let p = no_params();
        assert!(matches!(
            Expr::parse("kx").unwrap().lower(&p),
            Err(Error::NonTrigPolynomial(_))
        ));
        assert!(matches!(
            Expr::parse("sin(sin(kx))").unwrap().lower(&p),
            Err(Error::NonTrigPolynomial(_))
        ));
        assert!(matches!(
            Expr::parse("cos(kx*ky)").unwrap().lower(&p),
            Err(Error::NonTrigPolynomial(_))
        ));
        assert!(matches!(Expr::parse("1/cos(kx)").unwrap().lower(&p), Err(Error::DivisionByK)));
        assert!(matches!(
            Expr::parse("exp(kx)").unwrap().lower(&p),
            Err(Error::NonTrigPolynomial(_))
        ));
        match Expr::parse("sqrt(cos(kx))") {
            Err(Error::Parse { msg, .. }) => assert!(msg.contains("unknown function")),
            other => panic!("sqrt should be rejected at parse time, got {other:?}"),
        }
        assert!(matches!(
            Expr::parse("cos(0.5*kx)").unwrap().lower(&p),
            Err(Error::NonTrigPolynomial(_))
        ));
    }

    #[test]
    fn reports_unknown_parameter() {
        assert!(matches!(
            Expr::parse("t*cos(kx)").unwrap().lower(&no_params()),
            Err(Error::UnknownParam(name)) if name == "t"
        ));
    }

    #[test]
    fn syntax_errors_carry_column() {
        match Expr::parse("cos(kx") {
            Err(Error::Parse { col, .. }) => assert!(col >= 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(Expr::parse("2 +* 3").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn division_by_constant_and_phase_offsets() {
        let p = no_params();
        let s = Expr::parse("sin(kx + 1)/2").unwrap().lower(&p).unwrap();
        let expr = Expr::parse("sin(kx + 1)/2").unwrap();
        for &k in &[[0.2, 0.0], [1.5, -0.4]] {
            assert!((s.eval(k) - expr.eval_at(k, &p).unwrap()).norm() < 1e-13);
        }
    }
}
