//! A small expression language for Hamiltonians, one-forms and observables.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'i' | 'q' | 'p' | 'qN' | 'pN' | 'H0'
//!         | 'exp(' expr ')' | 'cos(' wave ')' | 'sin(' wave ')'
//!         | 'e(' integer ',' integer ')' | '(' expr ')'
//! wave   := signed integer multiples of 'theta1' and 'theta2', e.g. '2*theta1 - theta2'
//! ```
//!
//! Numbers are exact: `3`, `1/2` (as a quotient) or `0.25`. `q` and `p`
//! mean `q1` and `p1`. Division is allowed only by constant subexpressions.
//! The torus atoms (`cos`, `sin`, `e`) are valid only on the Fourier backend.
//! The phase-space variables and `exp` are valid only on R^{2n}.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::backends::exppoly::ExpPoly;
use crate::backends::fourier::{Fourier, WaveVector};
use crate::backends::poly::Poly;
use crate::error::{KmsError, KmsResult};
use crate::scalar::{parse_rational, GaussRat, Scalar};
use crate::series::Coefficient;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(BigRational),
    I,
    Q(usize),
    P(usize),
    H0,
    Exp(Box<Expr>),
    Cos(WaveVector),
    Sin(WaveVector),
    Mode(WaveVector),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> KmsResult<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let c = chars[pos];
        let start = pos;
        if c.is_whitespace() {
            pos += 1;
        } else if c.is_ascii_digit() || c == '.' {
            while pos < chars.len() && (chars[pos].is_ascii_digit() || chars[pos] == '.') {
                pos += 1;
            }
            out.push((start + 1, Tok::Num(chars[start..pos].iter().collect())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while pos < chars.len() && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_') {
                pos += 1;
            }
            out.push((start + 1, Tok::Ident(chars[start..pos].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((start + 1, Tok::Sym(c)));
            pos += 1;
        } else {
            return Err(KmsError::Parse { column: start + 1, message: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, message: impl Into<String>) -> KmsResult<T> {
        Err(KmsError::Parse { column: self.column(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> KmsResult<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn expr(&mut self) -> KmsResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> KmsResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> KmsResult<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    let exp = n.parse::<u32>().or_else(|_| self.err("exponent must be a non-negative integer"))?;
                    self.pos += 1;
                    Ok(Expr::Pow(Box::new(base), exp))
                }
                _ => self.err("exponent must be a non-negative integer"),
            };
        }
        Ok(base)
    }

    fn integer(&mut self) -> KmsResult<i32> {
        let negative = self.eat('-');
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                let v: i32 = n.parse().or_else(|_| self.err("expected an integer"))?;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            _ => self.err("expected an integer"),
        }
    }

    /// `a*theta1 + b*theta2` with integer a, b.
    fn wave(&mut self) -> KmsResult<WaveVector> {
        let mut k = (0, 0);
        let mut first = true;
        loop {
            let sign = if self.eat('-') {
                -1
            } else if first || self.eat('+') {
                1
            } else {
                return Ok(k);
            };
            first = false;
            let coeff = match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    let v: i32 = n.parse().or_else(|_| self.err("wave coefficients must be integers"))?;
                    self.pos += 1;
                    self.expect('*')?;
                    v
                }
                _ => 1,
            };
            match self.peek().cloned() {
                Some(Tok::Ident(name)) if name == "theta1" => k.0 += sign * coeff,
                Some(Tok::Ident(name)) if name == "theta2" => k.1 += sign * coeff,
                _ => return self.err("expected theta1 or theta2"),
            }
            self.pos += 1;
        }
    }

    fn atom(&mut self) -> KmsResult<Expr> {
        let column = self.column();
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Tok::Num(n) => parse_rational(&n)
                .map(Expr::Number)
                .ok_or(KmsError::Parse { column, message: format!("bad number '{n}'") }),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::I),
                "q" => Ok(Expr::Q(0)),
                "p" => Ok(Expr::P(0)),
                "H0" => Ok(Expr::H0),
                "exp" => {
                    self.expect('(')?;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Exp(Box::new(inner)))
                }
                "cos" | "sin" => {
                    self.expect('(')?;
                    let k = self.wave()?;
                    self.expect(')')?;
                    Ok(if name == "cos" { Expr::Cos(k) } else { Expr::Sin(k) })
                }
                "e" => {
                    self.expect('(')?;
                    let a = self.integer()?;
                    self.expect(',')?;
                    let b = self.integer()?;
                    self.expect(')')?;
                    Ok(Expr::Mode((a, b)))
                }
                _ => {
                    let index = |prefix: &str| {
                        name.strip_prefix(prefix).and_then(|d| d.parse::<usize>().ok()).filter(|&d| d >= 1)
                    };
                    if let Some(d) = index("q") {
                        Ok(Expr::Q(d - 1))
                    } else if let Some(d) = index("p") {
                        Ok(Expr::P(d - 1))
                    } else {
                        Err(KmsError::Parse { column, message: format!("unknown identifier '{name}'") })
                    }
                }
            },
            Tok::Sym(c) => Err(KmsError::Parse { column, message: format!("unexpected '{c}'") }),
        }
    }
}

pub fn parse(text: &str) -> KmsResult<Expr> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, pos: 0, end: text.chars().count() + 1 };
    let e = parser.expr()?;
    if parser.pos != parser.toks.len() {
        return parser.err("trailing input");
    }
    Ok(e)
}

fn unsupported<T>(what: &str, backend: &str) -> KmsResult<T> {
    Err(KmsError::Domain(format!("{what} is not available on the {backend} backend")))
}

impl Expr {
    /// The value of a constant subexpression.
    pub fn constant(&self) -> Option<GaussRat> {
        Some(match self {
            Expr::Number(q) => GaussRat::from_rational(q, &BigRational::zero()),
            Expr::I => GaussRat::i(),
            Expr::Add(a, b) => a.constant()? + b.constant()?,
            Expr::Sub(a, b) => a.constant()? - b.constant()?,
            Expr::Mul(a, b) => a.constant()? * b.constant()?,
            Expr::Div(a, b) => {
                let d = b.constant()?;
                if Zero::is_zero(&d) {
                    return None;
                }
                a.constant()? / d
            }
            Expr::Neg(a) => -a.constant()?,
            Expr::Pow(a, e) => Scalar::pow(&a.constant()?, *e),
            _ => return None,
        })
    }

    fn fold<C: Coefficient<Scalar = GaussRat>>(
        &self,
        proto: &C,
        leaf: &dyn Fn(&Expr) -> KmsResult<C>,
    ) -> KmsResult<C> {
        if let Some(c) = self.constant() {
            return Ok(proto.one_like().scale(&c));
        }
        Ok(match self {
            Expr::Add(a, b) => a.fold(proto, leaf)?.add(&b.fold(proto, leaf)?),
            Expr::Sub(a, b) => a.fold(proto, leaf)?.sub(&b.fold(proto, leaf)?),
            Expr::Mul(a, b) => a.fold(proto, leaf)?.mul(&b.fold(proto, leaf)?),
            Expr::Div(a, b) => {
                let d = b
                    .constant()
                    .ok_or_else(|| KmsError::Domain("division by a non-constant expression".into()))?;
                if Zero::is_zero(&d) {
                    return Err(KmsError::Domain("division by zero".into()));
                }
                a.fold(proto, leaf)?.scale(&(GaussRat::one() / d))
            }
            Expr::Neg(a) => a.fold(proto, leaf)?.neg(),
            Expr::Pow(a, e) => {
                let base = a.fold(proto, leaf)?;
                (0..*e).fold(proto.one_like(), |acc, _| acc.mul(&base))
            }
            other => leaf(other)?,
        })
    }

    pub fn to_poly(&self, dof: usize) -> KmsResult<Poly<GaussRat>> {
        let proto = Poly::zero(dof, 0);
        self.fold(&proto, &|e| match e {
            Expr::Q(i) | Expr::P(i) if *i >= dof => {
                Err(KmsError::Domain(format!("variable index {} exceeds n = {dof}", i + 1)))
            }
            Expr::Q(i) => Ok(Poly::q(dof, *i)),
            Expr::P(i) => Ok(Poly::p(dof, *i)),
            Expr::H0 => Ok(Poly::harmonic(dof, 0)),
            Expr::Exp(_) => unsupported("exp", "polynomial"),
            _ => unsupported("a torus function", "polynomial"),
        })
    }

    pub fn to_exppoly(&self, dof: usize) -> KmsResult<ExpPoly<GaussRat>> {
        let proto = ExpPoly::zero(dof, 0);
        self.fold(&proto, &|e| match e {
            Expr::Exp(arg) => Ok(ExpPoly::term(Poly::one(dof, 0), arg.to_poly(dof)?)),
            Expr::Q(_) | Expr::P(_) | Expr::H0 => Ok(ExpPoly::from(e.to_poly(dof)?)),
            _ => unsupported("a torus function", "exp-polynomial"),
        })
    }

    pub fn to_fourier(&self, band: i32) -> KmsResult<Fourier<GaussRat>> {
        let proto = Fourier::zero(band);
        self.fold(&proto, &|e| {
            let k = match e {
                Expr::Cos(k) | Expr::Sin(k) | Expr::Mode(k) => *k,
                _ => return unsupported("a variable of R^{2n}", "torus"),
            };
            if !proto.in_band(k) {
                return Err(KmsError::Domain(format!("mode {k:?} lies outside the band {band}")));
            }
            Ok(match e {
                Expr::Cos(_) => Fourier::cos(band, k),
                Expr::Sin(_) => Fourier::sin(band, k),
                _ => Fourier::mode(band, k, GaussRat::one()),
            })
        })
    }
}

/// Parses a list of integer-valued constants, such as a wave vector.
pub fn parse_int(text: &str) -> KmsResult<BigInt> {
    match parse(text)?.constant() {
        Some(c) if c.im.is_zero() && c.re.is_integer() => Ok(c.re.to_integer()),
        _ => Err(KmsError::Domain(format!("'{text}' is not an integer"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn polynomial_expressions() {
        let h = parse("(q^2 + p^2)/2").unwrap().to_poly(1).unwrap();
        assert_eq!(h, Poly::harmonic(1, 0));
        let f = parse("2*q1*p2 - i*0.5").unwrap().to_poly(2).unwrap();
        let expected = Poly::q(2, 0)
            .mul(&Poly::p(2, 1))
            .scale(&GaussRat::from_int(2))
            .sub(&Poly::constant(2, 0, GaussRat::i() * GaussRat::from_ratio(1, 2)));
        assert_eq!(f, expected);
        assert_eq!(parse("-3/4").unwrap().constant().unwrap(), GaussRat::from_rational(&rational(-3, 4), &rational(0, 1)));
    }

    #[test]
    fn exp_and_torus_expressions() {
        let g = parse("q*exp(-H0/2)").unwrap().to_exppoly(1).unwrap();
        assert_eq!(g, ExpPoly::gaussian(Poly::q(1, 0), GaussRat::from_ratio(-1, 2)));
        let f = parse("cos(theta1 - 2*theta2) + 3*e(0,-1)").unwrap().to_fourier(3).unwrap();
        assert_eq!(f, Fourier::cos(3, (1, -2)).add(&Fourier::mode(3, (0, -1), GaussRat::from_int(3))));
    }

    #[test]
    fn errors_carry_columns() {
        assert_eq!(parse("q + $").unwrap_err(), KmsError::Parse { column: 5, message: "unexpected character '$'".into() });
        assert!(matches!(parse("q +").unwrap_err(), KmsError::Parse { column: 4, .. }));
        assert!(matches!(parse("q ^ p"), Err(KmsError::Parse { column: 5, .. })));
        assert!(parse("q/p").unwrap().to_poly(1).is_err());
        assert!(parse("cos(theta1)").unwrap().to_poly(1).is_err());
        assert!(parse("q3").unwrap().to_poly(2).is_err());
        assert!(parse("e(5,0)").unwrap().to_fourier(2).is_err());
    }
}
