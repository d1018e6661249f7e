//! Exact scalars for rotations by integer angles.
//!
//! `u = e^{i}` is transcendental, so `Q(i)[u, u⁻¹]` embeds in ℂ and a Laurent
//! polynomial vanishes there exactly when it is the zero polynomial. That is
//! enough to express `cos 1` and `sin 1` and to test harmonic flows at integer
//! times for literal zero. Only monomials `c·u^k` are units; dividing by
//! anything else panics.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::{GaussRat, Scalar};

/// `Σ c_k u^k` with `u = e^{i}` and `c_k ∈ Q(i)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LaurentRat {
    terms: BTreeMap<i64, GaussRat>,
}

impl LaurentRat {
    pub fn constant(c: GaussRat) -> Self {
        Self::monomial(0, c)
    }

    pub fn monomial(power: i64, c: GaussRat) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&c) {
            terms.insert(power, c);
        }
        Self { terms }
    }

    /// `u = e^{i}`.
    pub fn unit() -> Self {
        Self::monomial(1, GaussRat::one())
    }

    pub fn coefficient(&self, power: i64) -> GaussRat {
        self.terms.get(&power).cloned().unwrap_or_else(GaussRat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &GaussRat)> {
        self.terms.iter()
    }

    /// The value when it is a plain Gaussian rational.
    pub fn as_constant(&self) -> Option<GaussRat> {
        match self.terms.len() {
            0 => Some(GaussRat::zero()),
            1 => self.terms.get(&0).cloned(),
            _ => None,
        }
    }

    fn accumulate(&mut self, power: i64, c: GaussRat) {
        let entry = self.terms.entry(power).or_insert_with(GaussRat::zero);
        *entry = entry.clone() + c;
        if Zero::is_zero(entry) {
            self.terms.remove(&power);
        }
    }
}

impl Zero for LaurentRat {
    fn zero() -> Self {
        Self::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for LaurentRat {
    fn one() -> Self {
        Self::constant(GaussRat::one())
    }
}

impl Add for LaurentRat {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (k, c) in rhs.terms {
            self.accumulate(k, c);
        }
        self
    }
}

impl Neg for LaurentRat {
    type Output = Self;
    fn neg(self) -> Self {
        Self { terms: self.terms.into_iter().map(|(k, c)| (k, -c)).collect() }
    }
}

impl Sub for LaurentRat {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for LaurentRat {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &rhs.terms {
                out.accumulate(a + b, x.clone() * y.clone());
            }
        }
        out
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl Div for LaurentRat {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let mut it = rhs.terms.iter();
        match (it.next(), it.next()) {
            (Some((k, c)), None) => {
                let inv = GaussRat::one() / c.clone();
                Self { terms: self.terms.into_iter().map(|(j, x)| (j - k, x * inv.clone())).collect() }
            }
            (None, _) => panic!("LaurentRat division by zero"),
            _ => panic!("LaurentRat: only monomials c·u^k are invertible"),
        }
    }
}

impl Scalar for LaurentRat {
    const EXACT: bool = true;

    fn i() -> Self {
        Self::constant(GaussRat::i())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(GaussRat::from_ratio(num, den))
    }

    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Self::constant(GaussRat::from_rational(re, im))
    }

    fn from_c64(_value: Complex64) -> Option<Self> {
        None
    }

    /// `|u| = 1`, so `ū = u⁻¹`.
    fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(k, c)| (-k, c.conj())).collect() }
    }

    fn to_c64(&self) -> Complex64 {
        self.terms.iter().map(|(k, c)| c.to_c64() * Complex64::from_polar(1.0, *k as f64)).sum()
    }

    fn is_real(&self) -> bool {
        *self == self.conj()
    }

    fn real_sign(&self) -> Option<Ordering> {
        self.as_constant()?.real_sign()
    }

    fn exact_parts(&self) -> Option<(String, String)> {
        self.as_constant()?.exact_parts()
    }

    /// Integer angles only: `e^{in} = u^n`.
    fn exp_i(theta: &Self) -> Option<Self> {
        let c = theta.as_constant()?;
        if !c.im.is_zero() || !c.re.is_integer() {
            return None;
        }
        Some(Self::monomial(c.re.to_integer().to_i64()?, GaussRat::one()))
    }

    fn sqrt_real(&self) -> Option<Self> {
        self.as_constant()?.sqrt_real().map(Self::constant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_squared_plus_sine_squared() {
        let u = LaurentRat::unit();
        let inv = LaurentRat::one() / u.clone();
        let cos = (u.clone() + inv.clone()) * LaurentRat::from_ratio(1, 2);
        let sin = (u - inv) / (LaurentRat::from_int(2) * LaurentRat::i());
        assert_eq!(cos.clone() * cos.clone() + sin.clone() * sin.clone(), LaurentRat::one());
        assert!(cos.is_real() && sin.is_real());
        assert!((cos.to_c64().re - 1f64.cos()).abs() < 1e-15);
        assert!((sin.to_c64().re - 1f64.sin()).abs() < 1e-15);
        assert_eq!(cos.real_sign(), None);
        assert_eq!(LaurentRat::exp_i(&LaurentRat::from_int(-2)), Some(LaurentRat::monomial(-2, GaussRat::one())));
        assert_eq!(LaurentRat::exp_i(&LaurentRat::from_ratio(1, 2)), None);
    }
}
