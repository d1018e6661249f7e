//! Scalar fields the algebra is generic over.
//!
//! Two families are provided: exact Gaussian rationals (`Complex<BigRational>`)
//! for identities that must vanish to literal zero, and `Complex<f32>` /
//! `Complex<f64>` for the spectral torus backend and for flows whose
//! coefficients are transcendental. [`crate::laurent::LaurentRat`] extends
//! the exact family by `e^{±i}`.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Field operations shared by every coefficient type.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact, so identities can be tested against zero.
    const EXACT: bool;

    fn i() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(re: &BigRational, im: &BigRational) -> Self;
    /// `None` for exact scalars, which cannot hold an arbitrary double.
    fn from_c64(value: Complex64) -> Option<Self>;
    fn conj(&self) -> Self;
    fn to_c64(&self) -> Complex64;

    fn is_real(&self) -> bool;
    /// Sign of the real part; `None` if the value has an imaginary part.
    fn real_sign(&self) -> Option<Ordering>;

    fn magnitude(&self) -> f64 {
        self.to_c64().norm()
    }

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Exact rational rendering `"num/den"` of both parts, when available.
    fn exact_parts(&self) -> Option<(String, String)> {
        None
    }

    /// `e^{iθ}` when it is representable in this field.
    fn exp_i(theta: &Self) -> Option<Self> {
        theta.is_zero().then(Self::one)
    }

    /// Non-negative square root of a non-negative real, when representable.
    fn sqrt_real(&self) -> Option<Self> {
        None
    }

    fn pow(&self, exp: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..exp {
            out = out * self.clone();
        }
        out
    }
}

/// Exact Gaussian rational.
pub type GaussRat = Complex<BigRational>;

fn ratio(num: i64, den: i64) -> BigRational {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_string(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

impl Scalar for GaussRat {
    const EXACT: bool = true;

    fn i() -> Self {
        Complex::new(BigRational::zero(), BigRational::one())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(ratio(num, den), BigRational::zero())
    }

    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(re.clone(), im.clone())
    }

    fn from_c64(_value: Complex64) -> Option<Self> {
        None
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn real_sign(&self) -> Option<Ordering> {
        if !self.im.is_zero() {
            return None;
        }
        Some(if self.re.is_zero() {
            Ordering::Equal
        } else if self.re.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        })
    }

    fn exact_parts(&self) -> Option<(String, String)> {
        Some((rational_string(&self.re), rational_string(&self.im)))
    }

    fn sqrt_real(&self) -> Option<Self> {
        if !self.im.is_zero() || self.re.is_negative() {
            return None;
        }
        let root = |n: &BigInt| {
            let r = n.sqrt();
            (&r * &r == *n).then_some(r)
        };
        let num = root(self.re.numer())?;
        let den = root(self.re.denom())?;
        Some(Complex::new(BigRational::new(num, den), BigRational::zero()))
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            const EXACT: bool = false;

            fn i() -> Self {
                Complex::new(0.0, 1.0)
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                Complex::new(num as $t / den as $t, 0.0)
            }

            fn from_rational(re: &BigRational, im: &BigRational) -> Self {
                let cast = |q: &BigRational| -> $t {
                    <$t as FromPrimitive>::from_f64(q.to_f64().unwrap_or(f64::NAN))
                        .unwrap_or(<$t as Float>::nan())
                };
                Complex::new(cast(re), cast(im))
            }

            fn from_c64(value: Complex64) -> Option<Self> {
                Some(Complex::new(value.re as $t, value.im as $t))
            }

            fn conj(&self) -> Self {
                Complex::conj(self)
            }

            fn to_c64(&self) -> Complex64 {
                Complex64::new(self.re as f64, self.im as f64)
            }

            fn is_real(&self) -> bool {
                self.im == 0.0
            }

            fn real_sign(&self) -> Option<Ordering> {
                if self.im != 0.0 {
                    return None;
                }
                self.re.partial_cmp(&0.0)
            }

            fn exp_i(theta: &Self) -> Option<Self> {
                Some((Self::i() * *theta).exp())
            }

            fn sqrt_real(&self) -> Option<Self> {
                (self.im == 0.0 && self.re >= 0.0).then(|| Complex::new(self.re.sqrt(), 0.0))
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

/// Parses `"a"`, `"a/b"` or a decimal literal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().ok()?;
        let den: BigInt = den.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(BigRational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.trim_start().starts_with('-');
        let digits = frac.len() as u32;
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        let frac: BigInt = if frac.is_empty() { BigInt::zero() } else { frac.parse().ok()? };
        let scale = BigInt::from(10u32).pow(digits);
        let mag = int.abs() * &scale + frac;
        let num = if negative { -mag } else { mag };
        return Some(BigRational::new(num, scale));
    }
    text.parse::<BigInt>().ok().map(BigRational::from_integer)
}

pub fn rational(num: i64, den: i64) -> BigRational {
    ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rational_basics() {
        let i = GaussRat::i();
        assert_eq!(i.clone() * i.clone(), -GaussRat::one());
        assert_eq!(i.conj(), -i);
        let half = GaussRat::from_ratio(1, 2);
        assert_eq!(half.exact_parts().unwrap(), ("1/2".to_string(), "0/1".to_string()));
        assert_eq!(half.real_sign(), Some(Ordering::Greater));
        assert_eq!(GaussRat::i().real_sign(), None);
    }

    #[test]
    fn float_scalars_share_the_trait() {
        fn square<S: Scalar>(x: S) -> S {
            x.clone() * x
        }
        assert_eq!(square(Complex64::i()), Complex64::new(-1.0, 0.0));
        assert_eq!(square(Complex::<f32>::from_ratio(1, 2)), Complex::new(0.25f32, 0.0));
        assert!(GaussRat::from_c64(Complex64::new(1.0, 0.0)).is_none());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/6"), Some(rational(1, 2)));
        assert_eq!(parse_rational("-7"), Some(rational(-7, 1)));
        assert_eq!(parse_rational("0.25"), Some(rational(1, 4)));
        assert_eq!(parse_rational("-1.5"), Some(rational(-3, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }
}
