//! Truncated formal power series in the deformation parameter λ.
//!
//! A [`FormalSeries`] of truncation order `K` always stores exactly `K + 1`
//! coefficients; orders above `K` are discarded silently, which is how the
//! formal calculus treats them. λ is real, so conjugation acts on the
//! coefficients only.

use std::cmp::Ordering;
use std::fmt::Debug;

use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;

/// A coefficient algebra: commutative, associative, with a unit and a
/// pointwise complex conjugation.
///
/// Binary operations assume [`Coefficient::compatible`] operands and panic
/// otherwise; the checked entry points on [`FormalSeries`] and the star
/// context validate compatibility first and report a context mismatch.
pub trait Coefficient: Clone + Debug + PartialEq + Send + Sync {
    type Scalar: Scalar;

    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn compatible(&self, other: &Self) -> bool;
    /// Short description of the context, used in mismatch diagnostics.
    fn context_label(&self) -> String;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, s: &Self::Scalar) -> Self;
    fn conj(&self) -> Self;
    /// Largest coefficient magnitude, for tolerance checks on float backends.
    fn max_abs(&self) -> f64;
}

impl<S: Scalar> Coefficient for S {
    type Scalar = S;

    fn zero_like(&self) -> Self {
        S::zero()
    }
    fn one_like(&self) -> Self {
        S::one()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn compatible(&self, _other: &Self) -> bool {
        true
    }
    fn context_label(&self) -> String {
        "scalar".into()
    }
    fn add(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
    fn sub(&self, other: &Self) -> Self {
        self.clone() - other.clone()
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn mul(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
    fn scale(&self, s: &S) -> Self {
        self.clone() * s.clone()
    }
    fn conj(&self) -> Self {
        Scalar::conj(self)
    }
    fn max_abs(&self) -> f64 {
        self.magnitude()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingSign {
    Positive,
    Zero,
    Negative,
}

/// `Σ_{r ≤ K} λ^r a_r` over a coefficient algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSeries<C> {
    coeffs: Vec<C>,
}

/// Series over plain scalars: elements of C[[λ]] truncated at `K`.
pub type ScalarSeries<S> = FormalSeries<S>;

impl<C: Coefficient> FormalSeries<C> {
    /// Builds a series from its coefficients; the truncation order is `len - 1`.
    pub fn new(coeffs: Vec<C>) -> KmsResult<Self> {
        let Some(first) = coeffs.first() else {
            return Err(KmsError::Precondition("a series needs at least the λ⁰ coefficient".into()));
        };
        if let Some(bad) = coeffs.iter().find(|c| !first.compatible(c)) {
            return Err(KmsError::ContextMismatch(format!(
                "series mixes {} and {}",
                first.context_label(),
                bad.context_label()
            )));
        }
        Ok(Self { coeffs })
    }

    /// Pads or truncates `coeffs` to exactly `order + 1` entries.
    pub fn from_prefix(mut coeffs: Vec<C>, order: usize) -> KmsResult<Self> {
        let proto = coeffs
            .first()
            .cloned()
            .ok_or_else(|| KmsError::Precondition("empty coefficient list".into()))?;
        coeffs.truncate(order + 1);
        while coeffs.len() < order + 1 {
            coeffs.push(proto.zero_like());
        }
        Self::new(coeffs)
    }

    /// `c` at λ⁰, zeros above.
    pub fn constant(c: C, order: usize) -> Self {
        let zero = c.zero_like();
        let mut coeffs = Vec::with_capacity(order + 1);
        coeffs.push(c);
        coeffs.extend(std::iter::repeat_n(zero, order));
        Self { coeffs }
    }

    /// `c · λ^power`; zero when `power > order`.
    pub fn monomial(c: C, power: usize, order: usize) -> Self {
        let mut coeffs = vec![c.zero_like(); order + 1];
        if power <= order {
            coeffs[power] = c;
        }
        Self { coeffs }
    }

    pub fn zero_like(&self) -> Self {
        Self { coeffs: vec![self.coeffs[0].zero_like(); self.coeffs.len()] }
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C> {
        self.coeffs
    }

    /// Coefficient of λ^r, or `None` above the truncation order.
    pub fn coeff(&self, r: usize) -> Option<&C> {
        self.coeffs.get(r)
    }

    pub fn prototype(&self) -> &C {
        &self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Coefficient::is_zero)
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.coeffs[0].compatible(&other.coeffs[0])
    }

    pub fn check_compatible(&self, other: &Self) -> KmsResult<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(KmsError::ContextMismatch(format!(
                "{} vs {}",
                self.coeffs[0].context_label(),
                other.coeffs[0].context_label()
            )))
        }
    }

    /// Drops every order above `order`; never extends.
    pub fn truncate(&self, order: usize) -> Self {
        let keep = order.min(self.truncation_order()) + 1;
        Self { coeffs: self.coeffs[..keep].to_vec() }
    }

    /// Re-expresses the series at truncation `order`, padding with zeros.
    pub fn with_order(&self, order: usize) -> Self {
        let mut out = self.truncate(order);
        while out.coeffs.len() < order + 1 {
            out.coeffs.push(self.coeffs[0].zero_like());
        }
        out
    }

    pub fn arith(&self, other: &Self, op: SeriesOp) -> KmsResult<Self> {
        self.check_compatible(other)?;
        Ok(match op {
            SeriesOp::Add => self.add(other),
            SeriesOp::Sub => self.sub(other),
            SeriesOp::Mul => self.mul(other),
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, C::add)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, C::sub)
    }

    pub fn neg(&self) -> Self {
        self.map(C::neg)
    }

    /// Cauchy product truncated at the smaller of the two orders.
    pub fn mul(&self, other: &Self) -> Self {
        let order = self.truncation_order().min(other.truncation_order());
        let coeffs = (0..=order)
            .map(|r| {
                (0..=r).fold(self.coeffs[0].zero_like(), |acc, s| {
                    acc.add(&self.coeffs[s].mul(&other.coeffs[r - s]))
                })
            })
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, s: &C::Scalar) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Multiplication by an element of C[[λ]] (module structure over the scalars).
    pub fn scale_series(&self, s: &ScalarSeries<C::Scalar>) -> Self {
        let order = self.truncation_order().min(s.truncation_order());
        let coeffs = (0..=order)
            .map(|r| {
                (0..=r).fold(self.coeffs[0].zero_like(), |acc, j| {
                    acc.add(&self.coeffs[r - j].scale(&s.coeffs[j]))
                })
            })
            .collect();
        Self { coeffs }
    }

    /// Coefficient-wise complex conjugation; λ is real.
    pub fn conjugate(&self) -> Self {
        self.map(C::conj)
    }

    /// Multiplies by λ^shift, dropping orders that fall above the truncation.
    pub fn shift(&self, shift: usize) -> Self {
        let zero = self.coeffs[0].zero_like();
        let len = self.coeffs.len();
        let coeffs = (0..len)
            .map(|r| if r >= shift { self.coeffs[r - shift].clone() } else { zero.clone() })
            .collect();
        Self { coeffs }
    }

    /// Smallest order with a nonzero coefficient; `None` for the zero series.
    pub fn lowest_order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(C::max_abs).fold(0.0, f64::max)
    }

    pub fn map<D, F: FnMut(&C) -> D>(&self, f: F) -> FormalSeries<D> {
        FormalSeries { coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn try_map<D, F: FnMut(&C) -> KmsResult<D>>(&self, f: F) -> KmsResult<FormalSeries<D>> {
        Ok(FormalSeries { coeffs: self.coeffs.iter().map(f).collect::<KmsResult<_>>()? })
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&C, &C) -> C) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect();
        Self { coeffs }
    }
}

impl<S: Scalar> FormalSeries<S> {
    /// Sign in the ring ordering of R[[λ]]: decided by the lowest nonzero coefficient.
    pub fn ring_sign(&self) -> KmsResult<RingSign> {
        if let Some(bad) = self.coeffs.iter().position(|c| !c.is_real()) {
            return Err(KmsError::Domain(format!(
                "ring ordering needs real coefficients; λ^{bad} coefficient is {:?}",
                self.coeffs[bad]
            )));
        }
        Ok(match self.lowest_order() {
            None => RingSign::Zero,
            Some(k) => match self.coeffs[k].real_sign() {
                Some(Ordering::Greater) => RingSign::Positive,
                Some(Ordering::Less) => RingSign::Negative,
                _ => RingSign::Zero,
            },
        })
    }

    /// Ring sign after treating parts of magnitude `≤ tol` as zero; for float series.
    pub fn ring_sign_with_tolerance(&self, tol: f64) -> KmsResult<RingSign> {
        let cleaned: Vec<S> = self
            .coeffs
            .iter()
            .map(|c| {
                let z = c.to_c64();
                let re = if z.re.abs() <= tol { 0.0 } else { z.re };
                let im = if z.im.abs() <= tol { 0.0 } else { z.im };
                if S::EXACT {
                    c.clone()
                } else {
                    S::from_c64(num_complex::Complex64::new(re, im)).unwrap_or_else(|| c.clone())
                }
            })
            .collect();
        FormalSeries { coeffs: cleaned }.ring_sign()
    }
}

#[cfg(test)]
mod tests {
    use num_traits::Zero;
    use super::*;
    use crate::scalar::GaussRat;
    use proptest::prelude::*;

    fn s(values: &[i64]) -> ScalarSeries<GaussRat> {
        FormalSeries::new(values.iter().map(|&v| GaussRat::from_int(v)).collect()).unwrap()
    }

    #[test]
    fn telescoping_product() {
        // (1 + λf)(1 − λf) = 1 − λ²f² with f = 3
        let a = s(&[1, 3, 0]);
        let b = s(&[1, -3, 0]);
        assert_eq!(a.mul(&b), s(&[1, 0, -9]));
        assert!(a.mul(&a.zero_like()).is_zero());
    }

    #[test]
    fn truncation_takes_minimum_order() {
        let a = s(&[1, 1, 1, 1]);
        let b = s(&[1, 1]);
        assert_eq!(a.mul(&b).truncation_order(), 1);
        assert_eq!(a.add(&b).truncation_order(), 1);
    }

    #[test]
    fn ring_sign_examples() {
        assert_eq!(s(&[0, 0, 0]).ring_sign().unwrap(), RingSign::Zero);
        assert_eq!(s(&[0, 0, 3, -5]).ring_sign().unwrap(), RingSign::Positive);
        assert_eq!(s(&[-2, 100]).ring_sign().unwrap(), RingSign::Negative);
        let complex = FormalSeries::new(vec![GaussRat::i()]).unwrap();
        assert!(matches!(complex.ring_sign(), Err(KmsError::Domain(_))));
    }

    #[test]
    fn conjugation_leaves_lambda_alone() {
        let a = FormalSeries::new(vec![GaussRat::zero(), GaussRat::i()]).unwrap();
        assert_eq!(a.conjugate().coeff(1).unwrap(), &-GaussRat::i());
        assert_eq!(a.conjugate().conjugate(), a);
    }

    #[test]
    fn lowest_order_and_shift() {
        assert_eq!(s(&[0, 0, 5]).lowest_order(), Some(2));
        assert_eq!(s(&[0, 0]).lowest_order(), None);
        assert_eq!(s(&[1, 2, 3]).shift(1), s(&[0, 1, 2]));
    }

    fn series_strategy(order: usize) -> impl Strategy<Value = ScalarSeries<GaussRat>> {
        proptest::collection::vec((-20i64..20, -20i64..20, 1i64..5), order + 1).prop_map(|cs| {
            FormalSeries::new(
                cs.into_iter()
                    .map(|(re, im, den)| GaussRat::from_ratio(re, den) + GaussRat::i() * GaussRat::from_ratio(im, den))
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms_hold_exactly(a in series_strategy(6), b in series_strategy(6), c in series_strategy(6)) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        }

        #[test]
        fn truncation_commutes_with_mul(a in series_strategy(6), b in series_strategy(6), k in 0usize..6) {
            prop_assert_eq!(a.truncate(k).mul(&b.truncate(k)), a.mul(&b).truncate(k));
        }

        #[test]
        fn conjugation_is_an_additive_involution(a in series_strategy(4), b in series_strategy(4)) {
            prop_assert_eq!(a.conjugate().conjugate(), a.clone());
            prop_assert_eq!(a.add(&b).conjugate(), a.conjugate().add(&b.conjugate()));
        }

        #[test]
        fn squares_are_nonnegative(re in proptest::collection::vec((-9i64..9, 1i64..4), 5)) {
            let a = FormalSeries::new(re.into_iter().map(|(n, d)| GaussRat::from_ratio(n, d)).collect()).unwrap();
            let sign = a.mul(&a).ring_sign().unwrap();
            prop_assert!(sign == RingSign::Positive || sign == RingSign::Zero);
        }
    }
}
