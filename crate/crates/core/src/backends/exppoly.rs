//! Exponential polynomials `Σ_j P_j · exp(E_j)` on R^{2n}.
//!
//! Both prefactors and exponents are polynomials, so the ring is closed under
//! products and phase-space derivatives. Integration is exact when every
//! exponent is a negative Gaussian weight `Σ_i c_i (q_i² + p_i²) / 2`; the
//! result is a Gaussian rational times `(2π)^n`.

use std::fmt;

use num_complex::Complex64;

use crate::backends::poly::Poly;
use crate::backends::{Integral, PhaseFunction};
use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;
use crate::series::Coefficient;

#[derive(Clone)]
pub struct ExpTerm<S> {
    pub exponent: Poly<S>,
    pub prefactor: Poly<S>,
}

#[derive(Clone)]
pub struct ExpPoly<S> {
    dof: usize,
    params: usize,
    terms: Vec<ExpTerm<S>>,
}

impl<S: Scalar> ExpPoly<S> {
    pub fn zero(dof: usize, params: usize) -> Self {
        Self { dof, params, terms: Vec::new() }
    }

    /// `prefactor · exp(exponent)`.
    pub fn term(prefactor: Poly<S>, exponent: Poly<S>) -> Self {
        assert!(prefactor.compatible(&exponent), "prefactor and exponent layouts differ");
        let mut out = Self::zero(prefactor.dof(), prefactor.params());
        out.push(exponent, prefactor);
        out
    }

    /// `prefactor · exp(weight · H₀)`.
    pub fn gaussian(prefactor: Poly<S>, weight: S) -> Self {
        let h0 = Poly::harmonic(prefactor.dof(), prefactor.params()).scale(&weight);
        Self::term(prefactor, h0)
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn terms(&self) -> &[ExpTerm<S>] {
        &self.terms
    }

    /// The plain polynomial, if every term has a zero exponent.
    pub fn as_poly(&self) -> Option<Poly<S>> {
        match self.terms.as_slice() {
            [] => Some(Poly::zero(self.dof, self.params)),
            [t] if t.exponent.is_zero() => Some(t.prefactor.clone()),
            _ => None,
        }
    }

    fn push(&mut self, exponent: Poly<S>, prefactor: Poly<S>) {
        if prefactor.is_zero() {
            return;
        }
        if let Some(pos) = self.terms.iter().position(|t| t.exponent == exponent) {
            let merged = self.terms[pos].prefactor.add(&prefactor);
            if merged.is_zero() {
                self.terms.remove(pos);
            } else {
                self.terms[pos].prefactor = merged;
            }
        } else {
            self.terms.push(ExpTerm { exponent, prefactor });
        }
    }

    fn layout_label(&self) -> String {
        format!("exp-poly(n={}, params={})", self.dof, self.params)
    }

    fn assert_layout(&self, other: &Self) {
        assert!(
            self.compatible(other),
            "exp-polynomial layout mismatch: {} vs {}",
            self.layout_label(),
            other.layout_label()
        );
    }

    pub fn map_terms(&self, f: impl Fn(&ExpTerm<S>) -> ExpTerm<S>) -> Self {
        let mut out = Self::zero(self.dof, self.params);
        for t in &self.terms {
            let t = f(t);
            out.push(t.exponent, t.prefactor);
        }
        out
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> ExpPoly<T> {
        let mut out = ExpPoly::zero(self.dof, self.params);
        for t in &self.terms {
            out.push(t.exponent.map_scalar(&f), t.prefactor.map_scalar(&f));
        }
        out
    }

    /// Derivative in any variable, including parameters.
    pub fn derivative(&self, var: usize) -> Self {
        self.map_terms(|t| ExpTerm {
            exponent: t.exponent.clone(),
            prefactor: t.prefactor.derivative(var).add(&t.prefactor.mul(&t.exponent.derivative(var))),
        })
    }

    pub fn substitute(&self, var: usize, value: &S) -> Self {
        self.map_terms(|t| ExpTerm {
            exponent: t.exponent.substitute(var, value),
            prefactor: t.prefactor.substitute(var, value),
        })
    }

    pub fn without_params(&self, count: usize) -> KmsResult<Self> {
        let mut out = Self::zero(self.dof, self.params - count);
        for t in &self.terms {
            out.push(t.exponent.without_params(count)?, t.prefactor.without_params(count)?);
        }
        Ok(out)
    }

    pub fn with_extra_params(&self, extra: usize) -> Self {
        let mut out = Self::zero(self.dof, self.params + extra);
        for t in &self.terms {
            out.push(t.exponent.with_extra_params(extra), t.prefactor.with_extra_params(extra));
        }
        out
    }

    pub fn compose_phase(&self, images: &[Poly<S>]) -> Self {
        self.map_terms(|t| ExpTerm {
            exponent: t.exponent.compose_phase(images),
            prefactor: t.prefactor.compose_phase(images),
        })
    }

    pub fn eval_c64(&self, point: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.prefactor.eval_c64(point) * t.exponent.eval_c64(point).exp())
            .sum()
    }

    /// Per-pair Gaussian weights `c_i` of an exponent `Σ_i c_i (q_i² + p_i²)/2`,
    /// or a description of why the exponent has another shape.
    fn gaussian_weights(&self, exponent: &Poly<S>) -> Result<Vec<S>, String> {
        let n = self.dof;
        let mut weights = vec![S::zero(); n];
        let mut seen = vec![[false, false]; n];
        for (mono, c) in exponent.terms() {
            let degree: u32 = mono.iter().map(|&e| e as u32).sum();
            let squared = mono.iter().position(|&e| e == 2);
            match (degree, squared) {
                (2, Some(axis)) if axis < 2 * n => {
                    let pair = axis % n;
                    let slot = axis / n;
                    let c2 = c.clone() * S::from_int(2);
                    if seen[pair][1 - slot] && weights[pair] != c2 {
                        return Err(format!("unequal q/p weights in exponent {exponent}"));
                    }
                    seen[pair][slot] = true;
                    weights[pair] = c2;
                }
                _ => return Err(format!("exponent {exponent} is not a centred isotropic Gaussian weight")),
            }
        }
        for (pair, w) in weights.iter().enumerate() {
            if !(seen[pair][0] && seen[pair][1]) {
                return Err(format!("exponent {exponent} does not confine pair {}", pair + 1));
            }
            if w.real_sign() != Some(std::cmp::Ordering::Less) {
                return Err(format!("exponent {exponent} has non-negative weight on pair {}", pair + 1));
            }
        }
        Ok(weights)
    }
}

/// `(m − 1)!!` for even `m`, the Gaussian moment numerator.
fn double_factorial_odd(m: u16) -> i64 {
    let mut out = 1i64;
    let mut k = m as i64 - 1;
    while k > 1 {
        out *= k;
        k -= 2;
    }
    out
}

impl<S: Scalar> PartialEq for ExpPoly<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dof == other.dof
            && self.params == other.params
            && self.terms.len() == other.terms.len()
            && self.terms.iter().all(|t| {
                other
                    .terms
                    .iter()
                    .any(|u| u.exponent == t.exponent && u.prefactor == t.prefactor)
            })
    }
}

impl<S: Scalar> From<Poly<S>> for ExpPoly<S> {
    fn from(p: Poly<S>) -> Self {
        let exponent = p.zero_like();
        Self::term(p, exponent)
    }
}

impl<S: Scalar> Coefficient for ExpPoly<S> {
    type Scalar = S;

    fn zero_like(&self) -> Self {
        Self::zero(self.dof, self.params)
    }

    fn one_like(&self) -> Self {
        Poly::one(self.dof, self.params).into()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn compatible(&self, other: &Self) -> bool {
        self.dof == other.dof && self.params == other.params
    }

    fn context_label(&self) -> String {
        self.layout_label()
    }

    fn add(&self, other: &Self) -> Self {
        self.assert_layout(other);
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.exponent.clone(), t.prefactor.clone());
        }
        out
    }

    fn neg(&self) -> Self {
        self.map_terms(|t| ExpTerm { exponent: t.exponent.clone(), prefactor: t.prefactor.neg() })
    }

    fn mul(&self, other: &Self) -> Self {
        self.assert_layout(other);
        let mut out = Self::zero(self.dof, self.params);
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.exponent.add(&b.exponent), a.prefactor.mul(&b.prefactor));
            }
        }
        out
    }

    fn scale(&self, s: &S) -> Self {
        self.map_terms(|t| ExpTerm { exponent: t.exponent.clone(), prefactor: t.prefactor.scale(s) })
    }

    fn conj(&self) -> Self {
        self.map_terms(|t| ExpTerm { exponent: t.exponent.conj(), prefactor: t.prefactor.conj() })
    }

    fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.prefactor.max_abs()).fold(0.0, f64::max)
    }
}

impl<S: Scalar> PhaseFunction for ExpPoly<S> {
    fn dof(&self) -> usize {
        self.dof
    }

    fn partial(&self, axis: usize) -> Self {
        assert!(axis < 2 * self.dof, "phase axis {axis} out of range");
        self.derivative(axis)
    }

    fn canonical_pair(&self, i: usize) -> (Self, Self) {
        (
            Poly::var(self.dof, self.params, i).into(),
            Poly::var(self.dof, self.params, self.dof + i).into(),
        )
    }

    /// Closed-form Gaussian moments:
    /// `∫ q^{2a} p^{2b} e^{c(q²+p²)/2} dq dp = 2π (2a−1)!! (2b−1)!! (−c)^{−1−a−b}`.
    fn integrate(&self) -> KmsResult<Integral<S>> {
        let n = self.dof;
        let mut total = S::zero();
        for (index, t) in self.terms.iter().enumerate() {
            let weights = self
                .gaussian_weights(&t.exponent)
                .map_err(|why| KmsError::Domain(format!("term {index} ({}) is not integrable: {why}", t.prefactor)))?;
            if t.prefactor.depends_on_params() {
                return Err(KmsError::Domain(format!("term {index} prefactor depends on parameters")));
            }
            for (mono, c) in t.prefactor.terms() {
                let mut value = c.clone();
                for (pair, weight) in weights.iter().enumerate() {
                    let (a, b) = (mono[pair], mono[n + pair]);
                    if a % 2 == 1 || b % 2 == 1 {
                        value = S::zero();
                        break;
                    }
                    let moment = S::from_int(double_factorial_odd(a) * double_factorial_odd(b));
                    let scale = S::one() / (-weight.clone()).pow(1 + (a / 2 + b / 2) as u32);
                    value = value * moment * scale;
                }
                total = total + value;
            }
        }
        Ok(Integral { value: total, two_pi_power: n as u32 })
    }
}

impl<S: Scalar> fmt::Display for ExpPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if t.exponent.is_zero() {
                write!(f, "({})", t.prefactor)?;
            } else {
                write!(f, "({})*exp({})", t.prefactor, t.exponent)?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Debug for ExpPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExpPoly[{self}]")
    }
}
