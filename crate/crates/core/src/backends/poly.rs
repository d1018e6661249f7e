//! Sparse multivariate polynomials on R^{2n}, optionally with trailing
//! parameter variables (such as a symbolic inverse temperature) that are
//! never differentiated by phase-space operators.
//!
//! Variable layout: `q_1..q_n` occupy indices `0..n`, `p_1..p_n` occupy
//! `n..2n`, parameters follow at `2n..2n + params`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::backends::{Integral, PhaseFunction};
use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;
use crate::series::Coefficient;

pub type Monomial = Vec<u16>;

#[derive(Clone, PartialEq)]
pub struct Poly<S> {
    dof: usize,
    params: usize,
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(dof: usize, params: usize) -> Self {
        Self { dof, params, terms: BTreeMap::new() }
    }

    pub fn constant(dof: usize, params: usize, c: S) -> Self {
        let mut out = Self::zero(dof, params);
        out.insert(vec![0; 2 * dof + params], c);
        out
    }

    pub fn one(dof: usize, params: usize) -> Self {
        Self::constant(dof, params, S::one())
    }

    /// The coordinate function with index `var` in the layout above.
    pub fn var(dof: usize, params: usize, var: usize) -> Self {
        let nvars = 2 * dof + params;
        assert!(var < nvars, "variable index {var} out of range for {nvars} variables");
        let mut mono = vec![0; nvars];
        mono[var] = 1;
        let mut out = Self::zero(dof, params);
        out.insert(mono, S::one());
        out
    }

    pub fn q(dof: usize, i: usize) -> Self {
        Self::var(dof, 0, i)
    }

    pub fn p(dof: usize, i: usize) -> Self {
        Self::var(dof, 0, dof + i)
    }

    /// H₀ = ½ Σ (q_i² + p_i²).
    pub fn harmonic(dof: usize, params: usize) -> Self {
        let half = S::from_ratio(1, 2);
        let mut out = Self::zero(dof, params);
        for axis in 0..2 * dof {
            let mut mono = vec![0; 2 * dof + params];
            mono[axis] = 2;
            out.insert(mono, half.clone());
        }
        out
    }

    pub fn from_terms(dof: usize, params: usize, terms: impl IntoIterator<Item = (Monomial, S)>) -> Self {
        let mut out = Self::zero(dof, params);
        for (mono, c) in terms {
            assert_eq!(mono.len(), 2 * dof + params, "monomial length does not match variable count");
            out.insert(mono, c);
        }
        out
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn nvars(&self) -> usize {
        2 * self.dof + self.params
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, mono: &[u16]) -> S {
        self.terms.get(mono).cloned().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coefficient(&vec![0; self.nvars()])
    }

    /// Total degree in the phase-space variables, `None` for the zero polynomial.
    pub fn phase_degree(&self) -> Option<u32> {
        let n2 = 2 * self.dof;
        self.terms.keys().map(|m| m[..n2].iter().map(|&e| e as u32).sum()).max()
    }

    pub fn depends_on_params(&self) -> bool {
        let n2 = 2 * self.dof;
        self.terms.keys().any(|m| m[n2..].iter().any(|&e| e > 0))
    }

    fn insert(&mut self, mono: Monomial, c: S) {
        if num_traits::Zero::is_zero(&c) {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if num_traits::Zero::is_zero(&sum) {
                    self.terms.remove(&mono);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.dof == other.dof && self.params == other.params
    }

    fn assert_layout(&self, other: &Self) {
        assert!(
            self.same_layout(other),
            "polynomial layout mismatch: {} vs {}",
            self.layout_label(),
            other.layout_label()
        );
    }

    fn layout_label(&self) -> String {
        format!("poly(n={}, params={})", self.dof, self.params)
    }

    /// Partial derivative with respect to any variable (phase or parameter).
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dof, self.params);
        for (mono, c) in &self.terms {
            let e = mono[var];
            if e == 0 {
                continue;
            }
            let mut m = mono.clone();
            m[var] -= 1;
            out.insert(m, c.clone() * S::from_int(e as i64));
        }
        out
    }

    /// Antiderivative in `var` vanishing at `var = 0`.
    pub fn antiderivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dof, self.params);
        for (mono, c) in &self.terms {
            let mut m = mono.clone();
            m[var] += 1;
            let k = m[var] as i64;
            out.insert(m, c.clone() * S::from_ratio(1, k));
        }
        out
    }

    /// Substitutes the value `value` for variable `var`.
    pub fn substitute(&self, var: usize, value: &S) -> Self {
        let mut out = Self::zero(self.dof, self.params);
        for (mono, c) in &self.terms {
            let mut m = mono.clone();
            let e = m[var];
            m[var] = 0;
            out.insert(m, c.clone() * value.pow(e as u32));
        }
        out
    }

    /// Embeds into a layout with `extra` more trailing parameter variables.
    pub fn with_extra_params(&self, extra: usize) -> Self {
        let mut out = Self::zero(self.dof, self.params + extra);
        for (mono, c) in &self.terms {
            let mut m = mono.clone();
            m.extend(std::iter::repeat_n(0, extra));
            out.insert(m, c.clone());
        }
        out
    }

    /// Drops the last `count` parameter variables, which must not occur.
    pub fn without_params(&self, count: usize) -> KmsResult<Self> {
        let keep = self.nvars() - count;
        let mut out = Self::zero(self.dof, self.params - count);
        for (mono, c) in &self.terms {
            if mono[keep..].iter().any(|&e| e > 0) {
                return Err(KmsError::Domain(format!("polynomial still depends on parameters: {self}")));
            }
            out.insert(mono[..keep].to_vec(), c.clone());
        }
        Ok(out)
    }

    /// Polynomial substitution `x_j ↦ images[j]` for every phase variable.
    pub fn compose_phase(&self, images: &[Self]) -> Self {
        let n2 = 2 * self.dof;
        assert_eq!(images.len(), n2);
        let mut powers: Vec<Vec<Self>> = images.iter().map(|img| vec![Self::one(self.dof, self.params), img.clone()]).collect();
        let mut out = Self::zero(self.dof, self.params);
        for (mono, c) in &self.terms {
            let mut param_mono = vec![0; self.nvars()];
            param_mono[n2..].copy_from_slice(&mono[n2..]);
            let mut term = Self::zero(self.dof, self.params);
            term.insert(param_mono, c.clone());
            for (var, &e) in mono[..n2].iter().enumerate() {
                while powers[var].len() <= e as usize {
                    let next = powers[var].last().unwrap().mul(&images[var]);
                    powers[var].push(next);
                }
                term = term.mul(&powers[var][e as usize]);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero(self.dof, self.params);
        for (mono, c) in &self.terms {
            out.insert(mono.clone(), f(c));
        }
        out
    }

    /// Numerical value at `point` (length `nvars`).
    pub fn eval_c64(&self, point: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(mono, c)| {
                mono.iter()
                    .zip(point)
                    .fold(c.to_c64(), |acc, (&e, &x)| acc * x.powu(e as u32))
            })
            .sum()
    }

    pub fn poisson(&self, other: &Self) -> Self {
        crate::backends::poisson_bracket(self, other)
    }
}

impl<S: Scalar> Coefficient for Poly<S> {
    type Scalar = S;

    fn zero_like(&self) -> Self {
        Self::zero(self.dof, self.params)
    }

    fn one_like(&self) -> Self {
        Self::one(self.dof, self.params)
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn compatible(&self, other: &Self) -> bool {
        self.same_layout(other)
    }

    fn context_label(&self) -> String {
        self.layout_label()
    }

    fn add(&self, other: &Self) -> Self {
        self.assert_layout(other);
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.insert(mono.clone(), c.clone());
        }
        out
    }

    fn neg(&self) -> Self {
        self.map_scalar(|c| -c.clone())
    }

    fn mul(&self, other: &Self) -> Self {
        self.assert_layout(other);
        let mut out = Self::zero(self.dof, self.params);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mono = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.insert(mono, ca.clone() * cb.clone());
            }
        }
        out
    }

    fn scale(&self, s: &S) -> Self {
        if num_traits::Zero::is_zero(s) {
            return self.zero_like();
        }
        self.map_scalar(|c| c.clone() * s.clone())
    }

    fn conj(&self) -> Self {
        self.map_scalar(Scalar::conj)
    }

    fn max_abs(&self) -> f64 {
        self.terms.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }
}

impl<S: Scalar> PhaseFunction for Poly<S> {
    fn dof(&self) -> usize {
        self.dof
    }

    fn partial(&self, axis: usize) -> Self {
        assert!(axis < 2 * self.dof, "phase axis {axis} out of range");
        self.derivative(axis)
    }

    fn canonical_pair(&self, i: usize) -> (Self, Self) {
        (Self::var(self.dof, self.params, i), Self::var(self.dof, self.params, self.dof + i))
    }

    fn integrate(&self) -> KmsResult<Integral<S>> {
        if self.is_empty() {
            return Ok(Integral { value: S::zero(), two_pi_power: self.dof as u32 });
        }
        Err(KmsError::Domain(format!("polynomial {self} is not integrable over R^{}", 2 * self.dof)))
    }
}

pub(crate) fn variable_name(dof: usize, var: usize) -> String {
    let index = |i: usize| if dof == 1 { String::new() } else { (i + 1).to_string() };
    if var < dof {
        format!("q{}", index(var))
    } else if var < 2 * dof {
        format!("p{}", index(var - dof))
    } else {
        format!("b{}", var - 2 * dof)
    }
}

pub(crate) fn format_scalar<S: Scalar>(c: &S) -> String {
    match c.exact_parts() {
        Some((re, im)) => {
            let strip = |s: String| s.strip_suffix("/1").map(str::to_string).unwrap_or(s);
            let (re, im) = (strip(re), strip(im));
            match (re.as_str(), im.as_str()) {
                (_, "0") => re,
                ("0", _) => format!("{im}*i"),
                _ => format!("({re} + {im}*i)"),
            }
        }
        None => {
            let z = c.to_c64();
            if z.im == 0.0 {
                format!("{}", z.re)
            } else {
                format!("({} + {}*i)", z.re, z.im)
            }
        }
    }
}

impl<S: Scalar> fmt::Display for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mono, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let vars: Vec<String> = mono
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(v, &e)| {
                    let name = variable_name(self.dof, v);
                    if e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{}", format_scalar(c))?;
            } else if c == &S::one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", format_scalar(c), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Debug for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{self}]")
    }
}
