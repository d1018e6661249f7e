//! Band-limited Fourier series on the torus T² with angles (θ₁, θ₂).
//!
//! Modes outside `|k_i| ≤ band` are dropped on construction and on
//! multiplication; the total magnitude of dropped coefficients is kept in
//! [`Fourier::leakage`] instead of raising an error.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::backends::poly::format_scalar;
use crate::backends::{Integral, PhaseFunction};
use crate::error::KmsResult;
use crate::scalar::Scalar;
use crate::series::Coefficient;

pub type WaveVector = (i32, i32);

#[derive(Clone)]
pub struct Fourier<S> {
    band: i32,
    modes: BTreeMap<WaveVector, S>,
    leakage: f64,
}

impl<S: Scalar> Fourier<S> {
    pub fn zero(band: i32) -> Self {
        assert!(band >= 0, "negative band");
        Self { band, modes: BTreeMap::new(), leakage: 0.0 }
    }

    pub fn constant(band: i32, c: S) -> Self {
        let mut out = Self::zero(band);
        out.insert((0, 0), c);
        out
    }

    /// `c · e^{i(k₁θ₁ + k₂θ₂)}`.
    pub fn mode(band: i32, k: WaveVector, c: S) -> Self {
        let mut out = Self::zero(band);
        out.insert(k, c);
        out
    }

    /// `cos(k·θ)`.
    pub fn cos(band: i32, k: WaveVector) -> Self {
        let half = S::from_ratio(1, 2);
        let mut out = Self::mode(band, k, half.clone());
        out.insert((-k.0, -k.1), half);
        out
    }

    /// `sin(k·θ) = (e^{ik·θ} − e^{−ik·θ}) / 2i`.
    pub fn sin(band: i32, k: WaveVector) -> Self {
        let coeff = S::one() / (S::from_int(2) * S::i());
        let mut out = Self::mode(band, k, coeff.clone());
        out.insert((-k.0, -k.1), -coeff);
        out
    }

    pub fn from_modes(band: i32, modes: impl IntoIterator<Item = (WaveVector, S)>) -> Self {
        let mut out = Self::zero(band);
        for (k, c) in modes {
            out.insert(k, c);
        }
        out
    }

    pub fn band(&self) -> i32 {
        self.band
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn modes(&self) -> impl Iterator<Item = (&WaveVector, &S)> {
        self.modes.iter()
    }

    pub fn coefficient(&self, k: WaveVector) -> S {
        self.modes.get(&k).cloned().unwrap_or_else(S::zero)
    }

    /// Largest `|k_i|` among nonzero modes.
    pub fn spectral_width(&self) -> i32 {
        self.modes.keys().map(|k| k.0.abs().max(k.1.abs())).max().unwrap_or(0)
    }

    pub fn in_band(&self, k: WaveVector) -> bool {
        k.0.abs() <= self.band && k.1.abs() <= self.band
    }

    fn insert(&mut self, k: WaveVector, c: S) {
        if num_traits::Zero::is_zero(&c) {
            return;
        }
        if !self.in_band(k) {
            self.leakage += c.magnitude();
            return;
        }
        match self.modes.get_mut(&k) {
            Some(existing) => {
                let sum = existing.clone() + c;
                if num_traits::Zero::is_zero(&sum) {
                    self.modes.remove(&k);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.modes.insert(k, c);
            }
        }
    }

    /// Same function re-expressed with another band (dropping modes if narrower).
    pub fn with_band(&self, band: i32) -> Self {
        let mut out = Self::zero(band);
        out.leakage = self.leakage;
        for (k, c) in &self.modes {
            out.insert(*k, c.clone());
        }
        out
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Fourier<T> {
        let mut out = Fourier::zero(self.band);
        out.leakage = self.leakage;
        for (k, c) in &self.modes {
            out.insert(*k, f(c));
        }
        out
    }

    pub fn eval(&self, theta: (f64, f64)) -> Complex64 {
        self.modes
            .iter()
            .map(|(k, c)| c.to_c64() * Complex64::from_polar(1.0, k.0 as f64 * theta.0 + k.1 as f64 * theta.1))
            .sum()
    }

    /// Values on the uniform `size × size` grid, row-major in θ₁ then θ₂.
    pub fn sample_grid(&self, size: usize) -> Vec<Complex64> {
        let h = 2.0 * PI / size as f64;
        let mut out = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                out.push(self.eval((a as f64 * h, b as f64 * h)));
            }
        }
        out
    }
}

impl<S: Scalar> PartialEq for Fourier<S> {
    fn eq(&self, other: &Self) -> bool {
        self.band == other.band && self.modes == other.modes
    }
}

impl<S: Scalar> Coefficient for Fourier<S> {
    type Scalar = S;

    fn zero_like(&self) -> Self {
        Self::zero(self.band)
    }

    fn one_like(&self) -> Self {
        Self::constant(self.band, S::one())
    }

    fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    fn compatible(&self, other: &Self) -> bool {
        self.band == other.band
    }

    fn context_label(&self) -> String {
        format!("fourier(T², band={})", self.band)
    }

    fn add(&self, other: &Self) -> Self {
        assert!(self.compatible(other), "Fourier band mismatch");
        let mut out = self.clone();
        out.leakage += other.leakage;
        for (k, c) in &other.modes {
            out.insert(*k, c.clone());
        }
        out
    }

    fn neg(&self) -> Self {
        self.map_scalar(|c| -c.clone())
    }

    fn mul(&self, other: &Self) -> Self {
        assert!(self.compatible(other), "Fourier band mismatch");
        let mut out = Self::zero(self.band);
        out.leakage = self.leakage + other.leakage;
        for (k, a) in &self.modes {
            for (l, b) in &other.modes {
                out.insert((k.0 + l.0, k.1 + l.1), a.clone() * b.clone());
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

    /// `conj(Σ c_k e^{ik·θ}) = Σ conj(c_{−k}) e^{ik·θ}`.
    fn conj(&self) -> Self {
        let mut out = Self::zero(self.band);
        out.leakage = self.leakage;
        for (k, c) in &self.modes {
            out.insert((-k.0, -k.1), c.conj());
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.modes.values().map(Scalar::magnitude).fold(0.0, f64::max)
    }
}

impl<S: Scalar> PhaseFunction for Fourier<S> {
    fn dof(&self) -> usize {
        1
    }

    /// Spectral derivative: mode `k` picks up `i k_axis`; exact within the band.
    fn partial(&self, axis: usize) -> Self {
        assert!(axis < 2, "T² has two axes");
        let mut out = Self::zero(self.band);
        out.leakage = self.leakage;
        for (k, c) in &self.modes {
            let factor = if axis == 0 { k.0 } else { k.1 };
            out.insert(*k, c.clone() * S::i() * S::from_int(factor as i64));
        }
        out
    }

    fn canonical_pair(&self, _i: usize) -> (Self, Self) {
        let band = self.band.max(1);
        (
            Self::mode(band, (1, 0), S::one()).with_band(self.band),
            Self::mode(band, (0, 1), S::one()).with_band(self.band),
        )
    }

    /// `∫_{T²} f dθ₁ dθ₂ = (2π)² · c₀`.
    fn integrate(&self) -> KmsResult<Integral<S>> {
        Ok(Integral { value: self.coefficient((0, 0)), two_pi_power: 2 })
    }
}

impl<S: Scalar> fmt::Debug for Fourier<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fourier[band={}; ", self.band)?;
        let parts: Vec<String> =
            self.modes.iter().map(|(k, c)| format!("{}·e({},{})", format_scalar(c), k.0, k.1)).collect();
        write!(f, "{}]", if parts.is_empty() { "0".to_string() } else { parts.join(" + ") })
    }
}
