//! Primitives of zero-mean functions on the line that decay at both ends.
//!
//! A function φ with ∫φ = 0 and rapid decay has the primitive
//! h(x) = ∫_{−∞}^x φ, which then decays at +∞ as well. Two routes: an exact
//! one for `P(x)·e^{c x²}` (the primitive is again of that form) and a
//! sampled one by cumulative trapezoidal quadrature.

use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;

/// `Σ_m coeffs[m] x^m · e^{weight·x²}` with `weight < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoly1d<S> {
    pub coeffs: Vec<S>,
    pub weight: S,
}

impl<S: Scalar> GaussianPoly1d<S> {
    pub fn new(coeffs: Vec<S>, weight: S) -> KmsResult<Self> {
        if weight.real_sign() != Some(std::cmp::Ordering::Less) {
            return Err(KmsError::Domain("Gaussian weight must be real and negative".into()));
        }
        let mut out = Self { coeffs, weight };
        out.trim();
        Ok(out)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(num_traits::Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn derivative(&self) -> Self {
        // (P e^{cx²})' = (P' + 2c x P) e^{cx²}
        let len = self.coeffs.len() + 1;
        let mut out = vec![S::zero(); len];
        for (m, c) in self.coeffs.iter().enumerate() {
            if m > 0 {
                out[m - 1] = out[m - 1].clone() + c.clone() * S::from_int(m as i64);
            }
            out[m + 1] = out[m + 1].clone() + c.clone() * self.weight.clone() * S::from_int(2);
        }
        let mut d = Self { coeffs: out, weight: self.weight.clone() };
        d.trim();
        d
    }

    pub fn eval(&self, x: f64) -> f64 {
        let poly: f64 = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_c64().re);
        poly * (self.weight.to_c64().re * x * x).exp()
    }

    /// Exact primitive `Q e^{cx²}` with `Q' + 2cxQ = P`; fails unless ∫φ = 0.
    pub fn compact_primitive(&self) -> KmsResult<Self> {
        let p = &self.coeffs;
        if p.is_empty() {
            return Ok(Self { coeffs: Vec::new(), weight: self.weight.clone() });
        }
        let two_c = self.weight.clone() * S::from_int(2);
        let deg_q = p.len().saturating_sub(2);
        let mut q = vec![S::zero(); deg_q + 2];
        // Match x^m coefficients from the top: (m+1) Q_{m+1} + 2c Q_{m−1} = P_m.
        for m in (1..p.len()).rev() {
            let upper = q.get(m + 1).cloned().unwrap_or_else(S::zero) * S::from_int(m as i64 + 1);
            q[m - 1] = (p[m].clone() - upper) / two_c.clone();
        }
        let defect = p[0].clone() - q.get(1).cloned().unwrap_or_else(S::zero);
        if !num_traits::Zero::is_zero(&defect) {
            return Err(KmsError::Precondition(format!(
                "∫φ ≠ 0 (constant-term defect {defect:?}); no decaying primitive exists"
            )));
        }
        let mut out = Self { coeffs: q, weight: self.weight.clone() };
        out.trim();
        Ok(out)
    }
}

/// Cumulative trapezoidal primitive of samples `values` on the grid `xs`,
/// starting from zero at `xs[0]`. The total integral must be below `tol`
/// (relative to `∫|φ|`) or the primitive would not decay on the right.
pub fn compact_primitive_sampled(xs: &[f64], values: &[f64], tol: f64) -> KmsResult<Vec<f64>> {
    if xs.len() != values.len() || xs.len() < 2 {
        return Err(KmsError::Precondition("need at least two samples on a matching grid".into()));
    }
    let mut h = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut mass = 0.0;
    h.push(0.0);
    for k in 1..xs.len() {
        let dx = xs[k] - xs[k - 1];
        acc += 0.5 * dx * (values[k] + values[k - 1]);
        mass += 0.5 * dx * (values[k].abs() + values[k - 1].abs());
        h.push(acc);
    }
    if acc.abs() > tol * mass.max(f64::MIN_POSITIVE) {
        return Err(KmsError::Precondition(format!("∫φ = {acc:e} is not zero within tolerance")));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussRat;

    fn r(n: i64) -> GaussRat {
        GaussRat::from_int(n)
    }

    #[test]
    fn zero_has_zero_primitive() {
        let phi = GaussianPoly1d::new(vec![], r(-1)).unwrap();
        assert!(phi.compact_primitive().unwrap().coeffs.is_empty());
    }

    #[test]
    fn odd_gaussian_moment() {
        // φ = 2x e^{−x²} has primitive −e^{−x²}
        let phi = GaussianPoly1d::new(vec![r(0), r(2)], r(-1)).unwrap();
        let h = phi.compact_primitive().unwrap();
        assert_eq!(h.coeffs, vec![r(-1)]);
        assert_eq!(h.derivative(), phi);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let phi = GaussianPoly1d::new(vec![r(1)], r(-1)).unwrap();
        assert!(matches!(phi.compact_primitive(), Err(KmsError::Precondition(_))));
    }

    #[test]
    fn higher_zero_mean_input() {
        // (1 − 2x²) e^{−x²} = (x e^{−x²})'
        let phi = GaussianPoly1d::new(vec![r(1), r(0), r(-2)], r(-1)).unwrap();
        let h = phi.compact_primitive().unwrap();
        assert_eq!(h.coeffs, vec![r(0), r(1)]);
    }

    #[test]
    fn sampled_primitive_of_gaussian_derivative() {
        let n = 4001;
        let xs: Vec<f64> = (0..n).map(|k| -10.0 + 20.0 * k as f64 / (n - 1) as f64).collect();
        let phi: Vec<f64> = xs.iter().map(|x| -2.0 * x * (-x * x).exp()).collect();
        let h = compact_primitive_sampled(&xs, &phi, 1e-10).unwrap();
        for (x, hv) in xs.iter().zip(&h) {
            assert!((hv - (-x * x).exp()).abs() < 1e-4, "x = {x}");
        }
        assert!(h[0].abs() < 1e-12 && h[n - 1].abs() < 1e-10);
        let shifted: Vec<f64> = phi.iter().map(|v| v + 1e-3).collect();
        assert!(compact_primitive_sampled(&xs, &shifted, 1e-10).is_err());
    }
}
