//! Traces, formal KMS functionals and the checks they must pass.
//!
//! A functional maps an observable series to a scalar series, order by order.
//! Integrals come out as Gaussian rationals times a fixed power of 2π, so
//! values carry that power alongside the series ([`Evaluation`]).
//!
//! The static condition is checked in the form
//! `μ(f * g) = μ(g * e^{−βδ_X} f)`. With `δ_X = ad(H)` and the inner identity
//! `e^{βδ_X} f = Exp(βH) * f * Exp(−βH)`, this is the condition satisfied by
//! `μ = tr(Exp(−βH) * ·)`. Its first order is
//! `μ₀({f, g} − β g L_X f) = 0`. The twist with the opposite exponent is
//! available through [`kms_residual_with_twist`] for comparison.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::backends::exppoly::ExpPoly;
use crate::backends::poly::Poly;
use crate::backends::{lie_derivative, poisson_bracket, Integral, PhaseFunction, VectorFieldSpec};
use crate::dynamics::flow::{complexify_exact, evolve_exact, AffinePullback};
use crate::dynamics::{exp_delta_x, StarExponential};
use crate::error::{KmsError, KmsResult};
use crate::moyal::StarContext;
use crate::scalar::Scalar;
use crate::series::{Coefficient, FormalSeries, RingSign, ScalarSeries};

/// `series · (2π)^two_pi_power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<S: Scalar> {
    pub series: ScalarSeries<S>,
    pub two_pi_power: u32,
}

impl<S: Scalar> Evaluation<S> {
    pub fn new(series: ScalarSeries<S>, two_pi_power: u32) -> Self {
        Self { series, two_pi_power }
    }

    pub fn order(&self) -> usize {
        self.series.truncation_order()
    }

    fn check(&self, other: &Self) -> KmsResult<()> {
        if self.two_pi_power != other.two_pi_power {
            return Err(KmsError::ContextMismatch(format!(
                "values in units of (2π)^{} and (2π)^{}",
                self.two_pi_power, other.two_pi_power
            )));
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> KmsResult<Self> {
        self.check(other)?;
        Ok(Self::new(self.series.sub(&other.series), self.two_pi_power))
    }

    pub fn add(&self, other: &Self) -> KmsResult<Self> {
        self.check(other)?;
        Ok(Self::new(self.series.add(&other.series), self.two_pi_power))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.series.conjugate(), self.two_pi_power)
    }

    pub fn is_zero(&self) -> bool {
        self.series.is_zero()
    }

    /// Largest coefficient magnitude, including the 2π factor.
    pub fn max_abs(&self) -> f64 {
        self.to_c64().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_c64(&self) -> Vec<Complex64> {
        let unit = (2.0 * std::f64::consts::PI).powi(self.two_pi_power as i32);
        self.series.coeffs().iter().map(|c| c.to_c64() * unit).collect()
    }

    /// The ring-ordering sign (2π > 0 does not affect it).
    pub fn ring_sign(&self) -> KmsResult<RingSign> {
        if S::EXACT {
            self.series.ring_sign()
        } else {
            self.series.ring_sign_with_tolerance(1e-12 * self.series.max_abs().max(1.0))
        }
    }
}

impl<S: Scalar> fmt::Display for Evaluation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .series
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| format!("λ^{k}: {}", crate::backends::poly::format_scalar(c)))
            .collect();
        write!(f, "(2π)^{} · [{}]", self.two_pi_power, parts.join(", "))
    }
}

type Rule<C> = dyn Fn(&FormalSeries<C>) -> KmsResult<Evaluation<<C as Coefficient>::Scalar>> + Send + Sync;

/// A C[[λ]]-linear functional `μ = Σ λ^r μ_r`, as an evaluation rule.
#[derive(Clone)]
pub struct FormalFunctional<C: PhaseFunction> {
    name: String,
    rule: Arc<Rule<C>>,
}

impl<C: PhaseFunction> fmt::Debug for FormalFunctional<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormalFunctional({})", self.name)
    }
}

impl<C: PhaseFunction + 'static> FormalFunctional<C> {
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(&FormalSeries<C>) -> KmsResult<Evaluation<C::Scalar>> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), rule: Arc::new(rule) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, f: &FormalSeries<C>) -> KmsResult<Evaluation<C::Scalar>> {
        (self.rule)(f)
    }

    /// `f ↦ μ(conj f)` conjugated, i.e. `conj ∘ μ ∘ conj`.
    pub fn conjugated(&self) -> Self {
        let inner = self.clone();
        Self::new(format!("conj∘{}∘conj", self.name), move |f| Ok(inner.eval(&f.conjugate())?.conj()))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(format!("{} + {}", self.name, other.name), move |f| a.eval(f)?.add(&b.eval(f)?))
    }

    /// Rescales so that `μ(reference) = 1`; needs a nonzero λ⁰ value.
    pub fn normalized(&self, reference: &FormalSeries<C>) -> KmsResult<Self> {
        let norm = self.eval(reference)?;
        let inverse = series_inverse(&norm.series)?;
        let inner = self.clone();
        Ok(Self::new(format!("{} / {}(ref)", self.name, self.name), move |f| {
            let v = inner.eval(f)?;
            Ok(Evaluation::new(v.series.mul(&inverse.truncate(v.order().min(inverse.truncation_order()))), 0))
        }))
    }
}

fn series_inverse<S: Scalar>(a: &ScalarSeries<S>) -> KmsResult<ScalarSeries<S>> {
    let c = a.coeffs();
    if num_traits::Zero::is_zero(&c[0]) {
        return Err(KmsError::Domain("normalization reference has zero λ⁰ value".into()));
    }
    let inv0 = S::one() / c[0].clone();
    let mut out = vec![inv0.clone()];
    for k in 1..c.len() {
        let s = (1..=k).fold(S::zero(), |acc, j| acc + c[j].clone() * out[k - j].clone());
        out.push(-(s * inv0.clone()));
    }
    FormalSeries::new(out)
}

/// `tr(f) = Σ λ^r ∫ f_r Ω`, for a strongly closed product such as Moyal.
pub fn trace_functional<C: PhaseFunction + 'static>(ctx: &StarContext<C>) -> FormalFunctional<C> {
    let ctx = ctx.clone();
    FormalFunctional::new("tr", move |f| {
        ctx.check(f)?;
        let integrals: Vec<Integral<C::Scalar>> = f.coeffs().iter().map(|c| c.integrate()).collect::<KmsResult<_>>()?;
        let power = integrals[0].two_pi_power;
        FormalSeries::new(integrals.into_iter().map(|i| i.value).collect()).map(|s| Evaluation::new(s, power))
    })
}

/// `μ(f) = tr(Exp(−βH) * f)`; checks that the Boltzmann factor is integrable.
pub fn kms_construct<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    h: &ExpPoly<S>,
    beta: S,
) -> KmsResult<FormalFunctional<ExpPoly<S>>> {
    let boltzmann = StarExponential::new(ctx, h, -beta)?.series();
    boltzmann
        .coeff(0)
        .expect("λ⁰ coefficient")
        .integrate()
        .map_err(|e| KmsError::Domain(format!("Boltzmann factor e^{{−βH}} is not integrable: {e}")))?;
    left_multiplied(ctx, "tr(Exp(−βH) * ·)", boltzmann)
}

fn left_multiplied<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    name: &str,
    factor: FormalSeries<ExpPoly<S>>,
) -> KmsResult<FormalFunctional<ExpPoly<S>>> {
    let tr = trace_functional(ctx);
    let ctx = ctx.clone();
    Ok(FormalFunctional::new(name, move |f| tr.eval(&ctx.star(&factor, f)?)))
}

/// `μ̃(f) = μ(Exp(βH) * f)`; a trace iff μ is KMS.
pub fn tilde_transform<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    mu: &FormalFunctional<ExpPoly<S>>,
    h: &ExpPoly<S>,
    beta: S,
) -> KmsResult<FormalFunctional<ExpPoly<S>>> {
    let factor = StarExponential::new(ctx, h, beta)?.series();
    let (mu, ctx) = (mu.clone(), ctx.clone());
    Ok(FormalFunctional::new(format!("{}(Exp(βH) * ·)", mu.name()), move |f| mu.eval(&ctx.star(&factor, f)?)))
}

/// `μ(f * g) − μ(g * e^{twist·δ_X} f)`.
pub fn kms_residual_with_twist<C: PhaseFunction + 'static>(
    ctx: &StarContext<C>,
    mu: &FormalFunctional<C>,
    x: &VectorFieldSpec<C>,
    twist: &C::Scalar,
    f: &FormalSeries<C>,
    g: &FormalSeries<C>,
) -> KmsResult<Evaluation<C::Scalar>> {
    let lhs = mu.eval(&ctx.star(f, g)?)?;
    let twisted = exp_delta_x(ctx, x, twist, f)?;
    let rhs = mu.eval(&ctx.star(g, &twisted)?)?;
    lhs.sub(&rhs)
}

/// Static KMS residual `μ(f * g) − μ(g * e^{−βδ_X} f)`.
pub fn static_kms_residual<C: PhaseFunction + 'static>(
    ctx: &StarContext<C>,
    mu: &FormalFunctional<C>,
    x: &VectorFieldSpec<C>,
    beta: &C::Scalar,
    f: &FormalSeries<C>,
    g: &FormalSeries<C>,
) -> KmsResult<Evaluation<C::Scalar>> {
    kms_residual_with_twist(ctx, mu, x, &-beta.clone(), f, g)
}

/// Dynamic KMS residual `μ(A_t f * g) − μ(g * A_{t+iλβ} f)` on the exact flow path.
pub fn dynamic_kms_residual<C: AffinePullback + 'static>(
    ctx: &StarContext<C>,
    mu: &FormalFunctional<C>,
    x: &VectorFieldSpec<C>,
    t: &C::Scalar,
    beta: &C::Scalar,
    f: &FormalSeries<C>,
    g: &FormalSeries<C>,
) -> KmsResult<Evaluation<C::Scalar>> {
    let at_f = evolve_exact(ctx, x, t, f)?;
    let lhs = mu.eval(&ctx.star(&at_f, g)?)?;
    let complex_f = complexify_exact(ctx, x, t, beta, f)?;
    let rhs = mu.eval(&ctx.star(g, &complex_f)?)?;
    lhs.sub(&rhs)
}

/// An order-zero functional `μ₀(f) = ∫ ρ f Ω` given by its density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunctional<C> {
    pub density: C,
}

impl<C: PhaseFunction> DensityFunctional<C> {
    pub fn new(density: C) -> Self {
        Self { density }
    }

    pub fn eval(&self, f: &C) -> KmsResult<Integral<C::Scalar>> {
        self.density.mul(f).integrate()
    }
}

/// `μ₀ = e^{−βH} ∫`.
pub fn classical_kms_density<S: Scalar>(h: &Poly<S>, beta: &S) -> DensityFunctional<ExpPoly<S>> {
    DensityFunctional::new(ExpPoly::term(Poly::one(h.dof(), h.params()), h.scale(&-beta.clone())))
}

/// `μ₀({f, g} − β g L_X f)`.
pub fn classical_kms_residual<C: PhaseFunction>(
    mu0: &DensityFunctional<C>,
    x: &VectorFieldSpec<C>,
    beta: &C::Scalar,
    f: &C,
    g: &C,
) -> KmsResult<Integral<C::Scalar>> {
    let transport = g.mul(&lie_derivative(x, f)?).scale(beta);
    mu0.eval(&poisson_bracket(f, g).sub(&transport))
}

/// `μ̃₀(f) = μ₀(e^{βH} f)`.
pub fn tilde_transform_classical<S: Scalar>(
    mu0: &DensityFunctional<ExpPoly<S>>,
    h: &Poly<S>,
    beta: &S,
) -> DensityFunctional<ExpPoly<S>> {
    let boost = ExpPoly::term(Poly::one(h.dof(), h.params()), h.scale(beta));
    DensityFunctional::new(mu0.density.mul(&boost))
}

/// Reality and positivity evidence for a realified trace.
#[derive(Debug, Clone)]
pub struct PositivityReport<S: Scalar> {
    /// `tr(f̄) − conj(tr f)` per probe.
    pub reality_residuals: Vec<Evaluation<S>>,
    /// `tr(f̄ * f)` per probe, after the global sign normalization.
    pub squares: Vec<Evaluation<S>>,
    pub signs: Vec<RingSign>,
    /// True if the functional had to be replaced by its negative.
    pub flipped: bool,
}

impl<S: Scalar> PositivityReport<S> {
    pub fn reality_exact(&self) -> bool {
        self.reality_residuals.iter().all(Evaluation::is_zero)
    }

    pub fn all_positive(&self) -> bool {
        self.signs.iter().all(|s| *s == RingSign::Positive)
    }

    /// No nonzero probe has `tr(f̄ * f) = 0`: evidence for a trivial Gel'fand ideal.
    pub fn gelfand_trivial(&self) -> bool {
        !self.signs.contains(&RingSign::Zero)
    }
}

/// `tr = tr′ + conj ∘ tr′ ∘ conj`, then reality residuals and ring signs of
/// `tr(f̄ * f)`. At most one global sign flip is applied.
pub fn realify_and_positivity<C: PhaseFunction + 'static>(
    ctx: &StarContext<C>,
    tr_prime: &FormalFunctional<C>,
    probes: &[FormalSeries<C>],
) -> KmsResult<(FormalFunctional<C>, PositivityReport<C::Scalar>)> {
    let tr = tr_prime.plus(&tr_prime.conjugated());
    let mut reality_residuals = Vec::with_capacity(probes.len());
    let mut squares = Vec::with_capacity(probes.len());
    for f in probes {
        reality_residuals.push(tr.eval(&f.conjugate())?.sub(&tr.eval(f)?.conj())?);
        squares.push(tr.eval(&ctx.star(&f.conjugate(), f)?)?);
    }
    let mut signs: Vec<RingSign> = squares.iter().map(Evaluation::ring_sign).collect::<KmsResult<_>>()?;
    let flipped = signs.first() == Some(&RingSign::Negative);
    if flipped {
        for s in &mut signs {
            *s = match s {
                RingSign::Positive => RingSign::Negative,
                RingSign::Negative => RingSign::Positive,
                RingSign::Zero => RingSign::Zero,
            };
        }
        for sq in &mut squares {
            sq.series = sq.series.neg();
        }
    }
    let tr = if flipped {
        let inner = tr.clone();
        FormalFunctional::new(format!("−({})", inner.name()), move |f| {
            let v = inner.eval(f)?;
            Ok(Evaluation::new(v.series.neg(), v.two_pi_power))
        })
    } else {
        tr
    };
    Ok((tr, PositivityReport { reality_residuals, squares, signs, flipped }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussRat;

    type P = Poly<GaussRat>;
    type E = ExpPoly<GaussRat>;

    fn r(n: i64, d: i64) -> GaussRat {
        GaussRat::from_ratio(n, d)
    }

    fn ctx(order: usize) -> StarContext<E> {
        StarContext::new(&E::zero(1, 0), order).unwrap()
    }

    fn gauss(p: P, w: GaussRat) -> E {
        E::gaussian(p, w)
    }

    #[test]
    fn trace_of_gaussian() {
        let c = ctx(2);
        let tr = trace_functional(&c);
        let v = tr.eval(&c.lift(&gauss(P::one(1, 0), r(-1, 1))).unwrap()).unwrap();
        assert_eq!(v.two_pi_power, 1);
        assert_eq!(v.series.coeffs(), &[r(1, 1), r(0, 1), r(0, 1)]);
        // ∫ q² e^{−H₀} = 2π
        let q2 = P::q(1, 0).mul(&P::q(1, 0));
        assert_eq!(tr.eval(&c.lift(&gauss(q2, r(-1, 1))).unwrap()).unwrap().series.coeffs()[0], r(1, 1));
        assert!(tr.eval(&c.lift(&E::from(P::q(1, 0))).unwrap()).is_err());
    }

    #[test]
    fn trace_is_linear_over_scalar_series() {
        let c = ctx(3);
        let tr = trace_functional(&c);
        let f = c.lift(&gauss(P::q(1, 0).mul(&P::q(1, 0)), r(-1, 2))).unwrap();
        let g = c.lift(&gauss(P::p(1, 0).add(&P::one(1, 0)), r(-1, 1))).unwrap();
        let coeff = FormalSeries::new(vec![r(2, 1), GaussRat::i(), r(0, 1), r(-3, 1)]).unwrap();
        let lhs = tr.eval(&f.scale_series(&coeff).add(&g)).unwrap();
        let rhs = tr.eval(&f).unwrap().series.mul(&coeff).add(&tr.eval(&g).unwrap().series);
        assert_eq!(lhs.series, rhs);
        let shifted = tr.eval(&f.shift(2)).unwrap();
        assert_eq!(shifted.series, tr.eval(&f).unwrap().series.shift(2));
    }

    #[test]
    fn constructed_state_is_kms_and_the_bare_trace_is_not() {
        let c = ctx(3);
        let h = E::from(P::harmonic(1, 0));
        let beta = r(1, 1);
        let x = VectorFieldSpec::hamiltonian(h.clone());
        let mu = kms_construct(&c, &h, beta.clone()).unwrap();
        let f = c.lift(&gauss(P::q(1, 0), r(-1, 2))).unwrap();
        let g = c.lift(&gauss(P::p(1, 0), r(-1, 2))).unwrap();
        assert!(static_kms_residual(&c, &mu, &x, &beta, &f, &g).unwrap().is_zero());
        let tr = trace_functional(&c);
        assert!(!static_kms_residual(&c, &tr, &x, &beta, &f, &g).unwrap().is_zero());
        // β = 0: the trace condition itself
        assert!(static_kms_residual(&c, &tr, &x, &r(0, 1), &f, &g).unwrap().is_zero());
        // the opposite twist does not hold for the constructed state
        assert!(!kms_residual_with_twist(&c, &mu, &x, &beta, &f, &g).unwrap().is_zero());
    }

    #[test]
    fn tilde_of_kms_state_is_the_trace() {
        let c = ctx(3);
        let h = E::from(P::harmonic(1, 0));
        let mu = kms_construct(&c, &h, r(1, 2)).unwrap();
        let tilde = tilde_transform(&c, &mu, &h, r(1, 2)).unwrap();
        let tr = trace_functional(&c);
        let f = c.lift(&gauss(P::q(1, 0).mul(&P::p(1, 0)).add(&P::one(1, 0)), r(-1, 1))).unwrap();
        assert_eq!(tilde.eval(&f).unwrap(), tr.eval(&f).unwrap());
    }

    #[test]
    fn classical_state_and_its_transform() {
        let h = P::harmonic(1, 0).scale(&r(3, 2));
        let beta = r(1, 2);
        let x = VectorFieldSpec::hamiltonian(E::from(h.clone()));
        let mu0 = classical_kms_density(&h, &beta);
        let f = gauss(P::q(1, 0).mul(&P::q(1, 0)).add(&P::p(1, 0)), r(-1, 2));
        let g = gauss(P::p(1, 0).mul(&P::q(1, 0)), r(-1, 4));
        assert!(classical_kms_residual(&mu0, &x, &beta, &f, &g).unwrap().value.is_zero());
        let flat = tilde_transform_classical(&mu0, &h, &beta);
        let bracket = poisson_bracket(&f, &g);
        assert!(flat.eval(&bracket).unwrap().value.is_zero());
    }

    #[test]
    fn positivity_of_the_realified_trace() {
        let c = ctx(2);
        let tr = trace_functional(&c);
        let probe = c
            .lift(&gauss(P::q(1, 0).add(&P::p(1, 0).scale(&GaussRat::i())), r(-1, 2)))
            .unwrap();
        let (_, report) = realify_and_positivity(&c, &tr, std::slice::from_ref(&probe)).unwrap();
        assert!(report.reality_exact());
        assert!(report.all_positive() && !report.flipped);
        // λ⁰: 2·∫(q² + p²) e^{−H₀} = 2 · 4π, i.e. 4 in units of 2π
        assert_eq!(report.squares[0].series.coeffs()[0], r(4, 1));
    }

    #[test]
    fn normalization_against_a_reference() {
        let c = ctx(2);
        let h = E::from(P::harmonic(1, 0));
        let mu = kms_construct(&c, &h, r(1, 1)).unwrap();
        let reference = c.lift(&E::from(P::one(1, 0))).unwrap();
        let normed = mu.normalized(&reference).unwrap();
        let v = normed.eval(&reference).unwrap();
        assert_eq!(v.series.coeffs(), &[r(1, 1), r(0, 1), r(0, 1)]);
    }
}
