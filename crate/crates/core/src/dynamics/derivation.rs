//! The derivation δ_X and its exponential e^{βδ_X}.
//!
//! For a Hamiltonian field δ_X = ad(H). For a closed one-form α the same
//! commutator series is evaluated with every derivative of the local
//! Hamiltonian read off from α, so the result is global even when α is not
//! exact. With the pinned conventions δ_X = −iλ L_X + O(λ²).

use crate::backends::{PhaseFunction, VectorFieldSpec};
use crate::error::KmsResult;
use crate::moyal::{bidiff_from_jets, FunctionJet, Jet, OneFormJet, StarContext};
use crate::scalar::Scalar;
use crate::series::FormalSeries;

enum HJet<C> {
    Function(FunctionJet<C>),
    OneForm(OneFormJet<C>),
}

impl<C: PhaseFunction> Jet<C> for HJet<C> {
    fn jet(&mut self, multi: &[u16]) -> KmsResult<C> {
        match self {
            Self::Function(j) => j.jet(multi),
            Self::OneForm(j) => j.jet(multi),
        }
    }
}

fn h_jet<C: PhaseFunction>(x: &VectorFieldSpec<C>) -> HJet<C> {
    match x {
        VectorFieldSpec::Hamiltonian(h) => HJet::Function(FunctionJet::new(h)),
        VectorFieldSpec::ClosedOneForm(alpha) => HJet::OneForm(OneFormJet::new(alpha)),
    }
}

/// `D_r f = M_r(H, f) − M_r(f, H)` for `r ≥ 1`, with H supplied through `x`.
/// `r` may exceed the context order by one (the numeric Heisenberg stepper
/// needs `D_{K+1}`).
pub fn commutator_term<C: PhaseFunction>(ctx: &StarContext<C>, x: &VectorFieldSpec<C>, r: usize, f: &C) -> KmsResult<C> {
    assert!(r >= 1, "the zeroth commutator term vanishes identically");
    ctx.check_function(f)?;
    x.check_compatible(f)?;
    let mut h = h_jet(x);
    let mut fj = FunctionJet::new(f);
    let n = ctx.dof();
    let left = bidiff_from_jets(r, n, ctx.kappa(), ctx.prototype(), &mut h, &mut fj)?;
    let right = bidiff_from_jets(r, n, ctx.kappa(), ctx.prototype(), &mut fj, &mut h)?;
    Ok(left.sub(&right))
}

/// `δ_X f` truncated at the smaller of the context and series orders.
pub fn delta_x<C: PhaseFunction>(
    ctx: &StarContext<C>,
    x: &VectorFieldSpec<C>,
    f: &FormalSeries<C>,
) -> KmsResult<FormalSeries<C>> {
    ctx.check(f)?;
    x.check_compatible(f.prototype())?;
    let order = ctx.order().min(f.truncation_order());
    let n = ctx.dof();
    let mut out = vec![ctx.prototype().zero_like(); order + 1];
    let mut h = h_jet(x);
    for (s, fs) in f.coeffs()[..=order].iter().enumerate() {
        if fs.is_zero() {
            continue;
        }
        let mut fj = FunctionJet::new(fs);
        for r in 1..=order - s {
            let left = bidiff_from_jets(r, n, ctx.kappa(), ctx.prototype(), &mut h, &mut fj)?;
            let right = bidiff_from_jets(r, n, ctx.kappa(), ctx.prototype(), &mut fj, &mut h)?;
            out[r + s] = out[r + s].add(&left.sub(&right));
        }
    }
    FormalSeries::new(out)
}

/// `e^{βδ_X} f = Σ_r β^r δ_X^r f / r!`; the sum stops after K terms because
/// δ_X raises the λ-order.
pub fn exp_delta_x<C: PhaseFunction>(
    ctx: &StarContext<C>,
    x: &VectorFieldSpec<C>,
    beta: &C::Scalar,
    f: &FormalSeries<C>,
) -> KmsResult<FormalSeries<C>> {
    ctx.check(f)?;
    let mut out = f.clone();
    if num_traits::Zero::is_zero(beta) {
        return Ok(out);
    }
    let mut term = f.clone();
    for r in 1..=ctx.order().min(f.truncation_order()) {
        term = delta_x(ctx, x, &term)?.scale(&(beta.clone() * C::Scalar::from_ratio(1, r as i64)));
        if term.is_zero() {
            break;
        }
        out = out.add(&term);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::fourier::Fourier;
    use crate::backends::lie_derivative;
    use crate::backends::poly::Poly;
    use crate::scalar::GaussRat;
    use crate::series::Coefficient;
    use num_traits::One;

    type P = Poly<GaussRat>;

    fn r(n: i64, d: i64) -> GaussRat {
        GaussRat::from_ratio(n, d)
    }

    #[test]
    fn hamiltonian_derivation_is_ad() {
        let ctx = StarContext::new(&P::zero(1, 0), 4).unwrap();
        let x = VectorFieldSpec::hamiltonian(P::q(1, 0));
        let p = ctx.lift(&P::p(1, 0)).unwrap();
        let d = delta_x(&ctx, &x, &p).unwrap();
        assert_eq!(d, FormalSeries::monomial(P::constant(1, 0, GaussRat::i()), 1, 4));
        assert_eq!(d, ctx.ad(&ctx.lift(&P::q(1, 0)).unwrap(), &p).unwrap());
        assert!(delta_x(&ctx, &x, &ctx.one()).unwrap().is_zero());
    }

    #[test]
    fn cubic_hamiltonian_matches_ad() {
        let ctx = StarContext::new(&P::zero(1, 0), 5).unwrap();
        let (q, p) = (P::q(1, 0), P::p(1, 0));
        let h = q.mul(&q).mul(&q).add(&p.mul(&p).mul(&q));
        let f = ctx.lift(&q.mul(&p).mul(&p).mul(&p).add(&q.mul(&q))).unwrap();
        let x = VectorFieldSpec::hamiltonian(h.clone());
        assert_eq!(delta_x(&ctx, &x, &f).unwrap(), ctx.ad(&ctx.lift(&h).unwrap(), &f).unwrap());
        // the same derivation through the one-form dH
        let via_alpha = VectorFieldSpec::closed_one_form(x.one_form()).unwrap();
        assert_eq!(delta_x(&ctx, &via_alpha, &f).unwrap(), delta_x(&ctx, &x, &f).unwrap());
    }

    #[test]
    fn leading_term_is_minus_i_lie_derivative() {
        let band = 6;
        let ctx = StarContext::new(&Fourier::<GaussRat>::zero(band), 3).unwrap();
        // X = ∂_θ₁: α = dθ₂, non-exact
        let x = VectorFieldSpec::closed_one_form(vec![Fourier::zero(band), Fourier::constant(band, GaussRat::one())])
            .unwrap();
        let f = Fourier::cos(band, (1, 2)).add(&Fourier::mode(band, (0, 1), r(3, 1)));
        let d = delta_x(&ctx, &x, &ctx.lift(&f).unwrap()).unwrap();
        assert!(d.coeff(0).unwrap().is_zero());
        let expected = lie_derivative(&x, &f).unwrap().scale(&(-GaussRat::i()));
        assert_eq!(d.coeff(1).unwrap(), &expected);
        // constant α: no higher jets, so δ_X = −iλ L_X exactly
        assert!(d.coeff(2).unwrap().is_zero() && d.coeff(3).unwrap().is_zero());
    }

    #[test]
    fn exponential_of_derivation() {
        let ctx = StarContext::new(&P::zero(1, 0), 4).unwrap();
        let x = VectorFieldSpec::hamiltonian(P::q(1, 0));
        let p = ctx.lift(&P::p(1, 0)).unwrap();
        let beta = r(2, 3);
        let e = exp_delta_x(&ctx, &x, &beta, &p).unwrap();
        // e^{βδ} p = p + iλβ
        let expected = p.add(&FormalSeries::monomial(P::constant(1, 0, GaussRat::i() * beta), 1, 4));
        assert_eq!(e, expected);
        assert_eq!(exp_delta_x(&ctx, &x, &r(0, 1), &p).unwrap(), p);
    }

    #[test]
    fn derivation_and_automorphism_properties_on_torus() {
        let band = 10;
        let ctx = StarContext::new(&Fourier::<GaussRat>::zero(band), 3).unwrap();
        // α = dθ₂ + d(cos θ₁) is closed but not exact
        let alpha = vec![Fourier::sin(band, (1, 0)).neg(), Fourier::constant(band, GaussRat::one())];
        let x = VectorFieldSpec::closed_one_form(alpha).unwrap();
        let f = ctx.lift(&Fourier::mode(band, (1, -1), r(1, 2)).add(&Fourier::cos(band, (0, 1)))).unwrap();
        let g = ctx.lift(&Fourier::sin(band, (1, 1))).unwrap();
        let lhs = delta_x(&ctx, &x, &ctx.star(&f, &g).unwrap()).unwrap();
        let rhs = ctx
            .star(&delta_x(&ctx, &x, &f).unwrap(), &g)
            .unwrap()
            .add(&ctx.star(&f, &delta_x(&ctx, &x, &g).unwrap()).unwrap());
        assert_eq!(lhs, rhs);

        let beta = r(1, 2);
        let e = |h: &FormalSeries<Fourier<GaussRat>>| exp_delta_x(&ctx, &x, &beta, h).unwrap();
        assert_eq!(e(&ctx.star(&f, &g).unwrap()), ctx.star(&e(&f), &e(&g)).unwrap());
        // group law e^{βδ} e^{β′δ} = e^{(β+β′)δ}
        let composed = exp_delta_x(&ctx, &x, &r(1, 3), &e(&f)).unwrap();
        assert_eq!(composed, exp_delta_x(&ctx, &x, &r(5, 6), &f).unwrap());
    }
}
