//! The algebra against independent constructions.

use formal_kms::dynamics::StarExponential;
use formal_kms::probes::{probe_set, random_exppoly, random_poly};
use formal_kms::states::trace_functional;
use formal_kms::{Coefficient, ExactExpPoly, ExactPoly, GaussRat, PhaseFunction, Poly, Scalar, StarContext};
use proptest::prelude::*;

type P = ExactPoly;

fn r(n: i64, d: i64) -> GaussRat {
    GaussRat::from_ratio(n, d)
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn d_times(f: &P, var: usize, times: usize) -> P {
    (0..times).fold(f.clone(), |g, _| g.derivative(var))
}

/// `exp(c λ ∂_q ∂_p)` on a λ-series of polynomials.
fn reorder(series: &[P], c: &GaussRat, order: usize) -> Vec<P> {
    let mut out = vec![P::zero(1, 0); order + 1];
    for (a, f) in series.iter().enumerate() {
        let mut term = f.clone();
        for j in 0..=order - a {
            let coef = c.pow(j as u32) * r(1, factorial(j));
            out[a + j] = out[a + j].add(&term.scale(&coef));
            term = term.derivative(0).derivative(1);
        }
    }
    out
}

/// Composition of standard-ordered symbols (all Q left of all P) with
/// `[Q, P] = iλ`: `f ∘ g = Σ_j (−iλ)^j / j! ∂_p^j f ∂_q^j g`.
fn standard_product(f: &[P], g: &[P], order: usize) -> Vec<P> {
    let mut out = vec![P::zero(1, 0); order + 1];
    let minus_i = -GaussRat::i();
    for (a, fa) in f.iter().enumerate() {
        for (b, gb) in g.iter().enumerate() {
            if a + b > order {
                continue;
            }
            for j in 0..=order - a - b {
                let coef = minus_i.pow(j as u32) * r(1, factorial(j));
                let term = d_times(fa, 1, j).mul(&d_times(gb, 0, j)).scale(&coef);
                out[a + b + j] = out[a + b + j].add(&term);
            }
        }
    }
    out
}

/// Weyl symbols are standard symbols conjugated by `exp(−(iλ/2) ∂_q ∂_p)`.
fn weyl_oracle(f: &P, g: &P, order: usize) -> Vec<P> {
    let to_std = -GaussRat::i() * r(1, 2);
    let fs = reorder(std::slice::from_ref(f), &to_std, order);
    let gs = reorder(std::slice::from_ref(g), &to_std, order);
    reorder(&standard_product(&fs, &gs, order), &(-to_std), order)
}

fn poly_strategy() -> impl Strategy<Value = P> {
    proptest::collection::vec((0u16..4, 0u16..4, -6i64..6, -6i64..6, 1i64..4), 0..6).prop_map(|terms| {
        terms.into_iter().fold(P::zero(1, 0), |acc, (a, b, re, im, den)| {
            acc.add(&Poly::from_terms(1, 0, [(vec![a, b], GaussRat::new(r(re, den).re, r(im, den).re))]))
        })
    })
}

#[test]
fn star_product_matches_operator_ordering_on_probes() {
    let ctx = StarContext::new(&P::zero(1, 0), 6).unwrap();
    let probes = probe_set(99, 12, |rng| random_poly(rng, 1, 4));
    for pair in probes.windows(2) {
        let ours = ctx.star(&ctx.lift(&pair[0]).unwrap(), &ctx.lift(&pair[1]).unwrap()).unwrap();
        assert_eq!(ours.coeffs(), weyl_oracle(&pair[0], &pair[1], 6).as_slice());
    }
}

#[test]
fn textbook_products() {
    let ctx = StarContext::new(&P::zero(1, 0), 4).unwrap();
    let (q, p) = (P::q(1, 0), P::p(1, 0));
    let q2 = q.mul(&q);
    let p2 = p.mul(&p);
    // q² * p² = q²p² + 2iλ qp − λ²/2
    let prod = ctx.star(&ctx.lift(&q2).unwrap(), &ctx.lift(&p2).unwrap()).unwrap();
    assert_eq!(prod.coeff(0).unwrap(), &q2.mul(&p2));
    assert_eq!(prod.coeff(1).unwrap(), &q.mul(&p).scale(&(GaussRat::i() * r(2, 1))));
    assert_eq!(prod.coeff(2).unwrap(), &P::constant(1, 0, r(-1, 2)));
    assert!(prod.coeff(3).unwrap().is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn star_product_matches_operator_ordering(f in poly_strategy(), g in poly_strategy()) {
        let ctx = StarContext::new(&P::zero(1, 0), 6).unwrap();
        let ours = ctx.star(&ctx.lift(&f).unwrap(), &ctx.lift(&g).unwrap()).unwrap();
        let oracle = weyl_oracle(&f, &g, 6);
        prop_assert_eq!(ours.coeffs(), oracle.as_slice());
    }

    #[test]
    fn star_product_is_associative(f in poly_strategy(), g in poly_strategy(), h in poly_strategy()) {
        let ctx = StarContext::new(&P::zero(1, 0), 6).unwrap();
        let (f, g, h) = (ctx.lift(&f).unwrap(), ctx.lift(&g).unwrap(), ctx.lift(&h).unwrap());
        prop_assert!(ctx.check_associativity(&f, &g, &h).unwrap().is_zero());
        prop_assert!(ctx.check_hermitian(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn first_order_is_half_the_bracket(f in poly_strategy(), g in poly_strategy()) {
        let ctx = StarContext::new(&P::zero(1, 0), 2).unwrap();
        let c = ctx.commutator(&ctx.lift(&f).unwrap(), &ctx.lift(&g).unwrap()).unwrap();
        prop_assert!(c.coeff(0).unwrap().is_zero());
        let bracket = formal_kms::poisson_bracket(&f, &g).scale(&GaussRat::i());
        prop_assert_eq!(c.coeff(1).unwrap(), &bracket);
    }

    #[test]
    fn trace_is_cyclic(seed in 0u64..1000) {
        let ctx = StarContext::new(&ExactExpPoly::zero(1, 0), 3).unwrap();
        let fs = probe_set(seed, 2, |rng| random_exppoly(rng, 1, 2));
        let tr = trace_functional(&ctx);
        let (f, g) = (ctx.lift(&fs[0]).unwrap(), ctx.lift(&fs[1]).unwrap());
        prop_assert!(tr.eval(&ctx.commutator(&f, &g).unwrap()).unwrap().is_zero());
    }
}

/// `∫ q^{2a} p^{2b} e^{wH₀} dq dp = 2π (2a−1)!! (2b−1)!! / (−w)^{a+b+1}`.
#[test]
fn gaussian_moments() {
    let double_factorial = |n: i64| (1..=n).rev().step_by(2).product::<i64>().max(1);
    for (num, den) in [(-1, 1), (-1, 2), (-3, 2)] {
        let w = r(num, den);
        for (a, b) in [(0u16, 0u16), (1, 0), (2, 1), (0, 3)] {
            let f = ExactExpPoly::gaussian(Poly::from_terms(1, 0, [(vec![2 * a, 2 * b], r(1, 1))]), w.clone());
            let integral = f.integrate().unwrap();
            let expected = r(double_factorial(2 * a as i64 - 1) * double_factorial(2 * b as i64 - 1), 1)
                / (-w.clone()).pow(u32::from(a + b) + 1);
            assert_eq!(integral.two_pi_power, 1);
            assert_eq!(integral.value, expected, "a = {a}, b = {b}, w = {num}/{den}");
            // odd moments vanish
            let odd = ExactExpPoly::gaussian(Poly::from_terms(1, 0, [(vec![2 * a + 1, 2 * b], r(1, 1))]), w.clone());
            assert!(odd.integrate().unwrap().value.is_zero());
        }
    }
}

/// The oscillator's λ² correction against the Taylor series of
/// `d/dβ F = H₀ * F` at a few points.
#[test]
fn oscillator_exponential_against_taylor() {
    let ctx = StarContext::new(&ExactExpPoly::zero(1, 0), 2).unwrap();
    let pctx = StarContext::new(&P::zero(1, 0), 2).unwrap();
    let h = pctx.lift(&P::harmonic(1, 0)).unwrap();
    let mut power = pctx.one();
    let mut taylor = Vec::new();
    for m in 0..36 {
        taylor.push(power.coeff(2).unwrap().clone());
        power = pctx.star(&h, &power).unwrap().scale(&r(1, m + 1));
    }
    let beta = r(3, 4);
    let exp = StarExponential::new(&ctx, &ExactExpPoly::from(P::harmonic(1, 0)), beta.clone()).unwrap();
    let lambda2 = exp.series().coeff(2).unwrap().clone();
    for (q, p) in [(0.3, -0.2), (1.1, 0.4), (-0.7, 0.9)] {
        let pt = [formal_kms::C64::new(q, 0.0), formal_kms::C64::new(p, 0.0)];
        let oracle: f64 = taylor.iter().enumerate().map(|(m, f)| 0.75f64.powi(m as i32) * f.eval_c64(&pt).re).sum();
        let ours = lambda2.eval_c64(&pt);
        assert!((ours.re - oracle).abs() <= 1e-12 * oracle.abs().max(1.0), "{ours} vs {oracle}");
        assert!(ours.im.abs() < 1e-15);
    }
}
