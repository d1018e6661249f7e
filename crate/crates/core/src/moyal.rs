//! The Moyal–Weyl star product, order by order.
//!
//! `f * g = Σ_r λ^r M_r(f, g)` with `M_r = (κ^r / r!) Π^r` and
//! `Π(f, g) = Σ_i (∂_{q_i} f ∂_{p_i} g − ∂_{p_i} f ∂_{q_i} g)`. The default
//! constant κ = i/2 makes `M₁(f, g) − M₁(g, f) = i{f, g}`; every
//! [`StarContext`] audits that identity on canonical pairs when it is built.
//! On T² the same constant-coefficient contraction is used.

use std::collections::HashMap;

use crate::backends::{poisson_bracket, PhaseFunction};
use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;
use crate::series::FormalSeries;

/// Source of mixed partial derivatives `∂^multi` of some (possibly only
/// locally defined) function.
pub trait Jet<C> {
    fn jet(&mut self, multi: &[u16]) -> KmsResult<C>;
}

/// Memoized derivatives of a globally defined function.
pub struct FunctionJet<C> {
    cache: HashMap<Vec<u16>, C>,
}

impl<C: PhaseFunction> FunctionJet<C> {
    pub fn new(f: &C) -> Self {
        let mut cache = HashMap::new();
        cache.insert(vec![0; 2 * f.dof()], f.clone());
        Self { cache }
    }

    fn derive(&mut self, multi: &[u16]) -> C {
        if let Some(hit) = self.cache.get(multi) {
            return hit.clone();
        }
        let axis = multi.iter().position(|&e| e > 0).expect("the zero multi-index is always cached");
        let mut lower = multi.to_vec();
        lower[axis] -= 1;
        let value = self.derive(&lower).partial(axis);
        self.cache.insert(multi.to_vec(), value.clone());
        value
    }
}

impl<C: PhaseFunction> Jet<C> for FunctionJet<C> {
    fn jet(&mut self, multi: &[u16]) -> KmsResult<C> {
        Ok(self.derive(multi))
    }
}

/// Derivatives of a local Hamiltonian `H` with `dH = α`, for a closed
/// one-form α. Every derivative of order ≥ 1 is globally determined by α;
/// the value of `H` itself is not, and asking for it is a domain error.
pub struct OneFormJet<C> {
    components: Vec<FunctionJet<C>>,
}

impl<C: PhaseFunction> OneFormJet<C> {
    pub fn new(alpha: &[C]) -> Self {
        Self { components: alpha.iter().map(FunctionJet::new).collect() }
    }
}

impl<C: PhaseFunction> Jet<C> for OneFormJet<C> {
    fn jet(&mut self, multi: &[u16]) -> KmsResult<C> {
        let Some(axis) = multi.iter().position(|&e| e > 0) else {
            return Err(KmsError::Domain("a closed one-form does not fix the value of its local Hamiltonian".into()));
        };
        let mut lower = multi.to_vec();
        lower[axis] -= 1;
        Ok(self.components[axis].derive(&lower))
    }
}

/// All ways to write `total` as an ordered sum of `parts` non-negative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<u16>> {
    if parts == 1 {
        return vec![vec![total as u16]];
    }
    (0..=total)
        .flat_map(|head| {
            compositions(total - head, parts - 1).into_iter().map(move |mut tail| {
                tail.insert(0, head as u16);
                tail
            })
        })
        .collect()
}

fn factorial(n: u16) -> i64 {
    (1..=n as i64).product()
}

/// `M_r(f, g) = κ^r Σ_{|a| = r} (−1)^{Σ a_p} / a! · ∂^{L(a)} f · ∂^{R(a)} g`,
/// where `a` splits the r contractions among the 2n signed terms of Π.
pub fn bidiff_from_jets<C: PhaseFunction>(
    r: usize,
    n: usize,
    kappa: &C::Scalar,
    proto: &C,
    left: &mut impl Jet<C>,
    right: &mut impl Jet<C>,
) -> KmsResult<C> {
    let mut out = proto.zero_like();
    let kappa_r = kappa.pow(r as u32);
    for a in compositions(r, 2 * n) {
        let mut lmulti = vec![0u16; 2 * n];
        let mut rmulti = vec![0u16; 2 * n];
        let mut sign = 1i64;
        let mut denom = 1i64;
        for i in 0..n {
            // +∂_{q_i} ⊗ ∂_{p_i}
            lmulti[i] += a[i];
            rmulti[n + i] += a[i];
            // −∂_{p_i} ⊗ ∂_{q_i}
            lmulti[n + i] += a[n + i];
            rmulti[i] += a[n + i];
            if a[n + i] % 2 == 1 {
                sign = -sign;
            }
            denom *= factorial(a[i]) * factorial(a[n + i]);
        }
        let lf = left.jet(&lmulti)?;
        if lf.is_zero() {
            continue;
        }
        let rg = right.jet(&rmulti)?;
        if rg.is_zero() {
            continue;
        }
        let coeff = kappa_r.clone() * C::Scalar::from_ratio(sign, denom);
        out = out.add(&lf.mul(&rg).scale(&coeff));
    }
    Ok(out)
}

/// Phase space, truncation order and product constants shared by every
/// algebraic operation. Read-only after construction.
#[derive(Debug, Clone)]
pub struct StarContext<C: PhaseFunction> {
    proto: C,
    order: usize,
    kappa: C::Scalar,
}

impl<C: PhaseFunction> StarContext<C> {
    /// Moyal context with κ = i/2. `proto` is any function of the target
    /// space; only its context (dimension, layout, band) is used.
    pub fn new(proto: &C, order: usize) -> KmsResult<Self> {
        let half_i = C::Scalar::i() * C::Scalar::from_ratio(1, 2);
        Self::with_kappa(proto, order, half_i)
    }

    /// Context with a custom contraction constant; fails unless the M₁
    /// antisymmetry axiom holds on every canonical pair.
    pub fn with_kappa(proto: &C, order: usize, kappa: C::Scalar) -> KmsResult<Self> {
        let ctx = Self { proto: proto.zero_like(), order, kappa };
        for i in 0..proto.dof() {
            let (f, g) = proto.canonical_pair(i);
            let lhs = ctx.raw_bidiff(1, &f, &g)?.sub(&ctx.raw_bidiff(1, &g, &f)?);
            let rhs = poisson_bracket(&f, &g).scale(&C::Scalar::i());
            let defect = lhs.sub(&rhs);
            let ok = if C::Scalar::EXACT { defect.is_zero() } else { defect.max_abs() <= 1e-12 };
            if !ok {
                return Err(KmsError::Precondition(format!(
                    "M₁(f,g) − M₁(g,f) ≠ i{{f,g}} on canonical pair {i} with κ = {:?}",
                    ctx.kappa
                )));
            }
        }
        Ok(ctx)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dof(&self) -> usize {
        self.proto.dof()
    }

    pub fn prototype(&self) -> &C {
        &self.proto
    }

    pub fn kappa(&self) -> &C::Scalar {
        &self.kappa
    }

    /// Same space and constants at another truncation order.
    pub fn at_order(&self, order: usize) -> Self {
        Self { proto: self.proto.clone(), order, kappa: self.kappa.clone() }
    }

    pub fn check_function(&self, f: &C) -> KmsResult<()> {
        if self.proto.compatible(f) {
            Ok(())
        } else {
            Err(KmsError::ContextMismatch(format!(
                "context is {}, argument is {}",
                self.proto.context_label(),
                f.context_label()
            )))
        }
    }

    pub fn check(&self, f: &FormalSeries<C>) -> KmsResult<()> {
        self.check_function(f.prototype())
    }

    /// `f` as a λ-series at the context's truncation order.
    pub fn lift(&self, f: &C) -> KmsResult<FormalSeries<C>> {
        self.check_function(f)?;
        Ok(FormalSeries::constant(f.clone(), self.order))
    }

    pub fn zero(&self) -> FormalSeries<C> {
        FormalSeries::constant(self.proto.zero_like(), self.order)
    }

    pub fn one(&self) -> FormalSeries<C> {
        FormalSeries::constant(self.proto.one_like(), self.order)
    }

    fn raw_bidiff(&self, r: usize, f: &C, g: &C) -> KmsResult<C> {
        let mut left = FunctionJet::new(f);
        let mut right = FunctionJet::new(g);
        bidiff_from_jets(r, self.dof(), &self.kappa, &self.proto, &mut left, &mut right)
    }

    /// The bidifferential operator `M_r(f, g)`.
    pub fn bidiff(&self, r: usize, f: &C, g: &C) -> KmsResult<C> {
        if r > self.order {
            return Err(KmsError::TruncationBound { order: r, truncation: self.order });
        }
        self.check_function(f)?;
        self.check_function(g)?;
        self.raw_bidiff(r, f, g)
    }

    /// `(f * g)_k = Σ_{r+s+t=k} M_r(f_s, g_t)`, truncated at the smallest
    /// order among the context and both arguments.
    pub fn star(&self, f: &FormalSeries<C>, g: &FormalSeries<C>) -> KmsResult<FormalSeries<C>> {
        self.check(f)?;
        self.check(g)?;
        let order = self.order.min(f.truncation_order()).min(g.truncation_order());
        let mut out = vec![self.proto.zero_like(); order + 1];
        let mut right_jets: Vec<Option<FunctionJet<C>>> = g.coeffs()[..=order]
            .iter()
            .map(|c| (!c.is_zero()).then(|| FunctionJet::new(c)))
            .collect();
        for (s, fs) in f.coeffs()[..=order].iter().enumerate() {
            if fs.is_zero() {
                continue;
            }
            let mut left = FunctionJet::new(fs);
            for t in 0..=order - s {
                let Some(right) = right_jets[t].as_mut() else { continue };
                for r in 0..=order - s - t {
                    let m = bidiff_from_jets(r, self.dof(), &self.kappa, &self.proto, &mut left, right)?;
                    out[r + s + t] = out[r + s + t].add(&m);
                }
            }
        }
        FormalSeries::new(out)
    }

    pub fn star_many(&self, factors: &[&FormalSeries<C>]) -> KmsResult<FormalSeries<C>> {
        let Some((first, rest)) = factors.split_first() else {
            return Ok(self.one());
        };
        rest.iter().try_fold((*first).clone(), |acc, f| self.star(&acc, f))
    }

    /// `f * g − g * f`.
    pub fn commutator(&self, f: &FormalSeries<C>, g: &FormalSeries<C>) -> KmsResult<FormalSeries<C>> {
        Ok(self.star(f, g)?.sub(&self.star(g, f)?))
    }

    /// `ad(H) f = H * f − f * H`.
    pub fn ad(&self, h: &FormalSeries<C>, f: &FormalSeries<C>) -> KmsResult<FormalSeries<C>> {
        self.commutator(h, f)
    }

    /// `conj(f * g) − conj(g) * conj(f)`; zero when conjugation is an
    /// antilinear anti-automorphism.
    pub fn check_hermitian(&self, f: &FormalSeries<C>, g: &FormalSeries<C>) -> KmsResult<FormalSeries<C>> {
        let lhs = self.star(f, g)?.conjugate();
        let rhs = self.star(&g.conjugate(), &f.conjugate())?;
        Ok(lhs.sub(&rhs))
    }

    /// `(f * g) * h − f * (g * h)`.
    pub fn check_associativity(
        &self,
        f: &FormalSeries<C>,
        g: &FormalSeries<C>,
        h: &FormalSeries<C>,
    ) -> KmsResult<FormalSeries<C>> {
        let lhs = self.star(&self.star(f, g)?, h)?;
        let rhs = self.star(f, &self.star(g, h)?)?;
        Ok(lhs.sub(&rhs))
    }
}

#[cfg(test)]
mod tests {
    use num_traits::One;
    use super::*;
    use crate::backends::exppoly::ExpPoly;
    use crate::backends::fourier::Fourier;
    use crate::backends::poly::Poly;
    use crate::scalar::GaussRat;
    use crate::series::Coefficient;

    type P = Poly<GaussRat>;

    fn r(n: i64, d: i64) -> GaussRat {
        GaussRat::from_ratio(n, d)
    }

    fn i() -> GaussRat {
        GaussRat::i()
    }

    fn ctx(order: usize) -> StarContext<P> {
        StarContext::new(&P::zero(1, 0), order).unwrap()
    }

    fn series(ctx: &StarContext<P>, f: P) -> FormalSeries<P> {
        ctx.lift(&f).unwrap()
    }

    #[test]
    fn zeroth_and_first_order_operators() {
        let c = ctx(4);
        let (q, p) = (P::q(1, 0), P::p(1, 0));
        assert_eq!(c.bidiff(0, &q, &p).unwrap(), q.mul(&p));
        assert_eq!(c.bidiff(1, &q, &p).unwrap(), P::constant(1, 0, i() * r(1, 2)));
        assert_eq!(c.bidiff(1, &p, &q).unwrap(), P::constant(1, 0, -i() * r(1, 2)));
        let f = q.mul(&q).mul(&p).mul(&p);
        assert!(c.bidiff(2, &q, &f).unwrap().is_zero());
        assert!(matches!(c.bidiff(5, &q, &p), Err(KmsError::TruncationBound { order: 5, truncation: 4 })));
    }

    #[test]
    fn canonical_commutation() {
        let c = ctx(6);
        let (q, p) = (series(&c, P::q(1, 0)), series(&c, P::p(1, 0)));
        let qp = c.star(&q, &p).unwrap();
        assert_eq!(qp.coeff(0).unwrap(), &P::q(1, 0).mul(&P::p(1, 0)));
        assert_eq!(qp.coeff(1).unwrap(), &P::constant(1, 0, i() * r(1, 2)));
        let comm = c.commutator(&q, &p).unwrap();
        assert_eq!(comm, FormalSeries::monomial(P::constant(1, 0, i()), 1, 6));
    }

    #[test]
    fn quadratic_product_against_hand_expansion() {
        // (q²/2) * (p²/2) = q²p²/4 + (i/2) λ qp − λ²/8
        let c = ctx(6);
        let (q, p) = (P::q(1, 0), P::p(1, 0));
        let a = series(&c, q.mul(&q).scale(&r(1, 2)));
        let b = series(&c, p.mul(&p).scale(&r(1, 2)));
        let prod = c.star(&a, &b).unwrap();
        let expected = FormalSeries::from_prefix(
            vec![
                q.mul(&q).mul(&p).mul(&p).scale(&r(1, 4)),
                q.mul(&p).scale(&(i() * r(1, 2))),
                P::constant(1, 0, r(-1, 8)),
            ],
            6,
        )
        .unwrap();
        assert_eq!(prod, expected);
    }

    #[test]
    fn unit_and_constants() {
        let c = ctx(6);
        let f = series(&c, P::q(1, 0).mul(&P::p(1, 0)).add(&P::p(1, 0)));
        assert_eq!(c.star(&c.one(), &f).unwrap(), f);
        assert_eq!(c.star(&f, &c.one()).unwrap(), f);
        for r in 1..=6 {
            assert!(c.bidiff(r, &P::one(1, 0), f.coeff(0).unwrap()).unwrap().is_zero());
        }
    }

    #[test]
    fn wrong_kappa_fails_the_axiom_audit() {
        let err = StarContext::with_kappa(&P::zero(1, 0), 3, -i() * r(1, 2)).unwrap_err();
        assert!(matches!(err, KmsError::Precondition(_)));
    }

    #[test]
    fn context_mismatch_is_reported() {
        let c = ctx(3);
        let other = FormalSeries::constant(P::q(2, 0), 3);
        assert!(matches!(c.star(&other, &other), Err(KmsError::ContextMismatch(_))));
    }

    #[test]
    fn parity_of_bidifferential_operators() {
        let c = ctx(6);
        let (q, p) = (P::q(1, 0), P::p(1, 0));
        let f = q.mul(&q).mul(&q).add(&q.mul(&p).mul(&p)).add(&p);
        let g = p.mul(&p).mul(&p).mul(&q).add(&q.mul(&q));
        for k in 0..=6 {
            let sign = if k % 2 == 0 { r(1, 1) } else { r(-1, 1) };
            assert_eq!(c.bidiff(k, &f, &g).unwrap(), c.bidiff(k, &g, &f).unwrap().scale(&sign));
        }
    }

    #[test]
    fn gaussian_products_integrate_like_pointwise_products() {
        let proto = ExpPoly::<GaussRat>::zero(1, 0);
        let c = StarContext::new(&proto, 4).unwrap();
        let (q, p) = (P::q(1, 0), P::p(1, 0));
        let f = ExpPoly::gaussian(q.mul(&q).add(&p), r(-1, 2));
        let g = ExpPoly::gaussian(p.mul(&q).add(&P::one(1, 0)), r(-1, 1));
        let prod = c.star(&c.lift(&f).unwrap(), &c.lift(&g).unwrap()).unwrap();
        let pointwise = f.mul(&g).integrate().unwrap().value;
        assert_eq!(prod.coeff(0).unwrap().integrate().unwrap().value, pointwise);
        for k in 1..=4 {
            assert_eq!(prod.coeff(k).unwrap().integrate().unwrap().value, r(0, 1), "order {k}");
        }
    }

    #[test]
    fn torus_product_is_associative_on_modes() {
        let proto = Fourier::<GaussRat>::zero(8);
        let c = StarContext::new(&proto, 3).unwrap();
        let f = c.lift(&Fourier::cos(8, (1, 0)).add(&Fourier::mode(8, (0, 1), i()))).unwrap();
        let g = c.lift(&Fourier::sin(8, (1, 1))).unwrap();
        let h = c.lift(&Fourier::mode(8, (-1, 1), r(2, 1))).unwrap();
        assert!(c.check_associativity(&f, &g, &h).unwrap().is_zero());
        assert!(c.check_hermitian(&f, &g).unwrap().is_zero());
    }

    #[test]
    fn one_form_jet_refuses_the_hamiltonian_value() {
        let alpha = vec![Fourier::<GaussRat>::zero(2), Fourier::constant(2, GaussRat::one())];
        let mut jet = OneFormJet::new(&alpha);
        assert!(jet.jet(&[0, 0]).is_err());
        assert_eq!(jet.jet(&[0, 1]).unwrap(), Fourier::constant(2, GaussRat::one()));
        assert!(jet.jet(&[1, 1]).unwrap().is_zero());
    }
}
