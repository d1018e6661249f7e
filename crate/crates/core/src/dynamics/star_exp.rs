//! The star exponential `Exp(βH)`: the solution of `d/dβ f = H * f`, `f(0) = 1`.
//!
//! Writing `f = e^{bH} Σ_k λ^k g^{(k)}(b)` turns the equation into
//! `∂_b g^{(k)} = e^{−bH} Σ_{r=1}^{k} M_r(H, e^{bH} g^{(k−r)})`.
//! The e^{bH} factors cancel, so each integrand is a polynomial in the phase
//! variables and in `b`. It is integrated exactly from 0, and `b = β` is
//! substituted at the end.

use crate::backends::exppoly::ExpPoly;
use crate::backends::poly::Poly;
use crate::backends::VectorFieldSpec;
use crate::dynamics::derivation::exp_delta_x;
use crate::error::{KmsError, KmsResult};
use crate::moyal::{bidiff_from_jets, FunctionJet, StarContext};
use crate::scalar::Scalar;
use crate::series::{Coefficient, FormalSeries};

/// `Exp(βH) = e^{βH}(1 + Σ_r λ^r g_β^{(r)})` for a polynomial `H`.
#[derive(Debug, Clone)]
pub struct StarExponential<S: Scalar> {
    hamiltonian: Poly<S>,
    beta: S,
    /// `g^{(k)}(b)` with `b` as the single parameter variable.
    symbolic: Vec<Poly<S>>,
}

/// Polynomial Hamiltonian behind an exp-polynomial, or an unsupported error.
pub fn polynomial_hamiltonian<S: Scalar>(h: &ExpPoly<S>) -> KmsResult<Poly<S>> {
    h.as_poly()
        .filter(|p| !p.depends_on_params() && p.params() == 0)
        .ok_or_else(|| KmsError::Unsupported(format!("star exponential needs a polynomial Hamiltonian, got {h}")))
}

impl<S: Scalar> StarExponential<S> {
    pub fn new(ctx: &StarContext<ExpPoly<S>>, h: &ExpPoly<S>, beta: S) -> KmsResult<Self> {
        ctx.check_function(h)?;
        let h = polynomial_hamiltonian(h)?;
        let n = h.dof();
        let b = 2 * n;
        let hb = h.with_extra_params(1);
        let bh = Poly::var(n, 1, b).mul(&hb);
        let grow = ExpPoly::term(Poly::one(n, 1), bh.clone());
        let shrink = ExpPoly::term(Poly::one(n, 1), bh.neg());
        let proto = ExpPoly::zero(n, 1);
        let mut h_jet = FunctionJet::new(&ExpPoly::from(hb));

        let mut symbolic = vec![Poly::one(n, 1)];
        for k in 1..=ctx.order() {
            let mut sum = proto.clone();
            for r in 1..=k {
                let prev = &symbolic[k - r];
                if prev.is_zero() {
                    continue;
                }
                let mut f_jet = FunctionJet::new(&grow.mul(&ExpPoly::from(prev.clone())));
                sum = sum.add(&bidiff_from_jets(r, n, ctx.kappa(), &proto, &mut h_jet, &mut f_jet)?);
            }
            let integrand = shrink.mul(&sum).as_poly().ok_or_else(|| {
                KmsError::Numerical(format!("order {k}: exponential factors failed to cancel in the recursion"))
            })?;
            symbolic.push(integrand.antiderivative(b));
        }
        Ok(Self { hamiltonian: h, beta, symbolic })
    }

    /// Same Hamiltonian and recursion at another inverse temperature.
    pub fn at(&self, beta: S) -> Self {
        Self { hamiltonian: self.hamiltonian.clone(), beta, symbolic: self.symbolic.clone() }
    }

    pub fn order(&self) -> usize {
        self.symbolic.len() - 1
    }

    pub fn hamiltonian(&self) -> &Poly<S> {
        &self.hamiltonian
    }

    pub fn beta(&self) -> &S {
        &self.beta
    }

    /// `g^{(k)}` as a polynomial in the phase variables and the parameter `b`.
    pub fn symbolic_correction(&self, k: usize) -> &Poly<S> {
        &self.symbolic[k]
    }

    /// `g_β^{(k)}`.
    pub fn correction(&self, k: usize) -> Poly<S> {
        let n = self.hamiltonian.dof();
        self.symbolic[k]
            .substitute(2 * n, &self.beta)
            .without_params(1)
            .expect("substitution removes the parameter")
    }

    /// The λ-series with coefficients `e^{βH} g_β^{(k)}`.
    pub fn series(&self) -> FormalSeries<ExpPoly<S>> {
        let weight = self.hamiltonian.scale(&self.beta);
        let coeffs = (0..=self.order())
            .map(|k| {
                let g = self.correction(k);
                if weight.is_zero() {
                    ExpPoly::from(g)
                } else {
                    ExpPoly::term(g, weight.clone())
                }
            })
            .collect();
        FormalSeries::new(coeffs).expect("coefficients share one layout")
    }
}

/// `Exp(βH)` as a λ-series in the context.
pub fn star_exp<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    h: &ExpPoly<S>,
    beta: S,
) -> KmsResult<FormalSeries<ExpPoly<S>>> {
    Ok(StarExponential::new(ctx, h, beta)?.series())
}

/// Residuals of the group law and of the commutation with H.
#[derive(Debug, Clone)]
pub struct ExpLawResiduals<C> {
    pub group_law: FormalSeries<C>,
    pub commutes_with_h: FormalSeries<C>,
}

/// `Exp(βH)*Exp(β′H) − Exp((β+β′)H)` and `Exp(βH)*H − H*Exp(βH)`.
pub fn check_exp_laws<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    h: &ExpPoly<S>,
    beta: S,
    beta_prime: S,
) -> KmsResult<ExpLawResiduals<ExpPoly<S>>> {
    let base = StarExponential::new(ctx, h, beta.clone())?;
    let e1 = base.series();
    let e2 = base.at(beta_prime.clone()).series();
    let e12 = base.at(beta + beta_prime).series();
    let hs = ctx.lift(h)?;
    Ok(ExpLawResiduals {
        group_law: ctx.star(&e1, &e2)?.sub(&e12),
        commutes_with_h: ctx.commutator(&e1, &hs)?,
    })
}

/// `e^{βδ_X} f − Exp(βH) * f * Exp(−βH)` for a Hamiltonian field.
pub fn check_inner<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    x: &VectorFieldSpec<ExpPoly<S>>,
    beta: S,
    f: &FormalSeries<ExpPoly<S>>,
) -> KmsResult<FormalSeries<ExpPoly<S>>> {
    let VectorFieldSpec::Hamiltonian(h) = x else {
        return Err(KmsError::Unsupported(
            "the inner form of e^{βδ_X} needs a global Hamiltonian; this field only has a closed one-form".into(),
        ));
    };
    let base = StarExponential::new(ctx, h, beta.clone())?;
    let plus = base.series();
    let minus = base.at(-beta.clone()).series();
    let lhs = exp_delta_x(ctx, x, &beta, f)?;
    let rhs = ctx.star(&ctx.star(&plus, f)?, &minus)?;
    Ok(lhs.sub(&rhs))
}
