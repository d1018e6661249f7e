//! Concrete coefficient algebras for C∞(M) and the classical structure on them.
//!
//! Conventions, fixed once for the whole crate:
//! - ω = Σ dq_i ∧ dp_i (on T²: ω = dθ₁ ∧ dθ₂, θ₁ playing q and θ₂ playing p);
//! - {f, g} = Σ (∂_{q_i} f ∂_{p_i} g − ∂_{p_i} f ∂_{q_i} g);
//! - a symplectic vector field X is given by its closed one-form α = i_X ω,
//!   so X^{q_i} = α_{p_i}, X^{p_i} = −α_{q_i}, and for α = dH the Lie
//!   derivative is L_X f = {f, H}, i.e. the classical flow solves df/dt = {f, H}.

pub mod exppoly;
pub mod fourier;
pub mod poly;
pub mod primitive;

use crate::error::{KmsError, KmsResult};
use crate::scalar::Scalar;
use crate::series::Coefficient;

/// The value of `∫_M f Ω`, exactly `value · (2π)^two_pi_power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral<S> {
    pub value: S,
    pub two_pi_power: u32,
}

impl<S: Scalar> Integral<S> {
    pub fn to_c64(&self) -> num_complex::Complex64 {
        self.value.to_c64() * (2.0 * std::f64::consts::PI).powi(self.two_pi_power as i32)
    }
}

/// A function on a 2n-dimensional phase space with the coordinate layout
/// `(q_1..q_n, p_1..p_n)`.
pub trait PhaseFunction: Coefficient {
    fn dof(&self) -> usize;
    fn partial(&self, axis: usize) -> Self;
    /// The i-th canonical pair in this backend, used to audit the M₁ axiom.
    fn canonical_pair(&self, i: usize) -> (Self, Self);
    /// `∫ f Ω` with Ω = dq ∧ dp (no extra normalization).
    fn integrate(&self) -> KmsResult<Integral<Self::Scalar>>;
}

pub fn poisson_bracket<C: PhaseFunction>(f: &C, g: &C) -> C {
    let n = f.dof();
    (0..n).fold(f.zero_like(), |acc, i| {
        let forward = f.partial(i).mul(&g.partial(n + i));
        let backward = f.partial(n + i).mul(&g.partial(i));
        acc.add(&forward.sub(&backward))
    })
}

/// A symplectic vector field, described by a Hamiltonian or by its closed
/// one-form `α = i_X ω` (components along `dq_1..dq_n, dp_1..dp_n`).
#[derive(Debug, Clone, PartialEq)]
pub enum VectorFieldSpec<C> {
    Hamiltonian(C),
    ClosedOneForm(Vec<C>),
}

impl<C: PhaseFunction> VectorFieldSpec<C> {
    pub fn hamiltonian(h: C) -> Self {
        Self::Hamiltonian(h)
    }

    /// Rejects one-forms with `∂_i α_j ≠ ∂_j α_i`.
    pub fn closed_one_form(components: Vec<C>) -> KmsResult<Self> {
        let Some(first) = components.first() else {
            return Err(KmsError::Precondition("one-form needs components".into()));
        };
        if components.len() != 2 * first.dof() {
            return Err(KmsError::Precondition(format!(
                "one-form on a {}-dimensional phase space needs {} components, got {}",
                2 * first.dof(),
                2 * first.dof(),
                components.len()
            )));
        }
        if components.iter().any(|c| !first.compatible(c)) {
            return Err(KmsError::ContextMismatch("one-form components live in different contexts".into()));
        }
        if let Some((i, j)) = closedness_defect(&components) {
            return Err(KmsError::Precondition(format!("one-form is not closed: ∂_{i} α_{j} ≠ ∂_{j} α_{i}")));
        }
        Ok(Self::ClosedOneForm(components))
    }

    pub fn dof(&self) -> usize {
        self.prototype().dof()
    }

    pub fn prototype(&self) -> &C {
        match self {
            Self::Hamiltonian(h) => h,
            Self::ClosedOneForm(a) => &a[0],
        }
    }

    /// α = i_X ω; for a Hamiltonian field this is dH.
    pub fn one_form(&self) -> Vec<C> {
        match self {
            Self::Hamiltonian(h) => (0..2 * h.dof()).map(|axis| h.partial(axis)).collect(),
            Self::ClosedOneForm(a) => a.clone(),
        }
    }

    /// Components of X in the coordinate basis ∂_{q_i}, ∂_{p_i}.
    pub fn components(&self) -> Vec<C> {
        let alpha = self.one_form();
        let n = self.dof();
        let mut out = Vec::with_capacity(2 * n);
        out.extend((0..n).map(|i| alpha[n + i].clone()));
        out.extend((0..n).map(|i| alpha[i].neg()));
        out
    }

    pub fn is_closed(&self) -> bool {
        closedness_defect(&self.one_form()).is_none()
    }

    pub fn check_compatible(&self, f: &C) -> KmsResult<()> {
        if self.prototype().compatible(f) {
            Ok(())
        } else {
            Err(KmsError::ContextMismatch(format!(
                "vector field on {} applied to {}",
                self.prototype().context_label(),
                f.context_label()
            )))
        }
    }

    /// Reverses the field: X ↦ −X.
    pub fn negated(&self) -> Self {
        match self {
            Self::Hamiltonian(h) => Self::Hamiltonian(h.neg()),
            Self::ClosedOneForm(a) => Self::ClosedOneForm(a.iter().map(C::neg).collect()),
        }
    }
}

fn closedness_defect<C: PhaseFunction>(alpha: &[C]) -> Option<(usize, usize)> {
    for i in 0..alpha.len() {
        for j in i + 1..alpha.len() {
            if alpha[j].partial(i) != alpha[i].partial(j) {
                return Some((i, j));
            }
        }
    }
    None
}

/// `L_X f = Σ_j X^j ∂_j f`; equals `{f, H}` when `α = dH`.
pub fn lie_derivative<C: PhaseFunction>(x: &VectorFieldSpec<C>, f: &C) -> KmsResult<C> {
    x.check_compatible(f)?;
    Ok(x.components()
        .iter()
        .enumerate()
        .fold(f.zero_like(), |acc, (axis, xj)| acc.add(&xj.mul(&f.partial(axis)))))
}
