//! Exact time evolution where the classical flow is explicit.
//!
//! For a Hamiltonian of degree ≤ 2 on R^{2n}, Hamilton's equations
//! `ẋ_j = {x_j, H}` are affine. Every higher Moyal term of `ad(H)` vanishes,
//! so `A_t = φ_t^*` with no quantum correction. The flow map is `exp(tM)` for
//! the augmented matrix `M = [[A, c], [0, 0]]`. It is exact when M is
//! nilpotent, or when `A² = −ω²` and the scalar field holds `e^{iωt}`
//! (see [`crate::laurent`]). Otherwise it is a scaling-and-squaring Taylor
//! evaluation, which needs floating scalars. Constant one-forms on T² generate translations.

use crate::backends::exppoly::{ExpPoly, ExpTerm};
use crate::backends::fourier::Fourier;
use crate::backends::poly::Poly;
use crate::backends::{PhaseFunction, VectorFieldSpec};
use crate::dynamics::derivation::exp_delta_x;
use crate::error::{KmsError, KmsResult};
use crate::moyal::StarContext;
use crate::scalar::Scalar;
use crate::series::{Coefficient, FormalSeries};

type Matrix<S> = Vec<Vec<S>>;

fn identity<S: Scalar>(d: usize) -> Matrix<S> {
    (0..d).map(|i| (0..d).map(|j| if i == j { S::one() } else { S::zero() }).collect()).collect()
}

fn matmul<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).fold(S::zero(), |acc, k| acc + a[i][k].clone() * b[k][j].clone()))
                .collect()
        })
        .collect()
}

fn scale<S: Scalar>(a: &Matrix<S>, s: &S) -> Matrix<S> {
    a.iter().map(|row| row.iter().map(|x| x.clone() * s.clone()).collect()).collect()
}

fn add<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Matrix<S> {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.clone() + y.clone()).collect()).collect()
}

fn is_zero<S: Scalar>(a: &Matrix<S>) -> bool {
    a.iter().all(|row| row.iter().all(num_traits::Zero::is_zero))
}

fn norm_inf<S: Scalar>(a: &Matrix<S>) -> f64 {
    a.iter().map(|row| row.iter().map(Scalar::magnitude).sum::<f64>()).fold(0.0, f64::max)
}

/// The time-t map `x ↦ Φx + d` of an affine Hamiltonian flow.
#[derive(Debug, Clone)]
pub struct AffineFlow<S: Scalar> {
    hamiltonian: Poly<S>,
    /// Augmented generator `[[A, c], [0, 0]]`, size 2n+1.
    generator: Matrix<S>,
}

impl<S: Scalar> AffineFlow<S> {
    pub fn new(h: &Poly<S>) -> KmsResult<Self> {
        if h.depends_on_params() {
            return Err(KmsError::Unsupported("flow Hamiltonian must not depend on parameters".into()));
        }
        if h.phase_degree().unwrap_or(0) > 2 {
            return Err(KmsError::Unsupported(format!(
                "exact flow needs a Hamiltonian of degree ≤ 2, got {h}; use the numeric path"
            )));
        }
        let n = h.dof();
        let d = 2 * n + 1;
        let mut generator = vec![vec![S::zero(); d]; d];
        for (j, row) in generator.iter_mut().enumerate().take(2 * n) {
            let velocity = Poly::var(n, h.params(), j).poisson(h);
            for (mono, c) in velocity.terms() {
                match mono.iter().position(|&e| e > 0) {
                    None => row[2 * n] = c.clone(),
                    Some(k) => row[k] = c.clone(),
                }
            }
        }
        Ok(Self { hamiltonian: h.clone(), generator })
    }

    pub fn hamiltonian(&self) -> &Poly<S> {
        &self.hamiltonian
    }

    /// `exp(tM)`, exactly when `M` is nilpotent.
    pub fn propagator(&self, t: &S) -> KmsResult<Matrix<S>> {
        let d = self.generator.len();
        let mut term = identity::<S>(d);
        let mut sum = identity::<S>(d);
        for m in 1..=d {
            term = scale(&matmul(&term, &self.generator), &(t.clone() * S::from_ratio(1, m as i64)));
            if is_zero(&term) {
                return Ok(sum);
            }
            sum = add(&sum, &term);
        }
        if S::EXACT {
            if let Some(e) = self.harmonic_propagator(t) {
                return Ok(e);
            }
            return Err(KmsError::Unsupported(
                "the flow is transcendental in t; evaluate it with a floating scalar instantiation".into(),
            ));
        }
        let tm = scale(&self.generator, t);
        let norm = norm_inf(&tm);
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = scale(&tm, &S::from_ratio(1, 1i64 << squarings));
        let mut term = identity::<S>(d);
        let mut sum = identity::<S>(d);
        for m in 1..=30 {
            term = scale(&matmul(&term, &scaled), &S::from_ratio(1, m));
            sum = add(&sum, &term);
        }
        for _ in 0..squarings {
            sum = matmul(&sum, &sum);
        }
        Ok(sum)
    }

    /// Closed form when the linear part satisfies `A² = −ω²`:
    /// `e^{tA} = cos ωt + (sin ωt / ω) A`, and the affine column integrates to
    /// `(sin ωt / ω + (1 − cos ωt) A / ω²) c`. Needs `e^{iωt}` in the field.
    fn harmonic_propagator(&self, t: &S) -> Option<Matrix<S>> {
        let d = self.generator.len();
        let n2 = d - 1;
        let a: Matrix<S> = self.generator[..n2].iter().map(|row| row[..n2].to_vec()).collect();
        let a2 = matmul(&a, &a);
        let minus_w2 = -a2[0][0].clone();
        for (i, row) in a2.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let expected = if i == j { -minus_w2.clone() } else { S::zero() };
                if *x != expected {
                    return None;
                }
            }
        }
        if minus_w2.real_sign() != Some(std::cmp::Ordering::Greater) {
            return None;
        }
        let w = minus_w2.sqrt_real()?;
        let z = S::exp_i(&(w.clone() * t.clone()))?;
        let zi = S::one() / z.clone();
        let half = S::from_ratio(1, 2);
        let cos = (z.clone() + zi.clone()) * half.clone();
        let sin = (z - zi) * half / S::i();
        let c: Vec<S> = self.generator[..n2].iter().map(|row| row[n2].clone()).collect();
        let mut out = identity::<S>(d);
        for i in 0..n2 {
            let mut shift = c[i].clone() * sin.clone() / w.clone();
            for j in 0..n2 {
                out[i][j] = a[i][j].clone() * sin.clone() / w.clone() + if i == j { cos.clone() } else { S::zero() };
                shift = shift + a[i][j].clone() * c[j].clone() * (S::one() - cos.clone()) / minus_w2.clone();
            }
            out[i][n2] = shift;
        }
        Some(out)
    }

    /// `φ_t^* x_j` for every phase coordinate, as affine polynomials.
    pub fn images(&self, t: &S) -> KmsResult<Vec<Poly<S>>> {
        let e = self.propagator(t)?;
        let n = self.hamiltonian.dof();
        Ok((0..2 * n)
            .map(|j| {
                (0..2 * n).fold(Poly::constant(n, 0, e[j][2 * n].clone()), |acc, k| {
                    acc.add(&Poly::var(n, 0, k).scale(&e[j][k]))
                })
            })
            .collect())
    }
}

/// Functions that can be pulled back along an affine flow.
pub trait AffinePullback: PhaseFunction {
    fn polynomial_part(&self) -> Option<Poly<Self::Scalar>>;
    fn pull_back(&self, flow: &AffineFlow<Self::Scalar>, images: &[Poly<Self::Scalar>]) -> Self;
}

impl<S: Scalar> AffinePullback for Poly<S> {
    fn polynomial_part(&self) -> Option<Poly<S>> {
        Some(self.clone())
    }

    fn pull_back(&self, _flow: &AffineFlow<S>, images: &[Poly<S>]) -> Self {
        self.compose_phase(images)
    }
}

impl<S: Scalar> AffinePullback for ExpPoly<S> {
    fn polynomial_part(&self) -> Option<Poly<S>> {
        self.as_poly()
    }

    /// Exponents conserved by the flow (`{E, H} = 0`) are kept verbatim, so
    /// Gaussian weights stay exact under rotations.
    fn pull_back(&self, flow: &AffineFlow<S>, images: &[Poly<S>]) -> Self {
        self.map_terms(|t| {
            let conserved = t.exponent.poisson(flow.hamiltonian()).is_zero();
            ExpTerm {
                exponent: if conserved { t.exponent.clone() } else { t.exponent.compose_phase(images) },
                prefactor: t.prefactor.compose_phase(images),
            }
        })
    }
}

fn quadratic_flow<C: AffinePullback>(x: &VectorFieldSpec<C>) -> KmsResult<AffineFlow<C::Scalar>> {
    let VectorFieldSpec::Hamiltonian(h) = x else {
        return Err(KmsError::Unsupported("exact flows on R^{2n} need a global Hamiltonian".into()));
    };
    let h = h.polynomial_part().ok_or_else(|| KmsError::Unsupported("flow Hamiltonian must be a polynomial".into()))?;
    AffineFlow::new(&h)
}

/// `A_t f = φ_t^* f` for a Hamiltonian of degree ≤ 2.
pub fn evolve_exact<C: AffinePullback>(
    ctx: &StarContext<C>,
    x: &VectorFieldSpec<C>,
    t: &C::Scalar,
    f: &FormalSeries<C>,
) -> KmsResult<FormalSeries<C>> {
    ctx.check(f)?;
    let flow = quadratic_flow(x)?;
    let images = flow.images(t)?;
    Ok(f.map(|c| c.pull_back(&flow, &images)))
}

/// `A_{t+iλβ} f := A_t(e^{−βδ_X} f)`. The exponent sign is the one for which
/// `μ = tr(Exp(−βH) * ·)` satisfies the dynamic condition.
pub fn complexify_exact<C: AffinePullback>(
    ctx: &StarContext<C>,
    x: &VectorFieldSpec<C>,
    t: &C::Scalar,
    beta: &C::Scalar,
    f: &FormalSeries<C>,
) -> KmsResult<FormalSeries<C>> {
    let twisted = exp_delta_x(ctx, x, &-beta.clone(), f)?;
    evolve_exact(ctx, x, t, &twisted)
}

/// Pull-back along the translation `θ ↦ θ + t·v` on T².
pub fn translate_torus<S: Scalar>(f: &Fourier<S>, velocity: (f64, f64), t: f64) -> KmsResult<Fourier<S>> {
    let modes = f
        .modes()
        .map(|(k, c)| {
            let phase = num_complex::Complex64::from_polar(1.0, t * (k.0 as f64 * velocity.0 + k.1 as f64 * velocity.1));
            let factor = if phase.im == 0.0 && phase.re == 1.0 {
                Some(S::one())
            } else {
                S::from_c64(phase)
            };
            factor
                .map(|s| (*k, c.clone() * s))
                .ok_or_else(|| KmsError::Unsupported("irrational translation phase needs floating scalars".into()))
        })
        .collect::<KmsResult<Vec<_>>>()?;
    Ok(Fourier::from_modes(f.band(), modes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussRat;
    use num_complex::Complex64 as C64;

    fn r(n: i64, d: i64) -> GaussRat {
        GaussRat::from_ratio(n, d)
    }

    #[test]
    fn free_particle_flow_is_exact() {
        // H = p²/2: q(t) = q + t p
        let p = Poly::<GaussRat>::p(1, 0);
        let h = p.mul(&p).scale(&r(1, 2));
        let images = AffineFlow::new(&h).unwrap().images(&r(3, 1)).unwrap();
        assert_eq!(images[0], Poly::q(1, 0).add(&p.scale(&r(3, 1))));
        assert_eq!(images[1], p);
    }

    #[test]
    fn linear_potential_shifts_momentum() {
        // H = q: ṗ = {p, q} = −1
        let h = Poly::<GaussRat>::q(1, 0);
        let images = AffineFlow::new(&h).unwrap().images(&r(2, 1)).unwrap();
        assert_eq!(images[1], Poly::p(1, 0).add(&Poly::constant(1, 0, r(-2, 1))));
    }

    #[test]
    fn oscillator_rotates_and_needs_floats() {
        assert!(AffineFlow::new(&Poly::<GaussRat>::harmonic(1, 0)).unwrap().images(&r(1, 1)).is_err());
        let flow = AffineFlow::new(&Poly::<C64>::harmonic(1, 0)).unwrap();
        let t = 1.0;
        let images = flow.images(&C64::new(t, 0.0)).unwrap();
        // q(t) = q cos t + p sin t
        let q_img = &images[0];
        assert!((q_img.coefficient(&[1, 0]).re - t.cos()).abs() < 1e-14);
        assert!((q_img.coefficient(&[0, 1]).re - t.sin()).abs() < 1e-14);
        assert!((images[1].coefficient(&[1, 0]).re + t.sin()).abs() < 1e-14);
    }

    #[test]
    fn oscillator_is_exact_over_laurent_scalars() {
        use crate::laurent::LaurentRat as L;
        use num_traits::One;
        let u = L::unit();
        let cos = (u.clone() + L::one() / u.clone()) * L::from_ratio(1, 2);
        let sin = (u.clone() - L::one() / u) / (L::from_int(2) * L::i());
        let images = AffineFlow::new(&Poly::<L>::harmonic(1, 0)).unwrap().images(&L::one()).unwrap();
        assert_eq!(images[0], Poly::q(1, 0).scale(&cos).add(&Poly::p(1, 0).scale(&sin)));
        assert_eq!(images[1], Poly::p(1, 0).scale(&cos).sub(&Poly::q(1, 0).scale(&sin)));
        // H = H₀ + q: rotation about (−1, 0)
        let h = Poly::<L>::harmonic(1, 0).add(&Poly::q(1, 0));
        let images = AffineFlow::new(&h).unwrap().images(&L::one()).unwrap();
        let centre = Poly::constant(1, 0, L::from_int(-1));
        let shifted_q = Poly::q(1, 0).sub(&centre);
        let expected = shifted_q.scale(&cos).add(&Poly::p(1, 0).scale(&sin)).add(&centre);
        assert_eq!(images[0], expected);
        assert!(AffineFlow::new(&Poly::<L>::harmonic(1, 0)).unwrap().images(&L::from_ratio(1, 2)).is_err());
    }

    #[test]
    fn cubic_hamiltonian_is_refused() {
        let q = Poly::<GaussRat>::q(1, 0);
        assert!(matches!(AffineFlow::new(&q.mul(&q).mul(&q)), Err(KmsError::Unsupported(_))));
    }

    #[test]
    fn conserved_gaussian_weight_survives() {
        let flow = AffineFlow::new(&Poly::<C64>::harmonic(1, 0)).unwrap();
        let images = flow.images(&C64::new(0.7, 0.0)).unwrap();
        let f = ExpPoly::gaussian(Poly::q(1, 0), C64::new(-0.5, 0.0));
        let g = f.pull_back(&flow, &images);
        assert_eq!(g.terms()[0].exponent, f.terms()[0].exponent);
    }

    #[test]
    fn torus_translation() {
        let f = Fourier::<C64>::mode(2, (1, 0), C64::new(1.0, 0.0));
        let g = translate_torus(&f, (1.0, 0.0), 0.5).unwrap();
        let v = g.coefficient((1, 0));
        assert!((v - C64::from_polar(1.0, 0.5)).norm() < 1e-15);
        let exact = Fourier::<GaussRat>::mode(2, (1, 0), GaussRat::from_int(1));
        assert_eq!(translate_torus(&exact, (1.0, 0.0), 0.0).unwrap(), exact);
        assert!(translate_torus(&exact, (1.0, 0.0), 0.5).is_err());
    }
}
