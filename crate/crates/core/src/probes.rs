//! Seeded random probe functions.
//!
//! The generator is SplitMix64, so any language can reproduce a probe set
//! from its seed. The state advances by `0x9E3779B97F4A7C15` per draw, and
//! the output mixes with shifts 30/27/31 and multipliers `0xBF58476D1CE4E5B9`
//! and `0x94D049BB133111EB`. An integer in `[lo, hi]` is
//! `lo + next() mod (hi − lo + 1)`.
//!
//! Coefficient draw: re in [−3, 3], then im in [−3, 3], then the denominator
//! in [1, 4]. The value is `(re + i·im)/den`.
//!
//! Polynomial draw: monomials are visited in graded-lexicographic order over
//! `(q_1..q_n, p_1..p_n)`, lowest total degree first. Each monomial is kept
//! when an integer draw in [0, 1] is 1, and then a coefficient is drawn. An
//! all-zero draw falls back to the constant 1.
//!
//! Exp-polynomial draw: a term count in [1, 2]. Each term is a polynomial draw
//! followed by a weight index in [0, 2], selecting `c ∈ {−1/2, −1, −3/2}` for
//! the factor `e^{c·H₀}`.
//!
//! Fourier draw: every mode with `|k_i| ≤ band` in lexicographic order is
//! kept on an integer draw in [0, 2] equal to 0, followed by a coefficient. An
//! empty draw falls back to the constant 1.

use crate::backends::exppoly::ExpPoly;
use crate::backends::fourier::Fourier;
use crate::backends::poly::{Monomial, Poly};
use crate::scalar::{GaussRat, Scalar};
use crate::series::Coefficient;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as i64
    }

    pub fn coefficient(&mut self) -> GaussRat {
        let re = self.int_in(-3, 3);
        let im = self.int_in(-3, 3);
        let den = self.int_in(1, 4);
        GaussRat::from_ratio(re, den) + GaussRat::i() * GaussRat::from_ratio(im, den)
    }
}

/// Exponent vectors of total degree ≤ `degree` in `vars` variables, graded
/// then lexicographic (first variable varies slowest).
pub fn monomials(vars: usize, degree: u16) -> Vec<Monomial> {
    fn fill(prefix: &mut Monomial, left: usize, total: u16, out: &mut Vec<Monomial>) {
        if left == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=total).rev() {
            prefix.push(a);
            fill(prefix, left - 1, total - a, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        fill(&mut Vec::new(), vars, total, &mut out);
    }
    out
}

pub fn random_poly(rng: &mut SplitMix64, dof: usize, degree: u16) -> Poly<GaussRat> {
    let mut terms = Vec::new();
    for mono in monomials(2 * dof, degree) {
        if rng.int_in(0, 1) == 1 {
            terms.push((mono, rng.coefficient()));
        }
    }
    let out = Poly::from_terms(dof, 0, terms);
    if out.is_zero() {
        Poly::one(dof, 0)
    } else {
        out
    }
}

const GAUSSIAN_WEIGHTS: [(i64, i64); 3] = [(-1, 2), (-1, 1), (-3, 2)];

/// An integrable exp-polynomial.
pub fn random_exppoly(rng: &mut SplitMix64, dof: usize, degree: u16) -> ExpPoly<GaussRat> {
    let count = rng.int_in(1, 2);
    let mut out = ExpPoly::zero(dof, 0);
    for _ in 0..count {
        let prefactor = random_poly(rng, dof, degree);
        let (num, den) = GAUSSIAN_WEIGHTS[rng.int_in(0, 2) as usize];
        out = out.add(&ExpPoly::gaussian(prefactor, GaussRat::from_ratio(num, den)));
    }
    out
}

pub fn random_fourier(rng: &mut SplitMix64, band: i32) -> Fourier<GaussRat> {
    let mut modes = Vec::new();
    for a in -band..=band {
        for b in -band..=band {
            if rng.int_in(0, 2) == 0 {
                modes.push(((a, b), rng.coefficient()));
            }
        }
    }
    let out = Fourier::from_modes(band, modes);
    if out.is_zero() {
        Fourier::constant(band, GaussRat::from_int(1))
    } else {
        out
    }
}

/// `count` draws from one generator, in order.
pub fn probe_set<T>(seed: u64, count: usize, mut draw: impl FnMut(&mut SplitMix64) -> T) -> Vec<T> {
    let mut rng = SplitMix64::new(seed);
    (0..count).map(|_| draw(&mut rng)).collect()
}
