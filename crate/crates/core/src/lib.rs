//! Formal KMS states for Moyal deformation quantization.
//!
//! Everything is generic over the coefficient scalar (`Complex<f32>`,
//! `Complex<f64>` or exact Gaussian rationals) and over the function backend
//! (polynomials, polynomial-times-exponential, Fourier series on T²).

pub mod backends;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod laurent;
pub mod moyal;
pub mod nullspace;
pub mod probes;
pub mod scalar;
pub mod series;
pub mod states;

pub use backends::exppoly::ExpPoly;
pub use backends::fourier::Fourier;
pub use backends::poly::Poly;
pub use backends::{lie_derivative, poisson_bracket, Integral, PhaseFunction, VectorFieldSpec};
pub use error::{KmsError, KmsResult};
pub use laurent::LaurentRat;
pub use moyal::StarContext;
pub use scalar::{GaussRat, Scalar};
pub use series::{Coefficient, FormalSeries, RingSign, ScalarSeries};

pub type C64 = num_complex::Complex64;
pub type C32 = num_complex::Complex32;

pub type ExactPoly = Poly<GaussRat>;
pub type FloatPoly = Poly<C64>;
pub type ExactExpPoly = ExpPoly<GaussRat>;
pub type FloatExpPoly = ExpPoly<C64>;
pub type ExactFourier = Fourier<GaussRat>;
pub type FloatFourier = Fourier<C64>;

pub type ExactSeries<C> = FormalSeries<C>;
