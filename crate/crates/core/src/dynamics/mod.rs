//! Derivations, automorphism groups, the star exponential and time evolution.

pub mod derivation;
pub mod flow;
pub mod numeric;
pub mod star_exp;

pub use derivation::{delta_x, exp_delta_x};
pub use flow::{complexify_exact, evolve_exact, translate_torus, AffineFlow, AffinePullback};
pub use numeric::{evolve_numeric, NumericEvolution, NumericOptions};
pub use star_exp::{check_exp_laws, check_inner, star_exp, ExpLawResiduals, StarExponential};
