//! Declarative scenario files (TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSpace {
    /// R^{2n} with the exp-polynomial backend.
    Flat,
    /// T² with the Fourier backend.
    Torus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Moyal,
    ExpLaws,
    Inner,
    KmsStatic,
    KmsDynamic,
    KmsClassical,
    Positivity,
    Nullspace,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Moyal => "moyal",
            Suite::ExpLaws => "exp-laws",
            Suite::Inner => "inner",
            Suite::KmsStatic => "kms-static",
            Suite::KmsDynamic => "kms-dynamic",
            Suite::KmsClassical => "kms-classical",
            Suite::Positivity => "positivity",
            Suite::Nullspace => "nullspace",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    /// Polynomial degree on R^{2n}.
    #[serde(default = "default_degree")]
    pub degree: u16,
    /// Fourier band on T².
    #[serde(default = "default_band")]
    pub band: i32,
}

fn default_count() -> usize {
    10
}
fn default_degree() -> u16 {
    3
}
fn default_band() -> i32 {
    2
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self { count: default_count(), degree: default_degree(), band: default_band() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullspaceSpec {
    pub n_test: i32,
    pub n_mu: i32,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Minimum singular-value gap for an accepted near-null direction.
    #[serde(default = "default_gap")]
    pub gap_threshold: f64,
    /// Maximum angle between the null vector and the Boltzmann coefficients.
    #[serde(default = "default_angle")]
    pub angle_tolerance: f64,
    /// Sup-error bound for the recovered Hamiltonian (modulo constants).
    #[serde(default = "default_recovery")]
    pub recovery_tolerance: f64,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_gap() -> f64 {
    1e3
}
fn default_angle() -> f64 {
    1e-3
}
fn default_recovery() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub phase_space: PhaseSpace,
    #[serde(default = "default_dof")]
    pub dof: usize,
    #[serde(default = "default_arithmetic")]
    pub arithmetic: Arithmetic,
    pub truncation: usize,
    /// Global Hamiltonian, or absent when `one_form` is given.
    pub hamiltonian: Option<String>,
    /// Components of a closed one-form on T² (coefficients of dθ₁, dθ₂).
    pub one_form: Option<Vec<String>>,
    #[serde(default)]
    pub beta: Vec<String>,
    #[serde(default)]
    pub t: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub probes: ProbeSpec,
    pub nullspace: Option<NullspaceSpec>,
    /// Tolerance for the float arithmetic mode.
    #[serde(default = "default_float_tol")]
    pub float_tolerance: f64,
}

fn default_dof() -> usize {
    1
}
fn default_arithmetic() -> Arithmetic {
    Arithmetic::Exact
}
fn default_float_tol() -> f64 {
    1e-9
}

impl Scenario {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| CliError::Config { origin: origin.to_string(), message: describe(&e, text) })?;
        scenario.validate(origin)?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn validate(&self, origin: &str) -> CliResult<()> {
        let fail = |message: String| Err(CliError::Config { origin: origin.to_string(), message });
        match (&self.hamiltonian, &self.one_form) {
            (Some(_), Some(_)) => return fail("give either `hamiltonian` or `one_form`, not both".into()),
            (None, None) => return fail("missing `hamiltonian` (or `one_form` on the torus)".into()),
            (None, Some(_)) if self.phase_space == PhaseSpace::Flat => {
                return fail("field `one_form`: closed one-forms on R^{2n} are exact; give `hamiltonian`".into())
            }
            (None, Some(a)) if a.len() != 2 => return fail(format!("field `one_form`: expected 2 components, got {}", a.len())),
            _ => {}
        }
        if self.phase_space == PhaseSpace::Torus && self.dof != 1 {
            return fail("field `dof`: the torus T² has one degree of freedom".into());
        }
        if self.dof == 0 {
            return fail("field `dof`: must be at least 1".into());
        }
        if self.suites.contains(&Suite::Nullspace) && self.nullspace.is_none() {
            return fail("suite `nullspace` needs a [nullspace] table".into());
        }
        Ok(())
    }
}

/// Line/column diagnostics for a TOML error.
fn describe(err: &toml::de::Error, text: &str) -> String {
    match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            format!("line {line}, column {column}: {}", err.message())
        }
        None => err.message().to_string(),
    }
}

/// Scenarios shipped with the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("harmonic-kms", include_str!("../scenarios/harmonic-kms.toml")),
    ("torus-nonexistence", include_str!("../scenarios/torus-nonexistence.toml")),
    ("torus-hamiltonian", include_str!("../scenarios/torus-hamiltonian.toml")),
];

pub fn bundled(name: &str) -> Option<CliResult<Scenario>> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(n, text)| Scenario::parse(text, &format!("bundled:{n}")))
}

/// A bundled name or a path to a TOML file.
pub fn resolve(spec: &str) -> CliResult<Scenario> {
    match bundled(spec) {
        Some(s) => s,
        None => Scenario::load(Path::new(spec)),
    }
}
