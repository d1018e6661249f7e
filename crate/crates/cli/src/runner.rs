//! Executes the suites of a scenario and collects a [`Report`].

use std::collections::BTreeMap;
use std::time::Instant;

use formal_kms::dynamics::{check_exp_laws, check_inner, delta_x, StarExponential};
use formal_kms::expr::{self, Expr};
use formal_kms::nullspace::{
    assemble_constraints, boltzmann_coefficients, complex_angle, nullspace_dim, periods, recover_hamiltonian,
    sup_distance_mod_constant, torus_hamiltonian, RecoveryVerdict,
};
use formal_kms::probes::{probe_set, random_exppoly, random_fourier, random_poly};
use formal_kms::states::{
    classical_kms_density, classical_kms_residual, dynamic_kms_residual, kms_construct, realify_and_positivity,
    static_kms_residual, tilde_transform, tilde_transform_classical, trace_functional, DensityFunctional, Evaluation,
};
use formal_kms::{
    Coefficient, ExpPoly, FormalSeries, Fourier, GaussRat, Integral, KmsError, KmsResult, LaurentRat, PhaseFunction, Poly,
    RingSign, Scalar, StarContext, VectorFieldSpec, C64,
};
use num_traits::Zero;

use crate::report::{
    CheckRecord, Expectation, NullspaceRecord, OrderResidual, Report, Summary, Timing, Tolerance, Value, SCHEMA_VERSION,
};
use crate::scenario::{Arithmetic, PhaseSpace, Scenario, Suite};
use crate::{CliError, CliResult};

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub truncation: Option<usize>,
    pub seed: Option<u64>,
}

enum Outcome {
    /// One residual series per probe; the worst one is reported.
    /// `tolerance` overrides the scenario's rule (used by float fallbacks).
    Residuals { rows: Vec<Vec<OrderResidual>>, two_pi: Option<u32>, tolerance: Option<f64> },
    Property { scalar: f64, passed: bool, detail: String },
}

struct Pending {
    id: String,
    suite: Suite,
    anchor: &'static str,
    params: BTreeMap<String, String>,
    expectation: Expectation,
    outcome: KmsResult<Outcome>,
    detail: String,
    millis: f64,
}

struct Collector {
    exact: bool,
    tolerance: f64,
    pending: Vec<Pending>,
    nullspace: Vec<NullspaceRecord>,
}

fn function_residuals<C: Coefficient>(s: &FormalSeries<C>) -> Vec<OrderResidual> {
    s.coeffs()
        .iter()
        .enumerate()
        .map(|(order, c)| OrderResidual {
            order,
            value: None,
            function: Some(format!("{c:?}")),
            exact_zero: c.is_zero(),
            max_abs: c.max_abs(),
        })
        .collect()
}

fn scalar_residuals<S: Scalar>(e: &Evaluation<S>) -> Vec<OrderResidual> {
    let scale = (2.0 * std::f64::consts::PI).powi(e.two_pi_power as i32);
    e.series
        .coeffs()
        .iter()
        .enumerate()
        .map(|(order, c)| OrderResidual {
            order,
            value: Some(Value::of(c)),
            function: None,
            exact_zero: Zero::is_zero(c),
            max_abs: c.magnitude() * scale,
        })
        .collect()
}

fn integral_residual<S: Scalar>(i: &Integral<S>) -> Vec<OrderResidual> {
    scalar_residuals(&Evaluation::new(FormalSeries::constant(i.value.clone(), 0), i.two_pi_power))
}

fn rows_of<C: Coefficient>(series: Vec<FormalSeries<C>>) -> Outcome {
    Outcome::Residuals { rows: series.iter().map(function_residuals).collect(), two_pi: None, tolerance: None }
}

fn evals_of<S: Scalar>(evals: Vec<Evaluation<S>>) -> Outcome {
    let two_pi = evals.first().map(|e| e.two_pi_power);
    Outcome::Residuals { rows: evals.iter().map(scalar_residuals).collect(), two_pi, tolerance: None }
}

impl Collector {
    #[allow(clippy::too_many_arguments)]
    fn check(
        &mut self,
        suite: Suite,
        name: &str,
        anchor: &'static str,
        params: &[(&str, &str)],
        expectation: Expectation,
        detail: &str,
        body: impl FnOnce() -> KmsResult<Outcome>,
    ) {
        let params: BTreeMap<String, String> = params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let suffix: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let id = if suffix.is_empty() {
            format!("{}.{name}", suite.name())
        } else {
            format!("{}.{name}@{}", suite.name(), suffix.join(","))
        };
        let start = Instant::now();
        let outcome = body();
        let millis = start.elapsed().as_secs_f64() * 1e3;
        self.pending.push(Pending { id, suite, anchor, params, expectation, outcome, detail: detail.into(), millis });
    }

    fn vanishes(&self, r: &OrderResidual, tolerance: Option<f64>) -> bool {
        match tolerance {
            Some(tol) => r.max_abs <= tol,
            None if self.exact => r.exact_zero,
            None => r.max_abs <= self.tolerance,
        }
    }

    fn finish(self, header: ReportHeader, started: Instant) -> Report {
        let tolerance = if self.exact { Tolerance::exact() } else { Tolerance::Float(self.tolerance) };
        let mut checks = Vec::new();
        let mut timing = Timing { generated_at: chrono::Utc::now().to_rfc3339(), ..Timing::default() };
        for p in &self.pending {
            timing.check_ms.insert(p.id.clone(), p.millis);
            let mut record = CheckRecord {
                id: p.id.clone(),
                suite: p.suite.name().into(),
                anchor: p.anchor.into(),
                parameters: p.params.clone(),
                residual: vec![],
                two_pi_power: None,
                scalar: None,
                probes: 0,
                expectation: p.expectation.clone(),
                tolerance: tolerance.clone(),
                passed: false,
                detail: p.detail.clone(),
                error: None,
            };
            match &p.outcome {
                Err(e) => record.error = Some(e.to_string()),
                Ok(Outcome::Residuals { rows, two_pi, tolerance: override_tol }) => {
                    record.probes = rows.len();
                    record.two_pi_power = *two_pi;
                    if let Some(tol) = override_tol {
                        record.tolerance = Tolerance::Float(*tol);
                    }
                    let zero = |row: &Vec<OrderResidual>| row.iter().all(|r| self.vanishes(r, *override_tol));
                    record.passed = match p.expectation {
                        Expectation::Nonzero => !rows.is_empty() && rows.iter().all(|r| !zero(r)),
                        _ => rows.iter().all(zero),
                    };
                    // the first failing probe, else the largest residual
                    let worst = match p.expectation {
                        Expectation::Nonzero => rows.iter().find(|r| zero(r)),
                        _ => rows.iter().find(|r| !zero(r)),
                    }
                    .or_else(|| {
                        rows.iter().max_by(|a, b| {
                            let m = |r: &Vec<OrderResidual>| r.iter().map(|x| x.max_abs).fold(0.0, f64::max);
                            m(a).total_cmp(&m(b))
                        })
                    });
                    record.residual = worst.cloned().unwrap_or_default();
                }
                Ok(Outcome::Property { scalar, passed, detail }) => {
                    record.scalar = Some(*scalar);
                    record.passed = *passed;
                    record.expectation = Expectation::Property;
                    record.detail = format!("{}; {detail}", p.detail);
                }
            }
            checks.push(record);
        }
        let passed = checks.iter().filter(|c| c.passed).count();
        timing.total_ms = started.elapsed().as_secs_f64() * 1e3;
        Report {
            schema_version: SCHEMA_VERSION.into(),
            scenario: header.name,
            description: header.description,
            phase_space: header.phase_space,
            arithmetic: header.arithmetic,
            seed: header.seed,
            truncation: header.truncation,
            suites: header.suites,
            summary: Summary { total: checks.len(), passed, failed: checks.len() - passed },
            checks,
            nullspace: self.nullspace,
            timing,
        }
    }
}

struct ReportHeader {
    name: String,
    description: String,
    phase_space: String,
    arithmetic: String,
    seed: u64,
    truncation: usize,
    suites: Vec<String>,
}

fn cast<S: Scalar>(g: &GaussRat) -> S {
    S::from_rational(&g.re, &g.im)
}

fn parse_constant(text: &str, field: &str) -> CliResult<GaussRat> {
    expr::parse(text)
        .map_err(|e| CliError::Scenario(format!("field `{field}`, entry '{text}': {e}")))?
        .constant()
        .ok_or_else(|| CliError::Scenario(format!("field `{field}`, entry '{text}': not a constant")))
}

fn parse_expr(text: &str, field: &str) -> CliResult<Expr> {
    expr::parse(text).map_err(|e| CliError::Scenario(format!("field `{field}`, expression '{text}': {e}")))
}

/// Runs every selected suite of the scenario, in declaration order.
pub fn run_scenario(scenario: &Scenario, overrides: Overrides) -> CliResult<Report> {
    let started = Instant::now();
    let truncation = overrides.truncation.unwrap_or(scenario.truncation);
    let seed = overrides.seed.unwrap_or(scenario.seed);
    let betas: Vec<(String, GaussRat)> =
        scenario.beta.iter().map(|b| parse_constant(b, "beta").map(|v| (b.clone(), v))).collect::<CliResult<_>>()?;
    let times: Vec<(String, GaussRat)> =
        scenario.t.iter().map(|t| parse_constant(t, "t").map(|v| (t.clone(), v))).collect::<CliResult<_>>()?;
    let exact = scenario.arithmetic == Arithmetic::Exact;
    let mut col = Collector { exact, tolerance: scenario.float_tolerance, pending: vec![], nullspace: vec![] };
    let plan = Plan { scenario, truncation, seed, betas: &betas, times: &times };
    if !scenario.suites.is_empty() {
        match (scenario.phase_space, scenario.arithmetic) {
            (PhaseSpace::Flat, Arithmetic::Exact) => run_flat::<GaussRat>(&plan, &mut col)?,
            (PhaseSpace::Flat, Arithmetic::Float) => run_flat::<C64>(&plan, &mut col)?,
            (PhaseSpace::Torus, Arithmetic::Exact) => run_torus::<GaussRat>(&plan, &mut col)?,
            (PhaseSpace::Torus, Arithmetic::Float) => run_torus::<C64>(&plan, &mut col)?,
        }
    }
    let header = ReportHeader {
        name: scenario.name.clone(),
        description: scenario.description.clone(),
        phase_space: match scenario.phase_space {
            PhaseSpace::Flat => format!("R^{}", 2 * scenario.dof),
            PhaseSpace::Torus => "T^2".into(),
        },
        arithmetic: if exact { "exact".into() } else { "float".into() },
        seed,
        truncation,
        suites: scenario.suites.iter().map(|s| s.name().to_string()).collect(),
    };
    Ok(col.finish(header, started))
}

struct Plan<'a> {
    scenario: &'a Scenario,
    truncation: usize,
    seed: u64,
    betas: &'a [(String, GaussRat)],
    times: &'a [(String, GaussRat)],
}

/// Probe streams: stream `k` draws from seed `seed + k`.
const POLY_STREAM: u64 = 0;
const EXP_STREAM: u64 = 1;
const FOURIER_STREAM: u64 = 2;

fn run_flat<S: Scalar>(plan: &Plan, col: &mut Collector) -> CliResult<()> {
    let sc = plan.scenario;
    let n = sc.dof;
    let text = sc.hamiltonian.as_deref().expect("validated: flat scenarios carry a Hamiltonian");
    let h_expr = parse_expr(text, "hamiltonian")?;
    let h: ExpPoly<S> = h_expr
        .to_exppoly(n)
        .map_err(|e| CliError::Scenario(format!("field `hamiltonian`: {e}")))?
        .map_scalar(cast);
    let ctx = StarContext::new(&ExpPoly::<S>::zero(n, 0), plan.truncation)
        .map_err(|e| CliError::Scenario(e.to_string()))?;
    let x = VectorFieldSpec::hamiltonian(h.clone());
    let count = sc.probes.count;
    let lift = |f: ExpPoly<GaussRat>| ctx.lift(&f.map_scalar(cast::<S>)).expect("probe layout matches the context");
    let polys: Vec<FormalSeries<ExpPoly<S>>> =
        probe_set(plan.seed.wrapping_add(POLY_STREAM), count, |r| random_poly(r, n, sc.probes.degree))
            .into_iter()
            .map(|p| lift(ExpPoly::from(p)))
            .collect();
    let exps: Vec<FormalSeries<ExpPoly<S>>> =
        probe_set(plan.seed.wrapping_add(EXP_STREAM), count, |r| random_exppoly(r, n, sc.probes.degree))
            .into_iter()
            .map(lift)
            .collect();
    let pairs = |v: &[FormalSeries<ExpPoly<S>>]| -> Vec<(usize, usize)> {
        (0..v.len()).map(|i| (i, (i + 1) % v.len())).collect()
    };
    let betas: Vec<(&str, S)> = plan.betas.iter().map(|(s, b)| (s.as_str(), cast::<S>(b))).collect();

    for suite in &sc.suites {
        match suite {
            Suite::Moyal => {
                col.check(*suite, "associativity", "associativity of the star product", &[], Expectation::Zero,
                    "(f*g)*h − f*(g*h) over cyclic probe triples", || {
                        let rows = (0..polys.len())
                            .map(|i| {
                                let (a, b, c) = (&polys[i], &polys[(i + 1) % count], &polys[(i + 2) % count]);
                                ctx.check_associativity(a, b, c)
                            })
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
                col.check(*suite, "hermitian", "complex conjugation is an anti-automorphism", &[], Expectation::Zero,
                    "conj(f*g) − conj(g)*conj(f) over probe pairs", || {
                        let rows = pairs(&polys).into_iter().map(|(i, j)| ctx.check_hermitian(&polys[i], &polys[j]))
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
                col.check(*suite, "canonical-commutator", "canonical commutation relation", &[], Expectation::Zero,
                    "q_i*p_i − p_i*q_i − iλ for each degree of freedom", || {
                        let rows = (0..n)
                            .map(|i| {
                                let q = lift(ExpPoly::from(Poly::q(n, i)));
                                let p = lift(ExpPoly::from(Poly::p(n, i)));
                                let il = FormalSeries::monomial(ExpPoly::from(Poly::constant(n, 0, S::i())), 1, plan.truncation);
                                Ok(ctx.commutator(&q, &p)?.sub(&il))
                            })
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
                col.check(*suite, "ad-raises-order", "ad(H) raises the λ-order", &[], Expectation::Zero,
                    "λ⁰ coefficient of H*f − f*H", || {
                        let hs = ctx.lift(&h)?;
                        let rows = polys.iter().map(|f| Ok(ctx.ad(&hs, f)?.truncate(0))).collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
            }
            Suite::ExpLaws => {
                for (i, (bs, b)) in betas.iter().enumerate() {
                    for (bs2, b2) in &betas[i..] {
                        col.check(*suite, "group-law", "star exponential group law", &[("beta", bs), ("beta_prime", bs2)],
                            Expectation::Zero, "Exp(βH)*Exp(β′H) − Exp((β+β′)H)", || {
                                Ok(rows_of(vec![check_exp_laws(&ctx, &h, b.clone(), b2.clone())?.group_law]))
                            });
                    }
                    col.check(*suite, "commutes-with-h", "Exp(βH) commutes with H", &[("beta", bs)], Expectation::Zero,
                        "Exp(βH)*H − H*Exp(βH)", || {
                            Ok(rows_of(vec![check_exp_laws(&ctx, &h, b.clone(), S::zero())?.commutes_with_h]))
                        });
                    col.check(*suite, "differential-equation", "Exp(βH) solves d/dβ f = H*f", &[("beta", bs)],
                        Expectation::Zero, "∂_b Exp(bH) − H*Exp(bH) with b symbolic, at b = β", || {
                            Ok(rows_of(vec![exp_ode_residual(&ctx, &h, b)?]))
                        });
                }
            }
            Suite::Inner => {
                for (bs, b) in &betas {
                    col.check(*suite, "inner-automorphism", "e^{βδ_X} is conjugation by Exp(±βH)", &[("beta", bs)],
                        Expectation::Zero, "e^{βδ_X}f − Exp(βH)*f*Exp(−βH) over probes", || {
                            let rows = polys.iter().map(|f| check_inner(&ctx, &x, b.clone(), f)).collect::<KmsResult<_>>()?;
                            Ok(rows_of(rows))
                        });
                }
            }
            Suite::KmsStatic => {
                for (bs, b) in &betas {
                    col.check(*suite, "static", "static KMS condition for tr(Exp(−βH)*·)", &[("beta", bs)],
                        Expectation::Zero, "μ(f*g) − μ(g*e^{−βδ_X}f) over probe pairs", || {
                            let mu = kms_construct(&ctx, &h, b.clone())?;
                            let rows = pairs(&exps).into_iter()
                                .map(|(i, j)| static_kms_residual(&ctx, &mu, &x, b, &exps[i], &exps[j]))
                                .collect::<KmsResult<_>>()?;
                            Ok(evals_of(rows))
                        });
                    col.check(*suite, "tilde-is-trace", "the transformed state μ(Exp(βH)*·) is a trace", &[("beta", bs)],
                        Expectation::Zero, "μ̃(f*g − g*f) over probe pairs", || {
                            let mu = kms_construct(&ctx, &h, b.clone())?;
                            let tilde = tilde_transform(&ctx, &mu, &h, b.clone())?;
                            let rows = pairs(&exps).into_iter()
                                .map(|(i, j)| tilde.eval(&ctx.commutator(&exps[i], &exps[j])?))
                                .collect::<KmsResult<_>>()?;
                            Ok(evals_of(rows))
                        });
                    if !Zero::is_zero(b) {
                        col.check(*suite, "negative-control", "the bare trace is not KMS at β ≠ 0", &[("beta", bs)],
                            Expectation::Nonzero, "μ = tr on f = q₁e^{−H₀/2}, g = p₁e^{−H₀/2}", || {
                                let tr = trace_functional(&ctx);
                                let half = S::from_ratio(-1, 2);
                                let f = lift_s(&ctx, ExpPoly::gaussian(Poly::q(n, 0), half.clone()))?;
                                let g = lift_s(&ctx, ExpPoly::gaussian(Poly::p(n, 0), half))?;
                                Ok(evals_of(vec![static_kms_residual(&ctx, &tr, &x, b, &f, &g)?]))
                            });
                    }
                }
            }
            Suite::KmsDynamic => {
                for ((bs, b), (_, b_exact)) in betas.iter().zip(plan.betas) {
                    for (ts, t) in plan.times {
                        let mut detail = "μ(A_t f * g) − μ(g * A_{t+iλβ} f), exact affine flow".to_string();
                        col.check(*suite, "dynamic", "dynamic KMS condition", &[("beta", bs), ("t", ts)],
                            Expectation::Zero, "", || {
                                let exact_attempt = (|| {
                                    let mu = kms_construct(&ctx, &h, b.clone())?;
                                    pairs(&exps).into_iter()
                                        .map(|(i, j)| dynamic_kms_residual(&ctx, &mu, &x, &cast::<S>(t), b, &exps[i], &exps[j]))
                                        .collect::<KmsResult<Vec<_>>>()
                                })();
                                match exact_attempt {
                                    Err(KmsError::Unsupported(_)) if S::EXACT => {
                                        match dynamic_in::<LaurentRat>(plan, &h_expr, b_exact, t, None) {
                                            Err(KmsError::Unsupported(why)) => {
                                                detail = format!("{detail}; the propagator is not exact ({why}), evaluated in Complex64");
                                                dynamic_in::<C64>(plan, &h_expr, b_exact, t, Some(sc.float_tolerance))
                                            }
                                            other => {
                                                detail = format!("{detail}; cos t and sin t represented exactly in Q(i)[e^{{i}}, e^{{-i}}]");
                                                other
                                            }
                                        }
                                    }
                                    other => other.map(evals_of),
                                }
                            });
                        col.pending.last_mut().expect("just pushed").detail = detail;
                    }
                }
            }
            Suite::KmsClassical => {
                let hp = h.as_poly();
                let e0: Vec<ExpPoly<S>> = exps.iter().map(|f| f.coeff(0).expect("λ⁰").clone()).collect();
                for (bs, b) in &betas {
                    col.check(*suite, "classical", "classical static KMS condition for e^{−βH}Ω", &[("beta", bs)],
                        Expectation::Zero, "μ₀({f,g} − βg L_X f) over probe pairs", || {
                            let hp = hp.clone().ok_or_else(|| KmsError::Unsupported("classical suite needs a polynomial Hamiltonian".into()))?;
                            let mu0 = classical_kms_density(&hp, b);
                            let rows = (0..e0.len())
                                .map(|i| classical_kms_residual(&mu0, &x, b, &e0[i], &e0[(i + 1) % e0.len()]).map(|v| integral_residual(&v)))
                                .collect::<KmsResult<_>>()?;
                            Ok(Outcome::Residuals { rows, two_pi: Some(n as u32), tolerance: None })
                        });
                    col.check(*suite, "classical-tilde", "e^{βH}μ₀ is the Liouville measure", &[("beta", bs)],
                        Expectation::Property, "density of the transformed classical state", || {
                            let hp = hp.clone().ok_or_else(|| KmsError::Unsupported("classical suite needs a polynomial Hamiltonian".into()))?;
                            let tilde = tilde_transform_classical(&classical_kms_density(&hp, b), &hp, b);
                            let one = ExpPoly::from(Poly::one(n, 0));
                            let defect = tilde.density.sub(&one);
                            let probe = e0.iter().map(|f| Ok(tilde.eval(f)?.value - one.mul(f).integrate()?.value))
                                .collect::<KmsResult<Vec<S>>>()?;
                            let worst = probe.iter().map(|v| v.magnitude()).fold(defect.max_abs(), f64::max);
                            let passed = if S::EXACT { worst == 0.0 } else { worst <= col_tol(S::EXACT, plan) };
                            Ok(Outcome::Property { scalar: worst, passed, detail: "largest deviation from ∫f Ω".into() })
                        });
                }
                col.check(*suite, "zero-temperature", "at β = 0 the classical condition is the trace condition",
                    &[], Expectation::Zero, "∫{f,g} Ω over probe pairs", || {
                        let mu0 = DensityFunctional::new(ExpPoly::from(Poly::one(n, 0)));
                        let rows = (0..e0.len())
                            .map(|i| classical_kms_residual(&mu0, &x, &S::zero(), &e0[i], &e0[(i + 1) % e0.len()]).map(|v| integral_residual(&v)))
                            .collect::<KmsResult<_>>()?;
                        Ok(Outcome::Residuals { rows, two_pi: Some(n as u32), tolerance: None })
                    });
            }
            Suite::Positivity => {
                let mut report = None;
                col.check(*suite, "reality", "the realified trace is real", &[], Expectation::Zero,
                    "tr(f̄) − conj(tr f) over probes", || {
                        let (_, rep) = realify_and_positivity(&ctx, &trace_functional(&ctx), &exps)?;
                        let out = evals_of(rep.reality_residuals.clone());
                        report = Some(rep);
                        Ok(out)
                    });
                col.check(*suite, "positivity", "tr(f̄*f) is positive in the ring order", &[], Expectation::Property,
                    "ring sign of tr(f̄*f) per probe, after one global sign normalization", || {
                        let rep = report.ok_or_else(|| KmsError::Precondition("reality check failed to evaluate".into()))?;
                        let positive = rep.signs.iter().filter(|s| **s == RingSign::Positive).count();
                        Ok(Outcome::Property {
                            scalar: positive as f64,
                            passed: rep.all_positive() && rep.gelfand_trivial(),
                            detail: format!("{positive}/{} positive, sign flipped: {}", rep.signs.len(), rep.flipped),
                        })
                    });
            }
            Suite::Nullspace => {
                col.check(*suite, "unsupported", "finite Fourier rank experiment", &[], Expectation::Property,
                    "nullspace experiments run on the torus", || {
                        Err(KmsError::Unsupported("the nullspace suite needs phase_space = \"torus\"".into()))
                    });
            }
        }
    }
    Ok(())
}

fn col_tol(exact: bool, plan: &Plan) -> f64 {
    if exact {
        0.0
    } else {
        plan.scenario.float_tolerance
    }
}

fn lift_s<S: Scalar>(ctx: &StarContext<ExpPoly<S>>, f: ExpPoly<S>) -> KmsResult<FormalSeries<ExpPoly<S>>> {
    ctx.lift(&f)
}

/// `∂_b Exp(bH) − H * Exp(bH)` from the symbolic corrections, at `b = β`.
fn exp_ode_residual<S: Scalar>(
    ctx: &StarContext<ExpPoly<S>>,
    h: &ExpPoly<S>,
    beta: &S,
) -> KmsResult<FormalSeries<ExpPoly<S>>> {
    let e = StarExponential::new(ctx, h, beta.clone())?;
    let hp = e.hamiltonian().clone();
    let n = hp.dof();
    // Exp(bH) = e^{bH} Σ λ^k g^{(k)}(b): ∂_b gives e^{bH}(H g^{(k)} + ∂_b g^{(k)})
    let weight = hp.scale(beta);
    let derivative: Vec<ExpPoly<S>> = (0..=e.order())
        .map(|k| {
            let g = e.correction(k);
            let dg = e.symbolic_correction(k).derivative(2 * n).substitute(2 * n, beta).without_params(1)?;
            Ok(ExpPoly::term(hp.mul(&g).add(&dg), weight.clone()))
        })
        .collect::<KmsResult<_>>()?;
    let lhs = FormalSeries::new(derivative)?;
    let rhs = ctx.star(&ctx.lift(h)?, &e.series())?;
    Ok(lhs.sub(&rhs))
}

/// The dynamic KMS residuals with every ingredient rebuilt over Complex64.
/// Re-runs the dynamic check over another scalar field `T`.
fn dynamic_in<T: Scalar>(plan: &Plan, h_expr: &Expr, beta: &GaussRat, t: &GaussRat, tolerance: Option<f64>) -> KmsResult<Outcome> {
    let sc = plan.scenario;
    let n = sc.dof;
    let h: ExpPoly<T> = h_expr.to_exppoly(n)?.map_scalar(cast);
    let ctx = StarContext::new(&ExpPoly::<T>::zero(n, 0), plan.truncation)?;
    let x = VectorFieldSpec::hamiltonian(h.clone());
    let exps: Vec<FormalSeries<ExpPoly<T>>> =
        probe_set(plan.seed.wrapping_add(EXP_STREAM), sc.probes.count, |r| random_exppoly(r, n, sc.probes.degree))
            .into_iter()
            .map(|f| ctx.lift(&f.map_scalar(cast)))
            .collect::<KmsResult<_>>()?;
    let (b, t) = (cast::<T>(beta), cast::<T>(t));
    let mu = kms_construct(&ctx, &h, b.clone())?;
    let rows = (0..exps.len())
        .map(|i| dynamic_kms_residual(&ctx, &mu, &x, &t, &b, &exps[i], &exps[(i + 1) % exps.len()]))
        .collect::<KmsResult<Vec<_>>>()?;
    let Outcome::Residuals { rows, two_pi, .. } = evals_of(rows) else { unreachable!() };
    Ok(Outcome::Residuals { rows, two_pi, tolerance })
}

fn run_torus<S: Scalar>(plan: &Plan, col: &mut Collector) -> CliResult<()> {
    let sc = plan.scenario;
    let band = sc.probes.band;
    let field_exact = |b: i32| -> CliResult<VectorFieldSpec<Fourier<GaussRat>>> {
        let scenario_err = |field: &str, e: KmsError| CliError::Scenario(format!("field `{field}`: {e}"));
        match (&sc.hamiltonian, &sc.one_form) {
            (Some(text), _) => {
                let h = parse_expr(text, "hamiltonian")?.to_fourier(b).map_err(|e| scenario_err("hamiltonian", e))?;
                Ok(VectorFieldSpec::hamiltonian(h))
            }
            (None, Some(parts)) => {
                let comps = parts
                    .iter()
                    .map(|p| parse_expr(p, "one_form")?.to_fourier(b).map_err(|e| scenario_err("one_form", e)))
                    .collect::<CliResult<Vec<_>>>()?;
                VectorFieldSpec::closed_one_form(comps).map_err(|e| scenario_err("one_form", e))
            }
            (None, None) => unreachable!("validated"),
        }
    };
    // wide enough to hold the spectrum of the field itself
    let field_band = 16;
    let x_exact = field_exact(field_band)?;
    let width = x_exact.one_form().iter().map(Fourier::spectral_width).max().unwrap_or(0);
    for suite in &sc.suites {
        match suite {
            Suite::Moyal => {
                let ctx_band = 3 * band + 2 * width + 2;
                let ctx = StarContext::new(&Fourier::<S>::zero(ctx_band), plan.truncation)
                    .map_err(|e| CliError::Scenario(e.to_string()))?;
                let x = match &x_exact {
                    VectorFieldSpec::Hamiltonian(h) => VectorFieldSpec::hamiltonian(h.with_band(ctx_band).map_scalar(cast::<S>)),
                    VectorFieldSpec::ClosedOneForm(a) => VectorFieldSpec::ClosedOneForm(
                        a.iter().map(|c| c.with_band(ctx_band).map_scalar(cast::<S>)).collect(),
                    ),
                };
                let probes: Vec<FormalSeries<Fourier<S>>> =
                    probe_set(plan.seed.wrapping_add(FOURIER_STREAM), sc.probes.count, |r| random_fourier(r, band))
                        .into_iter()
                        .map(|f| ctx.lift(&f.with_band(ctx_band).map_scalar(cast::<S>)).expect("probe band"))
                        .collect();
                let m = probes.len();
                col.check(*suite, "associativity", "associativity of the star product", &[], Expectation::Zero,
                    "(f*g)*h − f*(g*h) over cyclic probe triples", || {
                        let rows = (0..m)
                            .map(|i| ctx.check_associativity(&probes[i], &probes[(i + 1) % m], &probes[(i + 2) % m]))
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
                col.check(*suite, "hermitian", "complex conjugation is an anti-automorphism", &[], Expectation::Zero,
                    "conj(f*g) − conj(g)*conj(f) over probe pairs", || {
                        let rows = (0..m).map(|i| ctx.check_hermitian(&probes[i], &probes[(i + 1) % m]))
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
                col.check(*suite, "derivation", "δ_X is a derivation of the star product", &[], Expectation::Zero,
                    "δ(f*g) − δf*g − f*δg over probe pairs", || {
                        let rows = (0..m)
                            .map(|i| {
                                let (f, g) = (&probes[i], &probes[(i + 1) % m]);
                                let lhs = delta_x(&ctx, &x, &ctx.star(f, g)?)?;
                                let rhs = ctx.star(&delta_x(&ctx, &x, f)?, g)?.add(&ctx.star(f, &delta_x(&ctx, &x, g)?)?);
                                Ok(lhs.sub(&rhs))
                            })
                            .collect::<KmsResult<_>>()?;
                        Ok(rows_of(rows))
                    });
            }
            Suite::Nullspace => {
                let spec = sc.nullspace.as_ref().expect("validated");
                let hamiltonian = torus_hamiltonian(&x_exact);
                let (pa, pb) = periods(&x_exact);
                for (bs, beta) in plan.betas {
                    let beta_re = beta.re.clone();
                    let beta_f = beta.to_c64().re;
                    let expected = if Zero::is_zero(beta) || hamiltonian.is_some() { 1 } else { 0 };
                    let mut record = None;
                    col.check(*suite, "dimension", "dimension of the classical KMS solution space", &[("beta", bs)],
                        Expectation::Property, "numerical nullity of the exactly assembled constraint matrix", || {
                            if !Zero::is_zero(&beta.im) {
                                return Err(KmsError::Domain("β must be real".into()));
                            }
                            let cs = assemble_constraints(spec.n_test, spec.n_mu, &beta_re, &x_exact)?;
                            let res = nullspace_dim(&cs, spec.rel_tol)?;
                            let verdict = match (expected, res.dimension) {
                                (0, 0) => format!(
                                    "dimension 0: consistent with nonexistence of KMS states for a non-exact field (periods {}, {})",
                                    pa.to_c64().re, pb.to_c64().re
                                ),
                                (1, 1) if Zero::is_zero(beta) => "dimension 1: the uniform density (trace)".into(),
                                (1, 1) => "dimension 1: a unique classical KMS density, as for e^{−βH}".into(),
                                (e, d) => format!("dimension {d}, expected {e}"),
                            };
                            let passed = res.dimension == expected;
                            let rec = NullspaceRecord {
                                beta: bs.clone(),
                                n_test: spec.n_test,
                                n_mu: spec.n_mu,
                                rel_tol: spec.rel_tol,
                                rows: cs.rows.len(),
                                columns: cs.columns.len(),
                                dimension: res.dimension,
                                expected_dimension: expected,
                                singular_values: res.spectrum.clone(),
                                gap_ratio: res.gap_ratio.is_finite().then_some(res.gap_ratio),
                                boltzmann_angle: None,
                                recovery_error: None,
                                verdict: verdict.clone(),
                            };
                            record = Some((rec, res));
                            Ok(Outcome::Property { scalar: record.as_ref().unwrap().1.dimension as f64, passed, detail: verdict })
                        });
                    let Some((mut rec, res)) = record else { continue };
                    if expected == 1 && res.dimension == 1 && !Zero::is_zero(beta) {
                        let h = hamiltonian.clone().expect("exact field");
                        let h64 = h.map_scalar(|c| c.to_c64());
                        col.check(*suite, "gap", "separation of the near-null direction", &[("beta", bs)],
                            Expectation::Property, "smallest retained over largest discarded singular value", || {
                                let g = res.gap_ratio;
                                Ok(Outcome::Property { scalar: g, passed: g >= spec.gap_threshold, detail: format!("threshold {:e}", spec.gap_threshold) })
                            });
                        let angle = complex_angle(&boltzmann_coefficients(&h64, beta_f, &res.columns, 64), &res.null_vectors[0]);
                        rec.boltzmann_angle = Some(angle);
                        col.check(*suite, "boltzmann-angle", "null vector against the coefficients of e^{−βH}", &[("beta", bs)],
                            Expectation::Property, "angle in radians (trapezoidal coefficients, 64² nodes)", || {
                                Ok(Outcome::Property { scalar: angle, passed: angle < spec.angle_tolerance, detail: format!("tolerance {:e}", spec.angle_tolerance) })
                            });
                        let mut recovery = None;
                        col.check(*suite, "recover-hamiltonian", "H = −(1/β) ln ρ from the null density", &[("beta", bs)],
                            Expectation::Property, "sup error modulo constants on a 32² grid", || {
                                let density = res.null_density(spec.n_mu).expect("one null vector");
                                let rec = recover_hamiltonian(&density, beta_f, 32)?;
                                if let RecoveryVerdict::NonPositiveDensity { worst } = rec.verdict {
                                    return Err(KmsError::Domain(format!("null density is not positive (minimum {worst:e})")));
                                }
                                let exact: Vec<f64> = h64.sample_grid(32).iter().map(|z| z.re).collect();
                                let err = sup_distance_mod_constant(&rec.samples, &exact);
                                recovery = Some(err);
                                Ok(Outcome::Property { scalar: err, passed: err < spec.recovery_tolerance, detail: format!("tolerance {:e}", spec.recovery_tolerance) })
                            });
                        rec.recovery_error = recovery;
                    }
                    col.nullspace.push(rec);
                }
            }
            other => {
                col.check(*other, "unsupported", "suite availability", &[], Expectation::Property,
                    "suite selection on the torus", || {
                        Err(KmsError::Unsupported(format!(
                            "suite `{}` runs on R^{{2n}}; the torus supports moyal and nullspace",
                            other.name()
                        )))
                    });
            }
        }
    }
    Ok(())
}
