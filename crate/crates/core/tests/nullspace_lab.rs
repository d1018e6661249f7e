use formal_kms::nullspace::{
    assemble_constraints, complex_angle, nullspace_dim, recover_hamiltonian, sup_distance_mod_constant, RecoveryVerdict,
};
use formal_kms::scalar::rational;
use formal_kms::{ExactFourier, FloatFourier, GaussRat, Scalar, VectorFieldSpec, C64};

/// I_m(x) by its power series.
fn bessel_i(m: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for j in 1..60 {
        term *= (x / 2.0).powi(2) / (j as f64 * (j + m) as f64);
        sum += term;
    }
    sum
}

/// Fourier coefficient of e^{−β cos θ₁} at mode m: (−1)^{m₁} I_{|m₁|}(β) δ_{m₂,0}.
fn boltzmann_oracle(m: (i32, i32), beta: f64) -> C64 {
    if m.1 != 0 {
        return C64::new(0.0, 0.0);
    }
    let sign = if m.0 % 2 == 0 { 1.0 } else { -1.0 };
    C64::new(sign * bessel_i(m.0.unsigned_abs(), beta), 0.0)
}

fn cos_field() -> VectorFieldSpec<ExactFourier> {
    VectorFieldSpec::hamiltonian(ExactFourier::cos(1, (1, 0)))
}

fn hamiltonian_run(n_test: i32, n_mu: i32) -> (usize, f64, f64) {
    let beta = rational(1, 2);
    let cs = assemble_constraints(n_test, n_mu, &beta, &cos_field()).unwrap();
    let res = nullspace_dim(&cs, 1e-8).unwrap();
    let oracle: Vec<C64> = res.columns.iter().map(|m| boltzmann_oracle(*m, 0.5)).collect();
    let angle = complex_angle(&oracle, &res.null_vectors[0]);
    (res.dimension, res.gap_ratio, angle)
}

#[test]
fn bessel_oracle_sanity() {
    // I_0(1) and I_1(1)
    assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-15);
    assert!((bessel_i(1, 1.0) - 0.565_159_103_992_485).abs() < 1e-15);
}

#[test]
fn hamiltonian_contrast_has_one_dimensional_solution_space() {
    let (dim, gap, angle) = hamiltonian_run(6, 12);
    eprintln!("dim {dim} gap {gap:e} angle {angle:e}");
    assert_eq!(dim, 1);
    assert!(gap >= 1e3);
    assert!(angle < 1e-3);
}

#[test]
fn angle_shrinks_with_the_density_band() {
    let (_, _, a8) = hamiltonian_run(2, 4);
    let (_, _, a16) = hamiltonian_run(3, 6);
    eprintln!("{a8:e} {a16:e}");
    assert!(a16 < a8);
}

#[test]
fn recovered_hamiltonian_is_cos_theta() {
    let cs = assemble_constraints(6, 12, &rational(1, 2), &cos_field()).unwrap();
    let res = nullspace_dim(&cs, 1e-8).unwrap();
    let density = res.null_density(12).unwrap();
    let rec = recover_hamiltonian(&density, 0.5, 32).unwrap();
    assert_eq!(rec.verdict, RecoveryVerdict::Recovered);
    let exact = FloatFourier::cos(1, (1, 0)).sample_grid(32);
    let exact: Vec<f64> = exact.iter().map(|z| z.re).collect();
    let err = sup_distance_mod_constant(&rec.samples, &exact);
    eprintln!("sup error {err:e}");
    assert!(err < 1e-6);
}

#[test]
fn translation_field_dimensions_and_stability() {
    let x = VectorFieldSpec::closed_one_form(vec![ExactFourier::zero(1), ExactFourier::constant(1, GaussRat::from_int(1))])
        .unwrap();
    for (beta, expected) in [(0, 1), (1, 0)] {
        for (n_test, n_mu) in [(2, 4), (3, 6)] {
            let cs = assemble_constraints(n_test, n_mu, &rational(beta, 1), &x).unwrap();
            assert_eq!(nullspace_dim(&cs, 1e-8).unwrap().dimension, expected, "β = {beta}, N_test = {n_test}");
        }
    }
    // β ↦ −β together with X ↦ −X
    let flipped = assemble_constraints(2, 4, &rational(-1, 1), &x.negated()).unwrap();
    assert_eq!(nullspace_dim(&flipped, 1e-8).unwrap().dimension, 0);
}

#[test]
fn zero_temperature_is_uniform_for_any_field() {
    let cs = assemble_constraints(2, 4, &rational(0, 1), &cos_field()).unwrap();
    let res = nullspace_dim(&cs, 1e-8).unwrap();
    assert_eq!(res.dimension, 1);
    let uniform: Vec<C64> =
        res.columns.iter().map(|m| if *m == (0, 0) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
    assert!(complex_angle(&uniform, &res.null_vectors[0]) < 1e-12);
}

#[test]
fn hamiltonian_dimension_is_stable_under_refinement() {
    for (n_test, n_mu) in [(2, 4), (3, 6), (4, 8)] {
        let cs = assemble_constraints(n_test, n_mu, &rational(1, 2), &cos_field()).unwrap();
        assert_eq!(nullspace_dim(&cs, 1e-8).unwrap().dimension, 1, "N_test = {n_test}");
    }
}

#[test]
fn rank_never_drops_when_the_test_space_grows() {
    let rank = |n_test| {
        let cs = assemble_constraints(n_test, 6, &rational(1, 2), &cos_field()).unwrap();
        let res = nullspace_dim(&cs, 1e-8).unwrap();
        res.spectrum.len() - res.dimension
    };
    assert!(rank(2) <= rank(3));
}
