use formal_kms::probes::{probe_set, random_exppoly};
use formal_kms::states::{dynamic_kms_residual, kms_construct, static_kms_residual};
use formal_kms::{ExpPoly, FormalSeries, LaurentRat, Poly, Scalar, StarContext, VectorFieldSpec, C64};

fn probes<S: Scalar>(ctx: &StarContext<ExpPoly<S>>, seed: u64, count: usize) -> Vec<FormalSeries<ExpPoly<S>>> {
    probe_set(seed, count, |rng| random_exppoly(rng, 1, 2))
        .into_iter()
        .map(|f| ctx.lift(&f.map_scalar(|c| S::from_rational(&c.re, &c.im))).unwrap())
        .collect()
}

#[test]
fn dynamic_condition_is_exact_at_integer_times() {
    let ctx = StarContext::new(&ExpPoly::<LaurentRat>::zero(1, 0), 3).unwrap();
    let h = ExpPoly::from(Poly::harmonic(1, 0));
    let x = VectorFieldSpec::hamiltonian(h.clone());
    let fs = probes(&ctx, 5, 3);
    let beta = LaurentRat::from_ratio(1, 2);
    let mu = kms_construct(&ctx, &h, beta.clone()).unwrap();
    for t in [LaurentRat::from_int(2), LaurentRat::from_int(-1)] {
        for i in 0..fs.len() {
            let res = dynamic_kms_residual(&ctx, &mu, &x, &t, &beta, &fs[i], &fs[(i + 1) % fs.len()]).unwrap();
            assert!(res.is_zero(), "{res}");
        }
    }
}

#[test]
fn float_instantiation_agrees_with_exact() {
    let h_exact = ExpPoly::from(Poly::harmonic(1, 0));
    let ctx_q = StarContext::new(&ExpPoly::zero(1, 0), 3).unwrap();
    let ctx_f = StarContext::new(&ExpPoly::<C64>::zero(1, 0), 3).unwrap();
    let exact = probes(&ctx_q, 8, 2);
    let float = probes(&ctx_f, 8, 2);
    let x_f = VectorFieldSpec::hamiltonian(ExpPoly::<C64>::from(Poly::harmonic(1, 0)));
    let beta = C64::new(0.5, 0.0);
    let mu_f = kms_construct(&ctx_f, &ExpPoly::from(Poly::harmonic(1, 0)), beta).unwrap();
    let res = static_kms_residual(&ctx_f, &mu_f, &x_f, &beta, &float[0], &float[1]).unwrap();
    assert!(res.max_abs() < 1e-10, "{res}");

    let mu_q = kms_construct(&ctx_q, &h_exact, formal_kms::GaussRat::from_ratio(1, 2)).unwrap();
    let vq = mu_q.eval(&ctx_q.star(&exact[0], &exact[1]).unwrap()).unwrap().to_c64();
    let vf = mu_f.eval(&ctx_f.star(&float[0], &float[1]).unwrap()).unwrap().to_c64();
    for (a, b) in vq.iter().zip(&vf) {
        assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn evolution_fixes_constants() {
    use formal_kms::dynamics::{evolve_exact, evolve_numeric, NumericOptions};
    use formal_kms::Fourier;
    let ctx = StarContext::new(&ExpPoly::<LaurentRat>::zero(1, 0), 3).unwrap();
    let x = VectorFieldSpec::hamiltonian(ExpPoly::from(Poly::harmonic(1, 0)));
    assert_eq!(evolve_exact(&ctx, &x, &LaurentRat::from_int(1), &ctx.one()).unwrap(), ctx.one());

    let torus = StarContext::new(&Fourier::<C64>::zero(4), 2).unwrap();
    let field = VectorFieldSpec::hamiltonian(Fourier::<C64>::cos(4, (1, 0)));
    let out = evolve_numeric(&torus, &field, 0.8, &torus.one(), NumericOptions::default()).unwrap();
    assert!(out.solution.sub(&torus.one()).max_abs() < 1e-12);
}
