use pencilkit::charfn::char_fn_sample;
use pencilkit::colligation::{validate_colligation, Colligation, PencilSystem};
use pencilkit::coupling::{
    blaschke_product_eval, chain_build, continuous_limit_eval, couple, synthesize_roots, ChainFactor, ChainSpec,
    ContinuousLimitSpec, Profile,
};
use pencilkit::factor::{factor_spectral, SplitRule};
use pencilkit::linalg::{c, max_abs, spectral_norm, CMatrix, I};
use pencilkit::random;
use pencilkit::Error;

fn scalar_factor(b: f64, lam: pencilkit::linalg::C64) -> PencilSystem {
    let beta = (2.0 * lam.im).sqrt();
    let col = Colligation::new(CMatrix::from_element(1, 1, lam), CMatrix::from_element(1, 1, c(beta, 0.0)), CMatrix::identity(1, 1))
        .unwrap();
    PencilSystem::new(col, CMatrix::from_element(1, 1, c(b, 0.0))).unwrap()
}

#[test]
fn coupling_with_empty_system_is_identity() {
    let p1 = random::pencil_with_sigma(&mut random::rng(1), 3, &[1.0]).unwrap();
    let col = Colligation::new(CMatrix::zeros(0, 0), CMatrix::zeros(1, 0), CMatrix::identity(1, 1)).unwrap();
    let p2 = PencilSystem::new(col, CMatrix::zeros(0, 0)).unwrap();
    let cs = couple(&p1, &p2).unwrap();
    assert_eq!(cs.system.a(), p1.a());
    assert_eq!(cs.system.phi(), p1.phi());
    assert_eq!(cs.system.b, p1.b);
}

#[test]
fn two_scalar_factors_give_triangular_model() {
    let (l1, l2) = (c(0.3, 0.5), c(-1.0, 2.0));
    let cs = couple(&scalar_factor(0.2, l1), &scalar_factor(-0.4, l2)).unwrap();
    let a = cs.system.a();
    let (b1, b2) = (1.0f64, 2.0f64);
    assert_eq!(a[(0, 0)], l1);
    assert_eq!(a[(1, 1)], l2);
    assert_eq!(a[(0, 1)], c(0.0, 0.0));
    assert!((a[(1, 0)] - I * (b1 * b2)).norm() < 1e-15);
    assert!(validate_colligation(&cs.system.colligation).unwrap().pass);
}

#[test]
fn coupled_char_fn_is_product() {
    let mut r = random::rng(5);
    for _ in 0..5 {
        let p1 = random::pencil_with_sigma(&mut r, 2, &[1.0, -1.0]).unwrap();
        let p2 = random::pencil_with_sigma(&mut r, 3, &[1.0, -1.0]).unwrap();
        let cs = couple(&p1, &p2).unwrap();
        for _ in 0..20 {
            let lam = random::off_axis(&mut r, 4.0, 0.5);
            let (Ok(s), Ok(s1), Ok(s2)) = (char_fn_sample(&cs.system, lam), char_fn_sample(&p1, lam), char_fn_sample(&p2, lam))
            else {
                continue;
            };
            assert!(spectral_norm(&(s.s - s2.s * s1.s)) <= 1e-10);
        }
    }
}

#[test]
fn signature_mismatch_is_rejected() {
    let mut r = random::rng(2);
    let p1 = random::pencil_with_sigma(&mut r, 2, &[1.0]).unwrap();
    let p2 = random::pencil_with_sigma(&mut r, 2, &[1.0, 1.0]).unwrap();
    assert!(matches!(couple(&p1, &p2), Err(Error::CouplingIncompatible(_))));
}

#[test]
fn synthesized_roots_of_coupled_pencil() {
    let mut r = random::rng(9);
    let mut done = 0;
    while done < 5 {
        let p1 = random::pencil_with_sigma(&mut r, 2, &[1.0, -1.0]).unwrap();
        let p2 = random::pencil_with_sigma(&mut r, 2, &[1.0, -1.0]).unwrap();
        let (Ok(f1), Ok(f2)) = (factor_spectral(&p1, &SplitRule::Gap), factor_spectral(&p2, &SplitRule::Gap)) else {
            continue;
        };
        let cs = couple(&p1, &p2).unwrap();
        let Ok(f) = synthesize_roots(&cs, &f1, &f2) else { continue };
        let res = f.residuals(&cs.system);
        assert!(res.sum <= 1e-12 * res.scale);
        assert!(res.product <= 1e-9 * res.scale, "{res:?}");
        assert!(res.right_root <= 1e-9 * res.scale);
        assert!(res.sylvester <= 1e-8);
        done += 1;
    }
}

#[test]
fn zero_channel_gives_block_diagonal_roots() {
    let mut r = random::rng(4);
    let mk = |r: &mut random::Rng64| {
        let h = random::hermitian(r, 2);
        let a = &h * &h + CMatrix::identity(2, 2);
        let col = Colligation::new(a, CMatrix::zeros(1, 2), CMatrix::identity(1, 1)).unwrap();
        PencilSystem::new(col, CMatrix::zeros(2, 2)).unwrap()
    };
    let (p1, p2) = (mk(&mut r), mk(&mut r));
    let f1 = factor_spectral(&p1, &SplitRule::HalfPlaneIm).unwrap();
    let f2 = factor_spectral(&p2, &SplitRule::HalfPlaneIm).unwrap();
    let f = synthesize_roots(&couple(&p1, &p2).unwrap(), &f1, &f2).unwrap();
    assert!(max_abs(&f.x.view((2, 0), (2, 2)).into_owned()) == 0.0);
}

#[test]
fn five_factor_chain() {
    let spec = random::chain(&mut random::rng(17), 5).unwrap();
    let (p, f) = chain_build(&spec).unwrap();
    assert!(spectral_norm(&(&f.y * &f.x - p.a())) <= 1e-10);
    let mut r = random::rng(18);
    for _ in 0..10 {
        let lam = random::off_axis(&mut r, 3.0, 0.3);
        let s = char_fn_sample(&p, lam).unwrap().s[(0, 0)];
        let b = blaschke_product_eval(&spec, lam).unwrap();
        assert!((s - b).norm() <= 1e-10 * (1.0 + b.norm()));
    }
}

#[test]
fn two_factor_product_matches_coupled_matrix() {
    let spec = ChainSpec::new(vec![ChainFactor::new(0.4, c(0.2, 0.7)).unwrap(), ChainFactor::new(-0.1, c(-0.5, 0.3)).unwrap()])
        .unwrap();
    let cs = couple(&scalar_factor(0.4, c(0.2, 0.7)), &scalar_factor(-0.1, c(-0.5, 0.3))).unwrap();
    for lam in [c(1.0, 1.0), c(-2.0, 0.5), c(0.3, -1.2)] {
        let s = char_fn_sample(&cs.system, lam).unwrap().s[(0, 0)];
        assert!((s - blaschke_product_eval(&spec, lam).unwrap()).norm() <= 1e-12);
    }
}

#[test]
fn spectral_point_of_factor_is_reported() {
    let spec = ChainSpec::new(vec![ChainFactor::new(0.0, I).unwrap()]).unwrap();
    let (w1, _) = spec.factors[0].roots();
    assert!(matches!(blaschke_product_eval(&spec, w1), Err(Error::SpectralPoint(_))));
}

#[test]
fn continuous_limit_is_limit_of_small_factors() {
    let spec = ContinuousLimitSpec::new(1.0, Profile::Constant(0.5), Profile::Constant(2.0)).unwrap();
    let lam = c(0.7, 1.3);
    let s = continuous_limit_eval(&spec, lam).unwrap();
    let err = |n: usize| {
        let h = 1.0 / n as f64;
        let f = ChainFactor { b: 0.5, lambda: c(2.0, h / 2.0), beta: h.sqrt() };
        let chain = ChainSpec::new(vec![f; n]).unwrap();
        (blaschke_product_eval(&chain, lam).unwrap() - s).norm()
    };
    let (e100, e200) = (err(100), err(200));
    assert!(e100 < 5.0 / 100.0, "{e100}");
    assert!(e200 < 0.6 * e100);
}

#[test]
fn infinite_product_tail_shrinks() {
    // beta_k^2 = 2 Im lambda_k = 1/k^2 is summable.
    let factor = |k: usize| ChainFactor::new(((k % 3) as f64) - 1.0, c(1.0 / k as f64, 0.5 / (k * k) as f64)).unwrap();
    let lam = c(0.4, 1.1);
    let prod = |n: usize| blaschke_product_eval(&ChainSpec::new((1..=n).map(factor).collect()).unwrap(), lam).unwrap();
    let (p50, p100, p200) = (prod(50), prod(100), prod(200));
    let (d1, d2) = ((p100 - p50).norm(), (p200 - p100).norm());
    let tail = |n: usize| (n + 1..=2 * n).map(|k| 1.0 / (k * k) as f64).sum::<f64>();
    assert!(d2 < 0.6 * d1);
    assert!(d1 <= 10.0 * tail(50) && d2 <= 10.0 * tail(100));
}
