use super::*;
use crate::gen::{
    gen_example1, gen_random_core_planted, gen_random_partial_planted, gen_random_symmetric,
    gen_sign_harmonic, gen_sin_sum,
};
use crate::tucker::{hosvd, symmetric_tucker};
use proptest::prelude::*;

fn opts() -> ZeigOptions {
    ZeigOptions::default()
}

fn has_value(spec: &ZSpectrum<f64>, v: f64, tol: f64) -> bool {
    spec.pairs.iter().any(|p| (p.lambda - v).abs() <= tol)
}

fn sorted_values(spec: &ZSpectrum<f64>) -> Vec<f64> {
    spec.pairs.iter().map(|p| p.lambda).collect()
}

fn assert_close_sets(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "got {got:?}, want {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "got {got:?}, want {want:?}");
    }
}

fn diag4(a: f64, b: f64) -> DenseTensor<f64> {
    DenseTensor::from_fn(vec![2; 4], |idx| {
        if idx.iter().all(|&i| i == 0) {
            a
        } else if idx.iter().all(|&i| i == 1) {
            b
        } else {
            0.0
        }
    })
    .unwrap()
}

fn check_certified(t: &DenseTensor<f64>, spec: &ZSpectrum<f64>) {
    let tol = 1e-8 * t.frobenius_norm().max(1.0);
    for p in &spec.pairs {
        assert!((scalar::norm2(&p.x) - 1.0).abs() <= 1e-12);
        let r = z_residual(t, &p.x, p.lambda).unwrap();
        assert!(r <= tol, "residual {r} for λ = {}", p.lambda);
        let form = t.apply_form(&p.x).unwrap();
        assert!((p.lambda - form).abs() <= 1e-8 * p.lambda.abs().max(1.0));
        // Sign orbit.
        let neg: Vec<f64> = p.x.iter().map(|v| -v).collect();
        let mirrored = if t.order().is_multiple_of(2) {
            p.lambda
        } else {
            -p.lambda
        };
        assert!(z_residual(t, &neg, mirrored).unwrap() <= tol);
    }
    for w in spec.pairs.windows(2) {
        assert!(w[0].lambda >= w[1].lambda);
    }
}

#[test]
fn rescaled_core_orthonormal_is_core() {
    let t = gen_random_core_planted::<f64>(2, 5, 4, 1).unwrap().tensor;
    let d = symmetric_tucker(&t, 1e-10).unwrap();
    let g = rescaled_core(&d).unwrap();
    assert!(g.sub(d.core()).unwrap().max_abs() <= 1e-12 * d.core().max_abs());
}

#[test]
fn rescaled_core_homogeneity_and_symmetry() {
    let p = gen_random_core_planted::<f64>(2, 4, 3, 2).unwrap();
    let d = &p.decomposition;
    let g = rescaled_core(d).unwrap();
    assert!(g.is_symmetric(1e-10));
    let c = 1.7;
    let scaled = TuckerDecomposition::new(
        d.core().clone(),
        d.factors().iter().map(|f| f.scaled(c)).collect(),
        TuckerKind::Symmetric,
    )
    .unwrap();
    let gs = rescaled_core(&scaled).unwrap();
    let want = g.scaled(c.powi(3));
    assert!(gs.sub(&want).unwrap().max_abs() <= 1e-12 * want.max_abs());
    // Oracle: Ĝ must reproduce the original form on lifted vectors, since
    // T(Lâ) = Ĝ(â) for L = X(XᵀX)^{-1/2}.
    let l = lift_map(&d.factors()[0]).unwrap();
    let a = [0.6, -0.8];
    let x = l.matvec(&a).unwrap();
    let lhs = p.tensor.apply_form(&x).unwrap();
    let rhs = g.apply_form(&a).unwrap();
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
}

#[test]
fn rescaled_core_rejects_other_kinds() {
    let t = gen_random_symmetric::<f64>(3, 3, 4).unwrap();
    let d = hosvd(&t, 1e-10).unwrap();
    assert!(matches!(rescaled_core(&d), Err(Error::WrongKind { .. })));
}

#[test]
fn dim2_diagonal() {
    let t = diag4(3.0, 2.0);
    let spec = zeig_dim2(&t, &opts()).unwrap();
    assert!(spec.complete);
    assert_eq!(spec.method, SolverMethod::AngleScan);
    let find = |v: f64, e: [f64; 2]| {
        spec.pairs.iter().any(|p| {
            (p.lambda - v).abs() < 1e-12 && (scalar::dot(&p.x, &e).abs() - 1.0).abs() < 1e-12
        })
    };
    assert!(find(3.0, [1.0, 0.0]));
    assert!(find(2.0, [0.0, 1.0]));
    // The remaining critical points sit at tan²θ = a/b (two directions,
    // not sign-related) with value ab/(a+b).
    let mixed: Vec<_> = spec
        .pairs
        .iter()
        .filter(|p| (p.lambda - 1.2).abs() < 1e-12)
        .collect();
    assert_eq!(mixed.len(), 2);
    let want = [(2.0f64 / 5.0).sqrt(), (3.0f64 / 5.0).sqrt()];
    for p in mixed {
        assert!((p.x[0].abs() - want[0]).abs() < 1e-12 && (p.x[1].abs() - want[1]).abs() < 1e-12);
    }
    assert_eq!(spec.pairs.len(), 4);
    check_certified(&t, &spec);
}

#[test]
fn dim2_example_cores() {
    let t = gen_example1::<f64>();
    let d = symmetric_tucker(&t, 1e-10).unwrap();
    let spec = zeig_dim2(&rescaled_core(&d).unwrap(), &opts()).unwrap();
    // The core itself has no zero eigenvalue; the zero of the full tensor
    // comes from the null space of the factor.
    assert_close_sets(&sorted_values(&spec), &[24.5, 0.5], 1e-10);

    let t = gen_sin_sum::<f64>(4, 4).unwrap();
    let d = symmetric_tucker(&t, 1e-10).unwrap();
    let spec = zeig_dim2(&rescaled_core(&d).unwrap(), &opts()).unwrap();
    assert_close_sets(&sorted_values(&spec), &[4.632, 2.991, -2.525, -5.645], 1e-3);
}

#[test]
fn dim2_rejects_bad_input() {
    let t = gen_random_symmetric::<f64>(3, 3, 1).unwrap();
    assert!(matches!(
        zeig_dim2(&t, &opts()),
        Err(Error::InvalidArgument(_))
    ));
    let ns = DenseTensor::from_fn(vec![2, 2, 2], |i| i[0] as f64).unwrap();
    assert!(matches!(
        zeig_dim2(&ns, &opts()),
        Err(Error::NotSymmetric { .. })
    ));
    let rect = DenseTensor::<f64>::zeros(vec![2, 3]).unwrap();
    assert!(zeig_dim2(&rect, &opts()).is_err());
}

#[test]
fn dim2_degenerate_form() {
    // T(x^{∘3}) = ‖x‖² x: every unit vector is an eigenvector with λ = 1.
    let id = DenseTensor::from_fn(vec![2, 2], |i| if i[0] == i[1] { 1.0f64 } else { 0.0 }).unwrap();
    let t = id.outer(&id).symmetrize().unwrap();
    let spec = zeig_dim2(&t, &opts()).unwrap();
    assert!(!spec.complete);
    assert!(spec.pairs.iter().all(|p| (p.lambda - 1.0).abs() < 1e-14));
}

#[test]
fn dim2_odd_order_lists_mirror() {
    let x0 = [0.6, 0.8];
    let t = DenseTensor::symmetric_outer_power(&x0, 3).unwrap();
    let spec = zeig_dim2(&t, &opts()).unwrap();
    assert!(has_value(&spec, 1.0, 1e-12));
    assert!(has_value(&spec, -1.0, 1e-12));
    assert!(has_value(&spec, 0.0, 1e-12));
    check_certified(&t, &spec);
}

#[test]
fn multistart_rank_one() {
    let mut x0: Vec<f64> = vec![1.0, -2.0, 0.5, 2.0];
    scalar::normalize(&mut x0);
    let t = DenseTensor::symmetric_outer_power(&x0, 4).unwrap();
    let spec = zeig_multistart(&t, &opts()).unwrap();
    assert!(!spec.complete);
    let top = &spec.pairs[0];
    assert!((top.lambda - 1.0).abs() < 1e-12);
    assert!((scalar::dot(&top.x, &x0).abs() - 1.0).abs() < 1e-12);
    check_certified(&t, &spec);
}

#[test]
fn multistart_agrees_with_angle_scan() {
    for seed in 0..12 {
        let order = 3 + (seed as usize % 3);
        let t = gen_random_symmetric::<f64>(2, order, seed).unwrap();
        let o = ZeigOptions { seed, ..opts() };
        let complete = zeig_dim2(&t, &o).unwrap();
        let direct = zeig_multistart(&t, &o).unwrap();
        for p in &direct.pairs {
            assert!(
                complete
                    .pairs
                    .iter()
                    .any(|q| (p.lambda - q.lambda).abs() <= 1e-6
                        && scalar::dot(&p.x, &q.x).abs() >= 1.0 - 1e-6),
                "seed {seed}: {} missing from angle scan",
                p.lambda
            );
        }
        check_certified(&t, &direct);
        check_certified(&t, &complete);
    }
}

#[test]
fn multistart_example2_original() {
    let t = gen_sign_harmonic::<f64>(8).unwrap();
    let spec = zeig_multistart(&t, &opts()).unwrap();
    for v in [14.436, 8.586, -8.586, -14.436] {
        assert!(has_value(&spec, v, 1e-3), "{v} not found");
    }
}

#[test]
fn via_core_example1() {
    let t = gen_example1::<f64>();
    let spec = zeig_via_core(&t, &opts()).unwrap();
    assert!(spec.complete);
    assert!(spec.uncertified.is_empty());
    assert_close_sets(&sorted_values(&spec), &[24.5, 0.5, 0.0], 1e-10);
    check_certified(&t, &spec);
    // Closed forms: u + v direction for 24.5, u − v for 0.5.
    let s = [1.0, 2.0, 2.0, 2.0, 1.0].map(|v: f64| v / 14f64.sqrt());
    let dm = [1.0, 0.0, 0.0, 0.0, -1.0].map(|v: f64| v / 2f64.sqrt());
    assert!((scalar::dot(&spec.pairs[0].x, &s).abs() - 1.0).abs() < 1e-12);
    assert!((scalar::dot(&spec.pairs[1].x, &dm).abs() - 1.0).abs() < 1e-12);
}

#[test]
fn via_core_full_rank_has_no_augmentation() {
    let t = gen_random_symmetric::<f64>(2, 4, 5).unwrap();
    let via = zeig_via_core(&t, &opts()).unwrap();
    let direct = zeig_dim2(&t, &opts()).unwrap();
    assert_close_sets(&sorted_values(&via), &sorted_values(&direct), 1e-10);
}

#[test]
fn via_core_adds_zero_when_core_is_smaller() {
    for seed in 0..6 {
        let p = gen_random_core_planted::<f64>(2, 5, 3 + seed as usize % 2, seed).unwrap();
        let spec = zeig_via_core(&p.tensor, &opts()).unwrap();
        assert!(has_value(&spec, 0.0, 1e-8), "seed {seed}");
        check_certified(&p.tensor, &spec);
    }
}

#[test]
fn via_core_with_larger_core_uses_multistart() {
    let p = gen_random_core_planted::<f64>(3, 5, 4, 8).unwrap();
    let spec = zeig_via_core(&p.tensor, &opts()).unwrap();
    assert_eq!(spec.method, SolverMethod::MultistartPower);
    assert!(!spec.complete);
    assert!(has_value(&spec, 0.0, 1e-8));
    check_certified(&p.tensor, &spec);
}

#[test]
fn via_core_rejects_nonsymmetric() {
    let t = DenseTensor::from_fn(vec![3, 3, 3], |i| (i[0] + 2 * i[1]) as f64).unwrap();
    assert!(matches!(
        zeig_via_core(&t, &opts()),
        Err(Error::NotSymmetric { .. })
    ));
}

#[test]
fn canonicalization_is_idempotent() {
    let t = gen_sign_harmonic::<f64>(5).unwrap();
    let spec = zeig_via_core(&t, &opts()).unwrap();
    let again = canonicalize(spec.pairs.clone(), 3, 1e-6, 1e-8);
    assert_eq!(again, spec.pairs);
    for p in &spec.pairs {
        let m = p.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = p.x.iter().find(|v| v.abs() >= m * (1.0 - 1e-9)).unwrap();
        // Odd order: the mirror of a canonical pair carries the negated vector.
        let mirrored = *lead < 0.0;
        assert!(
            !mirrored
                || spec
                    .pairs
                    .iter()
                    .any(|q| (q.lambda + p.lambda).abs() < 1e-9)
        );
    }
}

#[test]
fn psd_cases() {
    let mut x0: Vec<f64> = vec![2.0, -1.0, 0.5];
    scalar::normalize(&mut x0);
    let t = DenseTensor::symmetric_outer_power(&x0, 4).unwrap();
    let r = is_psd(&t, &opts()).unwrap();
    assert!(r.psd && r.decisive);

    let neg = t.scaled(-1.0);
    let r = is_psd(&neg, &opts()).unwrap();
    assert!(!r.psd);
    assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    assert!((scalar::dot(&r.witness, &x0).abs() - 1.0).abs() < 1e-12);

    let s = gen_sin_sum::<f64>(4, 4).unwrap();
    let r = is_psd(&s, &opts()).unwrap();
    assert!(!r.psd);
    assert!((r.min_eigenvalue + 5.645).abs() < 1e-3);

    let odd = DenseTensor::symmetric_outer_power(&x0, 3).unwrap();
    assert_eq!(is_psd(&odd, &opts()).unwrap_err(), Error::OddOrder(3));
}

fn rank_one_partial(u: &[f64], v: &[f64]) -> DenseTensor<f64> {
    DenseTensor::outer_vectors(&[u, v, u, v]).unwrap()
}

#[test]
fn meig_rank_one() {
    let mut u = vec![1.0, 2.0, -1.0];
    let mut v = vec![0.5, -1.0];
    scalar::normalize(&mut u);
    scalar::normalize(&mut v);
    let t = rank_one_partial(&u, &v).scaled(2.5);
    for spec in [
        meig_multistart(&t, &MeigOptions::default()).unwrap(),
        meig_via_core(&t, &MeigOptions::default()).unwrap(),
    ] {
        let top = &spec.pairs[0];
        assert!((top.lambda - 2.5).abs() < 1e-10 && (top.mu - 2.5).abs() < 1e-10);
        assert!((scalar::dot(&top.x, &u).abs() - 1.0).abs() < 1e-10);
        assert!((scalar::dot(&top.y, &v).abs() - 1.0).abs() < 1e-10);
        assert!(top.residual <= 1e-8 * t.frobenius_norm().max(1.0));
    }
}

#[test]
fn meig_orthonormal_rescale_is_core() {
    let t = gen_random_partial_planted::<f64>((2, 2), (3, 4), 3)
        .unwrap()
        .0;
    let d = crate::tucker::partial_symmetric_tucker(&t, 1e-10).unwrap();
    let g = rescaled_core(&d).unwrap();
    assert!(g.sub(d.core()).unwrap().max_abs() <= 1e-12 * d.core().max_abs());
}

#[test]
fn meig_zero_pair_when_core_is_smaller() {
    let (t, _) = gen_random_partial_planted::<f64>((2, 3), (4, 3), 6).unwrap();
    let spec = meig_via_core(&t, &MeigOptions::default()).unwrap();
    assert!(spec.pairs.iter().any(|p| p.lambda.abs() <= 1e-8));
    let tol = 1e-8 * t.frobenius_norm().max(1.0);
    for p in &spec.pairs {
        assert!(p.residual <= tol);
        assert!((scalar::norm2(&p.x) - 1.0).abs() < 1e-12);
        assert!((scalar::norm2(&p.y) - 1.0).abs() < 1e-12);
        assert!((p.lambda - p.mu).abs() <= 1e-8 * p.lambda.abs().max(1.0));
    }
}

#[test]
fn meig_rejects_bad_input() {
    let t = gen_random_symmetric::<f64>(3, 3, 0).unwrap();
    assert!(meig_via_core(&t, &MeigOptions::default()).is_err());
    let t = DenseTensor::from_fn(vec![2, 2, 2, 2], |i| i[0] as f64).unwrap();
    assert!(matches!(
        meig_multistart(&t, &MeigOptions::default()),
        Err(Error::NotPartialSymmetric { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn via_core_pairs_certify(seed in 0u64..1000, dim in 3usize..6, order in 3usize..5) {
        let p = gen_random_core_planted::<f64>(2, dim, order, seed).unwrap();
        let spec = zeig_via_core(&p.tensor, &opts()).unwrap();
        prop_assert!(spec.uncertified.is_empty());
        check_certified(&p.tensor, &spec);
    }
}
