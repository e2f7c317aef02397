//! Property tests over randomly generated kernels, operators and measures.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pdmskit::kernel::{
    convolve, direct_sum, hadamard, is_pd, loewner_leq, outer, rescale, Kernel, Sequence, Window,
};
use pdmskit::linalg::{
    is_psd, principal_sqrt, ComplexMatrix, HermitianMatrix, SubspaceBasis, EIG_TOL,
};
use pdmskit::opfactory::{
    build_wz, hankel_double_positivity, moments_from_measure, random_measure, wold_analyze, MeasureSpec,
    PositiveOperatorSpec,
};
use pdmskit::pdms::{blockwise_root, root_finite, uniqueness_bound};
use pdmskit::sampling::{gaussian_matrix, psd_with_spectrum, random_psd, random_subspace};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pd_kernel(n: usize, seed: u64) -> Kernel {
    Kernel::from_hermitian(random_psd(n, &mut rng(seed)))
}

fn explicit(values: &[f64]) -> Sequence {
    Sequence::explicit_real(values)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn principal_sqrt_squares_back(n in 1usize..24, seed in any::<u64>()) {
        let a = random_psd(n, &mut rng(seed));
        let r = principal_sqrt(&a, EIG_TOL).unwrap();
        let err = (r.as_matrix() * r.as_matrix() - a.as_matrix()).norm();
        prop_assert!(err <= 1e-10 * a.frobenius_norm().max(1.0));
        prop_assert!(is_psd(&r, EIG_TOL).unwrap().is_psd);
    }

    #[test]
    fn builtins_are_hermitian_at_sampled_pairs(x in 0usize..60, y in 0usize..60, alpha in 0.1f64..2.0) {
        for k in [Kernel::delta(), Kernel::diag_n2(), Kernel::harmonic(),
                  Kernel::builtin(pdmskit::kernel::Builtin::OuterPower { alpha }).unwrap()] {
            let a = k.evaluate(x, y).unwrap();
            let b = k.evaluate(y, x).unwrap();
            prop_assert_eq!(a, b.conj());
        }
    }

    #[test]
    fn gram_is_monotone_under_windows(n in 1usize..40, seed in any::<u64>()) {
        let k = pd_kernel(n + 1, seed);
        let small = k.gram(&Window::new(n).unwrap()).unwrap();
        let big = k.gram(&Window::new(n + 1).unwrap()).unwrap();
        let lead = big.principal_submatrix(&(0..n).collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(small, lead);
    }

    #[test]
    fn loewner_is_reflexive_and_transitive(n in 1usize..16, seed in any::<u64>()) {
        let w = Window::new(n).unwrap();
        let tol = 1e-10;
        let k = pd_kernel(n, seed);
        prop_assert!(loewner_leq(&k, &k, &w, tol).unwrap().is_psd);
        // K ≪ K + P ≪ K + P + Q.
        let p = pd_kernel(n, seed ^ 1);
        let q = pd_kernel(n, seed ^ 2);
        let l = pdmskit::kernel::sum(vec![k.clone(), p]).unwrap();
        let m = pdmskit::kernel::sum(vec![l.clone(), q]).unwrap();
        prop_assert!(loewner_leq(&k, &l, &w, tol).unwrap().is_psd);
        prop_assert!(loewner_leq(&l, &m, &w, tol).unwrap().is_psd);
        prop_assert!(loewner_leq(&k, &m, &w, 2.0 * tol).unwrap().is_psd);
    }

    #[test]
    fn rescale_preserves_pd(n in 1usize..20, seed in any::<u64>(), scale in prop::collection::vec(-3.0f64..3.0, 20)) {
        let w = Window::new(n).unwrap();
        let k = pd_kernel(n, seed);
        let u = explicit(&scale[..n]);
        let umax = scale[..n].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let r = rescale(&k, &u);
        prop_assert!(is_pd(&r, &w, EIG_TOL * umax.powi(2).max(1.0)).unwrap().is_psd);
    }

    #[test]
    fn hadamard_of_pd_is_pd(n in 1usize..16, seed in any::<u64>()) {
        let w = Window::new(n).unwrap();
        let h = hadamard(&pd_kernel(n, seed), &pd_kernel(n, seed.wrapping_add(7))).unwrap();
        prop_assert!(is_pd(&h, &w, EIG_TOL).unwrap().is_psd);
    }

    #[test]
    fn convolution_is_associative_on_dense(n in 1usize..10, seed in any::<u64>()) {
        let w = Window::new(n).unwrap();
        let mut g = rng(seed);
        let mk = |g: &mut ChaCha8Rng| Kernel::dense_general(
            (1..=n).map(|i| i.to_string()).collect(), gaussian_matrix(n, n, g)).unwrap();
        let (k, l, m) = (mk(&mut g), mk(&mut g), mk(&mut g));
        let kl = convolve(&k, &l, &w, 1e-12).unwrap().kernel;
        let lm = convolve(&l, &m, &w, 1e-12).unwrap().kernel;
        let left = convolve(&kl, &m, &w, 1e-12).unwrap().kernel.section(n, n).unwrap();
        let right = convolve(&k, &lm, &w, 1e-12).unwrap().kernel.section(n, n).unwrap();
        prop_assert!((left - right).norm() <= 1e-10 * (n * n) as f64);
    }

    #[test]
    fn outer_lambda_max_is_square_sum(values in prop::collection::vec(-2.0f64..2.0, 1..30)) {
        let n = values.len();
        let k = outer(&explicit(&values));
        let g = k.gram(&Window::new(n).unwrap()).unwrap();
        let sq: f64 = values.iter().map(|v| v * v).sum();
        prop_assert!((g.lambda_max() - sq).abs() <= EIG_TOL * sq.max(1.0));
    }

    #[test]
    fn certificate_bounds_are_nondecreasing(seed in any::<u64>(), n in 2usize..24) {
        let k = pd_kernel(n, seed);
        let ladder: Vec<usize> = (1..=n).collect();
        let c = uniqueness_bound(&k, &ladder, 1e6).unwrap();
        for p in c.bounds.windows(2) {
            prop_assert!(p[1] >= p[0] - 1e-12 * p[1].abs().max(1.0));
        }
    }

    #[test]
    fn root_residual_is_small(n in 1usize..32, seed in any::<u64>()) {
        let k = pd_kernel(n, seed);
        let r = root_finite(&k, &Window::new(n).unwrap(), 1e-9).unwrap();
        prop_assert!(r.relative_residual() <= 1e-9);
    }

    #[test]
    fn blocks_partition_the_window(sizes in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
        let parts: Vec<Kernel> = sizes.iter().enumerate()
            .map(|(i, &s)| pd_kernel(s, seed.wrapping_add(i as u64))).collect();
        let total: usize = sizes.iter().sum();
        let k = direct_sum(parts).unwrap();
        let report = blockwise_root(&k, &Window::new(total).unwrap(), 1e-9).unwrap();
        let mut seen: Vec<usize> = report.blocks.iter().flat_map(|(b, _)| b.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..total).collect::<Vec<_>>());
        prop_assert!(report.blocks.len() >= sizes.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wz_checks_hold_for_transversal_subspaces(seed in any::<u64>(), n in 3usize..12, kernel_frac in 0.2f64..0.6) {
        let mut g = rng(seed);
        let kernel_dim = ((n as f64 * kernel_frac) as usize).max(1);
        let mut spectrum = vec![0.0; kernel_dim];
        spectrum.extend((kernel_dim..n).map(|i| 0.05 + i as f64 / n as f64));
        let a = PositiveOperatorSpec::new(psd_with_spectrum(&spectrum, &mut g), "random", EIG_TOL).unwrap();
        let z = random_subspace(n, 1 + (seed as usize) % kernel_dim, &mut g);
        let r = build_wz(&a, &z, 1e-8).unwrap();
        prop_assert!(r.passes(), "{:?}", r.checks);
    }

    #[test]
    fn fixed_space_lies_in_unitary_part(seed in any::<u64>(), n in 1usize..10) {
        // Contractions: V = U diag(s) with s in [0, 1], a few singular values exactly 1.
        let mut g = rng(seed);
        let u = pdmskit::sampling::random_unitary(n, &mut g);
        let s: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { (i as f64) / (n as f64 + 1.0) }).collect();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| Complex64::new(x, 0.0))));
        let w = pdmskit::sampling::random_unitary(n, &mut g);
        let v = ComplexMatrix::new(&u * d * w.adjoint()).unwrap();
        let report = wold_analyze(&v, 1e-9).unwrap();
        prop_assert!(report.fixed_outside_unitary() <= 1e-8);
        // A projection fixes exactly its range, which is also its stable range.
        let p = random_subspace(n, n / 2, &mut g).projector().to_complex();
        let report = wold_analyze(&p, 1e-9).unwrap();
        prop_assert!(report.fixed_space.gap(&report.unitary_part) <= 1e-8);
    }

    #[test]
    fn stieltjes_moments_pass_double_positivity(seed in any::<u64>(), atoms in 1usize..10, n in 1usize..12) {
        let m = random_measure(atoms, &mut rng(seed));
        let c = moments_from_measure(&m, 2 * n);
        let r = hankel_double_positivity(&c, n, 1e-10).unwrap();
        prop_assert!(r.h_psd && r.shifted_psd);
    }

    #[test]
    fn negative_atom_fails_shifted_check(
        seed in any::<u64>(),
        others in 0usize..4,
        s in 0.5f64..1.0,
        neg_weight in 1e-3f64..1.0,
    ) {
        // With k positive atoms, N = k + 1 leaves a vector orthogonal to all
        // of them, on which the shifted form is -w s |p(-s)|² < 0.
        let base = random_measure(others.max(1), &mut rng(seed));
        let mut atoms: Vec<f64> = base.atoms()[..others].to_vec();
        let mut weights: Vec<f64> = base.weights()[..others].to_vec();
        atoms.push(-s);
        weights.push(neg_weight);
        let m = MeasureSpec::new(atoms, weights).unwrap();
        let total = others + 1;
        let tol = 1e-10;
        let fails = (1..=total + 1).any(|n| {
            let c = moments_from_measure(&m, 2 * n);
            !hankel_double_positivity(&c, n, tol).unwrap().shifted_psd
        });
        prop_assert!(fails);
    }
}

#[test]
fn zero_subspace_has_unit_angle() {
    let a = PositiveOperatorSpec::new(HermitianMatrix::identity(3), "I", EIG_TOL).unwrap();
    let r = build_wz(&a, &SubspaceBasis::zero(3), 1e-12).unwrap();
    assert!((r.v.as_matrix() - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-12);
}
