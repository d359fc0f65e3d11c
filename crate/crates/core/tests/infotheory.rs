use entreg::infotheory::{estimate_cmi, estimate_mi, shuffle_threshold, ShuffleTestConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn correlated(rng: &mut ChaCha8Rng, x: &[f64], rho: f64) -> Vec<f64> {
    let c = (1.0 - rho * rho).sqrt();
    x.iter().map(|v| rho * v + c * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)).collect::<Vec<f64>>()
}

fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

#[test]
fn correlated_gaussians_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (n, band) in [(1000, 0.08), (5000, 0.05)] {
        let x = normals(&mut rng, n);
        let y = correlated(&mut rng, &x, 0.9);
        let mi = estimate_mi(&[&x], &[&y], 2).unwrap();
        assert!((mi - gaussian_mi(0.9)).abs() <= band, "n={n}: {mi}");
    }
}

#[test]
fn partial_correlation_matches_closed_form() {
    // z is a common driver; x and y share an extra component with partial
    // correlation 0.8 given z.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 5000;
    let z = normals(&mut rng, n);
    let e1 = normals(&mut rng, n);
    let e2 = correlated(&mut rng, &e1, 0.8);
    let x: Vec<f64> = z.iter().zip(&e1).map(|(a, b)| 0.7 * a + b).collect();
    let y: Vec<f64> = z.iter().zip(&e2).map(|(a, b)| -0.5 * a + b).collect();
    let cmi = estimate_cmi(&[&x], &[&y], &[&z], 2).unwrap();
    assert!((cmi - gaussian_mi(0.8)).abs() <= 0.06, "{cmi}");
}

#[test]
fn independent_uniforms_are_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
    let y: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
    assert!(estimate_mi(&[&x], &[&y], 2).unwrap().abs() <= 0.05);
}

#[test]
fn conditioning_on_x_removes_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = normals(&mut rng, 2000);
    let y = correlated(&mut rng, &x, 0.95);
    assert!(estimate_cmi(&[&x], &[&y], &[&x], 2).unwrap().abs() <= 0.05);
}

#[test]
fn self_information_grows_with_sample_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let small = normals(&mut rng, 1000);
    let large = normals(&mut rng, 8000);
    let a = estimate_mi(&[&small], &[&small], 2).unwrap();
    let b = estimate_mi(&[&large], &[&large], 2).unwrap();
    assert!(a > 3.0 && b > a, "{a} {b}");
}

#[test]
fn single_shuffle_is_returned_regardless_of_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = normals(&mut rng, 300);
    let y = normals(&mut rng, 300);
    let at = |alpha| shuffle_threshold(&[&x], &[&y], &[], 2, &ShuffleTestConfig { alpha, n_shuffles: 1, seed: 9 }).unwrap();
    assert_eq!(at(0.05), at(0.99));
}

#[test]
fn shuffle_test_detects_dependence() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = ShuffleTestConfig { alpha: 0.95, n_shuffles: 20, seed: 0 };
    let mut detected = 0;
    for rep in 0..20 {
        let x = normals(&mut rng, 1000);
        let y: Vec<f64> = x.iter().map(|v| v + 0.1 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect();
        let tol = shuffle_threshold(&[&x], &[&y], &[], 2, &ShuffleTestConfig { seed: rep, ..cfg }).unwrap();
        if estimate_mi(&[&x], &[&y], 2).unwrap() > tol {
            detected += 1;
        }
    }
    assert_eq!(detected, 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn row_permutation_is_exact(seed: u64, n in 20usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normals(&mut rng, n);
        let y = correlated(&mut rng, &x, 0.6);
        let z = normals(&mut rng, n);
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let p = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let (px, py, pz) = (p(&x), p(&y), p(&z));
        prop_assert_eq!(
            estimate_cmi(&[&x], &[&y], &[&z], 2).unwrap().to_bits(),
            estimate_cmi(&[&px], &[&py], &[&pz], 2).unwrap().to_bits()
        );
        prop_assert_eq!(
            estimate_mi(&[&x], &[&y], 3).unwrap().to_bits(),
            estimate_mi(&[&px], &[&py], 3).unwrap().to_bits()
        );
    }

    #[test]
    fn empty_condition_is_plain_mi(seed: u64, n in 10usize..300, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normals(&mut rng, n);
        let y = correlated(&mut rng, &x, 0.3);
        prop_assert_eq!(
            estimate_cmi(&[&x], &[&y], &[], k).unwrap().to_bits(),
            estimate_mi(&[&x], &[&y], k).unwrap().to_bits()
        );
    }

    #[test]
    fn duplicated_values_never_break_the_estimator(values in prop::collection::vec(0u8..3, 10..80)) {
        let x: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = values.iter().rev().map(|&v| v as f64).collect();
        prop_assert!(estimate_mi(&[&x], &[&y], 2).unwrap().is_finite());
        prop_assert!(estimate_cmi(&[&x], &[&y], &[&x], 2).unwrap().is_finite());
    }

    #[test]
    fn shuffle_threshold_is_seeded(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = normals(&mut rng, 150);
        let y = normals(&mut rng, 150);
        let cfg = ShuffleTestConfig { alpha: 0.9, n_shuffles: 10, seed };
        prop_assert_eq!(
            shuffle_threshold(&[&x], &[&y], &[], 2, &cfg).unwrap().to_bits(),
            shuffle_threshold(&[&x], &[&y], &[], 2, &cfg).unwrap().to_bits()
        );
    }
}
