use entreg::basis::enumerate_monomials;
use entreg::dynamics::*;
use proptest::prelude::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Final state after integrating to `t_end` with step `dt`.
fn lorenz_end(dt: f64, t_end: f64) -> Vec<f64> {
    let steps = (t_end / dt).round() as usize + 1;
    let s = simulate_lorenz(&LorenzParams::default(), [1.0, 1.0, 1.0], dt, steps).unwrap();
    s.state(s.len() - 1).to_vec()
}

#[test]
fn lorenz_rk4_is_fourth_order() {
    let t = 0.5;
    let h = 0.01;
    let reference = lorenz_end(h / 8.0, t);
    let e1 = max_abs_diff(&lorenz_end(h, t), &reference);
    let e2 = max_abs_diff(&lorenz_end(h / 2.0, t), &reference);
    let ratio = e1 / e2;
    // Against a dt/8 reference the ideal ratio is (1 − 1/8⁴)/(1/16 − 1/8⁴) ≈ 17.
    assert!((12.0..22.0).contains(&ratio), "error ratio {ratio} ({e1:e} / {e2:e})");
}

#[test]
fn kse_rk4_is_fourth_order() {
    let p = KseParams { nu: 0.3, n_modes: 4 };
    let a0 = [0.1, -0.05, 0.02, 0.01];
    let end = |dt: f64| {
        let steps = (0.4 / dt).round() as usize + 1;
        let s = simulate_kse_modes(&p, &a0, &Sampling::every_step(dt, steps)).unwrap();
        s.state(s.len() - 1).to_vec()
    };
    let reference = end(0.0025);
    let ratio = max_abs_diff(&end(0.02), &reference) / max_abs_diff(&end(0.01), &reference);
    assert!((12.0..22.0).contains(&ratio), "error ratio {ratio}");
}

fn residual_of_truth(truth: &GroundTruth, series: &TimeSeriesSet, rhs: impl Fn(&[f64], &mut [f64])) -> f64 {
    let lib = enumerate_monomials(truth.state_dim(), truth.max_degree()).unwrap();
    let n = truth.n_equations();
    let (mut got, mut want) = (vec![0.0; n], vec![0.0; n]);
    let mut worst: f64 = 0.0;
    for t in 0..series.len() {
        evaluate_polynomial_field(&lib, truth.coefficients(), series.state(t), &mut got);
        rhs(series.state(t), &mut want);
        let scale = want.iter().map(|v| v.abs()).fold(1.0, f64::max);
        worst = worst.max(max_abs_diff(&got, &want) / scale);
    }
    worst
}

#[test]
fn lorenz_truth_reproduces_the_vector_field() {
    let p = LorenzParams::default();
    let s = simulate_lorenz(&p, [1.0, 2.0, 3.0], 0.001, 3000).unwrap();
    for d in [2, 5, 7] {
        let truth = lorenz_ground_truth(&p, d).unwrap();
        assert_eq!(truth.nonzero_count(), 7);
        assert!(residual_of_truth(&truth, &s, |z, o| p.rhs(z, o)) <= 1e-10);
    }
}

#[test]
fn kse_truth_reproduces_the_vector_field() {
    let p = KseParams::default();
    let a0: Vec<f64> = (0..16).map(|k| 0.1 * ((k as f64) * 1.3).sin()).collect();
    let s = simulate_kse_modes(&p, &a0, &Sampling { dt: 0.001, samples: 200, burn_in: 2000, stride: 5 }).unwrap();
    let truth = kse_ground_truth(&p, 2).unwrap();
    assert_eq!(truth.nonzero_count(), 200);
    assert_eq!(truth.n_candidates(), 153);
    assert!(residual_of_truth(&truth, &s, |z, o| p.rhs(z, o)) <= 1e-10);
}

#[test]
fn kse_linear_coefficients_span() {
    assert!((kse_linear_coefficient(0.029910, 1) - 0.97009).abs() < 1e-5);
    assert!((kse_linear_coefficient(0.029910, 16).abs() - 1704.2).abs() < 1.0);
}

#[test]
fn logistic_truth_reproduces_the_map() {
    let p = LogisticParams::default();
    let adj = Adjacency::random(20, 7).unwrap();
    let x0: Vec<f64> = (0..20).map(|i| 0.1 + 0.04 * i as f64).collect();
    let s = simulate_logistic_network(&p, &adj, &x0, 500, 0.5).unwrap();
    let truth = logistic_ground_truth(&p, &adj, 2).unwrap();
    assert_eq!(truth.n_candidates() * truth.n_equations(), 4620);
    assert!(residual_of_truth(&truth, &s, |x, o| p.step(&adj, x, o)) <= 1e-10);
}

#[test]
fn uncoupled_network_is_independent_logistic_maps() {
    let p = LogisticParams { a: 3.8, coupling: 0.0 };
    let adj = Adjacency::random(5, 1).unwrap();
    let x0 = [0.1, 0.3, 0.5, 0.7, 0.9];
    let s = simulate_logistic_network(&p, &adj, &x0, 100, 0.5).unwrap();
    for (i, &start) in x0.iter().enumerate() {
        let mut x = start;
        for t in 0..100 {
            assert_eq!(s.state(t)[i].to_bits(), x.to_bits());
            x = 3.8 * x * (1.0 - x);
        }
    }
}

#[test]
fn lorenz_stays_on_the_attractor() {
    let s = simulate_lorenz(&LorenzParams::default(), [1.0, 1.0, 1.0], 0.0005, 100_000).unwrap();
    assert!(s.states().iter().all(|v| v.abs() < 100.0));
    let origin = simulate_lorenz(&LorenzParams::default(), [0.0; 3], 0.0005, 1000).unwrap();
    assert!(origin.states().iter().all(|&v| v == 0.0));
}

#[test]
fn sine_central_difference_error_is_second_order() {
    let dt = 0.01;
    let rows = (0..700).map(|t| vec![(t as f64 * dt).sin()]).collect();
    let s = TimeSeriesSet::from_rows(rows, dt).unwrap();
    let (f, aligned) = estimate_derivatives(&s, DerivativeScheme::Central).unwrap();
    assert_eq!(aligned.len(), 698);
    for t in 0..aligned.len() {
        assert!((f[(t, 0)] - aligned.times()[t].cos()).abs() <= 2e-5);
    }
}

#[test]
fn outlier_fraction_and_gaussian_scale() {
    let clean = TimeSeriesSet::from_rows(vec![vec![0.0; 5]; 20_000], 1.0).unwrap();
    let (_, mask) = inject_noise_with_mask(&clean, &NoiseModel::outliers(1e-5, 0.2, 0.2, 3)).unwrap();
    let frac = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
    assert!((frac - 0.2).abs() <= 0.01, "{frac}");

    let big = TimeSeriesSet::from_rows(vec![vec![0.0; 10]; 100_000], 1.0).unwrap();
    let noisy = inject_noise(&big, &NoiseModel::gaussian(1e-4, 9)).unwrap();
    let n = noisy.states().len() as f64;
    let sd = (noisy.states().iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    assert!((sd / 1e-4 - 1.0).abs() < 0.05, "{sd}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn zero_noise_is_bit_exact(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..40), seed: u64) {
        let s = TimeSeriesSet::from_rows(rows, 0.01).unwrap();
        let out = inject_noise(&s, &NoiseModel::outliers(0.0, 0.0, 0.5, seed)).unwrap();
        prop_assert_eq!(out.states(), s.states());
        prop_assert_eq!(out.times(), s.times());
    }

    #[test]
    fn noise_preserves_shape_and_times(len in 1usize..50, dim in 1usize..5, eps in 0.0f64..1.0, seed: u64) {
        let s = TimeSeriesSet::from_rows(vec![vec![1.0; dim]; len], 0.5).unwrap();
        let out = inject_noise(&s, &NoiseModel::gaussian(eps, seed)).unwrap();
        prop_assert_eq!(out.len(), len);
        prop_assert_eq!(out.state_dim(), dim);
        prop_assert_eq!(out.times(), s.times());
        let again = inject_noise(&s, &NoiseModel::gaussian(eps, seed)).unwrap();
        prop_assert_eq!(out.states(), again.states());
    }

    #[test]
    fn lorenz_truth_matches_rhs_for_any_parameters(
        sigma in 0.0f64..20.0, rho in 0.0f64..40.0, beta in 0.0f64..5.0,
        z in prop::collection::vec(-30.0f64..30.0, 3),
    ) {
        let p = LorenzParams { sigma, rho, beta };
        let truth = lorenz_ground_truth(&p, 3).unwrap();
        let s = TimeSeriesSet::from_rows(vec![z], 1.0).unwrap();
        prop_assert!(residual_of_truth(&truth, &s, |z, o| p.rhs(z, o)) <= 1e-10);
    }

    #[test]
    fn linear_series_has_exact_central_derivative(c in -10.0f64..10.0, b in -10.0f64..10.0, len in 3usize..50) {
        let dt = 0.125;
        let s = TimeSeriesSet::from_rows((0..len).map(|t| vec![b + c * t as f64 * dt]).collect(), dt).unwrap();
        let (f, aligned) = estimate_derivatives(&s, DerivativeScheme::Central).unwrap();
        prop_assert_eq!(aligned.len(), len - 2);
        for v in f.iter() {
            prop_assert!((v - c).abs() <= 1e-9 * c.abs().max(1.0));
        }
    }
}
