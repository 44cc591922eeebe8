use std::sync::Arc;

use difflab::lower_bound::build_hypothesis_pair;
use difflab::malliavin::{
    conditional_second_moment_with, leading_weight, malliavin_derivative, sample_weights, score_check_with,
    simulate_augmented, FdCoupling, Perturbation,
};
use difflab::rng::{derive_seed, RngStream};
use difflab::simulator::InitialState;
use difflab::stats;

fn strong() -> Perturbation {
    Perturbation { center: 0.0, width: 0.3, inv_m: 0.4 }
}

#[test]
fn null_perturbation_is_inert() {
    let pert = Perturbation::null(0.0, 0.3);
    let mut rng = RngStream::new(11);
    let path = simulate_augmented(&pert, 1.0, 0.05, 0.1, 1e-3, &mut rng).unwrap();
    assert!(path.y_values.iter().all(|&y| y == 1.0));
    assert!(path.xdot_values.iter().all(|&v| v == 0.0));
    for s in [0.0, 0.03, 0.1] {
        assert_eq!(malliavin_derivative(&path, s), 1.0);
    }
    assert_eq!(leading_weight(&path).w_leading, 0.0);
    let (est, se, _) =
        conditional_second_moment_with(&pert, &InitialState::Fixed(0.0), 1.0, 0.05, 10_000, 0.05, 3).unwrap();
    assert_eq!(est, 0.0);
    assert_eq!(se, 0.0);
}

#[test]
fn derivative_at_the_endpoint_is_the_diffusion_coefficient() {
    let pert = strong();
    for seed in 0..20 {
        let mut rng = RngStream::new(derive_seed(5, seed, 1));
        let path = simulate_augmented(&pert, 0.8, 0.0, 0.05, 5e-4, &mut rng).unwrap();
        let x_end = *path.x_values.last().unwrap();
        let expected = 1.0 + 0.8 * pert.inv_m * pert.profile(x_end)[0];
        assert!((malliavin_derivative(&path, 0.05) - expected).abs() < 1e-12);
    }
}

#[test]
fn log_y_and_derivative_stay_within_their_bounds() {
    let pert = strong();
    let (eps, delta) = (1.0, 0.05);
    let bound = pert.log_y_bound(eps, delta);
    let amp = eps * pert.inv_m;
    for seed in 0..200 {
        let mut rng = RngStream::new(derive_seed(9, seed, 1));
        let path = simulate_augmented(&pert, eps, 0.02, delta, delta / 2000.0, &mut rng).unwrap();
        let worst = path.y_values.iter().map(|y| y.ln().abs()).fold(0.0, f64::max);
        assert!(worst <= bound * 1.02, "seed {seed}: {worst} > {bound}");
        let lo = (-2.0 * bound).exp() * (1.0 - amp);
        let hi = (2.0 * bound).exp() * (1.0 + amp);
        for k in 0..=10 {
            let d = malliavin_derivative(&path, delta * k as f64 / 10.0);
            assert!(d >= lo * 0.98 && d <= hi * 1.02, "seed {seed}: D = {d} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn tangent_second_moment_scales_like_delta_over_m_squared() {
    let pert = Perturbation { center: 0.0, width: 0.2, inv_m: 0.01 };
    for delta in [0.01, 0.04] {
        let sq: Vec<f64> = (0..4000)
            .map(|i| {
                let mut rng = RngStream::new(derive_seed(21, i, 1));
                let p = simulate_augmented(&pert, 0.5, 0.0, delta, delta / 100.0, &mut rng).unwrap();
                p.xdot_values.last().unwrap().powi(2)
            })
            .collect();
        let scaled = stats::mean(&sq) / (delta * pert.inv_m * pert.inv_m);
        assert!(scaled > 0.0 && scaled <= 1.1, "delta {delta}: scaled moment {scaled}");
    }
}

#[test]
fn leading_weight_splits_into_its_two_parts() {
    let pert = strong();
    let mut rng = RngStream::new(77);
    let path = simulate_augmented(&pert, 0.5, 0.1, 0.02, 2e-4, &mut rng).unwrap();
    let w = leading_weight(&path);
    assert!((w.w_leading - w.w1_main - w.w2_main).abs() < 1e-15);
    let batch = sample_weights(&pert, 0.5, 0.02, &InitialState::Fixed(0.1), 50, 4).unwrap();
    for s in &batch.samples {
        assert!((s.w_leading - s.w1_main - s.w2_main).abs() < 1e-15);
        assert_eq!(s.x0, 0.1);
    }
}

#[test]
fn weight_has_zero_mean_under_the_stationary_law() {
    let pair = build_hypothesis_pair(10_000, 3.0, 0.5, 1.0, 2.0, 0.0).unwrap();
    let init = InitialState::Stationary(Arc::new(pair.stationary(0.5).unwrap()));
    let batch = sample_weights(&Perturbation::of(&pair), 0.5, 0.01, &init, 100_000, 17).unwrap();
    let (mean, se) = batch.mean_and_stderr();
    assert!(mean.abs() <= 3.5 * se, "mean {mean}, se {se}");
}

#[test]
fn bootstrap_variance_shrinks_with_more_paths() {
    let pert = Perturbation { center: 0.0, width: 0.2, inv_m: 0.05 };
    let init = InitialState::Fixed(0.0);
    let (_, se1, _) = conditional_second_moment_with(&pert, &init, 0.5, 0.01, 10_000, 0.02, 8).unwrap();
    let (_, se2, _) = conditional_second_moment_with(&pert, &init, 0.5, 0.01, 20_000, 0.02, 8).unwrap();
    let ratio = (se2 / se1).powi(2);
    assert!((0.3..=0.8).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn coupled_score_check_tracks_the_finite_difference() {
    let pair = build_hypothesis_pair(10_000, 3.0, 0.5, 1.0, 2.0, 0.0).unwrap();
    let check =
        score_check_with(&Perturbation::of(&pair), 0.5, 0.05, 0.01, 0.0, 200_000, 23, FdCoupling::Common).unwrap();
    assert!(check.correlation() >= 0.8, "correlation {}", check.correlation());
}
