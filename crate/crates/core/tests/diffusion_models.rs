use difflab::diffusion::{build_stationary, make_reference_model, unnormalized_stationary, DiffusionModel, ModelFamily, ModelParams};
use difflab::quadrature::integrate;
use difflab::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn ou_normalizer_matches_closed_form() {
    let d = build_stationary(&DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap(), 1e-12).unwrap();
    assert!((d.density(0.0) - 1.0 / PI.sqrt()).abs() < 1e-8);
    assert!((d.normalizer() - 1.0 / PI.sqrt()).abs() < 1e-8);
}

#[test]
fn smooth_sign_density_is_flat_on_the_core() {
    let params = ModelParams::new().with("eta", 1.0).with("A", 2.0);
    let model = make_reference_model(ModelFamily::SmoothSignDrift, &params).unwrap();
    let d = build_stationary(&model, 1e-12).unwrap();
    let c = d.density(0.0);
    for x in [-1.9, -0.5, 0.7, 1.99] {
        assert!((d.density(x) - c).abs() < 1e-12, "x = {x}");
    }
    assert!(d.density(5.0) < c);
    assert!((unnormalized_stationary(&model, 1.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn smooth_sign_tail_is_exponential() {
    let params = ModelParams::new().with("eta", 0.5).with("A", 1.0);
    let model = make_reference_model(ModelFamily::SmoothSignDrift, &params).unwrap();
    let u = |x| unnormalized_stationary(&model, x).unwrap();
    let ratio = u(6.0) / u(5.0);
    assert!((ratio - (-1.0f64).exp()).abs() < 1e-9);
}

#[test]
fn small_scale_is_rejected() {
    let params = ModelParams::new().with("A", 0.5);
    assert!(matches!(make_reference_model(ModelFamily::SmoothSignDrift, &params), Err(Error::InvalidParams(_))));
    let params = ModelParams::new().with("h", 0.1);
    assert!(matches!(make_reference_model(ModelFamily::PerturbedDiffusion, &params), Err(Error::InvalidParams(_))));
}

#[test]
fn perturbed_model_changes_only_the_bump_window() {
    let params = ModelParams::new().with("h", 0.3).with("M", 10.0).with("epsilon", 1.0);
    let model = make_reference_model(ModelFamily::PerturbedDiffusion, &params).unwrap();
    assert_eq!(model.a(0.31), 1.0);
    assert_eq!(model.a(-0.5), 1.0);
    assert!(model.a(0.0) > 1.0);
    assert!(model.validate().is_ok());
}

#[test]
fn holder_certificate_holds_for_references() {
    for model in [
        DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap(),
        make_reference_model(ModelFamily::SmoothSignDrift, &ModelParams::new()).unwrap(),
    ] {
        let d = build_stationary(&model, 1e-12).unwrap();
        assert!(d.check_holder_certificate(400).is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ou_density_is_a_probability_density(theta in 0.2f64..5.0, sigma in 0.3f64..3.0) {
        let model = DiffusionModel::ornstein_uhlenbeck(theta, sigma).unwrap();
        let d = build_stationary(&model, 1e-12).unwrap();
        let (lo, hi) = d.truncation_domain();
        let mass = integrate(|x| d.density(x), lo, hi).unwrap();
        prop_assert!((mass - 1.0).abs() < 1e-8);
        let v = sigma * sigma / (2.0 * theta);
        let exact = 1.0 / (2.0 * PI * v).sqrt();
        prop_assert!((d.density(0.0) - exact).abs() < 1e-8 * exact.max(1.0));
    }

    #[test]
    fn cdf_is_monotone_and_quantile_inverts_it(eta in 0.3f64..3.0, scale in 1.0f64..4.0, u in 0.001f64..0.999) {
        let params = ModelParams::new().with("eta", eta).with("A", scale);
        let model = make_reference_model(ModelFamily::SmoothSignDrift, &params).unwrap();
        let d = build_stationary(&model, 1e-12).unwrap();
        let x = d.quantile(u);
        prop_assert!((d.cdf(x) - u).abs() < 1e-7);
        prop_assert!(d.cdf(x + 0.01) >= d.cdf(x));
    }
}
