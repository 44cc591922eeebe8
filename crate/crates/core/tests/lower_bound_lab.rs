use difflab::lower_bound::{
    build_hypothesis_pair, calibrate, calibration_identity, hellinger_sq, separation, DensityGrid,
};
use difflab::Error;
use proptest::prelude::*;

fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn normalized(x: &[f64], p: Vec<f64>) -> Vec<f64> {
    let mass: f64 = x.windows(2).zip(p.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum();
    p.into_iter().map(|v| v / mass).collect()
}

#[test]
fn calibration_at_one_million() {
    let (h, m) = calibrate(1_000_000, 3.0, 0.5);
    assert!((h - 10f64.powf(-6.0 / 7.0)).abs() < 1e-12);
    assert!((m - 2.0 * 10f64.powf(18.0 / 7.0)).abs() < 1e-9);
    assert!((h - 0.13895).abs() < 1e-4);
}

#[test]
fn degenerate_calibrations_are_rejected() {
    assert!(matches!(build_hypothesis_pair(1, 3.0, 0.5, 1.0, 2.0, 0.0), Err(Error::CalibrationViolation(_))));
    assert!(matches!(build_hypothesis_pair(10_000, 2.0, 0.5, 1.0, 2.0, 0.0), Err(Error::InvalidParams(_))));
    assert!(matches!(build_hypothesis_pair(10_000, 3.0, 1.5, 1.0, 2.0, 0.0), Err(Error::InvalidParams(_))));
    assert!(build_hypothesis_pair(10, 3.0, 0.5, 1.0, 2.0, 0.0).is_ok());
}

#[test]
fn identical_densities_have_zero_distance() {
    let x = uniform_grid(-8.0, 8.0, 4001);
    let p: Vec<f64> = x.iter().map(|v| (-v * v / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()).collect();
    let g = DensityGrid { x, p };
    assert_eq!(hellinger_sq(&g, &g).unwrap(), 0.0);
}

#[test]
fn disjoint_densities_have_distance_two() {
    let x = uniform_grid(0.0, 4.0, 4001);
    let p: Vec<f64> = x.iter().map(|&v| if v <= 1.0 { 1.0 } else { 0.0 }).collect();
    let q: Vec<f64> = x.iter().map(|&v| if (2.0..=3.0).contains(&v) { 1.0 } else { 0.0 }).collect();
    let (p, q) = (normalized(&x, p), normalized(&x, q));
    let h2 = hellinger_sq(&DensityGrid { x: x.clone(), p }, &DensityGrid { x, p: q }).unwrap();
    assert!((h2 - 2.0).abs() < 1e-3);
}

#[test]
fn mismatched_or_unnormalized_grids_fail() {
    let a = DensityGrid { x: uniform_grid(0.0, 1.0, 11), p: vec![1.0; 11] };
    let b = DensityGrid { x: uniform_grid(0.0, 1.0, 12), p: vec![1.0; 12] };
    assert!(matches!(hellinger_sq(&a, &b), Err(Error::GridMismatch)));
    let c = DensityGrid { x: uniform_grid(0.0, 1.0, 11), p: vec![2.0; 11] };
    assert!(matches!(hellinger_sq(&a, &c), Err(Error::NotNormalized(_))));
}

#[test]
fn perturbation_lowers_the_density_at_the_centre() {
    let pair = build_hypothesis_pair(10_000, 3.0, 0.5, 1.0, 2.0, 0.0).unwrap();
    let base = pair.stationary(0.0).unwrap();
    let alt = pair.stationary(1.0).unwrap();
    assert!(alt.density(0.0) < base.density(0.0));
    let x = pair.eval_point + 1.5 * pair.h_n;
    assert!(alt.density(x) > base.density(x) - 1e-3 * base.density(x));
    let (raw, scaled) = separation(&pair).unwrap();
    assert!((scaled - raw * pair.m_n).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn calibration_identity_holds(n in 10u64..1_000_000_000, beta in 0.5f64..12.0, alpha0 in 0.01f64..1.0) {
        let id = calibration_identity(n, beta, alpha0);
        prop_assert!((id / (alpha0 * alpha0) - 1.0).abs() < 1e-12);
    }
}
