use difflab::diffusion::DiffusionModel;
use difflab::kernel::{build_kernel, Regime};
use difflab::rates::{
    decomposition_defect, fit_rate_exponent, fit_rate_exponent_against, run_mse_experiment, variance_bound_check, DeltaRule, FitAxis, MseRow, MseTable,
    RateExperimentConfig,
};
use difflab::Error;

fn row(n: usize, horizon: f64, mse: f64) -> MseRow {
    MseRow {
        n,
        delta: horizon / n as f64,
        horizon,
        h: 0.1,
        regime: Regime::Intermediate,
        mse,
        mse_stderr: 0.0,
        mean_bias: 0.0,
        variance: mse,
        failures: 0,
        flagged: false,
    }
}

fn small_config(seed: u64) -> RateExperimentConfig {
    RateExperimentConfig {
        model: DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap(),
        beta: 2.0,
        eval_point: 0.0,
        n_grid: vec![200, 800],
        delta_rule: DeltaRule::PowerLaw { scale: 1.0, exponent: 0.2 },
        replicates: 30,
        master_seed: seed,
        kernel_order: 2,
        substeps: Some(20),
    }
}

#[test]
fn exact_power_law_is_recovered() {
    let rows = [1000usize, 10_000, 100_000].map(|n| row(n, n as f64, 3.0 * (n as f64).powf(-0.8)));
    let table = MseTable { rows: rows.to_vec(), truth: 0.5 };
    let fit = fit_rate_exponent(&table).unwrap();
    assert!((fit.slope + 0.8).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
    assert!(fit.slope_stderr.abs() < 1e-10);
}

#[test]
fn horizon_axis_uses_horizons() {
    let rows = [(1000usize, 2.0), (10_000, 4.0), (100_000, 8.0)].map(|(n, t)| row(n, t, 1.0 / t));
    let fit = fit_rate_exponent_against(&MseTable { rows: rows.to_vec(), truth: 0.5 }, FitAxis::Horizon).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
}

#[test]
fn identical_abscissae_are_degenerate() {
    let rows = vec![row(100, 1.0, 0.1), row(100, 1.0, 0.2)];
    assert!(matches!(fit_rate_exponent(&MseTable { rows, truth: 0.5 }), Err(Error::DegenerateFit)));
}

#[test]
fn too_few_replicates_are_rejected() {
    let mut cfg = small_config(1);
    cfg.replicates = 10;
    assert!(matches!(run_mse_experiment(&cfg), Err(Error::Precondition(_))));
}

#[test]
fn experiment_is_reproducible_and_decomposes() {
    let a = run_mse_experiment(&small_config(4)).unwrap();
    let b = run_mse_experiment(&small_config(4)).unwrap();
    assert_eq!(a, b);
    assert!(decomposition_defect(&a) < 1e-9);
    assert!(!a.has_flagged_rows());
    assert!((a.truth - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-10);
    let c = run_mse_experiment(&small_config(5)).unwrap();
    assert_ne!(a.rows[0].mse, c.rows[0].mse);
}

#[test]
fn variance_rows_follow_the_grid_order() {
    let grid = [(300usize, 0.1, 0.5), (300, 0.05, 0.5), (300, 0.1, 0.2)];
    let model = DiffusionModel::ornstein_uhlenbeck(1.0, 1.0).unwrap();
    let rows = variance_bound_check(&model, &grid, &build_kernel(2).unwrap(), 0.0, 20, 8).unwrap();
    for (r, g) in rows.iter().zip(&grid) {
        assert_eq!((r.n, r.delta, r.h), *g);
        let t = r.n as f64 * r.delta;
        assert!((r.bound_shape - (1.0 / t + r.delta / (t * r.h))).abs() < 1e-15);
        assert!(r.empirical_variance > 0.0);
    }
}
