use anmdag::datagen::{self, rng::derive_seed};
use anmdag::indep::test_independence;
use anmdag::regress::{fit_gp, fit_linear, fitted_noise_values};
use anmdag::{GpConfig, NodeSet, RegressorKind, TestConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn gp_fits_a_smooth_sine() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..200).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|v| (3.0 * v).sin() + 0.01 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();
    let fit = fit_gp(&[&x], &y, &GpConfig::default()).unwrap();
    assert!(rms(&fit.residuals) <= 0.05, "rms {}", rms(&fit.residuals));
    let gp = fit.diagnostics.gp.unwrap();
    assert!(gp.log_marginal_likelihood.is_finite());
}

#[test]
fn gp_recovers_a_linear_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + rng.random_range(-0.5..0.5)).collect();
    let gp = fit_gp(&[&x], &y, &GpConfig::default()).unwrap().residuals;
    let ols = fit_linear(&[&x], &y).unwrap().residuals;
    let (mg, mo) = (gp.iter().sum::<f64>() / 300.0, ols.iter().sum::<f64>() / 300.0);
    let sgo: f64 = gp.iter().zip(&ols).map(|(a, b)| (a - mg) * (b - mo)).sum();
    let sgg: f64 = gp.iter().map(|a| (a - mg).powi(2)).sum();
    let soo: f64 = ols.iter().map(|b| (b - mo).powi(2)).sum();
    let corr = sgo / (sgg * soo).sqrt();
    assert!(corr >= 0.95, "corr {corr}");
}

#[test]
fn gp_residuals_of_cubic_model_are_independent() {
    let cfg = TestConfig::default();
    let mut pass = 0;
    for r in 0..50 {
        let inst = datagen::bivariate_cubic(300, derive_seed(5, "cubic", r)).unwrap();
        let s = NodeSet::singleton(0);
        let res = fitted_noise_values(&inst.data, s, 1, RegressorKind::GaussianProcess, &GpConfig::default()).unwrap();
        pass += usize::from(!test_independence(&inst.data, s, &res.residuals, &cfg).unwrap().rejects(cfg.alpha));
    }
    assert!(pass >= 45, "{pass}/50");
}

#[test]
fn linear_residuals_of_dataset4_sink_are_independent() {
    let inst = datagen::dataset4(400, 17).unwrap();
    let s: NodeSet = [0usize, 1, 2].into_iter().collect();
    let res = fitted_noise_values(&inst.data, s, 3, RegressorKind::Linear, &GpConfig::default()).unwrap();
    let t = test_independence(&inst.data, s, &res.residuals, &TestConfig::default()).unwrap();
    assert!(t.p_value >= 0.05, "p {}", t.p_value);
}
