mod common;

use std::time::Instant;

use common::*;
use hdmdc::regress::normal_equation_residual;
use hdmdc::{build_matrices, fit, nrmse, FitOptions, HdmdcModel, Hyperparameters, LtiSystem, NrmseConfig, Scaling};

fn exact() -> FitOptions<f64> {
    FitOptions {
        scaling: Scaling::Identity,
        ..FitOptions::default()
    }
}

fn max_diff(a: &hdmdc::Matrix<f64>, b: &hdmdc::Matrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.sub(b).max_abs()
}

#[test]
fn lti_operator_is_recovered_without_delays() {
    let start = Instant::now();
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let run = lti_run(&sys, 2300, 11);
    let train = run.segment(0, 2000, "train").unwrap();
    let hyper = Hyperparameters::new(2000.0, 0.0, 0.0, 0.0).unwrap();
    let model = HdmdcModel::train(&train, &schema_of(&sys), &hyper, &exact()).unwrap();
    assert!(max_diff(model.a_hat(), &a2()) <= 1e-8);
    assert!(max_diff(model.b_hat(), &b2()) <= 1e-8);

    // 15 periods of 20 samples.
    let test = run.segment(1999, 301, "test").unwrap();
    let sf = model.forecast_sequence(&test, 1).unwrap();
    let e = nrmse(&sf.forecast.values, &sf.reference, &NrmseConfig::default(), None).unwrap();
    assert!(e <= 1e-6, "rollout nrmse {e}");
    assert!(start.elapsed().as_secs_f64() <= 1.0);
}

fn one_step_error(s: f64, z: f64) -> f64 {
    let sys = LtiSystem::new(a3(), b3(), vec![0]).unwrap();
    let run = lti_run(&sys, 1500, 21);
    let train = run.segment(0, 1000, "train").unwrap();
    let test = run.segment(1000, 500, "test").unwrap();
    let hyper = Hyperparameters::new(1000.0, s, z, 0.0).unwrap();
    let model = HdmdcModel::train(&train, &schema_of(&sys), &hyper, &exact()).unwrap();
    let sf = model.one_step_predictions(&test).unwrap();
    nrmse(&sf.forecast.values, &sf.reference, &NrmseConfig::default(), None).unwrap()
}

#[test]
fn delays_recover_a_partially_observed_system() {
    let with = one_step_error(2.0, 2.0);
    assert!(with <= 1e-6, "s = 2: {with}");
    let without = one_step_error(0.0, 2.0);
    assert!(without > 1e-6, "s = 0: {without}");
    assert!(one_step_error(0.0, 0.0) > 1e-6);
}

#[test]
fn ridge_norm_is_nonincreasing_in_lambda() {
    for seed in 0..5 {
        let x = random_matrix(300, 2, seed);
        let u = random_matrix(300, 1, seed + 100);
        let dm = build_matrices(&x, &u, 2, 2).unwrap();
        let norms: Vec<f64> = [0.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&l| fit(&dm, l, 1e12).unwrap().frobenius_norm())
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{norms:?}");
        }
    }
}

#[test]
fn residual_is_tiny_on_lti_and_random_fits() {
    let sys = LtiSystem::new(a3(), b3(), vec![0, 2]).unwrap();
    let forcing = white_forcing(800, 1, 8);
    let run = hdmdc::gen_lti_run(&sys, &forcing, 800, 1.0, 0.01, 8).unwrap();
    let states = run.select(&schema_of(&sys).states).unwrap();
    let inputs = run.select(&schema_of(&sys).inputs).unwrap();
    for &(s, z) in &[(0, 0), (1, 1), (3, 2)] {
        let dm = build_matrices(&states, &inputs, s, z).unwrap();
        for &lambda in &[0.0, 10.0, 100.0, 1000.0] {
            let g = fit(&dm, lambda, 1e12).unwrap();
            let r = normal_equation_residual(&g, &dm, lambda);
            assert!(r <= 1e-10, "s={s} z={z} lambda={lambda}: {r}");
        }
    }
}

#[test]
fn f32_models_train_and_forecast() {
    let sys = LtiSystem::<f32>::full(
        hdmdc::Matrix::from_rows(&[vec![0.9f32, 0.2], vec![-0.1, 0.8]]),
        hdmdc::Matrix::from_rows(&[vec![1.0f32], vec![0.5]]),
    )
    .unwrap();
    let forcing = hdmdc::Matrix::from_fn(600, 1, |i, _| ((i as f32) * 0.37).sin());
    let run = hdmdc::gen_lti_run(&sys, &forcing, 600, 1.0, 0.0, 1).unwrap();
    let (states, inputs) = sys.channel_names();
    let schema = hdmdc::ChannelSchema::new(states, inputs).unwrap();
    let hyper = Hyperparameters::new(500.0f32, 1.0, 1.0, 10.0).unwrap();
    let model = HdmdcModel::train(
        &run.segment(0, 500, "t").unwrap(),
        &schema,
        &hyper,
        &FitOptions::default(),
    )
    .unwrap();
    let sf = model
        .forecast_sequence(&run.segment(498, 102, "v").unwrap(), 2)
        .unwrap();
    let e = nrmse(&sf.forecast.values, &sf.reference, &NrmseConfig::default(), None).unwrap();
    assert!(e < 0.05, "{e}");
}
