mod common;

use common::*;
use hdmdc::metrics::uniform_grid;
use hdmdc::{
    frequentist_forecast, load_model, load_run, pdf_confidence, save_model, ChannelSchema, Error, FitOptions,
    HdmdcModel, Hyperparameters, LtiSystem,
};

#[test]
fn saved_models_forecast_identically() {
    let dir = tempfile::tempdir().unwrap();
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let run = lti_run(&sys, 400, 5);
    let schema = schema_of(&sys);
    let hyper = Hyperparameters::new(300.0, 2.0, 3.0, 10.0).unwrap();
    let model = HdmdcModel::train(&run, &schema, &hyper, &FitOptions::default()).unwrap();
    let path = dir.path().join("m.hdmdc");
    save_model(&model, &path).unwrap();
    let back: HdmdcModel<f64> = load_model(&path).unwrap();
    assert_eq!(back, model);
    let test = run.segment(300, 100, "t").unwrap();
    assert_eq!(
        back.forecast_sequence(&test, 4).unwrap(),
        model.forecast_sequence(&test, 4).unwrap()
    );
}

#[test]
fn run_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let run = lti_run(&sys, 50, 6).with_id("probe");
    let path = dir.path().join("probe.csv");
    run.write_csv(&path).unwrap();
    let back = load_run::<f64>(&path, &schema_of(&sys)).unwrap();
    assert_eq!(back.id(), "probe");
    assert_eq!(back.values(), run.values());
    assert!((back.dt() - 1.0).abs() < 1e-12);
}

#[test]
fn missing_file_names_the_path() {
    let schema = ChannelSchema::new(vec!["x".into()], vec!["u".into()]).unwrap();
    let err = load_run::<f64>(std::path::Path::new("/nonexistent/run.csv"), &schema).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/run.csv"));
}

#[test]
fn report_csv_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let schema = schema_of(&sys);
    let hyper = Hyperparameters::new(200.0, 1.0, 1.0, 10.0).unwrap();
    let models: Vec<_> = (0..2)
        .map(|i| HdmdcModel::train(&lti_run(&sys, 250, i), &schema, &hyper, &FitOptions::default()).unwrap())
        .collect();
    let out = frequentist_forecast(&models, &lti_run(&sys, 60, 9), None, 4.0).unwrap();
    let path = dir.path().join("ens.csv");
    out.forecast.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("time,x1_mean,x1_std,x2_mean,x2_std\n"));
    assert_eq!(text.lines().count(), 1 + 58);

    let series: Vec<f64> = lti_run(&sys, 200, 3).channel("x1").unwrap();
    let grid = uniform_grid(-10.0, 10.0, 64).unwrap();
    let est = pdf_confidence(&series, 10, &grid, 1).unwrap();
    let path = dir.path().join("pdf.csv");
    est.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("grid,expected,lower,upper\n"));
    assert_eq!(text.lines().count(), 65);
}
