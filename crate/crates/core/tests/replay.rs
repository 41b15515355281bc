mod common;

use common::*;
use hdmdc::ensemble::sample_hyperparams_with;
use hdmdc::stats::{derive_seed, iqr, rng_from_seed};
use hdmdc::{
    bayesian_forecast, enumerate, evaluate_grid, frequentist_forecast, nrmse, select_best, BayesianConfig,
    EnsembleForecast, FitOptions, Forecast, HdmdcModel, HyperparamPrior, Hyperparameters, LtiSystem, SweepGrid,
    SweepOptions, TimeSeriesRun,
};
use rand::Rng;

const T_HAT: f64 = 20.0;

fn pool(sys: &LtiSystem<f64>, count: usize, len: usize, noise: f64) -> Vec<TimeSeriesRun<f64>> {
    (0..count)
        .map(|i| {
            let forcing = white_forcing(len, sys.input_count(), 100 + i as u64);
            hdmdc::gen_lti_run(sys, &forcing, len, 1.0, noise, 200 + i as u64)
                .unwrap()
                .with_id(format!("run{i}"))
        })
        .collect()
}

fn brute_force_check(ens: &EnsembleForecast<f64>, members: &[Forecast<f64>]) {
    let k = members.len() as f64;
    let (rows, cols) = ens.mean.shape();
    for i in 0..rows {
        for c in 0..cols {
            let vals: Vec<f64> = members.iter().map(|m| m.values[(i, c)]).collect();
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let scale = mean.abs().max(1.0);
            assert!((ens.mean[(i, c)] - mean).abs() <= 1e-12 * scale);
            assert!((ens.std[(i, c)] - var.sqrt()).abs() <= 1e-12 * scale);
        }
    }
}

fn small_prior() -> HyperparamPrior<f64> {
    HyperparamPrior {
        l_tr: (10.0, 20.0),
        l_dx: (0.0, 1.0),
        l_du: (0.0, 1.0),
        lambda: (1.0, 10.0),
    }
}

#[test]
fn bayesian_members_replay_from_their_seeds() {
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let runs = pool(&sys, 3, 450, 0.01);
    let test = pool(&sys, 1, 120, 0.01).remove(0).with_id("test");
    let schema = schema_of(&sys);
    let prior = small_prior();
    let mut cfg = BayesianConfig::new(T_HAT, 9);
    cfg.n_samples = 12;
    let out = bayesian_forecast(&prior, &runs, &test, &schema, &cfg).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.members.len(), 12);
    brute_force_check(&out.forecast, &out.members);

    let warmup = prior.max_warmup(T_HAT, 1.0);
    for (i, m) in out.members.iter().enumerate() {
        let mut rng = rng_from_seed(derive_seed(9, i as u64));
        let hyper = sample_hyperparams_with(&prior, T_HAT, 1.0, &mut rng).unwrap();
        assert_eq!(hyper, out.member_hyper[i]);
        let train = &runs[rng.random_range(0..runs.len())];
        let model = HdmdcModel::train(train, &schema, &hyper, &FitOptions::default()).unwrap();
        assert_eq!(model.forecast_sequence(&test, warmup).unwrap().forecast, *m);
    }

    let again = bayesian_forecast(&prior, &runs, &test, &schema, &cfg).unwrap();
    assert_eq!(again, out);
}

#[test]
fn point_prior_on_one_sequence_collapses() {
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let runs = pool(&sys, 1, 450, 0.01);
    let test = pool(&sys, 1, 120, 0.01).remove(0);
    let prior = HyperparamPrior::point(15.0, 1.0, 1.0, 10.0);
    let mut cfg = BayesianConfig::new(T_HAT, 3);
    cfg.n_samples = 5;
    let out = bayesian_forecast(&prior, &runs, &test, &schema_of(&sys), &cfg).unwrap();
    assert!(out.forecast.std.as_slice().iter().all(|&s| s == 0.0));
    assert_eq!(out.forecast.mean, out.members[0].values);
    assert_eq!(out.forecast.lower_band(), out.forecast.upper_band());
}

#[test]
fn frequentist_statistics_match_members() {
    let sys = LtiSystem::full(a2(), b2()).unwrap();
    let runs = pool(&sys, 4, 450, 0.02);
    let test = pool(&sys, 1, 120, 0.02).remove(0);
    let schema = schema_of(&sys);
    let hyper = Hyperparameters::from_periods(20.0, 1.0, 1.0, 10.0, T_HAT).unwrap();
    let models: Vec<_> = runs
        .iter()
        .map(|r| HdmdcModel::train(r, &schema, &hyper, &FitOptions::default()).unwrap())
        .collect();
    let out = frequentist_forecast(&models, &test, None, 4.0).unwrap();
    brute_force_check(&out.forecast, &out.members);
    for (model, m) in models.iter().zip(&out.members) {
        assert_eq!(model.forecast_sequence(&test, 21).unwrap().forecast, *m);
    }
    let ens = nrmse(&out.forecast.mean, &out.reference, &Default::default(), None).unwrap();
    let worst = out
        .members
        .iter()
        .map(|m| nrmse(&m.values, &out.reference, &Default::default(), None).unwrap())
        .fold(0.0, f64::max);
    assert!(ens <= worst);

    let dup = frequentist_forecast(&[models[0].clone(), models[0].clone()], &test, None, 4.0).unwrap();
    assert!(dup.forecast.std.as_slice().iter().all(|&s| s == 0.0));
}

fn sweep_fixture() -> (Vec<TimeSeriesRun<f64>>, Vec<TimeSeriesRun<f64>>, hdmdc::ChannelSchema) {
    let sys = LtiSystem::new(a3(), b3(), vec![0]).unwrap();
    let training = pool(&sys, 3, 450, 0.02);
    let validation: Vec<_> = pool(&sys, 2, 150, 0.02)
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.with_id(format!("val{i}")))
        .collect();
    (training, validation, schema_of(&sys))
}

fn small_grid() -> SweepGrid<f64> {
    SweepGrid {
        l_tr: vec![10.0, 20.0],
        l_dx: vec![0.1, 1.0],
        l_du: vec![0.1, 1.0],
        lambda: vec![1.0, 100.0],
    }
}

#[test]
fn sweep_cells_and_aggregates_replay() {
    let (training, validation, schema) = sweep_fixture();
    let configs = enumerate(&small_grid(), T_HAT).unwrap();
    let opts = SweepOptions::default();
    let result = evaluate_grid(&configs, &training, &validation, &schema, &opts).unwrap();
    assert_eq!(result.warmup, 21);
    for (c, rec) in result.records.iter().enumerate() {
        let mut ok = Vec::new();
        for (t, tr) in training.iter().enumerate() {
            let model = HdmdcModel::train(tr, &schema, &configs[c], &opts.fit).unwrap();
            for (v, val) in validation.iter().enumerate() {
                let sf = model.forecast_sequence(val, result.warmup).unwrap();
                let e = nrmse(&sf.forecast.values, &sf.reference, &opts.metric, None).unwrap();
                assert_eq!(result.cell(c, t, v), &Ok(e));
                ok.push(e);
            }
        }
        let mean = ok.iter().sum::<f64>() / ok.len() as f64;
        assert!((rec.mean - mean).abs() <= 1e-12);
        assert_eq!(rec.iqr, iqr(&ok));
        assert!(rec.usable);
    }
    let best = select_best(&result).unwrap();
    let min = result.records.iter().map(|r| r.mean).fold(f64::INFINITY, f64::min);
    assert!(result.records.iter().any(|r| r.hyper == best && r.mean == min));
}

#[test]
fn sweep_cells_ignore_config_order() {
    let (training, validation, schema) = sweep_fixture();
    let configs = enumerate(&small_grid(), T_HAT).unwrap();
    let mut reversed = configs.clone();
    reversed.reverse();
    let opts = SweepOptions {
        warmup: Some(25),
        ..SweepOptions::default()
    };
    let a = evaluate_grid(&configs, &training, &validation, &schema, &opts).unwrap();
    let b = evaluate_grid(&reversed, &training, &validation, &schema, &opts).unwrap();
    let n = configs.len();
    for c in 0..n {
        assert_eq!(a.records[c].cells, b.records[n - 1 - c].cells);
    }
}

#[test]
fn default_grid_contains_the_reference_configuration() {
    let configs = enumerate(&SweepGrid::default(), 1.25).unwrap();
    assert_eq!(configs.len(), 81);
    let target = Hyperparameters::from_periods(20.0, 2.0, 2.0, 100.0, 1.25).unwrap();
    assert!(configs.contains(&target));
}
