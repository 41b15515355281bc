#![allow(dead_code)]

use hdmdc::stats::rng_from_seed;
use hdmdc::synthetic::gen_lti_run;
use hdmdc::{ChannelSchema, LtiSystem, Matrix, TimeSeriesRun};
use rand::Rng;

pub fn a2() -> Matrix<f64> {
    Matrix::from_rows(&[vec![0.9, 0.2], vec![-0.1, 0.8]])
}

pub fn b2() -> Matrix<f64> {
    Matrix::from_rows(&[vec![1.0], vec![0.5]])
}

/// Third-order system with distinct real and complex poles.
pub fn a3() -> Matrix<f64> {
    Matrix::from_rows(&[vec![0.7, 0.3, 0.0], vec![-0.3, 0.7, 0.2], vec![0.0, -0.1, 0.5]])
}

pub fn b3() -> Matrix<f64> {
    Matrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0]])
}

pub fn white_forcing(len: usize, q: usize, seed: u64) -> Matrix<f64> {
    let mut rng = rng_from_seed(seed);
    Matrix::from_fn(len, q, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn lti_run(sys: &LtiSystem<f64>, len: usize, seed: u64) -> TimeSeriesRun<f64> {
    let forcing = white_forcing(len, sys.input_count(), seed);
    gen_lti_run(sys, &forcing, len, 1.0, 0.0, seed).unwrap()
}

pub fn schema_of(sys: &LtiSystem<f64>) -> ChannelSchema {
    let (states, inputs) = sys.channel_names();
    ChannelSchema::new(states, inputs).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = rng_from_seed(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5)
}
