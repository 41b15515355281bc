//! Ensembles of HDMDc forecasts: one over sampled hyperparameters and one over
//! models trained on different sequences.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regress::{FitOptions, Forecast, HdmdcModel, Hyperparameters, SequenceForecast};
use crate::scalar::Real;
use crate::stats::{derive_seed, rng_from_seed, Rng};
use crate::timeseries::{ChannelSchema, TimeSeriesRun};

pub const DEFAULT_REALIZATIONS: usize = 100;
pub const DEFAULT_BAND_MULTIPLIER: f64 = 4.0;
/// Largest tolerated share of failed members.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;
const SAMPLE_RETRIES: usize = 100;

/// Uniform prior on spans (in periods) and the regularization factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperparamPrior<T> {
    pub l_tr: (T, T),
    pub l_dx: (T, T),
    pub l_du: (T, T),
    pub lambda: (T, T),
}

impl<T: Real> Default for HyperparamPrior<T> {
    fn default() -> Self {
        Self {
            l_tr: (T::lit(10.0), T::lit(20.0)),
            l_dx: (T::lit(1.0), T::lit(2.0)),
            l_du: (T::lit(1.0), T::lit(2.0)),
            lambda: (T::lit(100.0), T::lit(1000.0)),
        }
    }
}

impl<T: Real> HyperparamPrior<T> {
    /// Prior concentrated on one configuration.
    pub fn point(l_tr: T, l_dx: T, l_du: T, lambda: T) -> Self {
        Self {
            l_tr: (l_tr, l_tr),
            l_dx: (l_dx, l_dx),
            l_du: (l_du, l_du),
            lambda: (lambda, lambda),
        }
    }

    fn axes(&self) -> [(&'static str, (T, T)); 4] {
        [
            ("l_tr", self.l_tr),
            ("l_dx", self.l_dx),
            ("l_du", self.l_du),
            ("lambda", self.lambda),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.axes() {
            if !lo.is_finite() || !hi.is_finite() || lo < T::zero() || lo > hi {
                return Err(Error::Parameter(format!(
                    "prior bounds for {name} are invalid: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// History length that covers the largest delays the prior can produce.
    pub fn max_warmup(&self, t_hat: T, dt: T) -> usize {
        let span = self.l_dx.1.max(self.l_du.1) * t_hat;
        (span / dt).round().to_usize().unwrap_or(0) + 1
    }
}

fn draw<T: Real>(rng: &mut Rng, (lo, hi): (T, T)) -> T {
    if lo == hi {
        lo
    } else {
        lo + (hi - lo) * T::lit(rng.random::<f64>())
    }
}

/// Draws one admissible configuration from `rng`, redrawing while the
/// rounded training length does not exceed the rounded delays.
pub fn sample_hyperparams_with<T: Real>(
    prior: &HyperparamPrior<T>,
    t_hat: T,
    dt: T,
    rng: &mut Rng,
) -> Result<Hyperparameters<T>> {
    prior.validate()?;
    if !(t_hat > T::zero()) || !(dt > T::zero()) {
        return Err(Error::Parameter(format!(
            "period {t_hat} and step {dt} must be positive"
        )));
    }
    let mut last = None;
    for _ in 0..SAMPLE_RETRIES {
        let l_tr = draw(rng, prior.l_tr);
        let l_dx = draw(rng, prior.l_dx);
        let l_du = draw(rng, prior.l_du);
        let lambda = draw(rng, prior.lambda);
        match Hyperparameters::from_periods(l_tr, l_dx, l_du, lambda, t_hat).and_then(|h| h.discretize(dt).map(|_| h)) {
            Ok(h) => return Ok(h),
            Err(e) => last = Some(e),
        }
    }
    Err(Error::Parameter(format!(
        "no admissible configuration after {SAMPLE_RETRIES} draws: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

pub fn sample_hyperparams<T: Real>(
    prior: &HyperparamPrior<T>,
    t_hat: T,
    dt: T,
    seed: u64,
) -> Result<Hyperparameters<T>> {
    sample_hyperparams_with(prior, t_hat, dt, &mut rng_from_seed(seed))
}

/// Pointwise ensemble mean and unbiased standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast<T> {
    pub t: Vec<T>,
    pub channels: Vec<String>,
    /// `horizon × n`.
    pub mean: Matrix<T>,
    pub std: Matrix<T>,
    pub members: usize,
    pub band_multiplier: T,
}

impl<T: Real> EnsembleForecast<T> {
    pub fn lower_band(&self) -> Matrix<T> {
        let mut out = self.mean.clone();
        for (o, &s) in out.as_mut_slice().iter_mut().zip(self.std.as_slice()) {
            *o -= self.band_multiplier * s;
        }
        out
    }

    pub fn upper_band(&self) -> Matrix<T> {
        let mut out = self.mean.clone();
        for (o, &s) in out.as_mut_slice().iter_mut().zip(self.std.as_slice()) {
            *o += self.band_multiplier * s;
        }
        out
    }

    /// Columns `time, <ch>_mean, <ch>_std, …`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header = vec!["time".to_owned()];
        for c in &self.channels {
            header.push(format!("{c}_mean"));
            header.push(format!("{c}_std"));
        }
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for (i, t) in self.t.iter().enumerate() {
            let mut row = vec![t.to_string()];
            for c in 0..self.channels.len() {
                row.push(self.mean[(i, c)].to_string());
                row.push(self.std[(i, c)].to_string());
            }
            w.write_record(&row).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Combines member forecasts. Deviations are taken from the first member
/// before averaging so that identical members give exactly zero spread.
pub fn combine_members<T: Real>(members: &[Forecast<T>], band_multiplier: T) -> Result<EnsembleForecast<T>> {
    let first = members
        .first()
        .ok_or(Error::EnsembleDegenerate { failed: 0, total: 0 })?;
    let shape = first.values.shape();
    for m in members {
        if m.values.shape() != shape || m.channels != first.channels {
            return Err(Error::EnsembleSchema(format!(
                "member `{}` has shape {:?} and channels {:?}, expected {:?} and {:?}",
                m.member_id,
                m.values.shape(),
                m.channels,
                shape,
                first.channels
            )));
        }
    }
    let k = T::from_count(members.len());
    let mut mean = Matrix::zeros(shape.0, shape.1);
    let mut std = Matrix::zeros(shape.0, shape.1);
    let mut dev = vec![T::zero(); members.len()];
    for i in 0..shape.0 {
        for c in 0..shape.1 {
            let base = first.values[(i, c)];
            for (d, m) in dev.iter_mut().zip(members) {
                *d = m.values[(i, c)] - base;
            }
            let shift = dev.iter().copied().sum::<T>() / k;
            mean[(i, c)] = base + shift;
            if members.len() > 1 {
                let ss: T = dev.iter().map(|&d| (d - shift) * (d - shift)).sum();
                std[(i, c)] = (ss / (k - T::one())).sqrt();
            }
        }
    }
    Ok(EnsembleForecast {
        t: first.t.clone(),
        channels: first.channels.clone(),
        mean,
        std,
        members: members.len(),
        band_multiplier,
    })
}

/// Ensemble forecast with the members and failures behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome<T> {
    pub forecast: EnsembleForecast<T>,
    pub members: Vec<Forecast<T>>,
    /// Configuration used by each successful member, in member order.
    pub member_hyper: Vec<Hyperparameters<T>>,
    /// Measured states over the forecast horizon.
    pub reference: Matrix<T>,
    /// `(realization index, cause)` for each skipped member.
    pub failures: Vec<(usize, String)>,
}

fn collect_members<T: Real>(
    results: Vec<Result<(SequenceForecast<T>, Hyperparameters<T>)>>,
    band_multiplier: T,
) -> Result<EnsembleOutcome<T>> {
    let total = results.len();
    let mut members = Vec::new();
    let mut member_hyper = Vec::new();
    let mut reference = None;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((sf, h)) => {
                reference.get_or_insert(sf.reference);
                members.push(sf.forecast);
                member_hyper.push(h);
            }
            Err(e) => {
                log::warn!("ensemble member {i} failed: {e}");
                failures.push((i, e.to_string()));
            }
        }
    }
    let failed = failures.len();
    if members.is_empty() || (failed as f64) > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::EnsembleDegenerate { failed, total });
    }
    Ok(EnsembleOutcome {
        forecast: combine_members(&members, band_multiplier)?,
        members,
        member_hyper,
        reference: reference.expect("at least one member"),
        failures,
    })
}

/// Settings for [`bayesian_forecast`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesianConfig<T> {
    pub n_samples: usize,
    /// Period the prior spans are expressed in.
    pub t_hat: T,
    pub seed: u64,
    /// Start each training window at a random offset instead of the sequence start.
    pub random_offset: bool,
    /// Samples of the test sequence used as history. Defaults to the
    /// largest delay the prior allows, so all members share one horizon.
    pub warmup: Option<usize>,
    pub fit: FitOptions<T>,
    pub band_multiplier: T,
}

impl<T: Real> BayesianConfig<T> {
    pub fn new(t_hat: T, seed: u64) -> Self {
        Self {
            n_samples: DEFAULT_REALIZATIONS,
            t_hat,
            seed,
            random_offset: false,
            warmup: None,
            fit: FitOptions::default(),
            band_multiplier: T::lit(DEFAULT_BAND_MULTIPLIER),
        }
    }
}

fn realization<T: Real>(
    i: usize,
    prior: &HyperparamPrior<T>,
    pool: &[TimeSeriesRun<T>],
    test: &TimeSeriesRun<T>,
    schema: &ChannelSchema,
    cfg: &BayesianConfig<T>,
    warmup: usize,
) -> Result<(SequenceForecast<T>, Hyperparameters<T>)> {
    let mut rng = rng_from_seed(derive_seed(cfg.seed, i as u64));
    let hyper = sample_hyperparams_with(prior, cfg.t_hat, test.dt(), &mut rng)?;
    let train = &pool[rng.random_range(0..pool.len())];
    let mut fit = cfg.fit;
    if cfg.random_offset {
        let m = hyper.discretize(train.dt())?.m;
        let slack = train
            .len()
            .checked_sub(m)
            .ok_or_else(|| Error::Window(format!("sequence `{}` is shorter than {m} samples", train.id())))?;
        fit.window_offset = rng.random_range(0..=slack);
    }
    let model = HdmdcModel::train(train, schema, &hyper, &fit)?;
    Ok((model.forecast_sequence(test, warmup)?, hyper))
}

/// Monte Carlo ensemble over hyperparameters drawn from `prior`, each member
/// trained on a sequence picked at random from `pool`.
pub fn bayesian_forecast<T: Real>(
    prior: &HyperparamPrior<T>,
    pool: &[TimeSeriesRun<T>],
    test: &TimeSeriesRun<T>,
    schema: &ChannelSchema,
    cfg: &BayesianConfig<T>,
) -> Result<EnsembleOutcome<T>> {
    prior.validate()?;
    if cfg.n_samples < 2 {
        return Err(Error::Parameter(format!(
            "need at least two realizations, got {}",
            cfg.n_samples
        )));
    }
    if pool.is_empty() {
        return Err(Error::Parameter("training pool is empty".into()));
    }
    let warmup = cfg.warmup.unwrap_or_else(|| prior.max_warmup(cfg.t_hat, test.dt()));
    let results: Vec<_> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| realization(i, prior, pool, test, schema, cfg, warmup))
        .collect();
    collect_members(results, cfg.band_multiplier)
}

/// Ensemble over already trained models sharing a step and channel schema.
///
/// `warmup` defaults to the longest history any member needs.
pub fn frequentist_forecast<T: Real>(
    models: &[HdmdcModel<T>],
    test: &TimeSeriesRun<T>,
    warmup: Option<usize>,
    band_multiplier: T,
) -> Result<EnsembleOutcome<T>> {
    if models.len() < 2 {
        return Err(Error::Parameter(format!(
            "need at least two models, got {}",
            models.len()
        )));
    }
    let head = &models[0];
    for m in models {
        if ((m.dt() - head.dt()) / head.dt()).abs() > T::lit(1e-9) {
            return Err(Error::EnsembleSchema(format!(
                "model `{}` has step {} but `{}` has {}",
                m.training_run_id(),
                m.dt(),
                head.training_run_id(),
                head.dt()
            )));
        }
        if m.schema() != head.schema() {
            return Err(Error::EnsembleSchema(format!(
                "model `{}` uses a different channel schema",
                m.training_run_id()
            )));
        }
    }
    let warmup = warmup.unwrap_or_else(|| models.iter().map(|m| m.dims().warmup()).max().unwrap_or(1));
    let results: Vec<_> = models
        .par_iter()
        .map(|m| m.forecast_sequence(test, warmup).map(|sf| (sf, *m.hyper())))
        .collect();
    collect_members(results, band_multiplier)
}
