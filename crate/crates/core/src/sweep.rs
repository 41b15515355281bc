//! Full-factorial hyperparameter sweep over training × validation pairs.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{nrmse, NrmseConfig};
use crate::regress::{Discretization, FitOptions, HdmdcModel, Hyperparameters};
use crate::scalar::Real;
use crate::stats;
use crate::timeseries::{ChannelSchema, TimeSeriesRun};

/// Levels per axis; spans are in periods.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<T> {
    pub l_tr: Vec<T>,
    pub l_dx: Vec<T>,
    pub l_du: Vec<T>,
    pub lambda: Vec<T>,
}

impl<T: Real> Default for SweepGrid<T> {
    fn default() -> Self {
        let lits = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect();
        Self {
            l_tr: lits(&[5.0, 10.0, 20.0]),
            l_dx: lits(&[0.0, 1.0, 2.0]),
            l_du: lits(&[0.0, 1.0, 2.0]),
            lambda: lits(&[10.0, 100.0, 1000.0]),
        }
    }
}

impl<T: Real> SweepGrid<T> {
    pub fn len(&self) -> usize {
        self.l_tr.len() * self.l_dx.len() * self.l_du.len() * self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Cartesian product in lexicographic `(l_tr, l_dx, l_du, λ)` order, with
/// spans converted to seconds through `t_hat`.
pub fn enumerate<T: Real>(grid: &SweepGrid<T>, t_hat: T) -> Result<Vec<Hyperparameters<T>>> {
    for (name, axis) in [
        ("l_tr", &grid.l_tr),
        ("l_dx", &grid.l_dx),
        ("l_du", &grid.l_du),
        ("lambda", &grid.lambda),
    ] {
        if axis.is_empty() {
            return Err(Error::Parameter(format!("sweep axis {name} has no levels")));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for &a in &grid.l_tr {
        for &b in &grid.l_dx {
            for &c in &grid.l_du {
                for &d in &grid.lambda {
                    out.push(Hyperparameters::from_periods(a, b, c, d, t_hat)?);
                }
            }
        }
    }
    Ok(out)
}

/// Aggregated outcome of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRecord<T> {
    pub hyper: Hyperparameters<T>,
    pub disc: Option<Discretization>,
    /// Row-major `training × validation`; `Err` holds the failure cause.
    pub cells: Vec<Result<T, String>>,
    /// Mean over successful cells (NaN when none succeeded).
    pub mean: T,
    /// `Q3 − Q1` over successful cells (NaN when none succeeded).
    pub iqr: T,
    pub successes: usize,
    pub failures: usize,
    /// At most half of the cells failed.
    pub usable: bool,
}

impl<T: Real> ConfigRecord<T> {
    pub fn from_cells(hyper: Hyperparameters<T>, disc: Option<Discretization>, cells: Vec<Result<T, String>>) -> Self {
        let ok: Vec<T> = cells.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
        let failures = cells.len() - ok.len();
        let (mean, iqr) = if ok.is_empty() {
            (T::nan(), T::nan())
        } else {
            (stats::mean(&ok), stats::iqr(&ok))
        };
        Self {
            hyper,
            disc,
            usable: !ok.is_empty() && 2 * failures <= cells.len(),
            successes: ok.len(),
            failures,
            mean,
            iqr,
            cells,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub records: Vec<ConfigRecord<T>>,
    pub training_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    /// Validation samples used as forecast history in every cell.
    pub warmup: usize,
    pub metric: NrmseConfig<T>,
}

impl<T: Real> SweepResult<T> {
    pub fn cell(&self, config: usize, training: usize, validation: usize) -> &Result<T, String> {
        &self.records[config].cells[training * self.validation_ids.len() + validation]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    pub metric: NrmseConfig<T>,
    pub fit: FitOptions<T>,
    /// History taken from each validation sequence; defaults to the
    /// longest any configuration needs, so all cells share one horizon.
    pub warmup: Option<usize>,
}

impl<T: Real> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            metric: NrmseConfig::default(),
            fit: FitOptions::default(),
            warmup: None,
        }
    }
}

/// Trains every configuration on every training sequence and scores the
/// forecast of every validation sequence. Cell failures are recorded, not raised.
pub fn evaluate_grid<T: Real>(
    configs: &[Hyperparameters<T>],
    training: &[TimeSeriesRun<T>],
    validation: &[TimeSeriesRun<T>],
    schema: &ChannelSchema,
    options: &SweepOptions<T>,
) -> Result<SweepResult<T>> {
    if training.is_empty() || validation.is_empty() {
        return Err(Error::Parameter(format!(
            "a sweep needs training and validation sequences, got {} and {}",
            training.len(),
            validation.len()
        )));
    }
    let dt = validation[0].dt();
    let warmup = match options.warmup {
        Some(w) => w,
        None => configs
            .iter()
            .filter_map(|h| h.discretize(dt).ok())
            .map(|d| d.s.max(d.z) + 1)
            .max()
            .unwrap_or(1),
    };
    let n_val = validation.len();
    let pairs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..training.len()).map(move |t| (c, t)))
        .collect();
    let rows: Vec<Vec<Result<T, String>>> = pairs
        .par_iter()
        .map(|&(c, t)| {
            let model = match HdmdcModel::train(&training[t], schema, &configs[c], &options.fit) {
                Ok(m) => m,
                Err(e) => {
                    log::debug!("config {c} on `{}`: {e}", training[t].id());
                    return vec![Err(e.to_string()); n_val];
                }
            };
            validation
                .iter()
                .map(|v| {
                    model
                        .forecast_sequence(v, warmup)
                        .and_then(|sf| nrmse(&sf.forecast.values, &sf.reference, &options.metric, None))
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let mut rows = rows.into_iter();
    let records = configs
        .iter()
        .map(|h| {
            let cells: Vec<_> = rows.by_ref().take(training.len()).flatten().collect();
            ConfigRecord::from_cells(*h, h.discretize(dt).ok(), cells)
        })
        .collect();
    Ok(SweepResult {
        records,
        training_ids: training.iter().map(|r| r.id().to_owned()).collect(),
        validation_ids: validation.iter().map(|r| r.id().to_owned()).collect(),
        warmup,
        metric: options.metric,
    })
}

fn rank<T: Real>(a: &ConfigRecord<T>, b: &ConfigRecord<T>) -> Ordering {
    let key = |r: &ConfigRecord<T>| {
        [
            r.mean.as_f64(),
            r.iqr.as_f64(),
            r.hyper.l_tr.as_f64(),
            r.hyper.l_dx.as_f64(),
            r.hyper.l_du.as_f64(),
            r.hyper.lambda.as_f64(),
        ]
    };
    key(a)
        .iter()
        .zip(key(b).iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Index of the usable configuration with the lowest mean NRMSE; ties go to
/// the smaller IQR, then to the lexicographically smaller configuration.
pub fn best_index<T: Real>(result: &SweepResult<T>) -> Result<usize> {
    result
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.usable)
        .min_by(|(_, a), (_, b)| rank(a, b))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::SweepFailure(format!("none of {} configurations is usable", result.records.len())))
}

pub fn select_best<T: Real>(result: &SweepResult<T>) -> Result<Hyperparameters<T>> {
    Ok(result.records[best_index(result)?].hyper)
}
