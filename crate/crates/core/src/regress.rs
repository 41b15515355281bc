//! Tikhonov-regularized identification of the extended operator `[Â B̂]` and
//! multi-step rollout.

use crate::error::{Error, Result};
use crate::hankel::{augment_input, augment_state, build_matrices, DataMatrices, EmbeddingDims};
use crate::linalg::{dot, spd_condition_estimate, Cholesky, Matrix};
use crate::scalar::Real;
use crate::timeseries::{zscore_fit, ChannelSchema, Normalization, TimeSeriesRun};

/// Default cap on the Gram condition estimate for unregularized fits.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

const REFINEMENT_STEPS: usize = 2;
const CONDITION_ITERATIONS: usize = 100;

/// Training-window length, maximum state and input delay spans (seconds) and
/// the regularization factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters<T> {
    pub l_tr: T,
    pub l_dx: T,
    pub l_du: T,
    pub lambda: T,
}

/// Snapshot count and delay counts for a given time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Discretization {
    pub m: usize,
    pub s: usize,
    pub z: usize,
}

impl<T: Real> Hyperparameters<T> {
    pub fn new(l_tr: T, l_dx: T, l_du: T, lambda: T) -> Result<Self> {
        let h = Self {
            l_tr,
            l_dx,
            l_du,
            lambda,
        };
        h.validate()?;
        Ok(h)
    }

    /// Builds from spans expressed in multiples of the period `t_hat`.
    pub fn from_periods(l_tr: T, l_dx: T, l_du: T, lambda: T, t_hat: T) -> Result<Self> {
        Self::new(l_tr * t_hat, l_dx * t_hat, l_du * t_hat, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.l_tr, self.l_dx, self.l_du, self.lambda];
        if all.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::Parameter(format!(
                "hyperparameters must be finite and nonnegative: {self:?}"
            )));
        }
        if !(self.l_tr > self.l_dx && self.l_tr > self.l_du) {
            return Err(Error::Parameter(format!(
                "training length {} must exceed both delay spans ({}, {})",
                self.l_tr, self.l_dx, self.l_du
            )));
        }
        Ok(())
    }

    /// Nearest-integer sample counts: `m = round(l_tr/dt)`, `s = round(l_dx/dt)`,
    /// `z = round(l_du/dt)`.
    pub fn discretize(&self, dt: T) -> Result<Discretization> {
        self.validate()?;
        if !(dt > T::zero()) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let count = |l: T| (l / dt).round().to_usize().unwrap_or(0);
        let d = Discretization {
            m: count(self.l_tr),
            s: count(self.l_dx),
            z: count(self.l_du),
        };
        if d.m <= d.s || d.m <= d.z {
            return Err(Error::Parameter(format!(
                "after rounding, {} training samples do not exceed the delays ({}, {})",
                d.m, d.s, d.z
            )));
        }
        Ok(d)
    }

    /// Spans divided by `t_hat`.
    pub fn in_periods(&self, t_hat: T) -> (T, T, T) {
        (self.l_tr / t_hat, self.l_dx / t_hat, self.l_du / t_hat)
    }
}

/// Solves `G (ŶŶᵀ + λI) = X̂′Ŷᵀ` through a Cholesky factorization of the
/// regularized Gram matrix, followed by iterative refinement.
///
/// At `lambda = 0` the Gram condition estimate must stay below `condition_cap`.
pub fn fit<T: Real>(dm: &DataMatrices<T>, lambda: T, condition_cap: T) -> Result<Matrix<T>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "regularization factor must be finite and nonnegative, got {lambda}"
        )));
    }
    if dm.y.ncols() != dm.xp.ncols() || dm.y.nrows() != dm.dims.feature_dim() || dm.xp.nrows() != dm.dims.state_dim() {
        return Err(Error::Shape("data matrices do not match their embedding dims".into()));
    }
    let mut gram = dm.y.gram();
    gram.add_diagonal(lambda);
    let rhs = dm.xp.mul_transpose(&dm.y);

    let chol = match Cholesky::new(&gram) {
        Some(c) => c,
        None if lambda == T::zero() => {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
                cap: condition_cap.as_f64(),
            })
        }
        None => {
            return Err(Error::Regression(format!(
                "regularized Gram matrix is not positive definite at lambda = {lambda}"
            )))
        }
    };
    if lambda == T::zero() {
        let cond = spd_condition_estimate(&gram, &chol, CONDITION_ITERATIONS);
        if !(cond <= condition_cap) {
            return Err(Error::RankDeficient {
                condition: cond.as_f64(),
                cap: condition_cap.as_f64(),
            });
        }
    }

    // The Gram matrix is symmetric, so row i of G solves (ŶŶᵀ + λI) gᵢ = pᵢ.
    let mut g = Matrix::zeros(rhs.nrows(), rhs.ncols());
    for i in 0..rhs.nrows() {
        let p = rhs.row(i);
        let mut x = chol.solve(p);
        for _ in 0..REFINEMENT_STEPS {
            let ax = gram.matvec(&x);
            let mut r: Vec<T> = p.iter().zip(&ax).map(|(&a, &b)| a - b).collect();
            chol.solve_in_place(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += *ri;
            }
        }
        g.row_mut(i).copy_from_slice(&x);
    }
    if !g.is_finite() {
        return Err(Error::Regression("solution contains non-finite entries".into()));
    }
    Ok(g)
}

/// `‖G(ŶŶᵀ + λI) − X̂′Ŷᵀ‖_F / max(1, ‖X̂′Ŷᵀ‖_F)`.
pub fn normal_equation_residual<T: Real>(g: &Matrix<T>, dm: &DataMatrices<T>, lambda: T) -> T {
    let mut gram = dm.y.gram();
    gram.add_diagonal(lambda);
    let rhs = dm.xp.mul_transpose(&dm.y);
    let lhs = g.matmul(&gram);
    lhs.sub(&rhs).frobenius_norm() / rhs.frobenius_norm().max(T::one())
}

/// Whether training data are Z-scored before the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Shift and scale by training-window mean and standard deviation.
    #[default]
    ZScore,
    /// Fit on physical values.
    Identity,
}

/// Knobs for [`HdmdcModel::train`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions<T> {
    pub condition_cap: T,
    pub scaling: Scaling,
    /// First sample of the training window inside the training sequence.
    pub window_offset: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            condition_cap: T::lit(DEFAULT_CONDITION_CAP),
            scaling: Scaling::ZScore,
            window_offset: 0,
        }
    }
}

/// Identified extended operator with everything needed to forecast in
/// physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct HdmdcModel<T> {
    a_hat: Matrix<T>,
    b_hat: Matrix<T>,
    dims: EmbeddingDims,
    normalization: Normalization<T>,
    hyper: Hyperparameters<T>,
    schema: ChannelSchema,
    dt: T,
    training_run_id: String,
}

/// Predicted state trajectory in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast<T> {
    pub t: Vec<T>,
    /// `horizon × n`.
    pub values: Matrix<T>,
    pub channels: Vec<String>,
    pub member_id: String,
}

impl<T: Real> Forecast<T> {
    pub fn horizon(&self) -> usize {
        self.t.len()
    }
}

/// A forecast paired with the measured states over the same instants.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceForecast<T> {
    pub forecast: Forecast<T>,
    pub reference: Matrix<T>,
}

impl<T: Real> HdmdcModel<T> {
    /// Fits a model on the window `[offset, offset + m)` of `sequence`.
    pub fn train(
        sequence: &TimeSeriesRun<T>,
        schema: &ChannelSchema,
        hyper: &Hyperparameters<T>,
        options: &FitOptions<T>,
    ) -> Result<Self> {
        schema.validate()?;
        let disc = hyper.discretize(sequence.dt())?;
        let end = options.window_offset + disc.m;
        if end > sequence.len() {
            return Err(Error::Window(format!(
                "training window of {} samples at offset {} exceeds sequence `{}` of {} samples",
                disc.m,
                options.window_offset,
                sequence.id(),
                sequence.len()
            )));
        }
        let window = sequence.segment(options.window_offset, disc.m, sequence.id())?;
        let names = schema.all_owned();
        let normalization = match options.scaling {
            Scaling::ZScore => zscore_fit(&window, &names)?,
            Scaling::Identity => Normalization::identity(names),
        };
        let n = schema.states.len();
        let states = normalization.forward_matrix(&window.select(&schema.states)?, 0);
        let inputs = normalization.forward_matrix(&window.select(&schema.inputs)?, n);
        let dm = build_matrices(&states, &inputs, disc.s, disc.z)?;
        let g = fit(&dm, hyper.lambda, options.condition_cap)?;
        let sd = dm.dims.state_dim();
        Ok(Self {
            a_hat: g.slice_cols(0, sd),
            b_hat: g.slice_cols(sd, g.ncols()),
            dims: dm.dims,
            normalization,
            hyper: *hyper,
            schema: schema.clone(),
            dt: sequence.dt(),
            training_run_id: sequence.id().to_owned(),
        })
    }

    /// Assembles a model from known matrices.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        a_hat: Matrix<T>,
        b_hat: Matrix<T>,
        dims: EmbeddingDims,
        normalization: Normalization<T>,
        hyper: Hyperparameters<T>,
        schema: ChannelSchema,
        dt: T,
        training_run_id: impl Into<String>,
    ) -> Result<Self> {
        schema.validate()?;
        let sd = dims.state_dim();
        if a_hat.shape() != (sd, sd) || b_hat.shape() != (sd, dims.input_dim()) {
            return Err(Error::Shape(format!(
                "A is {:?} and B is {:?}, expected ({sd}, {sd}) and ({sd}, {})",
                a_hat.shape(),
                b_hat.shape(),
                dims.input_dim()
            )));
        }
        if schema.states.len() != dims.n || schema.inputs.len() != dims.q {
            return Err(Error::Shape(
                "schema channel counts differ from the embedding dims".into(),
            ));
        }
        if normalization.channels != schema.all_owned() {
            return Err(Error::Schema(
                "normalization channels must be the schema's states then inputs".into(),
            ));
        }
        if !(dt > T::zero()) {
            return Err(Error::Parameter("time step must be positive".into()));
        }
        Ok(Self {
            a_hat,
            b_hat,
            dims,
            normalization,
            hyper,
            schema,
            dt,
            training_run_id: training_run_id.into(),
        })
    }

    pub fn a_hat(&self) -> &Matrix<T> {
        &self.a_hat
    }

    pub fn b_hat(&self) -> &Matrix<T> {
        &self.b_hat
    }

    /// `[Â B̂]`.
    pub fn g(&self) -> Matrix<T> {
        let sd = self.dims.state_dim();
        let cols = self.dims.feature_dim();
        Matrix::from_fn(sd, cols, |i, j| {
            if j < sd {
                self.a_hat[(i, j)]
            } else {
                self.b_hat[(i, j - sd)]
            }
        })
    }

    pub fn dims(&self) -> &EmbeddingDims {
        &self.dims
    }

    pub fn normalization(&self) -> &Normalization<T> {
        &self.normalization
    }

    pub fn hyper(&self) -> &Hyperparameters<T> {
        &self.hyper
    }

    pub fn schema(&self) -> &ChannelSchema {
        &self.schema
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn training_run_id(&self) -> &str {
        &self.training_run_id
    }

    /// `Â x̂ + B̂ û`.
    pub fn one_step(&self, x_hat: &[T], u_hat: &[T]) -> Result<Vec<T>> {
        if x_hat.len() != self.dims.state_dim() || u_hat.len() != self.dims.input_dim() {
            return Err(Error::Shape(format!(
                "got state of length {} and input of length {}, expected {} and {}",
                x_hat.len(),
                u_hat.len(),
                self.dims.state_dim(),
                self.dims.input_dim()
            )));
        }
        let mut out = self.a_hat.matvec(x_hat);
        self.b_hat.matvec_add_into(u_hat, &mut out);
        Ok(out)
    }

    fn check_dt(&self, dt: T) -> Result<()> {
        if ((dt - self.dt) / self.dt).abs() > T::lit(1e-9) {
            return Err(Error::Parameter(format!(
                "data step {dt} differs from the model step {}",
                self.dt
            )));
        }
        Ok(())
    }

    /// Rolls the model forward `horizon` steps from the end of `warmup`.
    ///
    /// `warmup` must hold the schema channels for at least `max(s, z) + 1`
    /// samples; `forcing` (`horizon × q`, physical units) holds the measured
    /// input at each forecast instant. The delayed input entries advance
    /// through `forcing`; the state part evolves purely through the model.
    pub fn predict(&self, warmup: &TimeSeriesRun<T>, forcing: &Matrix<T>, horizon: usize) -> Result<Forecast<T>> {
        self.check_dt(warmup.dt())?;
        let t_end = warmup.start() + self.dt * T::from_count(warmup.len() - 1);
        self.predict_from(
            &warmup.select(&self.schema.states)?,
            &warmup.select(&self.schema.inputs)?,
            t_end,
            forcing,
            horizon,
        )
    }

    /// [`predict`](Self::predict) on raw physical-unit history: `states`
    /// (`w × n`) and `inputs` (`w × q`) end at time `t_end`.
    pub fn predict_from(
        &self,
        states: &Matrix<T>,
        inputs: &Matrix<T>,
        t_end: T,
        forcing: &Matrix<T>,
        horizon: usize,
    ) -> Result<Forecast<T>> {
        let (n, q, s, z) = (self.dims.n, self.dims.q, self.dims.s, self.dims.z);
        let need = self.dims.warmup();
        if states.nrows() != inputs.nrows() || states.ncols() != n || inputs.ncols() != q {
            return Err(Error::Shape(format!(
                "warmup states {:?} and inputs {:?} do not match n = {n}, q = {q}",
                states.shape(),
                inputs.shape()
            )));
        }
        if states.nrows() < need {
            return Err(Error::History(format!(
                "warmup has {} samples, the embedding needs {need}",
                states.nrows()
            )));
        }
        if forcing.ncols() != q {
            return Err(Error::Shape(format!(
                "forcing has {} channels, expected {q}",
                forcing.ncols()
            )));
        }
        if forcing.nrows() < horizon {
            return Err(Error::Input(format!(
                "forcing covers {} steps, the horizon needs {horizon}",
                forcing.nrows()
            )));
        }
        let t: Vec<T> = (1..=horizon).map(|k| t_end + self.dt * T::from_count(k)).collect();
        let mut values = Matrix::zeros(horizon, n);
        if horizon == 0 {
            return Ok(self.wrap_forecast(t, values));
        }

        let w = states.nrows();
        let hist_states = self.normalization.forward_matrix(&states.slice_rows(w - need, w), 0);
        let past_inputs = self.normalization.forward_matrix(&inputs.slice_rows(w - need, w), n);
        let future_inputs = self.normalization.forward_matrix(&forcing.slice_rows(0, horizon), n);

        // Input history: warmup rows, then the forcing rows.
        let mut history = Matrix::zeros(need + horizon, q);
        for i in 0..need {
            history.row_mut(i).copy_from_slice(past_inputs.row(i));
        }
        for i in 0..horizon {
            history.row_mut(need + i).copy_from_slice(future_inputs.row(i));
        }

        let j0 = need - 1;
        let mut x_hat = augment_state(&hist_states, j0, s)?;
        let mut next = vec![T::zero(); x_hat.len()];
        let mut u_hat = vec![T::zero(); self.dims.input_dim()];
        for k in 0..horizon {
            let j = j0 + k;
            for d in 0..=z {
                u_hat[d * q..(d + 1) * q].copy_from_slice(history.row(j - d));
            }
            for (i, v) in next.iter_mut().enumerate() {
                *v = dot(self.a_hat.row(i), &x_hat) + dot(self.b_hat.row(i), &u_hat);
            }
            std::mem::swap(&mut x_hat, &mut next);
            for c in 0..n {
                values[(k, c)] = self.normalization.inverse(c, x_hat[c]);
            }
        }
        if !values.is_finite() {
            return Err(Error::Regression("forecast diverged to non-finite values".into()));
        }
        Ok(self.wrap_forecast(t, values))
    }

    fn wrap_forecast(&self, t: Vec<T>, values: Matrix<T>) -> Forecast<T> {
        Forecast {
            t,
            values,
            channels: self.schema.states.clone(),
            member_id: self.training_run_id.clone(),
        }
    }

    /// Uses the first `warmup` samples of `sequence` as history and forecasts
    /// the rest, returning the measured states alongside.
    pub fn forecast_sequence(&self, sequence: &TimeSeriesRun<T>, warmup: usize) -> Result<SequenceForecast<T>> {
        self.check_dt(sequence.dt())?;
        if warmup == 0 || warmup >= sequence.len() {
            return Err(Error::History(format!(
                "warmup of {warmup} samples leaves no horizon in sequence `{}` of {}",
                sequence.id(),
                sequence.len()
            )));
        }
        let horizon = sequence.len() - warmup;
        let inputs = sequence.select(&self.schema.inputs)?;
        let forcing = inputs.slice_rows(warmup, sequence.len());
        let t_end = sequence.start() + self.dt * T::from_count(warmup - 1);
        let states = sequence.select(&self.schema.states)?;
        let forecast = self.predict_from(
            &states.slice_rows(0, warmup),
            &inputs.slice_rows(0, warmup),
            t_end,
            &forcing,
            horizon,
        )?;
        let reference = states.slice_rows(warmup, sequence.len());
        Ok(SequenceForecast { forecast, reference })
    }

    /// One-step-ahead predictions from measured history at every usable
    /// instant of `run`: row `r` predicts the state at sample `max(s, z) + 1 + r`.
    pub fn one_step_predictions(&self, run: &TimeSeriesRun<T>) -> Result<SequenceForecast<T>> {
        self.check_dt(run.dt())?;
        let n = self.dims.n;
        let states = self.normalization.forward_matrix(&run.select(&self.schema.states)?, 0);
        let inputs = self.normalization.forward_matrix(&run.select(&self.schema.inputs)?, n);
        let p = self.dims.max_delay();
        if run.len() < p + 2 {
            return Err(Error::History(format!(
                "run of {} samples is too short for {p} delays",
                run.len()
            )));
        }
        let rows = run.len() - 1 - p;
        let mut values = Matrix::zeros(rows, n);
        for r in 0..rows {
            let j = p + r;
            let x_hat = augment_state(&states, j, self.dims.s)?;
            let u_hat = augment_input(&inputs, j, self.dims.z)?;
            let next = self.one_step(&x_hat, &u_hat)?;
            for c in 0..n {
                values[(r, c)] = self.normalization.inverse(c, next[c]);
            }
        }
        let times = run.times();
        let forecast = Forecast {
            t: times[p + 1..].to_vec(),
            values,
            channels: self.schema.states.clone(),
            member_id: self.training_run_id.clone(),
        };
        let reference = run.select(&self.schema.states)?.slice_rows(p + 1, run.len());
        Ok(SequenceForecast { forecast, reference })
    }
}
