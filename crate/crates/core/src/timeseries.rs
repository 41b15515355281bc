//! Multichannel runs: CSV ingestion, mean-crossing analysis, resampling and
//! Z-score normalization.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stats;

/// Maximum relative deviation of a time step from the mean step.
pub const SAMPLING_JITTER: f64 = 1e-6;

/// One uniformly sampled multichannel recording. Rows are time instants,
/// columns are channels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRun<T> {
    id: String,
    dt: T,
    t0: T,
    channels: Vec<String>,
    values: Matrix<T>,
}

impl<T: Real> TimeSeriesRun<T> {
    pub fn new(id: impl Into<String>, dt: T, channels: Vec<String>, values: Matrix<T>) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        if values.nrows() < 2 {
            return Err(Error::Format(format!(
                "a run needs at least 2 samples, got {}",
                values.nrows()
            )));
        }
        if values.ncols() != channels.len() {
            return Err(Error::Schema(format!(
                "{} channel names for {} value columns",
                channels.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for c in &channels {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!("duplicate channel `{c}`")));
            }
        }
        Ok(Self {
            id: id.into(),
            dt,
            t0: T::zero(),
            channels,
            values,
        })
    }

    /// Sets the time stamp of the first sample.
    pub fn with_start(mut self, t0: T) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn start(&self) -> T {
        self.t0
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> T {
        self.dt * T::from_count(self.len() - 1)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.t0 + self.dt * T::from_count(i)).collect()
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("run `{}` has no channel `{name}`", self.id)))
    }

    pub fn channel(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.values.column(self.channel_index(name)?))
    }

    /// Columns for the named channels, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Matrix<T>> {
        let idx = names
            .iter()
            .map(|n| self.channel_index(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.values.select_cols(&idx))
    }

    /// Copies `len` samples starting at `start` into a new run.
    pub fn segment(&self, start: usize, len: usize, id: impl Into<String>) -> Result<Self> {
        if len < 2 || start + len > self.len() {
            return Err(Error::Window(format!(
                "segment {start}..{} outside run `{}` of {} samples",
                start + len,
                self.id,
                self.len()
            )));
        }
        Ok(Self {
            id: id.into(),
            dt: self.dt,
            t0: self.t0 + self.dt * T::from_count(start),
            channels: self.channels.clone(),
            values: self.values.slice_rows(start, start + len),
        })
    }

    /// Writes the run in the `time,<ch1>,<ch2>,…` CSV layout.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut line = String::from("time");
        for c in &self.channels {
            line.push(',');
            line.push_str(c);
        }
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        for (i, t) in self.times().into_iter().enumerate() {
            line.clear();
            line.push_str(&t.as_f64().to_string());
            for &v in self.values.row(i) {
                line.push(',');
                line.push_str(&v.as_f64().to_string());
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Assignment of channels to the state and forcing roles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelSchema {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
}

impl ChannelSchema {
    pub fn new(states: Vec<String>, inputs: Vec<String>) -> Result<Self> {
        let schema = Self { states, inputs };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::Schema("at least one state channel is required".into()));
        }
        if self.inputs.is_empty() {
            return Err(Error::Schema("an input (forcing) channel is required".into()));
        }
        let mut seen = HashSet::new();
        for c in self.all() {
            if c == "time" {
                return Err(Error::Schema("`time` is reserved for the time column".into()));
            }
            if !seen.insert(c) {
                return Err(Error::Schema(format!("channel `{c}` listed twice")));
            }
        }
        Ok(())
    }

    /// State channels followed by input channels.
    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.states.iter().chain(&self.inputs).map(String::as_str)
    }

    pub fn all_owned(&self) -> Vec<String> {
        self.all().map(str::to_owned).collect()
    }
}

/// Reads a run CSV, keeping the schema's channels (states, then inputs).
pub fn load_run<T: Real>(path: &Path, schema: &ChannelSchema) -> Result<TimeSeriesRun<T>> {
    schema.validate()?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    read_run(file, &id, schema)
}

/// Parses run CSV text from any reader.
pub fn read_run<T: Real, R: std::io::Read>(reader: R, id: &str, schema: &ChannelSchema) -> Result<TimeSeriesRun<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{id}: unreadable header: {e}")))?
        .clone();
    if headers.get(0) != Some("time") {
        return Err(Error::Schema(format!("{id}: first column must be `time`")));
    }
    let names = schema.all_owned();
    let mut cols = Vec::with_capacity(names.len());
    for name in &names {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{id}: missing column `{name}`")))?;
        cols.push(pos);
    }

    let mut times: Vec<f64> = Vec::new();
    let mut data: Vec<T> = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| Error::Format(format!("{id}: row {row}: {e}")))?;
        let parse = |idx: usize, label: &str| -> Result<f64> {
            let cell = record
                .get(idx)
                .ok_or_else(|| Error::Format(format!("{id}: row {row}: missing cell for `{label}`")))?;
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Format(format!("{id}: row {row}: cannot parse `{cell}` in `{label}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Data {
                    row,
                    channel: label.to_owned(),
                })
            }
        };
        times.push(parse(0, "time")?);
        for (&c, name) in cols.iter().zip(&names) {
            data.push(T::lit(parse(c, name)?));
        }
    }
    if times.len() < 2 {
        return Err(Error::Format(format!(
            "{id}: at least 2 rows are required, got {}",
            times.len()
        )));
    }
    for (i, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Format(format!("{id}: time is not increasing at row {}", i + 2)));
        }
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > SAMPLING_JITTER * dt {
            return Err(Error::NonUniformSampling {
                row: i + 2,
                step,
                expected: dt,
            });
        }
    }
    let values = Matrix::from_vec(n, names.len(), data);
    Ok(TimeSeriesRun::new(id, T::lit(dt), names, values)?.with_start(T::lit(times[0])))
}

/// Counts upward crossings of the signal mean: indices with
/// `signal[i] < mean` and `signal[i + 1] >= mean`.
pub fn zero_up_crossings<T: Real>(signal: &[T]) -> usize {
    if signal.len() < 2 {
        return 0;
    }
    let mu = stats::mean(signal);
    signal.windows(2).filter(|w| w[0] < mu && w[1] >= mu).count()
}

/// Mean over runs of the per-run period `duration / upward crossings`, where
/// the duration is `samples · dt`.
pub fn mean_encounter_period<T: Real>(runs: &[TimeSeriesRun<T>], channel: &str) -> Result<T> {
    if runs.is_empty() {
        return Err(Error::Parameter("no runs to estimate the encounter period from".into()));
    }
    let mut total = T::zero();
    for run in runs {
        let signal = run.channel(channel)?;
        let crossings = zero_up_crossings(&signal);
        if crossings == 0 {
            return Err(Error::Degenerate(format!(
                "run `{}` has no upward crossings in `{channel}`",
                run.id()
            )));
        }
        total += T::from_count(run.len()) * run.dt() / T::from_count(crossings);
    }
    Ok(total / T::from_count(runs.len()))
}

/// Linearly interpolates the run onto a grid of `period / steps_per_period`
/// spacing covering the original time span. Only downsampling is allowed.
pub fn resample<T: Real>(run: &TimeSeriesRun<T>, steps_per_period: usize, period: T) -> Result<TimeSeriesRun<T>> {
    if steps_per_period < 2 {
        return Err(Error::Parameter(format!(
            "steps per period must be at least 2, got {steps_per_period}"
        )));
    }
    if !(period > T::zero()) {
        return Err(Error::Parameter(format!("period must be positive, got {period}")));
    }
    let new_dt = period / T::from_count(steps_per_period);
    let tol = T::lit(1e-9);
    if new_dt < run.dt() * (T::one() - tol) {
        return Err(Error::Parameter(format!(
            "target step {new_dt} is finer than the source step {}; only downsampling is supported",
            run.dt()
        )));
    }
    let ratio = new_dt / run.dt();
    let last = T::from_count(run.len() - 1);
    let count = (last / ratio + tol).floor().to_usize().unwrap_or(0) + 1;
    if count < 2 {
        return Err(Error::Parameter(format!(
            "run `{}` spans less than one target step",
            run.id()
        )));
    }
    let src = run.values();
    let cols = src.ncols();
    let mut out = Matrix::zeros(count, cols);
    for k in 0..count {
        let mut pos = T::from_count(k) * ratio;
        let nearest = pos.round();
        if (pos - nearest).abs() < tol {
            pos = nearest;
        }
        let i = pos.floor().to_usize().unwrap_or(0).min(run.len() - 1);
        let frac = pos - T::from_count(i);
        for c in 0..cols {
            let a = src[(i, c)];
            out[(k, c)] = if frac == T::zero() || i + 1 >= run.len() {
                a
            } else {
                a + frac * (src[(i + 1, c)] - a)
            };
        }
    }
    Ok(TimeSeriesRun::new(run.id(), new_dt, run.channels().to_vec(), out)?.with_start(run.start()))
}

/// Extracts `count` consecutive sequences of `length` seconds from the start
/// of the run; sequence ids are `<run>#<k>`.
pub fn extract_sequences<T: Real>(run: &TimeSeriesRun<T>, length: T, count: usize) -> Result<Vec<TimeSeriesRun<T>>> {
    let samples = (length / run.dt()).round().to_usize().unwrap_or(0);
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "sequence length {length} s is shorter than two samples"
        )));
    }
    if samples * count > run.len() {
        return Err(Error::Window(format!(
            "run `{}` has {} samples, {count} sequences of {samples} need {}",
            run.id(),
            run.len(),
            samples * count
        )));
    }
    (0..count)
        .map(|k| run.segment(k * samples, samples, format!("{}#{k}", run.id())))
        .collect()
}

/// Per-channel shift and scale for Z-score standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<T> {
    pub channels: Vec<String>,
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> Normalization<T> {
    /// Zero shift, unit scale.
    pub fn identity(channels: Vec<String>) -> Self {
        let n = channels.len();
        Self {
            channels,
            mean: vec![T::zero(); n],
            std: vec![T::one(); n],
        }
    }

    pub fn index(&self, channel: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == channel)
            .ok_or_else(|| Error::Schema(format!("normalization has no channel `{channel}`")))
    }

    #[inline]
    pub fn forward(&self, k: usize, x: T) -> T {
        (x - self.mean[k]) / self.std[k]
    }

    #[inline]
    pub fn inverse(&self, k: usize, x: T) -> T {
        x * self.std[k] + self.mean[k]
    }

    /// Normalizes the columns of `values`, whose column `j` is the channel at
    /// position `offset + j` of this normalization.
    pub fn forward_matrix(&self, values: &Matrix<T>, offset: usize) -> Matrix<T> {
        Matrix::from_fn(values.nrows(), values.ncols(), |i, j| {
            self.forward(offset + j, values[(i, j)])
        })
    }

    pub fn inverse_matrix(&self, values: &Matrix<T>, offset: usize) -> Matrix<T> {
        Matrix::from_fn(values.nrows(), values.ncols(), |i, j| {
            self.inverse(offset + j, values[(i, j)])
        })
    }
}

/// Fits mean and unbiased standard deviation per named channel.
pub fn zscore_fit<T: Real>(run: &TimeSeriesRun<T>, channels: &[String]) -> Result<Normalization<T>> {
    let mut mean = Vec::with_capacity(channels.len());
    let mut std = Vec::with_capacity(channels.len());
    for c in channels {
        let col = run.channel(c)?;
        let s = stats::std_dev(&col);
        if !(s > T::zero()) {
            return Err(Error::Degenerate(format!(
                "channel `{c}` has zero variance in run `{}`",
                run.id()
            )));
        }
        mean.push(stats::mean(&col));
        std.push(s);
    }
    Ok(Normalization {
        channels: channels.to_vec(),
        mean,
        std,
    })
}

fn map_channels<T: Real>(
    run: &TimeSeriesRun<T>,
    norm: &Normalization<T>,
    f: impl Fn(&Normalization<T>, usize, T) -> T,
) -> Result<TimeSeriesRun<T>> {
    let mut values = run.values().clone();
    for (k, c) in norm.channels.iter().enumerate() {
        let col = run.channel_index(c)?;
        for i in 0..values.nrows() {
            values[(i, col)] = f(norm, k, values[(i, col)]);
        }
    }
    Ok(TimeSeriesRun { values, ..run.clone() })
}

/// `(value − mean) / std` on the normalized channels; other channels pass through.
pub fn zscore_apply<T: Real>(run: &TimeSeriesRun<T>, norm: &Normalization<T>) -> Result<TimeSeriesRun<T>> {
    map_channels(run, norm, |n, k, x| n.forward(k, x))
}

pub fn zscore_invert<T: Real>(run: &TimeSeriesRun<T>, norm: &Normalization<T>) -> Result<TimeSeriesRun<T>> {
    map_channels(run, norm, |n, k, x| n.inverse(k, x))
}

/// Assignment of run ids to roles, plus the evaluation-sequence extraction
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest<T> {
    pub training: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    /// Length of each extracted validation/test sequence, in seconds.
    pub sequence_length: T,
    pub sequences_per_run: usize,
}

impl<T: Real> SplitManifest<T> {
    /// Checks that the roles are disjoint and every id is among `loaded`.
    pub fn validate<'a>(&self, loaded: impl IntoIterator<Item = &'a str>) -> Result<()> {
        if self.sequences_per_run == 0 {
            return Err(Error::Parameter("sequences_per_run must be at least 1".into()));
        }
        if !(self.sequence_length > T::zero()) {
            return Err(Error::Parameter("sequence_length must be positive".into()));
        }
        let known: HashSet<&str> = loaded.into_iter().collect();
        let mut seen = HashSet::new();
        for id in self.training.iter().chain(&self.validation).chain(&self.test) {
            if !seen.insert(id.as_str()) {
                return Err(Error::Schema(format!("run `{id}` assigned to more than one role")));
            }
            if !known.contains(id.as_str()) {
                return Err(Error::Schema(format!("run `{id}` is not loaded")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn schema(states: &[&str], inputs: &[&str]) -> ChannelSchema {
        ChannelSchema::new(
            states.iter().map(|s| s.to_string()).collect(),
            inputs.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn single(values: Vec<f64>, dt: f64) -> TimeSeriesRun<f64> {
        let n = values.len();
        TimeSeriesRun::new("r", dt, vec!["z".into()], Matrix::from_vec(n, 1, values)).unwrap()
    }

    #[test]
    fn reads_three_row_csv() {
        let text = "time,z,u\n0,1.0,5\n0.1,2.0,6\n0.2,3.0,7\n";
        let run: TimeSeriesRun<f64> = read_run(text.as_bytes(), "a", &schema(&["z"], &["u"])).unwrap();
        assert!((run.dt() - 0.1).abs() < 1e-15);
        assert_eq!(run.len(), 3);
        assert_eq!(run.channel("u").unwrap(), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn rejects_non_uniform_time() {
        let text = "time,z,u\n0,1,1\n0.1,2,1\n0.25,3,1\n";
        let err = read_run::<f64, _>(text.as_bytes(), "a", &schema(&["z"], &["u"])).unwrap_err();
        assert!(matches!(err, Error::NonUniformSampling { .. }), "{err}");
    }

    #[test]
    fn rejects_nan_with_row_and_channel() {
        let text = "time,z,u\n0,1,1\n0.1,NaN,1\n0.2,3,1\n";
        let err = read_run::<f64, _>(text.as_bytes(), "a", &schema(&["z"], &["u"])).unwrap_err();
        match err {
            Error::Data { row, channel } => {
                assert_eq!(row, 2);
                assert_eq!(channel, "z");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_missing_column_and_backwards_time() {
        let text = "time,z\n0,1\n0.1,2\n";
        let err = read_run::<f64, _>(text.as_bytes(), "a", &schema(&["z"], &["u"])).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
        let text = "time,z,u\n0,1,1\n0.1,2,1\n0.05,3,1\n";
        let err = read_run::<f64, _>(text.as_bytes(), "a", &schema(&["z"], &["u"])).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn crossings_of_periodic_signals() {
        // The phase-zero sine starts on its own mean, so its first upward
        // crossing precedes the first sample.
        let t: Vec<f64> = (0..100).map(|i| 3.0 * i as f64 / 99.0).collect();
        let sine: Vec<f64> = t.iter().map(|t| (2.0 * std::f64::consts::PI * t).sin()).collect();
        assert_eq!(zero_up_crossings(&sine), 2);
        let cosine: Vec<f64> = t.iter().map(|t| -(2.0 * std::f64::consts::PI * t).cos()).collect();
        assert_eq!(zero_up_crossings(&cosine), 3);
        assert_eq!(zero_up_crossings(&[2.5; 40]), 0);
    }

    #[test]
    fn crossings_match_literal_loop_on_noise() {
        let mut rng = stats::rng_from_seed(11);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random::<f64>() - 0.3).collect();
        let mu = xs.iter().sum::<f64>() / xs.len() as f64;
        let mut count = 0;
        for i in 0..xs.len() - 1 {
            if xs[i] < mu && xs[i + 1] >= mu {
                count += 1;
            }
        }
        assert_eq!(zero_up_crossings(&xs), count);
        assert!(count > 100);
    }

    #[test]
    fn encounter_period_of_pure_tone() {
        let period = 0.62;
        let dt = period / 50.0;
        let n = 50 * 20;
        let tone: Vec<f64> = (0..n)
            .map(|i| -(2.0 * std::f64::consts::PI * i as f64 * dt / period).cos())
            .collect();
        let run = single(tone, dt);
        let t_hat = mean_encounter_period(&[run.clone(), run], "z").unwrap();
        assert!((t_hat - period).abs() <= dt, "{t_hat}");
    }

    #[test]
    fn encounter_period_rejects_flat_run() {
        let run = single(vec![1.0; 10], 0.1);
        assert!(matches!(mean_encounter_period(&[run], "z"), Err(Error::Degenerate(_))));
    }

    #[test]
    fn resample_reduces_fourfold_and_interpolates() {
        let t_hat = 0.64;
        let dt = t_hat / 256.0;
        let n = 1001;
        let f = |t: f64| 0.3 * t + (5.0 * t).sin();
        let run = single((0..n).map(|i| f(i as f64 * dt)).collect(), dt);
        let out = resample(&run, 64, t_hat).unwrap();
        assert!((out.dt() - t_hat / 64.0).abs() < 1e-15);
        // Span is 1000 source steps, 250 target steps.
        assert_eq!(out.len(), 251);
        for k in 0..out.len() {
            // Every fourth source sample sits on the target grid.
            assert!((out.values()[(k, 0)] - run.values()[(4 * k, 0)]).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_identity_grid_and_upsampling_error() {
        let t_hat = 0.64;
        let run = single((0..50).map(|i| (i as f64).sqrt()).collect(), t_hat / 64.0);
        let same = resample(&run, 64, t_hat).unwrap();
        assert_eq!(same.values(), run.values());
        assert!(matches!(resample(&run, 128, t_hat), Err(Error::Parameter(_))));
        assert!(matches!(resample(&run, 1, t_hat), Err(Error::Parameter(_))));
    }

    #[test]
    fn zscore_hand_values_and_degenerate() {
        let run = single(vec![1.0, 2.0, 3.0], 0.1);
        let norm = zscore_fit(&run, &["z".to_string()]).unwrap();
        assert_eq!(norm.mean, vec![2.0]);
        assert_eq!(norm.std, vec![1.0]);
        let applied = zscore_apply(&run, &norm).unwrap();
        assert_eq!(applied.channel("z").unwrap(), vec![-1.0, 0.0, 1.0]);
        let flat = single(vec![4.0; 5], 0.1);
        assert!(matches!(
            zscore_fit(&flat, &["z".to_string()]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn extract_consecutive_sequences() {
        let run = single((0..100).map(|i| i as f64).collect(), 0.5);
        let seqs = extract_sequences(&run, 10.0, 3).unwrap();
        assert_eq!(seqs.len(), 3);
        assert_eq!(seqs[1].len(), 20);
        assert_eq!(seqs[1].values()[(0, 0)], 20.0);
        assert_eq!(seqs[2].id(), "r#2");
        assert!(extract_sequences(&run, 10.0, 6).is_err());
    }

    #[test]
    fn manifest_roles_must_be_disjoint() {
        let m = SplitManifest {
            training: vec!["a".into()],
            validation: vec!["b".into()],
            test: vec!["a".into()],
            sequence_length: 1.0,
            sequences_per_run: 1,
        };
        assert!(m.validate(["a", "b"]).is_err());
        let ok = SplitManifest {
            test: vec!["c".into()],
            ..m
        };
        assert!(ok.validate(["a", "b", "c"]).is_ok());
        assert!(ok.validate(["a", "b"]).is_err());
    }
}
