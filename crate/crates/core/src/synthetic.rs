//! Ground-truth generators: forced linear systems, a forced Duffing
//! oscillator and an irregular wave elevation signal.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stats::rng_from_seed;
use crate::timeseries::TimeSeriesRun;

/// `x_{j+1} = A x_j + B u_j`, observing the states listed in `observed`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub observed: Vec<usize>,
}

impl<T: Real> LtiSystem<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, observed: Vec<usize>) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || b.nrows() != d {
            return Err(Error::Shape(format!("A is {:?} and B is {:?}", a.shape(), b.shape())));
        }
        if observed.is_empty() || observed.iter().any(|&i| i >= d) {
            return Err(Error::Parameter(format!(
                "observed states {observed:?} invalid for {d} states"
            )));
        }
        let mut seen = observed.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != observed.len() {
            return Err(Error::Parameter("observed states repeat".into()));
        }
        let rho = spectral_radius(&a);
        if !(rho < T::one()) {
            return Err(Error::Generator(format!("spectral radius {rho} is not below one")));
        }
        Ok(Self { a, b, observed })
    }

    /// Fully observed system.
    pub fn full(a: Matrix<T>, b: Matrix<T>) -> Result<Self> {
        let d = a.nrows();
        Self::new(a, b, (0..d).collect())
    }

    pub fn state_count(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_count(&self) -> usize {
        self.b.ncols()
    }

    /// Names of the emitted channels: observed states `x1, x2, …` then inputs `u1, …`.
    pub fn channel_names(&self) -> (Vec<String>, Vec<String>) {
        (
            self.observed.iter().map(|i| format!("x{}", i + 1)).collect(),
            (0..self.input_count()).map(|k| format!("u{}", k + 1)).collect(),
        )
    }
}

/// Spectral radius via Gelfand's formula `lim ‖Aᵏ‖^{1/k}`, using repeated
/// squaring with renormalization.
pub fn spectral_radius<T: Real>(a: &Matrix<T>) -> T {
    let norm = a.frobenius_norm();
    if norm == T::zero() {
        return T::zero();
    }
    let mut b = a.map(|v| v / norm);
    let mut log_scale = norm.ln();
    let mut power = T::one();
    for _ in 0..40 {
        let sq = b.matmul(&b);
        let n = sq.frobenius_norm();
        if n == T::zero() || !n.is_finite() {
            return if n == T::zero() { T::zero() } else { T::infinity() };
        }
        log_scale = T::lit(2.0) * log_scale + n.ln();
        power *= T::lit(2.0);
        b = sq.map(|v| v / n);
    }
    (log_scale / power).exp()
}

/// Simulates `len` samples from `x_1 = 0` under `forcing` (`≥ len × q`) and
/// adds Gaussian noise of standard deviation `noise_std` to the observed states.
pub fn gen_lti_run<T: Real>(
    sys: &LtiSystem<T>,
    forcing: &Matrix<T>,
    len: usize,
    dt: T,
    noise_std: T,
    seed: u64,
) -> Result<TimeSeriesRun<T>> {
    let q = sys.input_count();
    if forcing.ncols() != q || forcing.nrows() < len {
        return Err(Error::Input(format!(
            "forcing is {:?}, need at least {len} rows of {q} channels",
            forcing.shape()
        )));
    }
    if !(noise_std >= T::zero()) {
        return Err(Error::Parameter(format!(
            "noise level must be nonnegative, got {noise_std}"
        )));
    }
    let rho = spectral_radius(&sys.a);
    if !(rho < T::one()) {
        return Err(Error::Generator(format!("spectral radius {rho} is not below one")));
    }
    let noise = Normal::new(0.0, noise_std.as_f64()).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let n = sys.observed.len();
    let mut x = vec![T::zero(); sys.state_count()];
    let mut values = Matrix::zeros(len, n + q);
    for j in 0..len {
        let row = values.row_mut(j);
        for (slot, &i) in sys.observed.iter().enumerate() {
            let e = if noise_std > T::zero() {
                T::lit(noise.sample(&mut rng))
            } else {
                T::zero()
            };
            row[slot] = x[i] + e;
        }
        let u = forcing.row(j);
        row[n..].copy_from_slice(u);
        let mut next = sys.a.matvec(&x);
        sys.b.matvec_add_into(u, &mut next);
        x = next;
    }
    let (mut names, inputs) = sys.channel_names();
    names.extend(inputs);
    TimeSeriesRun::new(format!("lti_{seed}"), dt, names, values)
}

/// `ẍ + c ẋ + k x + ε x³ = u(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuffingSpec<T> {
    pub stiffness: T,
    pub cubic: T,
    pub damping: T,
    pub x0: T,
    pub v0: T,
    /// Measurement noise on `x` and `v`.
    pub noise_std: T,
}

impl<T: Real> Default for DuffingSpec<T> {
    fn default() -> Self {
        Self {
            stiffness: T::lit(14.0),
            cubic: T::lit(1000.0),
            damping: T::lit(0.75),
            x0: T::zero(),
            v0: T::zero(),
            noise_std: T::zero(),
        }
    }
}

impl<T: Real> DuffingSpec<T> {
    fn accel(&self, x: T, v: T, u: T) -> T {
        u - self.damping * v - self.stiffness * x - self.cubic * x * x * x
    }

    /// `v²/2 + k x²/2 + ε x⁴/4`.
    pub fn energy(&self, x: T, v: T) -> T {
        let half = T::lit(0.5);
        half * v * v + half * self.stiffness * x * x + T::lit(0.25) * self.cubic * x * x * x * x
    }
}

/// Integrates the oscillator with classical RK4 and emits channels `x`, `v`, `u`.
pub fn gen_duffing_run<T: Real>(
    spec: &DuffingSpec<T>,
    forcing: impl Fn(T) -> T,
    len: usize,
    dt: T,
    seed: u64,
) -> Result<TimeSeriesRun<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    if !(spec.noise_std >= T::zero()) {
        return Err(Error::Parameter("noise level must be nonnegative".into()));
    }
    let noise = Normal::new(0.0, spec.noise_std.as_f64()).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let limit = T::lit(1e6);
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let two = T::lit(2.0);
    let (mut x, mut v) = (spec.x0, spec.v0);
    let mut values = Matrix::zeros(len, 3);
    for j in 0..len {
        let t = dt * T::from_count(j);
        let u0 = forcing(t);
        let row = values.row_mut(j);
        let mut jitter = || {
            if spec.noise_std > T::zero() {
                T::lit(noise.sample(&mut rng))
            } else {
                T::zero()
            }
        };
        row[0] = x + jitter();
        row[1] = v + jitter();
        row[2] = u0;

        let um = forcing(t + half * dt);
        let u1 = forcing(t + dt);
        let k1x = v;
        let k1v = spec.accel(x, v, u0);
        let k2x = v + half * dt * k1v;
        let k2v = spec.accel(x + half * dt * k1x, k2x, um);
        let k3x = v + half * dt * k2v;
        let k3v = spec.accel(x + half * dt * k2x, k3x, um);
        let k4x = v + dt * k3v;
        let k4v = spec.accel(x + dt * k3x, k4x, u1);
        x += dt * sixth * (k1x + two * k2x + two * k3x + k4x);
        v += dt * sixth * (k1v + two * k2v + two * k3v + k4v);
        if !(x.abs() <= limit) || !v.is_finite() {
            return Err(Error::Generator(format!("integration diverged at t = {t}")));
        }
    }
    TimeSeriesRun::new(
        format!("duffing_{seed}"),
        dt,
        vec!["x".into(), "v".into(), "u".into()],
        values,
    )
}

/// Irregular long-crested wave from a Bretschneider spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveSpec<T> {
    /// Significant height.
    pub hs: T,
    /// Modal period.
    pub tm: T,
    pub components: usize,
    pub seed: u64,
}

impl<T: Real> Default for WaveSpec<T> {
    fn default() -> Self {
        Self {
            hs: T::lit(0.0975),
            tm: T::lit(9.7 / 33.33f64.sqrt()),
            components: 256,
            seed: 0,
        }
    }
}

impl<T: Real> WaveSpec<T> {
    pub fn modal_frequency(&self) -> T {
        T::TAU() / self.tm
    }

    /// `S(ω) = (5/16) Hs² ω_m⁴ / ω⁵ · exp(−5 ω_m⁴ / (4 ω⁴))`.
    pub fn spectrum(&self, omega: T) -> T {
        let wm4 = self.modal_frequency().powi(4);
        let w4 = omega.powi(4);
        T::lit(5.0 / 16.0) * self.hs * self.hs * wm4 / (w4 * omega) * (-T::lit(1.25) * wm4 / w4).exp()
    }
}

/// Sum of cosines `Σ a_k cos(ω_k t + θ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSignal<T> {
    pub omega: Vec<T>,
    pub amplitude: Vec<T>,
    pub phase: Vec<T>,
}

impl<T: Real> WaveSignal<T> {
    /// Components at the midpoints of `[0.5 ω_m, 5 ω_m]` with amplitudes
    /// `sqrt(2 S(ω) Δω)` and uniform random phases. A single component is a
    /// sinusoid at `ω_m` of amplitude `Hs / 2`.
    pub fn new(spec: &WaveSpec<T>) -> Result<Self> {
        if !(spec.hs > T::zero()) || !(spec.tm > T::zero()) || spec.components == 0 {
            return Err(Error::Parameter(format!(
                "wave needs positive height, period and component count, got {}, {}, {}",
                spec.hs, spec.tm, spec.components
            )));
        }
        let mut rng = rng_from_seed(spec.seed);
        let wm = spec.modal_frequency();
        let k = spec.components;
        let (omega, amplitude): (Vec<T>, Vec<T>) = if k == 1 {
            (vec![wm], vec![spec.hs * T::lit(0.5)])
        } else {
            let lo = T::lit(0.5) * wm;
            let dw = T::lit(4.5) * wm / T::from_count(k);
            (0..k)
                .map(|i| {
                    let w = lo + dw * (T::from_count(i) + T::lit(0.5));
                    (w, (T::lit(2.0) * spec.spectrum(w) * dw).sqrt())
                })
                .unzip()
        };
        let phase = (0..k).map(|_| T::TAU() * T::lit(rng.random::<f64>())).collect();
        Ok(Self {
            omega,
            amplitude,
            phase,
        })
    }

    pub fn eval(&self, t: T) -> T {
        self.omega
            .iter()
            .zip(&self.amplitude)
            .zip(&self.phase)
            .map(|((&w, &a), &p)| a * (w * t + p).cos())
            .sum()
    }

    pub fn sample(&self, len: usize, dt: T) -> Vec<T> {
        (0..len).map(|j| self.eval(dt * T::from_count(j))).collect()
    }
}

/// `len` samples of a wave built from `spec`.
pub fn gen_wave_signal<T: Real>(spec: &WaveSpec<T>, len: usize, dt: T) -> Result<Vec<T>> {
    Ok(WaveSignal::new(spec)?.sample(len, dt))
}

/// Mean of the highest third of zero-up-crossing wave heights.
pub fn significant_height<T: Real>(signal: &[T]) -> T {
    let mut heights = Vec::new();
    let mut start = None;
    for j in 1..signal.len() {
        if signal[j - 1] < T::zero() && signal[j] >= T::zero() {
            if let Some(s) = start {
                let w = &signal[s..j];
                let hi = w.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
                let lo = w.iter().fold(T::infinity(), |m, &x| m.min(x));
                heights.push(hi - lo);
            }
            start = Some(j);
        }
    }
    if heights.is_empty() {
        return T::zero();
    }
    heights.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let top = (heights.len() / 3).max(1);
    heights[..top].iter().copied().sum::<T>() / T::from_count(top)
}
