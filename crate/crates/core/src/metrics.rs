//! Forecast accuracy (NRMSE) and divergences between gridded densities.

use crate::bootstrap::kde_bandwidth;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::stats;

/// Grid size used when comparing densities from two sources.
pub const SHARED_GRID_POINTS: usize = 512;
/// Padding, in bandwidths, on each side of the pooled sample range.
pub const SHARED_GRID_PAD: f64 = 3.0;

/// Where the per-variable normalizing standard deviation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaSource {
    /// Standard deviation of the measured values over the evaluation window.
    #[default]
    ReferenceWindow,
    /// Standard deviation of the channel on the training signal.
    TrainingChannel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrmseConfig<T> {
    /// Multiplier on the standard deviation in the normalizer.
    pub k: T,
    pub sigma_source: SigmaSource,
}

impl<T: Real> Default for NrmseConfig<T> {
    fn default() -> Self {
        Self {
            k: T::one(),
            sigma_source: SigmaSource::ReferenceWindow,
        }
    }
}

/// `(1/N) Σᵢ RMSEᵢ / (k σᵢ)` over the `N` columns of `pred` and `reference`.
///
/// `training_std` supplies σᵢ when the config asks for the training channel.
pub fn nrmse<T: Real>(
    pred: &Matrix<T>,
    reference: &Matrix<T>,
    cfg: &NrmseConfig<T>,
    training_std: Option<&[T]>,
) -> Result<T> {
    if pred.shape() != reference.shape() {
        return Err(Error::Shape(format!(
            "prediction {:?} and reference {:?} differ",
            pred.shape(),
            reference.shape()
        )));
    }
    if !(cfg.k > T::zero()) {
        return Err(Error::Parameter(format!("k must be positive, got {}", cfg.k)));
    }
    let (rows, cols) = pred.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Shape("empty evaluation window".into()));
    }
    let mut total = T::zero();
    for i in 0..cols {
        let sigma = match cfg.sigma_source {
            SigmaSource::ReferenceWindow => stats::std_dev(&reference.column(i)),
            SigmaSource::TrainingChannel => {
                let sd = training_std
                    .ok_or_else(|| Error::Parameter("training standard deviations were not supplied".into()))?;
                *sd.get(i)
                    .ok_or_else(|| Error::Shape(format!("no training standard deviation for variable {i}")))?
            }
        };
        if !(sigma > T::zero()) {
            return Err(Error::Degenerate(format!(
                "reference standard deviation of variable {i} is zero"
            )));
        }
        let mut ss = T::zero();
        for j in 0..rows {
            let d = pred[(j, i)] - reference[(j, i)];
            ss += d * d;
        }
        total += (ss / T::from_count(rows)).sqrt() / (cfg.k * sigma);
    }
    Ok(total / T::from_count(cols))
}

/// A density sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedPdf<T> {
    pub grid: Vec<T>,
    pub density: Vec<T>,
}

impl<T: Real> GriddedPdf<T> {
    pub fn new(grid: Vec<T>, density: Vec<T>) -> Result<Self> {
        check_grid(&grid)?;
        if density.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} density values for {} grid points",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|d| !(*d >= T::zero()) || !d.is_finite()) {
            return Err(Error::Grid("densities must be finite and nonnegative".into()));
        }
        Ok(Self { grid, density })
    }

    /// Trapezoidal integral of the density.
    pub fn integral(&self) -> T {
        trapezoid_weights(&self.grid)
            .iter()
            .zip(&self.density)
            .map(|(&w, &d)| w * d)
            .sum()
    }

    /// Probability mass per grid point (trapezoid weight times density),
    /// renormalized to sum to one.
    pub fn masses(&self) -> Vec<T> {
        let raw: Vec<T> = trapezoid_weights(&self.grid)
            .iter()
            .zip(&self.density)
            .map(|(&w, &d)| w * d)
            .collect();
        let total: T = raw.iter().copied().sum();
        if total > T::zero() {
            raw.into_iter().map(|m| m / total).collect()
        } else {
            raw
        }
    }
}

pub(crate) fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Grid("a grid needs at least two points".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Trapezoid quadrature weights for a strictly increasing grid.
pub fn trapezoid_weights<T: Real>(grid: &[T]) -> Vec<T> {
    let n = grid.len();
    let half = T::lit(0.5);
    (0..n)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { T::zero() };
            let right = if i + 1 < n { grid[i + 1] - grid[i] } else { T::zero() };
            half * (left + right)
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn uniform_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::Grid(format!("cannot build {n} points on [{lo}, {hi}]")));
    }
    let step = (hi - lo) / T::from_count(n - 1);
    Ok((0..n).map(|i| lo + step * T::from_count(i)).collect())
}

/// Evaluation grid for comparing two samples: `points` evenly spaced values
/// covering both ranges, padded by `pad` times the larger KDE bandwidth.
pub fn shared_grid<T: Real>(a: &[T], b: &[T], points: usize, pad: T) -> Result<Vec<T>> {
    let h = kde_bandwidth(a)?.max(kde_bandwidth(b)?);
    let lo = a.iter().chain(b).fold(T::infinity(), |m, &x| m.min(x));
    let hi = a.iter().chain(b).fold(T::neg_infinity(), |m, &x| m.max(x));
    uniform_grid(lo - pad * h, hi + pad * h, points)
}

fn same_grid<T: Real>(a: &GriddedPdf<T>, b: &GriddedPdf<T>) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::Grid("densities are defined on different grids".into()));
    }
    Ok(())
}

fn kl_masses<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    let mut d = T::zero();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > T::zero() {
            if !(qi > T::zero()) {
                return Err(Error::DivergenceOverflow);
            }
            d += pi * (pi / qi).ln();
        }
    }
    Ok(d.max(T::zero()))
}

/// `Σ K ln(K/H)` over grid masses. A cell where `K` has mass and `H` has none
/// yields [`Error::DivergenceOverflow`].
pub fn kl_divergence<T: Real>(k: &GriddedPdf<T>, h: &GriddedPdf<T>) -> Result<T> {
    same_grid(k, h)?;
    kl_masses(&k.masses(), &h.masses())
}

/// Jensen–Shannon divergence averaged over paired variables.
pub fn jsd<T: Real>(q: &[GriddedPdf<T>], r: &[GriddedPdf<T>]) -> Result<T> {
    if q.len() != r.len() || q.is_empty() {
        return Err(Error::Grid(format!(
            "{} and {} densities cannot be paired",
            q.len(),
            r.len()
        )));
    }
    let half = T::lit(0.5);
    let mut total = T::zero();
    for (qi, ri) in q.iter().zip(r) {
        same_grid(qi, ri)?;
        let pq = qi.masses();
        let pr = ri.masses();
        let mix: Vec<T> = pq.iter().zip(&pr).map(|(&a, &b)| half * (a + b)).collect();
        total += half * kl_masses(&pq, &mix)? + half * kl_masses(&pr, &mix)?;
    }
    let value = total / T::from_count(q.len());
    let ln2 = T::LN_2();
    let slack = T::lit(1e-12);
    assert!(
        value >= -slack && value <= ln2 + slack,
        "Jensen-Shannon divergence {value} outside [0, ln 2]"
    );
    Ok(value.max(T::zero()).min(ln2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::rng_from_seed;
    use rand::Rng;

    fn gaussian(grid: &[f64], mu: f64, sigma: f64) -> GriddedPdf<f64> {
        let d = grid
            .iter()
            .map(|&x| (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
            .collect();
        GriddedPdf::new(grid.to_vec(), d).unwrap()
    }

    #[test]
    fn nrmse_zero_and_constant_offset() {
        let r = Matrix::from_fn(50, 1, |i, _| (i as f64 * 0.3).sin());
        let cfg = NrmseConfig::default();
        assert_eq!(nrmse(&r, &r, &cfg, None).unwrap(), 0.0);
        let d = 0.25;
        let p = r.map(|x| x + d);
        let sigma = stats::std_dev(&r.column(0));
        assert!((nrmse(&p, &r, &cfg, None).unwrap() - d / sigma).abs() < 1e-12);
    }

    #[test]
    fn nrmse_double_loop_oracle_and_k_scaling() {
        let mut rng = rng_from_seed(3);
        let r = Matrix::from_fn(40, 3, |_, _| rng.random::<f64>());
        let p = Matrix::from_fn(40, 3, |_, _| rng.random::<f64>());
        let mut want = 0.0;
        for i in 0..3 {
            let col: Vec<f64> = (0..40).map(|j| r[(j, i)]).collect();
            let mu = col.iter().sum::<f64>() / 40.0;
            let sd = (col.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / 39.0).sqrt();
            let mut ss = 0.0;
            for j in 0..40 {
                ss += (p[(j, i)] - r[(j, i)]).powi(2);
            }
            want += (ss / 40.0).sqrt() / sd;
        }
        want /= 3.0;
        let one = nrmse(&p, &r, &NrmseConfig::default(), None).unwrap();
        assert!((one - want).abs() < 1e-12);
        let two = nrmse(
            &p,
            &r,
            &NrmseConfig {
                k: 2.0,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert!((two - 0.5 * one).abs() < 1e-15);
    }

    #[test]
    fn nrmse_degenerate_reference_and_training_sigma() {
        let r = Matrix::from_vec(3, 1, vec![1.0, 1.0, 1.0]);
        let p = Matrix::from_vec(3, 1, vec![1.0, 2.0, 1.0]);
        assert!(matches!(
            nrmse(&p, &r, &NrmseConfig::default(), None),
            Err(Error::Degenerate(_))
        ));
        let cfg = NrmseConfig {
            k: 1.0,
            sigma_source: SigmaSource::TrainingChannel,
        };
        let v = nrmse(&p, &r, &cfg, Some(&[2.0])).unwrap();
        assert!((v - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(nrmse(&p, &r, &cfg, None).is_err());
    }

    #[test]
    fn kl_identical_overflow_and_gaussian_pair() {
        let grid = uniform_grid(-12.0, 13.0, 2001).unwrap();
        let a = gaussian(&grid, 0.0, 1.0);
        let b = gaussian(&grid, 1.0, 1.0);
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        let kl = kl_divergence(&a, &b).unwrap();
        assert!((kl - 0.5).abs() / 0.5 < 0.02, "{kl}");

        let g = uniform_grid(0.0, 1.0, 11).unwrap();
        let left = GriddedPdf::new(g.clone(), (0..11).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect()).unwrap();
        let right = GriddedPdf::new(g, (0..11).map(|i| if i > 5 { 1.0 } else { 0.0 }).collect()).unwrap();
        assert!(matches!(kl_divergence(&left, &right), Err(Error::DivergenceOverflow)));
    }

    #[test]
    fn jsd_identical_disjoint_and_grid_mismatch() {
        let g = uniform_grid(0.0, 10.0, 1001).unwrap();
        let a = GriddedPdf::new(g.clone(), g.iter().map(|&x| if x < 4.0 { 0.25 } else { 0.0 }).collect()).unwrap();
        let b = GriddedPdf::new(g.clone(), g.iter().map(|&x| if x > 6.0 { 0.25 } else { 0.0 }).collect()).unwrap();
        assert_eq!(jsd(std::slice::from_ref(&a), std::slice::from_ref(&a)).unwrap(), 0.0);
        let d = jsd(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-3, "{d}");
        assert_eq!(
            jsd(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap(),
            jsd(std::slice::from_ref(&b), std::slice::from_ref(&a)).unwrap()
        );

        let other = GriddedPdf::new(uniform_grid(0.0, 9.0, 1001).unwrap(), vec![0.1; 1001]).unwrap();
        assert!(matches!(jsd(&[a], &[other]), Err(Error::Grid(_))));
    }

    #[test]
    fn gridded_pdf_validation() {
        assert!(GriddedPdf::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GriddedPdf::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(GriddedPdf::new(vec![0.0, 1.0], vec![-1.0, 1.0]).is_err());
        let p = GriddedPdf::new(vec![0.0f64, 1.0, 2.0], vec![0.5, 0.5, 0.5]).unwrap();
        assert!((p.integral() - 1.0).abs() < 1e-15);
    }
}
