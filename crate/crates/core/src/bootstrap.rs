//! Moving-block bootstrap, Gaussian kernel density estimates and pointwise
//! confidence bands on densities.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{check_grid, trapezoid_weights, GriddedPdf};
use crate::scalar::Real;
use crate::stats::{self, derive_seed, rng_from_seed};

/// Bootstrap replicates used by [`pdf_confidence`] unless told otherwise.
pub const DEFAULT_REPLICATES: usize = 100;
pub const BAND_LOWER: f64 = 0.025;
pub const BAND_UPPER: f64 = 0.975;

/// Block layout for resampling a series of fixed length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbbPlan<T> {
    pub series_length: usize,
    /// Lag-1 autocorrelation the block length was derived from.
    pub phi: T,
    /// `(1 − φ)(1 + φ)`.
    pub a: T,
    pub block_length: usize,
    /// Overlapping blocks available in the source, `𝒯 − l + 1`.
    pub source_block_count: usize,
    /// Blocks drawn per replicate, `⌈𝒯 / l⌉`.
    pub draw_count: usize,
}

impl<T: Real> MbbPlan<T> {
    /// A plan with a given block length. Unlike [`optimal_block_length`] this
    /// accepts any `1 ≤ l ≤ 𝒯`; `l = 𝒯` reproduces the source.
    pub fn fixed(series_length: usize, block_length: usize) -> Result<Self> {
        if block_length == 0 || block_length > series_length {
            return Err(Error::Parameter(format!(
                "block length {block_length} outside [1, {series_length}]"
            )));
        }
        Ok(Self {
            series_length,
            phi: T::nan(),
            a: T::nan(),
            block_length,
            source_block_count: series_length - block_length + 1,
            draw_count: series_length.div_ceil(block_length),
        })
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.series_length {
            return Err(Error::Parameter(format!(
                "plan built for {} samples applied to a series of {len}",
                self.series_length
            )));
        }
        let l = self.block_length;
        if l == 0 || l > len || self.source_block_count != len - l + 1 || self.draw_count * l < len {
            return Err(Error::Parameter(format!("inconsistent block plan {self:?}")));
        }
        Ok(())
    }
}

/// `𝒯 Σ (ξ_{i+1} − μ)(ξ_i − μ) / ((𝒯 − 1) Σ (ξ_i − μ)²)`.
pub fn lag1_autocorrelation<T: Real>(series: &[T]) -> Result<T> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Parameter("autocorrelation needs at least two samples".into()));
    }
    let mu = stats::mean(series);
    let den: T = series.iter().map(|&x| (x - mu) * (x - mu)).sum();
    if !(den > T::zero()) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    let num: T = series.windows(2).map(|w| (w[1] - mu) * (w[0] - mu)).sum();
    Ok(T::from_count(n) * num / (T::from_count(n - 1) * den))
}

/// `round((2φ/a)^{2/3} 𝒯^{1/3})` clamped to `[1, 𝒯/2]`, with `a = (1−φ)(1+φ)`.
pub fn block_length_from_phi<T: Real>(phi: T, series_length: usize) -> usize {
    let cap = (series_length / 2).max(1);
    if !(phi > T::zero()) {
        return 1;
    }
    let a = (T::one() - phi) * (T::one() + phi);
    if !(a > T::zero()) {
        return cap;
    }
    let two_thirds = T::lit(2.0 / 3.0);
    let third = T::lit(1.0 / 3.0);
    let l = ((T::lit(2.0) * phi / a).powf(two_thirds) * T::from_count(series_length).powf(third)).round();
    l.to_usize().unwrap_or(cap).clamp(1, cap)
}

/// Block plan from the series' own autocorrelation.
pub fn optimal_block_length<T: Real>(series: &[T]) -> Result<MbbPlan<T>> {
    let n = series.len();
    if n < 10 {
        return Err(Error::Parameter(format!(
            "block length needs at least 10 samples, got {n}"
        )));
    }
    let phi = lag1_autocorrelation(series)?;
    let l = block_length_from_phi(phi, n);
    Ok(MbbPlan {
        series_length: n,
        phi,
        a: (T::one() - phi) * (T::one() + phi),
        block_length: l,
        source_block_count: n - l + 1,
        draw_count: n.div_ceil(l),
    })
}

/// Concatenates `C'` blocks with uniformly drawn starts and truncates to `𝒯`.
pub fn mbb_resample<T: Real>(series: &[T], plan: &MbbPlan<T>, seed: u64) -> Result<Vec<T>> {
    plan.check(series.len())?;
    let mut rng = rng_from_seed(seed);
    let l = plan.block_length;
    let mut out = Vec::with_capacity(plan.draw_count * l);
    for _ in 0..plan.draw_count {
        let start = rng.random_range(0..plan.source_block_count);
        out.extend_from_slice(&series[start..start + l]);
    }
    out.truncate(series.len());
    Ok(out)
}

/// `1.06 · min(σ, IQR) · 𝒯^{-1/5}`, falling back to `σ` alone when the minimum is zero.
pub fn kde_bandwidth<T: Real>(samples: &[T]) -> Result<T> {
    if samples.len() < 2 {
        return Err(Error::Degenerate("density estimate needs at least two samples".into()));
    }
    let sigma = stats::std_dev(samples);
    if !(sigma > T::zero()) {
        return Err(Error::Degenerate("samples have zero spread".into()));
    }
    let spread = sigma.min(stats::iqr(samples));
    let spread = if spread > T::zero() { spread } else { sigma };
    Ok(T::lit(1.06) * spread * T::from_count(samples.len()).powf(T::lit(-0.2)))
}

/// Gaussian kernel density of `samples` evaluated on `grid`.
pub fn kde_pdf<T: Real>(samples: &[T], grid: &[T]) -> Result<GriddedPdf<T>> {
    check_grid(grid)?;
    let h = kde_bandwidth(samples)?;
    let inv_h = T::one() / h;
    let norm = T::one() / (T::from_count(samples.len()) * h * (T::TAU()).sqrt());
    let half = T::lit(0.5);
    let density = grid
        .iter()
        .map(|&y| {
            let mut acc = T::zero();
            for &x in samples {
                let u = (y - x) * inv_h;
                acc += (-half * u * u).exp();
            }
            acc * norm
        })
        .collect();
    GriddedPdf::new(grid.to_vec(), density)
}

/// Expected density and pointwise 95% band over bootstrap replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfEstimate<T> {
    pub grid: Vec<T>,
    pub expected: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub replicates: usize,
}

impl<T: Real> PdfEstimate<T> {
    pub fn expected_pdf(&self) -> Result<GriddedPdf<T>> {
        GriddedPdf::new(self.grid.clone(), self.expected.clone())
    }

    /// Trapezoidal area between the band limits.
    pub fn band_area(&self) -> T {
        trapezoid_weights(&self.grid)
            .iter()
            .zip(self.upper.iter().zip(&self.lower))
            .map(|(&w, (&u, &l))| w * (u - l))
            .sum()
    }

    /// Columns `grid, expected, lower, upper`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["grid", "expected", "lower", "upper"])
            .map_err(|e| csv_error(path, e))?;
        for i in 0..self.grid.len() {
            w.write_record([
                self.grid[i].to_string(),
                self.expected[i].to_string(),
                self.lower[i].to_string(),
                self.upper[i].to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// KDEs of `replicates` block-bootstrap resamples; replicate `i` uses seed
/// `derive_seed(seed, i)`.
pub fn bootstrap_densities<T: Real>(
    series: &[T],
    plan: &MbbPlan<T>,
    replicates: usize,
    grid: &[T],
    seed: u64,
) -> Result<Vec<GriddedPdf<T>>> {
    if replicates < 2 {
        return Err(Error::Parameter(format!(
            "need at least two replicates, got {replicates}"
        )));
    }
    check_grid(grid)?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let resampled = mbb_resample(series, plan, derive_seed(seed, i as u64))?;
            kde_pdf(&resampled, grid)
        })
        .collect()
}

/// Pointwise mean and `[2.5%, 97.5%]` quantiles of replicate densities. The
/// mean is accumulated as deviations from the first replicate.
pub fn summarize_densities<T: Real>(densities: &[GriddedPdf<T>]) -> Result<PdfEstimate<T>> {
    let first = densities
        .first()
        .ok_or_else(|| Error::Parameter("no replicate densities".into()))?;
    if densities.iter().any(|d| d.grid != first.grid) {
        return Err(Error::Grid("replicates are on different grids".into()));
    }
    let n = first.grid.len();
    let mut expected = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    let mut column = vec![T::zero(); densities.len()];
    for i in 0..n {
        let base = first.density[i];
        for (c, d) in column.iter_mut().zip(densities) {
            *c = d.density[i] - base;
        }
        expected.push(base + stats::mean(&column));
        for c in column.iter_mut() {
            *c += base;
        }
        stats::sort_values(&mut column);
        lower.push(stats::quantile_sorted(&column, T::lit(BAND_LOWER)));
        upper.push(stats::quantile_sorted(&column, T::lit(BAND_UPPER)));
    }
    Ok(PdfEstimate {
        grid: first.grid.clone(),
        expected,
        lower,
        upper,
        replicates: densities.len(),
    })
}

/// Bootstrap density band with the block length chosen from the data.
pub fn pdf_confidence<T: Real>(series: &[T], replicates: usize, grid: &[T], seed: u64) -> Result<PdfEstimate<T>> {
    let plan = optimal_block_length(series)?;
    pdf_confidence_with_plan(series, &plan, replicates, grid, seed)
}

pub fn pdf_confidence_with_plan<T: Real>(
    series: &[T],
    plan: &MbbPlan<T>,
    replicates: usize,
    grid: &[T],
    seed: u64,
) -> Result<PdfEstimate<T>> {
    summarize_densities(&bootstrap_densities(series, plan, replicates, grid, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::uniform_grid;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + e;
                x
            })
            .collect()
    }

    #[test]
    fn block_length_hand_value() {
        let raw = (2.0f64 * 0.5 / 0.75).powf(2.0 / 3.0) * 1000f64.powf(1.0 / 3.0);
        assert!((raw - 12.114).abs() < 1e-3);
        assert_eq!(block_length_from_phi(0.5f64, 1000), 12);
        assert_eq!(block_length_from_phi(-0.2f64, 1000), 1);
        assert_eq!(block_length_from_phi(0.0f64, 1000), 1);
    }

    #[test]
    fn white_noise_gives_unit_blocks() {
        let plan = optimal_block_length(&ar1(0.0, 2000, 5)).unwrap();
        assert_eq!(plan.block_length, 1);
        assert_eq!(plan.draw_count, 2000);
    }

    #[test]
    fn persistent_series_matches_formula() {
        let x = ar1(0.9, 4096, 7);
        let plan = optimal_block_length(&x).unwrap();
        let n = x.len() as f64;
        let mu = x.iter().sum::<f64>() / n;
        let num: f64 = (0..x.len() - 1).map(|i| (x[i + 1] - mu) * (x[i] - mu)).sum();
        let den: f64 = x.iter().map(|v| (v - mu).powi(2)).sum();
        let phi = n * num / ((n - 1.0) * den);
        assert!((plan.phi - phi).abs() < 1e-12);
        let a = (1.0 - phi) * (1.0 + phi);
        let want = ((2.0 * phi / a).powf(2.0 / 3.0) * n.powf(1.0 / 3.0)).round() as usize;
        assert_eq!(plan.block_length, want.clamp(1, 2048));
        assert!(plan.block_length > 1);
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(optimal_block_length(&[2.0f64; 20]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn full_block_reproduces_source() {
        let x = ar1(0.5, 64, 1);
        let plan = MbbPlan::<f64>::fixed(64, 64).unwrap();
        assert_eq!(mbb_resample(&x, &plan, 99).unwrap(), x);
    }

    #[test]
    fn blocks_are_contiguous_source_slices() {
        let x: Vec<f64> = ar1(0.7, 300, 2);
        let plan = MbbPlan::<f64>::fixed(300, 7).unwrap();
        let y = mbb_resample(&x, &plan, 3).unwrap();
        assert_eq!(y.len(), 300);
        for chunk in y.chunks(7) {
            assert!(x.windows(chunk.len()).any(|w| w == chunk));
        }
        assert_eq!(y, mbb_resample(&x, &plan, 3).unwrap());
    }

    #[test]
    fn two_point_kde() {
        let samples = [-1.0f64, 1.0];
        let h = kde_bandwidth(&samples).unwrap();
        assert!((h - 1.06 * 2f64.powf(-0.2)).abs() < 1e-15);
        let pdf = kde_pdf(&samples, &[-0.5, 0.0, 0.5]).unwrap();
        let k = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let want = 2.0 * k(1.0 / h) / (2.0 * h);
        assert!((pdf.density[1] - want).abs() < 1e-15);
    }

    #[test]
    fn kde_converges_to_normal_and_has_unit_mass() {
        let mut rng = rng_from_seed(11);
        let samples: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let grid = uniform_grid(-4.0, 4.0, 161).unwrap();
        let pdf = kde_pdf(&samples, &grid).unwrap();
        let worst = grid
            .iter()
            .zip(&pdf.density)
            .map(|(&y, &d)| (d - (-y * y / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.01, "{worst}");

        let few = ar1(0.3, 200, 4);
        let h = kde_bandwidth(&few).unwrap();
        let lo = few.iter().cloned().fold(f64::INFINITY, f64::min) - 5.0 * h;
        let hi = few.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 5.0 * h;
        let p = kde_pdf(&few, &uniform_grid(lo, hi, 2000).unwrap()).unwrap();
        assert!((p.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kde_fallback_and_degenerate() {
        // More than half the samples equal: IQR is zero but σ is not.
        let mut s = vec![0.0f64; 10];
        s.push(5.0);
        let h = kde_bandwidth(&s).unwrap();
        assert!((h - 1.06 * stats::std_dev(&s) * 11f64.powf(-0.2)).abs() < 1e-15);
        assert!(kde_bandwidth(&[1.0f64, 1.0, 1.0]).is_err());
    }

    #[test]
    fn collapsed_band_for_single_block_plan() {
        let x = ar1(0.5, 100, 8);
        let plan = MbbPlan::<f64>::fixed(100, 100).unwrap();
        let grid = uniform_grid(-6.0, 6.0, 64).unwrap();
        let est = pdf_confidence_with_plan(&x, &plan, 10, &grid, 1).unwrap();
        assert_eq!(est.lower, est.expected);
        assert_eq!(est.upper, est.expected);
    }

    #[test]
    fn band_replays_from_stored_densities() {
        let x = ar1(0.8, 600, 9);
        let grid = uniform_grid(-8.0, 8.0, 128).unwrap();
        let plan = optimal_block_length(&x).unwrap();
        let dens = bootstrap_densities(&x, &plan, 100, &grid, 21).unwrap();
        let est = pdf_confidence(&x, 100, &grid, 21).unwrap();
        for i in 0..grid.len() {
            let mut col: Vec<f64> = dens.iter().map(|d| d.density[i]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = |p: f64| {
                let h = (col.len() - 1) as f64 * p;
                let lo = h.floor() as usize;
                col[lo] + (h - lo as f64) * (col[(lo + 1).min(col.len() - 1)] - col[lo])
            };
            assert!((est.expected[i] - mean).abs() < 1e-12);
            assert!((est.lower[i] - q(0.025)).abs() < 1e-12);
            assert!((est.upper[i] - q(0.975)).abs() < 1e-12);
            assert!(est.lower[i] <= est.expected[i] + 1e-12 && est.expected[i] <= est.upper[i] + 1e-12);
        }
        for d in &dens {
            assert!((d.integral() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn band_narrows_with_longer_series() {
        let grid = uniform_grid(-10.0, 10.0, 256).unwrap();
        let short = pdf_confidence(&ar1(0.6, 1000, 12), 100, &grid, 5).unwrap();
        let long = pdf_confidence(&ar1(0.6, 4000, 12), 100, &grid, 5).unwrap();
        assert!(long.band_area() < short.band_area());
    }
}
