//! Descriptive statistics and seed plumbing shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Seeded generator used everywhere randomness is needed.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives the seed of task `index` from a job seed (SplitMix64 finalizer
/// applied to the pair).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a seed from a textual label, for named streams such as sources.
pub fn derive_seed_str(seed: u64, label: &str) -> u64 {
    // FNV-1a keeps this stable across platforms and releases.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(seed, h)
}

pub fn mean<T: Real>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::nan();
    }
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Unbiased (n − 1) sample standard deviation; zero for fewer than two values.
pub fn std_dev<T: Real>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let mu = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - mu) * (x - mu)).sum();
    (ss / T::from_count(xs.len() - 1)).sqrt()
}

/// Quantile by linear interpolation between order statistics of an already
/// sorted slice (position `p·(n−1)`).
pub fn quantile_sorted<T: Real>(sorted: &[T], p: T) -> T {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    if n == 1 {
        return sorted[0];
    }
    let pos = p.max(T::zero()).min(T::one()) * T::from_count(n - 1);
    let lo = pos.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_idx = (lo_idx + 1).min(n - 1);
    let frac = pos - lo;
    if frac == T::zero() {
        sorted[lo_idx]
    } else {
        sorted[lo_idx] + frac * (sorted[hi_idx] - sorted[lo_idx])
    }
}

pub fn sort_values<T: Real>(xs: &mut [T]) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sorted sample"));
}

/// Quantile of an unsorted sample.
pub fn quantile<T: Real>(xs: &[T], p: T) -> T {
    let mut v = xs.to_vec();
    sort_values(&mut v);
    quantile_sorted(&v, p)
}

/// Third minus first quartile.
pub fn iqr<T: Real>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    sort_values(&mut v);
    quantile_sorted(&v, T::lit(0.75)) - quantile_sorted(&v, T::lit(0.25))
}
