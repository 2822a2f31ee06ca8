//! Empirical-distribution utilities, the two goodness-of-fit statistics the
//! experiment harness relies on, and the deterministic per-path seeding
//! scheme that makes parallel Monte Carlo runs reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sorted sample of real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    /// Build a sample, sorting the values.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("sample must be non-empty".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parameter("sample contains NaN".into()));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(Sample { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted values, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.values.len() as f64).sqrt()
    }
}

/// Kolmogorov–Smirnov distance between the sample and a model CDF:
/// `sup_x |F_n(x) - F(x)|`, evaluated over both one-sided gaps at every
/// sorted sample point.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &Sample, cdf: F) -> f64 {
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = cdf(x);
        let upper = ((i + 1) as f64 / n - f).abs();
        let lower = (i as f64 / n - f).abs();
        d = d.max(upper).max(lower);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov distance `sup_x |F_n(x) - G_m(x)|`,
/// evaluated at every point of the merged sample so ties are handled
/// consistently.
pub fn ks_distance_two_sample(xs: &Sample, ys: &Sample) -> f64 {
    let (x, y) = (xs.values(), ys.values());
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() || j < y.len() {
        let v = match (x.get(i), y.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Pearson chi-square statistic for observed link counts against the model
/// break-position probabilities: `sum_i (c_i - N p_i)^2 / (N p_i)`.
pub fn position_chisq(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() {
        return Err(Error::Parameter(format!(
            "counts ({}) and probs ({}) must have equal length",
            counts.len(),
            probs.len()
        )));
    }
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Parameter("counts must sum to at least 1".into()));
    }
    let nf = n as f64;
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = nf * p;
        if expected <= 0.0 {
            return Err(Error::Parameter(format!("zero expected count for p = {p}")));
        }
        let diff = c as f64 - expected;
        stat += diff * diff / expected;
    }
    Ok(stat)
}

/// Derive the independent random stream of one Monte Carlo path.
///
/// The 256-bit ChaCha key is expanded from `(master_seed, path_index)` with
/// a splitmix-style mix, so a path's stream depends only on that pair: the
/// same pair yields the same draws no matter how paths are scheduled across
/// workers, and distinct pairs yield statistically independent streams.
pub fn seed_stream(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut state = master_seed ^ GOLDEN.wrapping_mul(path_index.wrapping_add(1));
    let mut next = || {
        state = state.wrapping_add(GOLDEN);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&next().to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
