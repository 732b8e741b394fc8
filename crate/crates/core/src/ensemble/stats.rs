use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const BOOTSTRAP_RESAMPLES: usize = 2000;
const BOOTSTRAP_STREAM: u64 = 0xB007;

/// Summary of one scalar functional over a disorder ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (Bessel-corrected) sample variance.
    pub variance: f64,
    pub stderr_mean: f64,
    /// 95% percentile-bootstrap interval for the mean.
    pub mean_ci: (f64, f64),
    /// 95% percentile-bootstrap interval for the variance.
    pub variance_ci: (f64, f64),
    /// SHA-256 of the samples (little-endian f64 bytes, in realization order).
    pub samples_digest: String,
}

impl EnsembleStats {
    pub fn mean_ci_overlaps(&self, other: &EnsembleStats) -> bool {
        intervals_overlap(self.mean_ci, other.mean_ci)
    }

    pub fn variance_ci_overlaps(&self, other: &EnsembleStats) -> bool {
        intervals_overlap(self.variance_ci, other.variance_ci)
    }
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Single-pass mean/variance (Welford), with a Neumaier-compensated sum
/// carried alongside for the mean.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    n: usize,
    mean: f64,
    m2: f64,
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.sum + self.compensation) / self.n as f64
    }

    /// Unbiased variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).max(0.0)
    }
}

impl FromIterator<f64> for Accumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Accumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    percentile(&s, 0.5)
}

pub fn digest(samples: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in samples {
        h.update(x.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Mixes a run seed with a label into an independent bootstrap seed.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean, variance and bootstrap intervals. Deterministic in
/// `(samples, bootstrap_seed)`.
pub fn summarize(samples: &[f64], bootstrap_seed: u64) -> Result<EnsembleStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "statistics need at least 2 samples, got {n}"
        )));
    }
    let acc: Accumulator = samples.iter().copied().collect();
    let mean = acc.mean();
    let variance = acc.variance();

    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
    rng.set_stream(BOOTSTRAP_STREAM);
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut vars = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut b = Accumulator::default();
        for _ in 0..n {
            b.push(samples[rng.gen_range(0..n)]);
        }
        means.push(b.mean());
        vars.push(b.variance());
    }
    means.sort_by(f64::total_cmp);
    vars.sort_by(f64::total_cmp);
    // the percentile interval is widened, if needed, to contain the point
    // estimate
    let ci = |sorted: &[f64], point: f64| {
        (
            percentile(sorted, 0.025).min(point),
            percentile(sorted, 0.975).max(point),
        )
    };
    Ok(EnsembleStats {
        n,
        mean,
        variance,
        stderr_mean: (variance / n as f64).sqrt(),
        mean_ci: ci(&means, mean),
        variance_ci: ci(&vars, variance),
        samples_digest: digest(samples),
    })
}

/// Sample covariance (Bessel-corrected) and a delta-method standard error.
pub fn covariance(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::InsufficientData(
            "covariance needs two equally long series of at least 3 samples".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let products: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let acc: Accumulator = products.iter().copied().collect();
    let cov = acc.mean() * n / (n - 1.0);
    let stderr = (acc.variance() / n).sqrt();
    Ok((cov, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        let s = summarize(&[0.0; 10], 1).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.mean_ci, (0.0, 0.0));
        assert_eq!(s.variance_ci, (0.0, 0.0));
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..5000)
            .map(|i| 1e6 + ((i * 7919) % 1000) as f64 * 1e-3)
            .collect();
        let acc: Accumulator = xs.iter().copied().collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let two_pass = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((acc.variance() - two_pass).abs() <= 1e-12 * m * m);
    }

    #[test]
    fn too_few() {
        assert!(matches!(
            summarize(&[1.0], 0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
