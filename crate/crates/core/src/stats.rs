//! Small statistics helpers for Monte Carlo estimates.

use serde::{Deserialize, Serialize};

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: u64,
}

impl EstimateWithError {
    pub fn new(value: f64, stderr: f64, n_samples: u64) -> Self {
        debug_assert!(stderr >= 0.0 && n_samples >= 1);
        Self {
            value,
            stderr,
            n_samples,
        }
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.value * k, self.stderr * k.abs(), self.n_samples)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and standard error of independent samples.
pub fn iid_estimate(xs: &[f64]) -> EstimateWithError {
    assert!(!xs.is_empty(), "estimate of an empty sample");
    let n = xs.len();
    EstimateWithError::new(mean(xs), (variance(xs) / n as f64).sqrt(), n as u64)
}

/// Mean with a batch-means standard error (`floor(sqrt(n))` contiguous batches),
/// for autocorrelated chain output.
pub fn batch_means_estimate(xs: &[f64]) -> EstimateWithError {
    assert!(!xs.is_empty(), "estimate of an empty sample");
    let n = xs.len();
    let n_batches = ((n as f64).sqrt() as usize).max(2).min(n);
    let size = n / n_batches;
    if size == 0 || n_batches < 2 {
        return iid_estimate(xs);
    }
    let means: Vec<f64> = xs.chunks_exact(size).map(mean).collect();
    let se = (variance(&means) / means.len() as f64).sqrt();
    EstimateWithError::new(mean(xs), se, n as u64)
}

/// Sample variance with a delta-method standard error (needs the fourth moment).
pub fn variance_estimate(xs: &[f64]) -> EstimateWithError {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let v = variance(xs);
    EstimateWithError::new(v, ((m4 - m2 * m2).max(0.0) / n).sqrt(), xs.len() as u64)
}

/// Sample-size weighted combination of independent estimates of one quantity.
pub fn pool(parts: &[EstimateWithError]) -> EstimateWithError {
    assert!(!parts.is_empty(), "pooling no estimates");
    let n: u64 = parts.iter().map(|e| e.n_samples).sum();
    let nf = n as f64;
    let value = parts.iter().map(|e| e.n_samples as f64 * e.value).sum::<f64>() / nf;
    let var = parts
        .iter()
        .map(|e| (e.n_samples as f64 / nf * e.stderr).powi(2))
        .sum::<f64>();
    EstimateWithError::new(value, var.sqrt(), n)
}

pub fn combined_stderr(errs: &[f64]) -> f64 {
    errs.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Normalized histogram of non-negative integer observations.
pub fn size_histogram(sizes: &[usize]) -> Vec<f64> {
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut h = vec![0.0; max + 1];
    for &s in sizes {
        h[s] += 1.0;
    }
    let n = sizes.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// Total-variation distance between two mass functions on `0..`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Mann-Kendall trend statistic: returns `(S, z)` where `z` is the
/// continuity-corrected normal score (no tie correction).
pub fn mann_kendall(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (xs[j] - xs[i]).signum() * ((xs[j] != xs[i]) as u8 as f64);
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if s > 0.0 {
        (s - 1.0) / var.sqrt()
    } else if s < 0.0 {
        (s + 1.0) / var.sqrt()
    } else {
        0.0
    };
    (s, z)
}
