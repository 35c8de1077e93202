use serde::{Deserialize, Serialize};

/// Number of batches per chain for batch-means errors.
pub const BATCHES: usize = 20;

/// Mean with a batch-means standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    /// Integrated autocorrelation time in samples, from the ratio of the
    /// batch-means variance to the naive one.
    pub autocorrelation_time: f64,
    /// Base seed followed by the stream index of each chain.
    pub seeds: Vec<u64>,
    pub chain_means: Vec<f64>,
    pub chain_errors: Vec<f64>,
    /// Set when two chains disagree by more than four combined errors.
    pub non_converged: bool,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Means of `batches` consecutive equal blocks; a trailing remainder is
/// dropped. Fewer samples than batches gives one batch per sample.
pub fn batch_means(xs: &[f64], batches: usize) -> Vec<f64> {
    let b = batches.min(xs.len()).max(1);
    let len = xs.len() / b;
    if len == 0 {
        return Vec::new();
    }
    (0..b).map(|i| mean(&xs[i * len..(i + 1) * len])).collect()
}

/// Standard error of the mean of one series by batch means.
pub fn batch_std_error(xs: &[f64], batches: usize) -> f64 {
    let bm = batch_means(xs, batches);
    if bm.len() < 2 {
        return 0.0;
    }
    (sample_variance(&bm) / bm.len() as f64).sqrt()
}

/// Pools per-chain series into one estimate.
pub fn combine_chains(series: &[Vec<f64>], seed: u64) -> Estimate {
    let all: Vec<f64> = series.iter().flatten().copied().collect();
    let n = all.len();
    let m = mean(&all);
    let mut pooled_batches = Vec::new();
    let mut chain_means = Vec::with_capacity(series.len());
    let mut chain_errors = Vec::with_capacity(series.len());
    for s in series {
        pooled_batches.extend(batch_means(s, BATCHES));
        chain_means.push(mean(s));
        chain_errors.push(batch_std_error(s, BATCHES));
    }
    let std_error = if pooled_batches.len() >= 2 {
        // Between-batch spread around the grand mean, including chain offsets.
        let bm = mean(&pooled_batches);
        let var = pooled_batches.iter().map(|x| (x - bm) * (x - bm)).sum::<f64>() / (pooled_batches.len() - 1) as f64;
        (var / pooled_batches.len() as f64).sqrt()
    } else {
        0.0
    };
    let sigma2 = sample_variance(&all);
    let autocorrelation_time = if sigma2 > 0.0 {
        n as f64 * std_error * std_error / (2.0 * sigma2)
    } else {
        0.5
    };
    let mut non_converged = false;
    for i in 0..chain_means.len() {
        for j in i + 1..chain_means.len() {
            let tol = 4.0 * (chain_errors[i].powi(2) + chain_errors[j].powi(2)).sqrt();
            if (chain_means[i] - chain_means[j]).abs() > tol {
                non_converged = true;
            }
        }
    }
    let mut seeds = vec![seed];
    seeds.extend(0..series.len() as u64);
    Estimate {
        mean: m,
        std_error,
        n_samples: n,
        autocorrelation_time,
        seeds,
        chain_means,
        chain_errors,
        non_converged,
    }
}
