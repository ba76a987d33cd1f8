//! Summaries of learning curves used for reporting and acceptance checks.

use super::metrics::MetricsRecord;

/// Trailing mean over the last `window` values (fewer at the start).
pub fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Smoothed `mean_return` curve of one run.
pub fn smoothed_returns(records: &[MetricsRecord], window: usize) -> Vec<f64> {
    trailing_mean(&records.iter().map(|r| r.mean_return).collect::<Vec<_>>(), window)
}

/// Step count of the first episode at which a full trailing window of
/// `window` episodes has mean return at least `threshold`.
pub fn threshold_step(records: &[MetricsRecord], window: usize, threshold: f64) -> Option<usize> {
    let smooth = smoothed_returns(records, window);
    smooth
        .iter()
        .enumerate()
        .skip(window.saturating_sub(1))
        .find(|(_, v)| **v >= threshold)
        .map(|(i, _)| records[i].step)
}

/// Median of `values` (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation (0 below two values).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Standard deviation across runs of the episode return at each episode
/// index every `every` episodes, for episodes all runs reached.
pub fn cross_seed_std(runs: &[Vec<MetricsRecord>], every: usize) -> Vec<(usize, f64)> {
    let len = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    (0..len)
        .step_by(every.max(1))
        .map(|e| {
            let vals: Vec<f64> = runs.iter().map(|r| r[e].mean_return).collect();
            (runs[0][e].step, sample_std(&vals))
        })
        .collect()
}
