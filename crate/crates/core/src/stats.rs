//! Time-series bookkeeping for Markov chain output.

/// Integrated autocorrelation time with Sokal's automatic window: the sum is
/// cut at the first `W` with `W >= c * tau(W)`, `c = 5`.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.5;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let c0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 0.5;
    }
    let mut tau = 0.5;
    for t in 1..n {
        let ct = centered[..n - t].iter().zip(&centered[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += ct / c0;
        if t as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Delete-one-block jackknife standard error of the mean.
pub fn jackknife_error(series: &[f64], block: usize) -> f64 {
    let block = block.max(1);
    let nb = series.len() / block;
    if nb < 2 {
        return naive_error(series);
    }
    let used = &series[..nb * block];
    let total: f64 = used.iter().sum();
    let sums: Vec<f64> = used.chunks_exact(block).map(|c| c.iter().sum()).collect();
    let m = used.len() as f64;
    let est: Vec<f64> = sums.iter().map(|s| (total - s) / (m - block as f64)).collect();
    let mean = est.iter().sum::<f64>() / nb as f64;
    let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() * (nb as f64 - 1.0) / nb as f64;
    var.sqrt()
}

fn naive_error(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (var / n as f64).sqrt()
}

/// Mean, jackknife error over blocks of `16 tau`, and `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesSummary {
    pub mean: f64,
    pub stderr: f64,
    pub tau_int: f64,
    pub samples: usize,
}

pub fn summarize(series: &[f64]) -> SeriesSummary {
    let n = series.len();
    let mean = if n == 0 { 0.0 } else { series.iter().sum::<f64>() / n as f64 };
    let tau = integrated_autocorrelation_time(series);
    let block = (16.0 * tau).ceil() as usize;
    SeriesSummary { mean, stderr: jackknife_error(series, block), tau_int: tau, samples: n }
}
