//! Small statistics toolkit: sample moments, least squares, batch means.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("only {have} batches, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    variance(x).sqrt()
}

/// Standard error of the mean.
pub fn std_err(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Ordinary least squares y ≈ X β with X given column-wise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearFit {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub r2: f64,
    pub residual_sd: f64,
}

impl LinearFit {
    pub fn t(&self, j: usize) -> f64 {
        self.coef[j] / self.std_err[j]
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_dense(a.to_vec(), e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// Least squares with an intercept column prepended to `regressors`.
pub fn ols(regressors: &[Vec<f64>], y: &[f64]) -> Result<LinearFit, StatsError> {
    let n = y.len();
    let mut cols = vec![vec![1.0; n]];
    cols.extend(regressors.iter().cloned());
    let p = cols.len();
    if n <= p {
        return Err(StatsError::DegenerateFit("need more points than parameters"));
    }
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|i| (0..p).map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..p).map(|i| cols[i].iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let inv = invert(&xtx).ok_or(StatsError::DegenerateFit("singular design"))?;
    let coef: Vec<f64> = (0..p).map(|i| (0..p).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let fitted: Vec<f64> = (0..n).map(|r| (0..p).map(|j| coef[j] * cols[j][r]).sum()).collect();
    let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let ybar = mean(y);
    let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let s2 = rss / (n - p) as f64;
    let std_err = (0..p).map(|j| (s2 * inv[j][j]).sqrt()).collect();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(LinearFit { coef, std_err, r2, residual_sd: s2.sqrt() })
}

/// Simple regression y ≈ a + b x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, StatsError> {
    ols(&[x.to_vec()], y)
}

/// Non-overlapping batch means of a stationary series.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BatchMeans {
    batch_len: usize,
    sum: f64,
    count: usize,
    total: f64,
    n: usize,
    batches: Vec<f64>,
}

pub const MIN_BATCHES: usize = 20;

impl BatchMeans {
    pub fn new(batch_len: usize) -> Self {
        BatchMeans { batch_len: batch_len.max(1), ..Default::default() }
    }

    pub fn push(&mut self, v: f64) {
        self.sum += v;
        self.count += 1;
        self.total += v;
        self.n += 1;
        if self.count == self.batch_len {
            self.batches.push(self.sum / self.batch_len as f64);
            self.sum = 0.0;
            self.count = 0;
        }
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn batches(&self) -> &[f64] {
        &self.batches
    }

    pub fn mean(&self) -> f64 {
        self.total / self.n as f64
    }

    /// Standard error from complete batches.
    pub fn std_err(&self) -> Result<f64, StatsError> {
        if self.batches.len() < MIN_BATCHES {
            return Err(StatsError::InsufficientSamples { have: self.batches.len(), need: MIN_BATCHES });
        }
        Ok(std_err(&self.batches))
    }
}

/// Gelman–Rubin potential scale reduction from per-chain series of equal length.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / m;
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Two-sided Kolmogorov–Smirnov statistic against a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.coef[0] - 2.0).abs() < 1e-12 && (f.coef[1] + 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn batches() {
        let mut b = BatchMeans::new(3);
        for i in 0..59 {
            b.push(i as f64);
        }
        assert_eq!(b.batches().len(), 19);
        assert!(b.std_err().is_err());
        b.push(59.0);
        assert!(b.std_err().is_ok());
        assert!((b.mean() - 29.5).abs() < 1e-12);
    }

    #[test]
    fn identical_chains_have_unit_ratio() {
        let c: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64).collect();
        assert!((gelman_rubin(&[c.clone(), c.clone(), c.clone(), c]) - (99.0f64 / 100.0).sqrt()).abs() < 1e-12);
    }
}
