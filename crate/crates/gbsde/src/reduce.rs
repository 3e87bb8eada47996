//! Order-fixed reductions over path arrays.
//!
//! Sums are accumulated per fixed-size block and the block partials are then
//! folded in index order, so the result is bit-identical no matter how many
//! worker threads rayon splits the blocks across.

use rayon::prelude::*;

const BLOCK: usize = 4096;

pub fn det_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let partials: Vec<f64> = values
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().sum::<f64>())
        .collect();
    partials.iter().sum()
}

pub fn det_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    det_sum(values) / values.len() as f64
}

/// Mean and unbiased sample variance (two-pass).
pub fn det_mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = det_mean(values);
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = if n <= BLOCK {
        values.iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        let partials: Vec<f64> = values
            .par_chunks(BLOCK)
            .map(|chunk| chunk.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
            .collect();
        partials.iter().sum()
    };
    (mean, ss / (n - 1) as f64)
}

/// Mean and standard error of the mean.
pub fn det_mean_se(values: &[f64]) -> (f64, f64) {
    let (mean, var) = det_mean_var(values);
    (mean, (var / values.len() as f64).sqrt())
}

/// Sample covariance of two equally long slices (two-pass, unbiased).
pub fn det_cov(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let ma = det_mean(a);
    let mb = det_mean(b);
    let cross: f64 = if n <= BLOCK {
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum()
    } else {
        let partials: Vec<f64> = a
            .par_chunks(BLOCK)
            .zip(b.par_chunks(BLOCK))
            .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>())
            .collect();
        partials.iter().sum()
    };
    cross / (n - 1) as f64
}

/// Root-mean-square of a slice.
pub fn det_rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ss: f64 = if values.len() <= BLOCK {
        values.iter().map(|v| v * v).sum()
    } else {
        let partials: Vec<f64> = values
            .par_chunks(BLOCK)
            .map(|chunk| chunk.iter().map(|v| v * v).sum::<f64>())
            .collect();
        partials.iter().sum::<f64>()
    };
    (ss / values.len() as f64).sqrt()
}
