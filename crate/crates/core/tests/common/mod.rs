#![allow(dead_code)]

use plasticity_harness::data::{gen_synthetic, ShiftEvent, ShiftKind, ShiftScript};
use plasticity_harness::domain::{Matrix, TimeSeries, WindowSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random `(l x C, h x C)` window with N(0,1) entries.
pub fn random_window(rng: &mut ChaCha8Rng, l: usize, h: usize, c: usize) -> WindowSample {
    let context = Matrix::from_vec(l, c, (0..l * c).map(|_| normal(rng)).collect()).unwrap();
    let target = Matrix::from_vec(h, c, (0..h * c).map(|_| normal(rng)).collect()).unwrap();
    WindowSample {
        context,
        target,
        anchor: l - 1,
    }
}

pub fn column_series(values: &[f64]) -> TimeSeries {
    TimeSeries::unnamed(Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()).unwrap()
}

/// Stream with a mean shift of `magnitude` at `at_partition`.
pub fn shifted_stream(length: usize, partitions: usize, at_partition: usize, magnitude: f64, seed: u64) -> TimeSeries {
    let mut script = ShiftScript::default();
    script.events.push(ShiftEvent {
        at_partition,
        kind: ShiftKind::MeanShift,
        magnitude,
    });
    gen_synthetic(&script, length, 1, partitions, seed).unwrap().series
}

/// Least squares `min ||X b - y||^2` via normal equations and Gaussian elimination
/// with partial pivoting.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &target) in x.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * target;
        }
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}
