//! Decomposition-linear forecaster: the context is split into a centered moving-average
//! trend and a remainder, each mapped to the horizon by its own `h x l` matrix and bias.

use crate::domain::Param;

/// Centered moving average with edge replication. `kernel` must be odd.
pub(crate) fn moving_average(x: &[f64], kernel: usize, out: &mut [f64]) {
    let n = x.len() as isize;
    let half = (kernel / 2) as isize;
    let scale = 1.0 / kernel as f64;
    for (i, o) in out.iter_mut().enumerate() {
        let i = i as isize;
        let mut acc = 0.0;
        for j in -half..=half {
            acc += x[(i + j).clamp(0, n - 1) as usize];
        }
        *o = acc * scale;
    }
}

pub(crate) struct Scratch {
    trend: Vec<f64>,
    remainder: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(context: usize, horizon: usize) -> Self {
        Self {
            trend: vec![0.0; context],
            remainder: vec![0.0; context],
            out: vec![0.0; horizon],
        }
    }
}

fn decompose(x: &[f64], kernel: usize, s: &mut Scratch) {
    moving_average(x, kernel, &mut s.trend);
    for ((r, xi), t) in s.remainder.iter_mut().zip(x).zip(&s.trend) {
        *r = xi - t;
    }
}

fn affine(weight: &[f64], bias: &[f64], input: &[f64], out: &mut [f64]) {
    let cols = input.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &weight[j * cols..(j + 1) * cols];
        *o += bias[j] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
    }
}

pub(crate) fn forecast(params: &[Param], kernel: usize, x: &[f64], s: &mut Scratch, out: &mut [f64]) {
    decompose(x, kernel, s);
    out.iter_mut().for_each(|o| *o = 0.0);
    affine(&params[0].values, &params[1].values, &s.trend, out);
    affine(&params[2].values, &params[3].values, &s.remainder, out);
}

/// Adds `scale * d(sum sq err)/d(params)` for one univariate sample; returns the squared error.
pub(crate) fn accumulate(
    params: &[Param],
    kernel: usize,
    x: &[f64],
    y: &[f64],
    scale: f64,
    s: &mut Scratch,
    grads: &mut [Vec<f64>],
) -> f64 {
    let mut out = std::mem::take(&mut s.out);
    forecast(params, kernel, x, s, &mut out);
    let cols = x.len();
    let mut sq = 0.0;
    for (j, (yhat, target)) in out.iter().zip(y).enumerate() {
        let err = yhat - target;
        sq += err * err;
        let d = 2.0 * scale * err;
        let row = j * cols..(j + 1) * cols;
        for (g, t) in grads[0][row.clone()].iter_mut().zip(&s.trend) {
            *g += d * t;
        }
        grads[1][j] += d;
        for (g, r) in grads[2][row].iter_mut().zip(&s.remainder) {
            *g += d * r;
        }
        grads[3][j] += d;
    }
    s.out = out;
    sq
}
