//! Channel-independent ReLU MLP: each channel's context is one input vector.

use crate::domain::Param;

pub(crate) struct Scratch {
    /// Pre-activations per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activations per hidden layer (input excluded).
    act: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(params: &[Param]) -> Self {
        let widths: Vec<usize> = params.chunks(2).map(|pair| pair[1].values.len()).collect();
        let max = widths.iter().copied().max().unwrap_or(0);
        Self {
            pre: widths.iter().map(|&w| vec![0.0; w]).collect(),
            act: widths[..widths.len() - 1].iter().map(|&w| vec![0.0; w]).collect(),
            delta: Vec::with_capacity(max),
            delta_prev: Vec::with_capacity(max),
        }
    }
}

fn layer_forward(weight: &[f64], bias: &[f64], input: &[f64], out: &mut [f64]) {
    let cols = input.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &weight[j * cols..(j + 1) * cols];
        *o = bias[j] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn run(params: &[Param], x: &[f64], s: &mut Scratch) {
    let layers = params.len() / 2;
    for i in 0..layers {
        let (weight, bias) = (&params[2 * i].values, &params[2 * i + 1].values);
        let input: &[f64] = if i == 0 { x } else { &s.act[i - 1] };
        layer_forward(weight, bias, input, &mut s.pre[i]);
        if i + 1 < layers {
            for (a, z) in s.act[i].iter_mut().zip(&s.pre[i]) {
                *a = z.max(0.0);
            }
        }
    }
}

pub(crate) fn forecast(params: &[Param], x: &[f64], s: &mut Scratch, out: &mut [f64]) {
    run(params, x, s);
    out.copy_from_slice(s.pre.last().expect("mlp has an output layer"));
}

/// Adds `scale * d(sum sq err)/d(params)` for one univariate sample; returns the squared error.
pub(crate) fn accumulate(
    params: &[Param],
    x: &[f64],
    y: &[f64],
    scale: f64,
    s: &mut Scratch,
    grads: &mut [Vec<f64>],
) -> f64 {
    run(params, x, s);
    let layers = params.len() / 2;
    let mut sq = 0.0;
    s.delta.clear();
    for (yhat, target) in s.pre[layers - 1].iter().zip(y) {
        let err = yhat - target;
        sq += err * err;
        s.delta.push(2.0 * scale * err);
    }

    for i in (0..layers).rev() {
        let input: &[f64] = if i == 0 { x } else { &s.act[i - 1] };
        let cols = input.len();
        {
            let (gw, rest) = grads[2 * i..].split_first_mut().expect("weight grad");
            let gb = &mut rest[0];
            for (j, d) in s.delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                gb[j] += d;
                for (g, v) in gw[j * cols..(j + 1) * cols].iter_mut().zip(input) {
                    *g += d * v;
                }
            }
        }
        if i == 0 {
            break;
        }
        // propagate through W^T then the ReLU of layer i - 1
        let weight = &params[2 * i].values;
        s.delta_prev.clear();
        s.delta_prev.resize(cols, 0.0);
        for (j, d) in s.delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            for (acc, w) in s.delta_prev.iter_mut().zip(&weight[j * cols..(j + 1) * cols]) {
                *acc += d * w;
            }
        }
        for (acc, z) in s.delta_prev.iter_mut().zip(&s.pre[i - 1]) {
            if *z <= 0.0 {
                *acc = 0.0;
            }
        }
        std::mem::swap(&mut s.delta, &mut s.delta_prev);
    }
    sq
}
