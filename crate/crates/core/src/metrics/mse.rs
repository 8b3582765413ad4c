use serde::{Deserialize, Serialize};

use crate::data::invert_norm;
use crate::domain::{Checkpoint, NormStats, WindowSample};
use crate::error::{Error, Result};
use crate::models::{Forecaster, NativeForecaster};

/// Forecasts and targets of one evaluation, flattened in window/step/channel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mse: f64,
    pub mse_raw: f64,
    pub forecasts: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Sum of squares that does not depend on the order of `errors`.
pub(crate) fn order_free_mean_square(mut squares: Vec<f64>) -> f64 {
    let n = squares.len() as f64;
    squares.sort_unstable_by(f64::total_cmp);
    squares.iter().sum::<f64>() / n
}

/// Scores `forecaster` on normalized `windows`; raw-space error uses `stats`.
pub fn evaluate(forecaster: &mut dyn Forecaster, windows: &[WindowSample], stats: &NormStats) -> Result<Evaluation> {
    if windows.is_empty() {
        return Err(Error::NoWindows("evaluation needs at least one test window".into()));
    }
    let contexts: Vec<_> = windows.iter().map(|w| &w.context).collect();
    let predictions = forecaster.forecast(&contexts)?;
    if predictions.len() != windows.len() {
        return Err(Error::Shape(format!(
            "{} forecasts for {} windows",
            predictions.len(),
            windows.len()
        )));
    }
    let mut squares = Vec::new();
    let mut raw_squares = Vec::new();
    let mut forecasts = Vec::new();
    let mut targets = Vec::new();
    for (yhat, w) in predictions.iter().zip(windows) {
        if yhat.shape() != w.target.shape() {
            return Err(Error::Shape(format!(
                "forecast {:?} does not match target {:?}",
                yhat.shape(),
                w.target.shape()
            )));
        }
        if !yhat.is_finite() {
            return Err(Error::NonFinite(format!("forecast for window anchored at {}", w.anchor)));
        }
        let raw_hat = invert_norm(yhat, stats)?;
        let raw_target = invert_norm(&w.target, stats)?;
        for (a, b) in yhat.as_slice().iter().zip(w.target.as_slice()) {
            squares.push((a - b) * (a - b));
        }
        for (a, b) in raw_hat.as_slice().iter().zip(raw_target.as_slice()) {
            raw_squares.push((a - b) * (a - b));
        }
        forecasts.extend_from_slice(yhat.as_slice());
        targets.extend_from_slice(w.target.as_slice());
    }
    Ok(Evaluation {
        mse: order_free_mean_square(squares),
        mse_raw: order_free_mean_square(raw_squares),
        forecasts,
        targets,
    })
}

/// Normalized-space MSE of a checkpoint over a partition's test windows.
pub fn mse_eval(ckpt: &Checkpoint, windows: &[WindowSample], stats: &NormStats) -> Result<f64> {
    let mut forecaster = NativeForecaster::new(ckpt);
    Ok(evaluate(&mut forecaster, windows, stats)?.mse)
}
