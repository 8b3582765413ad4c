use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample moments behind the MSE expansion `E[Y²] − 2E[ŶY] + E[Ŷ²]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: usize,
    pub e_y2: f64,
    pub e_yhaty: f64,
    pub e_yhat2: f64,
    pub mse_exact: f64,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub mean_y: f64,
    /// `1 + σ̂² + μ̂²`, the error expected if forecasts were independent of standardized targets.
    pub independence_approx: f64,
    /// `|mse_exact − independence_approx|`.
    pub assumption_gap: f64,
}

/// Neumaier-compensated mean.
fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut n = 0usize;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        n += 1;
    }
    (sum + comp) / n as f64
}

pub fn moment_decomposition(forecasts: &[f64], targets: &[f64]) -> Result<MomentReport> {
    if forecasts.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} forecasts paired with {} targets",
            forecasts.len(),
            targets.len()
        )));
    }
    let n = forecasts.len();
    if n < 2 {
        return Err(Error::Invalid(format!("moment decomposition needs n >= 2, got {n}")));
    }
    let pairs = || forecasts.iter().copied().zip(targets.iter().copied());
    let e_y2 = mean(targets.iter().map(|y| y * y));
    let e_yhaty = mean(pairs().map(|(a, y)| a * y));
    let e_yhat2 = mean(forecasts.iter().map(|a| a * a));
    let mse_exact = mean(pairs().map(|(a, y)| (a - y) * (a - y)));
    let mu_hat = mean(forecasts.iter().copied());
    let sigma2_hat = mean(forecasts.iter().map(|a| (a - mu_hat) * (a - mu_hat)));
    let mean_y = mean(targets.iter().copied());
    let independence_approx = 1.0 + sigma2_hat + mu_hat * mu_hat;
    Ok(MomentReport {
        n,
        e_y2,
        e_yhaty,
        e_yhat2,
        mse_exact,
        mu_hat,
        sigma2_hat,
        mean_y,
        independence_approx,
        assumption_gap: (mse_exact - independence_approx).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_arithmetic() {
        let r = moment_decomposition(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
        assert_eq!((r.e_y2, r.e_yhaty, r.e_yhat2), (1.0, 0.0, 0.0));
        assert_eq!(r.mse_exact, 1.0);
        assert_eq!(r.independence_approx, 1.0);
        assert_eq!(r.assumption_gap, 0.0);
    }

    #[test]
    fn perfect_forecast_exposes_the_gap() {
        // standardized target: mean 0, population variance 1
        let y = [1.0, -1.0, 1.0, -1.0];
        let r = moment_decomposition(&y, &y).unwrap();
        assert_eq!(r.mse_exact, 0.0);
        assert!((r.independence_approx - 2.0).abs() < 1e-12);
        assert!((r.assumption_gap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn needs_two_samples() {
        assert!(moment_decomposition(&[1.0], &[1.0]).is_err());
        assert!(moment_decomposition(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn expansion_identity(pairs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..400)) {
            let (a, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = moment_decomposition(&a, &y).unwrap();
            prop_assert!((r.mse_exact - (r.e_y2 - 2.0 * r.e_yhaty + r.e_yhat2)).abs() <= 1e-12);
        }
    }
}
