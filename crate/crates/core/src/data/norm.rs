use std::ops::Range;

use crate::domain::{Matrix, NormStats, WindowSample};
use crate::error::{Error, Result};

/// Floor applied to the standard deviation of constant channels.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-channel mean and population std over `range` rows.
///
/// Returns the stats together with one warning per channel whose std was floored.
pub fn fit_norm(values: &Matrix, range: Range<usize>) -> Result<(NormStats, Vec<String>)> {
    if range.is_empty() || range.end > values.rows() {
        return Err(Error::Invalid(format!(
            "normalization range {}..{} is empty or exceeds {} rows",
            range.start,
            range.end,
            values.rows()
        )));
    }
    let n = range.len() as f64;
    let cols = values.cols();
    let mut mean = vec![0.0; cols];
    for r in range.clone() {
        for (m, v) in mean.iter_mut().zip(values.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; cols];
    for r in range.clone() {
        for ((acc, v), m) in var.iter_mut().zip(values.row(r)).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let mut warnings = Vec::new();
    let std = var
        .into_iter()
        .enumerate()
        .map(|(c, v)| {
            let s = (v / n).sqrt();
            if s < STD_FLOOR {
                let msg = format!(
                    "channel {c} is constant over rows {}..{}; std floored to {STD_FLOOR:e}",
                    range.start, range.end
                );
                log::warn!("{msg}");
                warnings.push(msg);
                STD_FLOOR
            } else {
                s
            }
        })
        .collect();
    Ok((NormStats { mean, std }, warnings))
}

fn check_channels(values: &Matrix, stats: &NormStats) -> Result<()> {
    if values.cols() != stats.channels() {
        return Err(Error::Shape(format!(
            "{} channels against stats for {}",
            values.cols(),
            stats.channels()
        )));
    }
    Ok(())
}

/// z-scores every row with `stats`.
pub fn apply_norm(values: &Matrix, stats: &NormStats) -> Result<Matrix> {
    check_channels(values, stats)?;
    let mut out = values.clone();
    let cols = out.cols();
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        let c = i % cols;
        *v = (*v - stats.mean[c]) / stats.std[c];
    }
    Ok(out)
}

/// Maps normalized values back to raw units.
pub fn invert_norm(values: &Matrix, stats: &NormStats) -> Result<Matrix> {
    check_channels(values, stats)?;
    let mut out = values.clone();
    let cols = out.cols();
    for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
        let c = i % cols;
        *v = *v * stats.std[c] + stats.mean[c];
    }
    Ok(out)
}

pub fn apply_norm_window(window: &WindowSample, stats: &NormStats) -> Result<WindowSample> {
    Ok(WindowSample {
        context: apply_norm(&window.context, stats)?,
        target: apply_norm(&window.target, stats)?,
        anchor: window.anchor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> Matrix {
        Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn population_std() {
        let m = column(&[1.0, 2.0, 3.0]);
        let (stats, warnings) = fit_norm(&m, 0..3).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(stats.mean, vec![2.0]);
        assert!((stats.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z = apply_norm(&m, &stats).unwrap();
        let expect = [-1.224744871391589, 0.0, 1.224744871391589];
        for (a, b) in z.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_channel_is_floored() {
        let m = column(&[5.0, 5.0, 5.0]);
        let (stats, warnings) = fit_norm(&m, 0..3).unwrap();
        assert_eq!(stats.std, vec![STD_FLOOR]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(apply_norm(&m, &stats).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn stats_use_only_the_fit_range() {
        let m = column(&[0.0, 2.0, 100.0, -50.0]);
        let (stats, _) = fit_norm(&m, 0..2).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.std, vec![1.0]);
    }

    #[test]
    fn empty_range_is_rejected() {
        let m = column(&[1.0]);
        assert!(fit_norm(&m, 0..0).is_err());
    }

    proptest! {
        #[test]
        fn invert_undoes_apply(values in prop::collection::vec(-1e3f64..1e3, 6..60)) {
            let m = Matrix::from_vec(values.len() / 2, 2, values[..values.len() / 2 * 2].to_vec()).unwrap();
            let (stats, _) = fit_norm(&m, 0..m.rows()).unwrap();
            let back = invert_norm(&apply_norm(&m, &stats).unwrap(), &stats).unwrap();
            for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn refit_after_apply_is_standard(values in prop::collection::vec(-1e3f64..1e3, 4..80)) {
            let m = column(&values);
            let (stats, warnings) = fit_norm(&m, 0..m.rows()).unwrap();
            prop_assume!(warnings.is_empty() && stats.std[0] > 1e-3);
            let (again, _) = fit_norm(&apply_norm(&m, &stats).unwrap(), 0..m.rows()).unwrap();
            prop_assert!(again.mean[0].abs() < 1e-9);
            prop_assert!((again.std[0] - 1.0).abs() < 1e-9);
        }
    }
}
