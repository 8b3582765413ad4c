//! Synthetic AR(1) + seasonal + noise streams with scripted distribution shifts.
//!
//! Every channel follows
//!
//! ```text
//! x[t] = level[t] + ramp[t] + amplitude * sin(2π (phase[t] + c / C)) + ar[t]
//! ar[t] = φ_c ar[t-1] + σ[t] ε[t]
//! ```
//!
//! and shift events change `level`, `σ`, the seasonal period, or add a ramp from the
//! first step of their partition onward.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{Matrix, TimeSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaseProcess {
    /// AR(1) coefficient per channel; a single value is broadcast to every channel.
    pub ar: Vec<f64>,
    /// Seasonal period in steps.
    pub period: f64,
    pub amplitude: f64,
    pub noise_std: f64,
}

impl Default for BaseProcess {
    fn default() -> Self {
        Self {
            ar: vec![0.0],
            period: 24.0,
            amplitude: 0.0,
            noise_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    MeanShift,
    VarianceShift,
    PeriodShift,
    TrendBreak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEvent {
    pub at_partition: usize,
    pub kind: ShiftKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShiftScript {
    #[serde(default)]
    pub base: BaseProcess,
    #[serde(default)]
    pub events: Vec<ShiftEvent>,
}

impl ShiftScript {
    /// Checks the script against a stream of `channels` channels split into `partitions` parts.
    pub fn validate(&self, channels: usize, partitions: usize) -> Vec<String> {
        let mut findings = Vec::new();
        let base = &self.base;
        if base.ar.is_empty() || (base.ar.len() != 1 && base.ar.len() != channels) {
            findings.push(format!(
                "ar coefficients: expected 1 or {channels}, got {}",
                base.ar.len()
            ));
        }
        for (c, phi) in base.ar.iter().enumerate() {
            if !(phi.abs() < 1.0) {
                findings.push(format!("ar coefficient {phi} of channel {c} is not in (-1, 1)"));
            }
        }
        if !(base.period > 0.0) {
            findings.push(format!("seasonal period {} must be positive", base.period));
        }
        if !(base.noise_std >= 0.0) || !base.amplitude.is_finite() {
            findings.push("noise std must be >= 0 and amplitude finite".into());
        }
        let mut previous: Option<usize> = None;
        for event in &self.events {
            if event.at_partition >= partitions {
                findings.push(format!(
                    "event at partition {} is beyond partition count {partitions}",
                    event.at_partition
                ));
            }
            if previous.is_some_and(|p| event.at_partition <= p) {
                findings.push(format!(
                    "event partitions must be strictly increasing (saw {} after {})",
                    event.at_partition,
                    previous.unwrap_or_default()
                ));
            }
            previous = Some(event.at_partition);
            if !event.magnitude.is_finite() {
                findings.push("event magnitude must be finite".into());
            }
            match event.kind {
                ShiftKind::VarianceShift if event.magnitude < 0.0 => {
                    findings.push("variance_shift magnitude must be >= 0".into())
                }
                ShiftKind::PeriodShift if event.magnitude <= 0.0 => {
                    findings.push("period_shift magnitude must be > 0".into())
                }
                _ => {}
            }
        }
        findings
    }

    fn ar_for(&self, channel: usize) -> f64 {
        if self.base.ar.len() == 1 {
            self.base.ar[0]
        } else {
            self.base.ar[channel]
        }
    }
}

/// Ground-truth record of where an event landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub partition: usize,
    pub kind: ShiftKind,
    pub magnitude: f64,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub series: TimeSeries,
    pub events: Vec<EventRecord>,
}

/// Generates a `length x channels` stream. Deterministic for a fixed seed.
pub fn gen_synthetic(
    script: &ShiftScript,
    length: usize,
    channels: usize,
    partitions: usize,
    seed: u64,
) -> Result<SyntheticStream> {
    if channels == 0 || partitions == 0 || length < partitions {
        return Err(Error::Invalid(format!(
            "need length >= partitions >= 1 and channels >= 1 (got T={length}, P={partitions}, C={channels})"
        )));
    }
    let findings = script.validate(channels, partitions);
    if !findings.is_empty() {
        return Err(Error::Invalid(findings.join("; ")));
    }

    let base_len = length / partitions;
    let events: Vec<EventRecord> = script
        .events
        .iter()
        .map(|e| EventRecord {
            partition: e.at_partition,
            kind: e.kind,
            magnitude: e.magnitude,
            step: e.at_partition * base_len,
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };

    let mut level = 0.0;
    let mut noise_std = script.base.noise_std;
    let mut period = script.base.period;
    let mut ramps: Vec<(usize, f64)> = Vec::new();
    let mut phase = 0.0;
    let mut pending = events.iter().peekable();

    let mut ar: Vec<f64> = (0..channels)
        .map(|c| {
            let phi = script.ar_for(c);
            draw() * noise_std / (1.0 - phi * phi).sqrt()
        })
        .collect();

    let mut data = Vec::with_capacity(length * channels);
    for t in 0..length {
        while let Some(event) = pending.next_if(|e| e.step <= t) {
            match event.kind {
                ShiftKind::MeanShift => level += event.magnitude,
                ShiftKind::VarianceShift => noise_std *= event.magnitude,
                ShiftKind::PeriodShift => period = event.magnitude,
                ShiftKind::TrendBreak => ramps.push((event.step, event.magnitude / base_len as f64)),
            }
        }
        let ramp: f64 = ramps.iter().map(|&(s, slope)| slope * (t - s) as f64).sum();
        for (c, state) in ar.iter_mut().enumerate() {
            if t > 0 {
                *state = script.ar_for(c) * *state + noise_std * draw();
            }
            let offset = c as f64 / channels as f64;
            let seasonal =
                script.base.amplitude * (std::f64::consts::TAU * (phase + offset)).sin();
            data.push(level + ramp + seasonal + *state);
        }
        phase = (phase + 1.0 / period).fract();
    }

    let values = Matrix::from_vec(length, channels, data)?;
    Ok(SyntheticStream {
        series: TimeSeries::unnamed(values)?,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid_script() -> ShiftScript {
        ShiftScript::default()
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn iid_stream_has_zero_partition_means() {
        let s = gen_synthetic(&iid_script(), 10_000, 1, 10, 3).unwrap();
        let x = s.series.values().column(0);
        for chunk in x.chunks(1000) {
            assert!(mean(chunk).abs() < 4.0 / (chunk.len() as f64).sqrt());
        }
    }

    #[test]
    fn mean_shift_moves_later_partitions() {
        let mut script = iid_script();
        script.events.push(ShiftEvent {
            at_partition: 5,
            kind: ShiftKind::MeanShift,
            magnitude: 3.0,
        });
        let s = gen_synthetic(&script, 10_000, 1, 10, 11).unwrap();
        assert_eq!(s.events[0].step, 5000);
        let x = s.series.values().column(0);
        let diff = mean(&x[5000..]) - mean(&x[..5000]);
        assert!((diff - 3.0).abs() < 0.2, "diff {diff}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut script = iid_script();
        script.base.ar = vec![0.7];
        script.base.amplitude = 1.5;
        script.events.push(ShiftEvent {
            at_partition: 2,
            kind: ShiftKind::TrendBreak,
            magnitude: 1.0,
        });
        let a = gen_synthetic(&script, 500, 3, 5, 9).unwrap();
        let b = gen_synthetic(&script, 500, 3, 5, 9).unwrap();
        let c = gen_synthetic(&script, 500, 3, 5, 10).unwrap();
        assert_eq!(a.series.values().as_slice(), b.series.values().as_slice());
        assert_ne!(a.series.values().as_slice(), c.series.values().as_slice());
    }

    #[test]
    fn variance_and_trend_events_take_effect() {
        let mut script = iid_script();
        script.events = vec![
            ShiftEvent { at_partition: 1, kind: ShiftKind::VarianceShift, magnitude: 3.0 },
            ShiftEvent { at_partition: 3, kind: ShiftKind::TrendBreak, magnitude: 10.0 },
        ];
        let s = gen_synthetic(&script, 4000, 1, 4, 5).unwrap();
        let x = s.series.values().column(0);
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64
        };
        assert!(var(&x[1000..2000]) > 6.0 * var(&x[..1000]));
        // ramp reaches ~magnitude by the end of the partition
        assert!(mean(&x[3900..4000]) > 8.0);
    }

    #[test]
    fn rejects_bad_scripts() {
        let mut script = iid_script();
        script.base.ar = vec![1.0];
        assert!(gen_synthetic(&script, 100, 1, 2, 0).is_err());
        let mut script = iid_script();
        script.events = vec![
            ShiftEvent { at_partition: 3, kind: ShiftKind::MeanShift, magnitude: 1.0 },
            ShiftEvent { at_partition: 3, kind: ShiftKind::MeanShift, magnitude: 1.0 },
        ];
        assert!(!script.validate(1, 10).is_empty());
        script.events.truncate(1);
        assert!(!script.validate(1, 3).is_empty());
    }
}
