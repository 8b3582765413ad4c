use std::collections::BTreeSet;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::norm::{apply_norm, fit_norm};
use super::window::window_iter;
use crate::domain::{NormStats, PartitionPlan, TimeSeries, WindowSample};
use crate::error::{Error, Result};

/// Where each partition's normalization statistics come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormPolicy {
    /// Each partition is normalized with stats fit on its own train range.
    #[default]
    PerPartition,
    /// Every partition is normalized with stats fit on partition 0's train range.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Normalized windows of one partition.
#[derive(Debug, Clone)]
pub struct PartitionWindows {
    pub stats: NormStats,
    pub train: Vec<WindowSample>,
    pub val: Vec<WindowSample>,
    pub test: Vec<WindowSample>,
}

impl PartitionWindows {
    fn split(&self, split: Split) -> &[WindowSample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// All windows of a partitioned series, with an optional access audit.
///
/// Training code reads windows only through this type, so the audit shows exactly
/// which partitions a regime touched.
#[derive(Debug)]
pub struct PartitionedData {
    context: usize,
    horizon: usize,
    channels: usize,
    parts: Vec<PartitionWindows>,
    audit: Option<Mutex<Vec<(usize, Split)>>>,
}

impl PartitionedData {
    pub fn build(
        series: &TimeSeries,
        plan: &PartitionPlan,
        context: usize,
        horizon: usize,
        policy: NormPolicy,
    ) -> Result<Self> {
        if plan.series_length != series.len() {
            return Err(Error::Shape(format!(
                "plan covers {} steps but series has {}",
                plan.series_length,
                series.len()
            )));
        }
        let reference = match policy {
            NormPolicy::Reference => Some(fit_norm(series.values(), plan.partition(0).train.clone())?.0),
            NormPolicy::PerPartition => None,
        };
        let mut parts = Vec::with_capacity(plan.count());
        for part in &plan.partitions {
            let stats = match &reference {
                Some(stats) => stats.clone(),
                None => fit_norm(series.values(), part.train.clone())?.0,
            };
            // normalize the partition once, then cut windows from the normalized copy
            let raw = series.values().slice_rows(part.range.start, part.range.end);
            let normalized = apply_norm(&raw, &stats)?;
            let offset = part.range.start;
            let cut = |r: std::ops::Range<usize>| -> Vec<WindowSample> {
                window_iter(&normalized, r.start - offset..r.end - offset, context, horizon)
                    .map(|mut w| {
                        w.anchor += offset;
                        w
                    })
                    .collect()
            };
            parts.push(PartitionWindows {
                train: cut(part.train.clone()),
                val: cut(part.val.clone()),
                test: cut(part.test.clone()),
                stats,
            });
        }
        Ok(Self {
            context,
            horizon,
            channels: series.channels(),
            parts,
            audit: None,
        })
    }

    /// Wraps windows that were built elsewhere (already normalized).
    pub fn from_parts(context: usize, horizon: usize, channels: usize, parts: Vec<PartitionWindows>) -> Self {
        Self {
            context,
            horizon,
            channels,
            parts,
            audit: None,
        }
    }

    /// Starts recording every window access.
    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn partitions(&self) -> usize {
        self.parts.len()
    }

    pub fn context(&self) -> usize {
        self.context
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn stats(&self, p: usize) -> &NormStats {
        &self.parts[p].stats
    }

    pub fn windows(&self, p: usize, split: Split) -> Result<&[WindowSample]> {
        let part = self.parts.get(p).ok_or_else(|| {
            Error::Invalid(format!("partition {p} out of range (P = {})", self.parts.len()))
        })?;
        if let Some(audit) = &self.audit {
            audit.lock().expect("audit lock").push((p, split));
        }
        Ok(part.split(split))
    }

    pub fn train(&self, p: usize) -> Result<&[WindowSample]> {
        self.windows(p, Split::Train)
    }

    pub fn val(&self, p: usize) -> Result<&[WindowSample]> {
        self.windows(p, Split::Val)
    }

    pub fn test(&self, p: usize) -> Result<&[WindowSample]> {
        self.windows(p, Split::Test)
    }

    /// Drains the audit log, returning the partitions touched per split.
    pub fn take_audit(&self) -> Vec<(usize, Split)> {
        match &self.audit {
            Some(audit) => std::mem::take(&mut *audit.lock().expect("audit lock")),
            None => Vec::new(),
        }
    }

    pub fn touched(&self, split: Split) -> BTreeSet<usize> {
        self.take_audit()
            .into_iter()
            .filter(|(_, s)| *s == split)
            .map(|(p, _)| p)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_partitions;
    use crate::domain::{Matrix, SplitRatio};

    fn ramp_series(len: usize) -> TimeSeries {
        TimeSeries::unnamed(Matrix::from_vec(len, 1, (0..len).map(|v| v as f64).collect()).unwrap())
            .unwrap()
    }

    #[test]
    fn train_targets_stay_in_train_range() {
        let series = ramp_series(400);
        let plan = make_partitions(400, 4, SplitRatio::default()).unwrap();
        let data = PartitionedData::build(&series, &plan, 8, 4, NormPolicy::PerPartition).unwrap();
        for p in 0..4 {
            let train = plan.partition(p).train.clone();
            for w in data.train(p).unwrap() {
                let first_target = w.anchor + 1;
                let last_target = w.anchor + 4;
                assert!(train.contains(&first_target) && train.contains(&last_target));
                assert!(w.anchor + 1 >= train.start + 8);
            }
            assert_eq!(data.train(p).unwrap().len(), 60 - 12 + 1);
        }
    }

    #[test]
    fn policies_differ_only_in_stats() {
        let series = ramp_series(200);
        let plan = make_partitions(200, 2, SplitRatio::default()).unwrap();
        let own = PartitionedData::build(&series, &plan, 4, 2, NormPolicy::PerPartition).unwrap();
        let reference = PartitionedData::build(&series, &plan, 4, 2, NormPolicy::Reference).unwrap();
        assert_eq!(own.stats(0), reference.stats(0));
        assert_ne!(own.stats(1), reference.stats(1));
        assert_eq!(reference.stats(1), reference.stats(0));
    }

    #[test]
    fn audit_records_accesses() {
        let series = ramp_series(200);
        let plan = make_partitions(200, 2, SplitRatio::default()).unwrap();
        let data = PartitionedData::build(&series, &plan, 4, 2, NormPolicy::PerPartition)
            .unwrap()
            .with_audit();
        data.train(1).unwrap();
        data.test(0).unwrap();
        assert_eq!(data.take_audit(), vec![(1, Split::Train), (0, Split::Test)]);
        assert!(data.take_audit().is_empty());
    }
}
