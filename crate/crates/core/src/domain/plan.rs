use std::ops::Range;

use serde::{Deserialize, Serialize};

/// Relative sizes of the train/val/test splits inside each partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub val: u32,
    pub test: u32,
}

impl SplitRatio {
    pub const fn new(train: u32, val: u32, test: u32) -> Self {
        Self { train, val, test }
    }

    pub fn total(&self) -> u32 {
        self.train + self.val + self.test
    }
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self::new(6, 2, 2)
    }
}

/// One chronological chunk of the series and its three sub-ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub index: usize,
    pub range: Range<usize>,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub series_length: usize,
    pub ratio: SplitRatio,
    pub partitions: Vec<Partition>,
}

impl PartitionPlan {
    pub fn count(&self) -> usize {
        self.partitions.len()
    }

    pub fn partition(&self, p: usize) -> &Partition {
        &self.partitions[p]
    }
}

/// Lists every invariant violation of `plan`; an empty list means the plan is valid.
pub fn validate_plan(plan: &PartitionPlan) -> Vec<String> {
    let mut findings = Vec::new();
    if plan.partitions.is_empty() {
        findings.push("plan has no partitions".to_string());
        return findings;
    }

    for (pos, part) in plan.partitions.iter().enumerate() {
        if part.index != pos {
            findings.push(format!(
                "partition at position {pos} carries index {}",
                part.index
            ));
        }
        if part.range.start >= part.range.end {
            findings.push(format!("partition {} is empty", part.index));
        }
        if part.range.end > plan.series_length {
            findings.push(format!(
                "partition {} ends at {} past series length {}",
                part.index, part.range.end, plan.series_length
            ));
        }
        let contiguous = part.train.start == part.range.start
            && part.train.end == part.val.start
            && part.val.end == part.test.start
            && part.test.end == part.range.end
            && part.train.start <= part.train.end
            && part.val.start <= part.val.end
            && part.test.start <= part.test.end;
        if !contiguous {
            findings.push(format!(
                "partition {}: train/val/test are not contiguous in order",
                part.index
            ));
            continue;
        }
        let total = plan.ratio.total() as f64;
        let len = part.range.len() as f64;
        let splits = [
            ("train", part.train.len(), plan.ratio.train),
            ("val", part.val.len(), plan.ratio.val),
            ("test", part.test.len(), plan.ratio.test),
        ];
        for (name, actual, share) in splits {
            let exact = len * share as f64 / total;
            // floor allocation moves at most one step per split onto train
            if (actual as f64 - exact).abs() >= splits.len() as f64 {
                findings.push(format!(
                    "partition {}: {name} length {actual} departs from ratio share {exact:.2}",
                    part.index
                ));
            }
        }
    }

    for (i, a) in plan.partitions.iter().enumerate() {
        for b in &plan.partitions[i + 1..] {
            if a.range.start < b.range.end && b.range.start < a.range.end {
                findings.push(format!("partitions {},{} overlap", a.index, b.index));
            }
        }
        if let Some(next) = plan.partitions.get(i + 1) {
            if next.range.start < a.range.start {
                findings.push(format!(
                    "partitions {},{} are out of chronological order",
                    a.index, next.index
                ));
            }
        }
    }

    let mut ranges: Vec<&Range<usize>> = plan.partitions.iter().map(|p| &p.range).collect();
    ranges.sort_by_key(|r| r.start);
    let mut covered = 0usize;
    for r in ranges {
        if r.start > covered {
            findings.push(format!("coverage gap at {covered}"));
        }
        covered = covered.max(r.end);
    }
    if covered < plan.series_length {
        findings.push(format!("coverage gap at {covered}"));
    }

    findings
}
