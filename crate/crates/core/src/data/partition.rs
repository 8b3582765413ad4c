use crate::domain::{Partition, PartitionPlan, SplitRatio};
use crate::error::{Error, Result};

/// Splits `[0, series_length)` into `count` chronological partitions.
///
/// Every partition has base length `floor(T / P)`; the remainder goes to the last one.
/// Inside a partition, val and test get `floor(len * share / total)` steps and train
/// takes everything else.
pub fn make_partitions(series_length: usize, count: usize, ratio: SplitRatio) -> Result<PartitionPlan> {
    if count == 0 {
        return Err(Error::Invalid("partition count must be at least 1".into()));
    }
    if series_length < count {
        return Err(Error::Invalid(format!(
            "series length {series_length} is shorter than partition count {count}"
        )));
    }
    if ratio.train == 0 || ratio.val == 0 || ratio.test == 0 {
        return Err(Error::Invalid(format!(
            "ratio parts must be positive, got {}:{}:{}",
            ratio.train, ratio.val, ratio.test
        )));
    }

    let base = series_length / count;
    let total = ratio.total() as usize;
    let partitions = (0..count)
        .map(|p| {
            let start = p * base;
            let end = if p + 1 == count { series_length } else { start + base };
            let len = end - start;
            let val_len = len * ratio.val as usize / total;
            let test_len = len * ratio.test as usize / total;
            let train_len = len - val_len - test_len;
            let train_end = start + train_len;
            let val_end = train_end + val_len;
            Partition {
                index: p,
                range: start..end,
                train: start..train_end,
                val: train_end..val_end,
                test: val_end..end,
            }
        })
        .collect();

    Ok(PartitionPlan {
        series_length,
        ratio,
        partitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_plan;
    use proptest::prelude::*;

    fn split_lengths(plan: &PartitionPlan, p: usize) -> (usize, usize, usize) {
        let part = plan.partition(p);
        (part.train.len(), part.val.len(), part.test.len())
    }

    #[test]
    fn exact_division() {
        let plan = make_partitions(100, 10, SplitRatio::default()).unwrap();
        assert!(validate_plan(&plan).is_empty());
        for p in 0..10 {
            assert_eq!(plan.partition(p).len(), 10);
            assert_eq!(split_lengths(&plan, p), (6, 2, 2));
        }
    }

    #[test]
    fn remainder_goes_to_last_partition() {
        let plan = make_partitions(26304, 10, SplitRatio::default()).unwrap();
        for p in 0..9 {
            assert_eq!(plan.partition(p).len(), 2630);
        }
        assert_eq!(plan.partition(9).len(), 2634);
        // identical test sets for every partition but the last
        assert!((0..9).all(|p| plan.partition(p).test.len() == 526));
    }

    #[test]
    fn hand_traced_floor_allocation() {
        // len 5: val = floor(5*2/10) = 1, test = 1, train = 5 - 2 = 3
        let plan = make_partitions(11, 2, SplitRatio::default()).unwrap();
        assert_eq!(plan.partition(0).len(), 5);
        assert_eq!(plan.partition(1).len(), 6);
        assert_eq!(split_lengths(&plan, 0), (3, 1, 1));
        assert_eq!(split_lengths(&plan, 1), (4, 1, 1));
    }

    #[test]
    fn rejects_short_series() {
        assert!(make_partitions(3, 5, SplitRatio::default()).is_err());
        assert!(make_partitions(10, 0, SplitRatio::default()).is_err());
        assert!(make_partitions(10, 2, SplitRatio::new(6, 0, 2)).is_err());
    }

    proptest! {
        #[test]
        fn generated_plans_always_validate(
            count in 1usize..40,
            extra in 0usize..5000,
            train in 1u32..10, val in 1u32..5, test in 1u32..5,
        ) {
            let plan = make_partitions(count + extra, count, SplitRatio::new(train, val, test)).unwrap();
            prop_assert_eq!(validate_plan(&plan), Vec::<String>::new());
            prop_assert_eq!(plan.count(), count);
        }
    }
}
