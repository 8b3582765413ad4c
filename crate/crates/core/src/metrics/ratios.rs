use std::collections::BTreeSet;

use crate::domain::{MetricsTable, Ratio, RatioRow, Regime};

/// Recomputes the ratio rows of `table` from its MSE rows.
///
/// `r_zero = inc / zero`, `r_full = inc / full`, `r_fz = full / zero`. A ratio whose
/// constituents are missing is absent; one with a zero denominator is degenerate.
pub fn ratio_metrics(table: &MetricsTable) -> MetricsTable {
    let mut out = MetricsTable {
        rows: table.rows.clone(),
        ratios: Vec::new(),
    };
    for model_id in table.model_ids() {
        let ps: BTreeSet<usize> = table
            .rows
            .iter()
            .filter(|r| r.model_id == model_id)
            .map(|r| r.p)
            .collect();
        for p in ps {
            let inc = table.mse(&model_id, Regime::Incremental, p);
            let zero = table.mse(&model_id, Regime::Zero, p);
            let full = table.mse(&model_id, Regime::Full, p);
            let pair = |num: Option<f64>, den: Option<f64>| Some(Ratio::of(num?, den?));
            let row = RatioRow {
                model_id: model_id.clone(),
                p,
                r_zero: pair(inc, zero),
                r_full: pair(inc, full),
                r_fz: pair(full, zero),
            };
            if row.r_zero.is_some() || row.r_full.is_some() || row.r_fz.is_some() {
                out.ratios.push(row);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MetricRow;

    fn row(regime: Regime, p: usize, mse: f64) -> MetricRow {
        MetricRow {
            model_id: "m".into(),
            regime,
            p,
            mse,
            mse_raw: None,
        }
    }

    #[test]
    fn arithmetic_and_identity_cases() {
        let mut t = MetricsTable::default();
        t.push(row(Regime::Incremental, 0, 0.8));
        t.push(row(Regime::Zero, 0, 1.6));
        t.push(row(Regime::Full, 0, 0.8));
        let r = ratio_metrics(&t);
        let row = &r.ratios[0];
        assert_eq!(row.r_zero.unwrap().value(), Some(0.5));
        assert_eq!(row.r_full.unwrap().value(), Some(1.0));
        assert_eq!(row.r_fz.unwrap().value(), Some(0.5));
    }

    #[test]
    fn missing_constituents_leave_ratio_absent() {
        let mut t = MetricsTable::default();
        t.push(row(Regime::Incremental, 0, 0.8));
        t.push(row(Regime::Full, 0, 0.4));
        t.push(row(Regime::Zero, 1, 1.0));
        let r = ratio_metrics(&t);
        assert_eq!(r.ratios.len(), 1);
        assert!(r.ratios[0].r_zero.is_none() && r.ratios[0].r_fz.is_none());
        assert_eq!(r.ratios[0].r_full.unwrap().value(), Some(2.0));
    }

    #[test]
    fn zero_denominator_is_degenerate() {
        let mut t = MetricsTable::default();
        t.push(row(Regime::Incremental, 0, 0.3));
        t.push(row(Regime::Full, 0, 0.0));
        let r = ratio_metrics(&t);
        assert_eq!(
            r.ratios[0].r_full,
            Some(Ratio::Degenerate { numerator: 0.3, denominator: 0.0 })
        );
    }

    #[test]
    fn ratios_are_pure_functions_of_rows() {
        let mut t = MetricsTable::default();
        for p in 0..5 {
            t.push(row(Regime::Incremental, p, 0.1 + p as f64));
            t.push(row(Regime::Zero, p, 0.7 * (p + 1) as f64));
            t.push(row(Regime::Full, p, 0.3 + 0.01 * p as f64));
        }
        let once = ratio_metrics(&t);
        assert_eq!(ratio_metrics(&once), once);
        for r in &once.ratios {
            let (z, f, fz) = (
                r.r_zero.unwrap().value().unwrap(),
                r.r_full.unwrap().value().unwrap(),
                r.r_fz.unwrap().value().unwrap(),
            );
            assert!((z / fz - f).abs() <= 4.0 * f64::EPSILON * f.abs());
        }
    }
}
