use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sbs_core::stats::{bh_adjust, bh_adjusted, pooled_stats, welch_margin_test, Direction, SampleStats};

use crate::error::{HarnessError, Result};
use crate::plan::{AggregateRow, METRICS};

/// One tested cell: does group a beat group b by the margin?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Agent count, or 0 for a pooled row.
    pub agents: usize,
    pub milestone: f64,
    pub metric: String,
    pub a: SampleStats,
    pub b: SampleStats,
    pub p: f64,
    pub p_adjusted: f64,
    pub reject: bool,
}

pub fn metric_direction(metric: usize) -> Direction {
    if metric == 0 {
        Direction::LowerIsBetter
    } else {
        Direction::HigherIsBetter
    }
}

type Key = (usize, u64);

fn key(r: &AggregateRow) -> Key {
    (r.agents, r.milestone.to_bits())
}

fn index<'a>(rows: &'a [AggregateRow], side: &str) -> Result<BTreeMap<Key, &'a AggregateRow>> {
    let mut out = BTreeMap::new();
    for r in rows {
        if out.insert(key(r), r).is_some() {
            return Err(HarnessError::Mismatch(format!(
                "group {side} has two rows for {} agents at milestone {}",
                r.agents, r.milestone
            )));
        }
    }
    Ok(out)
}

/// Margin-shifted Welch tests of a against b for every metric and every
/// (agents, milestone) cell, with Benjamini-Hochberg across all cells.
/// Rows in `a` and `b` are matched by agent count and milestone.
pub fn compare(a: &[AggregateRow], b: &[AggregateRow], margin: f64, alpha: f64) -> Result<Vec<ComparisonRow>> {
    let ia = index(a, "a")?;
    let ib = index(b, "b")?;
    if ia.keys().ne(ib.keys()) {
        return Err(HarnessError::Mismatch(format!(
            "cells {:?} vs {:?}",
            ia.keys().collect::<Vec<_>>(),
            ib.keys().collect::<Vec<_>>()
        )));
    }
    let cells = ia
        .iter()
        .map(|(k, ra)| (k.0, ra.milestone, ra.stats, ib[k].stats))
        .collect::<Vec<_>>();
    test_cells(&cells, margin, alpha)
}

/// As [`compare`], but first pools each milestone across agent counts
/// (mean of means, mean of variances). All groups must share n.
pub fn compare_pooled(a: &[AggregateRow], b: &[AggregateRow], margin: f64, alpha: f64) -> Result<Vec<ComparisonRow>> {
    let pool = |rows: &[AggregateRow]| -> Result<BTreeMap<u64, [SampleStats; 6]>> {
        let mut by_m: BTreeMap<u64, Vec<&AggregateRow>> = BTreeMap::new();
        for r in rows {
            by_m.entry(r.milestone.to_bits()).or_default().push(r);
        }
        by_m.into_iter()
            .map(|(m, rs)| {
                let mut out = [SampleStats { n: 0, mean: 0.0, sd: 0.0 }; 6];
                for (k, o) in out.iter_mut().enumerate() {
                    let g: Vec<SampleStats> = rs.iter().map(|r| r.stats[k]).collect();
                    *o = pooled_stats(&g)?;
                }
                Ok((m, out))
            })
            .collect()
    };
    let pa = pool(a)?;
    let pb = pool(b)?;
    if pa.keys().ne(pb.keys()) {
        return Err(HarnessError::Mismatch("milestones differ".into()));
    }
    let cells = pa
        .iter()
        .map(|(m, sa)| (0, f64::from_bits(*m), *sa, pb[m]))
        .collect::<Vec<_>>();
    test_cells(&cells, margin, alpha)
}

fn test_cells(
    cells: &[(usize, f64, [SampleStats; 6], [SampleStats; 6])],
    margin: f64,
    alpha: f64,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::with_capacity(cells.len() * METRICS.len());
    for &(agents, milestone, sa, sb) in cells {
        for (k, name) in METRICS.iter().enumerate() {
            let p = welch_margin_test(sa[k], sb[k], margin, metric_direction(k))?;
            rows.push(ComparisonRow {
                agents,
                milestone,
                metric: name.to_string(),
                a: sa[k],
                b: sb[k],
                p,
                p_adjusted: p,
                reject: false,
            });
        }
    }
    let ps: Vec<f64> = rows.iter().map(|r| r.p).collect();
    for ((r, rej), adj) in rows.iter_mut().zip(bh_adjust(&ps, alpha)).zip(bh_adjusted(&ps)) {
        r.reject = rej;
        r.p_adjusted = adj;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sbs_core::strategies::StrategyKind;

    fn row(agents: usize, milestone: f64, sse: f64, ca: f64, sd: f64) -> AggregateRow {
        let s = |m: f64| SampleStats { n: 100, mean: m, sd };
        AggregateRow {
            strategy: "x".into(),
            kind: StrategyKind::Sbs,
            agents,
            milestone,
            round: 0,
            stats: [s(sse), s(ca), s(ca), s(ca), s(ca), s(ca)],
        }
    }

    fn table(sse: f64, ca: f64, sd: f64) -> Vec<AggregateRow> {
        [1, 4]
            .into_iter()
            .flat_map(|n| [0.25, 0.5, 1.0].map(|m| row(n, m, sse, ca, sd)))
            .collect()
    }

    #[test]
    fn self_comparison_rejects_nothing() {
        let t = table(50.0, 0.4, 10.0);
        let out = compare(&t, &t, 0.10, 0.05).unwrap();
        assert_eq!(out.len(), 6 * 6);
        assert!(out.iter().all(|r| !r.reject));
    }

    #[test]
    fn large_gap_rejects_everything_one_way() {
        let good = table(25.0, 0.8, 0.01);
        let bad = table(50.0, 0.4, 0.01);
        assert!(compare(&good, &bad, 0.10, 0.05).unwrap().iter().all(|r| r.reject));
        assert!(compare(&bad, &good, 0.10, 0.05).unwrap().iter().all(|r| !r.reject));
    }

    #[test]
    fn mismatched_grids_error() {
        let a = table(1.0, 0.5, 0.1);
        let b = a[..3].to_vec();
        assert!(matches!(compare(&a, &b, 0.1, 0.05), Err(HarnessError::Mismatch(_))));
    }

    #[test]
    fn pooled_over_agents() {
        let good = table(25.0, 0.8, 1.0);
        let bad = table(50.0, 0.4, 1.0);
        let out = compare_pooled(&good, &bad, 0.10, 0.05).unwrap();
        assert_eq!(out.len(), 3 * 6);
        assert!(out.iter().all(|r| r.agents == 0 && r.a.n == 200 && r.reject));
    }
}
