//! Reconstruction quality: sum of squared error and characterization
//! accuracy (critical success index above a truth percentile).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridMap, ObstacleMask};
use crate::scalar::Scalar;

/// Percentiles reported in every timeline.
pub const CAX_PERCENTILES: [f64; 5] = [50.0, 80.0, 90.0, 95.0, 99.0];

fn check_pair<T: Scalar>(a: &GridMap<T>, b: &GridMap<T>, mask: &ObstacleMask) -> Result<()> {
    a.same_shape(b)?;
    mask.matches(a)
}

/// Σ (est − truth)² over free cells.
pub fn sse<T: Scalar>(estimate: &GridMap<T>, truth: &GridMap<T>, mask: &ObstacleMask) -> Result<T> {
    check_pair(estimate, truth, mask)?;
    Ok(estimate
        .values()
        .iter()
        .zip(truth.values())
        .zip(mask.blocked())
        .filter(|(_, &b)| !b)
        .map(|((&e, &t), _)| (e - t) * (e - t))
        .fold(T::zero(), |a, b| a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdStats<T> {
    pub percentile: f64,
    pub threshold: T,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub cax: f64,
}

impl<T> ThresholdStats<T> {
    fn from_counts(percentile: f64, threshold: T, tp: usize, fp: usize, fn_: usize) -> Self {
        let denom = tp + fp + fn_;
        let cax = if denom == 0 { 1.0 } else { tp as f64 / denom as f64 };
        Self {
            percentile,
            threshold,
            tp,
            fp,
            fn_,
            cax,
        }
    }
}

/// Nearest-rank percentile of the free-cell truth values:
/// the `ceil(X/100 · N)`-th smallest.
pub fn percentile_threshold<T: Scalar>(truth: &GridMap<T>, mask: &ObstacleMask, x: f64) -> Result<T> {
    if !(x > 0.0 && x < 100.0) {
        return Err(Error::InvalidParameter(format!("percentile {x} outside (0, 100)")));
    }
    mask.matches(truth)?;
    let mut v: Vec<T> = truth
        .values()
        .iter()
        .zip(mask.blocked())
        .filter(|(_, &b)| !b)
        .map(|(&t, _)| t)
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let rank = ((x * v.len() as f64) / 100.0).ceil() as usize;
    Ok(v[rank.clamp(1, v.len()) - 1])
}

/// Characterization accuracy at percentile `x`: `TP / (TP + FP + FN)` with
/// a cell positive when its value exceeds the truth threshold; 1 when no
/// cell is positive in either map.
pub fn cax<T: Scalar>(
    estimate: &GridMap<T>,
    truth: &GridMap<T>,
    x: f64,
    mask: &ObstacleMask,
) -> Result<ThresholdStats<T>> {
    check_pair(estimate, truth, mask)?;
    let t = percentile_threshold(truth, mask, x)?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for ((&e, &g), &b) in estimate.values().iter().zip(truth.values()).zip(mask.blocked()) {
        if b {
            continue;
        }
        match (e > t, g > t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Ok(ThresholdStats::from_counts(x, t, tp, fp, fn_))
}

/// One timeline entry: SSE and CAX at [`CAX_PERCENTILES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub round: usize,
    pub sse: f64,
    pub ca: [f64; 5],
}

/// Precomputed truth thresholds, so each evaluation is a single pass.
#[derive(Debug, Clone)]
pub struct MetricEvaluator<T> {
    truth: GridMap<T>,
    mask: ObstacleMask,
    thresholds: [T; 5],
}

impl<T: Scalar> MetricEvaluator<T> {
    pub fn new(truth: &GridMap<T>, mask: &ObstacleMask) -> Result<Self> {
        let mut thresholds = [T::zero(); 5];
        for (t, &x) in thresholds.iter_mut().zip(&CAX_PERCENTILES) {
            *t = percentile_threshold(truth, mask, x)?;
        }
        Ok(Self {
            truth: truth.clone(),
            mask: mask.clone(),
            thresholds,
        })
    }

    pub fn thresholds(&self) -> &[T; 5] {
        &self.thresholds
    }

    pub fn evaluate(&self, round: usize, estimate: &GridMap<T>) -> Result<MetricRow> {
        check_pair(estimate, &self.truth, &self.mask)?;
        let mut err = T::zero();
        let mut counts = [(0usize, 0usize, 0usize); 5];
        for ((&e, &g), &b) in estimate
            .values()
            .iter()
            .zip(self.truth.values())
            .zip(self.mask.blocked())
        {
            if b {
                continue;
            }
            err += (e - g) * (e - g);
            for (k, &t) in self.thresholds.iter().enumerate() {
                match (e > t, g > t) {
                    (true, true) => counts[k].0 += 1,
                    (true, false) => counts[k].1 += 1,
                    (false, true) => counts[k].2 += 1,
                    _ => {}
                }
            }
        }
        let mut ca = [0.0; 5];
        for (k, &(tp, fp, fn_)) in counts.iter().enumerate() {
            ca[k] = ThresholdStats::from_counts(CAX_PERCENTILES[k], (), tp, fp, fn_).cax;
        }
        Ok(MetricRow {
            round,
            sse: err.as_f64(),
            ca,
        })
    }
}

/// Metrics per round (simulation) or per reading (field).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricTimeline {
    pub rows: Vec<MetricRow>,
}

impl MetricTimeline {
    pub const CSV_HEADER: &'static str = "round,sse,ca50,ca80,ca90,ca95,ca99";

    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn at(&self, round: usize) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.round == round)
    }

    pub fn last(&self) -> Option<&MetricRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}", r.round, r.sse));
            for c in r.ca {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, MapKind};

    fn map(spec: GridSpec, v: Vec<f64>) -> GridMap<f64> {
        GridMap::new(spec, MapKind::Estimate, v).unwrap()
    }

    #[test]
    fn sse_examples() {
        let spec = GridSpec::square(10).unwrap();
        let open = ObstacleMask::open(spec);
        let truth = GridMap::from_fn(spec, MapKind::Truth, |c| (c.row * 10 + c.col) as f64 / 100.0);
        assert_eq!(sse(&truth, &truth, &open).unwrap(), 0.0);
        let est = truth.map(|v| v + 0.1);
        assert!((sse(&est, &truth, &open).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sse(&est, &truth, &open).unwrap(), sse(&truth, &est, &open).unwrap());

        let mut blocked = vec![false; 100];
        blocked[7] = true;
        let mask = ObstacleMask::new(spec, blocked).unwrap();
        let mut est = truth.clone();
        est.values_mut()[7] = 1e6;
        assert_eq!(sse(&est, &truth, &mask).unwrap(), 0.0);
    }

    #[test]
    fn cax_hand_example() {
        let spec = GridSpec::square(2).unwrap();
        let open = ObstacleMask::open(spec);
        let truth = map(spec, vec![1.0, 2.0, 3.0, 4.0]);
        let recon = map(spec, vec![4.0, 3.0, 2.0, 1.0]);
        let s = cax(&recon, &truth, 50.0, &open).unwrap();
        assert_eq!(s.threshold, 2.0);
        assert_eq!((s.tp, s.fp, s.fn_), (0, 2, 2));
        assert_eq!(s.cax, 0.0);
        for x in CAX_PERCENTILES {
            assert_eq!(cax(&truth, &truth, x, &open).unwrap().cax, 1.0);
        }
        assert!(cax(&truth, &truth, 100.0, &open).is_err());
    }

    #[test]
    fn evaluator_matches_pointwise() {
        let spec = GridSpec::new(7, 9, 1.0).unwrap();
        let open = ObstacleMask::open(spec);
        let truth = GridMap::from_fn(spec, MapKind::Truth, |c| ((c.row * 9 + c.col) as f64 * 0.37).sin());
        let est = GridMap::from_fn(spec, MapKind::Estimate, |c| ((c.row * 9 + c.col) as f64 * 0.41).cos());
        let ev = MetricEvaluator::new(&truth, &open).unwrap();
        let row = ev.evaluate(3, &est).unwrap();
        assert_eq!(row.sse, sse(&est, &truth, &open).unwrap());
        for (k, x) in CAX_PERCENTILES.iter().enumerate() {
            assert_eq!(row.ca[k], cax(&est, &truth, *x, &open).unwrap().cax);
        }
        let mut tl = MetricTimeline::default();
        tl.push(row);
        assert!(tl.to_csv().starts_with("round,sse,ca50,ca80,ca90,ca95,ca99\n3,"));
    }
}
