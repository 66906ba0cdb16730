//! Margin-shifted Welch tests on summary statistics, Benjamini-Hochberg
//! step-up, and pooling of equal-size groups.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Summary of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SampleStats {
    /// Mean and sample standard deviation (n − 1 denominator).
    pub fn from_values(v: &[f64]) -> Self {
        let n = v.len();
        let mean = if n == 0 { 0.0 } else { v.iter().sum::<f64>() / n as f64 };
        let sd = if n < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { n, mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Smaller is better (SSE).
    LowerIsBetter,
    /// Larger is better (CAX).
    HigherIsBetter,
}

/// One-sided Welch test of H₀ "a does not beat b by at least
/// `relative_margin`". For lower-is-better the alternative is
/// `mean_a < (1 − m)·mean_b`; for higher-is-better `mean_a > (1 + m)·mean_b`.
/// Returns the p-value.
pub fn welch_margin_test(
    a: SampleStats,
    b: SampleStats,
    relative_margin: f64,
    direction: Direction,
) -> Result<f64> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::InvalidParameter("each sample needs n >= 2".into()));
    }
    if !(a.sd >= 0.0 && b.sd >= 0.0) || !relative_margin.is_finite() {
        return Err(Error::InvalidParameter("sd must be non-negative".into()));
    }
    let scale = match direction {
        Direction::LowerIsBetter => 1.0 - relative_margin,
        Direction::HigherIsBetter => 1.0 + relative_margin,
    };
    let d = match direction {
        Direction::LowerIsBetter => scale * b.mean - a.mean,
        Direction::HigherIsBetter => a.mean - scale * b.mean,
    };
    let va = a.sd * a.sd / a.n as f64;
    let vb = (scale * b.sd).powi(2) / b.n as f64;
    let se2 = va + vb;
    if se2 == 0.0 {
        return Ok(if d == 0.0 {
            0.5
        } else if d > 0.0 {
            0.0
        } else {
            1.0
        });
    }
    let t = d / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidParameter(format!("t distribution: {e}")))?;
    Ok(dist.cdf(-t))
}

/// Benjamini-Hochberg step-up: rejects every hypothesis whose rank is at
/// most `max{k : p_(k) <= k·alpha/m}`.
pub fn bh_adjust(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let k_star = (1..=m)
        .rev()
        .find(|&k| p_values[order[k - 1]] <= k as f64 * alpha / m as f64)
        .unwrap_or(0);
    let mut reject = vec![false; m];
    for &i in &order[..k_star] {
        reject[i] = true;
    }
    reject
}

/// BH-adjusted p-values (monotone, capped at 1).
pub fn bh_adjusted(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut out = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        running = running.min(p_values[i] * m as f64 / (rank + 1) as f64);
        out[i] = running.min(1.0);
    }
    out
}

/// Pools equal-size groups: mean of means, root of the mean variance, and
/// the summed count.
pub fn pooled_stats(groups: &[SampleStats]) -> Result<SampleStats> {
    let first = groups
        .first()
        .ok_or_else(|| Error::InvalidParameter("no groups to pool".into()))?;
    if groups.iter().any(|g| g.n != first.n) {
        return Err(Error::InvalidParameter("pooled groups must share n".into()));
    }
    let k = groups.len() as f64;
    Ok(SampleStats {
        n: groups.iter().map(|g| g.n).sum(),
        mean: groups.iter().map(|g| g.mean).sum::<f64>() / k,
        sd: (groups.iter().map(|g| g.sd * g.sd).sum::<f64>() / k).sqrt(),
    })
}
