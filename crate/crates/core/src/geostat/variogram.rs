use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, GridSpec};
use crate::scalar::Scalar;

/// Smallest partial sill a fitted or fallback model may carry.
pub const SILL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariogramFamily {
    Spherical,
}

/// Bounded variogram. `sill` is the total sill; `range` is in the same
/// distance units as the grid (cells scaled by cell size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VariogramModel<T> {
    pub nugget: T,
    pub sill: T,
    pub range: T,
    pub family: VariogramFamily,
}

impl<T: Scalar> VariogramModel<T> {
    pub fn spherical(nugget: T, sill: T, range: T) -> Result<Self> {
        if !(nugget >= T::zero() && sill > nugget && range > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "spherical model needs 0 <= nugget < sill and range > 0 (got {nugget}, {sill}, {range})"
            )));
        }
        Ok(Self {
            nugget,
            sill,
            range,
            family: VariogramFamily::Spherical,
        })
    }

    #[inline]
    pub fn gamma(&self, h: T) -> T {
        if h <= T::zero() {
            return T::zero();
        }
        if h >= self.range {
            return self.sill;
        }
        let x = h / self.range;
        self.nugget + (self.sill - self.nugget) * spherical_shape(x)
    }

    /// Covariance `sill - gamma(h)`.
    #[inline]
    pub fn covariance(&self, h: T) -> T {
        self.sill - self.gamma(h)
    }
}

#[inline]
fn spherical_shape<T: Scalar>(x: T) -> T {
    if x >= T::one() {
        T::one()
    } else {
        T::lit(1.5) * x - T::lit(0.5) * x * x * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VariogramBin<T> {
    /// Mean separation of the pairs in the bin.
    pub lag: T,
    pub semivariance: T,
    pub pair_count: usize,
}

/// Matheron estimator over `n_bins` equal-width bins spanning
/// `(0, max pairwise distance]`. Empty bins are omitted.
pub fn empirical_variogram<T: Scalar>(
    points: &[(Cell, T)],
    spec: &GridSpec,
    n_bins: usize,
) -> Result<Vec<VariogramBin<T>>> {
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be positive".into()));
    }
    let scale = T::lit(spec.cell_size_m());
    let dist = |a: Cell, b: Cell| T::from_usize_lossy(a.distance2(b)).sqrt() * scale;

    let mut max_d = T::zero();
    for (i, &(a, _)) in points.iter().enumerate() {
        for &(b, _) in &points[i + 1..] {
            max_d = max_d.max(dist(a, b));
        }
    }
    if max_d <= T::zero() {
        return Err(Error::InsufficientData {
            needed: 2,
            got: 1,
        });
    }
    let width = max_d / T::from_usize_lossy(n_bins);

    let mut sum_sq = vec![T::zero(); n_bins];
    let mut sum_lag = vec![T::zero(); n_bins];
    let mut count = vec![0usize; n_bins];
    for (i, &(a, va)) in points.iter().enumerate() {
        for &(b, vb) in &points[i + 1..] {
            let d = dist(a, b);
            let bin = ((d / width).ceil().to_usize().unwrap_or(1))
                .saturating_sub(1)
                .min(n_bins - 1);
            let diff = va - vb;
            sum_sq[bin] += diff * diff;
            sum_lag[bin] += d;
            count[bin] += 1;
        }
    }
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let n = T::from_usize_lossy(count[b]);
            VariogramBin {
                lag: sum_lag[b] / n,
                semivariance: sum_sq[b] / (T::lit(2.0) * n),
                pair_count: count[b],
            }
        })
        .collect())
}

/// Pair-count weighted least-squares fit of a spherical model.
///
/// For a fixed range the model is linear in (nugget, partial sill), so those
/// are solved in closed form with the bound constraints applied; the range
/// is found by a log-spaced scan followed by golden-section refinement.
pub fn fit_spherical<T: Scalar>(bins: &[VariogramBin<T>]) -> Result<VariogramModel<T>> {
    if bins.len() < 3 {
        return Err(Error::TooFewBins(bins.len()));
    }
    let eps = T::lit(SILL_FLOOR);
    let min_lag = bins.iter().map(|b| b.lag).fold(T::infinity(), T::min);
    let max_lag = bins.iter().map(|b| b.lag).fold(T::zero(), T::max);
    if bins.iter().all(|b| b.semivariance <= T::zero()) {
        return VariogramModel::spherical(T::zero(), eps, max_lag.max(T::one()));
    }

    let lo = (min_lag * T::lit(0.5)).max(T::lit(1e-9));
    let hi = max_lag.max(lo * T::lit(1.0001));
    let scan = 64usize;
    let ratio = (hi / lo).ln() / T::from_usize_lossy(scan - 1);
    let candidate = |k: usize| lo * (ratio * T::from_usize_lossy(k)).exp();

    let mut best_k = 0;
    let mut best = T::infinity();
    for k in 0..scan {
        let (_, _, ssr) = solve_linear_part(bins, candidate(k), eps);
        if ssr < best {
            best = ssr;
            best_k = k;
        }
    }
    let mut a = candidate(best_k.saturating_sub(1));
    let mut b = candidate((best_k + 1).min(scan - 1));
    let phi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = solve_linear_part(bins, x1, eps).2;
    let mut f2 = solve_linear_part(bins, x2, eps).2;
    for _ in 0..80 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = solve_linear_part(bins, x1, eps).2;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = solve_linear_part(bins, x2, eps).2;
        }
    }
    let mut range = (a + b) / T::lit(2.0);
    if solve_linear_part(bins, range, eps).2 > best {
        range = candidate(best_k);
    }
    let (nugget, partial, _) = solve_linear_part(bins, range, eps);
    VariogramModel::spherical(nugget, nugget + partial, range)
}

/// Best (nugget, partial sill, weighted SSR) for a fixed range.
fn solve_linear_part<T: Scalar>(bins: &[VariogramBin<T>], range: T, eps: T) -> (T, T, T) {
    let (mut sw, mut swf, mut swff, mut swg, mut swfg) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for b in bins {
        let w = T::from_usize_lossy(b.pair_count);
        let f = spherical_shape(b.lag / range);
        sw += w;
        swf += w * f;
        swff += w * f * f;
        swg += w * b.semivariance;
        swfg += w * f * b.semivariance;
    }
    let det = sw * swff - swf * swf;
    let (mut nugget, mut partial) = if det.abs() > T::lit(1e-12) * sw * swff {
        ((swff * swg - swf * swfg) / det, (sw * swfg - swf * swg) / det)
    } else {
        (T::zero(), swfg / swff)
    };
    if nugget < T::zero() {
        nugget = T::zero();
        partial = swfg / swff;
    }
    if partial < eps {
        partial = eps;
        nugget = ((swg - partial * swf) / sw).max(T::zero());
    }
    let ssr = bins
        .iter()
        .map(|b| {
            let r = b.semivariance - nugget - partial * spherical_shape(b.lag / range);
            T::from_usize_lossy(b.pair_count) * r * r
        })
        .sum();
    (nugget, partial, ssr)
}

/// Conservative model used when a fit is impossible: no nugget, sill equal
/// to the sample variance (floored), range a quarter of the grid diagonal.
pub fn fallback_model<T: Scalar>(values: &[T], spec: &GridSpec) -> VariogramModel<T> {
    let n = T::from_usize_lossy(values.len().max(1));
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    VariogramModel {
        nugget: T::zero(),
        sill: var.max(T::lit(SILL_FLOOR)),
        range: T::lit(spec.diagonal() / 4.0),
        family: VariogramFamily::Spherical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec() -> GridSpec {
        GridSpec::square(20).unwrap()
    }

    #[test]
    fn model_shape() {
        let m = VariogramModel::spherical(0.0f64, 1.0, 20.0).unwrap();
        assert_eq!(m.gamma(0.0), 0.0);
        assert_eq!(m.gamma(20.0), 1.0);
        assert_eq!(m.gamma(35.0), 1.0);
        assert!((m.gamma(10.0) - (0.75 - 0.0625)).abs() < 1e-15);
        let n = VariogramModel::spherical(0.2, 1.0, 5.0).unwrap();
        assert_eq!(n.gamma(0.0), 0.0);
        assert!(n.gamma(1e-9) > 0.2);
        assert!(VariogramModel::spherical(1.0, 1.0, 5.0).is_err());
        assert!(VariogramModel::spherical(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_point_variogram() {
        let pts = [(Cell::new(0, 0), 0.0), (Cell::new(0, 1), 1.0)];
        let bins = empirical_variogram(&pts, &spec(), 5).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].semivariance, 0.5);
        assert_eq!(bins[0].pair_count, 1);
        assert_eq!(bins[0].lag, 1.0);
    }

    #[test]
    fn constant_points_zero_semivariance() {
        let pts: Vec<_> = (0..6).map(|i| (Cell::new(i, 2 * i % 7), 0.3)).collect();
        let bins = empirical_variogram(&pts, &spec(), 4).unwrap();
        assert!(bins.iter().all(|b| b.semivariance == 0.0));
        assert!(empirical_variogram(&pts[..1], &spec(), 4).is_err());
    }

    #[test]
    fn matches_all_pairs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pts: Vec<(Cell, f64)> = Vec::new();
        while pts.len() < 20 {
            let c = Cell::new(rng.random_range(0..20), rng.random_range(0..20));
            if !pts.iter().any(|p| p.0 == c) {
                pts.push((c, rng.random()));
            }
        }
        let n_bins = 7;
        let bins = empirical_variogram(&pts, &spec(), n_bins).unwrap();

        // oracle: ordered pairs, each unordered pair counted twice
        let d = |a: Cell, b: Cell| {
            (((a.row as f64 - b.row as f64).powi(2)) + (a.col as f64 - b.col as f64).powi(2)).sqrt()
        };
        let mut dmax: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                dmax = dmax.max(d(a.0, b.0));
            }
        }
        let w = dmax / n_bins as f64;
        let mut expected = Vec::new();
        for k in 0..n_bins {
            let (lo, hi) = (k as f64 * w, (k + 1) as f64 * w);
            let mut s = 0.0;
            let mut n = 0usize;
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    let dist = d(a.0, b.0);
                    let last = k == n_bins - 1 && dist >= hi;
                    if i != j && ((dist > lo && dist <= hi) || last) {
                        s += (a.1 - b.1).powi(2);
                        n += 1;
                    }
                }
            }
            if n > 0 {
                expected.push((s / (2.0 * n as f64), n / 2));
            }
        }
        assert_eq!(bins.len(), expected.len());
        for (b, (g, n)) in bins.iter().zip(expected) {
            assert_eq!(b.pair_count, n);
            assert!((b.semivariance - g).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_noiseless_model() {
        let truth = VariogramModel::spherical(0.0, 1.0, 20.0).unwrap();
        let bins: Vec<_> = (1..=40)
            .map(|h| VariogramBin {
                lag: h as f64,
                semivariance: truth.gamma(h as f64),
                pair_count: 10 + h,
            })
            .collect();
        let fit = fit_spherical(&bins).unwrap();
        assert!(fit.nugget.abs() < 0.01, "{fit:?}");
        assert!((fit.sill - 1.0).abs() < 0.01, "{fit:?}");
        assert!((fit.range - 20.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn fit_with_nugget() {
        let truth = VariogramModel::spherical(0.1, 0.9, 12.0).unwrap();
        let bins: Vec<_> = (1..=30)
            .map(|h| VariogramBin {
                lag: h as f64 * 0.8,
                semivariance: truth.gamma(h as f64 * 0.8),
                pair_count: 5,
            })
            .collect();
        let fit = fit_spherical(&bins).unwrap();
        assert!((fit.nugget - 0.1).abs() < 0.01, "{fit:?}");
        assert!((fit.sill - 0.9).abs() < 0.01, "{fit:?}");
        assert!((fit.range - 12.0).abs() < 0.12, "{fit:?}");
    }

    #[test]
    fn degenerate_fits() {
        let zeros: Vec<_> = (1..5)
            .map(|h| VariogramBin {
                lag: h as f64,
                semivariance: 0.0,
                pair_count: 3,
            })
            .collect();
        let m = fit_spherical(&zeros).unwrap();
        assert_eq!(m.nugget, 0.0);
        assert_eq!(m.sill, SILL_FLOOR);
        assert!(matches!(fit_spherical(&zeros[..2]), Err(Error::TooFewBins(2))));
    }

    #[test]
    fn fallback_shape() {
        let s = GridSpec::new(30, 40, 2.0).unwrap();
        let m = fallback_model(&[1.0, 1.0, 1.0], &s);
        assert_eq!(m.nugget, 0.0);
        assert_eq!(m.sill, SILL_FLOOR);
        // diagonal of 30x40 cells at 2 m is 100 m
        assert!((m.range - 25.0).abs() < 1e-9);
        let m = fallback_model(&[0.0, 2.0], &s);
        assert_eq!(m.sill, 1.0);
    }
}
