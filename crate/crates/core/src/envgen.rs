//! Synthetic ground-truth environments: fractional Brownian fields, S-curve
//! attenuation and canned obstacle layouts.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridMap, GridSpec, MapKind, ObstacleMask};
use crate::scalar::Scalar;

pub const DEFAULT_HURST: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbfParams {
    pub hurst: f64,
    pub seed: u64,
    pub spec: GridSpec,
}

impl FbfParams {
    pub fn new(spec: GridSpec, seed: u64) -> Self {
        Self {
            hurst: DEFAULT_HURST,
            seed,
            spec,
        }
    }

    pub fn with_hurst(mut self, hurst: f64) -> Self {
        self.hurst = hurst;
        self
    }
}

/// Fractional Brownian field by spectral synthesis.
///
/// Gaussian white noise is shaped by the power spectrum `|k|^-(2H+2)` on a
/// periodic square of at least twice the requested extent, inverse
/// transformed, and cropped so the wrap-around seam never appears in the
/// output. The result is min-max normalised to `[0, 1]`.
pub fn generate_fbf<T: Scalar>(params: &FbfParams) -> Result<GridMap<T>> {
    let h = params.hurst;
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("hurst {h} outside (0, 1)")));
    }
    let spec = params.spec;
    let n = (2 * spec.rows().max(spec.cols())).next_power_of_two();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let exponent = -(h + 1.0);

    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n * n);
    for i in 0..n {
        let ky = wrap_freq(i, n);
        for j in 0..n {
            let kx = wrap_freq(j, n);
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let k2 = kx * kx + ky * ky;
            let amp = if k2 == 0.0 { 0.0 } else { k2.sqrt().powf(exponent) };
            buf.push(Complex::new(re * amp, im * amp));
        }
    }
    ifft2(&mut buf, n);

    let mut raw = Vec::with_capacity(spec.len());
    for r in 0..spec.rows() {
        for c in 0..spec.cols() {
            raw.push(buf[r * n + c].re);
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateField { seed: params.seed });
    }
    let span = hi - lo;
    let values = raw
        .into_iter()
        .map(|v| T::lit(((v - lo) / span).clamp(0.0, 1.0)))
        .collect();
    GridMap::new(spec, MapKind::Truth, values)
}

fn wrap_freq(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

fn ifft2(buf: &mut [Complex<f64>], n: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SCurveParams {
    /// Input value mapped to 0.5.
    pub threshold_value: f64,
    /// Larger values push outputs towards 0 or 1.
    pub curve_power: f64,
}

impl SCurveParams {
    pub fn new(threshold_value: f64, curve_power: f64) -> Result<Self> {
        let p = Self {
            threshold_value,
            curve_power,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_value > 0.0 && self.threshold_value < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold_value {} outside (0, 1)",
                self.threshold_value
            )));
        }
        if !(self.curve_power.is_finite() && self.curve_power > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "curve_power {} must be finite and positive",
                self.curve_power
            )));
        }
        Ok(())
    }
}

/// `x^k / (x^k + (t(1-x)/(1-t))^k)`, evaluated as `1 / (1 + r^k)` with
/// `r = t(1-x) / ((1-t)x)` so large powers neither underflow nor produce 0/0.
pub fn scurve<T: Scalar>(x: T, params: &SCurveParams) -> Result<T> {
    params.validate()?;
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain { value: x.as_f64() });
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    let t = T::lit(params.threshold_value);
    let k = T::lit(params.curve_power);
    let one = T::one();
    let r = (t * (one - x)) / ((one - t) * x);
    Ok(one / (one + r.powf(k)))
}

pub fn apply_scurve<T: Scalar>(map: &GridMap<T>, params: &SCurveParams) -> Result<GridMap<T>> {
    if map.kind() != MapKind::Truth {
        return Err(Error::InvalidParameter(format!(
            "S-curve applies to truth maps, got {:?}",
            map.kind()
        )));
    }
    let values = map
        .values()
        .iter()
        .map(|&v| scurve(v, params))
        .collect::<Result<Vec<T>>>()?;
    GridMap::new(*map.spec(), MapKind::Truth, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObstacleLayout {
    None,
    EdgeReachingBars,
    InteriorBlocks,
    Scattered,
}

impl ObstacleLayout {
    pub const ALL: [ObstacleLayout; 4] = [
        ObstacleLayout::None,
        ObstacleLayout::EdgeReachingBars,
        ObstacleLayout::InteriorBlocks,
        ObstacleLayout::Scattered,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObstacleLayout::None => "none",
            ObstacleLayout::EdgeReachingBars => "edge-reaching-bars",
            ObstacleLayout::InteriorBlocks => "interior-blocks",
            ObstacleLayout::Scattered => "scattered",
        }
    }
}

impl FromStr for ObstacleLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Layout {
                name: s.to_string(),
                reason: "unknown layout".into(),
            })
    }
}

/// Builds a named obstacle arrangement scaled to `spec`.
pub fn obstacle_layout(layout: ObstacleLayout, spec: GridSpec) -> Result<ObstacleMask> {
    let rows = spec.rows();
    let cols = spec.cols();
    let mut blocked = vec![false; spec.len()];
    let mut fill = |r0: usize, r1: usize, c0: usize, c1: usize| {
        for r in r0..r1.min(rows) {
            for c in c0..c1.min(cols) {
                blocked[r * cols + c] = true;
            }
        }
    };
    match layout {
        ObstacleLayout::None => {}
        ObstacleLayout::EdgeReachingBars => {
            // Two walls, one hanging from the top edge and one rising from
            // the bottom, forming an S-shaped corridor.
            let w = (cols / 25).max(1);
            let c1 = cols / 3;
            let c2 = 2 * cols / 3;
            fill(0, rows * 13 / 20, c1, c1 + w);
            fill(rows * 7 / 20, rows, c2, c2 + w);
        }
        ObstacleLayout::InteriorBlocks => {
            for (fr, fc) in [(0.2, 0.2), (0.2, 0.6), (0.6, 0.2), (0.6, 0.6)] {
                let r0 = (rows as f64 * fr).round() as usize;
                let c0 = (cols as f64 * fc).round() as usize;
                let h = (rows / 5).max(1);
                let w = (cols / 5).max(1);
                fill(r0, r0 + h, c0, c0 + w);
            }
        }
        ObstacleLayout::Scattered => {
            let size = (rows.min(cols) / 25).max(1);
            let pitch = 5 * size;
            let mut k: u64 = 0;
            let mut r = pitch / 2;
            while r + size < rows {
                let mut c = pitch / 2;
                while c + size < cols {
                    // fixed jitter keeps the layout a pure function of the grid
                    k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let jr = ((k >> 33) as usize) % (size + 1);
                    let jc = ((k >> 45) as usize) % (size + 1);
                    if (k >> 60) & 0x3 != 0 {
                        fill(r + jr, r + jr + size, c + jc, c + jc + size);
                    }
                    c += pitch;
                }
                r += pitch;
            }
        }
    }
    let mask = ObstacleMask::new(spec, blocked).map_err(|e| Error::Layout {
        name: layout.name().into(),
        reason: e.to_string(),
    })?;
    if !mask.is_connected() {
        return Err(Error::Layout {
            name: layout.name().into(),
            reason: format!("free space disconnected at {rows}x{cols}"),
        });
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fbf_deterministic_and_normalized() {
        let p = FbfParams::new(GridSpec::square(100).unwrap(), 42);
        let a: GridMap<f64> = generate_fbf(&p).unwrap();
        let b: GridMap<f64> = generate_fbf(&p).unwrap();
        assert_eq!(a.values(), b.values());
        let lo = a.values().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
        let c: GridMap<f64> = generate_fbf(&FbfParams::new(p.spec, 43)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn fbf_rejects_bad_hurst() {
        let p = FbfParams::new(GridSpec::square(8).unwrap(), 1).with_hurst(1.0);
        assert!(generate_fbf::<f64>(&p).is_err());
    }

    #[test]
    fn scurve_examples() {
        let half = SCurveParams::new(0.5, 1.0).unwrap();
        assert!((scurve(0.37, &half).unwrap() - 0.37f64).abs() < 1e-12);
        let p = SCurveParams::new(0.5, 10.0).unwrap();
        // 0.4^10 / (0.4^10 + 0.6^10)
        let expect = 0.4f64.powi(10) / (0.4f64.powi(10) + 0.6f64.powi(10));
        assert!((scurve(0.4, &p).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.01704).abs() < 1e-5);
        for t in [0.1, 0.3, 0.77, 0.999] {
            for k in [0.2, 1.0, 7.5, 300.0] {
                let p = SCurveParams::new(t, k).unwrap();
                assert_eq!(scurve(t, &p).unwrap(), 0.5);
                assert_eq!(scurve(0.0, &p).unwrap(), 0.0);
                assert_eq!(scurve(1.0, &p).unwrap(), 1.0);
            }
        }
        assert!(matches!(scurve(1.1, &p), Err(Error::Domain { .. })));
        assert!(SCurveParams::new(1.0, 2.0).is_err());
        assert!(SCurveParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn apply_scurve_examples() {
        // [0, 0.4, 1] plus a midpoint cell to fill a 2x2 grid
        let spec = GridSpec::square(2).unwrap();
        let map = GridMap::new(spec, MapKind::Truth, vec![0.0f64, 0.4, 1.0, 0.5]).unwrap();
        let p = SCurveParams::new(0.5, 10.0).unwrap();
        let out = apply_scurve(&map, &p).unwrap();
        assert_eq!(out.values()[0], 0.0);
        assert!((out.values()[1] - 0.017046).abs() < 1e-6);
        assert_eq!(out.values()[2], 1.0);
        assert_eq!(out.values()[3], 0.5);
        let flat = GridMap::filled(spec, MapKind::Truth, 0.5);
        assert_eq!(apply_scurve(&flat, &p).unwrap().values(), flat.values());
    }

    #[test]
    fn scurve_preserves_extreme_cells() {
        let map: GridMap<f64> =
            generate_fbf(&FbfParams::new(GridSpec::square(32).unwrap(), 5)).unwrap();
        let p = SCurveParams::new(0.3, 4.0).unwrap();
        let out = apply_scurve(&map, &p).unwrap();
        let argmax = |m: &GridMap<f64>| {
            m.values()
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b })
                .0
        };
        assert_eq!(argmax(&map), argmax(&out));
    }

    proptest! {
        #[test]
        fn scurve_monotone(t in 0.01f64..0.99, k in 0.05f64..50.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = SCurveParams::new(t, k).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let fl = scurve(lo, &p).unwrap();
            let fh = scurve(hi, &p).unwrap();
            prop_assert!(fl <= fh);
            prop_assert!((0.0..=1.0).contains(&fl));
        }
    }

    #[test]
    fn layouts_at_50() {
        let spec = GridSpec::square(50).unwrap();
        let none = obstacle_layout(ObstacleLayout::None, spec).unwrap();
        assert_eq!(none.free_count(), 2500);
        let blocks = obstacle_layout(ObstacleLayout::InteriorBlocks, spec).unwrap();
        let f = blocks.blocked_fraction();
        assert!(f > 0.0 && f < 0.5, "{f}");
        assert!(blocks.is_connected());
        let bars = obstacle_layout(ObstacleLayout::EdgeReachingBars, spec).unwrap();
        let on_boundary = spec
            .cells()
            .filter(|c| c.row == 0 || c.col == 0 || c.row == 49 || c.col == 49)
            .any(|c| bars.is_blocked(c));
        assert!(on_boundary);
        let sc = obstacle_layout(ObstacleLayout::Scattered, spec).unwrap();
        assert!(sc.blocked_fraction() > 0.0);
        for l in ObstacleLayout::ALL {
            assert_eq!(l.name().parse::<ObstacleLayout>().unwrap(), l);
        }
        assert!("spiral".parse::<ObstacleLayout>().is_err());
    }

    #[test]
    fn layouts_connected_across_sizes() {
        for n in [10, 15, 20, 37, 64, 100] {
            for l in ObstacleLayout::ALL {
                let m = obstacle_layout(l, GridSpec::square(n).unwrap()).unwrap();
                assert!(m.is_connected(), "{} at {n}", l.name());
            }
        }
    }
}
