//! Ordinary Kriging in covariance form.
//!
//! With `C` the point covariance matrix (`sill - gamma`), `u = C⁻¹1`,
//! `a = 1ᵀu` and `c0` the covariances between the data and a target cell,
//! the ordinary kriging weights are `λ = C⁻¹c0 + μu` with Lagrange
//! multiplier `μ = (1 - c0ᵀu) / a`, giving
//!
//! ```text
//! estimate = c0ᵀ C⁻¹v + μ · uᵀv
//! variance = sill - |L⁻¹c0|² + μ² a
//! ```
//!
//! where `C = LLᵀ`. One Cholesky factorisation is shared by every target
//! cell; the estimate costs O(n) per cell and the variance one triangular
//! solve.

use crate::error::{Error, Result};
use crate::grid::{Cell, GridMap, GridSpec, MapKind, ObstacleMask};
use crate::scalar::Scalar;

use super::reconstruct::{ReconstructedMap, MIN_MEASUREMENTS};
use super::variogram::VariogramModel;

/// Added to the covariance diagonal for conditioning.
pub const DEFAULT_JITTER: f64 = 1e-10;

const JITTER_STEPS: [f64; 3] = [1.0, 1e3, 1e6];

/// Factorised kriging system for one set of distinct data points.
///
/// The Cholesky factor is built one row per point, so a system can be
/// extended with new points without refactoring; the result is bitwise
/// identical to factoring the full set from scratch.
#[derive(Debug, Clone)]
pub struct KrigingSystem<T> {
    model: VariogramModel<T>,
    spec: GridSpec,
    cells: Vec<Cell>,
    values: Vec<T>,
    /// Packed lower Cholesky factor; row i starts at i(i+1)/2.
    chol: Vec<T>,
    /// C⁻¹1
    u: Vec<T>,
    /// C⁻¹v
    alpha: Vec<T>,
    a: T,
    u_dot_v: T,
    /// Covariance by squared cell distance.
    cov_table: Vec<T>,
    jitter: T,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl<T: Scalar> KrigingSystem<T> {
    pub fn new(points: &[(Cell, T)], model: VariogramModel<T>, spec: GridSpec) -> Result<Self> {
        if points.len() < MIN_MEASUREMENTS {
            return Err(Error::InsufficientData {
                needed: MIN_MEASUREMENTS,
                got: points.len(),
            });
        }
        let max_d2 = (spec.rows() - 1).pow(2) + (spec.cols() - 1).pow(2);
        let scale = T::lit(spec.cell_size_m());
        let cov_table: Vec<T> = (0..=max_d2)
            .map(|d2| model.covariance(T::from_usize_lossy(d2).sqrt() * scale))
            .collect();

        let mut last_err = None;
        for bump in JITTER_STEPS {
            let mut sys = Self {
                model,
                spec,
                cells: Vec::with_capacity(points.len()),
                values: Vec::new(),
                chol: Vec::with_capacity(row_start(points.len())),
                u: Vec::new(),
                alpha: Vec::new(),
                a: T::zero(),
                u_dot_v: T::zero(),
                cov_table: cov_table.clone(),
                jitter: T::lit(DEFAULT_JITTER * bump),
            };
            match points.iter().try_for_each(|p| sys.push_row(p.0)) {
                Ok(()) => {
                    sys.set_values(points.iter().map(|p| p.1).collect())?;
                    return Ok(sys);
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Singular("factorisation failed".into())))
    }

    /// Appends one Cholesky row for a new data cell.
    fn push_row(&mut self, cell: Cell) -> Result<()> {
        let i = self.cells.len();
        let base = self.chol.len();
        for j in 0..i {
            let mut s = self.cov_table[self.cells[j].distance2(cell)];
            let rj = row_start(j);
            for k in 0..j {
                s -= self.chol[base + k] * self.chol[rj + k];
            }
            self.chol.push(s / self.chol[rj + j]);
        }
        let mut d = self.model.sill + self.jitter;
        for k in 0..i {
            d -= self.chol[base + k] * self.chol[base + k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            self.chol.truncate(base);
            return Err(Error::Singular(format!(
                "non-positive pivot {d} at point {i} ({cell})"
            )));
        }
        self.chol.push(d.sqrt());
        self.cells.push(cell);
        Ok(())
    }

    /// Adds new distinct cells. On failure the system is left unchanged
    /// in its factor and the caller should rebuild with [`KrigingSystem::new`].
    pub fn extend(&mut self, points: &[(Cell, T)]) -> Result<()> {
        let n0 = self.cells.len();
        for p in points {
            if let Err(e) = self.push_row(p.0) {
                self.cells.truncate(n0);
                self.chol.truncate(row_start(n0));
                return Err(e);
            }
        }
        let mut values = std::mem::take(&mut self.values);
        values.extend(points.iter().map(|p| p.1));
        self.set_values(values)
    }

    /// Replaces the data values (same cells, same order).
    pub fn set_values(&mut self, values: Vec<T>) -> Result<()> {
        if values.len() != self.cells.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} points",
                values.len(),
                self.cells.len()
            )));
        }
        let n = self.cells.len();
        if self.u.len() != n {
            self.u = self.solve(&vec![T::one(); n]);
            self.a = self.u.iter().copied().sum();
            if !(self.a > T::zero() && self.a.is_finite()) {
                return Err(Error::Singular(format!("1ᵀC⁻¹1 = {}", self.a)));
            }
        }
        self.alpha = self.solve(&values);
        self.u_dot_v = self.u.iter().zip(&values).map(|(&x, &y)| x * y).sum();
        self.values = values;
        Ok(())
    }

    pub fn model(&self) -> &VariogramModel<T> {
        &self.model
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    #[inline]
    fn l(&self, i: usize, k: usize) -> T {
        self.chol[row_start(i) + k]
    }

    fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.cells.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let r = row_start(i);
            let mut s = y[i];
            for k in 0..i {
                s -= self.chol[r + k] * y[k];
            }
            y[i] = s / self.chol[r + i];
        }
        y
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.cells.len();
        let mut x = self.forward(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l(k, i) * x[k];
            }
            x[i] = s / self.l(i, i);
        }
        x
    }

    fn c0(&self, cell: Cell) -> Vec<T> {
        self.cells
            .iter()
            .map(|&p| self.cov_table[p.distance2(cell)])
            .collect()
    }

    /// Kriging weights and Lagrange multiplier (variogram sign convention)
    /// for one target cell.
    pub fn weights(&self, cell: Cell) -> (Vec<T>, T) {
        let c0 = self.c0(cell);
        let mut lambda = self.solve(&c0);
        let c0u: T = c0.iter().zip(&self.u).map(|(&x, &y)| x * y).sum();
        let mu = (T::one() - c0u) / self.a;
        for (l, &u) in lambda.iter_mut().zip(&self.u) {
            *l += mu * u;
        }
        (lambda, mu)
    }

    /// Estimate and kriging variance at one cell.
    pub fn predict(&self, cell: Cell) -> (T, T) {
        let c0 = self.c0(cell);
        let c0u: T = c0.iter().zip(&self.u).map(|(&x, &y)| x * y).sum();
        let c0a: T = c0.iter().zip(&self.alpha).map(|(&x, &y)| x * y).sum();
        let mu = (T::one() - c0u) / self.a;
        let q: T = self.forward(&c0).iter().map(|&x| x * x).sum();
        let est = c0a + mu * self.u_dot_v;
        let var = (self.model.sill - q + mu * mu * self.a).max(T::zero());
        (est, var)
    }

    /// Predicts every free cell; blocked cells get a NaN estimate and the
    /// largest variance found on free cells.
    pub fn predict_grid(&self, mask: &ObstacleMask) -> ReconstructedMap<T> {
        let mut g = GridPredictor::new(mask);
        g.sync(self);
        g.predict(self)
    }
}

/// Triangular solves `L⁻¹c0` for every free cell, kept row by row so that
/// new data points only cost one extra row.
#[derive(Debug, Clone)]
pub struct GridPredictor<T> {
    mask: ObstacleMask,
    targets: Vec<Cell>,
    /// Row i holds (L⁻¹c0)_i for every target.
    z: Vec<T>,
    /// Σ_i z_i² per target.
    q: Vec<T>,
    rows: usize,
}

impl<T: Scalar> GridPredictor<T> {
    pub fn new(mask: &ObstacleMask) -> Self {
        let targets: Vec<Cell> = mask.free_cells().collect();
        let m = targets.len();
        Self {
            mask: mask.clone(),
            targets,
            z: Vec::new(),
            q: vec![T::zero(); m],
            rows: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Computes rows for points added to `sys` since the last call.
    pub fn sync(&mut self, sys: &KrigingSystem<T>) {
        let m = self.targets.len();
        for i in self.rows..sys.len() {
            let p = sys.cells[i];
            let mut row: Vec<T> = self
                .targets
                .iter()
                .map(|&t| sys.cov_table[p.distance2(t)])
                .collect();
            let r = row_start(i);
            for k in 0..i {
                let l = sys.chol[r + k];
                let prev = &self.z[k * m..(k + 1) * m];
                for (x, &z) in row.iter_mut().zip(prev) {
                    *x -= l * z;
                }
            }
            let d = sys.chol[r + i];
            for (x, q) in row.iter_mut().zip(self.q.iter_mut()) {
                *x /= d;
                *q += *x * *x;
            }
            self.z.extend(row);
        }
        self.rows = sys.len();
    }

    pub fn predict(&self, sys: &KrigingSystem<T>) -> ReconstructedMap<T> {
        debug_assert_eq!(self.rows, sys.len());
        let spec = sys.spec;
        let m = self.targets.len();
        let mut c0u = vec![T::zero(); m];
        let mut c0a = vec![T::zero(); m];
        for (i, &p) in sys.cells.iter().enumerate() {
            let (ui, ai) = (sys.u[i], sys.alpha[i]);
            for (j, &t) in self.targets.iter().enumerate() {
                let c = sys.cov_table[p.distance2(t)];
                c0u[j] += c * ui;
                c0a[j] += c * ai;
            }
        }
        let mut estimate = GridMap::filled(spec, MapKind::Estimate, T::nan());
        let mut variance = GridMap::filled(spec, MapKind::Uncertainty, T::zero());
        let mut vmax = T::zero();
        for (j, &t) in self.targets.iter().enumerate() {
            let mu = (T::one() - c0u[j]) / sys.a;
            let est = c0a[j] + mu * sys.u_dot_v;
            let var = (sys.model.sill - self.q[j] + mu * mu * sys.a).max(T::zero());
            vmax = vmax.max(var);
            estimate.set(t, est);
            variance.set(t, var);
        }
        for c in spec.cells() {
            if self.mask.is_blocked(c) {
                variance.set(c, vmax);
            }
        }
        ReconstructedMap {
            estimate,
            uncertainty: variance,
            n_measurements_used: sys.len(),
            burn_in: false,
            model: Some(sys.model),
        }
    }
}

/// Ordinary Kriging of distinct points over the free cells of `mask`.
pub fn krige<T: Scalar>(
    points: &[(Cell, T)],
    model: VariogramModel<T>,
    spec: GridSpec,
    mask: &ObstacleMask,
) -> Result<ReconstructedMap<T>> {
    for p in points {
        spec.check(p.0)?;
    }
    Ok(KrigingSystem::new(points, model, spec)?.predict_grid(mask))
}
