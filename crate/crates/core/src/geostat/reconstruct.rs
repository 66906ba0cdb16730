use serde::{Deserialize, Serialize};

use crate::agent::MeasurementLog;
use crate::error::Result;
use crate::grid::{Cell, GridMap, GridSpec, MapKind, ObstacleMask};
use crate::scalar::Scalar;

use super::dedupe_measurements;
use super::kriging::{GridPredictor, KrigingSystem};
use super::variogram::{empirical_variogram, fallback_model, fit_spherical, VariogramModel};

/// Distinct measured cells needed before kriging replaces the burn-in surrogate.
pub const MIN_MEASUREMENTS: usize = 3;
/// The variogram is refitted once this many new readings have arrived.
pub const REFIT_EVERY: usize = 10;
pub const DEFAULT_BINS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ReconstructedMap<T> {
    pub estimate: GridMap<T>,
    /// Kriging variance, or 1 everywhere during burn-in.
    pub uncertainty: GridMap<T>,
    pub n_measurements_used: usize,
    pub burn_in: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<VariogramModel<T>>,
}

impl<T: Scalar> ReconstructedMap<T> {
    /// Surrogate used before enough distinct cells exist: the mean of the
    /// raw readings (0 with none) and uniform unit uncertainty.
    pub fn burn_in(spec: GridSpec, mask: &ObstacleMask, readings: &[T]) -> Self {
        let mean = if readings.is_empty() {
            T::zero()
        } else {
            readings.iter().copied().sum::<T>() / T::from_usize_lossy(readings.len())
        };
        let estimate = GridMap::from_fn(spec, MapKind::Estimate, |c| {
            if mask.is_free(c) {
                mean
            } else {
                T::nan()
            }
        });
        Self {
            estimate,
            uncertainty: GridMap::filled(spec, MapKind::Uncertainty, T::one()),
            n_measurements_used: readings.len(),
            burn_in: true,
            model: None,
        }
    }
}

/// Turns a growing measurement log into estimate and uncertainty maps,
/// caching the variogram model between refits.
#[derive(Debug, Clone)]
pub struct Reconstructor<T> {
    spec: GridSpec,
    mask: ObstacleMask,
    n_bins: usize,
    refit_every: usize,
    model: Option<VariogramModel<T>>,
    fitted_at: usize,
    cache: Option<(KrigingSystem<T>, GridPredictor<T>)>,
}

impl<T: Scalar> Reconstructor<T> {
    pub fn new(mask: ObstacleMask) -> Self {
        Self {
            spec: *mask.spec(),
            mask,
            n_bins: DEFAULT_BINS,
            refit_every: REFIT_EVERY,
            model: None,
            fitted_at: 0,
            cache: None,
        }
    }

    pub fn with_refit_every(mut self, n: usize) -> Self {
        self.refit_every = n.max(1);
        self
    }

    pub fn mask(&self) -> &ObstacleMask {
        &self.mask
    }

    pub fn model(&self) -> Option<&VariogramModel<T>> {
        self.model.as_ref()
    }

    pub fn reconstruct(&mut self, log: &MeasurementLog<T>) -> Result<ReconstructedMap<T>> {
        let points = dedupe_measurements(log);
        if points.len() < MIN_MEASUREMENTS {
            self.cache = None;
            let raw: Vec<T> = log.entries().iter().map(|m| m.value).collect();
            return Ok(ReconstructedMap::burn_in(self.spec, &self.mask, &raw));
        }
        if self.model.is_none() || log.len() >= self.fitted_at + self.refit_every {
            self.model = Some(self.fit(&points));
            self.fitted_at = log.len();
        }
        let model = self.model.expect("model fitted above");
        let (sys, grid) = self.system_for(&points, model)?;
        let mut map = grid.predict(sys);
        map.n_measurements_used = log.len();
        Ok(map)
    }

    /// Reuses the cached factorisation when the model is unchanged and the
    /// cached cells are a prefix of `points` (dedupe keeps first-appearance
    /// order, so new cells always append).
    fn system_for(
        &mut self,
        points: &[(Cell, T)],
        model: VariogramModel<T>,
    ) -> Result<(&KrigingSystem<T>, &GridPredictor<T>)> {
        let reusable = self.cache.as_ref().is_some_and(|(sys, _)| {
            *sys.model() == model
                && sys.len() <= points.len()
                && sys.cells().iter().zip(points).all(|(c, p)| *c == p.0)
        });
        let mut extended = false;
        if reusable {
            let (sys, _) = self.cache.as_mut().expect("checked");
            let n = sys.len();
            extended = sys.extend(&points[n..]).is_ok()
                && sys.set_values(points.iter().map(|p| p.1).collect()).is_ok();
        }
        if !extended {
            let sys = KrigingSystem::new(points, model, self.spec)?;
            self.cache = Some((sys, GridPredictor::new(&self.mask)));
        }
        let (sys, grid) = self.cache.as_mut().expect("set above");
        grid.sync(sys);
        Ok((sys, grid))
    }

    fn fit(&self, points: &[(Cell, T)]) -> VariogramModel<T> {
        empirical_variogram(points, &self.spec, self.n_bins)
            .and_then(|bins| fit_spherical(&bins))
            .unwrap_or_else(|_| {
                let values: Vec<T> = points.iter().map(|p| p.1).collect();
                fallback_model(&values, &self.spec)
            })
    }
}
