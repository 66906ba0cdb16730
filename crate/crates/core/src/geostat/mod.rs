//! Geostatistics: variogram estimation and fitting, and Ordinary Kriging.

mod kriging;
mod reconstruct;
mod variogram;

pub use kriging::{krige, GridPredictor, KrigingSystem, DEFAULT_JITTER};
pub use reconstruct::{ReconstructedMap, Reconstructor, MIN_MEASUREMENTS, REFIT_EVERY};
pub use variogram::{
    empirical_variogram, fallback_model, fit_spherical, VariogramBin, VariogramFamily,
    VariogramModel, SILL_FLOOR,
};

use std::collections::HashMap;

use crate::agent::MeasurementLog;
use crate::grid::Cell;
use crate::scalar::Scalar;

/// One entry per distinct cell, holding the mean of all readings there, in
/// order of first appearance.
pub fn dedupe_measurements<T: Scalar>(log: &MeasurementLog<T>) -> Vec<(Cell, T)> {
    let mut order: Vec<Cell> = Vec::new();
    let mut acc: HashMap<Cell, (T, usize)> = HashMap::new();
    for m in log.entries() {
        let e = acc.entry(m.cell).or_insert_with(|| {
            order.push(m.cell);
            (T::zero(), 0)
        });
        e.0 += m.value;
        e.1 += 1;
    }
    order
        .into_iter()
        .map(|c| {
            let (sum, n) = acc[&c];
            (c, sum / T::from_usize_lossy(n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentId;

    #[test]
    fn dedupe_examples() {
        let c1 = Cell::new(1, 1);
        let mut log = MeasurementLog::new();
        log.record(AgentId(0), c1, 0.2f64).unwrap();
        assert_eq!(dedupe_measurements(&log), vec![(c1, 0.2)]);
        log.record(AgentId(0), c1, 0.4).unwrap();
        let d = dedupe_measurements(&log);
        assert_eq!(d.len(), 1);
        assert!((d[0].1 - 0.3).abs() < 1e-15);
        assert!(dedupe_measurements(&MeasurementLog::<f64>::new()).is_empty());
    }

    #[test]
    fn dedupe_counts_distinct_cells() {
        // walk that revisits: 800 readings over a 530-cell cycle
        let mut log = MeasurementLog::new();
        for i in 0..800usize {
            let k = i % 530;
            log.record(AgentId(0), Cell::new(k / 40, k % 40), (k as f64).sin()).unwrap();
        }
        assert_eq!(log.distinct_cells(), 530);
        assert_eq!(dedupe_measurements(&log).len(), 530);
    }
}
