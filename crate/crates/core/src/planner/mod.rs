//! Score maps, Voronoi partitioning, goal selection and routing.

mod route;
mod score;
mod voronoi;
mod weights;

pub use route::{path_cost, route_astar, route_shortest, score_step_cost, SCORE_EPSILON};
pub use score::{compute_score, select_goal, select_goal_excluding, ScoreMap, ScorePlanner};
pub use voronoi::{voronoi_partition, VoronoiPartition};
pub use weights::{ScoreWeights, WEIGHT_KEYS};

use crate::grid::{GridMap, ObstacleMask};
use crate::scalar::Scalar;

/// Min-max normalisation over free cells. Blocked cells and degenerate
/// (constant) inputs map to 0.
pub fn normalize01<T: Scalar>(map: &GridMap<T>, mask: &ObstacleMask) -> GridMap<T> {
    let free = || {
        map.values()
            .iter()
            .zip(mask.blocked())
            .filter(|(_, &b)| !b)
            .map(|(&v, _)| v)
    };
    let lo = free().fold(T::infinity(), T::min);
    let hi = free().fold(T::neg_infinity(), T::max);
    let span = hi - lo;
    let values = map
        .values()
        .iter()
        .zip(mask.blocked())
        .map(|(&v, &b)| {
            if b || !(span > T::zero()) {
                T::zero()
            } else {
                (v - lo) / span
            }
        })
        .collect();
    GridMap::new(*map.spec(), map.kind(), values).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, MapKind};

    #[test]
    fn normalize_examples() {
        let spec = GridSpec::new(2, 2, 1.0).unwrap();
        let open = ObstacleMask::open(spec);
        let m = GridMap::new(spec, MapKind::Estimate, vec![2.0, 4.0, 6.0, 4.0]).unwrap();
        assert_eq!(normalize01(&m, &open).values(), &[0.0, 0.5, 1.0, 0.5]);

        let flat = GridMap::filled(spec, MapKind::Estimate, 3.0);
        assert!(normalize01(&flat, &open).values().iter().all(|&v| v == 0.0));

        let mask = ObstacleMask::new(spec, vec![false, false, false, true]).unwrap();
        let m = GridMap::new(spec, MapKind::Estimate, vec![2.0, 4.0, 6.0, 1e9]).unwrap();
        assert_eq!(normalize01(&m, &mask).values(), &[0.0, 0.5, 1.0, 0.0]);
        let nan = GridMap::new(spec, MapKind::Estimate, vec![2.0, 4.0, 6.0, f64::NAN]).unwrap();
        assert_eq!(normalize01(&nan, &mask).values(), &[0.0, 0.5, 1.0, 0.0]);
    }
}
