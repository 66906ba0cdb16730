use serde::{Deserialize, Serialize};
use sbs_core::geostat::MIN_MEASUREMENTS;
use sbs_core::planner::ScoreWeights;
use sbs_core::GridSpec;

use crate::error::{FieldError, Result};
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldStrategy {
    Sbs,
    Wandering,
}

/// Where a newly joined operator is sent before their first reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementMode {
    Center,
    Edges,
    /// No start waypoint; the first goal follows the first reading.
    UserChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Corner of cell (0, 0).
    pub origin: GeoPoint,
    /// (north-south, east-west) in metres.
    #[serde(default = "default_extent")]
    pub field_extent_m: [f64; 2],
    #[serde(default = "default_cell")]
    pub cell_size_m: f64,
    #[serde(default = "default_strategy")]
    pub strategy: FieldStrategy,
    #[serde(default)]
    pub weights: ScoreWeights,
    #[serde(default = "default_placement")]
    pub placement_mode: PlacementMode,
    #[serde(default = "default_target")]
    pub reading_target: usize,
    #[serde(default = "default_min_measurements")]
    pub min_measurements_for_kriging: usize,
    /// Seeds the random goals of wandering sessions.
    #[serde(default)]
    pub seed: u64,
}

fn default_extent() -> [f64; 2] {
    [150.0, 150.0]
}
fn default_cell() -> f64 {
    10.0
}
fn default_strategy() -> FieldStrategy {
    FieldStrategy::Sbs
}
fn default_placement() -> PlacementMode {
    PlacementMode::Center
}
fn default_target() -> usize {
    80
}
fn default_min_measurements() -> usize {
    MIN_MEASUREMENTS
}

impl SessionConfig {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            field_extent_m: default_extent(),
            cell_size_m: default_cell(),
            strategy: default_strategy(),
            weights: ScoreWeights::default(),
            placement_mode: default_placement(),
            reading_target: default_target(),
            min_measurements_for_kriging: default_min_measurements(),
            seed: 0,
        }
    }

    /// Rows and columns, or an error when the extent is not a whole
    /// number of cells.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let c = self.cell_size_m;
        if !(c.is_finite() && c > 0.0) {
            return Err(FieldError::Invalid(format!("cell size {c} must be positive")));
        }
        let whole = |extent: f64, what: &str| {
            let n = extent / c;
            let r = n.round();
            if !(extent.is_finite() && r >= 1.0 && (n - r).abs() <= 1e-9 * r) {
                return Err(FieldError::Invalid(format!(
                    "{what} extent {extent} m is not a whole number of {c} m cells"
                )));
            }
            Ok(r as usize)
        };
        Ok((whole(self.field_extent_m[0], "north-south")?, whole(self.field_extent_m[1], "east-west")?))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let (rows, cols) = self.dims()?;
        GridSpec::new(rows, cols, self.cell_size_m).map_err(|e| FieldError::Invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.origin.is_valid() {
            return Err(FieldError::Invalid(format!("origin {:?} is not a valid position", self.origin)));
        }
        self.grid()?;
        if self.reading_target == 0 {
            return Err(FieldError::Invalid("reading_target must be positive".into()));
        }
        if self.min_measurements_for_kriging != MIN_MEASUREMENTS {
            return Err(FieldError::Invalid(format!(
                "min_measurements_for_kriging must be {MIN_MEASUREMENTS}"
            )));
        }
        if self.strategy == FieldStrategy::Sbs {
            self.weights.validate().map_err(|e| FieldError::Invalid(e.to_string()))?;
        }
        Ok(())
    }
}
