//! Local equirectangular projection between GPS fixes and field cells.
//!
//! North and east are measured in metres from the origin corner. Row
//! indices grow northward and column indices eastward, so the origin fix
//! lands in cell (0, 0).

use serde::{Deserialize, Serialize};
use sbs_core::Cell;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite() && self.lon.is_finite() && self.lat.abs() <= 90.0 && self.lon.abs() <= 180.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("fix is {north_m:.1} m north, {east_m:.1} m east of the origin, outside the field")]
pub struct OutOfField {
    pub north_m: f64,
    pub east_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    origin: GeoPoint,
    cos_lat0: f64,
    cell_m: f64,
    rows: usize,
    cols: usize,
}

impl Projection {
    pub fn new(origin: GeoPoint, cell_m: f64, rows: usize, cols: usize) -> Self {
        Self {
            origin,
            cos_lat0: origin.lat.to_radians().cos(),
            cell_m,
            rows,
            cols,
        }
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    /// (north_m, east_m) of `p`.
    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        ((p.lat - self.origin.lat) * k, (p.lon - self.origin.lon) * k * self.cos_lat0)
    }

    pub fn to_geo(&self, north_m: f64, east_m: f64) -> GeoPoint {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        GeoPoint {
            lat: self.origin.lat + north_m / k,
            lon: self.origin.lon + east_m / (k * self.cos_lat0),
        }
    }

    /// Cell containing `p`. Fixes up to one cell outside the field are
    /// clamped onto the border.
    pub fn cell_of(&self, p: GeoPoint) -> Result<Cell, OutOfField> {
        let (north_m, east_m) = self.to_local(p);
        let inside = |x: f64, n: usize| x >= -self.cell_m && x < (n as f64 + 1.0) * self.cell_m;
        if !(inside(north_m, self.rows) && inside(east_m, self.cols)) {
            return Err(OutOfField { north_m, east_m });
        }
        let idx = |x: f64, n: usize| ((x / self.cell_m).floor().max(0.0) as usize).min(n - 1);
        Ok(Cell::new(idx(north_m, self.rows), idx(east_m, self.cols)))
    }

    pub fn cell_center_local(&self, c: Cell) -> (f64, f64) {
        ((c.row as f64 + 0.5) * self.cell_m, (c.col as f64 + 0.5) * self.cell_m)
    }

    pub fn cell_center(&self, c: Cell) -> GeoPoint {
        let (n, e) = self.cell_center_local(c);
        self.to_geo(n, e)
    }

    /// Compass bearing from `from` to `to` in degrees, 0 = north,
    /// clockwise, in [0, 360).
    pub fn bearing(&self, from: GeoPoint, to: GeoPoint) -> f64 {
        let (n0, e0) = self.to_local(from);
        let (n1, e1) = self.to_local(to);
        let b = (e1 - e0).atan2(n1 - n0).to_degrees().rem_euclid(360.0);
        if b >= 360.0 {
            0.0
        } else {
            b
        }
    }
}
