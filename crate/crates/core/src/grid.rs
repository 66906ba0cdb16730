//! Grid geometry, dense maps and obstacle masks.
//!
//! Values are stored row-major and addressed by `(row, col)`. Cells are
//! 8-connected: orthogonal steps have length 1, diagonal steps `√2`, and a
//! diagonal step is only allowed when neither of the two orthogonal cells it
//! passes between is blocked.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    rows: usize,
    cols: usize,
    cell_size_m: f64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize, cell_size_m: f64) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid must be at least 2x2, got {rows}x{cols}"
            )));
        }
        if !(cell_size_m.is_finite() && cell_size_m > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "cell size must be positive, got {cell_size_m}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            cell_size_m,
        })
    }

    /// Unit-cell grid, the simulation default.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, 1.0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn check(&self, cell: Cell) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                row: cell.row,
                col: cell.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    #[inline]
    pub fn index_unchecked(&self, cell: Cell) -> usize {
        cell.row * self.cols + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.cols, index % self.cols)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell_at(i))
    }

    /// Geometric centre of the domain in fractional cell coordinates.
    pub fn center_point(&self) -> (f64, f64) {
        ((self.rows as f64 - 1.0) / 2.0, (self.cols as f64 - 1.0) / 2.0)
    }

    /// The cell holding the domain centre (integer halves).
    pub fn center_cell(&self) -> Cell {
        Cell::new(self.rows / 2, self.cols / 2)
    }

    /// Diagonal length in distance units (cells scaled by cell size).
    pub fn diagonal(&self) -> f64 {
        ((self.rows * self.rows + self.cols * self.cols) as f64).sqrt() * self.cell_size_m
    }
}

/// Row-major position of `cell`.
pub fn cell_index(spec: &GridSpec, cell: Cell) -> Result<usize> {
    spec.check(cell)?;
    Ok(spec.index_unchecked(cell))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Euclidean distance in cell units.
    pub fn distance(self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        (dr * dr + dc * dc).sqrt()
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    /// Squared distance in whole cells.
    pub fn distance2(self, other: Cell) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.row, self.col].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [row, col] = <[usize; 2]>::deserialize(d)?;
        Ok(Cell::new(row, col))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Truth,
    Estimate,
    Uncertainty,
    Score,
}

/// Dense scalar field over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap<T> {
    spec: GridSpec,
    kind: MapKind,
    values: Vec<T>,
}

impl<T: Scalar> GridMap<T> {
    pub fn new(spec: GridSpec, kind: MapKind, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                spec.rows(),
                spec.cols()
            )));
        }
        Ok(Self { spec, kind, values })
    }

    pub fn filled(spec: GridSpec, kind: MapKind, value: T) -> Self {
        Self {
            spec,
            kind,
            values: vec![value; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, kind: MapKind, mut f: impl FnMut(Cell) -> T) -> Self {
        let values = spec.cells().map(&mut f).collect();
        Self { spec, kind, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: MapKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> T {
        self.values[self.spec.index_unchecked(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.spec.index_unchecked(cell);
        self.values[i] = value;
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            spec: self.spec,
            kind: self.kind,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> GridMap<U> {
        GridMap {
            spec: self.spec,
            kind: self.kind,
            values: self
                .values
                .iter()
                .map(|v| U::from_f64(v.as_f64()).unwrap_or_else(U::nan))
                .collect(),
        }
    }

    pub fn same_shape<U>(&self, other: &GridMap<U>) -> Result<()> {
        if self.spec.rows() == other.spec.rows() && self.spec.cols() == other.spec.cols() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.spec.rows(),
                self.spec.cols(),
                other.spec.rows(),
                other.spec.cols()
            )))
        }
    }
}

/// Impassable cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMask {
    spec: GridSpec,
    blocked: Vec<bool>,
}

impl ObstacleMask {
    pub fn new(spec: GridSpec, blocked: Vec<bool>) -> Result<Self> {
        if blocked.len() != spec.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} mask entries for a {}x{} grid",
                blocked.len(),
                spec.rows(),
                spec.cols()
            )));
        }
        if blocked.iter().all(|&b| b) {
            return Err(Error::InvalidParameter(
                "obstacle mask has no free cell".into(),
            ));
        }
        Ok(Self { spec, blocked })
    }

    pub fn open(spec: GridSpec) -> Self {
        Self {
            spec,
            blocked: vec![false; spec.len()],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn blocked(&self) -> &[bool] {
        &self.blocked
    }

    #[inline]
    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[self.spec.index_unchecked(cell)]
    }

    #[inline]
    pub fn is_free(&self, cell: Cell) -> bool {
        self.spec.contains(cell) && !self.is_blocked(cell)
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.spec.cells().filter(move |&c| !self.is_blocked(c))
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| !b).count()
    }

    pub fn blocked_fraction(&self) -> f64 {
        1.0 - self.free_count() as f64 / self.spec.len() as f64
    }

    pub fn matches<T>(&self, map: &GridMap<T>) -> Result<()> {
        if self.spec.rows() == map.spec.rows() && self.spec.cols() == map.spec.cols() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("mask and map differ in shape".into()))
        }
    }

    /// Number of 8-connected components of free space (respecting the
    /// corner-cutting rule).
    pub fn free_components(&self) -> usize {
        let mut seen = vec![false; self.spec.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in self.free_cells() {
            let si = self.spec.index_unchecked(start);
            if seen[si] {
                continue;
            }
            components += 1;
            seen[si] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                for n in neighbors8(self, c) {
                    let ni = self.spec.index_unchecked(n.cell);
                    if !seen[ni] {
                        seen[ni] = true;
                        queue.push_back(n.cell);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.free_components() == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub cell: Cell,
    pub diagonal: bool,
}

impl Neighbor {
    #[inline]
    pub fn length<T: Scalar>(&self) -> T {
        if self.diagonal {
            T::lit(std::f64::consts::SQRT_2)
        } else {
            T::one()
        }
    }
}

const OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Free cells reachable in one step from `cell`.
pub fn neighbors8(mask: &ObstacleMask, cell: Cell) -> impl Iterator<Item = Neighbor> + '_ {
    let spec = mask.spec;
    OFFSETS.iter().filter_map(move |&(dr, dc)| {
        let r = cell.row as isize + dr;
        let c = cell.col as isize + dc;
        if r < 0 || c < 0 || r >= spec.rows() as isize || c >= spec.cols() as isize {
            return None;
        }
        let next = Cell::new(r as usize, c as usize);
        if mask.is_blocked(next) {
            return None;
        }
        let diagonal = dr != 0 && dc != 0;
        if diagonal {
            let a = Cell::new(cell.row, next.col);
            let b = Cell::new(next.row, cell.col);
            if mask.is_blocked(a) && mask.is_blocked(b) {
                return None;
            }
        }
        Some(Neighbor {
            cell: next,
            diagonal,
        })
    })
}

// ---- gridmap/json wire format -------------------------------------------

#[derive(Serialize, Deserialize)]
struct MapWire<T> {
    rows: usize,
    cols: usize,
    cell_size_m: f64,
    kind: MapKind,
    values: Vec<Option<T>>,
}

impl<T: Scalar> Serialize for GridMap<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapWire {
            rows: self.spec.rows,
            cols: self.spec.cols,
            cell_size_m: self.spec.cell_size_m,
            kind: self.kind,
            // NaN marks blocked cells in estimates; JSON has no NaN.
            values: self
                .values
                .iter()
                .map(|&v| if v.is_nan() { None } else { Some(v) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for GridMap<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = MapWire::<T>::deserialize(d)?;
        let spec = GridSpec::new(w.rows, w.cols, w.cell_size_m).map_err(serde::de::Error::custom)?;
        let values = w.values.into_iter().map(|v| v.unwrap_or_else(T::nan)).collect();
        GridMap::new(spec, w.kind, values).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct MaskWire {
    rows: usize,
    cols: usize,
    cell_size_m: f64,
    blocked: Vec<bool>,
}

impl Serialize for ObstacleMask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MaskWire {
            rows: self.spec.rows,
            cols: self.spec.cols,
            cell_size_m: self.spec.cell_size_m,
            blocked: self.blocked.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ObstacleMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = MaskWire::deserialize(d)?;
        let spec = GridSpec::new(w.rows, w.cols, w.cell_size_m).map_err(serde::de::Error::custom)?;
        ObstacleMask::new(spec, w.blocked).map_err(serde::de::Error::custom)
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct W {
            rows: usize,
            cols: usize,
            cell_size_m: f64,
        }
        W {
            rows: self.rows,
            cols: self.cols,
            cell_size_m: self.cell_size_m,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct W {
            rows: usize,
            cols: usize,
            cell_size_m: f64,
        }
        let w = W::deserialize(d)?;
        GridSpec::new(w.rows, w.cols, w.cell_size_m).map_err(serde::de::Error::custom)
    }
}
