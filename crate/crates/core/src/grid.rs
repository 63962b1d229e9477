//! Analysis grid, binary layers and the constraint filter.
//!
//! Cells are addressed as `(row, col)`, with row 0 at the southern edge and
//! col 0 at the western edge. Cell `(i, j)` covers
//! `[origin_x + j*cell, origin_x + (j+1)*cell) x [origin_y + i*cell, origin_y + (i+1)*cell)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("point ({x}, {y}) lies outside the grid extent")]
    OutsideExtent { x: f64, y: f64 },
    #[error("layers were built on different grids")]
    SpecMismatch,
    #[error("degenerate polygon ring with {distinct} distinct vertices (need at least 3)")]
    DegeneratePolygon { distinct: usize },
    #[error("raster shape {found_rows}x{found_cols} does not match grid shape {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },
    #[error("elevation threshold must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("constraint category {0} supplied more than once")]
    DuplicateCategory(ConstraintCategory),
    #[error("constraint category {0} missing from stack")]
    MissingCategory(ConstraintCategory),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Geometry of the uniform analysis grid (planar meters).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub n_cols: usize,
    pub n_rows: usize,
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, cell_size: f64, n_cols: usize, n_rows: usize) -> Result<Self, GridError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        if !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(GridError::InvalidSpec("origin must be finite".into()));
        }
        if n_cols == 0 || n_rows == 0 {
            return Err(GridError::InvalidSpec(format!(
                "grid must have at least one row and column, got {n_rows}x{n_cols}"
            )));
        }
        if n_cols.checked_mul(n_rows).is_none_or(|n| n > u32::MAX as usize) {
            return Err(GridError::InvalidSpec(format!("grid {n_rows}x{n_cols} is too large")));
        }
        Ok(GridSpec {
            origin_x,
            origin_y,
            cell_size,
            n_cols,
            n_rows,
        })
    }

    /// Smallest grid with the given cell size covering a `width_m` x `height_m`
    /// extent anchored at the origin.
    pub fn covering(
        origin_x: f64,
        origin_y: f64,
        width_m: f64,
        height_m: f64,
        cell_size: f64,
    ) -> Result<Self, GridError> {
        if !(width_m.is_finite() && width_m > 0.0 && height_m.is_finite() && height_m > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "extent must be positive, got {width_m} x {height_m}"
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "cell size must be positive, got {cell_size}"
            )));
        }
        let cols = (width_m / cell_size).ceil().max(1.0);
        let rows = (height_m / cell_size).ceil().max(1.0);
        if cols > u32::MAX as f64 || rows > u32::MAX as f64 {
            return Err(GridError::InvalidSpec("grid is too large".into()));
        }
        GridSpec::new(origin_x, origin_y, cell_size, cols as usize, rows as usize)
    }

    pub fn len(&self) -> usize {
        self.n_cols * self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_x(&self) -> f64 {
        self.origin_x + self.n_cols as f64 * self.cell_size
    }

    pub fn max_y(&self) -> f64 {
        self.origin_y + self.n_rows as f64 * self.cell_size
    }

    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(cell.row < self.n_rows && cell.col < self.n_cols);
        cell.row * self.n_cols + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.n_cols, index % self.n_cols)
    }

    pub fn center_x(&self, col: usize) -> f64 {
        self.origin_x + (col as f64 + 0.5) * self.cell_size
    }

    pub fn center_y(&self, row: usize) -> f64 {
        self.origin_y + (row as f64 + 0.5) * self.cell_size
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        Point::new(self.center_x(cell.col), self.center_y(cell.row))
    }

    /// Cell containing `p`. Points on the eastern or northern outer edge
    /// belong to the last column or row.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        let col = axis_index(p.x, self.origin_x, self.cell_size, self.n_cols)?;
        let row = axis_index(p.y, self.origin_y, self.cell_size, self.n_rows)?;
        Some(Cell::new(row, col))
    }

    pub fn try_cell_of(&self, p: Point) -> Result<Cell, GridError> {
        self.cell_of(p).ok_or(GridError::OutsideExtent { x: p.x, y: p.y })
    }
}

fn axis_index(v: f64, origin: f64, size: f64, n: usize) -> Option<usize> {
    if !v.is_finite() {
        return None;
    }
    let max = origin + n as f64 * size;
    if v < origin || v > max {
        return None;
    }
    let idx = ((v - origin) / size).floor();
    if idx < 0.0 {
        return None;
    }
    Some((idx as usize).min(n - 1))
}

/// A P x Q layer of 0/1 cells.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryLayer {
    spec: GridSpec,
    cells: Vec<u8>,
}

impl BinaryLayer {
    pub fn zeros(spec: GridSpec) -> Self {
        BinaryLayer {
            cells: vec![0; spec.len()],
            spec,
        }
    }

    pub fn ones(spec: GridSpec) -> Self {
        BinaryLayer {
            cells: vec![1; spec.len()],
            spec,
        }
    }

    /// Builds a layer from row-major cells (row 0 first). Nonzero values become 1.
    pub fn from_cells(spec: GridSpec, cells: Vec<u8>) -> Result<Self, GridError> {
        if cells.len() != spec.len() {
            return Err(GridError::DimensionMismatch {
                rows: spec.n_rows,
                cols: spec.n_cols,
                found_rows: cells.len() / spec.n_cols.max(1),
                found_cols: spec.n_cols,
            });
        }
        let cells = cells.into_iter().map(|c| u8::from(c != 0)).collect();
        Ok(BinaryLayer { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.cells[self.spec.index(cell)] != 0
    }

    pub fn set(&mut self, cell: Cell, value: bool) {
        let i = self.spec.index(cell);
        self.cells[i] = u8::from(value);
    }

    pub(crate) fn set_index(&mut self, index: usize) {
        self.cells[index] = 1;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| self.spec.cell_at(i))
    }

    /// Cell-wise OR with another layer on the same grid.
    pub fn union_with(&mut self, other: &BinaryLayer) -> Result<(), GridError> {
        if self.spec != other.spec {
            return Err(GridError::SpecMismatch);
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= *b;
        }
        Ok(())
    }
}

/// Marks every cell containing at least one of `points`.
pub fn rasterize_points(spec: GridSpec, points: &[Point]) -> Result<BinaryLayer, GridError> {
    let mut layer = BinaryLayer::zeros(spec);
    for &p in points {
        let cell = spec.try_cell_of(p)?;
        layer.set(cell, true);
    }
    Ok(layer)
}

/// The eight airspace and terrain constraint categories, in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintCategory {
    #[serde(rename = "Prohibited Area")]
    ProhibitedArea,
    #[serde(rename = "Restricted Area")]
    RestrictedArea,
    #[serde(rename = "Danger Zone")]
    DangerZone,
    #[serde(rename = "Military Operational Area")]
    MilitaryOperationalArea,
    #[serde(rename = "Control Zone")]
    ControlZone,
    #[serde(rename = "Aerodrome Traffic Zone")]
    AerodromeTrafficZone,
    #[serde(rename = "Alert Area")]
    AlertArea,
    #[serde(rename = "Terrain Obstacles")]
    TerrainObstacles,
}

impl ConstraintCategory {
    pub const ALL: [ConstraintCategory; 8] = [
        ConstraintCategory::ProhibitedArea,
        ConstraintCategory::RestrictedArea,
        ConstraintCategory::DangerZone,
        ConstraintCategory::MilitaryOperationalArea,
        ConstraintCategory::ControlZone,
        ConstraintCategory::AerodromeTrafficZone,
        ConstraintCategory::AlertArea,
        ConstraintCategory::TerrainObstacles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintCategory::ProhibitedArea => "Prohibited Area",
            ConstraintCategory::RestrictedArea => "Restricted Area",
            ConstraintCategory::DangerZone => "Danger Zone",
            ConstraintCategory::MilitaryOperationalArea => "Military Operational Area",
            ConstraintCategory::ControlZone => "Control Zone",
            ConstraintCategory::AerodromeTrafficZone => "Aerodrome Traffic Zone",
            ConstraintCategory::AlertArea => "Alert Area",
            ConstraintCategory::TerrainObstacles => "Terrain Obstacles",
        }
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ConstraintCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstraintCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConstraintCategory::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown constraint category {s:?}"))
    }
}

/// The per-category constraint layers and their per-cell sum `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintStack {
    spec: GridSpec,
    layers: Vec<BinaryLayer>,
    sum: Vec<u8>,
}

impl ConstraintStack {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn layer(&self, category: ConstraintCategory) -> &BinaryLayer {
        &self.layers[category.ordinal()]
    }

    pub fn sum(&self) -> &[u8] {
        &self.sum
    }

    pub fn sum_at(&self, cell: Cell) -> u8 {
        self.sum[self.spec.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.sum_at(cell) == 0
    }
}

/// Sums the eight category layers. Layers may arrive in any order but every
/// category must appear exactly once.
pub fn stack_constraints(layers: Vec<(ConstraintCategory, BinaryLayer)>) -> Result<ConstraintStack, GridError> {
    let mut slots: [Option<BinaryLayer>; 8] = Default::default();
    let mut spec = None;
    for (category, layer) in layers {
        match spec {
            None => spec = Some(layer.spec),
            Some(s) if s != layer.spec => return Err(GridError::SpecMismatch),
            Some(_) => {}
        }
        let slot = &mut slots[category.ordinal()];
        if slot.is_some() {
            return Err(GridError::DuplicateCategory(category));
        }
        *slot = Some(layer);
    }
    let mut ordered = Vec::with_capacity(8);
    for (category, slot) in ConstraintCategory::ALL.into_iter().zip(slots) {
        ordered.push(slot.ok_or(GridError::MissingCategory(category))?);
    }
    let spec = ordered[0].spec;
    let mut sum = vec![0u8; spec.len()];
    for layer in &ordered {
        for (s, c) in sum.iter_mut().zip(&layer.cells) {
            *s += *c;
        }
    }
    Ok(ConstraintStack {
        spec,
        layers: ordered,
        sum,
    })
}

/// Cells holding a facility with no constraint present (`S = F AND C == 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct SelectedLayer {
    spec: GridSpec,
    cells: Vec<u8>,
}

impl SelectedLayer {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.cells[self.spec.index(cell)] != 0
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c != 0).count()
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| self.spec.cell_at(i))
    }
}

pub fn select(facilities: &BinaryLayer, constraints: &ConstraintStack) -> Result<SelectedLayer, GridError> {
    if facilities.spec != constraints.spec {
        return Err(GridError::SpecMismatch);
    }
    let cells = facilities
        .cells
        .iter()
        .zip(&constraints.sum)
        .map(|(&f, &c)| u8::from(f == 1 && c == 0))
        .collect();
    Ok(SelectedLayer {
        spec: facilities.spec,
        cells,
    })
}
