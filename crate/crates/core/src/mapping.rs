//! Shared exploration map and frontier detection.
//!
//! All robots integrate observations into one map whose cells are unknown
//! until observed. A frontier is a known-free cell with at least one
//! unknown cell among its eight neighbours; frontier snapshots are always
//! emitted in row-major order so every consumer sees the same sequence.

use crate::environment::TerrainCell;
use crate::geometry::{Cell, GridDims};
use std::fmt::Write as _;

/// Knowledge state of one map cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MapCell {
    Unknown,
    Free,
    Occupied,
}

/// The shared exploration map.
#[derive(Clone, PartialEq, Debug)]
pub struct ExplorationMap {
    dims: GridDims,
    cells: Vec<MapCell>,
    explored: u64,
    version: u64,
}

impl ExplorationMap {
    /// A fully unknown map of the given shape.
    pub fn unknown(dims: GridDims) -> Self {
        ExplorationMap {
            dims,
            cells: vec![MapCell::Unknown; dims.cell_count()],
            explored: 0,
            version: 0,
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// State of a cell; out-of-bounds queries read as occupied so planners
    /// can treat the map edge as a wall.
    pub fn state(&self, cell: &Cell) -> MapCell {
        match self.dims.index(cell) {
            Some(i) => self.cells[i],
            None => MapCell::Occupied,
        }
    }

    /// Count of non-unknown cells.
    pub fn explored_cells(&self) -> u64 {
        self.explored
    }

    /// Monotonic change counter; bumps when an integration call explores
    /// at least one new cell. Re-observing known terrain leaves it alone,
    /// so an unchanged version means an identical map.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Merge one batch of observations. Unknown cells take the observed
    /// state; already-known cells are left untouched (first write wins,
    /// and the ground truth is static so later writes would agree anyway).
    /// Returns the cells that became known in this call. The version
    /// increments only when that list is non-empty: consumers compare
    /// versions to decide whether anything about the map is new.
    pub fn integrate_observations(&mut self, observations: &[(Cell, TerrainCell)]) -> Vec<Cell> {
        let mut newly_explored = Vec::new();
        for (cell, state) in observations {
            if let Some(i) = self.dims.index(cell) {
                if self.cells[i] == MapCell::Unknown {
                    self.cells[i] = match state {
                        TerrainCell::Free => MapCell::Free,
                        TerrainCell::Occupied => MapCell::Occupied,
                    };
                    self.explored += 1;
                    newly_explored.push(*cell);
                }
            }
        }
        if !newly_explored.is_empty() {
            self.version += 1;
        }
        newly_explored
    }

    /// All frontier cells — known-free cells with an unknown Moore
    /// neighbour — in row-major order.
    pub fn detect_frontiers(&self) -> FrontierSet {
        let mut cells = Vec::new();
        for y in 0..self.dims.height as i32 {
            for x in 0..self.dims.width as i32 {
                let cell = Cell::new(x, y);
                if self.is_frontier(&cell) {
                    cells.push(cell);
                }
            }
        }
        FrontierSet {
            cells,
            map_version: self.version,
        }
    }

    /// Whether one cell currently satisfies the frontier definition.
    pub fn is_frontier(&self, cell: &Cell) -> bool {
        self.state(cell) == MapCell::Free
            && cell
                .neighbors8()
                .iter()
                .any(|n| self.state(n) == MapCell::Unknown)
    }

    /// Text dump: a header line `width height resolution version` followed
    /// by one row per line, top row first, using `?` unknown, `.` free,
    /// `#` occupied. Stable byte-for-byte for identical maps.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.dims.width, self.dims.height, self.dims.resolution, self.version
        );
        for y in (0..self.dims.height as i32).rev() {
            for x in 0..self.dims.width as i32 {
                out.push(match self.state(&Cell::new(x, y)) {
                    MapCell::Unknown => '?',
                    MapCell::Free => '.',
                    MapCell::Occupied => '#',
                });
            }
            out.push('\n');
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn set_for_test(&mut self, cell: Cell, state: MapCell) {
        let i = self.dims.index(&cell).expect("cell in bounds");
        let was_known = self.cells[i] != MapCell::Unknown;
        let now_known = state != MapCell::Unknown;
        match (was_known, now_known) {
            (false, true) => self.explored += 1,
            (true, false) => self.explored -= 1,
            _ => {}
        }
        self.cells[i] = state;
    }
}

/// Snapshot of the frontier cells of one map version.
#[derive(Clone, PartialEq, Debug)]
pub struct FrontierSet {
    /// Frontier cells in row-major order.
    pub cells: Vec<Cell>,
    /// Version of the map the snapshot was taken from.
    pub map_version: u64,
}

impl FrontierSet {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    /// Membership test; relies on the row-major ordering invariant.
    pub fn contains(&self, cell: &Cell) -> bool {
        self.cells.binary_search(cell).is_ok()
    }
}
