//! Grid and world-frame geometry shared across the simulator.
//!
//! The world is a square of cells with edge length `resolution` metres.
//! Cell `(0, 0)` sits at the world origin corner; the centre of cell
//! `(x, y)` is at `((x + 0.5) * resolution, (y + 0.5) * resolution)`.
//! Continuous poses (robots, virtual sheep, steering targets) live in the
//! world frame; everything map-related is indexed by [`Cell`].

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

/// Continuous position in metres.
pub type WorldPoint = Point2<f64>;
/// Continuous displacement/velocity in metres (per second).
pub type WorldVec = Vector2<f64>;

/// Integer grid index: `x` is the column, `y` the row.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Centre of the cell in world coordinates.
    pub fn center(&self, resolution: f64) -> WorldPoint {
        Point2::new(
            (self.x as f64 + 0.5) * resolution,
            (self.y as f64 + 0.5) * resolution,
        )
    }

    /// Cell containing a world point (floor on both axes).
    pub fn containing(point: &WorldPoint, resolution: f64) -> Self {
        Cell {
            x: (point.x / resolution).floor() as i32,
            y: (point.y / resolution).floor() as i32,
        }
    }

    /// The eight Moore neighbours, in deterministic row-major order.
    pub fn neighbors8(&self) -> [Cell; 8] {
        let (x, y) = (self.x, self.y);
        [
            Cell::new(x - 1, y - 1),
            Cell::new(x, y - 1),
            Cell::new(x + 1, y - 1),
            Cell::new(x - 1, y),
            Cell::new(x + 1, y),
            Cell::new(x - 1, y + 1),
            Cell::new(x, y + 1),
            Cell::new(x + 1, y + 1),
        ]
    }

    /// Euclidean distance between cell centres, in cell units.
    pub fn distance_cells(&self, other: &Cell) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Row-major ordering: rows first, then columns. This is the canonical
/// deterministic ordering for every cell list in the crate.
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shared shape of every grid in the simulator: cell counts plus metric
/// resolution. Indexing helpers live here so the world grid and the
/// exploration map cannot drift apart.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct GridDims {
    pub width: u32,
    pub height: u32,
    /// Edge length of one cell in metres.
    pub resolution: f64,
}

impl GridDims {
    pub fn new(width: u32, height: u32, resolution: f64) -> Self {
        GridDims {
            width,
            height,
            resolution,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && (cell.x as u32) < self.width && (cell.y as u32) < self.height
    }

    /// Row-major linear index, or `None` when out of bounds.
    pub fn index(&self, cell: &Cell) -> Option<usize> {
        if self.contains(cell) {
            Some(cell.y as usize * self.width as usize + cell.x as usize)
        } else {
            None
        }
    }

    /// Inverse of [`GridDims::index`].
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            x: (index % self.width as usize) as i32,
            y: (index / self.width as usize) as i32,
        }
    }

    /// Metric extent of the whole grid (width, height) in metres.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }

    /// Centre point of the grid in world coordinates.
    pub fn center(&self) -> WorldPoint {
        let (w, h) = self.extent();
        Point2::new(w / 2.0, h / 2.0)
    }

    /// Length of the grid diagonal in metres.
    pub fn diagonal(&self) -> f64 {
        let (w, h) = self.extent();
        (w * w + h * h).sqrt()
    }

    /// Clamp a world point so that the containing cell is in bounds.
    /// The margin of half a cell keeps the point strictly interior.
    pub fn clamp_point(&self, point: &WorldPoint) -> WorldPoint {
        let (w, h) = self.extent();
        let margin = self.resolution / 2.0;
        Point2::new(
            point.x.clamp(margin, w - margin),
            point.y.clamp(margin, h - margin),
        )
    }
}

/// Arithmetic mean of a non-empty set of points.
pub fn centroid(points: &[WorldPoint]) -> Option<WorldPoint> {
    if points.is_empty() {
        return None;
    }
    let mut sum = Vector2::zeros();
    for p in points {
        sum += p.coords;
    }
    Some(Point2::from(sum / points.len() as f64))
}
