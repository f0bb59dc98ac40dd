//! Ground-truth world generation and ray-cast sensing.
//!
//! Worlds are closed rectangles of free/occupied cells: a one-cell boundary
//! wall surrounds an interior of `side_length / resolution` cells per axis.
//! The grass plane is empty; the forest scatters circular trees by seeded
//! uniform sampling, rejecting placements that would occupy a robot spawn
//! cell. Sensing casts equiangular rays with a supercover grid traversal
//! and reports every free cell the rays sweep plus the first occupied cell
//! per ray — cells behind an obstacle are never reported.

use crate::geometry::{Cell, GridDims, WorldPoint};
use crate::rng::{stream_rng, Stream};
use nalgebra::Point2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ground-truth state of one world cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TerrainCell {
    Free,
    Occupied,
}

/// Kind of world to generate.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    /// Obstacle-free interior.
    GrassPlane,
    /// Circular trees scattered uniformly at `tree_density` per m².
    Forest,
}

/// Everything needed to generate a world and place robots in it.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: EnvironmentKind,
    /// Interior edge length in metres.
    pub side_length: f64,
    /// Cell edge length in metres.
    pub resolution: f64,
    /// Trees per m²; only meaningful for [`EnvironmentKind::Forest`].
    pub tree_density: f64,
    /// Tree trunk radius in metres.
    pub tree_radius: f64,
    /// Seed for terrain generation and spawn placement.
    pub rng_seed: u64,
    pub robot_count: usize,
    /// Robots spawn within this radius of the start point (world centre).
    pub spawn_radius: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            kind: EnvironmentKind::GrassPlane,
            side_length: 40.0,
            resolution: 0.5,
            tree_density: 0.05,
            tree_radius: 0.3,
            rng_seed: 0,
            robot_count: 1,
            spawn_radius: 5.0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if !(self.side_length > 0.0) || !(self.resolution > 0.0) {
            return Err(GenerationError::InvalidSpec(
                "side_length and resolution must be positive".into(),
            ));
        }
        if self.side_length < 4.0 * self.resolution {
            return Err(GenerationError::InvalidSpec(
                "side_length must span at least four cells".into(),
            ));
        }
        if self.tree_density < 0.0 || self.tree_radius < 0.0 {
            return Err(GenerationError::InvalidSpec(
                "tree_density and tree_radius must be non-negative".into(),
            ));
        }
        if self.robot_count == 0 {
            return Err(GenerationError::InvalidSpec(
                "robot_count must be at least one".into(),
            ));
        }
        if !(self.spawn_radius > 0.0) {
            return Err(GenerationError::InvalidSpec(
                "spawn_radius must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Interior cell count per axis.
    pub fn interior_cells(&self) -> u32 {
        (self.side_length / self.resolution).round() as u32
    }

    /// Grid shape including the boundary wall.
    pub fn grid_dims(&self) -> GridDims {
        let interior = self.interior_cells();
        GridDims::new(interior + 2, interior + 2, self.resolution)
    }
}

#[derive(Error, Debug)]
pub enum GenerationError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error("could not place robot {robot} clear of obstacles after {attempts} attempts")]
    SpawnPlacement { robot: usize, attempts: u32 },
    #[error("could not place tree {tree} clear of spawn area after {attempts} attempts")]
    TreePlacement { tree: usize, attempts: u32 },
}

/// Ground-truth occupancy grid. Closed: the outermost ring is occupied.
#[derive(Clone, PartialEq, Debug)]
pub struct WorldGrid {
    dims: GridDims,
    cells: Vec<TerrainCell>,
}

impl WorldGrid {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// State of a cell; out-of-bounds queries read as occupied, which keeps
    /// every traversal inside the closed world.
    pub fn state(&self, cell: &Cell) -> TerrainCell {
        match self.dims.index(cell) {
            Some(i) => self.cells[i],
            None => TerrainCell::Occupied,
        }
    }

    pub fn is_free(&self, cell: &Cell) -> bool {
        self.state(cell) == TerrainCell::Free
    }

    pub fn free_cell_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| **c == TerrainCell::Free)
            .count()
    }

    /// Occupied cells strictly inside the boundary wall.
    pub fn occupied_interior_count(&self) -> usize {
        let mut n = 0;
        for y in 1..(self.dims.height - 1) as i32 {
            for x in 1..(self.dims.width - 1) as i32 {
                if !self.is_free(&Cell::new(x, y)) {
                    n += 1;
                }
            }
        }
        n
    }

    fn filled(dims: GridDims) -> Self {
        let mut cells = vec![TerrainCell::Free; dims.cell_count()];
        for y in 0..dims.height as i32 {
            for x in 0..dims.width as i32 {
                if y == 0 || x == 0 || y == dims.height as i32 - 1 || x == dims.width as i32 - 1 {
                    cells[dims.index(&Cell::new(x, y)).unwrap()] = TerrainCell::Occupied;
                }
            }
        }
        WorldGrid { dims, cells }
    }

    fn occupy(&mut self, cell: &Cell) {
        if let Some(i) = self.dims.index(cell) {
            self.cells[i] = TerrainCell::Occupied;
        }
    }
}

/// Output of world generation: the grid plus the spawn poses that the
/// tree sampler was required to keep clear.
#[derive(Clone, Debug)]
pub struct GeneratedScenario {
    pub world: WorldGrid,
    /// One collision-free pose per robot, all within `spawn_radius` of the
    /// start point.
    pub spawn_points: Vec<WorldPoint>,
    /// The designated start point (world centre).
    pub start_point: WorldPoint,
    /// Tree centres actually placed (empty for the grass plane).
    pub trees: Vec<WorldPoint>,
}

const PLACEMENT_ATTEMPTS: u32 = 10_000;

/// Generate the world plus spawn poses for a scenario. Identical specs
/// (including the seed) produce identical output. Spawn placement and
/// tree placement draw from independent streams derived from the seed,
/// so the same seed grows the same forest for any robot count.
pub fn generate(spec: &ScenarioSpec) -> Result<GeneratedScenario, GenerationError> {
    spec.validate()?;
    let dims = spec.grid_dims();
    let mut world = WorldGrid::filled(dims);
    let mut spawn_rng = stream_rng(spec.rng_seed, Stream::Spawn);
    let mut terrain_rng = stream_rng(spec.rng_seed, Stream::Terrain);
    let start_point = dims.center();

    // Spawn poses first so tree sampling can reject overlaps with them.
    let mut spawn_points = Vec::with_capacity(spec.robot_count);
    let mut spawn_cells: Vec<Cell> = Vec::with_capacity(spec.robot_count);
    for robot in 0..spec.robot_count {
        let mut placed = false;
        for attempt in 0..PLACEMENT_ATTEMPTS {
            let r = spec.spawn_radius * spawn_rng.gen::<f64>().sqrt();
            let theta = spawn_rng.gen::<f64>() * std::f64::consts::TAU;
            let p = Point2::new(start_point.x + r * theta.cos(), start_point.y + r * theta.sin());
            let cell = Cell::containing(&p, dims.resolution);
            if world.is_free(&cell) && !spawn_cells.contains(&cell) {
                spawn_points.push(p);
                spawn_cells.push(cell);
                placed = true;
                break;
            }
            if attempt + 1 == PLACEMENT_ATTEMPTS {
                return Err(GenerationError::SpawnPlacement {
                    robot,
                    attempts: PLACEMENT_ATTEMPTS,
                });
            }
        }
        debug_assert!(placed);
    }

    // Trees: fixed count at the requested density, uniform over the
    // interior, rejecting any placement whose rasterisation could touch a
    // spawn cell.
    let mut trees = Vec::new();
    if spec.kind == EnvironmentKind::Forest {
        let count = (spec.tree_density * spec.side_length * spec.side_length).round() as usize;
        let lo = dims.resolution;
        let hi = dims.resolution + spec.side_length;
        let clearance = spec.tree_radius + dims.resolution;
        for tree in 0..count {
            let mut placed = false;
            for attempt in 0..PLACEMENT_ATTEMPTS {
                let p = Point2::new(terrain_rng.gen_range(lo..hi), terrain_rng.gen_range(lo..hi));
                let clear = spawn_points
                    .iter()
                    .all(|s| (p - s).norm() > clearance);
                if clear {
                    rasterize_disc(&mut world, &p, spec.tree_radius);
                    trees.push(p);
                    placed = true;
                    break;
                }
                if attempt + 1 == PLACEMENT_ATTEMPTS {
                    return Err(GenerationError::TreePlacement {
                        tree,
                        attempts: PLACEMENT_ATTEMPTS,
                    });
                }
            }
            debug_assert!(placed);
        }
    }

    debug_assert!(spawn_cells.iter().all(|c| world.is_free(c)));
    Ok(GeneratedScenario {
        world,
        spawn_points,
        start_point,
        trees,
    })
}

/// Generate just the grid for a scenario.
pub fn generate_world(spec: &ScenarioSpec) -> Result<WorldGrid, GenerationError> {
    generate(spec).map(|g| g.world)
}

/// Mark every cell whose centre lies within `radius` of `center` occupied;
/// the cell containing the centre is always marked so a tree can never
/// vanish between cell centres.
fn rasterize_disc(world: &mut WorldGrid, center: &WorldPoint, radius: f64) {
    let res = world.dims.resolution;
    let home = Cell::containing(center, res);
    world.occupy(&home);
    let reach = (radius / res).ceil() as i32 + 1;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let cell = Cell::new(home.x + dx, home.y + dy);
            if (cell.center(res) - center).norm() <= radius {
                world.occupy(&cell);
            }
        }
    }
}

// --- sensing ---------------------------------------------------------------

/// Range sensor sweeping `ray_count` equiangular rays out to `range` metres.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    /// Maximum observation range in metres.
    pub range: f64,
    pub ray_count: u32,
    /// Standard deviation of optional per-ray Gaussian range jitter, in
    /// metres; zero disables noise.
    pub range_noise_sigma: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            range: 10.0,
            ray_count: 360,
            range_noise_sigma: 0.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SenseError> {
        if !(self.range > 0.0) {
            return Err(SenseError::InvalidSensor("range must be positive".into()));
        }
        if self.ray_count < 8 {
            return Err(SenseError::InvalidSensor(
                "ray_count must be at least 8".into(),
            ));
        }
        if self.range_noise_sigma < 0.0 {
            return Err(SenseError::InvalidSensor(
                "range_noise_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Error, Debug)]
pub enum SenseError {
    #[error("invalid sensor: {0}")]
    InvalidSensor(String),
    #[error("sensing pose {0:?} is outside the world")]
    PoseOutOfBounds(Cell),
    #[error("sensing pose {0:?} is inside an obstacle")]
    PoseInObstacle(Cell),
}

/// Reusable scratch space for [`sense_into`]: a stamp grid provides O(1)
/// per-cell dedup without clearing between sweeps.
#[derive(Clone, Debug, Default)]
pub struct SenseBuffer {
    stamps: Vec<u64>,
    epoch: u64,
    /// Deduplicated observations of the latest sweep, in ray order.
    pub observations: Vec<(Cell, TerrainCell)>,
}

impl SenseBuffer {
    fn begin(&mut self, dims: &GridDims) {
        if self.stamps.len() != dims.cell_count() {
            self.stamps = vec![0; dims.cell_count()];
            self.epoch = 0;
        }
        self.epoch += 1;
        self.observations.clear();
    }

    fn record(&mut self, dims: &GridDims, cell: Cell, state: TerrainCell) {
        if let Some(i) = dims.index(&cell) {
            if self.stamps[i] != self.epoch {
                self.stamps[i] = self.epoch;
                self.observations.push((cell, state));
            }
        }
    }
}

/// Sweep the sensor once and return the observed cells sorted row-major.
///
/// Noise-free convenience wrapper around [`sense_into`]; the pose must be
/// inside the world on a free cell.
pub fn sense(
    world: &WorldGrid,
    pose: &WorldPoint,
    sensor: &SensorModel,
) -> Result<Vec<(Cell, TerrainCell)>, SenseError> {
    let mut buf = SenseBuffer::default();
    sense_into(world, pose, sensor, None, &mut buf)?;
    let mut obs = std::mem::take(&mut buf.observations);
    obs.sort_unstable_by_key(|(c, _)| *c);
    Ok(obs)
}

/// Sweep the sensor once into a reusable buffer.
///
/// Casts `ray_count` equiangular rays with a supercover grid traversal.
/// Free cells swept by a ray are observed free; the first occupied cell on
/// a ray is observed occupied and terminates the ray, so nothing behind an
/// obstacle is ever reported. A cell is only reported when its centre lies
/// within the (possibly jittered) range of the ray that reached it.
pub fn sense_into(
    world: &WorldGrid,
    pose: &WorldPoint,
    sensor: &SensorModel,
    mut noise_rng: Option<&mut ChaCha8Rng>,
    buf: &mut SenseBuffer,
) -> Result<(), SenseError> {
    sensor.validate()?;
    let dims = world.dims();
    let origin = Cell::containing(pose, dims.resolution);
    if !dims.contains(&origin) {
        return Err(SenseError::PoseOutOfBounds(origin));
    }
    if !world.is_free(&origin) {
        return Err(SenseError::PoseInObstacle(origin));
    }

    buf.begin(&dims);
    // The sensing pose always observes its own cell.
    buf.record(&dims, origin, TerrainCell::Free);

    for ray in 0..sensor.ray_count {
        let theta = std::f64::consts::TAU * ray as f64 / sensor.ray_count as f64;
        let range = match noise_rng.as_deref_mut() {
            Some(rng) if sensor.range_noise_sigma > 0.0 => {
                let jitter: f64 = rng.sample(rand_distr::StandardNormal);
                (sensor.range + sensor.range_noise_sigma * jitter).max(0.0)
            }
            _ => sensor.range,
        };
        cast_ray(world, pose, theta, range, buf);
    }
    Ok(())
}

/// Supercover traversal of one ray. Visits every cell the ray passes
/// through; at an exact corner crossing both edge-adjacent cells are
/// visited (x-step first) before the diagonal one, so a ray cannot slip
/// between two diagonally touching obstacles.
fn cast_ray(world: &WorldGrid, pose: &WorldPoint, theta: f64, range: f64, buf: &mut SenseBuffer) {
    let dims = world.dims();
    let res = dims.resolution;
    let (dx, dy) = (theta.cos(), theta.sin());
    let mut cell = Cell::containing(pose, res);

    let step_x: i32 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i32 = if dy > 0.0 { 1 } else { -1 };
    // Parametric distance along the ray to the next vertical / horizontal
    // cell boundary, and the distance between successive boundaries.
    let next_boundary = |coord: f64, cell_idx: i32, positive: bool| -> f64 {
        let edge = if positive { cell_idx + 1 } else { cell_idx };
        edge as f64 * res - coord
    };
    let mut t_max_x = if dx == 0.0 {
        f64::INFINITY
    } else {
        next_boundary(pose.x, cell.x, dx > 0.0) / dx
    };
    let mut t_max_y = if dy == 0.0 {
        f64::INFINITY
    } else {
        next_boundary(pose.y, cell.y, dy > 0.0) / dy
    };
    let t_delta_x = if dx == 0.0 { f64::INFINITY } else { res / dx.abs() };
    let t_delta_y = if dy == 0.0 { f64::INFINITY } else { res / dy.abs() };

    // Visit a cell; returns false when the ray must stop there.
    let visit = |cell: &Cell, buf: &mut SenseBuffer| -> bool {
        if !dims.contains(cell) {
            return false;
        }
        let state = world.state(cell);
        if (cell.center(res) - pose).norm() <= range {
            buf.record(&dims, *cell, state);
        }
        state == TerrainCell::Free
    };

    loop {
        let t_entry;
        if (t_max_x - t_max_y).abs() < 1e-12 && t_max_x.is_finite() {
            // Exact corner crossing: supercover both edge neighbours.
            t_entry = t_max_x;
            if t_entry > range {
                return;
            }
            let side_x = Cell::new(cell.x + step_x, cell.y);
            let side_y = Cell::new(cell.x, cell.y + step_y);
            let cont_x = visit(&side_x, buf);
            let cont_y = visit(&side_y, buf);
            if !cont_x && !cont_y {
                return;
            }
            cell = Cell::new(cell.x + step_x, cell.y + step_y);
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            t_entry = t_max_x;
            if t_entry > range {
                return;
            }
            cell = Cell::new(cell.x + step_x, cell.y);
            t_max_x += t_delta_x;
        } else {
            t_entry = t_max_y;
            if t_entry > range {
                return;
            }
            cell = Cell::new(cell.x, cell.y + step_y);
            t_max_y += t_delta_y;
        }
        if !visit(&cell, buf) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grass(side: f64, resolution: f64) -> ScenarioSpec {
        ScenarioSpec {
            kind: EnvironmentKind::GrassPlane,
            side_length: side,
            resolution,
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn grass_plane_has_expected_shape_and_no_interior_obstacles() {
        let spec = grass(40.0, 0.5);
        let world = generate_world(&spec).unwrap();
        // 80x80 interior plus the boundary wall.
        assert_eq!(world.dims().width, 82);
        assert_eq!(world.dims().height, 82);
        assert_eq!(world.occupied_interior_count(), 0);
    }

    #[test]
    fn forest_places_the_analytic_tree_count() {
        let spec = ScenarioSpec {
            kind: EnvironmentKind::Forest,
            side_length: 40.0,
            resolution: 0.5,
            tree_density: 0.05,
            rng_seed: 11,
            ..ScenarioSpec::default()
        };
        let generated = generate(&spec).unwrap();
        // density * area = 0.05 * 1600 = 80 trees.
        assert_eq!(generated.trees.len(), 80);
        assert!(generated.world.occupied_interior_count() > 0);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = ScenarioSpec {
            kind: EnvironmentKind::Forest,
            rng_seed: 99,
            robot_count: 3,
            ..ScenarioSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.world, b.world);
        assert_eq!(a.spawn_points, b.spawn_points);

        let different = ScenarioSpec {
            rng_seed: 100,
            ..spec
        };
        let c = generate(&different).unwrap();
        assert_ne!(a.world, c.world);
    }

    #[test]
    fn the_forest_does_not_depend_on_the_robot_count() {
        let base = ScenarioSpec {
            kind: EnvironmentKind::Forest,
            rng_seed: 9,
            ..ScenarioSpec::default()
        };
        let one = generate(&ScenarioSpec {
            robot_count: 1,
            ..base.clone()
        })
        .unwrap();
        let three = generate(&ScenarioSpec {
            robot_count: 3,
            ..base
        })
        .unwrap();
        // Tree placement draws from its own stream: identical worlds, and
        // the robots already placed keep their poses.
        assert_eq!(one.world, three.world);
        assert_eq!(one.spawn_points[0], three.spawn_points[0]);
    }

    #[test]
    fn spawn_points_are_clear_and_near_the_start_point() {
        let spec = ScenarioSpec {
            kind: EnvironmentKind::Forest,
            tree_density: 0.08,
            robot_count: 3,
            rng_seed: 5,
            ..ScenarioSpec::default()
        };
        let g = generate(&spec).unwrap();
        assert_eq!(g.spawn_points.len(), 3);
        for p in &g.spawn_points {
            assert!((p - g.start_point).norm() <= spec.spawn_radius);
            let cell = Cell::containing(p, spec.resolution);
            assert!(g.world.is_free(&cell), "spawn cell {cell:?} must be free");
        }
    }

    #[test]
    fn boundary_wall_is_fully_occupied() {
        let world = generate_world(&grass(10.0, 0.5)).unwrap();
        let dims = world.dims();
        for x in 0..dims.width as i32 {
            assert!(!world.is_free(&Cell::new(x, 0)));
            assert!(!world.is_free(&Cell::new(x, dims.height as i32 - 1)));
        }
        for y in 0..dims.height as i32 {
            assert!(!world.is_free(&Cell::new(0, y)));
            assert!(!world.is_free(&Cell::new(dims.width as i32 - 1, y)));
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut spec = grass(40.0, 0.5);
        spec.robot_count = 0;
        assert!(generate(&spec).is_err());
        let mut spec = grass(40.0, 0.5);
        spec.resolution = -1.0;
        assert!(generate(&spec).is_err());
    }

    // --- sensing ------------------------------------------------------

    /// Brute-force per-cell line-of-sight oracle: in an obstacle-free
    /// world every cell whose centre lies within range is visible.
    fn range_oracle(world: &WorldGrid, pose: &WorldPoint, range: f64) -> Vec<(Cell, TerrainCell)> {
        let dims = world.dims();
        let mut out = Vec::new();
        for y in 0..dims.height as i32 {
            for x in 0..dims.width as i32 {
                let cell = Cell::new(x, y);
                if (cell.center(dims.resolution) - pose).norm() <= range {
                    out.push((cell, world.state(&cell)));
                }
            }
        }
        out
    }

    #[test]
    fn open_field_sweep_equals_per_cell_visibility_oracle() {
        // Range of ten cells in an open field: the swept set must equal the
        // 21x21-neighbourhood visibility oracle exactly. The pose sits on a
        // cell centre so the neighbourhood is symmetric.
        let spec = grass(40.0, 1.0);
        let world = generate_world(&spec).unwrap();
        let pose = Cell::new(21, 21).center(1.0);
        let sensor = SensorModel {
            range: 10.0,
            ray_count: 360,
            range_noise_sigma: 0.0,
        };
        let swept = sense(&world, &pose, &sensor).unwrap();
        let expected = range_oracle(&world, &pose, sensor.range);
        assert_eq!(swept, expected);
        // Sanity: the neighbourhood really is 21 cells across.
        let min_x = swept.iter().map(|(c, _)| c.x).min().unwrap();
        let max_x = swept.iter().map(|(c, _)| c.x).max().unwrap();
        assert_eq!(max_x - min_x + 1, 21);
    }

    #[test]
    fn wall_occludes_cells_behind_it() {
        let spec = grass(20.0, 0.5);
        let mut world = generate_world(&spec).unwrap();
        let dims = world.dims();
        let pose = dims.center();
        let origin = Cell::containing(&pose, 0.5);
        // Vertical wall two cells to the right of the pose, spanning the
        // full height so nothing can be seen around it.
        let wall_x = origin.x + 2;
        for y in 0..dims.height as i32 {
            world.occupy(&Cell::new(wall_x, y));
        }
        let sensor = SensorModel::default();
        let obs = sense(&world, &pose, &sensor).unwrap();
        let target = Cell::new(wall_x + 3, origin.y);
        assert!(
            obs.iter().all(|(c, _)| *c != target),
            "cell behind the wall must not be observed"
        );
        assert!(
            obs.iter().all(|(c, _)| c.x <= wall_x),
            "nothing beyond the wall column may be observed"
        );
        assert!(
            obs.contains(&(Cell::new(wall_x, origin.y), TerrainCell::Occupied)),
            "the facing wall cell itself must be observed occupied"
        );
    }

    #[test]
    fn single_obstacle_casts_an_umbra_but_not_a_penumbra() {
        // One occupied cell four cells east of the pose. Every cell straight
        // behind it is blocked for all rays that could reach it, while
        // off-axis cells at the same depth stay visible; both expectations
        // were derived with a per-cell segment-walk visibility check.
        let spec = grass(40.0, 1.0);
        let mut world = generate_world(&spec).unwrap();
        let pose = Cell::new(21, 21).center(1.0);
        let origin = Cell::containing(&pose, 1.0);
        let obstacle = Cell::new(origin.x + 4, origin.y);
        world.occupy(&obstacle);
        let sensor = SensorModel {
            range: 10.0,
            ray_count: 720,
            range_noise_sigma: 0.0,
        };
        let obs = sense(&world, &pose, &sensor).unwrap();

        assert!(obs.contains(&(obstacle, TerrainCell::Occupied)));
        // Cells directly behind the obstacle in the same row are occluded.
        for dx in 5..=10 {
            let shadow = Cell::new(origin.x + dx, origin.y);
            assert!(
                obs.iter().all(|(c, _)| *c != shadow),
                "cell {shadow:?} lies in the umbra and must be occluded"
            );
        }
        // Off-axis cells at the same depth remain visible.
        assert!(obs.iter().any(|(c, _)| *c == Cell::new(origin.x + 5, origin.y + 2)));
        assert!(obs.iter().any(|(c, _)| *c == Cell::new(origin.x + 5, origin.y - 2)));
    }

    #[test]
    fn observations_never_exceed_sensor_range() {
        let spec = grass(30.0, 0.5);
        let world = generate_world(&spec).unwrap();
        let pose = Point2::new(7.3, 9.1);
        let sensor = SensorModel::default();
        let obs = sense(&world, &pose, &sensor).unwrap();
        for (cell, _) in &obs {
            let d = (cell.center(0.5) - pose).norm();
            assert!(d <= sensor.range + 1e-9, "cell {cell:?} at {d} m exceeds range");
        }
    }

    #[test]
    fn sensing_from_an_obstacle_or_outside_fails() {
        let spec = grass(10.0, 0.5);
        let world = generate_world(&spec).unwrap();
        let sensor = SensorModel::default();
        // The boundary wall cell.
        assert!(sense(&world, &Point2::new(0.1, 0.1), &sensor).is_err());
        assert!(sense(&world, &Point2::new(-5.0, 2.0), &sensor).is_err());
    }

    #[test]
    fn observations_are_sorted_and_deduplicated() {
        let spec = grass(20.0, 0.5);
        let world = generate_world(&spec).unwrap();
        let pose = world.dims().center();
        let obs = sense(&world, &pose, &SensorModel::default()).unwrap();
        for pair in obs.windows(2) {
            assert!(pair[0].0 < pair[1].0, "observations must be strictly ordered");
        }
    }
}
