//! Static map, scripted pedestrians and clearance queries.

use serde::{Deserialize, Serialize};

use crate::controller::KinematicLimits;

pub const SCENARIO_FORMAT: &str = "scenario/1";
pub const GRID_FORMAT: &str = "grid/1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("position ({x}, {y}) is outside the grid")]
    OutOfBounds { x: f64, y: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Point2::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Axis-aligned occupancy grid. Cell `(i, j)` covers
/// `[ox + i·res, ox + (i+1)·res] × [oy + j·res, oy + (j+1)·res]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Point2,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point2,
        cells: Vec<bool>,
    ) -> Result<Self, WorldError> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(WorldError::InvalidGrid(format!("resolution must be > 0, got {resolution}")));
        }
        if width == 0 || height == 0 {
            return Err(WorldError::InvalidGrid("grid must have at least one cell".into()));
        }
        if cells.len() != width * height {
            return Err(WorldError::InvalidGrid(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(WorldError::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { width, height, resolution, origin, cells })
    }

    pub fn empty(width: usize, height: usize, resolution: f64, origin: Point2) -> Result<Self, WorldError> {
        Self::new(width, height, resolution, origin, vec![false; width * height])
    }

    /// Parses rows of `'0'`/`'1'`; `rows[0]` is row `j = 0` (lowest `y`).
    pub fn from_rows<S: AsRef<str>>(rows: &[S], resolution: f64, origin: Point2) -> Result<Self, WorldError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut cells = Vec::with_capacity(width * height);
        for (j, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(WorldError::InvalidGrid(format!(
                    "row {j} has {} cells, expected {width}",
                    row.len()
                )));
            }
            for c in row.chars() {
                cells.push(match c {
                    '0' => false,
                    '1' => true,
                    other => {
                        return Err(WorldError::InvalidGrid(format!("row {j}: unexpected cell '{other}'")))
                    }
                });
            }
        }
        Self::new(width, height, resolution, origin, cells)
    }

    pub fn to_rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|j| {
                (0..self.width)
                    .map(|i| if self.is_occupied(i, j) { '1' } else { '0' })
                    .collect()
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, occupied: bool) {
        self.cells[j * self.width + i] = occupied;
    }

    /// Occupancy with everything outside the grid treated as occupied.
    pub fn is_blocked(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return true;
        }
        self.is_occupied(i as usize, j as usize)
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Marks every cell whose square overlaps the open rectangle.
    pub fn fill_rect(&mut self, min: Point2, max: Point2) {
        let (gx0, gy0) = self.to_grid(min);
        let (gx1, gy1) = self.to_grid(max);
        let i0 = gx0.floor().max(0.0) as usize;
        let j0 = gy0.floor().max(0.0) as usize;
        let i1 = (gx1.ceil() as usize).min(self.width);
        let j1 = (gy1.ceil() as usize).min(self.height);
        for j in j0..j1 {
            for i in i0..i1 {
                self.set(i, j, true);
            }
        }
    }

    pub fn extent(&self) -> (Point2, Point2) {
        let max = Point2::new(
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        );
        (self.origin, max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        let (lo, hi) = self.extent();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }

    /// Continuous grid coordinates (cell units, origin at cell (0,0) corner).
    pub fn to_grid(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.origin.x) / self.resolution,
            (p.y - self.origin.y) / self.resolution,
        )
    }

    /// Cell containing `p`; points on the far edge map to the last cell.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let (gx, gy) = self.to_grid(p);
        let i = (gx.floor() as usize).min(self.width - 1);
        let j = (gy.floor() as usize).min(self.height - 1);
        Some((i, j))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    /// Whether `p` lies in the grid and in a free cell.
    pub fn is_free_at(&self, p: Point2) -> bool {
        self.cell_of(p).is_some_and(|(i, j)| !self.is_occupied(i, j))
    }

    /// Distance from `p` to the closed square of cell `(i, j)`.
    pub fn distance_to_cell(&self, p: Point2, i: usize, j: usize) -> f64 {
        let x0 = self.origin.x + i as f64 * self.resolution;
        let y0 = self.origin.y + j as f64 * self.resolution;
        let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + self.resolution));
        let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + self.resolution));
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GridDoc {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Point2,
    pub cells: Vec<String>,
}

impl From<&OccupancyGrid> for GridDoc {
    fn from(g: &OccupancyGrid) -> Self {
        GridDoc {
            width: g.width,
            height: g.height,
            resolution: g.resolution,
            origin: g.origin,
            cells: g.to_rows(),
        }
    }
}

impl TryFrom<GridDoc> for OccupancyGrid {
    type Error = WorldError;
    fn try_from(d: GridDoc) -> Result<Self, WorldError> {
        let g = OccupancyGrid::from_rows(&d.cells, d.resolution, d.origin)?;
        if g.width != d.width || g.height != d.height {
            return Err(WorldError::InvalidGrid(format!(
                "declared {}x{} but cells are {}x{}",
                d.width, d.height, g.width, g.height
            )));
        }
        Ok(g)
    }
}

impl OccupancyGrid {
    /// Standalone `grid/1` document.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("grid serializes");
        v.as_object_mut()
            .expect("grid is an object")
            .insert("format".into(), GRID_FORMAT.into());
        crate::io::to_json_line(&v)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let mut v: serde_json::Value = serde_json::from_str(text)?;
        let format = v
            .as_object_mut()
            .and_then(|o| o.remove("format"))
            .and_then(|f| f.as_str().map(str::to_string))
            .unwrap_or_default();
        crate::io::expect_format(&format, GRID_FORMAT)?;
        Ok(serde_json::from_value(v)?)
    }
}

impl Serialize for OccupancyGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for OccupancyGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GridDoc::deserialize(d)?;
        OccupancyGrid::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// Exact distance from `position` to the nearest occupied cell boundary,
/// searching outward ring by ring. `+∞` when nothing is occupied.
pub fn min_wall_clearance(position: Point2, grid: &OccupancyGrid) -> Result<f64, WorldError> {
    let (ci, cj) = grid
        .cell_of(position)
        .ok_or(WorldError::OutOfBounds { x: position.x, y: position.y })?;
    let (ci, cj) = (ci as isize, cj as isize);
    let max_ring = grid.width.max(grid.height) as isize;
    let mut best = f64::INFINITY;
    for k in 0..=max_ring {
        // Any cell in ring k is at least (k - 1) cells away.
        let lower = (k - 1).max(0) as f64 * grid.resolution;
        if lower >= best {
            break;
        }
        for (i, j) in ring(ci, cj, k) {
            if i < 0 || j < 0 || i as usize >= grid.width || j as usize >= grid.height {
                continue;
            }
            let (i, j) = (i as usize, j as usize);
            if grid.is_occupied(i, j) {
                best = best.min(grid.distance_to_cell(position, i, j));
            }
        }
    }
    Ok(best)
}

fn ring(ci: isize, cj: isize, k: isize) -> impl Iterator<Item = (isize, isize)> {
    let cells: Box<dyn Iterator<Item = (isize, isize)>> = if k == 0 {
        Box::new(std::iter::once((ci, cj)))
    } else {
        let top_bottom = (-k..=k).flat_map(move |di| [(ci + di, cj - k), (ci + di, cj + k)]);
        let sides = (-k + 1..k).flat_map(move |dj| [(ci - k, cj + dj), (ci + k, cj + dj)]);
        Box::new(top_bottom.chain(sides))
    };
    cells
}

/// Precomputed index for fast exact wall-clearance queries.
///
/// The nearest occupied point to a free position always lies on an occupied
/// cell that has a free 4-neighbour, so only those boundary cells are kept.
/// Every free cell stores the boundary cells that can be nearest to some
/// point inside it: clearance is 1-Lipschitz, so no point of the cell is
/// farther from the walls than `clearance(center) + half diagonal`, and
/// boundary cells beyond that bound are dropped.
#[derive(Debug, Clone)]
pub struct ClearanceIndex {
    grid: OccupancyGrid,
    /// `candidates[offsets[c]..offsets[c + 1]]` belong to cell `c`.
    offsets: Vec<u32>,
    candidates: Vec<(u32, u32)>,
}

/// Boundary cells bucketed into coarse blocks, used while building.
struct BoundaryBuckets<'a> {
    grid: &'a OccupancyGrid,
    w: usize,
    h: usize,
    buckets: Vec<Vec<(u32, u32)>>,
}

impl BoundaryBuckets<'_> {
    const CELLS: usize = 8;

    fn new(grid: &OccupancyGrid) -> BoundaryBuckets<'_> {
        let b = Self::CELLS;
        let w = grid.width.div_ceil(b);
        let h = grid.height.div_ceil(b);
        let mut buckets = vec![Vec::new(); w * h];
        for j in 0..grid.height {
            for i in 0..grid.width {
                if !grid.is_occupied(i, j) {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let boundary = [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(di, dj)| {
                    let (ni, nj) = (ii + di, jj + dj);
                    ni >= 0
                        && nj >= 0
                        && (ni as usize) < grid.width
                        && (nj as usize) < grid.height
                        && !grid.is_occupied(ni as usize, nj as usize)
                });
                if boundary {
                    buckets[(j / b) * w + i / b].push((i as u32, j as u32));
                }
            }
        }
        BoundaryBuckets { grid, w, h, buckets }
    }

    /// Visits boundary cells ring by ring around the bucket of cell
    /// `(ci, cj)` until `limit()` falls below the ring's distance bound.
    fn scan(&self, ci: usize, cj: usize, limit: impl Fn() -> f64, mut visit: impl FnMut(u32, u32)) {
        let b = Self::CELLS;
        let (bi, bj) = ((ci / b) as isize, (cj / b) as isize);
        let bucket_size = b as f64 * self.grid.resolution;
        for k in 0..=self.w.max(self.h) as isize {
            if (k - 1).max(0) as f64 * bucket_size > limit() {
                break;
            }
            for (i, j) in ring(bi, bj, k) {
                if i < 0 || j < 0 || i as usize >= self.w || j as usize >= self.h {
                    continue;
                }
                for &(x, y) in &self.buckets[j as usize * self.w + i as usize] {
                    visit(x, y);
                }
            }
        }
    }
}

impl ClearanceIndex {
    pub fn new(grid: &OccupancyGrid) -> Self {
        let buckets = BoundaryBuckets::new(grid);
        let res = grid.resolution;
        let half_diag = res * std::f64::consts::FRAC_1_SQRT_2;
        // gap between the closed squares of two cells
        let square_gap = |a: usize, b: u32| (a.abs_diff(b as usize) as f64 - 1.0).max(0.0) * res;
        let mut offsets = Vec::with_capacity(grid.width * grid.height + 1);
        let mut candidates = Vec::new();
        offsets.push(0);
        for j in 0..grid.height {
            for i in 0..grid.width {
                if !grid.is_occupied(i, j) {
                    let center = grid.cell_center(i, j);
                    let best = std::cell::Cell::new(f64::INFINITY);
                    buckets.scan(i, j, || best.get(), |x, y| {
                        best.set(best.get().min(grid.distance_to_cell(center, x as usize, y as usize)));
                    });
                    let bound = best.get() + half_diag + 1e-9;
                    buckets.scan(i, j, || bound, |x, y| {
                        if square_gap(i, x).hypot(square_gap(j, y)) <= bound {
                            candidates.push((x, y));
                        }
                    });
                }
                offsets.push(candidates.len() as u32);
            }
        }
        Self { grid: grid.clone(), offsets, candidates }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    /// Same value as [`min_wall_clearance`].
    pub fn clearance(&self, position: Point2) -> Result<f64, WorldError> {
        let (ci, cj) = self
            .grid
            .cell_of(position)
            .ok_or(WorldError::OutOfBounds { x: position.x, y: position.y })?;
        if self.grid.is_occupied(ci, cj) {
            return Ok(0.0);
        }
        let c = cj * self.grid.width + ci;
        let range = self.offsets[c] as usize..self.offsets[c + 1] as usize;
        Ok(self.candidates[range]
            .iter()
            .map(|&(x, y)| self.grid.distance_to_cell(position, x as usize, y as usize))
            .fold(f64::INFINITY, f64::min))
    }

    /// `min(clearance, cap)`.
    pub fn clearance_capped(&self, position: Point2, cap: f64) -> Result<f64, WorldError> {
        Ok(self.clearance(position)?.min(cap))
    }
}

/// A scripted walker following a polyline at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pedestrian {
    pub id: String,
    pub waypoints: Vec<Point2>,
    pub speed: f64,
    pub start_time: f64,
    #[serde(rename = "loop", default)]
    pub looping: bool,
}

impl Pedestrian {
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.waypoints.is_empty() {
            return Err(WorldError::InvalidScenario(format!("pedestrian {} has no waypoints", self.id)));
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return Err(WorldError::InvalidScenario(format!("pedestrian {} has invalid speed", self.id)));
        }
        if !self.start_time.is_finite() {
            return Err(WorldError::InvalidScenario(format!("pedestrian {} has invalid start time", self.id)));
        }
        Ok(())
    }

    pub fn polyline_length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Position after walking `s` meters along the polyline (clamped).
    fn at_arc_length(&self, mut s: f64) -> Point2 {
        for w in self.waypoints.windows(2) {
            let len = w[0].distance(w[1]);
            if s <= len {
                return if len > 0.0 { w[0].lerp(w[1], s / len) } else { w[0] };
            }
            s -= len;
        }
        *self.waypoints.last().expect("validated non-empty")
    }
}

/// Where a pedestrian is at time `t`, or `None` before it starts walking.
pub fn pedestrian_position(p: &Pedestrian, t: f64) -> Option<Point2> {
    if t < p.start_time || p.waypoints.is_empty() {
        return None;
    }
    let mut s = (t - p.start_time) * p.speed;
    let total = p.polyline_length();
    if p.looping && total > 0.0 {
        s = s.rem_euclid(total);
    }
    Some(p.at_arc_length(s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClearancePolicy {
    pub min_wall: f64,
    pub min_person: f64,
}

impl Default for ClearancePolicy {
    fn default() -> Self {
        Self { min_wall: 0.9, min_person: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: String,
    #[serde(default)]
    pub name: String,
    pub grid: OccupancyGrid,
    pub robot_start: Pose,
    pub route: Vec<Point2>,
    #[serde(default)]
    pub pedestrians: Vec<Pedestrian>,
    #[serde(default)]
    pub limits: KinematicLimits,
    #[serde(default)]
    pub clearance_policy: ClearancePolicy,
}

impl Scenario {
    pub fn new(name: impl Into<String>, grid: OccupancyGrid, robot_start: Pose, route: Vec<Point2>) -> Self {
        Self {
            format: SCENARIO_FORMAT.to_string(),
            name: name.into(),
            grid,
            robot_start,
            route,
            pedestrians: Vec::new(),
            limits: KinematicLimits::default(),
            clearance_policy: ClearancePolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.format != SCENARIO_FORMAT {
            return Err(WorldError::InvalidScenario(format!(
                "unsupported format '{}', expected '{SCENARIO_FORMAT}'",
                self.format
            )));
        }
        let start = self.robot_start.position();
        if !self.grid.is_free_at(start) || !self.robot_start.theta.is_finite() {
            return Err(WorldError::InvalidScenario("robot start is not in free space".into()));
        }
        for (k, w) in self.route.iter().enumerate() {
            if !self.grid.is_free_at(*w) {
                return Err(WorldError::InvalidScenario(format!("route waypoint {k} is not in free space")));
            }
        }
        for p in &self.pedestrians {
            p.validate()?;
        }
        let pol = self.clearance_policy;
        if !(pol.min_wall > 0.0 && pol.min_person > 0.0) {
            return Err(WorldError::InvalidScenario("clearance policy distances must be > 0".into()));
        }
        self.limits
            .validate()
            .map_err(|e| WorldError::InvalidScenario(e.to_string()))?;
        Ok(())
    }

    /// Final point of the route (the start pose when the route is empty).
    pub fn goal(&self) -> Point2 {
        self.route.last().copied().unwrap_or(self.robot_start.position())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the canonical compact encoding.
    pub fn hash(&self) -> String {
        crate::io::sha256_hex(serde_json::to_string(self).expect("scenario serializes").as_bytes())
    }
}

/// Closest distance from `position` to any pedestrian present at `t`.
pub fn min_person_distance(position: Point2, scenario: &Scenario, t: f64) -> f64 {
    scenario
        .pedestrians
        .iter()
        .filter_map(|p| pedestrian_position(p, t))
        .map(|q| q.distance(position))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() < 1e-12
    }

    fn brute_clearance(p: Point2, g: &OccupancyGrid) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..g.height() {
            for i in 0..g.width() {
                if g.is_occupied(i, j) {
                    // independent formula: clamp to the square, measure
                    let x0 = g.origin().x + i as f64 * g.resolution();
                    let y0 = g.origin().y + j as f64 * g.resolution();
                    let cx = p.x.clamp(x0, x0 + g.resolution());
                    let cy = p.y.clamp(y0, y0 + g.resolution());
                    best = best.min(((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt());
                }
            }
        }
        best
    }

    fn random_grid(rng: &mut ChaCha8Rng) -> OccupancyGrid {
        let w = rng.gen_range(1..24);
        let h = rng.gen_range(1..24);
        let res = [0.05, 0.1, 0.5, 1.0][rng.gen_range(0..4)];
        let density = rng.gen_range(0.0..0.4);
        let cells = (0..w * h).map(|_| rng.gen_bool(density)).collect();
        OccupancyGrid::new(w, h, res, Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)), cells)
            .unwrap()
    }

    fn walker() -> Pedestrian {
        Pedestrian {
            id: "p".into(),
            waypoints: vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)],
            speed: 1.0,
            start_time: 2.0,
            looping: false,
        }
    }

    #[test]
    fn grid_validation() {
        assert!(OccupancyGrid::empty(2, 2, 0.0, Point2::default()).is_err());
        assert!(OccupancyGrid::new(2, 2, 1.0, Point2::default(), vec![false; 3]).is_err());
        assert!(OccupancyGrid::from_rows(&["01", "1"], 1.0, Point2::default()).is_err());
        assert!(OccupancyGrid::from_rows(&["0x"], 1.0, Point2::default()).is_err());
        let g = OccupancyGrid::from_rows(&["010", "001"], 1.0, Point2::default()).unwrap();
        assert!(g.is_occupied(1, 0) && g.is_occupied(2, 1) && !g.is_occupied(0, 1));
        assert_eq!(g.to_rows(), vec!["010", "001"]);
    }

    #[test]
    fn clearance_examples() {
        let g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        assert_eq!(min_wall_clearance(Point2::new(5.0, 5.0), &g).unwrap(), f64::INFINITY);
        let mut g = g;
        g.set(5, 2, true);
        // nearest face of cell (5,2) is x = 5, two meters from x = 3
        assert_eq!(min_wall_clearance(Point2::new(3.0, 2.5), &g).unwrap(), 2.0);
        assert_eq!(ClearanceIndex::new(&g).clearance(Point2::new(3.0, 2.5)).unwrap(), 2.0);
        assert!(matches!(
            min_wall_clearance(Point2::new(-1.0, 0.0), &g),
            Err(WorldError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn clearance_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let g = random_grid(&mut rng);
            let index = ClearanceIndex::new(&g);
            let (lo, hi) = g.extent();
            for _ in 0..20 {
                let p = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                let expect = brute_clearance(p, &g);
                let got = min_wall_clearance(p, &g).unwrap();
                assert!(close(got, expect), "{got} vs {expect} at {p:?}");
                let fast = index.clearance(p).unwrap();
                if g.is_free_at(p) {
                    assert!(close(fast, expect));
                } else {
                    assert_eq!(fast, 0.0);
                }
                let cap = rng.gen_range(0.0..3.0);
                assert_eq!(index.clearance_capped(p, cap).unwrap(), fast.min(cap));
            }
        }
    }

    #[test]
    fn pedestrian_examples() {
        let p = walker();
        assert_eq!(pedestrian_position(&p, 7.0), Some(Point2::new(5.0, 0.0)));
        assert_eq!(pedestrian_position(&p, 1.9), None);
        assert_eq!(pedestrian_position(&p, 100.0), Some(Point2::new(10.0, 0.0)));
        let looping = Pedestrian { looping: true, ..walker() };
        let q = pedestrian_position(&looping, 14.0).unwrap();
        assert!((q.x - 2.0).abs() < 1e-12 && q.y == 0.0);
    }

    #[test]
    fn person_distance_examples() {
        let g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        let mut s = Scenario::new("t", g, Pose { x: 0.5, y: 0.5, theta: 0.0 }, vec![]);
        assert_eq!(min_person_distance(Point2::new(0.0, 0.0), &s, 0.0), f64::INFINITY);
        s.pedestrians.push(Pedestrian {
            id: "a".into(),
            waypoints: vec![Point2::new(3.0, 4.0)],
            speed: 0.0,
            start_time: 0.0,
            looping: false,
        });
        assert_eq!(min_person_distance(Point2::new(0.0, 0.0), &s, 1.0), 5.0);
    }

    #[test]
    fn person_distance_is_brute_force_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        let mut s = Scenario::new("t", g, Pose { x: 0.5, y: 0.5, theta: 0.0 }, vec![]);
        for k in 0..5 {
            s.pedestrians.push(Pedestrian {
                id: format!("p{k}"),
                waypoints: (0..3)
                    .map(|_| Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
                    .collect(),
                speed: rng.gen_range(0.0..2.0),
                start_time: rng.gen_range(0.0..5.0),
                looping: rng.gen_bool(0.5),
            });
        }
        for step in 0..200 {
            let t = step as f64 * 0.1;
            let pos = Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
            let mut expect = f64::INFINITY;
            for p in &s.pedestrians {
                if let Some(q) = pedestrian_position(p, t) {
                    expect = expect.min(((q.x - pos.x).powi(2) + (q.y - pos.y).powi(2)).sqrt());
                }
            }
            let got = min_person_distance(pos, &s, t);
            assert!(got >= 0.0);
            assert!((got - expect).abs() <= 1e-12 || got == expect);
        }
    }

    #[test]
    fn scenario_validation() {
        let mut g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        g.set(0, 0, true);
        let s = Scenario::new("t", g.clone(), Pose { x: 0.5, y: 0.5, theta: 0.0 }, vec![]);
        assert!(s.validate().is_err());
        let s = Scenario::new("t", g.clone(), Pose { x: 2.5, y: 2.5, theta: 0.0 }, vec![Point2::new(0.5, 0.5)]);
        assert!(s.validate().is_err());
        let mut s = Scenario::new("t", g, Pose { x: 2.5, y: 2.5, theta: 0.0 }, vec![Point2::new(5.5, 5.5)]);
        assert!(s.validate().is_ok());
        s.clearance_policy.min_wall = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let mut g = OccupancyGrid::empty(4, 3, 0.5, Point2::new(-1.0, 2.0)).unwrap();
        g.set(3, 2, true);
        let mut s = Scenario::new("rt", g, Pose { x: 0.0, y: 2.5, theta: 0.25 }, vec![Point2::new(0.2, 3.0)]);
        s.pedestrians.push(walker());
        let text = s.to_json();
        assert!(text.contains("\"format\":\"scenario/1\""));
        assert!(text.contains("\"loop\":false"));
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash(), s.hash());
    }

    #[test]
    fn grid_json_round_trip() {
        let mut g = OccupancyGrid::empty(3, 2, 0.25, Point2::new(1.0, 0.0)).unwrap();
        g.set(0, 1, true);
        let text = g.to_json();
        assert!(text.contains("\"format\":\"grid/1\""));
        assert_eq!(OccupancyGrid::from_json(&text).unwrap(), g);
        assert!(OccupancyGrid::from_json(&text.replace("grid/1", "grid/2")).is_err());
    }

    proptest! {
        #[test]
        fn clearance_is_one_lipschitz(seed in 0u64..200, ax in 0.0f64..1.0, ay in 0.0f64..1.0, bx in 0.0f64..1.0, by in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_grid(&mut rng);
            let (lo, hi) = g.extent();
            let p = Point2::new(lo.x + ax * (hi.x - lo.x), lo.y + ay * (hi.y - lo.y));
            let q = Point2::new(lo.x + bx * (hi.x - lo.x), lo.y + by * (hi.y - lo.y));
            let cp = min_wall_clearance(p, &g).unwrap();
            let cq = min_wall_clearance(q, &g).unwrap();
            if cp.is_finite() {
                prop_assert!((cp - cq).abs() <= p.distance(q) + 1e-12);
            }
        }

        #[test]
        fn pedestrian_position_is_continuous(t in 2.0f64..30.0, dt in 0.0f64..1e-3, looping in any::<bool>()) {
            let p = Pedestrian { looping, waypoints: vec![Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), Point2::new(3.0, 4.0)], ..walker() };
            let a = pedestrian_position(&p, t).unwrap();
            let b = pedestrian_position(&p, t + dt).unwrap();
            // the loop closes with a jump from the end back to the first waypoint
            let wraps = looping && ((t - 2.0) / 7.0).floor() != ((t + dt - 2.0) / 7.0).floor();
            if !wraps {
                prop_assert!(a.distance(b) <= p.speed * dt + 1e-9);
            }
        }
    }
}
