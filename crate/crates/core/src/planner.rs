//! Any-angle global planning over an occupancy grid with basic Theta*.
//!
//! Search nodes are free cells. A cell's node sits at its center, except
//! the start and goal cells whose nodes are the exact start and goal
//! points. On expansion a neighbour first tries to hang off the expanded
//! node's parent (line of sight permitting), otherwise off the node itself.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::world::{OccupancyGrid, Point2, WorldError};

pub const PATH_FORMAT: &str = "path/1";

/// Slack added to swept intervals so grazing contacts are never missed to
/// rounding. Errs on the strict side.
const SWEEP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error(transparent)]
    OutOfBounds(#[from] WorldError),
    #[error("{which} point ({x}, {y}) is not in free space")]
    InvalidEndpoint { which: &'static str, x: f64, y: f64 },
    #[error("no path from start to goal")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPolyline {
    vertices: Vec<Point2>,
    length: f64,
}

impl PathPolyline {
    pub fn new(vertices: Vec<Point2>) -> Self {
        let length = vertices.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self { vertices, length }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn start(&self) -> Point2 {
        self.vertices[0]
    }

    pub fn goal(&self) -> Point2 {
        *self.vertices.last().expect("non-empty path")
    }

    /// Appends `next`, dropping its first vertex when it repeats our last.
    pub fn extend(&mut self, next: &PathPolyline) {
        let skip = usize::from(self.vertices.last() == next.vertices.first());
        self.vertices.extend_from_slice(&next.vertices[skip..]);
        self.length = self.vertices.windows(2).map(|w| w[0].distance(w[1])).sum();
    }

    /// Point at arc length `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> Point2 {
        let mut rest = s.max(0.0);
        for w in self.vertices.windows(2) {
            let len = w[0].distance(w[1]);
            if rest <= len {
                return if len > 0.0 { w[0].lerp(w[1], rest / len) } else { w[0] };
            }
            rest -= len;
        }
        self.goal()
    }

    /// Closest point of the path to `p` among arc lengths in `[s_lo, s_hi]`.
    /// Returns `(arc_length, distance)`; the earliest arc length wins ties.
    pub fn project_window(&self, p: Point2, s_lo: f64, s_hi: f64) -> (f64, f64) {
        if self.vertices.len() == 1 {
            return (0.0, p.distance(self.vertices[0]));
        }
        let s_lo = s_lo.clamp(0.0, self.length);
        let s_hi = s_hi.clamp(s_lo, self.length);
        let mut best = (s_lo, f64::INFINITY);
        let mut acc = 0.0;
        for w in self.vertices.windows(2) {
            let len = w[0].distance(w[1]);
            let (seg_lo, seg_hi) = (acc, acc + len);
            acc = seg_hi;
            if seg_hi < s_lo || seg_lo > s_hi {
                continue;
            }
            let (a, b) = (w[0], w[1]);
            let t = if len > 0.0 {
                ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / (len * len)
            } else {
                0.0
            };
            let s = (seg_lo + t.clamp(0.0, 1.0) * len).clamp(s_lo.max(seg_lo), s_hi.min(seg_hi));
            let q = if len > 0.0 { a.lerp(b, (s - seg_lo) / len) } else { a };
            let d = p.distance(q);
            if d < best.1 {
                best = (s, d);
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            format: &'static str,
            vertices: &'a [Point2],
            length: f64,
        }
        let mut s = serde_json::to_string(&Doc {
            format: PATH_FORMAT,
            vertices: &self.vertices,
            length: self.length,
        })
        .expect("path serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        #[derive(Deserialize)]
        struct Doc {
            format: String,
            vertices: Vec<Point2>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        crate::io::expect_format(&doc.format, PATH_FORMAT)?;
        Ok(PathPolyline::new(doc.vertices))
    }
}

/// True iff the closed segment `a`–`b` touches no blocked cell.
///
/// Every cell whose closed square meets the segment is checked, so passing
/// exactly through a cell corner or along a cell edge tests the cells on
/// both sides. Cells outside the grid count as blocked.
pub fn line_of_sight(grid: &OccupancyGrid, a: Point2, b: Point2) -> Result<bool, PlanError> {
    for p in [a, b] {
        if !grid.contains(p) {
            return Err(WorldError::OutOfBounds { x: p.x, y: p.y }.into());
        }
    }
    Ok(segment_clear(grid, a, b))
}

pub(crate) fn segment_clear(grid: &OccupancyGrid, a: Point2, b: Point2) -> bool {
    let (mut ax, mut ay) = grid.to_grid(a);
    let (mut bx, mut by) = grid.to_grid(b);
    if ax > bx {
        std::mem::swap(&mut ax, &mut bx);
        std::mem::swap(&mut ay, &mut by);
    }
    let i_lo = (ax - SWEEP_EPS).ceil() as isize - 1;
    let i_hi = (bx + SWEEP_EPS).floor() as isize;
    let slope = if bx > ax { (by - ay) / (bx - ax) } else { 0.0 };
    for i in i_lo..=i_hi {
        // x-extent of the segment inside the closed column [i, i+1]
        let x0 = ax.max(i as f64);
        let x1 = bx.min((i + 1) as f64);
        let (y0, y1) = if bx > ax {
            let ya = ay + slope * (x0.max(ax) - ax);
            let yb = ay + slope * (x1.max(x0) - ax);
            (ya.min(yb), ya.max(yb))
        } else {
            (ay.min(by), ay.max(by))
        };
        let j_lo = (y0 - SWEEP_EPS).ceil() as isize - 1;
        let j_hi = (y1 + SWEEP_EPS).floor() as isize;
        for j in j_lo..=j_hi {
            if grid.is_blocked(i, j) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenEntry {
    f: f64,
    g: f64,
    cell: usize,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: "greater" pops first.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then(self.g.total_cmp(&o.g))
            .then(o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

const NEIGHBOURS: [(isize, isize); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

struct SearchSpace<'g> {
    grid: &'g OccupancyGrid,
    start_cell: usize,
    goal_cell: usize,
    start: Point2,
    goal: Point2,
}

impl SearchSpace<'_> {
    fn node(&self, cell: usize) -> Point2 {
        if cell == self.start_cell {
            self.start
        } else if cell == self.goal_cell {
            self.goal
        } else {
            let w = self.grid.width();
            self.grid.cell_center(cell % w, cell / w)
        }
    }

    fn neighbours(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let w = self.grid.width() as isize;
        let (i, j) = (cell as isize % w, cell as isize / w);
        NEIGHBOURS.iter().filter_map(move |&(di, dj)| {
            let (ni, nj) = (i + di, j + dj);
            (!self.grid.is_blocked(ni, nj)).then_some((nj * w + ni) as usize)
        })
    }
}

fn validate_endpoints(grid: &OccupancyGrid, start: Point2, goal: Point2) -> Result<(usize, usize), PlanError> {
    let mut cells = [0usize; 2];
    for (k, (which, p)) in [("start", start), ("goal", goal)].into_iter().enumerate() {
        let (i, j) = grid
            .cell_of(p)
            .ok_or(PlanError::OutOfBounds(WorldError::OutOfBounds { x: p.x, y: p.y }))?;
        if grid.is_occupied(i, j) {
            return Err(PlanError::InvalidEndpoint { which, x: p.x, y: p.y });
        }
        cells[k] = j * grid.width() + i;
    }
    Ok((cells[0], cells[1]))
}

/// Plans an any-angle path with basic Theta*.
pub fn plan_theta_star(grid: &OccupancyGrid, start: Point2, goal: Point2) -> Result<PathPolyline, PlanError> {
    search(grid, start, goal, true)
}

/// 8-connected A* over the same node set (Theta* without shortcutting).
pub fn plan_grid_astar(grid: &OccupancyGrid, start: Point2, goal: Point2) -> Result<PathPolyline, PlanError> {
    search(grid, start, goal, false)
}

fn search(grid: &OccupancyGrid, start: Point2, goal: Point2, any_angle: bool) -> Result<PathPolyline, PlanError> {
    let (start_cell, goal_cell) = validate_endpoints(grid, start, goal)?;
    if start == goal {
        return Ok(PathPolyline::new(vec![start]));
    }
    if start_cell == goal_cell {
        return if segment_clear(grid, start, goal) {
            Ok(PathPolyline::new(vec![start, goal]))
        } else {
            Err(PlanError::NoPath)
        };
    }
    let space = SearchSpace { grid, start_cell, goal_cell, start, goal };
    let n = grid.width() * grid.height();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start_cell] = 0.0;
    parent[start_cell] = start_cell;
    open.push(OpenEntry { f: start.distance(goal), g: 0.0, cell: start_cell });

    while let Some(OpenEntry { g: g_s, cell: s, .. }) = open.pop() {
        if closed[s] || g_s > g[s] {
            continue;
        }
        if s == goal_cell {
            let mut vertices = vec![space.node(s)];
            let mut c = s;
            while parent[c] != c {
                c = parent[c];
                vertices.push(space.node(c));
            }
            vertices.reverse();
            return Ok(PathPolyline::new(vertices));
        }
        closed[s] = true;
        let ps = space.node(s);
        let par = parent[s];
        let pp = space.node(par);
        for nb in space.neighbours(s) {
            if closed[nb] {
                continue;
            }
            let pn = space.node(nb);
            let (cand_parent, cand_g) = if any_angle && segment_clear(grid, pp, pn) {
                (par, g[par] + pp.distance(pn))
            } else if segment_clear(grid, ps, pn) {
                (s, g[s] + ps.distance(pn))
            } else {
                continue;
            };
            if cand_g < g[nb] {
                g[nb] = cand_g;
                parent[nb] = cand_parent;
                open.push(OpenEntry { f: cand_g + pn.distance(goal), g: cand_g, cell: nb });
            }
        }
    }
    Err(PlanError::NoPath)
}

/// Plans through each waypoint in turn and concatenates the legs.
pub fn plan_route(grid: &OccupancyGrid, start: Point2, route: &[Point2]) -> Result<PathPolyline, PlanError> {
    let mut path = PathPolyline::new(vec![start]);
    let mut from = start;
    for &wp in route {
        let leg = plan_theta_star(grid, from, wp)?;
        path.extend(&leg);
        from = wp;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(rows: &[&str]) -> OccupancyGrid {
        OccupancyGrid::from_rows(rows, 1.0, Point2::default()).unwrap()
    }

    /// Blocked iff some sample point at 1/100-cell spacing lies in a blocked cell.
    fn sampled_blocked(g: &OccupancyGrid, a: Point2, b: Point2) -> bool {
        let steps = ((a.distance(b) / g.resolution()) * 100.0).ceil().max(1.0) as usize;
        (0..=steps).any(|k| {
            let p = a.lerp(b, k as f64 / steps as f64);
            let (gx, gy) = g.to_grid(p);
            g.is_blocked(gx.floor() as isize, gy.floor() as isize)
        })
    }

    #[test]
    fn los_empty_grid() {
        let g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        assert!(line_of_sight(&g, Point2::new(0.5, 0.5), Point2::new(9.5, 9.5)).unwrap());
        assert!(line_of_sight(&g, Point2::new(0.5, 9.5), Point2::new(9.5, 0.2)).unwrap());
        assert!(line_of_sight(&g, Point2::new(3.0, 3.0), Point2::new(3.0, 3.0)).unwrap());
        assert!(line_of_sight(&g, Point2::new(-1.0, 0.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn los_blocked_at_midpoint() {
        let mut g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        g.set(5, 5, true);
        assert!(!line_of_sight(&g, Point2::new(1.5, 5.5), Point2::new(9.5, 5.5)).unwrap());
        assert!(!line_of_sight(&g, Point2::new(0.5, 0.5), Point2::new(9.5, 9.5)).unwrap());
    }

    #[test]
    fn los_corner_grazing_is_blocked() {
        // the diagonal through the shared corner of (1,0) and (0,1)
        let g = grid(&["010", "100", "000"]);
        assert!(!line_of_sight(&g, Point2::new(0.5, 0.5), Point2::new(1.5, 1.5)).unwrap());
        // running along an occupied cell's edge
        let g = grid(&["000", "010", "000"]);
        assert!(!line_of_sight(&g, Point2::new(0.5, 1.0), Point2::new(2.5, 1.0)).unwrap());
        assert!(line_of_sight(&g, Point2::new(0.5, 0.5), Point2::new(2.5, 0.5)).unwrap());
    }

    #[test]
    fn supercover_at_least_as_strict_as_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (w, h) = (rng.gen_range(2..16), rng.gen_range(2..16));
            let cells = (0..w * h).map(|_| rng.gen_bool(0.2)).collect();
            let g = OccupancyGrid::new(w, h, 0.5, Point2::new(1.0, -2.0), cells).unwrap();
            let (lo, hi) = g.extent();
            for _ in 0..20 {
                let a = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                let b = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                if sampled_blocked(&g, a, b) {
                    assert!(!line_of_sight(&g, a, b).unwrap(), "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn plan_free_space_is_straight() {
        let g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        let p = plan_theta_star(&g, Point2::new(0.5, 0.5), Point2::new(9.5, 9.5)).unwrap();
        assert_eq!(p.vertices().len(), 2);
        assert!((p.length() - 9.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plan_enclosed_goal() {
        let g = grid(&["00000", "01110", "01010", "01110", "00000"]);
        assert_eq!(
            plan_theta_star(&g, Point2::new(0.5, 0.5), Point2::new(2.5, 2.5)),
            Err(PlanError::NoPath)
        );
    }

    #[test]
    fn plan_rejects_blocked_endpoints() {
        let g = grid(&["01", "00"]);
        assert!(matches!(
            plan_theta_star(&g, Point2::new(1.5, 0.5), Point2::new(0.5, 1.5)),
            Err(PlanError::InvalidEndpoint { which: "start", .. })
        ));
        assert!(matches!(
            plan_theta_star(&g, Point2::new(0.5, 1.5), Point2::new(1.5, 0.5)),
            Err(PlanError::InvalidEndpoint { which: "goal", .. })
        ));
    }

    #[test]
    fn plan_single_wall_turns_once() {
        let mut g = OccupancyGrid::empty(10, 10, 1.0, Point2::default()).unwrap();
        for j in 0..8 {
            g.set(5, j, true);
        }
        let p = plan_theta_star(&g, Point2::new(1.5, 1.5), Point2::new(8.5, 1.5)).unwrap();
        assert_eq!(p.vertices().len(), 4, "{:?}", p.vertices());
        for w in p.vertices().windows(2) {
            assert!(line_of_sight(&g, w[0], w[1]).unwrap());
        }
    }

    #[test]
    fn project_window_examples() {
        let p = PathPolyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(10.0, 10.0)]);
        assert_eq!(p.project_window(Point2::new(3.0, 1.0), 0.0, 30.0), (3.0, 1.0));
        let (s, d) = p.project_window(Point2::new(11.0, 5.0), 0.0, 30.0);
        assert_eq!((s, d), (15.0, 1.0));
        // the window excludes the closer second leg
        let (s, _) = p.project_window(Point2::new(11.0, 5.0), 0.0, 4.0);
        assert_eq!(s, 4.0);
        assert_eq!(p.point_at(15.0), Point2::new(10.0, 5.0));
    }

    #[test]
    fn path_json_round_trip() {
        let p = PathPolyline::new(vec![Point2::new(0.5, 0.5), Point2::new(2.0, 0.25)]);
        let back = PathPolyline::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert!(PathPolyline::from_json("{\"format\":\"nope\",\"vertices\":[]}").is_err());
    }
}
