#![allow(dead_code)]

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::path::PathBuf;
use std::process::{Command, Output};

use unwind_sim::planner::line_of_sight;
use unwind_sim::simulator::{ReplayLog, RunConfig};
use unwind_sim::{OccupancyGrid, Point2, Scenario};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    data("golden").join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::from_json(&std::fs::read_to_string(data(name)).unwrap()).unwrap()
}

pub fn default_config() -> RunConfig {
    RunConfig::from_json(&std::fs::read_to_string(data("default.runconfig.json")).unwrap()).unwrap()
}

pub fn golden_log(name: &str) -> ReplayLog {
    ReplayLog::from_json(&std::fs::read_to_string(golden(name)).unwrap()).unwrap()
}

/// Golden replays and the scenario each was recorded from.
pub const GOLDEN_LOGS: [(&str, &str); 3] = [
    ("campus-lite.ur.replay.json", "campus-lite.scenario.json"),
    ("campus-lite.cr.replay.json", "campus-lite.scenario.json"),
    ("square-loop.ur.replay.json", "square-loop.scenario.json"),
];

pub fn unwind_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unwind-sim")).args(args).output().unwrap()
}

pub fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

/// Shortest path length over the visibility graph of the planner's vertex
/// set, using its line-of-sight test. The vertices are the free cell centers,
/// with start and goal standing in for the centers of their own cells. `None`
/// when the goal is unreachable.
pub fn visibility_graph_shortest(grid: &OccupancyGrid, start: Point2, goal: Point2) -> Option<f64> {
    let mut nodes = vec![start, goal];
    let ends = [grid.cell_of(start), grid.cell_of(goal)];
    for j in 0..grid.height() {
        for i in 0..grid.width() {
            if !grid.is_occupied(i, j) && !ends.contains(&Some((i, j))) {
                nodes.push(grid.cell_center(i, j));
            }
        }
    }
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    // f64 distances are non-negative, so their bit patterns order correctly
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, 0usize)));
    while let Some(Reverse((_, u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == 1 {
            return Some(dist[1]);
        }
        for v in 0..n {
            if done[v] {
                continue;
            }
            let cand = dist[u] + nodes[u].distance(nodes[v]);
            if cand < dist[v] && line_of_sight(grid, nodes[u], nodes[v]).unwrap() {
                dist[v] = cand;
                heap.push(Reverse((cand.to_bits(), v)));
            }
        }
    }
    None
}

/// A random grid of at most 32×32 cells with start and goal at random points
/// inside free cells.
pub fn random_planning_case(rng: &mut impl rand::Rng) -> (OccupancyGrid, Point2, Point2) {
    let w = rng.gen_range(6..=32);
    let h = rng.gen_range(6..=32);
    let res = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
    let density = rng.gen_range(0.05..0.3);
    let cells = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    let mut grid = OccupancyGrid::new(w, h, res, Point2::new(0.0, 0.0), cells).unwrap();
    let mut free_point = |grid: &mut OccupancyGrid| {
        let (i, j) = (rng.gen_range(0..w), rng.gen_range(0..h));
        grid.set(i, j, false);
        Point2::new((i as f64 + rng.gen_range(0.05..0.95)) * res, (j as f64 + rng.gen_range(0.05..0.95)) * res)
    };
    let start = free_point(&mut grid);
    let goal = free_point(&mut grid);
    (grid, start, goal)
}

pub struct OracleCheck {
    pub solved: usize,
    pub unreachable: usize,
    /// Theta* length over oracle length, one entry per solved case.
    pub ratios: Vec<f64>,
    /// Cases longer than the oracle by more than the tolerance.
    pub over_tolerance: Vec<String>,
    /// Broken invariants: reachability disagreement, a blocked segment, a
    /// path shorter than the oracle or the straight line, or longer than the
    /// 8-connected grid path.
    pub failures: Vec<String>,
}

impl OracleCheck {
    pub fn worst_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(1.0, f64::max)
    }

    pub fn mean_ratio(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len().max(1) as f64
    }
}

/// Compares Theta* against the visibility-graph oracle on `cases` random
/// grids.
pub fn check_planner_against_oracle(seed: u64, cases: usize, rel_tol: f64) -> OracleCheck {
    use rand::SeedableRng;
    use unwind_sim::planner::{plan_grid_astar, plan_theta_star, PlanError};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out =
        OracleCheck { solved: 0, unreachable: 0, ratios: Vec::new(), over_tolerance: Vec::new(), failures: Vec::new() };
    for case in 0..cases {
        let (grid, start, goal) = random_planning_case(&mut rng);
        let oracle = visibility_graph_shortest(&grid, start, goal);
        match (plan_theta_star(&grid, start, goal), oracle) {
            (Ok(path), Some(best)) => {
                out.solved += 1;
                let len = path.length();
                let ratio = if best > 0.0 { len / best } else { 1.0 };
                out.ratios.push(ratio);
                if ratio > 1.0 + rel_tol {
                    out.over_tolerance.push(format!("case {case}: length {len:.4} vs oracle {best:.4}"));
                }
                if len < best - 1e-9 {
                    out.failures.push(format!("case {case}: length {len} below oracle {best}"));
                }
                if len < start.distance(goal) - 1e-12 {
                    out.failures.push(format!("case {case}: length {len} below straight line"));
                }
                let grid_len = plan_grid_astar(&grid, start, goal).unwrap().length();
                if len > grid_len + 1e-9 {
                    out.failures.push(format!("case {case}: length {len} above grid path {grid_len}"));
                }
                for w in path.vertices().windows(2) {
                    if !line_of_sight(&grid, w[0], w[1]).unwrap() {
                        out.failures.push(format!("case {case}: segment {:?} -> {:?} is blocked", w[0], w[1]));
                    }
                }
            }
            (Err(PlanError::NoPath), None) => out.unreachable += 1,
            (got, want) => out.failures.push(format!("case {case}: planner {got:?}, oracle {want:?}")),
        }
    }
    out
}
