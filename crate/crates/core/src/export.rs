//! The `viewer-bundle/1` document read by the browser viewer.

use serde::{Deserialize, Serialize};

use crate::geometry::ViewMode;
use crate::io;
use crate::simulator::{camera_frame_yaw, ReplayLog, SimError};
use crate::world::{pedestrian_position, OccupancyGrid, Scenario};

pub const BUNDLE_FORMAT: &str = "viewer-bundle/1";
/// Camera height above the robot base, metres.
pub const CAMERA_HEIGHT: f64 = 1.5;
pub const WALL_HEIGHT: f64 = 2.5;

/// A wall face between occupied and free cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }
}

/// Maximal straight boundary segments between occupied and free cells.
///
/// Collinear unit faces are merged while the occupied side stays the same.
/// The map edge counts as occupied, so free cells on the border get a wall
/// and occupied border cells do not.
pub fn wall_segments(grid: &OccupancyGrid) -> Vec<WallSegment> {
    let (w, h) = (grid.width() as isize, grid.height() as isize);
    let res = grid.resolution();
    let o = grid.origin();
    let mut out = Vec::new();
    // side of a face: 0 none, 1 occupied below/left, 2 occupied above/right
    let side = |a: bool, b: bool| match (a, b) {
        (true, false) => 1u8,
        (false, true) => 2,
        _ => 0,
    };
    for j in 0..=h {
        let y = o.y + j as f64 * res;
        let mut run: Option<(isize, u8)> = None;
        for i in 0..=w {
            let s = if i < w { side(grid.is_blocked(i, j - 1), grid.is_blocked(i, j)) } else { 0 };
            match run {
                Some((_, rs)) if rs == s => {}
                _ => {
                    if let Some((start, rs)) = run.take() {
                        if rs != 0 {
                            out.push(WallSegment { x0: o.x + start as f64 * res, y0: y, x1: o.x + i as f64 * res, y1: y });
                        }
                    }
                    run = Some((i, s));
                }
            }
        }
    }
    for i in 0..=w {
        let x = o.x + i as f64 * res;
        let mut run: Option<(isize, u8)> = None;
        for j in 0..=h {
            let s = if j < h { side(grid.is_blocked(i - 1, j), grid.is_blocked(i, j)) } else { 0 };
            match run {
                Some((_, rs)) if rs == s => {}
                _ => {
                    if let Some((start, rs)) = run.take() {
                        if rs != 0 {
                            out.push(WallSegment { x0: x, y0: o.y + start as f64 * res, x1: x, y1: o.y + j as f64 * res });
                        }
                    }
                    run = Some((j, s));
                }
            }
        }
    }
    out
}

/// Robot pose samples at `t = k·dt`, `k = 0..=steps`; sample 0 is the start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotTrack {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Pedestrian positions on the robot's time base; `None` before the walker
/// starts or after a non-looping walker finishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PedestrianTrack {
    pub id: String,
    pub positions: Vec<Option<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraYawTracks {
    #[serde(rename = "UR")]
    pub unwound: Vec<f64>,
    #[serde(rename = "CR")]
    pub coupled: Vec<f64>,
}

impl CameraYawTracks {
    pub fn get(&self, mode: ViewMode) -> &[f64] {
        match mode {
            ViewMode::Unwound => &self.unwound,
            ViewMode::Coupled => &self.coupled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewerBundle {
    pub format: String,
    pub scenario_hash: String,
    pub dt: f64,
    pub duration: f64,
    pub camera_height: f64,
    pub wall_height: f64,
    pub walls: Vec<WallSegment>,
    pub pedestrians: Vec<PedestrianTrack>,
    pub robot: RobotTrack,
    pub camera_frame_yaw: CameraYawTracks,
}

impl ViewerBundle {
    /// Builds the bundle for a recorded run. Both modes' camera tracks are
    /// derived from the logged robot yaw, whichever mode was recorded.
    pub fn build(log: &ReplayLog, scenario: &Scenario) -> Result<Self, SimError> {
        if log.header.scenario_hash != scenario.hash() {
            return Err(SimError::HeaderMismatch { field: "scenario_hash" });
        }
        let dt = log.header.dt;
        let start = log.header.start;
        let poses: Vec<_> = std::iter::once(start).chain(log.steps.iter().map(|s| s.pose())).collect();
        let times: Vec<f64> = (0..poses.len()).map(|k| k as f64 * dt).collect();
        let robot = RobotTrack {
            x: poses.iter().map(|p| p.x).collect(),
            y: poses.iter().map(|p| p.y).collect(),
            theta: poses.iter().map(|p| p.theta).collect(),
        };
        let pedestrians = scenario
            .pedestrians
            .iter()
            .map(|p| PedestrianTrack {
                id: p.id.clone(),
                positions: times.iter().map(|&t| pedestrian_position(p, t).map(|q| [q.x, q.y])).collect(),
            })
            .collect();
        let camera_frame_yaw = CameraYawTracks {
            unwound: robot.theta.iter().map(|&th| camera_frame_yaw(th, ViewMode::Unwound)).collect(),
            coupled: robot.theta.iter().map(|&th| camera_frame_yaw(th, ViewMode::Coupled)).collect(),
        };
        Ok(ViewerBundle {
            format: BUNDLE_FORMAT.to_string(),
            scenario_hash: log.header.scenario_hash.clone(),
            dt,
            duration: log.duration(),
            camera_height: CAMERA_HEIGHT,
            wall_height: WALL_HEIGHT,
            walls: wall_segments(&scenario.grid),
            pedestrians,
            robot,
            camera_frame_yaw,
        })
    }

    /// Every track has `duration/dt + 1` samples.
    pub fn validate(&self) -> Result<(), crate::Error> {
        io::expect_format(&self.format, BUNDLE_FORMAT)?;
        let bad = |m: String| Err(SimError::InconsistentLog(m).into());
        if !(self.dt > 0.0) {
            return bad("dt must be > 0".into());
        }
        let n = (self.duration / self.dt).round() as usize + 1;
        let lens = [
            self.robot.x.len(),
            self.robot.y.len(),
            self.robot.theta.len(),
            self.camera_frame_yaw.unwound.len(),
            self.camera_frame_yaw.coupled.len(),
        ];
        if lens.iter().any(|&l| l != n) || self.pedestrians.iter().any(|p| p.positions.len() != n) {
            return bad(format!("track lengths do not match {n} samples"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        io::to_json_line(self)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let b: ViewerBundle = serde_json::from_str(text)?;
        b.validate()?;
        Ok(b)
    }
}
