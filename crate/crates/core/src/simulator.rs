//! Deterministic, fixed-step scenario runs and replay logs.
//!
//! A run plans once through the scenario's route, then alternates
//! [`control_step`] and [`integrate_unicycle`] until the goal is reached,
//! the controller gets stuck or the timeout expires. Every step is recorded;
//! serializing the same inputs always produces the same bytes.

use serde::{Deserialize, Serialize};

use crate::controller::{
    control_step, ControlContext, ControlError, ControlOutcome, ControllerConfig, KinematicLimits, RobotState,
};
use crate::geometry::{viewpoint_heading, wrap_angle, PlanarRotation, ViewMode};
use crate::io::{self, infinite_as_null};
use crate::planner::{plan_route, PathPolyline, PlanError};
use crate::world::{min_person_distance, ClearanceIndex, ClearancePolicy, Pose, Scenario};

pub const REPLAY_FORMAT: &str = "replay/1";
pub const RUNCONFIG_FORMAT: &str = "runconfig/1";
pub const HEADTRACE_FORMAT: &str = "headtrace/1";
pub const VIEWSAMPLES_FORMAT: &str = "viewsamples/1";

/// Tolerance for recomputed aggregates in log consistency checks.
pub const AGGREGATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("head trace ends at {trace_end} s but the log runs to {log_end} s")]
    TraceTooShort { trace_end: f64, log_end: f64 },
    #[error("invalid head trace: {0}")]
    InvalidTrace(String),
    #[error("replay header {field} does not match the inputs")]
    HeaderMismatch { field: &'static str },
    #[error("inconsistent replay log: {0}")]
    InconsistentLog(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub format: String,
    #[serde(flatten)]
    pub controller: ControllerConfig,
    pub timeout: f64,
    pub seed: u64,
    pub mode: ViewMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format: RUNCONFIG_FORMAT.to_string(),
            controller: ControllerConfig::default(),
            timeout: 300.0,
            seed: 0,
            mode: ViewMode::Unwound,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.format != RUNCONFIG_FORMAT {
            return Err(SimError::InvalidConfig(format!(
                "unsupported format '{}', expected '{RUNCONFIG_FORMAT}'",
                self.format
            )));
        }
        self.controller
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            return Err(SimError::InvalidConfig("timeout must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        io::to_json_line(self)
    }

    /// SHA-256 of the canonical encoding without `mode`; the mode is recorded
    /// separately so UR and CR runs of one config share a hash.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("mode");
        }
        io::sha256_hex(serde_json::to_string(&v).expect("value serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayHeader {
    pub scenario_hash: String,
    pub config_hash: String,
    pub dt: f64,
    pub mode: ViewMode,
    pub seed: u64,
    pub start: Pose,
    pub limits: KinematicLimits,
    pub clearance_policy: ClearancePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayStep {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub camera_frame_yaw: f64,
    #[serde(with = "infinite_as_null")]
    pub min_wall_clearance: f64,
    #[serde(with = "infinite_as_null")]
    pub min_person_distance: f64,
}

impl ReplayStep {
    pub fn pose(&self) -> Pose {
        Pose { x: self.x, y: self.y, theta: self.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    GoalReached,
    Stuck,
    Timeout,
    NoPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Termination {
    pub kind: TerminationKind,
    /// Number of steps recorded when the run ended.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFooter {
    pub path_length: f64,
    pub duration: f64,
    /// Σ|Δθ| over the run, degrees.
    pub total_rotation: f64,
    pub goal_reached: bool,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayLog {
    pub format: String,
    pub header: ReplayHeader,
    pub steps: Vec<ReplayStep>,
    pub footer: ReplayFooter,
}

/// Camera-frame yaw that goes with robot yaw `theta` in a given mode.
pub fn camera_frame_yaw(theta: f64, mode: ViewMode) -> f64 {
    match mode {
        ViewMode::Unwound => -theta,
        ViewMode::Coupled => 0.0,
    }
}

/// Path length (m) and total rotation (deg) walking from `start` through
/// every step.
pub fn aggregate_motion(start: &Pose, steps: &[ReplayStep]) -> (f64, f64) {
    let mut length = 0.0;
    let mut rotation = 0.0;
    let mut prev = *start;
    for s in steps {
        length += (s.x - prev.x).hypot(s.y - prev.y);
        rotation += wrap_angle(s.theta - prev.theta).abs();
        prev = s.pose();
    }
    (length, rotation.to_degrees())
}

impl ReplayLog {
    pub fn to_json(&self) -> String {
        io::to_json_line(self)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let log: ReplayLog = serde_json::from_str(text)?;
        io::expect_format(&log.format, REPLAY_FORMAT)?;
        Ok(log)
    }

    pub fn duration(&self) -> f64 {
        self.steps.len() as f64 * self.header.dt
    }

    /// Internal invariants: constant time step, camera yaw matching the
    /// mode, and footer aggregates matching the steps.
    pub fn check_consistency(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InconsistentLog(m));
        if self.format != REPLAY_FORMAT {
            return bad(format!("format '{}'", self.format));
        }
        let dt = self.header.dt;
        if !(dt > 0.0) {
            return bad("dt must be > 0".into());
        }
        let mut prev_t = 0.0;
        for (k, s) in self.steps.iter().enumerate() {
            if !((s.t - prev_t) - dt).abs().le(&AGGREGATE_TOLERANCE) {
                return bad(format!("step {k}: time {} does not follow {prev_t} by dt", s.t));
            }
            prev_t = s.t;
            if s.camera_frame_yaw != camera_frame_yaw(s.theta, self.header.mode) {
                return bad(format!("step {k}: camera frame yaw does not match {} mode", self.header.mode));
            }
        }
        let (length, rotation) = aggregate_motion(&self.header.start, &self.steps);
        let f = &self.footer;
        if (f.path_length - length).abs() > AGGREGATE_TOLERANCE {
            return bad(format!("footer path length {} but steps give {length}", f.path_length));
        }
        if (f.total_rotation - rotation).abs() > AGGREGATE_TOLERANCE {
            return bad(format!("footer rotation {} but steps give {rotation}", f.total_rotation));
        }
        if (f.duration - self.duration()).abs() > AGGREGATE_TOLERANCE {
            return bad(format!("footer duration {} but steps give {}", f.duration, self.duration()));
        }
        if f.termination.step != self.steps.len() {
            return bad("termination step differs from the step count".into());
        }
        if f.goal_reached != (f.termination.kind == TerminationKind::GoalReached) {
            return bad("goal_reached flag disagrees with termination".into());
        }
        Ok(())
    }
}

/// Plans the scenario's route from the robot start.
pub fn plan_scenario(scenario: &Scenario) -> Result<PathPolyline, PlanError> {
    plan_route(&scenario.grid, scenario.robot_start.position(), &scenario.route)
}

/// Runs a scenario to completion and records it.
pub fn run_scenario(scenario: &Scenario, config: &RunConfig, mode: ViewMode) -> Result<ReplayLog, SimError> {
    scenario
        .validate()
        .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
    config.validate()?;
    let cfg = &config.controller;
    let dt = cfg.dt;
    let start = Pose { theta: wrap_angle(scenario.robot_start.theta), ..scenario.robot_start };
    let header = ReplayHeader {
        scenario_hash: scenario.hash(),
        config_hash: config.hash(),
        dt,
        mode,
        seed: config.seed,
        start,
        limits: scenario.limits,
        clearance_policy: scenario.clearance_policy,
    };

    let mut steps = Vec::new();
    let kind = match plan_scenario(scenario) {
        Err(_) => TerminationKind::NoPath,
        Ok(path) => {
            let clearance = ClearanceIndex::new(&scenario.grid);
            let mut ctx = ControlContext { path: &path, scenario, clearance: &clearance, config: cfg, progress: 0.0 };
            let mut state = RobotState::at_rest(start);
            ctx.progress = ctx.advance(state.position());
            loop {
                if state.t >= config.timeout {
                    break TerminationKind::Timeout;
                }
                let cmd = match control_step(&state, &ctx) {
                    Ok(ControlOutcome::GoalReached) => break TerminationKind::GoalReached,
                    Ok(ControlOutcome::Command(cmd)) => cmd,
                    Err(ControlError::Stuck { .. }) => break TerminationKind::Stuck,
                    Err(e) => return Err(SimError::InvalidConfig(e.to_string())),
                };
                let mut next = crate::controller::integrate_unicycle(&state, cmd, dt);
                // times are multiples of dt, not running sums
                next.t = (steps.len() + 1) as f64 * dt;
                state = next;
                ctx.progress = ctx.advance(state.position());
                let p = state.position();
                steps.push(ReplayStep {
                    t: state.t,
                    x: state.x,
                    y: state.y,
                    theta: state.theta,
                    v: state.v,
                    omega: state.omega,
                    camera_frame_yaw: camera_frame_yaw(state.theta, mode),
                    min_wall_clearance: clearance.clearance(p).unwrap_or(0.0),
                    min_person_distance: min_person_distance(p, scenario, state.t),
                });
            }
        }
    };

    let (path_length, total_rotation) = aggregate_motion(&start, &steps);
    let footer = ReplayFooter {
        path_length,
        duration: steps.len() as f64 * dt,
        total_rotation,
        goal_reached: kind == TerminationKind::GoalReached,
        termination: Termination { kind, step: steps.len() },
    };
    Ok(ReplayLog { format: REPLAY_FORMAT.to_string(), header, steps, footer })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub identical: bool,
    /// First step whose bytes differ; `None` when the steps agree and only
    /// the header/footer or step count differ.
    pub first_divergent_step: Option<usize>,
}

/// Re-runs the simulation behind `log` and compares the encodings.
///
/// Logs whose header hashes or seed do not belong to `scenario`/`config`
/// are rejected before anything is simulated.
pub fn replay_verify(log: &ReplayLog, scenario: &Scenario, config: &RunConfig) -> Result<VerifyReport, SimError> {
    if log.header.scenario_hash != scenario.hash() {
        return Err(SimError::HeaderMismatch { field: "scenario_hash" });
    }
    if log.header.config_hash != config.hash() {
        return Err(SimError::HeaderMismatch { field: "config_hash" });
    }
    if log.header.seed != config.seed {
        return Err(SimError::HeaderMismatch { field: "seed" });
    }
    let fresh = run_scenario(scenario, config, log.header.mode)?;
    let identical = fresh.to_json() == log.to_json();
    let first_divergent_step = log
        .steps
        .iter()
        .zip(&fresh.steps)
        .position(|(a, b)| io::to_json_line(a) != io::to_json_line(b))
        .or_else(|| (log.steps.len() != fresh.steps.len()).then(|| log.steps.len().min(fresh.steps.len())));
    Ok(VerifyReport { identical, first_divergent_step })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadSample {
    pub t: f64,
    pub yaw: f64,
}

/// Synthetic head motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeadTrace {
    /// Head held at a fixed yaw.
    Still { yaw: f64 },
    /// Under UR the head turns toward the robot heading through a
    /// first-order lag; under CR the user need not turn and the head stays
    /// at 0.
    FollowHeading { lag_tau: f64 },
    Sinusoid { amplitude: f64, period: f64 },
    /// Recorded samples, linearly interpolated along the shorter arc.
    Scripted { samples: Vec<HeadSample> },
}

impl HeadTrace {
    pub const DEFAULT_LAG_TAU: f64 = 0.7;

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidTrace(m.to_string()));
        match self {
            HeadTrace::Still { yaw } if !yaw.is_finite() => bad("yaw must be finite"),
            HeadTrace::FollowHeading { lag_tau } if !(*lag_tau > 0.0) => bad("lag must be > 0"),
            HeadTrace::Sinusoid { amplitude, period } if !(amplitude.is_finite() && *period > 0.0) => {
                bad("sinusoid needs finite amplitude and positive period")
            }
            HeadTrace::Scripted { samples } => {
                if samples.is_empty() {
                    return bad("scripted trace has no samples");
                }
                if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return bad("scripted samples must be strictly increasing in t");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Last time the trace covers.
    pub fn end_time(&self) -> f64 {
        match self {
            HeadTrace::Scripted { samples } => samples.last().map_or(f64::NEG_INFINITY, |s| s.t),
            _ => f64::INFINITY,
        }
    }

    fn scripted_yaw(samples: &[HeadSample], t: f64) -> f64 {
        let k = samples.partition_point(|s| s.t <= t);
        if k == 0 {
            return samples[0].yaw;
        }
        if k == samples.len() {
            return samples[k - 1].yaw;
        }
        let (a, b) = (samples[k - 1], samples[k]);
        let f = (t - a.t) / (b.t - a.t);
        a.yaw + f * wrap_angle(b.yaw - a.yaw)
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        #[derive(Deserialize)]
        struct Doc {
            format: String,
            samples: Vec<HeadSample>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        io::expect_format(&doc.format, HEADTRACE_FORMAT)?;
        let trace = HeadTrace::Scripted { samples: doc.samples };
        trace.validate()?;
        Ok(trace)
    }

    /// `headtrace/1` document for recorded samples, the format the viewer
    /// exports.
    pub fn headtrace_json(samples: &[HeadSample]) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            format: &'static str,
            samples: &'a [HeadSample],
        }
        io::to_json_line(&Doc { format: HEADTRACE_FORMAT, samples })
    }

    /// Parses `still`, `still:YAW`, `follow:TAU`, `sin:AMP,PERIOD` (radians,
    /// seconds).
    pub fn parse_spec(spec: &str) -> Result<Self, SimError> {
        let bad = || SimError::InvalidTrace(format!("cannot parse head trace '{spec}'"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let trace = match kind {
            "still" if args.is_empty() => HeadTrace::Still { yaw: 0.0 },
            "still" => HeadTrace::Still { yaw: num(args)? },
            "follow" if args.is_empty() => HeadTrace::FollowHeading { lag_tau: Self::DEFAULT_LAG_TAU },
            "follow" => HeadTrace::FollowHeading { lag_tau: num(args)? },
            "sin" => {
                let (a, p) = args.split_once(',').ok_or_else(bad)?;
                HeadTrace::Sinusoid { amplitude: num(a)?, period: num(p)? }
            }
            _ => return Err(bad()),
        };
        trace.validate()?;
        Ok(trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSample {
    pub t: f64,
    pub robot_yaw: f64,
    /// Head yaw in the frame the head tracker reports (camera frame).
    pub head_yaw: f64,
    pub world_view_yaw: f64,
    pub mode: ViewMode,
}

/// World-frame view direction for every step of a log under a head trace.
pub fn apply_head_trace(log: &ReplayLog, head: &HeadTrace, mode: ViewMode) -> Result<Vec<ViewSample>, SimError> {
    head.validate()?;
    let log_end = log.steps.last().map_or(0.0, |s| s.t);
    if head.end_time() < log_end {
        return Err(SimError::TraceTooShort { trace_end: head.end_time(), log_end });
    }
    let dt = log.header.dt;
    let mut follow_yaw = log.header.start.theta;
    let mut out = Vec::with_capacity(log.steps.len());
    for s in &log.steps {
        let head_yaw = match head {
            HeadTrace::Still { yaw } => *yaw,
            HeadTrace::Sinusoid { amplitude, period } => {
                amplitude * (std::f64::consts::TAU * s.t / period).sin()
            }
            HeadTrace::Scripted { samples } => HeadTrace::scripted_yaw(samples, s.t),
            HeadTrace::FollowHeading { lag_tau } => match mode {
                ViewMode::Unwound => {
                    let gain = 1.0 - (-dt / lag_tau).exp();
                    follow_yaw = wrap_angle(follow_yaw + gain * wrap_angle(s.theta - follow_yaw));
                    follow_yaw
                }
                ViewMode::Coupled => 0.0,
            },
        };
        let robot = PlanarRotation::from_angle(s.theta).map_err(|e| SimError::InconsistentLog(e.to_string()))?;
        let head_rot = PlanarRotation::from_angle(head_yaw).map_err(|e| SimError::InvalidTrace(e.to_string()))?;
        out.push(ViewSample {
            t: s.t,
            robot_yaw: robot.angle(),
            head_yaw: head_rot.angle(),
            world_view_yaw: viewpoint_heading(robot, head_rot, mode).angle(),
            mode,
        });
    }
    Ok(out)
}

/// `viewsamples/1` document, the per-step reference the viewer compares
/// its rendered camera yaw against.
pub fn view_samples_json(samples: &[ViewSample]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        format: &'static str,
        samples: &'a [ViewSample],
    }
    io::to_json_line(&Doc { format: VIEWSAMPLES_FORMAT, samples })
}
