//! Dynamic-window local controller and exact unicycle integration.

use serde::{Deserialize, Serialize};

use crate::geometry::wrap_angle;
use crate::planner::PathPolyline;
use crate::world::{min_person_distance, ClearanceIndex, Point2, Pose, Scenario};

/// Below this |ω| the straight-line update is used.
const STRAIGHT_OMEGA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("invalid kinematic limits: {0}")]
    InvalidLimits(String),
    #[error("invalid controller config: {0}")]
    InvalidConfig(String),
    #[error("every candidate command was rejected at t = {t}")]
    Stuck { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicLimits {
    pub v_max: f64,
    pub v_min: f64,
    pub omega_max: f64,
    pub omega_min: f64,
    pub a_lin_max: f64,
    pub a_ang_max: f64,
}

impl Default for KinematicLimits {
    /// 1 m/s, 1 rad/s, 3.2 rad/s²; no reverse. The linear acceleration bound
    /// of 1 m/s² is a local choice.
    fn default() -> Self {
        Self {
            v_max: 1.0,
            v_min: 0.0,
            omega_max: 1.0,
            omega_min: -1.0,
            a_lin_max: 1.0,
            a_ang_max: 3.2,
        }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<(), ControlError> {
        let ok = self.v_max > 0.0
            && self.omega_max > 0.0
            && self.a_lin_max > 0.0
            && self.a_ang_max > 0.0
            && self.v_min <= self.v_max
            && self.omega_min <= self.omega_max
            && [self.v_max, self.v_min, self.omega_max, self.omega_min, self.a_lin_max, self.a_ang_max]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(ControlError::InvalidLimits(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub omega: f64,
    pub t: f64,
}

impl RobotState {
    pub fn at_rest(pose: Pose) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            theta: wrap_angle(pose.theta),
            ..Default::default()
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn pose(&self) -> Pose {
        Pose { x: self.x, y: self.y, theta: self.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: f64,
    pub omega: f64,
}

impl VelocityCommand {
    pub const STOP: VelocityCommand = VelocityCommand { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Velocities reachable within one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub v_lo: f64,
    pub v_hi: f64,
    pub w_lo: f64,
    pub w_hi: f64,
}

impl Window {
    pub fn contains(&self, cmd: VelocityCommand) -> bool {
        cmd.v >= self.v_lo && cmd.v <= self.v_hi && cmd.omega >= self.w_lo && cmd.omega <= self.w_hi
    }
}

/// Intersection of the velocity limits with what the acceleration limits
/// allow over `dt`. If the current state is already outside the limits the
/// window collapses onto the nearest admissible bound.
pub fn dynamic_window(state: &RobotState, limits: &KinematicLimits, dt: f64) -> Window {
    let clamp_range = |lo: f64, hi: f64, min: f64, max: f64| {
        let lo = lo.max(min);
        let hi = hi.min(max);
        if lo <= hi {
            (lo, hi)
        } else {
            let x = if hi < min { min } else { max };
            (x, x)
        }
    };
    let (v_lo, v_hi) = clamp_range(
        state.v - limits.a_lin_max * dt,
        state.v + limits.a_lin_max * dt,
        limits.v_min,
        limits.v_max,
    );
    let (w_lo, w_hi) = clamp_range(
        state.omega - limits.a_ang_max * dt,
        state.omega + limits.a_ang_max * dt,
        limits.omega_min,
        limits.omega_max,
    );
    Window { v_lo, v_hi, w_lo, w_hi }
}

fn lattice(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if n == 1 {
            0.5 * (lo + hi)
        } else if k == n - 1 {
            hi
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    })
}

/// Uniform `n_v × n_w` lattice over the window, endpoints included,
/// v-major order. A count of one samples the midpoint.
pub fn sample_window(window: &Window, n_v: usize, n_w: usize) -> Vec<VelocityCommand> {
    let mut out = Vec::with_capacity(n_v * n_w);
    for v in lattice(window.v_lo, window.v_hi, n_v) {
        for omega in lattice(window.w_lo, window.w_hi, n_w) {
            out.push(VelocityCommand { v, omega });
        }
    }
    out
}

/// Advances the state by `dt` under a constant command along the exact arc.
pub fn integrate_unicycle(state: &RobotState, cmd: VelocityCommand, dt: f64) -> RobotState {
    let VelocityCommand { v, omega } = cmd;
    let th = state.theta;
    let (x, y, theta) = if omega.abs() < STRAIGHT_OMEGA {
        (state.x + v * th.cos() * dt, state.y + v * th.sin() * dt, wrap_angle(th + omega * dt))
    } else {
        let th1 = th + omega * dt;
        let r = v / omega;
        (
            state.x + r * (th1.sin() - th.sin()),
            state.y - r * (th1.cos() - th.cos()),
            wrap_angle(th1),
        )
    };
    RobotState { x, y, theta, v, omega, t: state.t + dt }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticWeights {
    pub path: f64,
    pub progress: f64,
    pub clearance: f64,
}

impl Default for CriticWeights {
    fn default() -> Self {
        Self { path: 1.0, progress: 1.0, clearance: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub dt: f64,
    pub horizon: f64,
    pub n_v: usize,
    pub n_w: usize,
    pub weights: CriticWeights,
    pub clearance_cap: f64,
    pub goal_tolerance: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            horizon: 1.5,
            n_v: 5,
            n_w: 21,
            weights: CriticWeights::default(),
            clearance_cap: 1.0,
            goal_tolerance: 0.15,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |m: &str| Err(ControlError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be > 0");
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return bad("horizon must be at least one control period");
        }
        if self.n_v == 0 || self.n_w == 0 {
            return bad("sampling counts must be >= 1");
        }
        if !(self.goal_tolerance > 0.0 && self.clearance_cap > 0.0) {
            return bad("goal tolerance and clearance cap must be > 0");
        }
        Ok(())
    }

    pub fn rollout_steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }
}

/// How far behind and ahead of the current progress a projection may land.
const PROJECTION_BACK: f64 = 1.0;
const PROJECTION_AHEAD: f64 = 3.0;
/// Remaining arc length under which the goal may be declared reached.
const GOAL_ARC_SLACK: f64 = 1.0;

/// Everything a controller step reads besides the robot state.
pub struct ControlContext<'a> {
    pub path: &'a PathPolyline,
    pub scenario: &'a Scenario,
    pub clearance: &'a ClearanceIndex,
    pub config: &'a ControllerConfig,
    /// Arc length along the path the robot has reached so far.
    pub progress: f64,
}

impl ControlContext<'_> {
    /// Windowed projection of `p` around the current progress.
    pub fn project(&self, p: Point2, ahead: f64) -> (f64, f64) {
        self.path
            .project_window(p, self.progress - PROJECTION_BACK, self.progress + ahead)
    }

    /// Progress after moving to `p`.
    pub fn advance(&self, p: Point2) -> f64 {
        self.project(p, PROJECTION_AHEAD).0
    }
}

/// Critic terms of one rollout, before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Critics {
    /// Mean distance from the rollout points to the path.
    pub cross_track: f64,
    pub progress: f64,
    pub clearance: f64,
}

impl Critics {
    pub fn score(&self, w: &CriticWeights) -> f64 {
        -w.path * self.cross_track + w.progress * self.progress + w.clearance * self.clearance
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateScore {
    Scored { score: f64, critics: Critics },
    Rejected,
}

/// Forward-simulates `cmd` over the horizon.
///
/// Rejected when a rollout point leaves the map, enters an occupied cell,
/// comes closer than the wall policy to a wall or closer than the person
/// policy to a pedestrian (at that pedestrian's scripted position). Otherwise
/// the critics are the cross-track distance of the final point, the arc
/// length it gains along the path, and the minimum wall/person clearance
/// over the rollout capped at `clearance_cap`.
pub fn score_candidate(cmd: VelocityCommand, state: &RobotState, ctx: &ControlContext<'_>) -> CandidateScore {
    let cfg = ctx.config;
    let policy = ctx.scenario.clearance_policy;
    let cap = cfg.clearance_cap;
    let mut s = *state;
    let mut min_clear = f64::INFINITY;
    let ahead = ctx.scenario.limits.v_max.max(cmd.v) * cfg.horizon + PROJECTION_AHEAD;
    let mut cross_track_sum = 0.0;
    let mut s_end = ctx.progress;
    for _ in 0..cfg.rollout_steps() {
        s = integrate_unicycle(&s, cmd, cfg.dt);
        let p = s.position();
        // wall check needs exact values below the policy, capped otherwise
        let wall = match ctx.clearance.clearance_capped(p, cap.max(policy.min_wall)) {
            Ok(d) => d,
            Err(_) => return CandidateScore::Rejected,
        };
        if wall < policy.min_wall {
            return CandidateScore::Rejected;
        }
        let person = min_person_distance(p, ctx.scenario, s.t);
        if person < policy.min_person {
            return CandidateScore::Rejected;
        }
        min_clear = min_clear.min(wall).min(person);
        let (along, off) = ctx.project(p, ahead);
        cross_track_sum += off;
        s_end = along;
    }
    let critics = Critics {
        cross_track: cross_track_sum / cfg.rollout_steps() as f64,
        progress: s_end - ctx.progress,
        clearance: min_clear.min(cap),
    };
    CandidateScore::Scored { score: critics.score(&cfg.weights), critics }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlOutcome {
    Command(VelocityCommand),
    GoalReached,
}

impl ControlOutcome {
    pub fn command(self) -> VelocityCommand {
        match self {
            ControlOutcome::Command(c) => c,
            ControlOutcome::GoalReached => VelocityCommand::STOP,
        }
    }
}

pub fn goal_reached(state: &RobotState, ctx: &ControlContext<'_>) -> bool {
    state.position().distance(ctx.path.goal()) <= ctx.config.goal_tolerance
        && ctx.path.length() - ctx.progress <= GOAL_ARC_SLACK.max(ctx.config.goal_tolerance)
}

/// `true` when `a` should be preferred over the incumbent `b`: higher score,
/// then lower |ω|, then lower v. Sample order breaks any remaining tie by
/// keeping the incumbent.
fn better(a: (f64, VelocityCommand), b: (f64, VelocityCommand)) -> bool {
    a.0.total_cmp(&b.0)
        .then(b.1.omega.abs().total_cmp(&a.1.omega.abs()))
        .then(b.1.v.total_cmp(&a.1.v))
        .is_gt()
}

/// One control decision: stop at the goal, otherwise the best-scoring
/// sample of the dynamic window.
pub fn control_step(state: &RobotState, ctx: &ControlContext<'_>) -> Result<ControlOutcome, ControlError> {
    if goal_reached(state, ctx) {
        return Ok(ControlOutcome::GoalReached);
    }
    let window = dynamic_window(state, &ctx.scenario.limits, ctx.config.dt);
    let mut best: Option<(f64, VelocityCommand)> = None;
    for cmd in sample_window(&window, ctx.config.n_v, ctx.config.n_w) {
        if let CandidateScore::Scored { score, .. } = score_candidate(cmd, state, ctx) {
            if best.is_none_or(|b| better((score, cmd), b)) {
                best = Some((score, cmd));
            }
        }
    }
    best.map(|(_, cmd)| ControlOutcome::Command(cmd))
        .ok_or(ControlError::Stuck { t: state.t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::OccupancyGrid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn open_scenario() -> Scenario {
        let g = OccupancyGrid::empty(40, 20, 0.5, Point2::new(0.0, 0.0)).unwrap();
        let mut s = Scenario::new(
            "open",
            g,
            Pose { x: 2.0, y: 5.0, theta: 0.0 },
            vec![Point2::new(18.0, 5.0)],
        );
        s.clearance_policy.min_wall = 0.1;
        s
    }

    #[test]
    fn window_examples() {
        let lim = KinematicLimits::default();
        let s = RobotState { v: 0.5, ..Default::default() };
        let w = dynamic_window(&s, &lim, 0.25);
        assert_eq!((w.v_lo, w.v_hi), (0.25, 0.75));
        assert!((w.w_lo + 0.8).abs() < 1e-15 && (w.w_hi - 0.8).abs() < 1e-15);
        let s = RobotState { v: 1.0, ..Default::default() };
        assert_eq!(dynamic_window(&s, &lim, 0.25).v_hi, 1.0);
    }

    #[test]
    fn window_outside_limits_collapses() {
        let lim = KinematicLimits::default();
        let s = RobotState { v: 3.0, ..Default::default() };
        let w = dynamic_window(&s, &lim, 0.05);
        assert_eq!((w.v_lo, w.v_hi), (1.0, 1.0));
    }

    #[test]
    fn sample_examples() {
        let w = Window { v_lo: 0.0, v_hi: 1.0, w_lo: -1.0, w_hi: 1.0 };
        assert_eq!(sample_window(&w, 1, 1), vec![VelocityCommand::new(0.5, 0.0)]);
        let s = sample_window(&w, 2, 3);
        let expect: Vec<_> = [(0.0, -1.0), (0.0, 0.0), (0.0, 1.0), (1.0, -1.0), (1.0, 0.0), (1.0, 1.0)]
            .iter()
            .map(|&(v, o)| VelocityCommand::new(v, o))
            .collect();
        assert_eq!(s, expect);
    }

    #[test]
    fn integrate_examples() {
        let s0 = RobotState::default();
        let s = integrate_unicycle(&s0, VelocityCommand::new(1.0, 0.0), 0.1);
        assert!((s.x - 0.1).abs() < 1e-15 && s.y == 0.0 && s.theta == 0.0 && (s.t - 0.1).abs() < 1e-15);
        let s = integrate_unicycle(&s0, VelocityCommand::new(0.0, PI), 1.0);
        assert_eq!((s.x, s.y, s.theta), (0.0, 0.0, PI));
        let s = integrate_unicycle(&s0, VelocityCommand::new(1.0, 1.0), PI / 2.0);
        assert!((s.x - 1.0).abs() < 1e-12 && (s.y - 1.0).abs() < 1e-12 && (s.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_matches_fine_euler() {
        let s0 = RobotState::default();
        let (v, w, t) = (1.0, 1.0, PI / 2.0);
        let h = 1e-5;
        let (mut x, mut y, mut th) = (0.0f64, 0.0f64, 0.0f64);
        let n = (t / h).round() as usize;
        let h = t / n as f64;
        for _ in 0..n {
            x += v * th.cos() * h;
            y += v * th.sin() * h;
            th += w * h;
        }
        let s = integrate_unicycle(&s0, VelocityCommand::new(v, w), t);
        assert!((s.x - x).abs() < 1e-3 && (s.y - y).abs() < 1e-3 && (s.theta - th).abs() < 1e-3);
    }

    fn ctx_for<'a>(
        s: &'a Scenario,
        path: &'a PathPolyline,
        idx: &'a ClearanceIndex,
        cfg: &'a ControllerConfig,
    ) -> ControlContext<'a> {
        ControlContext { path, scenario: s, clearance: idx, config: cfg, progress: 0.0 }
    }

    #[test]
    fn straight_beats_turning_away() {
        let s = open_scenario();
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let ctx = ctx_for(&s, &path, &idx, &cfg);
        let st = RobotState::at_rest(s.robot_start);
        let score = |c| match score_candidate(c, &st, &ctx) {
            CandidateScore::Scored { score, .. } => score,
            CandidateScore::Rejected => f64::NEG_INFINITY,
        };
        assert!(score(VelocityCommand::new(0.5, 0.0)) > score(VelocityCommand::new(0.5, 0.5)));
        assert!(score(VelocityCommand::new(0.5, 0.0)) > score(VelocityCommand::new(0.5, -0.5)));
    }

    #[test]
    fn rollout_into_wall_rejected() {
        let mut s = open_scenario();
        s.grid.fill_rect(Point2::new(3.0, 0.0), Point2::new(4.0, 10.0));
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let ctx = ctx_for(&s, &path, &idx, &cfg);
        let st = RobotState::at_rest(s.robot_start);
        assert_eq!(score_candidate(VelocityCommand::new(1.0, 0.0), &st, &ctx), CandidateScore::Rejected);
    }

    #[test]
    fn straight_start_picks_zero_omega() {
        let s = open_scenario();
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let ctx = ctx_for(&s, &path, &idx, &cfg);
        let st = RobotState::at_rest(s.robot_start);
        let out = control_step(&st, &ctx).unwrap().command();
        assert_eq!(out.omega, 0.0);
        assert!(out.v > 0.0);
    }

    #[test]
    fn at_goal_stops() {
        let s = open_scenario();
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let mut ctx = ctx_for(&s, &path, &idx, &cfg);
        ctx.progress = 15.95;
        let st = RobotState { x: 17.9, y: 5.05, ..Default::default() };
        assert_eq!(control_step(&st, &ctx).unwrap(), ControlOutcome::GoalReached);
    }

    #[test]
    fn stuck_when_everything_rejected() {
        let mut s = open_scenario();
        s.clearance_policy.min_wall = 0.9;
        s.grid.fill_rect(Point2::new(2.5, 0.0), Point2::new(3.0, 10.0));
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(18.0, 5.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let ctx = ctx_for(&s, &path, &idx, &cfg);
        let st = RobotState::at_rest(s.robot_start);
        assert!(matches!(control_step(&st, &ctx), Err(ControlError::Stuck { .. })));
    }

    #[test]
    fn hand_computed_score_on_three_waypoint_path() {
        // path (0,5) -> (4,5) -> (4,9); robot at (1,5) heading +x, command
        // (0.5, 0) for 1 s at dt 0.25 ends at (1.5, 5).
        let mut s = open_scenario();
        s.pedestrians.push(crate::world::Pedestrian {
            id: "still".into(),
            waypoints: vec![Point2::new(1.5, 6.8)],
            speed: 0.0,
            start_time: 0.0,
            looping: false,
        });
        let path = PathPolyline::new(vec![Point2::new(0.0, 5.0), Point2::new(4.0, 5.0), Point2::new(4.0, 9.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig {
            dt: 0.25,
            horizon: 1.0,
            weights: CriticWeights { path: 2.0, progress: 1.5, clearance: 0.5 },
            clearance_cap: 3.0,
            ..Default::default()
        };
        let mut ctx = ctx_for(&s, &path, &idx, &cfg);
        ctx.progress = 1.0;
        let st = RobotState { x: 1.0, y: 5.0, theta: 0.0, ..Default::default() };
        let CandidateScore::Scored { score, critics } = score_candidate(VelocityCommand::new(0.5, 0.0), &st, &ctx) else {
            panic!("rejected");
        };
        // final point (1.5, 5): on the path, 0.5 m further along; nearest
        // pedestrian approach is at x = 1.5 (distance 1.8); walls are the map
        // edges, 5 m away, so the capped clearance is 1.8
        assert_eq!(critics.cross_track, 0.0);
        assert!((critics.progress - 0.5).abs() < 1e-12);
        assert!((critics.clearance - 1.8).abs() < 1e-12);
        let expect = -2.0 * 0.0 + 1.5 * 0.5 + 0.5 * 1.8;
        assert!((score - expect).abs() < 1e-12);
    }

    #[test]
    fn chosen_command_is_exhaustive_argmax() {
        let s = open_scenario();
        let path = PathPolyline::new(vec![Point2::new(2.0, 5.0), Point2::new(10.0, 5.0), Point2::new(10.0, 9.0)]);
        let idx = ClearanceIndex::new(&s.grid);
        let cfg = ControllerConfig::default();
        let lim = s.limits;
        for (k, &(th, v, w)) in [(0.0, 0.0, 0.0), (0.3, 0.6, 0.2), (-0.5, 1.0, -0.9), (1.2, 0.2, 1.0)].iter().enumerate() {
            let mut ctx = ctx_for(&s, &path, &idx, &cfg);
            ctx.progress = k as f64;
            let st = RobotState { x: 2.0 + k as f64, y: 5.2, theta: th, v, omega: w, t: 0.0 };
            let chosen = control_step(&st, &ctx).unwrap().command();
            let window = dynamic_window(&st, &lim, cfg.dt);
            let mut best_score = f64::NEG_INFINITY;
            let mut best = Vec::new();
            for c in sample_window(&window, cfg.n_v, cfg.n_w) {
                if let CandidateScore::Scored { score, .. } = score_candidate(c, &st, &ctx) {
                    if score > best_score {
                        best_score = score;
                        best = vec![c];
                    } else if score == best_score {
                        best.push(c);
                    }
                }
            }
            best.sort_by(|a, b| a.omega.abs().total_cmp(&b.omega.abs()).then(a.v.total_cmp(&b.v)));
            assert_eq!(chosen, best[0]);
            assert!(window.contains(chosen));
        }
    }

    proptest! {
        #[test]
        fn samples_lie_in_window(v in 0.0f64..1.0, w in -1.0f64..1.0, dt in 0.01f64..0.5, nv in 1usize..8, nw in 1usize..8) {
            let st = RobotState { v, omega: w, ..Default::default() };
            let win = dynamic_window(&st, &KinematicLimits::default(), dt);
            let samples = sample_window(&win, nv, nw);
            prop_assert_eq!(samples.len(), nv * nw);
            for c in samples {
                prop_assert!(win.contains(c));
            }
        }

        #[test]
        fn integration_conserves_speed(v in 0.0f64..1.0, w in -1.0f64..1.0, th in -3.0f64..3.0, dt in 0.001f64..0.2) {
            let s0 = RobotState { theta: th, ..Default::default() };
            let s1 = integrate_unicycle(&s0, VelocityCommand::new(v, w), dt);
            // arc length from chord: chord = 2 r sin(|ω| dt / 2)
            let chord = (s1.x - s0.x).hypot(s1.y - s0.y);
            let arc = if w.abs() < 1e-9 { chord } else { chord * (w * dt / 2.0).abs() / (w * dt / 2.0).abs().sin() };
            prop_assert!((arc - v * dt).abs() <= 1e-9);
        }
    }
}
