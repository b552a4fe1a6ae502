//! Outcome measures: pointing error, head deviation, SSQ scores and run
//! audits.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Vec3};
use crate::io::opt_infinite_as_null;
use crate::simulator::ReplayLog;
use crate::world::{min_person_distance, ClearanceIndex, Point2, Scenario};

pub const AUDIT_FORMAT: &str = "audit/1";

/// Rays within this angle of straight up or down are rejected.
pub const MIN_POINTING_ANGLE_FROM_VERTICAL_DEG: f64 = 5.0;

/// Slack for comparing recorded rates against kinematic limits.
const LIMIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("pointing ray is (nearly) vertical or zero")]
    DegeneratePointing,
    #[error("final position coincides with the origin")]
    DegenerateGeometry,
    #[error("series lengths differ ({0} vs {1})")]
    SeriesMismatch(usize, usize),
    #[error("series are empty")]
    EmptySeries,
    #[error("SSQ item {item} has severity {value}, expected 0..=3")]
    InvalidSeverity { item: usize, value: i64 },
    #[error("SSQ response must have 16 items, got {0}")]
    WrongItemCount(usize),
    #[error("SSQ header column {index} is '{found}', expected '{expected}'")]
    BadHeader { index: usize, found: String, expected: &'static str },
}

/// A pointing gesture: where the controller is and which way it points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingSample {
    pub origin_of_ray: Vec3,
    direction: Vec3,
}

impl PointingSample {
    /// Normalizes `direction`; a zero or non-finite direction is degenerate.
    pub fn new(origin_of_ray: Vec3, direction: Vec3) -> Result<Self, AnalysisError> {
        let direction = direction.normalized().ok_or(AnalysisError::DegeneratePointing)?;
        Ok(Self { origin_of_ray, direction })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }
}

/// Unsigned angle in degrees, `[0, 180]`, between where the ray points
/// (projected onto the floor plane) and the direction from `final_position`
/// back to `origin`.
pub fn path_integration_error(
    pointing: &PointingSample,
    final_position: Point2,
    origin: Point2,
) -> Result<f64, AnalysisError> {
    let d = pointing.direction;
    let horizontal = d.x.hypot(d.y);
    // angle from vertical = atan2(horizontal, |z|)
    if horizontal.atan2(d.z.abs()).to_degrees() < MIN_POINTING_ANGLE_FROM_VERTICAL_DEG {
        return Err(AnalysisError::DegeneratePointing);
    }
    let (hx, hy) = (origin.x - final_position.x, origin.y - final_position.y);
    if hx == 0.0 && hy == 0.0 {
        return Err(AnalysisError::DegenerateGeometry);
    }
    let pointed = d.y.atan2(d.x);
    let home = hy.atan2(hx);
    Ok(wrap_angle(pointed - home).abs().to_degrees())
}

/// Mean of `|wrap(robot - head)|` in degrees.
pub fn mean_head_deviation(robot_yaw: &[f64], head_yaw: &[f64]) -> Result<f64, AnalysisError> {
    if robot_yaw.len() != head_yaw.len() {
        return Err(AnalysisError::SeriesMismatch(robot_yaw.len(), head_yaw.len()));
    }
    if robot_yaw.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    let sum: f64 = robot_yaw
        .iter()
        .zip(head_yaw)
        .map(|(r, h)| wrap_angle(r - h).abs())
        .sum();
    Ok((sum / robot_yaw.len() as f64).to_degrees())
}

pub const SSQ_ITEMS: usize = 16;

/// Canonical symptom names, in questionnaire order.
pub const SSQ_SYMPTOMS: [&str; SSQ_ITEMS] = [
    "general_discomfort",
    "fatigue",
    "headache",
    "eyestrain",
    "difficulty_focusing",
    "increased_salivation",
    "sweating",
    "nausea",
    "difficulty_concentrating",
    "fullness_of_head",
    "blurred_vision",
    "dizzy_eyes_open",
    "dizzy_eyes_closed",
    "vertigo",
    "stomach_awareness",
    "burping",
];

const N: u8 = 0b100;
const O: u8 = 0b010;
const D: u8 = 0b001;

/// Subscale loadings (Kennedy et al., 1993): nausea, oculomotor,
/// disorientation. Each subscale loads seven items.
pub const SSQ_LOADINGS: [u8; SSQ_ITEMS] = [
    N | O, // general discomfort
    O,     // fatigue
    O,     // headache
    O,     // eyestrain
    O | D, // difficulty focusing
    N,     // increased salivation
    N,     // sweating
    N | D, // nausea
    N | O, // difficulty concentrating
    D,     // fullness of head
    O | D, // blurred vision
    D,     // dizzy (eyes open)
    D,     // dizzy (eyes closed)
    D,     // vertigo
    N,     // stomach awareness
    N,     // burping
];

/// The loading table packed three bits per item, item 0 in the high bits.
pub const SSQ_LOADING_CHECKSUM: u64 = 0o6222_3445_6131_1144;

pub fn ssq_loading_checksum() -> u64 {
    SSQ_LOADINGS.iter().fold(0u64, |acc, &l| (acc << 3) | u64::from(l))
}

pub const NAUSEA_WEIGHT: f64 = 9.54;
pub const OCULOMOTOR_WEIGHT: f64 = 7.58;
pub const DISORIENTATION_WEIGHT: f64 = 13.92;
pub const TOTAL_WEIGHT: f64 = 3.74;

/// Sixteen severities, each 0 (none) to 3 (severe).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsqResponse([u8; SSQ_ITEMS]);

impl SsqResponse {
    pub fn new(items: &[i64]) -> Result<Self, AnalysisError> {
        if items.len() != SSQ_ITEMS {
            return Err(AnalysisError::WrongItemCount(items.len()));
        }
        let mut out = [0u8; SSQ_ITEMS];
        for (k, &v) in items.iter().enumerate() {
            if !(0..=3).contains(&v) {
                return Err(AnalysisError::InvalidSeverity { item: k, value: v });
            }
            out[k] = v as u8;
        }
        Ok(Self(out))
    }

    pub fn items(&self) -> &[u8; SSQ_ITEMS] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsqScore {
    pub nausea: f64,
    pub oculomotor: f64,
    pub disorientation: f64,
    pub total: f64,
}

pub fn ssq_score(r: &SsqResponse) -> SsqScore {
    let raw = |mask: u8| -> u32 {
        r.0.iter()
            .zip(SSQ_LOADINGS)
            .filter(|(_, l)| l & mask != 0)
            .map(|(&v, _)| u32::from(v))
            .sum()
    };
    let (n, o, d) = (raw(N), raw(O), raw(D));
    SsqScore {
        nausea: f64::from(n) * NAUSEA_WEIGHT,
        oculomotor: f64::from(o) * OCULOMOTOR_WEIGHT,
        disorientation: f64::from(d) * DISORIENTATION_WEIGHT,
        total: f64::from(n + o + d) * TOTAL_WEIGHT,
    }
}

/// Reads SSQ responses from CSV: a header row with the canonical symptom
/// names, then one row of sixteen integers per respondent.
pub fn read_ssq_csv<R: Read>(reader: R) -> Result<Vec<SsqResponse>, crate::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != SSQ_ITEMS {
        return Err(AnalysisError::WrongItemCount(headers.len()).into());
    }
    for (k, (found, expected)) in headers.iter().zip(SSQ_SYMPTOMS).enumerate() {
        if !found.eq_ignore_ascii_case(expected) {
            return Err(AnalysisError::BadHeader { index: k, found: found.to_string(), expected }.into());
        }
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let items = rec
            .iter()
            .map(|s| s.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| crate::Error::Format { expected: "integer severity".into(), found: e.to_string() })?;
        out.push(SsqResponse::new(&items)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    WallClearance,
    PersonDistance,
    Speed,
    AngularSpeed,
    LinearAcceleration,
    AngularAcceleration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// First offending step.
    pub step: usize,
    /// Worst value over the run.
    pub value: f64,
    pub limit: f64,
    pub count: usize,
}

/// Per-mode mean head deviation, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadDeviation {
    #[serde(rename = "UR")]
    pub unwound: f64,
    #[serde(rename = "CR")]
    pub coupled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub format: String,
    pub steps: usize,
    #[serde(with = "opt_infinite_as_null")]
    pub min_wall_clearance: Option<f64>,
    #[serde(with = "opt_infinite_as_null")]
    pub min_person_distance: Option<f64>,
    pub max_speed: Option<f64>,
    pub max_abs_omega: Option<f64>,
    pub max_linear_acceleration: Option<f64>,
    pub max_angular_acceleration: Option<f64>,
    pub total_rotation: f64,
    pub path_length: f64,
    pub duration: f64,
    pub goal_reached: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub head_trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_head_deviation: Option<HeadDeviation>,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        crate::io::to_json_line(self)
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, kind: ViolationKind) -> Option<&Violation> {
        self.violations.iter().find(|v| v.kind == kind)
    }
}

#[derive(Default)]
struct Tracker {
    worst: Option<f64>,
    first_bad: Option<usize>,
    count: usize,
}

impl Tracker {
    fn observe(&mut self, step: usize, value: f64, higher_is_worse: bool, bad: bool) {
        self.worst = Some(match self.worst {
            None => value,
            Some(w) if higher_is_worse => w.max(value),
            Some(w) => w.min(value),
        });
        if bad {
            self.count += 1;
            self.first_bad.get_or_insert(step);
        }
    }

    fn violation(&self, kind: ViolationKind, limit: f64) -> Option<Violation> {
        self.first_bad.map(|step| Violation {
            kind,
            step,
            value: self.worst.unwrap_or(f64::NAN),
            limit,
            count: self.count,
        })
    }
}

/// Audits a log against its header's clearance policy and kinematic limits,
/// using the clearances passed in per step.
fn audit_with(log: &ReplayLog, clearances: impl Iterator<Item = (f64, f64)>) -> AuditReport {
    let h = &log.header;
    let pol = h.clearance_policy;
    let lim = h.limits;
    let dt = h.dt;
    let mut wall = Tracker::default();
    let mut person = Tracker::default();
    let mut speed = Tracker::default();
    let mut omega = Tracker::default();
    let mut lin = Tracker::default();
    let mut ang = Tracker::default();
    let (mut pv, mut pw) = (0.0, 0.0);
    for (k, (s, (cw, cp))) in log.steps.iter().zip(clearances).enumerate() {
        wall.observe(k, cw, false, cw < pol.min_wall);
        person.observe(k, cp, false, cp < pol.min_person);
        speed.observe(k, s.v.abs(), true, s.v > lim.v_max + LIMIT_SLACK || s.v < lim.v_min - LIMIT_SLACK);
        omega.observe(k, s.omega.abs(), true, s.omega > lim.omega_max + LIMIT_SLACK || s.omega < lim.omega_min - LIMIT_SLACK);
        let a = (s.v - pv).abs() / dt;
        let alpha = (s.omega - pw).abs() / dt;
        lin.observe(k, a, true, a > lim.a_lin_max + LIMIT_SLACK);
        ang.observe(k, alpha, true, alpha > lim.a_ang_max + LIMIT_SLACK);
        pv = s.v;
        pw = s.omega;
    }
    let violations = [
        wall.violation(ViolationKind::WallClearance, pol.min_wall),
        person.violation(ViolationKind::PersonDistance, pol.min_person),
        speed.violation(ViolationKind::Speed, lim.v_max),
        omega.violation(ViolationKind::AngularSpeed, lim.omega_max),
        lin.violation(ViolationKind::LinearAcceleration, lim.a_lin_max),
        ang.violation(ViolationKind::AngularAcceleration, lim.a_ang_max),
    ]
    .into_iter()
    .flatten()
    .collect();
    let (path_length, total_rotation) = crate::simulator::aggregate_motion(&h.start, &log.steps);
    AuditReport {
        format: AUDIT_FORMAT.to_string(),
        steps: log.steps.len(),
        min_wall_clearance: wall.worst,
        min_person_distance: person.worst,
        max_speed: speed.worst,
        max_abs_omega: omega.worst,
        max_linear_acceleration: lin.worst,
        max_angular_acceleration: ang.worst,
        total_rotation,
        path_length,
        duration: log.steps.len() as f64 * dt,
        goal_reached: log.footer.goal_reached,
        head_trace: None,
        mean_head_deviation: None,
        violations,
    }
}

/// Audits a run, recomputing every clearance from the scenario geometry
/// rather than trusting the logged values.
pub fn audit_run(log: &ReplayLog, scenario: &Scenario) -> AuditReport {
    let index = ClearanceIndex::new(&scenario.grid);
    let clearances = log.steps.iter().map(|s| {
        let p = Point2::new(s.x, s.y);
        (index.clearance(p).unwrap_or(0.0), min_person_distance(p, scenario, s.t))
    });
    audit_with(log, clearances)
}

/// Audits a run from the clearances recorded in the log itself.
pub fn audit_logged(log: &ReplayLog) -> AuditReport {
    audit_with(log, log.steps.iter().map(|s| (s.min_wall_clearance, s.min_person_distance)))
}
