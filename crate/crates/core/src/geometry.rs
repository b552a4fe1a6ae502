//! Rotation algebra for the plane and for 3D, and the unwinding transform.
//!
//! A robot carrying a camera rotates by `R_R`; rotating the camera frame by
//! `R_C = R_R⁻¹` cancels that rotation so the user's world-frame viewpoint
//! only changes when the user turns their own head. For a ground robot the
//! rotation is a yaw about the up (`z`) axis and everything reduces to
//! planar angles.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Tolerance used when validating that a matrix is a proper rotation.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("angle must be finite, got {0}")]
    InvalidAngle(f64),
    #[error("matrix is not a proper rotation (max |RᵀR - I| = {orthogonality:e}, det = {det})")]
    NotARotation { orthogonality: f64, det: f64 },
}

/// Wraps an angle into `(-π, π]`.
///
/// Angles already inside the range are returned bit-for-bit unchanged, which
/// makes the function idempotent.
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else if r == 0.0 && angle < 0.0 {
        // rem_euclid can round a tiny negative input up to 2π and back to 0
        0.0
    } else {
        r
    }
}

/// A rotation in the x-y plane, stored as its wrapped angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlanarRotation {
    angle: f64,
}

impl PlanarRotation {
    pub const IDENTITY: PlanarRotation = PlanarRotation { angle: 0.0 };

    pub fn from_angle(angle: f64) -> Result<Self, GeometryError> {
        if !angle.is_finite() {
            return Err(GeometryError::InvalidAngle(angle));
        }
        Ok(Self {
            angle: wrap_angle(angle),
        })
    }

    pub fn from_degrees(degrees: f64) -> Result<Self, GeometryError> {
        Self::from_angle(degrees.to_radians())
    }

    /// Angle in `(-π, π]`.
    pub fn angle(self) -> f64 {
        self.angle
    }

    pub fn degrees(self) -> f64 {
        self.angle.to_degrees()
    }

    /// `self` followed by `other`; the angle is `wrap(a + b)`.
    pub fn compose(self, other: PlanarRotation) -> PlanarRotation {
        PlanarRotation {
            angle: wrap_angle(self.angle + other.angle),
        }
    }

    pub fn inverse(self) -> PlanarRotation {
        PlanarRotation {
            angle: wrap_angle(-self.angle),
        }
    }

    /// The 2×2 matrix `[[cos, -sin], [sin, cos]]`.
    pub fn matrix(self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn apply(self, x: f64, y: f64) -> (f64, f64) {
        let [[a, b], [c, d]] = self.matrix();
        (a * x + b * y, c * x + d * y)
    }
}

/// `rot2_from_angle`: builds a planar rotation, rejecting non-finite input.
pub fn rot2_from_angle(angle: f64) -> Result<PlanarRotation, GeometryError> {
    PlanarRotation::from_angle(angle)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A 3×3 rotation matrix, row-major.
///
/// Construction from raw entries validates orthonormality and a unit
/// determinant; the matrix is never silently re-orthogonalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub const IDENTITY: Rotation3 = Rotation3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        let r = Rotation3 { m };
        let orthogonality = r.orthogonality_error();
        let det = r.determinant();
        if !(orthogonality <= ORTHONORMAL_TOLERANCE) || !((det - 1.0).abs() <= ORTHONORMAL_TOLERANCE)
        {
            return Err(GeometryError::NotARotation { orthogonality, det });
        }
        Ok(r)
    }

    /// Rotation about the `z` axis.
    pub fn yaw(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation3 {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rodrigues' formula. `axis` need not be normalized; a zero axis gives
    /// the identity.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let Some(k) = axis.normalized() else {
            return Self::IDENTITY;
        };
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let (x, y, z) = (k.x, k.y, k.z);
        Rotation3 {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn transpose(&self) -> Rotation3 {
        let m = &self.m;
        Rotation3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let v = p.as_array();
        let row = |r: &[f64; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
        Vec3::new(row(&self.m[0]), row(&self.m[1]), row(&self.m[2]))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entry of `|RᵀR - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let rtr = self.transpose().mul_raw(self);
        max_abs_diff(&rtr, &Self::IDENTITY.m)
    }

    /// Largest entrywise difference to another matrix.
    pub fn max_abs_diff(&self, other: &Rotation3) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }

    /// Heading of the rotated `x` axis projected onto the x-y plane.
    pub fn heading(&self) -> f64 {
        self.m[1][0].atan2(self.m[0][0])
    }

    fn mul_raw(&self, o: &Rotation3) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        out
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;
    fn mul(self, o: Rotation3) -> Rotation3 {
        Rotation3 { m: self.mul_raw(&o) }
    }
}

fn max_abs_diff(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Lifts a planar rotation to a yaw about the up axis:
/// `[[R(θ), 0], [0, 1]]`.
pub fn embed_planar(r: PlanarRotation) -> Rotation3 {
    Rotation3::yaw(r.angle())
}

/// Expresses a camera-frame point in the unwound camera frame:
/// `p' = R_R⁻¹ · p`.
pub fn unwind_point(p_c: Vec3, robot_rotation: &Rotation3) -> Vec3 {
    unwind_rotation(robot_rotation).apply(p_c)
}

/// The camera-frame rotation that cancels the robot's rotation, `R_R⁻¹ = R_Rᵀ`.
pub fn unwind_rotation(robot_rotation: &Rotation3) -> Rotation3 {
    robot_rotation.transpose()
}

/// Classes of rotations a robot can undergo or a camera can apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationSet {
    /// Every rotation in SO(3), e.g. a 360° camera re-projected in software.
    #[serde(rename = "full_SO3")]
    FullSo3,
    /// Rotations about the vertical axis only.
    YawOnly,
    /// Yaw and pitch, no roll.
    PanTilt,
    /// Identity only.
    None,
}

impl RotationSet {
    pub const ALL: [RotationSet; 4] = [
        RotationSet::FullSo3,
        RotationSet::PanTilt,
        RotationSet::YawOnly,
        RotationSet::None,
    ];

    /// Whether every rotation in `other` also belongs to `self`.
    ///
    /// Each class is closed under inversion, so "contains the inverses of
    /// `other`" is the same question.
    pub fn contains(self, other: RotationSet) -> bool {
        use RotationSet::*;
        match self {
            FullSo3 => true,
            PanTilt => matches!(other, PanTilt | YawOnly | None),
            YawOnly => matches!(other, YawOnly | None),
            None => matches!(other, None),
        }
    }
}

impl fmt::Display for RotationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RotationSet::FullSo3 => "full_SO3",
            RotationSet::YawOnly => "yaw_only",
            RotationSet::PanTilt => "pan_tilt",
            RotationSet::None => "none",
        })
    }
}

/// True iff the camera can apply the inverse of every robot rotation.
pub fn capability_check(camera: RotationSet, robot: RotationSet) -> bool {
    camera.contains(robot)
}

/// Viewing condition: rotations unwound (UR) or coupled to the robot (CR).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViewMode {
    #[serde(rename = "UR", alias = "ur")]
    Unwound,
    #[serde(rename = "CR", alias = "cr")]
    Coupled,
}

impl ViewMode {
    pub const BOTH: [ViewMode; 2] = [ViewMode::Unwound, ViewMode::Coupled];

    pub fn label(self) -> &'static str {
        match self {
            ViewMode::Unwound => "UR",
            ViewMode::Coupled => "CR",
        }
    }
}

impl fmt::Display for ViewMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ViewMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ur" => Ok(ViewMode::Unwound),
            "cr" => Ok(ViewMode::Coupled),
            other => Err(format!("unknown mode '{other}', expected ur or cr")),
        }
    }
}

/// World-frame yaw the user is looking at.
///
/// Under CR the head yaw is relative to the robot body; under UR the camera
/// frame cancels the robot yaw, so the head yaw is already world-fixed.
pub fn viewpoint_heading(
    robot_yaw: PlanarRotation,
    head_yaw: PlanarRotation,
    mode: ViewMode,
) -> PlanarRotation {
    match mode {
        ViewMode::Coupled => robot_yaw.compose(head_yaw),
        ViewMode::Unwound => head_yaw,
    }
}

/// Head orientation as yaw (about up) and pitch (about the lateral axis).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ViewDirection {
    pub yaw: f64,
    pub pitch: f64,
}

/// Full view direction in the world frame. Only yaw is unwound; a planar
/// robot never pitches, so head pitch passes through.
pub fn world_view_direction(robot_yaw: PlanarRotation, head: ViewDirection, mode: ViewMode) -> ViewDirection {
    let head_yaw = PlanarRotation::from_angle(head.yaw).unwrap_or_default();
    ViewDirection {
        yaw: viewpoint_heading(robot_yaw, head_yaw, mode).angle(),
        pitch: head.pitch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3 {
        let axis = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        Rotation3::from_axis_angle(axis, rng.gen_range(-PI..PI))
    }

    #[test]
    fn rot2_examples() {
        assert_eq!(rot2_from_angle(0.0).unwrap().angle(), 0.0);
        assert!((rot2_from_angle(1.5 * PI).unwrap().angle() + PI / 2.0).abs() < 1e-15);
        assert_eq!(rot2_from_angle(-PI).unwrap().angle(), PI);
        assert_eq!(rot2_from_angle(PI).unwrap().angle(), PI);
        assert!(matches!(rot2_from_angle(f64::NAN), Err(GeometryError::InvalidAngle(_))));
        assert!(rot2_from_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn wrap_handles_tiny_negative() {
        let w = wrap_angle(-1e-300 - TAU);
        assert!(w > -PI && w <= PI);
    }

    #[test]
    fn embed_planar_examples() {
        let id = embed_planar(PlanarRotation::IDENTITY);
        assert_eq!(id, Rotation3::IDENTITY);
        let q = embed_planar(PlanarRotation::from_angle(PI / 2.0).unwrap());
        assert!(close(q.apply(Vec3::X), Vec3::Y, 1e-15));
        let h = embed_planar(PlanarRotation::from_angle(PI).unwrap());
        assert!(close(h.apply(Vec3::X), -Vec3::X, 1e-15));
    }

    #[test]
    fn unwind_point_examples() {
        assert_eq!(unwind_point(Vec3::X, &Rotation3::IDENTITY), Vec3::X);
        let r = Rotation3::yaw(PI / 2.0);
        assert!(close(unwind_point(Vec3::X, &r), Vec3::new(0.0, -1.0, 0.0), 1e-15));
    }

    #[test]
    fn unwind_round_trip_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let r = random_rotation(&mut rng);
            let p = Vec3::new(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            let back = r.apply(unwind_point(p, &r));
            assert!(close(back, p, 1e-12), "{back:?} vs {p:?}");
            let inv = unwind_rotation(&r);
            assert!((inv * r).max_abs_diff(&Rotation3::IDENTITY) <= 1e-12);
            assert!((r * inv).max_abs_diff(&Rotation3::IDENTITY) <= 1e-12);
        }
    }

    #[test]
    fn unwind_rotation_planar_inverse() {
        assert_eq!(unwind_rotation(&Rotation3::IDENTITY), Rotation3::IDENTITY);
        let t = 0.83;
        assert!(unwind_rotation(&Rotation3::yaw(t)).max_abs_diff(&Rotation3::yaw(-t)) < 1e-15);
    }

    #[test]
    fn from_matrix_validates() {
        assert!(Rotation3::from_matrix(Rotation3::yaw(0.3).matrix()).is_ok());
        let mut m = Rotation3::IDENTITY.matrix();
        m[0][0] = -1.0;
        assert!(matches!(
            Rotation3::from_matrix(m),
            Err(GeometryError::NotARotation { .. })
        ));
        m[0][0] = 1.001;
        assert!(Rotation3::from_matrix(m).is_err());
    }

    #[test]
    fn capability_named_cases() {
        use RotationSet::*;
        assert!(capability_check(FullSo3, FullSo3));
        assert!(!capability_check(PanTilt, FullSo3));
        assert!(capability_check(PanTilt, YawOnly));
    }

    #[test]
    fn capability_lattice() {
        for a in RotationSet::ALL {
            assert!(capability_check(a, a), "{a} not reflexive");
            assert!(capability_check(a, RotationSet::None));
            assert!(capability_check(RotationSet::FullSo3, a));
            for b in RotationSet::ALL {
                for c in RotationSet::ALL {
                    // transitivity: the containment relation is a partial order
                    if a.contains(b) && b.contains(c) {
                        assert!(a.contains(c));
                    }
                    // monotone in the camera argument
                    if a.contains(b) && capability_check(b, c) {
                        assert!(capability_check(a, c));
                    }
                }
            }
        }
        assert!(!capability_check(RotationSet::YawOnly, RotationSet::PanTilt));
        assert!(!capability_check(RotationSet::None, RotationSet::YawOnly));
    }

    #[test]
    fn viewpoint_heading_examples() {
        let d = |x: f64| PlanarRotation::from_degrees(x).unwrap();
        let cr = viewpoint_heading(d(30.0), d(10.0), ViewMode::Coupled);
        assert!((cr.degrees() - 40.0).abs() < 1e-12);
        let ur = viewpoint_heading(d(30.0), d(10.0), ViewMode::Unwound);
        assert!((ur.degrees() - 10.0).abs() < 1e-12);
        for deg in [-179.0, -90.0, 0.0, 45.0, 180.0] {
            assert_eq!(viewpoint_heading(d(deg), d(0.0), ViewMode::Unwound).angle(), 0.0);
        }
    }

    #[test]
    fn pitch_passes_through() {
        let head = ViewDirection { yaw: 0.2, pitch: -0.4 };
        let robot = PlanarRotation::from_angle(1.0).unwrap();
        for mode in ViewMode::BOTH {
            assert_eq!(world_view_direction(robot, head, mode).pitch, -0.4);
        }
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(a in -1e6f64..1e6) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert_eq!(wrap_angle(w), w);
        }

        #[test]
        fn embed_is_homomorphism(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let ra = PlanarRotation::from_angle(a).unwrap();
            let rb = PlanarRotation::from_angle(b).unwrap();
            let lhs = embed_planar(ra) * embed_planar(rb);
            let rhs = embed_planar(PlanarRotation::from_angle(a + b).unwrap());
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }

        #[test]
        fn ur_is_independent_of_robot_yaw(t1 in -10.0f64..10.0, t2 in -10.0f64..10.0, h in -4.0f64..4.0) {
            let head = PlanarRotation::from_angle(h).unwrap();
            let a = viewpoint_heading(PlanarRotation::from_angle(t1).unwrap(), head, ViewMode::Unwound);
            let b = viewpoint_heading(PlanarRotation::from_angle(t2).unwrap(), head, ViewMode::Unwound);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn cr_minus_ur_is_robot_yaw(t in -10.0f64..10.0, h in -4.0f64..4.0) {
            let robot = PlanarRotation::from_angle(t).unwrap();
            let head = PlanarRotation::from_angle(h).unwrap();
            let cr = viewpoint_heading(robot, head, ViewMode::Coupled).angle();
            let ur = viewpoint_heading(robot, head, ViewMode::Unwound).angle();
            let diff = wrap_angle(cr - ur);
            // equal as angles; the residual is one rounding of the sum
            prop_assert!(wrap_angle(diff - robot.angle()).abs() <= 1e-12);
        }
    }
}
