//! Planar two-link leg on a vertical guide: leg length to joint angles and back.
//!
//! Conventions: the knee angle is 0 for a straight leg and grows with flexion.
//! The hip angle is measured from the downward vertical and is chosen so the
//! foot sits directly below the hip. `knee_sign` picks the knee branch; it
//! mirrors the hip angle and the foot offset but never the knee magnitude.

use crate::error::{Error, ReachBound, Result};

/// Horizontal foot offset below which the foot counts as under the hip.
pub const FOOT_ALIGN_TOL: f64 = 1e-9;

/// Below this `|sin(theta_knee)|` the Jacobian is flagged singular.
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegGeometry {
    /// Thigh length (m).
    pub l1: f64,
    /// Shank length (m).
    pub l2: f64,
    /// Knee branch: `+1` bends backward (default), `-1` forward.
    pub knee_sign: f64,
}

impl Default for LegGeometry {
    fn default() -> Self {
        LegGeometry {
            l1: 0.38,
            l2: 0.361,
            knee_sign: 1.0,
        }
    }
}

impl LegGeometry {
    /// Fully extended hip-to-foot distance.
    pub fn reach(&self) -> f64 {
        self.l1 + self.l2
    }

    /// Fully folded hip-to-foot distance.
    pub fn folded(&self) -> f64 {
        (self.l1 - self.l2).abs()
    }

    /// Whether `y` lies strictly inside the reach interval.
    pub fn reachable(&self, y: f64) -> bool {
        y > self.folded() && y < self.reach()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub theta_hip: f64,
    pub theta_knee: f64,
    pub thetad_hip: f64,
    pub thetad_knee: f64,
}

/// Partial derivatives of the hip-to-foot distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegJacobian {
    pub d_hip: f64,
    pub d_knee: f64,
    pub singular: bool,
}

/// Joint angles `(theta_hip, theta_knee)` that place the foot `y` below the hip.
pub fn inverse_kinematics(y: f64, geo: &LegGeometry) -> Result<(f64, f64)> {
    if !(y > geo.folded()) {
        return Err(Error::Unreachable {
            length: y,
            bound: ReachBound::Folded,
        });
    }
    if !(y < geo.reach()) {
        return Err(Error::Unreachable {
            length: y,
            bound: ReachBound::Extended,
        });
    }
    let (l1, l2) = (geo.l1, geo.l2);
    let interior = ((l1 * l1 + l2 * l2 - y * y) / (2.0 * l1 * l2))
        .clamp(-1.0, 1.0)
        .acos();
    let knee = std::f64::consts::PI - interior;
    let hip = ((l1 * l1 + y * y - l2 * l2) / (2.0 * l1 * y))
        .clamp(-1.0, 1.0)
        .acos();
    Ok((geo.knee_sign * hip, knee))
}

/// Hip-to-foot distance and whether the foot is vertically below the hip.
pub fn forward_kinematics(js: &JointState, geo: &LegGeometry) -> (f64, bool) {
    let (l1, l2) = (geo.l1, geo.l2);
    let y = (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * js.theta_knee.cos())
        .max(0.0)
        .sqrt();
    let shank = js.theta_hip - geo.knee_sign * js.theta_knee;
    let x = l1 * js.theta_hip.sin() + l2 * shank.sin();
    let down = l1 * js.theta_hip.cos() + l2 * shank.cos();
    (y, x.abs() <= FOOT_ALIGN_TOL && down > 0.0)
}

/// Hip-to-foot distance for a knee angle.
pub fn leg_length(theta_knee: f64, geo: &LegGeometry) -> f64 {
    let (l1, l2) = (geo.l1, geo.l2);
    (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * theta_knee.cos())
        .max(0.0)
        .sqrt()
}

/// Analytic `dy/dtheta` per joint. The distance does not depend on the hip.
pub fn leg_jacobian(js: &JointState, geo: &LegGeometry) -> LegJacobian {
    let y = leg_length(js.theta_knee, geo);
    let s = js.theta_knee.sin();
    let d_knee = if y > 0.0 {
        -geo.l1 * geo.l2 * s / y
    } else {
        0.0
    };
    LegJacobian {
        d_hip: 0.0,
        d_knee,
        singular: s.abs() < SINGULAR_TOL || y <= 0.0,
    }
}

/// Rate of the foot-under-hip angle for a leg length changing at `ydot`.
pub fn hip_rate(y: f64, ydot: f64, geo: &LegGeometry) -> f64 {
    let (l1, l2) = (geo.l1, geo.l2);
    let c = (l1 * l1 + y * y - l2 * l2) / (2.0 * l1 * y);
    let dc = (y * y - l1 * l1 + l2 * l2) / (2.0 * l1 * y * y);
    let s = (1.0 - c * c).max(0.0).sqrt();
    if s < SINGULAR_TOL {
        return 0.0;
    }
    -geo.knee_sign * dc / s * ydot
}

/// Joint state for a leg of length `y` extending at `ydot`, foot under hip.
pub fn joint_state(y: f64, ydot: f64, geo: &LegGeometry) -> Result<JointState> {
    let (theta_hip, theta_knee) = inverse_kinematics(y, geo)?;
    let jac = leg_jacobian(
        &JointState {
            theta_knee,
            ..Default::default()
        },
        geo,
    );
    let thetad_knee = if jac.singular { 0.0 } else { ydot / jac.d_knee };
    Ok(JointState {
        theta_hip,
        theta_knee,
        thetad_hip: hip_rate(y, ydot, geo),
        thetad_knee,
    })
}
