//! Physical parameters of the two-mass hopper, their validation and derived
//! quantities.

use crate::error::{Error, Result, Violation};
use crate::kinematics::LegGeometry;

/// Standard gravity used when none is configured.
pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Body, foot and spring parameters of the two-mass model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopperParams {
    /// Body mass (kg).
    pub m: f64,
    /// Foot mass (kg).
    pub m_e: f64,
    /// Thigh mass (kg). Kept for bookkeeping; no dynamics use it.
    pub m_t: f64,
    /// Spring stiffness (N/m).
    pub k_s: f64,
    /// Neutral spring length (m).
    pub y_s_neu: f64,
    /// Stance amplitude above the static sag (m).
    pub c_amp: f64,
    /// Maximum compensation coefficient.
    pub c_max: f64,
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
}

impl HopperParams {
    /// Hopper with the printed stiffness of 17 N/m.
    pub fn paper_literal() -> Self {
        HopperParams {
            m: 5.6,
            m_e: 0.8,
            m_t: 1.87,
            k_s: 17.0,
            y_s_neu: 0.45,
            c_amp: 0.12,
            c_max: 0.11,
            g: DEFAULT_GRAVITY,
        }
    }

    /// Same hopper with the stiffness read as 1700 N/m.
    pub fn physical() -> Self {
        HopperParams {
            k_s: 1700.0,
            ..Self::paper_literal()
        }
    }

    /// Combined mass of body and foot.
    pub fn total_mass(&self) -> f64 {
        self.m + self.m_e
    }

    /// Reduced mass of the body-foot pair.
    pub fn reduced_mass(&self) -> f64 {
        self.m * self.m_e / (self.m + self.m_e)
    }

    /// Stance oscillation frequency `sqrt(k_s/m)` (rad/s).
    pub fn stance_frequency(&self) -> f64 {
        (self.k_s / self.m).sqrt()
    }

    /// Flight (relative) oscillation frequency `sqrt(k_s (m+m_e) / (m m_e))`.
    pub fn flight_frequency(&self) -> f64 {
        (self.k_s / self.reduced_mass()).sqrt()
    }

    /// Duration of one flight oscillation.
    pub fn flight_duration(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.flight_frequency()
    }

    /// Stance amplitude including the static sag, `C_amp + m g / k_s`.
    pub fn stance_amplitude(&self) -> f64 {
        self.c_amp + self.m * self.g / self.k_s
    }

    /// Body-to-foot distance at which the spring carries exactly the foot weight.
    pub fn lift_off_length(&self) -> f64 {
        self.m_e * self.g / self.k_s + self.y_s_neu
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        positive(out, "m", self.m);
        positive(out, "m_e", self.m_e);
        positive(out, "k_s", self.k_s);
        positive(out, "g", self.g);
        positive(out, "c_amp", self.c_amp);
        positive(out, "y_s_neu", self.y_s_neu);
        if !self.m_t.is_finite() || self.m_t < 0.0 {
            out.push(violation("m_t", "must be finite and >= 0", self.m_t));
        }
        if !(self.c_max.is_finite() && (0.0..1.0).contains(&self.c_max)) {
            out.push(violation("c_max", "must lie in [0, 1)", self.c_max));
        }
    }
}

/// Torque-speed envelope of the knee motor, motor side, plus the gear ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Stall torque (N m, motor side).
    pub tau_max: f64,
    /// No-load speed (rad/s, motor side).
    pub omega_max: f64,
    /// Reduction ratio.
    pub r: f64,
}

impl Default for MotorParams {
    fn default() -> Self {
        MotorParams {
            tau_max: 0.8,
            omega_max: 1300.0,
            r: 100.0,
        }
    }
}

impl MotorParams {
    /// Joint-side stall torque `R tau_max`.
    pub fn joint_stall_torque(&self) -> f64 {
        self.r * self.tau_max
    }

    /// Joint-side no-load speed `omega_max / R`.
    pub fn joint_no_load_speed(&self) -> f64 {
        self.omega_max / self.r
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        positive(out, "tau_max", self.tau_max);
        positive(out, "omega_max", self.omega_max);
        if !(self.r.is_finite() && self.r >= 1.0) {
            out.push(violation("r", "must be >= 1", self.r));
        }
    }
}

/// Joint PD gains of the force controller, joint side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    /// Proportional gain (N m/rad).
    pub k_p: f64,
    /// Derivative gain on absolute joint velocity (N m s/rad).
    pub k_d: f64,
}

impl Gains {
    /// Force-control gains of the reference hopper.
    pub fn reference() -> Self {
        Gains {
            k_p: 5424.0,
            k_d: 9.0,
        }
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        non_negative(out, "k_p", self.k_p);
        non_negative(out, "k_d", self.k_d);
    }
}

/// Contact phase of the hopper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopPhase {
    Stance,
    Flight,
}

impl HopPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            HopPhase::Stance => "stance",
            HopPhase::Flight => "flight",
        }
    }
}

impl std::fmt::Display for HopPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for HopPhase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stance" => Ok(HopPhase::Stance),
            "flight" => Ok(HopPhase::Flight),
            other => Err(format!("unknown phase '{other}'")),
        }
    }
}

/// Flight-phase relative stiffnesses `(k_f_m, k_f_e)`.
pub fn flight_stiffnesses(p: &HopperParams) -> (f64, f64) {
    let total = p.m + p.m_e;
    (p.k_s * total / p.m_e, p.k_s * total / p.m)
}

/// Non-fatal finding from [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The lift-off leg length is outside the two-link reach.
    LiftOffBeyondReach { lift_off: f64, reach: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::LiftOffBeyondReach { lift_off, reach } => {
                write!(
                    f,
                    "lift-off height {lift_off:.4} m exceeds reach {reach:.3} m"
                )
            }
        }
    }
}

/// Everything a run needs to know about the robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBundle {
    pub hopper: HopperParams,
    pub motor: MotorParams,
    /// Force-control gains; position control has none.
    pub gains: Option<Gains>,
    pub leg: LegGeometry,
}

/// A bundle that passed [`validate`], with any warnings it raised.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub bundle: ParamBundle,
    pub warnings: Vec<Warning>,
}

/// Checks every invariant, reporting all violations by field name.
pub fn validate(bundle: ParamBundle) -> Result<Validated> {
    let mut v = Vec::new();
    bundle.hopper.violations(&mut v);
    bundle.motor.violations(&mut v);
    if let Some(g) = &bundle.gains {
        g.violations(&mut v);
    }
    positive(&mut v, "l1", bundle.leg.l1);
    positive(&mut v, "l2", bundle.leg.l2);
    if !v.is_empty() {
        return Err(Error::Validation(v));
    }
    let mut warnings = Vec::new();
    let lift_off = bundle.hopper.lift_off_length();
    let reach = bundle.leg.reach();
    if lift_off > reach {
        warnings.push(Warning::LiftOffBeyondReach { lift_off, reach });
    }
    Ok(Validated { bundle, warnings })
}

fn violation(field: &'static str, rule: &str, value: f64) -> Violation {
    Violation {
        field,
        message: format!("{rule} (got {value})"),
    }
}

fn positive(out: &mut Vec<Violation>, field: &'static str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        out.push(violation(field, "must be finite and > 0", x));
    }
}

fn non_negative(out: &mut Vec<Violation>, field: &'static str, x: f64) {
    if !(x.is_finite() && x >= 0.0) {
        out.push(violation(field, "must be finite and >= 0", x));
    }
}
