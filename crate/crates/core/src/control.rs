//! PD torque law, torque-speed envelopes, the saturation clamp and the two
//! controller pipelines.

use crate::analytic::HopCycle;
use crate::kinematics::{inverse_kinematics, leg_jacobian, JointState, LegGeometry};
use crate::model::{Gains, HopPhase, HopperParams, MotorParams};
use crate::sim::SimState;

/// Raw, bound and applied torque of one joint (N m, joint side).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueCommand {
    pub tau_dyn: f64,
    pub tau_sat: f64,
    pub tau_des: f64,
}

impl TorqueCommand {
    /// Clamps `tau_dyn` to `tau_sat`.
    pub fn clamped(tau_dyn: f64, tau_sat: f64) -> Self {
        TorqueCommand {
            tau_dyn,
            tau_sat,
            tau_des: clamp(tau_dyn, tau_sat),
        }
    }

    /// An ideal actuator with no envelope.
    pub fn unbounded(tau: f64) -> Self {
        TorqueCommand {
            tau_dyn: tau,
            tau_sat: f64::INFINITY,
            tau_des: tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueCommands {
    pub hip: TorqueCommand,
    pub knee: TorqueCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControllerMode {
    Force,
    Position,
}

impl ControllerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Force => "force",
            ControllerMode::Position => "position",
        }
    }
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "force" => Ok(ControllerMode::Force),
            "position" => Ok(ControllerMode::Position),
            other => Err(format!(
                "unknown controller '{other}' (expected force or position)"
            )),
        }
    }
}

/// `-k_p (theta_act - theta_des) - k_d thetad_act`. Damping acts on the
/// absolute joint velocity.
pub fn pd_torque(theta_act: f64, thetad_act: f64, theta_des: f64, g: &Gains) -> f64 {
    -g.k_p * (theta_act - theta_des) - g.k_d * thetad_act
}

/// Linear torque-speed ceiling of the motor, motor side.
pub fn motor_saturation(thetad_motor: f64, m: &MotorParams) -> f64 {
    let s = thetad_motor.abs();
    if s <= m.omega_max {
        (m.tau_max * (1.0 - s / m.omega_max)).max(0.0)
    } else {
        0.0
    }
}

/// Speed-proportional torque loss of the motor.
pub fn back_emf(thetad_act: f64, m: &MotorParams) -> f64 {
    m.tau_max / m.omega_max * thetad_act
}

/// Joint-side ceiling for a joint moving at `thetad_act` through the gearbox.
pub fn actuator_saturation(thetad_act: f64, m: &MotorParams) -> f64 {
    m.r * motor_saturation(m.r * thetad_act, m)
}

pub fn clamp(tau_dyn: f64, tau_sat: f64) -> f64 {
    if tau_dyn.abs() <= tau_sat {
        tau_dyn
    } else {
        tau_sat.copysign(tau_dyn)
    }
}

/// Where in the hop cycle the reference currently is.
///
/// The clock runs while the foot is down and wraps at the period. Lift-off
/// moves it forward to the flight branch if it lags; in flight it waits at
/// touchdown time; landing resynchronises it to the descending branch point
/// matching the actual leg length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceClock {
    pub time: f64,
    pub cycle: HopCycle,
}

impl ReferenceClock {
    pub fn new(cycle: HopCycle) -> Self {
        ReferenceClock { time: 0.0, cycle }
    }

    pub fn advance(&mut self, dt: f64) {
        self.time += dt;
    }

    pub fn on_lift(&mut self) {
        self.time = self.time.max(self.cycle.lift.t_lo);
    }

    pub fn on_landing(&mut self, leg_length: f64) {
        self.time = self.resync_time(leg_length);
    }

    /// Keeps the clock inside the branch allowed for `phase`.
    pub fn settle(&mut self, phase: HopPhase) {
        match phase {
            HopPhase::Flight => self.time = self.time.min(self.cycle.touchdown_time()),
            HopPhase::Stance => {
                if self.time >= self.cycle.period {
                    self.time -= self.cycle.period;
                }
            }
        }
    }

    /// Point on the descending branch where the reference equals `leg_length`.
    pub fn resync_time(&self, leg_length: f64) -> f64 {
        let c = &self.cycle;
        let (mut lo, mut hi) = (c.touchdown_time(), c.period);
        let end = hi - 1e-12;
        if leg_length >= c.sample(lo).y_des {
            return lo;
        }
        if leg_length <= c.sample(end).y_des {
            return end;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if c.sample(mid).y_des > leg_length {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Memory a tracking controller carries between steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerMemory {
    pub clock: ReferenceClock,
    /// Last reachable knee target.
    pub theta_des: f64,
}

/// What a controller step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub cmds: TorqueCommands,
    /// Reference clock advance per unit time, in `[0, 1]`.
    pub clock_rate: f64,
    /// Knee target used for this step.
    pub theta_des: f64,
    /// The reference was out of reach and the previous target was held.
    pub ik_failed: bool,
}

/// Reference knee angle and its rate per unit reference time.
fn knee_reference(mem: &ControllerMemory, geo: &LegGeometry) -> (f64, f64, bool) {
    let t = mem.clock.time;
    let y = mem.clock.cycle.sample(t).y_des;
    match inverse_kinematics(y, geo) {
        Ok((_, knee)) => {
            let jac = leg_jacobian(
                &JointState {
                    theta_knee: knee,
                    ..Default::default()
                },
                geo,
            );
            let rate = if jac.singular {
                0.0
            } else {
                mem.clock.cycle.rate(t) / jac.d_knee
            };
            (knee, rate, false)
        }
        Err(_) => (mem.theta_des, 0.0, true),
    }
}

fn hip_command(js: &JointState, motor: &MotorParams) -> TorqueCommand {
    TorqueCommand::clamped(0.0, actuator_saturation(js.thetad_hip, motor))
}

/// Force control: PD on the trajectory-derived knee target, clamped at the
/// speed-dependent envelope. The hip only keeps the foot under the body and
/// carries no load with massless links.
pub fn force_control_step(
    state: &SimState,
    mem: &ControllerMemory,
    geo: &LegGeometry,
    gains: &Gains,
    motor: &MotorParams,
) -> ControlOutput {
    let (theta_des, _, ik_failed) = knee_reference(mem, geo);
    let js = &state.joints;
    let tau_dyn = pd_torque(js.theta_knee, js.thetad_knee, theta_des, gains);
    let knee = TorqueCommand::clamped(tau_dyn, actuator_saturation(js.thetad_knee, motor));
    ControlOutput {
        cmds: TorqueCommands {
            hip: hip_command(js, motor),
            knee,
        },
        clock_rate: 1.0,
        theta_des,
        ik_failed,
    }
}

/// Settings of the position servo.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionServo {
    /// Closed-loop bandwidth (rad/s).
    pub bandwidth: f64,
    /// Fraction of the envelope the tracking torque may use before the
    /// reference is slowed down.
    pub headroom: f64,
}

impl PositionServo {
    /// Bandwidth scaled to a fiftieth of the control rate.
    pub fn for_control_rate(rate_hz: f64) -> Self {
        PositionServo {
            bandwidth: 2.0 * std::f64::consts::PI * rate_hz / 50.0,
            headroom: DEFAULT_HEADROOM,
        }
    }
}

pub const DEFAULT_HEADROOM: f64 = 0.5;

/// Largest `s` in `[0, 1]` with `|a + b s| <= limit`, or the endpoint with the
/// smaller magnitude when no such `s` exists.
pub fn feasible_rate(a: f64, b: f64, limit: f64) -> f64 {
    if (a + b).abs() <= limit {
        return 1.0;
    }
    if b != 0.0 {
        let mut best: Option<f64> = None;
        for s in [(limit - a) / b, (-limit - a) / b] {
            if (0.0..=1.0).contains(&s) && (a + b * s).abs() <= limit * (1.0 + 1e-12) {
                best = Some(best.map_or(s, |x: f64| x.max(s)));
            }
        }
        if let Some(s) = best {
            return s;
        }
    }
    if a.abs() <= limit || a.abs() < (a + b).abs() {
        0.0
    } else {
        1.0
    }
}

/// Position control: velocity-feedforward PD with gains scaled to the
/// effective knee inertia, and the reference retimed so the tracking torque
/// stays within `headroom` of the envelope. The same clamp applies after.
pub fn position_control_step(
    state: &SimState,
    mem: &ControllerMemory,
    p: &HopperParams,
    geo: &LegGeometry,
    servo: &PositionServo,
    motor: Option<&MotorParams>,
) -> ControlOutput {
    let (theta_des, rate_des, ik_failed) = knee_reference(mem, geo);
    let js = &state.joints;
    let jac = leg_jacobian(js, geo).d_knee;
    let mass = match state.phase {
        HopPhase::Stance => p.m,
        HopPhase::Flight => p.reduced_mass(),
    };
    let inertia = mass * jac * jac;
    let kp = inertia * servo.bandwidth * servo.bandwidth;
    let kd = 2.0 * inertia * servo.bandwidth;
    let a = kp * (theta_des - js.theta_knee) - kd * js.thetad_knee;
    let b = kd * rate_des;
    let (tau_sat, hip) = match motor {
        Some(m) => (actuator_saturation(js.thetad_knee, m), hip_command(js, m)),
        None => (f64::INFINITY, TorqueCommand::unbounded(0.0)),
    };
    let s = if tau_sat.is_finite() {
        feasible_rate(a, b, servo.headroom * tau_sat)
    } else {
        1.0
    };
    ControlOutput {
        cmds: TorqueCommands {
            hip,
            knee: TorqueCommand::clamped(a + b * s, tau_sat),
        },
        clock_rate: s,
        theta_des,
        ik_failed,
    }
}
