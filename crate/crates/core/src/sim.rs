//! Hybrid fixed-step simulation of the two-mass hopper.
//!
//! Two plants share the event machinery:
//!
//! * [`PlantModel::Physical`]: a leg on a vertical guide with gravity on both
//!   masses. In stance the foot is pinned; in flight both masses move. The
//!   leg force comes from the knee torque through the leg Jacobian.
//! * [`PlantModel::Template`]: the idealised two-mass hop. Body weight is
//!   carried by the neutral length in stance, flight is integrated in the
//!   frame falling with the common centre of mass (origin at the lift-off
//!   foot position), and touchdown mirrors the leg rate so descent retraces
//!   the ascent. Its cycle has the closed-form period of the analytic module.

use crate::analytic::{stance_position, HopCycle};
use crate::control::{
    force_control_step, position_control_step, ControlOutput, ControllerMemory, PositionServo,
    ReferenceClock, TorqueCommand, TorqueCommands,
};
use crate::error::{Error, Result};
use crate::kinematics::{joint_state, JointState, LegGeometry};
use crate::model::{Gains, HopPhase, HopperParams, MotorParams};

/// Foot heights at or above `-CONTACT_EPS` count as not yet in contact.
pub const CONTACT_EPS: f64 = 1e-9;

/// Smallest leg Jacobian magnitude used when mapping torque to leg force.
pub const JACOBIAN_FLOOR: f64 = 1e-3;

/// Fraction of the reach interval between each hard stop and the
/// kinematic limit behind it.
pub const REACH_MARGIN: f64 = 0.02;

/// Contact stiffness of the knee hard stops (N/m along the leg).
pub const STOP_STIFFNESS: f64 = 2e5;

/// Contact damping of the knee hard stops (N s/m along the leg).
pub const STOP_DAMPING: f64 = 2e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantModel {
    Physical,
    Template,
}

impl PlantModel {
    pub fn as_str(self) -> &'static str {
        match self {
            PlantModel::Physical => "physical",
            PlantModel::Template => "template",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub phase: HopPhase,
    pub y_body: f64,
    pub v_body: f64,
    pub y_foot: f64,
    pub v_foot: f64,
    pub joints: JointState,
    pub last_cmd: TorqueCommands,
}

impl SimState {
    /// Body-to-foot distance.
    pub fn leg_length(&self) -> f64 {
        self.y_body - self.y_foot
    }

    pub fn leg_rate(&self) -> f64 {
        self.v_body - self.v_foot
    }

    fn finite(&self) -> bool {
        self.t.is_finite()
            && self.y_body.is_finite()
            && self.v_body.is_finite()
            && self.y_foot.is_finite()
            && self.v_foot.is_finite()
    }
}

/// Linear spring between body and foot, applied directly as leg force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualSpring {
    pub stiffness: f64,
    pub rest_length: f64,
    /// Constant extra extension force (N).
    pub preload: f64,
}

impl VirtualSpring {
    /// The hopper's own spring.
    pub fn of(p: &HopperParams) -> Self {
        VirtualSpring {
            stiffness: p.k_s,
            rest_length: p.y_s_neu,
            preload: 0.0,
        }
    }

    /// The hopper's spring plus a body-weight preload, so a pinned-foot
    /// stance on the physical plant follows the closed-form cosine.
    pub fn weight_compensated(p: &HopperParams) -> Self {
        VirtualSpring {
            preload: p.m * p.g,
            ..Self::of(p)
        }
    }

    pub fn force(&self, leg: f64) -> f64 {
        -self.stiffness * (leg - self.rest_length) + self.preload
    }
}

/// What drives the leg during a plant step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Actuation {
    /// Knee torque held for the step; the leg force follows the geometry.
    Torque(f64),
    /// Leg force evaluated from the state at every stage.
    Spring(VirtualSpring),
}

/// Plant description shared by every step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plant {
    pub hopper: HopperParams,
    pub leg: LegGeometry,
    pub model: PlantModel,
}

impl Plant {
    fn leg_force(&self, act: &Actuation, leg: f64, rate: f64) -> f64 {
        let drive = match act {
            Actuation::Spring(s) => s.force(leg),
            Actuation::Torque(tau) => tau / knee_jacobian(leg, &self.leg),
        };
        drive + self.stop_force(leg, rate)
    }

    /// Force of the knee hard stops, zero between them.
    pub fn stop_force(&self, leg: f64, rate: f64) -> f64 {
        if self.model == PlantModel::Template {
            return 0.0;
        }
        let (lo, hi) = stop_lengths(&self.leg);
        if leg < lo {
            (STOP_STIFFNESS * (lo - leg) - STOP_DAMPING * rate).max(0.0)
        } else if leg > hi {
            (STOP_STIFFNESS * (hi - leg) - STOP_DAMPING * rate).min(0.0)
        } else {
            0.0
        }
    }

    /// Ground reaction needed to keep the foot pinned.
    pub fn pin_force(&self, act: &Actuation, state: &SimState) -> f64 {
        self.leg_force(act, state.leg_length(), state.leg_rate()) + self.hopper.m_e * self.hopper.g
    }

    fn derivative(&self, act: &Actuation, phase: HopPhase, x: [f64; 4]) -> [f64; 4] {
        let p = &self.hopper;
        let f = self.leg_force(act, x[0] - x[2], x[1] - x[3]);
        let g = match self.model {
            PlantModel::Physical => p.g,
            PlantModel::Template => 0.0,
        };
        match phase {
            HopPhase::Stance => [x[1], f / p.m - g, 0.0, 0.0],
            HopPhase::Flight => [x[1], f / p.m - g, x[3], -f / p.m_e - g],
        }
    }
}

/// Leg lengths of the folded and extended hard stops.
pub fn stop_lengths(geo: &LegGeometry) -> (f64, f64) {
    let span = geo.reach() - geo.folded();
    (
        geo.folded() + REACH_MARGIN * span,
        geo.reach() - REACH_MARGIN * span,
    )
}

/// Knee Jacobian of a leg of length `leg`, kept away from zero.
pub fn knee_jacobian(leg: f64, geo: &LegGeometry) -> f64 {
    let (l1, l2) = (geo.l1, geo.l2);
    let c = ((leg * leg - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let s = (1.0 - c * c).sqrt();
    let j = -l1 * l2 * s / leg.max(f64::MIN_POSITIVE);
    j.min(-JACOBIAN_FLOOR)
}

/// One RK4 step of the active phase. The phase never changes here.
pub fn step(state: &SimState, act: &Actuation, dt: f64, plant: &Plant) -> SimState {
    let x0 = [state.y_body, state.v_body, state.y_foot, state.v_foot];
    let d = |x: [f64; 4]| plant.derivative(act, state.phase, x);
    let add = |x: [f64; 4], k: [f64; 4], h: f64| {
        [
            x[0] + h * k[0],
            x[1] + h * k[1],
            x[2] + h * k[2],
            x[3] + h * k[3],
        ]
    };
    let k1 = d(x0);
    let k2 = d(add(x0, k1, 0.5 * dt));
    let k3 = d(add(x0, k2, 0.5 * dt));
    let k4 = d(add(x0, k3, dt));
    let mut x = [0.0; 4];
    for i in 0..4 {
        x[i] = x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut next = SimState {
        t: state.t + dt,
        y_body: x[0],
        v_body: x[1],
        y_foot: x[2],
        v_foot: x[3],
        ..*state
    };
    if state.phase == HopPhase::Stance {
        next.y_foot = state.y_foot;
        next.v_foot = 0.0;
    }
    next.joints = joints_or_nan(&next, &plant.leg);
    next
}

fn joints_or_nan(s: &SimState, geo: &LegGeometry) -> JointState {
    joint_state(s.leg_length(), s.leg_rate(), geo).unwrap_or(JointState {
        theta_hip: f64::NAN,
        theta_knee: f64::NAN,
        thetad_hip: f64::NAN,
        thetad_knee: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Lift,
    Landing,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Lift => "lift",
            EventKind::Landing => "landing",
        }
    }
}

/// A phase change located inside a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    /// Event time (s).
    pub t: f64,
    /// Position of the event within the step, in `[0, 1]`.
    pub fraction: f64,
}

/// Checks whether the step `prev -> next` crossed a switching condition.
///
/// Lift: the pin force drops to zero or below. Landing: the foot goes below
/// the ground while moving down. Each condition belongs to one phase, so a
/// step can raise at most one of them; landing is checked first.
pub fn detect_transition(
    prev: &SimState,
    next: &SimState,
    act: &Actuation,
    plant: &Plant,
) -> Option<Event> {
    let dt = next.t - prev.t;
    let at = |kind, fraction: f64| {
        let fraction = fraction.clamp(0.0, 1.0);
        Some(Event {
            kind,
            t: prev.t + fraction * dt,
            fraction,
        })
    };
    match prev.phase {
        HopPhase::Flight => {
            if !(next.y_foot < -CONTACT_EPS && next.v_foot < 0.0) {
                return None;
            }
            if prev.y_foot > 0.0 {
                at(
                    EventKind::Landing,
                    prev.y_foot / (prev.y_foot - next.y_foot),
                )
            } else if plant.model == PlantModel::Physical {
                at(EventKind::Landing, 0.0)
            } else {
                None
            }
        }
        HopPhase::Stance => {
            let n1 = plant.pin_force(act, next);
            if n1 > 0.0 {
                return None;
            }
            let n0 = plant.pin_force(act, prev);
            if n0 > 0.0 {
                at(EventKind::Lift, n0 / (n0 - n1))
            } else {
                at(EventKind::Lift, 0.0)
            }
        }
    }
}

/// Applies the reset map of an event to the state at the event time.
pub fn apply_event(state: &SimState, kind: EventKind, plant: &Plant) -> SimState {
    let mut s = *state;
    match (kind, plant.model) {
        (EventKind::Lift, PlantModel::Physical) => {
            s.phase = HopPhase::Flight;
            s.v_foot = 0.0;
        }
        (EventKind::Lift, PlantModel::Template) => {
            let p = &plant.hopper;
            let v_com = (p.m * s.v_body + p.m_e * s.v_foot) / p.total_mass();
            s.phase = HopPhase::Flight;
            s.v_body -= v_com;
            s.v_foot -= v_com;
        }
        (EventKind::Landing, PlantModel::Physical) => {
            s.phase = HopPhase::Stance;
            s.y_foot = 0.0;
            s.v_foot = 0.0;
        }
        (EventKind::Landing, PlantModel::Template) => {
            let leg = s.leg_length();
            let rate = s.leg_rate();
            s.phase = HopPhase::Stance;
            s.y_body = leg;
            s.v_body = -rate;
            s.y_foot = 0.0;
            s.v_foot = 0.0;
        }
    }
    s.joints = joints_or_nan(&s, &plant.leg);
    s
}

/// How the leg is driven for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerSpec {
    /// PD force control on the hop trajectory.
    Force(Gains),
    /// Trajectory-tracking servo.
    Position(PositionServo),
    /// Ideal spring acting directly on the leg.
    Spring(VirtualSpring),
    /// No torque at all.
    Passive,
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::Force(_) => "force",
            ControllerSpec::Position(_) => "position",
            ControllerSpec::Spring(_) => "spring",
            ControllerSpec::Passive => "passive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    /// Simulated time (s).
    Duration(f64),
    /// Number of completed hops, counted at touchdown.
    Hops(usize),
}

/// Starting state of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Stance at the bottom of the closed-form stance response, at rest.
    StanceBottom,
    /// Stance at rest with the given leg length.
    StanceAt(f64),
    /// Flight with explicit heights and velocities.
    Flight {
        y_body: f64,
        v_body: f64,
        y_foot: f64,
        v_foot: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub hopper: HopperParams,
    pub leg: LegGeometry,
    /// Motor envelope; `None` means an ideal actuator.
    pub motor: Option<MotorParams>,
    pub plant: PlantModel,
    pub controller: ControllerSpec,
    /// Plant step (s).
    pub dt: f64,
    /// Controller rate (Hz); must be an integer division of `1/dt`.
    pub control_rate: f64,
    pub stop: StopCondition,
    /// Hard stop for hop-count runs (s).
    pub max_duration: f64,
    pub initial: InitialState,
    /// Abort after this many held reference targets.
    pub ik_failure_limit: Option<usize>,
}

pub const DEFAULT_DT: f64 = 2.5e-4;
pub const DEFAULT_CONTROL_RATE: f64 = 4000.0;
pub const DEFAULT_MAX_DURATION: f64 = 30.0;

impl SimConfig {
    /// Reference-hopper defaults for a given controller on the physical plant.
    pub fn new(hopper: HopperParams, controller: ControllerSpec) -> Self {
        SimConfig {
            hopper,
            leg: LegGeometry::default(),
            motor: Some(MotorParams::default()),
            plant: PlantModel::Physical,
            controller,
            dt: DEFAULT_DT,
            control_rate: DEFAULT_CONTROL_RATE,
            stop: StopCondition::Hops(3),
            max_duration: DEFAULT_MAX_DURATION,
            initial: InitialState::StanceBottom,
            ik_failure_limit: None,
        }
    }

    /// Plant steps per control step.
    pub fn substeps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(setting("dt", format!("must be > 0 (got {})", self.dt)));
        }
        if !(self.control_rate.is_finite() && self.control_rate > 0.0) {
            return Err(setting(
                "control_rate",
                format!("must be > 0 (got {})", self.control_rate),
            ));
        }
        let ratio = 1.0 / (self.control_rate * self.dt);
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 * n {
            return Err(setting(
                "dt",
                format!(
                    "control period 1/{} s is not a whole number of {} s steps",
                    self.control_rate, self.dt
                ),
            ));
        }
        Ok(n as usize)
    }

    fn check(&self) -> Result<usize> {
        let n = self.substeps()?;
        match self.stop {
            StopCondition::Duration(d) if !(d.is_finite() && d >= 0.0) => {
                return Err(setting("duration", format!("must be >= 0 (got {d})")))
            }
            _ => {}
        }
        if !(self.max_duration.is_finite() && self.max_duration >= 0.0) {
            return Err(setting("max_duration", "must be >= 0".into()));
        }
        if matches!(
            self.controller,
            ControllerSpec::Force(_) | ControllerSpec::Position(_)
        ) && self.plant == PlantModel::Template
        {
            return Err(setting(
                "plant",
                "the template plant is driven by spring or passive actuation only".into(),
            ));
        }
        Ok(n)
    }
}

fn setting(field: &'static str, message: String) -> Error {
    Error::Setting { field, message }
}

/// One logged control step: state at the step start and the command applied
/// over the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub phase: HopPhase,
    pub y_body: f64,
    pub v_body: f64,
    pub y_foot: f64,
    pub v_foot: f64,
    pub joints: JointState,
    pub hip: TorqueCommand,
    pub knee: TorqueCommand,
    pub c_act_hip: f64,
    pub c_act_knee: f64,
    /// Reference leg length, `NaN` without a trajectory.
    pub y_des: f64,
    /// Reference knee angle, `NaN` without a trajectory.
    pub theta_des_knee: f64,
}

impl TelemetryRecord {
    pub fn leg_length(&self) -> f64 {
        self.y_body - self.y_foot
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    Aborted { t: f64, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryLog {
    pub records: Vec<TelemetryRecord>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// Steps on which the reference was unreachable and the target was held.
    pub ik_failures: usize,
    /// Non-fatal remarks about the run.
    pub notes: Vec<String>,
    pub hopper: HopperParams,
    pub controller: &'static str,
    pub plant: PlantModel,
}

impl TelemetryLog {
    pub fn lifts(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Lift)
    }

    pub fn landings(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::Landing)
    }

    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }
}

fn initial_state(cfg: &SimConfig, notes: &mut Vec<String>) -> SimState {
    let p = &cfg.hopper;
    let base = SimState {
        t: 0.0,
        phase: HopPhase::Stance,
        y_body: 0.0,
        v_body: 0.0,
        y_foot: 0.0,
        v_foot: 0.0,
        joints: JointState::default(),
        last_cmd: TorqueCommands::default(),
    };
    let stance_at = |y: f64| SimState { y_body: y, ..base };
    let mut s = match cfg.initial {
        InitialState::StanceBottom => {
            let y = stance_position(0.0, p);
            if cfg.plant == PlantModel::Physical && !cfg.leg.reachable(y) {
                let (lo, hi) = stop_lengths(&cfg.leg);
                let c = y.clamp(lo, hi);
                notes.push(format!(
                    "initial leg length {y:.4} m is out of reach; clamped to {c:.4} m"
                ));
                stance_at(c)
            } else {
                stance_at(y)
            }
        }
        InitialState::StanceAt(y) => stance_at(y),
        InitialState::Flight {
            y_body,
            v_body,
            y_foot,
            v_foot,
        } => SimState {
            phase: HopPhase::Flight,
            y_body,
            v_body,
            y_foot,
            v_foot,
            ..base
        },
    };
    s.joints = joints_or_nan(&s, &cfg.leg);
    s
}

struct Driver {
    memory: Option<ControllerMemory>,
}

/// Runs a full simulation. Configuration errors are returned before any
/// step; runtime failures end the run early with [`Outcome::Aborted`].
pub fn run(cfg: &SimConfig) -> Result<TelemetryLog> {
    let substeps = cfg.check()?;
    let plant = Plant {
        hopper: cfg.hopper,
        leg: cfg.leg,
        model: cfg.plant,
    };
    let h = cfg.dt;
    let control_dt = h * substeps as f64;
    let mut notes = Vec::new();
    let mut state = initial_state(cfg, &mut notes);

    let tracking = matches!(
        cfg.controller,
        ControllerSpec::Force(_) | ControllerSpec::Position(_)
    );
    let cycle = if tracking {
        Some(HopCycle::new(&cfg.hopper)?)
    } else {
        None
    };
    let mut driver = Driver {
        memory: cycle.map(|c| ControllerMemory {
            clock: ReferenceClock::new(c),
            theta_des: state.joints.theta_knee,
        }),
    };

    let mut log = TelemetryLog {
        records: Vec::new(),
        events: Vec::new(),
        outcome: Outcome::Completed,
        ik_failures: 0,
        notes,
        hopper: cfg.hopper,
        controller: cfg.controller.name(),
        plant: cfg.plant,
    };

    let limit_steps = match cfg.stop {
        StopCondition::Duration(d) => (d / control_dt + 1e-9).floor() as usize,
        StopCondition::Hops(_) => (cfg.max_duration / control_dt + 1e-9).floor() as usize,
    };
    let mut landings = 0usize;

    for k in 0..=limit_steps {
        state.t = k as f64 * control_dt;
        if let Err(reason) = physical_sanity(&state, cfg) {
            abort(&mut log, state.t, reason);
            break;
        }
        let (act, out) = command(cfg, &driver, &state);
        if out.as_ref().is_some_and(|o| o.ik_failed) {
            log.ik_failures += 1;
        }
        state.last_cmd = act_commands(cfg, &act, &out, &state);
        log.records.push(record(&state, &driver, &out));

        if let Some(limit) = cfg.ik_failure_limit {
            if log.ik_failures > limit {
                let reason = format!(
                    "reference unreachable on {} steps (limit {limit})",
                    log.ik_failures
                );
                abort(&mut log, state.t, reason);
                break;
            }
        }
        let done = match cfg.stop {
            StopCondition::Hops(n) => landings >= n,
            StopCondition::Duration(_) => false,
        };
        if done || k == limit_steps {
            break;
        }

        if let (Some(mem), Some(o)) = (driver.memory.as_mut(), out.as_ref()) {
            mem.theta_des = o.theta_des;
            mem.clock.advance(o.clock_rate * control_dt);
        }
        for _ in 0..substeps {
            let events = advance(&mut state, &act, h, &plant);
            for e in events {
                if let Some(mem) = driver.memory.as_mut() {
                    match e.kind {
                        EventKind::Lift => mem.clock.on_lift(),
                        EventKind::Landing => mem.clock.on_landing(state.leg_length()),
                    }
                }
                if e.kind == EventKind::Landing {
                    landings += 1;
                }
                log.events.push(e);
            }
        }
        if let Some(mem) = driver.memory.as_mut() {
            mem.clock.settle(state.phase);
        }
        if !state.finite() {
            abort(&mut log, state.t, "non-finite state".into());
            break;
        }
    }
    Ok(log)
}

fn abort(log: &mut TelemetryLog, t: f64, reason: String) {
    log.outcome = Outcome::Aborted { t, reason };
}

fn physical_sanity(state: &SimState, cfg: &SimConfig) -> std::result::Result<(), String> {
    if !state.finite() {
        return Err("non-finite state".into());
    }
    if cfg.plant == PlantModel::Physical && !cfg.leg.reachable(state.leg_length()) {
        return Err(format!(
            "leg length {:.6} m left the reach interval ({}, {})",
            state.leg_length(),
            cfg.leg.folded(),
            cfg.leg.reach()
        ));
    }
    Ok(())
}

/// Integrates one plant step, relocating the state at any event inside it.
fn advance(state: &mut SimState, act: &Actuation, h: f64, plant: &Plant) -> Vec<Event> {
    let mut events = Vec::new();
    let t_end = state.t + h;
    let mut remaining = h;
    for _ in 0..8 {
        let next = step(state, act, remaining, plant);
        match detect_transition(state, &next, act, plant) {
            Some(e) => {
                let at = if e.fraction > 0.0 {
                    step(state, act, e.fraction * remaining, plant)
                } else {
                    *state
                };
                *state = apply_event(&SimState { t: e.t, ..at }, e.kind, plant);
                events.push(e);
                remaining = t_end - state.t;
                if remaining <= 0.0 {
                    break;
                }
            }
            None => {
                *state = next;
                break;
            }
        }
    }
    state.t = t_end;
    events
}

fn command(
    cfg: &SimConfig,
    driver: &Driver,
    state: &SimState,
) -> (Actuation, Option<ControlOutput>) {
    match &cfg.controller {
        ControllerSpec::Force(gains) => {
            let mem = driver.memory.as_ref().expect("tracking memory");
            let out = match &cfg.motor {
                Some(m) => force_control_step(state, mem, &cfg.leg, gains, m),
                None => {
                    let ideal = MotorParams {
                        tau_max: f64::INFINITY,
                        omega_max: f64::INFINITY,
                        r: 1.0,
                    };
                    let mut o = force_control_step(state, mem, &cfg.leg, gains, &ideal);
                    o.cmds.knee = TorqueCommand::unbounded(o.cmds.knee.tau_dyn);
                    o.cmds.hip = TorqueCommand::unbounded(0.0);
                    o
                }
            };
            (Actuation::Torque(out.cmds.knee.tau_des), Some(out))
        }
        ControllerSpec::Position(servo) => {
            let mem = driver.memory.as_ref().expect("tracking memory");
            let out =
                position_control_step(state, mem, &cfg.hopper, &cfg.leg, servo, cfg.motor.as_ref());
            (Actuation::Torque(out.cmds.knee.tau_des), Some(out))
        }
        ControllerSpec::Spring(s) => (Actuation::Spring(*s), None),
        ControllerSpec::Passive => (Actuation::Torque(0.0), None),
    }
}

/// Joint torques to log for the actuation of a step.
fn act_commands(
    cfg: &SimConfig,
    act: &Actuation,
    out: &Option<ControlOutput>,
    state: &SimState,
) -> TorqueCommands {
    if let Some(o) = out {
        return o.cmds;
    }
    let knee = match act {
        Actuation::Torque(t) => *t,
        Actuation::Spring(s) => {
            s.force(state.leg_length())
                * crate::kinematics::leg_jacobian(&state.joints, &cfg.leg).d_knee
        }
    };
    TorqueCommands {
        hip: TorqueCommand::unbounded(0.0),
        knee: TorqueCommand::unbounded(knee),
    }
}

fn record(state: &SimState, driver: &Driver, out: &Option<ControlOutput>) -> TelemetryRecord {
    let (y_des, theta_des_knee) = match (driver.memory.as_ref(), out) {
        (Some(mem), Some(o)) => (mem.clock.cycle.sample(mem.clock.time).y_des, o.theta_des),
        _ => (f64::NAN, f64::NAN),
    };
    let c = state.last_cmd;
    TelemetryRecord {
        t: state.t,
        phase: state.phase,
        y_body: state.y_body,
        v_body: state.v_body,
        y_foot: state.y_foot,
        v_foot: state.v_foot,
        joints: state.joints,
        hip: c.hip,
        knee: c.knee,
        c_act_hip: crate::metrics::saturation_ratio(c.hip.tau_des, c.hip.tau_sat),
        c_act_knee: crate::metrics::saturation_ratio(c.knee.tau_des, c.knee.tau_sat),
        y_des,
        theta_des_knee,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant(model: PlantModel) -> Plant {
        Plant {
            hopper: HopperParams::physical(),
            leg: LegGeometry::default(),
            model,
        }
    }

    fn flight(y_foot: f64, v_foot: f64, t: f64) -> SimState {
        SimState {
            t,
            phase: HopPhase::Flight,
            y_body: 0.5,
            v_body: 0.0,
            y_foot,
            v_foot,
            joints: JointState::default(),
            last_cmd: TorqueCommands::default(),
        }
    }

    #[test]
    fn landing_interpolates_half_step() {
        let p = plant(PlantModel::Physical);
        let prev = flight(0.001, -1.0, 1.0);
        let next = flight(-0.001, -1.0, 1.001);
        let e = detect_transition(&prev, &next, &Actuation::Torque(0.0), &p).unwrap();
        assert_eq!(e.kind, EventKind::Landing);
        assert!((e.fraction - 0.5).abs() < 1e-12);
        assert!((e.t - 1.0005).abs() < 1e-12);
    }

    #[test]
    fn no_crossing_no_event() {
        let p = plant(PlantModel::Physical);
        let prev = flight(0.003, -1.0, 0.0);
        let next = flight(0.002, -1.0, 0.001);
        assert!(detect_transition(&prev, &next, &Actuation::Torque(0.0), &p).is_none());
        let rising = flight(-0.001, 1.0, 0.001);
        assert!(detect_transition(&prev, &rising, &Actuation::Torque(0.0), &p).is_none());
    }

    #[test]
    fn free_fall_is_exact() {
        let p = plant(PlantModel::Physical);
        let mut s = flight(0.2, 0.0, 0.0);
        let dt = 1e-3;
        for _ in 0..500 {
            s = step(&s, &Actuation::Torque(0.0), dt, &p);
        }
        assert!((s.v_body + 9.81 * 500.0 * dt).abs() < 1e-12);
        assert!((s.v_foot + 9.81 * 500.0 * dt).abs() < 1e-12);
    }

    #[test]
    fn stance_keeps_the_foot_pinned() {
        let p = plant(PlantModel::Physical);
        let mut s = flight(0.0, 0.0, 0.0);
        s.phase = HopPhase::Stance;
        s.y_body = 0.3;
        let next = step(&s, &Actuation::Torque(20.0), 1e-3, &p);
        assert_eq!((next.y_foot, next.v_foot), (0.0, 0.0));
    }

    #[test]
    fn substeps_validation() {
        let mut cfg = SimConfig::new(HopperParams::physical(), ControllerSpec::Passive);
        assert_eq!(cfg.substeps().unwrap(), 1);
        cfg.dt = 1.25e-4;
        assert_eq!(cfg.substeps().unwrap(), 2);
        cfg.dt = 1e-4 * 1.7;
        assert!(cfg.substeps().is_err());
        cfg.dt = 0.0;
        assert!(matches!(
            cfg.substeps(),
            Err(Error::Setting { field: "dt", .. })
        ));
    }

    #[test]
    fn zero_duration_logs_only_the_start() {
        let mut cfg = SimConfig::new(
            HopperParams::physical(),
            ControllerSpec::Force(Gains::reference()),
        );
        cfg.stop = StopCondition::Duration(0.0);
        let log = run(&cfg).unwrap();
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.records[0].t, 0.0);
        assert!(log.completed());
    }
}
