//! Evaluation quantities computed from a finished log.

use crate::control::actuator_saturation;
use crate::error::{Error, Result};
use crate::model::{HopPhase, HopperParams, MotorParams};
use crate::sim::{EventKind, TelemetryLog, TelemetryRecord};

/// `|tau_act| / |tau_sat|`; `+inf` flags a nonzero torque beyond a zero bound.
pub fn saturation_ratio(tau_act: f64, tau_sat: f64) -> f64 {
    if tau_sat == 0.0 {
        if tau_act == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        tau_act.abs() / tau_sat.abs()
    }
}

/// Interval from stance start to lift-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceWindow {
    pub t_init: f64,
    pub t_lo: f64,
}

impl StanceWindow {
    pub fn new(t_init: f64, t_lo: f64) -> Result<Self> {
        if !(t_init < t_lo) {
            return Err(Error::EmptyWindow);
        }
        Ok(StanceWindow { t_init, t_lo })
    }

    /// From the start of the log to the first lift-off.
    pub fn first(log: &TelemetryLog) -> Result<Self> {
        let start = log.records.first().ok_or(Error::EmptyWindow)?.t;
        let lift = log.lifts().next().ok_or(Error::EmptyWindow)?;
        Self::new(start, lift.t)
    }

    /// Every stance that ended in a lift-off.
    pub fn all(log: &TelemetryLog) -> Vec<StanceWindow> {
        let mut out = Vec::new();
        let mut start = log.records.first().map(|r| r.t);
        for e in &log.events {
            match e.kind {
                EventKind::Lift => {
                    if let Some(s) = start.take() {
                        if let Ok(w) = Self::new(s, e.t) {
                            out.push(w);
                        }
                    }
                }
                EventKind::Landing => start = Some(e.t),
            }
        }
        out
    }

    fn records<'a>(&self, log: &'a TelemetryLog) -> &'a [TelemetryRecord] {
        let lo = log.records.partition_point(|r| r.t < self.t_init);
        let hi = log.records.partition_point(|r| r.t <= self.t_lo);
        &log.records[lo..hi.max(lo)]
    }
}

/// Trapezoidal time-average of `(t, value)` samples.
pub fn time_average(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let span = samples[samples.len() - 1].0 - samples[0].0;
    if !(span > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let area: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    Ok(area / span)
}

/// Time-averaged knee saturation ratio over a stance window.
pub fn average_saturation_ratio(log: &TelemetryLog, w: &StanceWindow) -> Result<f64> {
    let samples: Vec<_> = w
        .records(log)
        .iter()
        .filter(|r| r.c_act_knee.is_finite())
        .map(|r| (r.t, r.c_act_knee))
        .collect();
    time_average(&samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootClearance {
    pub h_r_init: f64,
    pub h_r_max: f64,
    /// Whether the log contains any flight record.
    pub flew: bool,
}

/// Initial and maximum foot height over the log.
pub fn foot_clearance(log: &TelemetryLog) -> FootClearance {
    let h_r_init = log.records.first().map_or(0.0, |r| r.y_foot);
    let flew = log.records.iter().any(|r| r.phase == HopPhase::Flight);
    let h_r_max = if flew {
        log.records
            .iter()
            .map(|r| r.y_foot)
            .fold(h_r_init, f64::max)
    } else {
        h_r_init
    };
    FootClearance {
        h_r_init,
        h_r_max,
        flew,
    }
}

/// Energy bookkeeping of one stance and the flight that follows it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    /// Trapezoidal joint work over the stance (J).
    pub work: f64,
    /// Rise of the centre of mass from stance start to the flight apex, times
    /// total weight (J).
    pub potential_gain: f64,
    /// Kinetic energy that cannot become height: relative body-foot motion
    /// at lift-off, less the kinetic energy at stance start (J).
    pub kinetic_unrecovered: f64,
    /// `|work - potential_gain - kinetic_unrecovered| / |work|`.
    pub residual: f64,
    /// Change of kinetic plus potential energy over the stance (J).
    pub mechanical_gain: f64,
    /// `|work - mechanical_gain| / |work|`.
    pub stance_residual: f64,
    /// Predicted centre-of-mass apex height (m).
    pub apex: f64,
    /// Apex seen in the log before the next touchdown (m).
    pub observed_apex: Option<f64>,
}

fn relative(num: f64, den: f64) -> f64 {
    if den != 0.0 {
        num.abs() / den.abs()
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn com_height(r: &TelemetryRecord, p: &HopperParams) -> f64 {
    (p.m * r.y_body + p.m_e * r.y_foot) / p.total_mass()
}

fn mechanical_energy(r: &TelemetryRecord, p: &HopperParams) -> f64 {
    0.5 * p.m * r.v_body * r.v_body
        + 0.5 * p.m_e * r.v_foot * r.v_foot
        + p.g * (p.m * r.y_body + p.m_e * r.y_foot)
}

/// Trapezoidal `sum tau d(theta)` over both joints.
pub fn joint_work(records: &[TelemetryRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let knee = 0.5
                * (a.knee.tau_des + b.knee.tau_des)
                * (b.joints.theta_knee - a.joints.theta_knee);
            let hip =
                0.5 * (a.hip.tau_des + b.hip.tau_des) * (b.joints.theta_hip - a.joints.theta_hip);
            knee + if hip.is_finite() { hip } else { 0.0 }
        })
        .sum()
}

/// Energy audit of the stance `w`.
///
/// Internal leg forces cannot move the centre of mass, so after lift-off it
/// rises ballistically; the apex follows from the lift-off state. The
/// observed apex, when the flight lasts long enough to reach it, is kept in
/// [`EnergyBalance::observed_apex`].
pub fn energy_balance(
    log: &TelemetryLog,
    w: &StanceWindow,
    p: &HopperParams,
) -> Result<EnergyBalance> {
    let stance = w.records(log);
    if stance.len() < 2 {
        return Err(Error::EmptyWindow);
    }
    let (first, last) = (&stance[0], &stance[stance.len() - 1]);
    let work = joint_work(stance);

    let total = p.total_mass();
    let v_com = (p.m * last.v_body + p.m_e * last.v_foot) / total;
    if !(v_com > 0.0) {
        return Err(Error::ApexNotFound);
    }
    let apex = com_height(last, p) + v_com * v_com / (2.0 * p.g);

    let after = log.records.partition_point(|r| r.t <= w.t_lo);
    let flight: Vec<_> = log.records[after..]
        .iter()
        .take_while(|r| r.phase == HopPhase::Flight)
        .map(|r| com_height(r, p))
        .collect();
    let observed_apex = flight
        .windows(3)
        .find(|h| h[1] >= h[0] && h[1] > h[2])
        .map(|h| h[1]);

    let potential_gain = total * p.g * (apex - com_height(first, p));
    let rate = last.v_body - last.v_foot;
    let ke_start = 0.5 * p.m * first.v_body.powi(2) + 0.5 * p.m_e * first.v_foot.powi(2);
    let kinetic_unrecovered = 0.5 * p.reduced_mass() * rate * rate - ke_start;
    let mechanical_gain = mechanical_energy(last, p) - mechanical_energy(first, p);
    Ok(EnergyBalance {
        work,
        potential_gain,
        kinetic_unrecovered,
        residual: relative(work - potential_gain - kinetic_unrecovered, work),
        mechanical_gain,
        stance_residual: relative(work - mechanical_gain, work),
        apex,
        observed_apex,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Joint {
    Hip,
    Knee,
}

/// Stance `(joint speed, |tau_des|)` points.
pub fn speed_torque_trace(log: &TelemetryLog, joint: Joint) -> Vec<(f64, f64)> {
    log.records
        .iter()
        .filter(|r| r.phase == HopPhase::Stance)
        .map(|r| match joint {
            Joint::Hip => (r.joints.thetad_hip, r.hip.tau_des.abs()),
            Joint::Knee => (r.joints.thetad_knee, r.knee.tau_des.abs()),
        })
        .filter(|(s, t)| s.is_finite() && t.is_finite())
        .collect()
}

/// Admissible operating region boundary, joint side, for nonnegative speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct AorCurve {
    pub points: Vec<(f64, f64)>,
}

impl AorCurve {
    /// Boundary torque at `speed`, mirrored for negative speeds.
    pub fn torque_at(&self, speed: f64) -> f64 {
        let s = speed.abs();
        let pts = &self.points;
        if s >= pts[pts.len() - 1].0 {
            return if s == pts[pts.len() - 1].0 {
                pts[pts.len() - 1].1
            } else {
                0.0
            };
        }
        let i = pts.partition_point(|p| p.0 <= s).max(1);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
    }

    /// Whether `(speed, torque)` lies on or inside the boundary.
    pub fn contains(&self, speed: f64, torque: f64) -> bool {
        torque.abs() <= self.torque_at(speed) + 1e-9
    }

    /// Full boundary from the most negative to the most positive speed.
    pub fn mirrored(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<_> = self.points.iter().rev().map(|&(s, t)| (-s, t)).collect();
        out.extend(self.points.iter().skip(1).copied());
        out
    }
}

/// Samples the actuator envelope at `n >= 2` speeds in `[0, omega_max/R]`.
pub fn aor_curve(m: &MotorParams, n: usize) -> AorCurve {
    let n = n.max(2);
    let top = m.joint_no_load_speed();
    let points = (0..n)
        .map(|i| {
            let s = if i == n - 1 {
                top
            } else {
                top * i as f64 / (n - 1) as f64
            };
            (s, actuator_saturation(s, m))
        })
        .collect();
    AorCurve { points }
}

/// Mean torque gap between trace points and the boundary above them.
pub fn mean_aor_gap(trace: &[(f64, f64)], aor: &AorCurve) -> f64 {
    if trace.is_empty() {
        return f64::NAN;
    }
    trace
        .iter()
        .map(|&(s, t)| aor.torque_at(s) - t)
        .sum::<f64>()
        / trace.len() as f64
}

/// One-row digest of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub controller: &'static str,
    pub completed: bool,
    pub lifts: usize,
    pub landings: usize,
    /// First lift-off time (s).
    pub t_lo: Option<f64>,
    /// Mean lift-to-lift interval (s).
    pub period: Option<f64>,
    /// Knee saturation ratio averaged over the first stance.
    pub c_act_avg: Option<f64>,
    pub clearance: FootClearance,
    pub energy: Option<EnergyBalance>,
    /// Mean knee torque gap to the envelope during stance.
    pub aor_gap: Option<f64>,
}

pub fn summarize(log: &TelemetryLog, motor: Option<&MotorParams>) -> RunSummary {
    let lifts: Vec<f64> = log.lifts().map(|e| e.t).collect();
    let period =
        (lifts.len() >= 2).then(|| (lifts[lifts.len() - 1] - lifts[0]) / (lifts.len() - 1) as f64);
    let first = StanceWindow::first(log).ok();
    RunSummary {
        controller: log.controller,
        completed: log.completed(),
        lifts: lifts.len(),
        landings: log.landings().count(),
        t_lo: lifts.first().copied(),
        period,
        c_act_avg: first.and_then(|w| average_saturation_ratio(log, &w).ok()),
        clearance: foot_clearance(log),
        energy: first.and_then(|w| energy_balance(log, &w, &log.hopper).ok()),
        aor_gap: motor.map(|m| {
            let trace = speed_torque_trace(log, Joint::Knee);
            mean_aor_gap(&trace, &aor_curve(m, 256))
        }),
    }
}
