//! Closed-form hop cycle: stance and flight time responses, switch times,
//! period, compensation coefficient and the piecewise desired trajectory.
//!
//! All lengths are body-to-foot distances. Stance starts at maximum
//! compression (`t = 0`).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{HopPhase, HopperParams};

/// Lift-off state of the stance response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftState {
    /// Body-to-foot distance at lift-off (m).
    pub y_lo: f64,
    /// Its rate at lift-off (m/s).
    pub v_lo: f64,
    /// Lift-off time (s).
    pub t_lo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub y_des: f64,
    pub phase: HopPhase,
}

/// Stance response: a cosine about the neutral length starting at the bottom.
pub fn stance_position(t: f64, p: &HopperParams) -> f64 {
    p.stance_amplitude() * (p.stance_frequency() * t + PI).cos() + p.y_s_neu
}

pub fn stance_velocity(t: f64, p: &HopperParams) -> f64 {
    let w = p.stance_frequency();
    -p.stance_amplitude() * w * (w * t + PI).sin()
}

/// Argument of the lift-off arccos, `m_e g / (k_s (C_amp + m g/k_s))`.
pub fn lift_ratio(p: &HopperParams) -> f64 {
    p.m_e * p.g / (p.k_s * p.stance_amplitude())
}

/// Lift-off and landing times of the first hop, nonnegative branch.
pub fn switch_times(p: &HopperParams) -> Result<(f64, f64)> {
    let t_lo = lift_time(p)?;
    Ok((t_lo, t_lo + p.flight_duration()))
}

fn lift_time(p: &HopperParams) -> Result<f64> {
    let r = lift_ratio(p);
    if !(-1.0..=1.0).contains(&r) {
        return Err(Error::NoLiftOff(r));
    }
    Ok((PI - r.acos()) / p.stance_frequency())
}

/// The lift-off time with the sign convention `arccos(r) - pi`. It is the
/// negative of [`switch_times`]'s first entry and is kept only for comparison.
pub fn lift_time_printed(p: &HopperParams) -> Result<f64> {
    lift_time(p).map(|t| -t)
}

pub fn lift_state(p: &HopperParams) -> Result<LiftState> {
    let t_lo = lift_time(p)?;
    Ok(LiftState {
        y_lo: stance_position(t_lo, p),
        v_lo: stance_velocity(t_lo, p),
        t_lo,
    })
}

/// Period of continuous hopping: two stance halves plus one flight oscillation.
pub fn hop_period(p: &HopperParams) -> Result<f64> {
    Ok(2.0 * lift_time(p)? + p.flight_duration())
}

/// Flight window with the start time built from the product-form arccos
/// argument taken literally.
pub fn flight_window(p: &HopperParams, ls: &LiftState) -> Result<(f64, f64)> {
    let arg = flight_window_argument(p, ls);
    if !(-1.0..=1.0).contains(&arg) {
        return Err(Error::DegenerateFlightWindow(arg));
    }
    let inv_freq = 1.0 / p.flight_frequency();
    let t_fs = -inv_freq * arg.acos();
    Ok((t_fs, t_fs + 2.0 * PI * inv_freq))
}

fn flight_window_argument(p: &HopperParams, ls: &LiftState) -> f64 {
    let (m, me, k) = (p.m, p.m_e, p.k_s);
    let total = m + me;
    let radical = (m * me.powi(3) * ls.v_lo * ls.v_lo / (k * total.powi(3))
        + me * me * ls.y_lo * ls.y_lo / (total * total))
        .sqrt();
    ls.y_lo * me / total * radical
}

/// Two-cosine flight response in its printed form, on the window's own time axis.
///
/// Both terms share one frequency and the second radical carries `m^4`.
/// [`FlightResponse`] is the form that agrees with integrating the two-mass
/// equations; this one is kept for cross-checking.
pub fn flight_position(t: f64, p: &HopperParams, ls: &LiftState) -> f64 {
    let (m, me, k) = (p.m, p.m_e, p.k_s);
    let total = m + me;
    let (v2, y2) = (ls.v_lo * ls.v_lo, ls.y_lo * ls.y_lo);
    let a_body =
        (m * v2 * me.powi(3) / (k * total.powi(3)) + y2 * me * me / (total * total)).sqrt();
    let a_foot = (m * v2 * m.powi(3) / (k * total.powi(3)) + y2 * m * m / (total * total)).sqrt();
    (a_body + a_foot) * (p.flight_frequency() * t).cos() + p.y_s_neu
}

/// Free oscillation of the body-foot distance after lift-off.
///
/// Gravity acts equally on both masses in flight, so the distance oscillates
/// about the neutral length at the reduced-mass frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightResponse {
    pub amplitude: f64,
    pub phase: f64,
    pub frequency: f64,
    pub neutral: f64,
}

impl FlightResponse {
    pub fn from_lift(p: &HopperParams, ls: &LiftState) -> Self {
        let w = p.flight_frequency();
        let u = ls.y_lo - p.y_s_neu;
        let amplitude = (u * u + (ls.v_lo / w).powi(2)).sqrt();
        let phase = if amplitude > 0.0 {
            let c = (u / amplitude).clamp(-1.0, 1.0).acos();
            if ls.v_lo >= 0.0 {
                -c
            } else {
                c
            }
        } else {
            0.0
        };
        FlightResponse {
            amplitude,
            phase,
            frequency: w,
            neutral: p.y_s_neu,
        }
    }

    /// Distance `tau` seconds after lift-off.
    pub fn position(&self, tau: f64) -> f64 {
        self.amplitude * (self.frequency * tau + self.phase).cos() + self.neutral
    }

    pub fn velocity(&self, tau: f64) -> f64 {
        -self.amplitude * self.frequency * (self.frequency * tau + self.phase).sin()
    }

    /// Amplitudes of the body and foot about the common centre of mass.
    pub fn mass_amplitudes(&self, p: &HopperParams) -> (f64, f64) {
        let total = p.total_mass();
        (self.amplitude * p.m_e / total, self.amplitude * p.m / total)
    }
}

/// Periodic multiplicative correction of the desired trajectory.
pub fn compensation(t: f64, period: f64, c_max: f64) -> f64 {
    let t = reduce(t, period);
    if t < 0.5 * period {
        1.0
    } else {
        0.5 * c_max * (4.0 * PI * t / period).cos() - 0.5 * c_max + 1.0
    }
}

/// Time derivative of [`compensation`].
pub fn compensation_rate(t: f64, period: f64, c_max: f64) -> f64 {
    let t = reduce(t, period);
    if t < 0.5 * period {
        0.0
    } else {
        let w = 4.0 * PI / period;
        -0.5 * c_max * w * (w * t).sin()
    }
}

fn reduce(t: f64, period: f64) -> f64 {
    if (0.0..=period).contains(&t) {
        t
    } else {
        t.rem_euclid(period)
    }
}

/// Precomputed timing of one hop cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopCycle {
    pub params: HopperParams,
    pub lift: LiftState,
    pub period: f64,
    pub flight: FlightResponse,
}

impl HopCycle {
    pub fn new(p: &HopperParams) -> Result<Self> {
        let lift = lift_state(p)?;
        Ok(HopCycle {
            params: *p,
            lift,
            period: hop_period(p)?,
            flight: FlightResponse::from_lift(p, &lift),
        })
    }

    /// Start of the descending stance half, `T - t_lo`.
    pub fn touchdown_time(&self) -> f64 {
        self.period - self.lift.t_lo
    }

    pub fn phase_at(&self, t: f64) -> HopPhase {
        let t = reduce(t, self.period);
        if t < self.lift.t_lo || t > self.touchdown_time() {
            HopPhase::Stance
        } else {
            HopPhase::Flight
        }
    }

    /// Uncompensated branch value and rate.
    fn branch(&self, t: f64) -> (f64, f64) {
        let p = &self.params;
        if t < self.lift.t_lo {
            (stance_position(t, p), stance_velocity(t, p))
        } else if t <= self.touchdown_time() {
            let tau = t - self.lift.t_lo;
            (self.flight.position(tau), self.flight.velocity(tau))
        } else {
            // Descent retraces the ascent so the cycle closes at T.
            let mirror = self.period - t;
            (stance_position(mirror, p), -stance_velocity(mirror, p))
        }
    }

    pub fn sample(&self, t: f64) -> TrajectorySample {
        let t = reduce(t, self.period);
        let (y, _) = self.branch(t);
        TrajectorySample {
            t,
            y_des: compensation(t, self.period, self.params.c_max) * y,
            phase: self.phase_at(t),
        }
    }

    /// Time derivative of the desired trajectory.
    pub fn rate(&self, t: f64) -> f64 {
        let t = reduce(t, self.period);
        let (y, yd) = self.branch(t);
        let c = compensation(t, self.period, self.params.c_max);
        let cd = compensation_rate(t, self.period, self.params.c_max);
        cd * y + c * yd
    }
}

/// Desired body-to-foot distance at time `t` of the hop cycle.
pub fn desired_trajectory(t: f64, p: &HopperParams) -> Result<TrajectorySample> {
    Ok(HopCycle::new(p)?.sample(t))
}
