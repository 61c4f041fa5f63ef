//! Two-mass hopping leg: closed-form hop cycle, two-link kinematics,
//! saturation-aware force and position controllers, a hybrid simulator and
//! the metrics used to compare the controllers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod control;
pub mod error;
pub mod kinematics;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod sim;
pub mod telemetry;

pub use analytic::{HopCycle, LiftState, TrajectorySample};
pub use control::{ControllerMode, PositionServo, TorqueCommand, TorqueCommands};
pub use error::{Error, Result};
pub use kinematics::{JointState, LegGeometry};
pub use metrics::{AorCurve, RunSummary, StanceWindow};
pub use model::{Gains, HopPhase, HopperParams, MotorParams, ParamBundle};
pub use sim::{
    ControllerSpec, InitialState, PlantModel, SimConfig, SimState, StopCondition, TelemetryLog,
    VirtualSpring,
};
