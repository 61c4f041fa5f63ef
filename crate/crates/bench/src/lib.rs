//! Scenarios shared by the benchmarks.

use hopleg::control::PositionServo;
use hopleg::{ControllerSpec, Gains, HopperParams, SimConfig, StopCondition};

/// One second of force-controlled hopping on the physical preset.
pub fn force_second() -> SimConfig {
    let mut cfg = SimConfig::new(
        HopperParams::physical(),
        ControllerSpec::Force(Gains::reference()),
    );
    cfg.stop = StopCondition::Duration(1.0);
    cfg
}

/// One second of position-controlled hopping on the physical preset.
pub fn position_second() -> SimConfig {
    let servo = PositionServo::for_control_rate(hopleg::sim::DEFAULT_CONTROL_RATE);
    let mut cfg = SimConfig::new(HopperParams::physical(), ControllerSpec::Position(servo));
    cfg.stop = StopCondition::Duration(1.0);
    cfg
}
