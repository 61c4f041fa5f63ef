//! Plain-text run configuration: `key = value` lines, optional `[section]`
//! headers, `#` comments.
//!
//! Every key belongs to one section. It may be written inside that section or
//! before any section header.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hopleg::control::{PositionServo, DEFAULT_HEADROOM};
use hopleg::model::{validate, Validated};
use hopleg::sim::{DEFAULT_CONTROL_RATE, DEFAULT_DT, DEFAULT_MAX_DURATION};
use hopleg::{
    ControllerMode, ControllerSpec, Gains, HopperParams, InitialState, LegGeometry, MotorParams,
    ParamBundle, PlantModel, SimConfig, StopCondition,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unknown preset '{name}' (available: {})", PRESETS.join(", "))]
    UnknownPreset { line: usize, name: String },
    #[error("missing required key: {0}")]
    Missing(&'static str),
    #[error("invalid value for {key}: {message}")]
    Invalid { key: String, message: String },
    #[error(transparent)]
    Model(#[from] hopleg::Error),
}

/// Names of the built-in presets.
pub const PRESETS: [&str; 4] = [
    "paper-literal-force",
    "paper-literal-position",
    "physical-force",
    "physical-position",
];

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub hopper: HopperParams,
    pub motor: MotorParams,
    pub gains: Option<Gains>,
    pub leg: LegGeometry,
    pub controller: ControllerMode,
    pub stop: StopCondition,
    pub dt: f64,
    pub control_rate: f64,
    pub out: PathBuf,
    pub plots: bool,
    /// Envelope fraction the position servo may use before slowing down.
    pub headroom: f64,
    pub max_duration: f64,
    pub ik_failure_limit: Option<usize>,
}

const DEFAULT_HOPS: usize = 3;

impl RunConfig {
    /// Built-in preset by name.
    pub fn preset(name: &str) -> Option<Self> {
        let (hopper, controller) = match name {
            "paper-literal-force" => (HopperParams::paper_literal(), ControllerMode::Force),
            "paper-literal-position" => (HopperParams::paper_literal(), ControllerMode::Position),
            "physical-force" => (HopperParams::physical(), ControllerMode::Force),
            "physical-position" => (HopperParams::physical(), ControllerMode::Position),
            _ => return None,
        };
        Some(RunConfig {
            preset: Some(name.to_string()),
            hopper,
            motor: MotorParams::default(),
            gains: (controller == ControllerMode::Force).then(Gains::reference),
            leg: LegGeometry::default(),
            controller,
            stop: StopCondition::Hops(DEFAULT_HOPS),
            dt: DEFAULT_DT,
            control_rate: DEFAULT_CONTROL_RATE,
            out: PathBuf::from("out"),
            plots: false,
            headroom: DEFAULT_HEADROOM,
            max_duration: DEFAULT_MAX_DURATION,
            ik_failure_limit: None,
        })
    }

    pub fn bundle(&self) -> ParamBundle {
        ParamBundle {
            hopper: self.hopper,
            motor: self.motor,
            gains: self.gains,
            leg: self.leg,
        }
    }

    /// Checks every invariant and returns the validated parameters.
    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let v = validate(self.bundle())?;
        if self.controller == ControllerMode::Force && self.gains.is_none() {
            return Err(ConfigError::Missing(
                "k_p and k_d (force control needs gains)",
            ));
        }
        let check = |key: &str, ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    key: key.into(),
                    message: msg.into(),
                })
            }
        };
        check(
            "dt",
            self.dt.is_finite() && self.dt > 0.0,
            &format!("must be > 0 (got {})", self.dt),
        )?;
        check(
            "control_rate",
            self.control_rate.is_finite() && self.control_rate > 0.0,
            &format!("must be > 0 (got {})", self.control_rate),
        )?;
        check(
            "headroom",
            self.headroom > 0.0 && self.headroom <= 1.0,
            &format!("must lie in (0, 1] (got {})", self.headroom),
        )?;
        if let StopCondition::Duration(d) = self.stop {
            check(
                "duration",
                d.is_finite() && d >= 0.0,
                &format!("must be >= 0 (got {d})"),
            )?;
        }
        check(
            "max_duration",
            self.max_duration.is_finite() && self.max_duration >= 0.0,
            "must be >= 0",
        )?;
        check(
            "knee_sign",
            self.leg.knee_sign == 1.0 || self.leg.knee_sign == -1.0,
            "must be 1 or -1",
        )?;
        self.sim_config().substeps()?;
        Ok(v)
    }

    /// Simulation settings for this experiment on the physical plant.
    pub fn sim_config(&self) -> SimConfig {
        let controller = match self.controller {
            ControllerMode::Force => ControllerSpec::Force(self.gains.unwrap_or(Gains::reference())),
            ControllerMode::Position => ControllerSpec::Position(PositionServo {
                headroom: self.headroom,
                ..PositionServo::for_control_rate(self.control_rate)
            }),
        };
        SimConfig {
            hopper: self.hopper,
            leg: self.leg,
            motor: Some(self.motor),
            plant: PlantModel::Physical,
            controller,
            dt: self.dt,
            control_rate: self.control_rate,
            stop: self.stop,
            max_duration: self.max_duration,
            initial: InitialState::StanceBottom,
            ik_failure_limit: self.ik_failure_limit,
        }
    }

    /// Text that [`parse_config_str`] turns back into this configuration.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        if let Some(p) = &self.preset {
            let _ = writeln!(s, "preset = {p}");
        }
        let h = &self.hopper;
        let _ = writeln!(s, "\n[hopper]");
        for (k, v) in [
            ("m", h.m),
            ("m_e", h.m_e),
            ("m_t", h.m_t),
            ("k_s", h.k_s),
            ("y_s_neu", h.y_s_neu),
            ("c_amp", h.c_amp),
            ("c_max", h.c_max),
            ("g", h.g),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        let m = &self.motor;
        let _ = writeln!(
            s,
            "\n[motor]\ntau_max = {}\nomega_max = {}\nr = {}",
            m.tau_max, m.omega_max, m.r
        );
        match &self.gains {
            Some(g) => {
                let _ = writeln!(s, "\n[gains]\nk_p = {}\nk_d = {}", g.k_p, g.k_d);
            }
            None => {
                let _ = writeln!(s, "\n[gains]\ngains = none");
            }
        }
        let l = &self.leg;
        let _ = writeln!(
            s,
            "\n[leg]\nl1 = {}\nl2 = {}\nknee_sign = {}",
            l.l1, l.l2, l.knee_sign
        );
        let _ = writeln!(s, "\n[run]\ncontroller = {}", self.controller);
        match self.stop {
            StopCondition::Hops(n) => {
                let _ = writeln!(s, "hops = {n}");
            }
            StopCondition::Duration(d) => {
                let _ = writeln!(s, "duration = {d}");
            }
        }
        let _ = writeln!(s, "dt = {}\ncontrol_rate = {}", self.dt, self.control_rate);
        let _ = writeln!(s, "out = {}\nplots = {}", self.out.display(), self.plots);
        let _ = writeln!(s, "max_duration = {}", self.max_duration);
        if let Some(n) = self.ik_failure_limit {
            let _ = writeln!(s, "ik_failure_limit = {n}");
        }
        let _ = writeln!(s, "\n[position]\nheadroom = {}", self.headroom);
        s
    }
}

/// Section each key belongs to.
fn section_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "preset" => "",
        "m" | "m_e" | "m_t" | "k_s" | "y_s_neu" | "c_amp" | "c_max" | "g" => "hopper",
        "tau_max" | "omega_max" | "r" => "motor",
        "k_p" | "k_d" | "gains" => "gains",
        "l1" | "l2" | "knee_sign" => "leg",
        "controller" | "duration" | "hops" | "dt" | "control_rate" | "out" | "plots"
        | "max_duration" | "ik_failure_limit" => "run",
        "headroom" => "position",
        _ => return None,
    })
}

const SECTIONS: [&str; 6] = ["hopper", "motor", "gains", "leg", "run", "position"];

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn lex(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut section = String::new();
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header '{body}'"),
            })?;
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected 'key = value', found '{body}'"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key".into(),
            });
        }
        match section_of(key) {
            Some(home) if section.is_empty() || section == home => {}
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: if section.is_empty() {
                        key.to_string()
                    } else {
                        format!("{section}.{key}")
                    },
                })
            }
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("duplicate key '{key}' (first set on line {})", prev.line),
            });
        }
        out.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}

fn number(e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| ConfigError::Syntax {
        line: e.line,
        message: format!("{} expects a number, found '{}'", e.key, e.value),
    })
}

fn count(e: &Entry) -> Result<usize, ConfigError> {
    e.value.parse::<usize>().map_err(|_| ConfigError::Syntax {
        line: e.line,
        message: format!(
            "{} expects a nonnegative integer, found '{}'",
            e.key, e.value
        ),
    })
}

fn flag(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Syntax {
            line: e.line,
            message: format!("{} expects true or false, found '{}'", e.key, e.value),
        }),
    }
}

/// Parses configuration text. Validation of the physical parameters is left
/// to [`RunConfig::validate`].
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let entries = lex(text)?;
    let get = |k: &str| entries.iter().find(|e| e.key == k);

    let mut cfg =
        match get("preset") {
            Some(e) => RunConfig::preset(&e.value).ok_or_else(|| ConfigError::UnknownPreset {
                line: e.line,
                name: e.value.clone(),
            })?,
            None => {
                if get("m").is_none() {
                    return Err(ConfigError::Missing("preset or m"));
                }
                for key in ["m_e", "k_s", "y_s_neu", "c_amp", "c_max"] {
                    if get(key).is_none() {
                        return Err(ConfigError::Missing(key));
                    }
                }
                let controller = get("controller").ok_or(ConfigError::Missing("controller"))?;
                let mode = controller.value.parse::<ControllerMode>().map_err(|m| {
                    ConfigError::Syntax {
                        line: controller.line,
                        message: m,
                    }
                })?;
                let mut base = RunConfig::preset("physical-force").expect("built-in preset");
                base.preset = None;
                base.hopper.m_t = 0.0;
                base.gains = None;
                base.controller = mode;
                base
            }
        };

    if get("hops").is_some() && get("duration").is_some() {
        let e = get("duration").expect("present");
        return Err(ConfigError::Syntax {
            line: e.line,
            message: "set either hops or duration, not both".into(),
        });
    }

    let mut gains_touched = false;
    for e in &entries {
        let h = &mut cfg.hopper;
        match e.key.as_str() {
            "preset" => {}
            "m" => h.m = number(e)?,
            "m_e" => h.m_e = number(e)?,
            "m_t" => h.m_t = number(e)?,
            "k_s" => h.k_s = number(e)?,
            "y_s_neu" => h.y_s_neu = number(e)?,
            "c_amp" => h.c_amp = number(e)?,
            "c_max" => h.c_max = number(e)?,
            "g" => h.g = number(e)?,
            "tau_max" => cfg.motor.tau_max = number(e)?,
            "omega_max" => cfg.motor.omega_max = number(e)?,
            "r" => cfg.motor.r = number(e)?,
            "k_p" | "k_d" => gains_touched = true,
            "gains" => {
                if e.value != "none" {
                    return Err(ConfigError::Syntax {
                        line: e.line,
                        message: format!("gains accepts only 'none', found '{}'", e.value),
                    });
                }
                if let Some(k) = get("k_p").or(get("k_d")) {
                    return Err(ConfigError::Syntax {
                        line: k.line,
                        message: "gains = none conflicts with explicit gains".into(),
                    });
                }
                cfg.gains = None;
            }
            "l1" => cfg.leg.l1 = number(e)?,
            "l2" => cfg.leg.l2 = number(e)?,
            "knee_sign" => cfg.leg.knee_sign = number(e)?,
            "controller" => {
                cfg.controller = e.value.parse().map_err(|m| ConfigError::Syntax {
                    line: e.line,
                    message: m,
                })?
            }
            "hops" => cfg.stop = StopCondition::Hops(count(e)?),
            "duration" => cfg.stop = StopCondition::Duration(number(e)?),
            "dt" => cfg.dt = number(e)?,
            "control_rate" => cfg.control_rate = number(e)?,
            "out" => cfg.out = PathBuf::from(&e.value),
            "plots" => cfg.plots = flag(e)?,
            "max_duration" => cfg.max_duration = number(e)?,
            "ik_failure_limit" => cfg.ik_failure_limit = Some(count(e)?),
            "headroom" => cfg.headroom = number(e)?,
            other => unreachable!("key {other} passed the section check"),
        }
    }
    if gains_touched {
        let base = cfg.gains;
        let pick = |k: &'static str, fallback: Option<f64>| match get(k) {
            Some(e) => number(e),
            None => fallback.ok_or(ConfigError::Missing(k)),
        };
        cfg.gains = Some(Gains {
            k_p: pick("k_p", base.map(|g| g.k_p))?,
            k_d: pick("k_d", base.map(|g| g.k_d))?,
        });
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}
