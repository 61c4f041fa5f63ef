//! Experiment commands and their file outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hopleg::metrics::{aor_curve, speed_torque_trace, summarize, Joint};
use hopleg::plot::{Chart, Series};
use hopleg::sim::{run, Outcome};
use hopleg::{HopCycle, HopPhase, MotorParams, RunSummary, TelemetryLog};

use crate::config::{ConfigError, RunConfig, PRESETS};
use crate::output::write_atomic;

/// Number of samples on the non-negative half of the operating region.
pub const AOR_POINTS: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Aborted(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(hopleg::Error),
}

impl From<hopleg::Error> for CliError {
    fn from(e: hopleg::Error) -> Self {
        match e {
            hopleg::Error::Validation(_) | hopleg::Error::Setting { .. } => {
                CliError::Config(ConfigError::Model(e))
            }
            other => CliError::Model(other),
        }
    }
}

impl CliError {
    /// Process exit status: 1 for bad input, 2 for a failed run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A finished simulation with its digest.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub summary: RunSummary,
    pub log: TelemetryLog,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn status_line(&self) -> String {
        match &self.log.outcome {
            Outcome::Completed => "completed".to_string(),
            Outcome::Aborted { t, reason } => format!("aborted at t = {t} s: {reason}"),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "controller",
    "completed",
    "lifts",
    "landings",
    "t_lo",
    "period",
    "c_act_avg",
    "h_r_init",
    "h_r_max",
    "work",
    "potential_gain",
    "kinetic_unrecovered",
    "energy_residual",
    "aor_gap",
    "ik_failures",
];

pub fn summary_csv(r: &RunReport) -> String {
    let s = &r.summary;
    let e = s.energy.as_ref();
    let row = [
        s.controller.to_string(),
        s.completed.to_string(),
        s.lifts.to_string(),
        s.landings.to_string(),
        opt(s.t_lo),
        opt(s.period),
        opt(s.c_act_avg),
        s.clearance.h_r_init.to_string(),
        s.clearance.h_r_max.to_string(),
        opt(e.map(|e| e.work)),
        opt(e.map(|e| e.potential_gain)),
        opt(e.map(|e| e.kinetic_unrecovered)),
        opt(e.map(|e| e.residual)),
        opt(s.aor_gap),
        r.log.ik_failures.to_string(),
    ];
    format!("{}\n{}\n", SUMMARY_COLUMNS.join(","), row.join(","))
}

fn events_csv(log: &TelemetryLog) -> String {
    let mut s = String::from("t,kind\n");
    for e in &log.events {
        let _ = writeln!(s, "{},{}", e.t, e.kind.as_str());
    }
    s
}

fn trace_csv(log: &TelemetryLog) -> String {
    let mut s = String::from("t,speed_knee,torque_knee,speed_hip,torque_hip\n");
    for r in log.records.iter().filter(|r| r.phase == HopPhase::Stance) {
        let j = &r.joints;
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.t,
            j.thetad_knee,
            r.knee.tau_des.abs(),
            j.thetad_hip,
            r.hip.tau_des.abs()
        );
    }
    s
}

fn foot_series(r: &RunReport) -> Series {
    Series::new(
        &r.label,
        r.log.records.iter().map(|x| (x.t, x.y_foot)).collect(),
    )
}

fn c_act_series(r: &RunReport) -> Series {
    let pts = r
        .log
        .records
        .iter()
        .map(|x| {
            let c = if x.phase == HopPhase::Stance && x.c_act_knee.is_finite() {
                x.c_act_knee
            } else {
                f64::NAN
            };
            (x.t, c)
        })
        .collect();
    Series::new(&r.label, pts)
}

fn trace_series(r: &RunReport) -> Series {
    Series::new(&r.label, speed_torque_trace(&r.log, Joint::Knee))
}

fn aor_series(motor: &MotorParams) -> Series {
    Series::new("operating region", aor_curve(motor, AOR_POINTS).mirrored()).dashed()
}

fn write_plots(dir: &Path, reports: &[&RunReport], motor: &MotorParams) -> Result<(), CliError> {
    let mut foot = Chart::new("Foot height", "t (s)", "foot height (m)");
    let mut c_act = Chart::new("Knee saturation ratio in stance", "t (s)", "C_act");
    let mut aor = Chart::new(
        "Knee speed and torque in stance",
        "speed (rad/s)",
        "torque (N m)",
    )
    .with(aor_series(motor));
    for r in reports {
        foot = foot.with(foot_series(r));
        c_act = c_act.with(c_act_series(r));
        aor = aor.with(trace_series(r));
    }
    write(&dir.join("foot_height.svg"), &foot.to_svg())?;
    write(&dir.join("c_act.svg"), &c_act.to_svg())?;
    write(&dir.join("speed_torque.svg"), &aor.to_svg())?;
    if let [r] = reports {
        let leg = Chart::new("Leg length", "t (s)", "leg length (m)")
            .with(
                Series::new(
                    "reference",
                    r.log.records.iter().map(|x| (x.t, x.y_des)).collect(),
                )
                .dashed(),
            )
            .with(Series::new(
                "simulated",
                r.log
                    .records
                    .iter()
                    .map(|x| (x.t, x.leg_length()))
                    .collect(),
            ));
        write(&dir.join("leg_length.svg"), &leg.to_svg())?;
    }
    Ok(())
}

fn label_of(cfg: &RunConfig) -> String {
    cfg.preset
        .clone()
        .unwrap_or_else(|| format!("custom-{}", cfg.controller))
}

/// Runs one experiment and writes its files into `dir`. Returns the report
/// even when the run aborts; the status file records how it ended.
pub fn execute(cfg: &RunConfig, dir: &Path, label: &str) -> Result<RunReport, CliError> {
    let validated = cfg.validate()?;
    let log = run(&cfg.sim_config())?;
    let report = RunReport {
        label: label.to_string(),
        summary: summarize(&log, Some(&cfg.motor)),
        warnings: validated
            .warnings
            .iter()
            .map(|w| w.to_string())
            .chain(log.notes.iter().cloned())
            .collect(),
        log,
    };
    let status = dir.join("status.txt");
    if status.exists() {
        std::fs::remove_file(&status).map_err(|source| CliError::Io {
            path: status.clone(),
            source,
        })?;
    }
    write(&dir.join("config.txt"), &cfg.to_config_string())?;
    write(
        &dir.join("telemetry.csv"),
        &hopleg::telemetry::to_csv(&report.log),
    )?;
    write(&dir.join("events.csv"), &events_csv(&report.log))?;
    write(&dir.join("trace.csv"), &trace_csv(&report.log))?;
    write(&dir.join("summary.csv"), &summary_csv(&report))?;
    if cfg.plots {
        write_plots(dir, &[&report], &cfg.motor)?;
    }
    let mut text = report.status_line();
    text.push('\n');
    for w in &report.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    write(&status, &text)?;
    Ok(report)
}

/// Single experiment into `cfg.out`. An aborted run is an error after its
/// files are written.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let report = execute(cfg, &cfg.out, &label_of(cfg))?;
    if report.summary.completed {
        Ok(report)
    } else {
        Err(CliError::Aborted(format!("run {}", report.status_line())))
    }
}

/// Result of running two experiments side by side.
#[derive(Debug)]
pub struct Comparison {
    pub a: Result<RunReport, CliError>,
    pub b: Result<RunReport, CliError>,
    pub text: String,
    pub csv: String,
}

impl Comparison {
    pub fn both_completed(&self) -> bool {
        let ok = |r: &Result<RunReport, CliError>| r.as_ref().is_ok_and(|r| r.summary.completed);
        ok(&self.a) && ok(&self.b)
    }
}

fn comparison_rows(r: &Result<RunReport, CliError>) -> Vec<String> {
    let Ok(r) = r else {
        return vec!["failed".to_string(); COMPARE_METRICS.len()];
    };
    let s = &r.summary;
    let f4 = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
    vec![
        if s.completed {
            "completed".into()
        } else {
            "failed".into()
        },
        s.lifts.to_string(),
        s.landings.to_string(),
        f4(s.t_lo),
        f4(s.period),
        f4(s.c_act_avg),
        f4(Some(s.clearance.h_r_init)),
        f4(Some(s.clearance.h_r_max)),
        f4(s.energy.as_ref().map(|e| e.residual)),
        f4(s.aor_gap),
    ]
}

const COMPARE_METRICS: [&str; 10] = [
    "status",
    "lifts",
    "landings",
    "t_lo",
    "period",
    "c_act_avg",
    "h_r_init",
    "h_r_max",
    "energy_residual",
    "aor_gap",
];

/// Runs both experiments concurrently. Each side writes into its own
/// subdirectory of `out`; the comparison lands in `out` itself.
pub fn cmd_compare(
    a: &RunConfig,
    b: &RunConfig,
    out: &Path,
    plots: bool,
) -> Result<Comparison, CliError> {
    a.validate()?;
    b.validate()?;
    let la = label_of(a);
    let mut lb = label_of(b);
    if lb == la {
        lb.push_str("-b");
    }
    let (da, db) = (out.join(&la), out.join(&lb));
    let (ra, rb) = std::thread::scope(|s| {
        let ha = s.spawn(|| execute(a, &da, &la));
        let hb = s.spawn(|| execute(b, &db, &lb));
        (
            ha.join().expect("simulation thread panicked"),
            hb.join().expect("simulation thread panicked"),
        )
    });

    let (ca, cb) = (comparison_rows(&ra), comparison_rows(&rb));
    let mut csv = format!("metric,{la},{lb}\n");
    let mut text = format!("{:<16} {:>20} {:>20}\n", "metric", la, lb);
    for (i, m) in COMPARE_METRICS.iter().enumerate() {
        let _ = writeln!(csv, "{m},{},{}", ca[i], cb[i]);
        let _ = writeln!(text, "{m:<16} {:>20} {:>20}", ca[i], cb[i]);
    }
    for (label, r) in [(&la, &ra), (&lb, &rb)] {
        match r {
            Ok(rep) if !rep.summary.completed => {
                let _ = writeln!(text, "{label}: {}", rep.status_line());
            }
            Err(e) => {
                let _ = writeln!(text, "{label}: failed: {e}");
            }
            _ => {}
        }
    }
    write(&out.join("compare.csv"), &csv)?;
    write(&out.join("compare.txt"), &text)?;
    if plots {
        let done: Vec<&RunReport> = [&ra, &rb]
            .into_iter()
            .filter_map(|r| r.as_ref().ok())
            .collect();
        write_plots(out, &done, &a.motor)?;
    }
    Ok(Comparison {
        a: ra,
        b: rb,
        text,
        csv,
    })
}

/// Reference trajectory over one hop period, sampled at the control rate.
pub fn cmd_traj(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let cycle = HopCycle::new(&cfg.hopper)?;
    let mut csv = String::from("t,y_des,phase\n");
    let mut pts = Vec::new();
    let n = (cycle.period * cfg.control_rate + 1e-9).floor() as usize;
    for k in 0..=n {
        let t = k as f64 / cfg.control_rate;
        let s = cycle.sample(t);
        let _ = writeln!(csv, "{},{},{}", s.t, s.y_des, s.phase);
        pts.push((s.t, s.y_des));
    }
    write(&cfg.out.join("traj.csv"), &csv)?;
    if cfg.plots {
        let chart = Chart::new(
            "Reference leg length over one hop",
            "t (s)",
            "leg length (m)",
        )
        .with(Series::new("reference", pts));
        write(&cfg.out.join("traj.svg"), &chart.to_svg())?;
    }
    Ok(csv)
}

/// Actuator operating region at the joint, as CSV and SVG.
pub fn cmd_aor(cfg: &RunConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let curve = aor_curve(&cfg.motor, AOR_POINTS);
    let mut csv = String::from("speed,torque\n");
    for (w, t) in &curve.points {
        let _ = writeln!(csv, "{w},{t}");
    }
    write(&cfg.out.join("aor.csv"), &csv)?;
    let chart = Chart::new("Joint operating region", "speed (rad/s)", "torque (N m)")
        .with(Series::new("limit", curve.mirrored()));
    write(&cfg.out.join("aor.svg"), &chart.to_svg())?;
    Ok(csv)
}

/// Listing of the built-in presets.
pub fn cmd_presets() -> String {
    let mut s = String::new();
    for name in PRESETS {
        let c = RunConfig::preset(name).expect("built-in preset");
        let h = &c.hopper;
        let gains = c
            .gains
            .map(|g| format!("k_p={} k_d={}", g.k_p, g.k_d))
            .unwrap_or_else(|| "no gains".into());
        let _ = writeln!(
            s,
            "{name:<24} {:<9} k_s={} m={} m_e={} c_amp={} c_max={} y_s_neu={} {gains}",
            c.controller.to_string(),
            h.k_s,
            h.m,
            h.m_e,
            h.c_amp,
            h.c_max,
            h.y_s_neu
        );
    }
    s
}
