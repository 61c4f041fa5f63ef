use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hopleg::{ControllerMode, StopCondition};
use hopleg_cli::commands::{cmd_aor, cmd_compare, cmd_presets, cmd_run, cmd_traj};
use hopleg_cli::{parse_config, CliError, ConfigError, RunConfig, PRESETS};

/// Hopping-leg simulator: run experiments and compare controllers.
#[derive(Parser)]
#[command(name = "hopleg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one experiment and write telemetry, summary and status files.
    Run(Source),
    /// Simulate two experiments concurrently and tabulate the difference.
    Compare {
        /// Preset name or config file for the first run.
        a: String,
        /// Preset name or config file for the second run.
        b: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write the reference leg trajectory for one hop period.
    Traj(Source),
    /// Write the actuator operating region at the joint.
    Aor(Source),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Source {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset (see `hopleg presets`).
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Controller: force or position.
    #[arg(long)]
    controller: Option<ControllerMode>,
    /// Stop after this many hops.
    #[arg(long, conflicts_with = "duration")]
    hops: Option<usize>,
    /// Stop after this many seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Integration step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(c) = self.controller {
            cfg.controller = c;
        }
        if let Some(n) = self.hops {
            cfg.stop = StopCondition::Hops(n);
        }
        if let Some(d) = self.duration {
            cfg.stop = StopCondition::Duration(d);
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.plots |= self.plots;
    }
}

fn preset(name: &str) -> Result<RunConfig, CliError> {
    RunConfig::preset(name).ok_or_else(|| {
        CliError::Config(ConfigError::Invalid {
            key: "preset".into(),
            message: format!(
                "unknown preset '{name}' (available: {})",
                PRESETS.join(", ")
            ),
        })
    })
}

fn load(src: &Source) -> Result<RunConfig, CliError> {
    let mut cfg = match (&src.config, &src.preset) {
        (Some(path), _) => parse_config(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(ConfigError::Missing("--config or --preset").into()),
    };
    src.overrides.apply(&mut cfg);
    Ok(cfg)
}

fn load_named(s: &str, o: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = if PRESETS.contains(&s) {
        preset(s)?
    } else {
        parse_config(Path::new(s))?
    };
    o.apply(&mut cfg);
    Ok(cfg)
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(src) => {
            let cfg = load(&src)?;
            let report = cmd_run(&cfg);
            if let Ok(r) = &report {
                warn(&r.warnings);
                let s = &r.summary;
                println!(
                    "{}: {} lifts, {} landings, c_act_avg {}, h_r_max {:.4} m -> {}",
                    r.label,
                    s.lifts,
                    s.landings,
                    s.c_act_avg.map_or("n/a".into(), |c| format!("{c:.4}")),
                    s.clearance.h_r_max,
                    cfg.out.display()
                );
            }
            report.map(|_| ())
        }
        Command::Compare { a, b, overrides } => {
            let ca = load_named(&a, &overrides)?;
            let cb = load_named(&b, &overrides)?;
            let out = overrides
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("out"));
            let cmp = cmd_compare(&ca, &cb, &out, overrides.plots)?;
            for r in [&cmp.a, &cmp.b].into_iter().flatten() {
                warn(&r.warnings);
            }
            print!("{}", cmp.text);
            if cmp.both_completed() {
                Ok(())
            } else {
                Err(CliError::Aborted("at least one run failed".into()))
            }
        }
        Command::Traj(src) => {
            let cfg = load(&src)?;
            cmd_traj(&cfg)?;
            println!("{}", cfg.out.join("traj.csv").display());
            Ok(())
        }
        Command::Aor(src) => {
            let cfg = load(&src)?;
            cmd_aor(&cfg)?;
            println!("{}", cfg.out.join("aor.csv").display());
            Ok(())
        }
        Command::Presets => {
            print!("{}", cmd_presets());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {:#}", anyhow::Error::new(e).context("hopleg"));
            ExitCode::from(code)
        }
    }
}
