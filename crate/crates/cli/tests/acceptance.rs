//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines show in plain `cargo test` output.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hopleg::analytic::{compensation, hop_period, stance_position, switch_times};
use hopleg::control::{actuator_saturation, back_emf, clamp, motor_saturation};
use hopleg::kinematics::{forward_kinematics, inverse_kinematics, leg_jacobian, leg_length};
use hopleg::metrics::{aor_curve, average_saturation_ratio, energy_balance, foot_clearance};
use hopleg::model::flight_stiffnesses;
use hopleg::sim::{run, TelemetryLog};
use hopleg::telemetry::{header, to_csv};
use hopleg::{
    ControllerSpec, Gains, HopperParams, JointState, LegGeometry, MotorParams, PlantModel,
    PositionServo, SimConfig, StanceWindow, StopCondition, VirtualSpring,
};
use hopleg_cli::{parse_config_str, RunConfig, PRESETS};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spring_stance_error(dt: f64) -> f64 {
    let p = HopperParams::physical();
    let mut cfg = SimConfig::new(
        p,
        ControllerSpec::Spring(VirtualSpring::weight_compensated(&p)),
    );
    cfg.motor = None;
    cfg.dt = dt;
    cfg.control_rate = 1.0 / dt;
    cfg.stop = StopCondition::Hops(1);
    let log = run(&cfg).expect("spring run");
    let t_lo = log.lifts().next().expect("lift-off").t;
    log.records
        .iter()
        .filter(|r| r.t <= t_lo)
        .map(|r| (r.y_body - stance_position(r.t, &p)).abs())
        .fold(0.0, f64::max)
}

fn stance_oracle() -> Outcome {
    let fine = spring_stance_error(1e-4);
    let coarse = spring_stance_error(1e-3);
    let half = spring_stance_error(5e-4);
    let ratio = coarse / half;
    outcome(
        fine <= 1e-6 && (12.0..=20.0).contains(&ratio),
        format!("max error {fine:.2e} m at dt 1e-4; halving 1e-3 -> 5e-4 shrinks it {ratio:.2}x"),
    )
}

fn template_lifts(p: HopperParams) -> Vec<f64> {
    let mut cfg = SimConfig::new(p, ControllerSpec::Spring(VirtualSpring::of(&p)));
    cfg.plant = PlantModel::Template;
    cfg.motor = None;
    cfg.dt = 1e-4;
    cfg.control_rate = 1e4;
    cfg.stop = StopCondition::Hops(3);
    run(&cfg)
        .expect("template run")
        .lifts()
        .map(|e| e.t)
        .collect()
}

fn switch_times_check() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, p, printed) in [
        ("paper-literal", HopperParams::paper_literal(), 3.2367),
        ("physical", HopperParams::physical(), 0.3113),
    ] {
        let lifts = template_lifts(p);
        let (t_lo, _) = switch_times(&p).expect("switch times");
        let period = hop_period(&p).expect("period");
        let measured: Vec<f64> = lifts.windows(2).map(|w| w[1] - w[0]).collect();
        let lo_err = (lifts[0] - t_lo).abs();
        let per_err = measured
            .iter()
            .map(|m| (m - period).abs())
            .fold(0.0, f64::max);
        let printed_err = measured
            .iter()
            .map(|m| (m - printed).abs())
            .fold(0.0, f64::max);
        pass &= lifts.len() == 3 && lo_err <= 1e-3 && per_err <= 1e-3 && printed_err <= 1e-3;
        parts.push(format!(
            "{name}: t_lo {:.6} (err {lo_err:.1e}), T {:.6} (err {per_err:.1e})",
            lifts[0], measured[0]
        ));
    }
    outcome(pass, parts.join("; "))
}

struct Runs {
    force: TelemetryLog,
    position: TelemetryLog,
    literal_force: TelemetryLog,
    literal_position: TelemetryLog,
}

fn controller_run(p: HopperParams, spec: ControllerSpec) -> TelemetryLog {
    let cfg = SimConfig::new(p, spec);
    run(&cfg).expect("controller run")
}

fn controller_runs() -> Runs {
    let servo = PositionServo::for_control_rate(4000.0);
    let force = ControllerSpec::Force(Gains::reference());
    Runs {
        force: controller_run(HopperParams::physical(), force),
        position: controller_run(HopperParams::physical(), ControllerSpec::Position(servo)),
        literal_force: controller_run(HopperParams::paper_literal(), force),
        literal_position: controller_run(
            HopperParams::paper_literal(),
            ControllerSpec::Position(servo),
        ),
    }
}

fn first_stance_ratio(log: &TelemetryLog) -> f64 {
    let w = StanceWindow::first(log).expect("first stance");
    average_saturation_ratio(log, &w).expect("stance average")
}

fn saturation_ordering(runs: &Runs) -> Outcome {
    let cf = first_stance_ratio(&runs.force);
    let cp = first_stance_ratio(&runs.position);
    outcome(
        (0.9..=1.0).contains(&cf) && cp <= 0.8 && cp < cf,
        format!("C_act_avg force {cf:.4}, position {cp:.4}"),
    )
}

fn clearance_ordering(runs: &Runs) -> Outcome {
    let hf = foot_clearance(&runs.force);
    let hp = foot_clearance(&runs.position);
    let same_start = hf.h_r_init == hp.h_r_init
        && runs.force.records[0].y_body == runs.position.records[0].y_body;
    let ratio = hf.h_r_max / hp.h_r_max;
    outcome(
        same_start && ratio >= 1.3,
        format!(
            "h_r_max force {:.4} m, position {:.4} m, ratio {ratio:.3}",
            hf.h_r_max, hp.h_r_max
        ),
    )
}

fn envelope_safety(runs: &Runs) -> Outcome {
    let motor = MotorParams::default();
    let aor = aor_curve(&motor, 256);
    let mut steps = 0usize;
    let mut bad = 0usize;
    for log in [
        &runs.force,
        &runs.position,
        &runs.literal_force,
        &runs.literal_position,
    ] {
        for r in &log.records {
            steps += 1;
            let ok = |c: &hopleg::TorqueCommand, speed: f64| {
                c.tau_des.abs() <= c.tau_sat + 1e-12 && aor.contains(speed, c.tau_des.abs())
            };
            if !(ok(&r.knee, r.joints.thetad_knee) && ok(&r.hip, r.joints.thetad_hip)) {
                bad += 1;
            }
        }
    }
    outcome(
        steps > 0 && bad == 0,
        format!("{bad} violations over {steps} logged steps"),
    )
}

fn energy_audit() -> Outcome {
    let p = HopperParams::physical();
    let mut cfg = SimConfig::new(
        p,
        ControllerSpec::Spring(VirtualSpring::weight_compensated(&p)),
    );
    cfg.motor = None;
    cfg.stop = StopCondition::Hops(1);
    let log = run(&cfg).expect("spring run");
    let w = StanceWindow::first(&log).expect("stance");
    let e = energy_balance(&log, &w, &p).expect("energy balance");
    outcome(
        e.stance_residual <= 0.02,
        format!(
            "joint work {:.4} J, mechanical gain {:.4} J, residual {:.2e}",
            e.work, e.mechanical_gain, e.stance_residual
        ),
    )
}

fn algebraic_suite() -> Outcome {
    let mut failures = Vec::new();
    let motors = [
        MotorParams::default(),
        MotorParams {
            tau_max: 0.35,
            omega_max: 520.0,
            r: 100.0,
        },
    ];
    for m in &motors {
        for i in 0..=1000 {
            let w = m.omega_max * i as f64 / 1000.0;
            let sum = motor_saturation(w, m) + back_emf(w, m);
            if (sum - m.tau_max).abs() > 4.0 * f64::EPSILON * m.tau_max {
                failures.push(format!("envelope identity at {w}: {sum}"));
            }
            let joint = w / m.r;
            if actuator_saturation(joint, m) != m.r * motor_saturation(m.r * joint, m) {
                failures.push(format!("joint scaling at {joint}"));
            }
        }
    }
    for i in -50..=50 {
        let x = i as f64 * 1.7;
        for s in [0.0, 1.0, 25.0, 80.0] {
            let c = clamp(x, s);
            if clamp(c, s) != c || clamp(-x, s) != -c {
                failures.push(format!("clamp at ({x}, {s})"));
            }
        }
    }
    let geo = LegGeometry::default();
    let (lo, hi) = (geo.folded(), geo.reach());
    let mut round = 0.0f64;
    let mut jac = 0.0f64;
    for i in 1..=1000 {
        let y = lo + (hi - lo) * i as f64 / 1001.0;
        let (hip, knee) = inverse_kinematics(y, &geo).expect("reachable");
        let js = JointState {
            theta_hip: hip,
            theta_knee: knee,
            ..Default::default()
        };
        round = round.max((forward_kinematics(&js, &geo).0 - y).abs());
        let h = 1e-6;
        let fd = (leg_length(knee + h, &geo) - leg_length(knee - h, &geo)) / (2.0 * h);
        jac = jac.max((leg_jacobian(&js, &geo).d_knee - fd).abs());
    }
    if round > 1e-10 {
        failures.push(format!("kinematics round trip {round:.2e}"));
    }
    if jac > 1e-6 {
        failures.push(format!("jacobian vs difference {jac:.2e}"));
    }
    for p in [HopperParams::paper_literal(), HopperParams::physical()] {
        let t = hop_period(&p).expect("period");
        let eps = 1e-9 * t;
        for at in [0.5 * t, t] {
            let jump =
                (compensation(at - eps, t, p.c_max) - compensation(at + eps, t, p.c_max)).abs();
            if jump > 1e-9 {
                failures.push(format!("compensation jump {jump:.2e} at {at}"));
            }
        }
        let (kfm, kfe) = flight_stiffnesses(&p);
        let target = p.k_s * (p.m + p.m_e);
        let tol = 4.0 * f64::EPSILON * target;
        if (kfm * p.m_e - target).abs() > tol || (kfe * p.m - target).abs() > tol {
            failures.push(format!("flight stiffness identity k_s = {}", p.k_s));
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("all identities hold; round trip {round:.1e} m, jacobian {jac:.1e}")
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn determinism_and_io() -> Outcome {
    let mut failures = Vec::new();
    for name in PRESETS {
        let cfg = RunConfig::preset(name).expect("preset");
        let a = to_csv(&run(&cfg.sim_config()).expect("run"));
        let b = to_csv(&run(&cfg.sim_config()).expect("run"));
        if a != b {
            failures.push(format!("{name} telemetry differs between runs"));
        }
    }
    let force_preset = parse_config_str("preset = paper-literal-force\n").expect("parse");
    let h = force_preset.hopper;
    if (h.k_s, h.m, h.m_e, h.m_t, h.c_amp, h.c_max, h.y_s_neu)
        != (17.0, 5.6, 0.8, 1.87, 0.12, 0.11, 0.45)
        || force_preset.gains
            != Some(Gains {
                k_p: 5424.0,
                k_d: 9.0,
            })
    {
        failures.push("force preset values".into());
    }
    let position_preset = parse_config_str("preset = paper-literal-position\n").expect("parse");
    if position_preset.hopper != h || position_preset.gains.is_some() {
        failures.push("position preset values".into());
    }
    let expected = "t,phase,y_body,v_body,y_foot,v_foot,theta_hip,theta_knee,thetad_hip,\
thetad_knee,tau_dyn_hip,tau_dyn_knee,tau_des_hip,tau_des_knee,tau_sat_hip,tau_sat_knee,\
c_act_hip,c_act_knee";
    if header() != expected {
        failures.push(format!("header row {}", header()));
    }
    let pass = failures.is_empty();
    let detail = if pass {
        "bitwise-identical reruns of every preset; presets and header match".into()
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report =
        |id: u8, name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
            let t0 = Instant::now();
            let mut o = f();
            let took = t0.elapsed();
            if let Some(b) = budget {
                if took > b {
                    o.pass = false;
                    o.detail.push_str(&format!("; over the {:.0?} budget", b));
                }
            }
            all &= o.pass;
            println!(
                "criterion {id} [{}] {name}: {} ({:.2?})",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail,
                took
            );
        };

    report(
        1,
        "stance matches closed form",
        Some(Duration::from_secs(1)),
        &mut stance_oracle,
    );
    report(
        2,
        "switch times and period",
        Some(Duration::from_secs(5)),
        &mut switch_times_check,
    );

    let mut runs = None;
    report(
        3,
        "saturation ratio ordering",
        Some(Duration::from_secs(10)),
        &mut || {
            let r = controller_runs();
            let o = saturation_ordering(&r);
            runs = Some(r);
            o
        },
    );
    let runs = runs.expect("controller runs");
    report(4, "foot clearance ordering", None, &mut || {
        clearance_ordering(&runs)
    });
    report(5, "envelope safety", None, &mut || envelope_safety(&runs));
    report(6, "energy audit", None, &mut energy_audit);
    report(
        7,
        "algebraic properties",
        Some(Duration::from_secs(5)),
        &mut algebraic_suite,
    );
    report(
        8,
        "determinism and I/O contract",
        None,
        &mut determinism_and_io,
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
