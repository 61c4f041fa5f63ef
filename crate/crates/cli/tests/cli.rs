use std::path::Path;
use std::process::{Command, Output};

use hopleg::analytic::hop_period;
use hopleg::HopperParams;

fn hopleg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopleg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).expect("file exists")
}

#[test]
fn run_writes_complete_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopleg(
        &[
            "run",
            "--preset",
            "physical-force",
            "--hops",
            "1",
            "--out",
            "r",
            "--plots",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("r");
    assert_eq!(
        read(out.join("status.txt")).lines().next(),
        Some("completed")
    );
    let tel = read(out.join("telemetry.csv"));
    assert_eq!(tel.lines().next().unwrap(), hopleg::telemetry::header());
    assert!(tel.lines().count() > 100);
    for f in [
        "summary.csv",
        "events.csv",
        "trace.csv",
        "config.txt",
        "foot_height.svg",
        "speed_torque.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let reparsed = hopleg_cli::parse_config(&out.join("config.txt")).unwrap();
    assert_eq!(reparsed.preset.as_deref(), Some("physical-force"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.cfg"), "").unwrap();
    let o = hopleg(&["run", "--config", "empty.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing required key: preset or m"));

    std::fs::write(
        dir.path().join("bad.cfg"),
        "preset = physical-force\n[hopper]\nk_s = -5\n",
    )
    .unwrap();
    let o = hopleg(&["run", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k_s"));

    let o = hopleg(&["run", "--preset", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn runtime_abort_exits_with_two_and_leaves_status() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("strict.cfg"),
        "preset = paper-literal-force\n[run]\nik_failure_limit = 0\nout = strict\n",
    )
    .unwrap();
    let o = hopleg(&["run", "--config", "strict.cfg"], dir.path());
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let status = read(dir.path().join("strict/status.txt"));
    assert!(status.starts_with("aborted at t = "), "{status}");
    let summary = read(dir.path().join("strict/summary.csv"));
    assert_eq!(
        summary.lines().nth(1).unwrap().split(',').nth(1),
        Some("false")
    );
}

#[test]
fn compare_emits_parseable_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopleg(
        &[
            "compare",
            "physical-force",
            "physical-position",
            "--hops",
            "1",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = read(dir.path().join("cmp/compare.csv"));
    let mut rows = csv.lines();
    assert_eq!(rows.next(), Some("metric,physical-force,physical-position"));
    let c_act = csv.lines().find(|l| l.starts_with("c_act_avg,")).unwrap();
    let vals: Vec<&str> = c_act.split(',').skip(1).collect();
    for v in &vals {
        assert_eq!(v.split('.').nth(1).map(str::len), Some(4), "{v}");
    }
    let (f, p): (f64, f64) = (vals[0].parse().unwrap(), vals[1].parse().unwrap());
    assert!(f > p);
    assert!(dir.path().join("cmp/physical-force/telemetry.csv").exists());
    assert!(dir
        .path()
        .join("cmp/physical-position/telemetry.csv")
        .exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("c_act_avg"));
}

#[test]
fn compare_reports_a_failed_side() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("strict.cfg"),
        "preset = paper-literal-force\n[run]\nik_failure_limit = 0\n",
    )
    .unwrap();
    let o = hopleg(
        &[
            "compare",
            "physical-force",
            "strict.cfg",
            "--hops",
            "1",
            "--out",
            "cmp",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let csv = read(dir.path().join("cmp/compare.csv"));
    let status = csv.lines().find(|l| l.starts_with("status,")).unwrap();
    assert_eq!(status, "status,completed,failed");
    let h = csv.lines().find(|l| l.starts_with("h_r_max,")).unwrap();
    assert!(h.split(',').nth(1).unwrap().parse::<f64>().is_ok());
}

#[test]
fn traj_covers_one_period() {
    let dir = tempfile::tempdir().unwrap();
    for (preset, p) in [
        ("physical-force", HopperParams::physical()),
        ("paper-literal-force", HopperParams::paper_literal()),
    ] {
        let o = hopleg(&["traj", "--preset", preset, "--out", preset], dir.path());
        assert_eq!(o.status.code(), Some(0));
        let csv = read(dir.path().join(preset).join("traj.csv"));
        let last: f64 = csv
            .lines()
            .last()
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        let t = hop_period(&p).unwrap();
        assert!((last - t).abs() <= 1.0 / 4000.0, "{preset}: {last} vs {t}");
        assert!(csv.lines().nth(1).unwrap().starts_with("0,"));
    }
}

#[test]
fn aor_starts_at_stall() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopleg(
        &["aor", "--preset", "physical-force", "--out", "a"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = read(dir.path().join("a/aor.csv"));
    let m = hopleg::MotorParams::default();
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first, vec![0.0, m.r * m.tau_max]);
    assert_eq!(csv.lines().count(), 257);
    assert!(read(dir.path().join("a/aor.svg")).starts_with("<svg"));
}

#[test]
fn presets_lists_all() {
    let dir = tempfile::tempdir().unwrap();
    let o = hopleg(&["presets"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in hopleg_cli::PRESETS {
        assert!(text.contains(name));
    }
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = hopleg(
            &[
                "run",
                "--preset",
                "physical-position",
                "--hops",
                "1",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a/telemetry.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/telemetry.csv")).unwrap();
    assert_eq!(a, b);
}
