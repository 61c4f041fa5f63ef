//! CSV form of a telemetry log.

use std::io::{self, Write};

use crate::sim::{TelemetryLog, TelemetryRecord};

/// Column order of the telemetry CSV.
pub const COLUMNS: [&str; 18] = [
    "t",
    "phase",
    "y_body",
    "v_body",
    "y_foot",
    "v_foot",
    "theta_hip",
    "theta_knee",
    "thetad_hip",
    "thetad_knee",
    "tau_dyn_hip",
    "tau_dyn_knee",
    "tau_des_hip",
    "tau_des_knee",
    "tau_sat_hip",
    "tau_sat_knee",
    "c_act_hip",
    "c_act_knee",
];

pub fn header() -> String {
    COLUMNS.join(",")
}

fn row(r: &TelemetryRecord) -> String {
    let j = &r.joints;
    let nums = [
        r.y_body,
        r.v_body,
        r.y_foot,
        r.v_foot,
        j.theta_hip,
        j.theta_knee,
        j.thetad_hip,
        j.thetad_knee,
        r.hip.tau_dyn,
        r.knee.tau_dyn,
        r.hip.tau_des,
        r.knee.tau_des,
        r.hip.tau_sat,
        r.knee.tau_sat,
        r.c_act_hip,
        r.c_act_knee,
    ];
    let mut s = format!("{},{}", r.t, r.phase);
    for x in nums {
        s.push(',');
        s.push_str(&x.to_string());
    }
    s
}

pub fn write_csv<W: Write>(log: &TelemetryLog, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", header())?;
    for r in &log.records {
        writeln!(out, "{}", row(r))?;
    }
    Ok(())
}

pub fn to_csv(log: &TelemetryLog) -> String {
    let mut buf = Vec::new();
    write_csv(log, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
