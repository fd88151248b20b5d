//! CSV emission. Numbers use 17 significant digits so they parse back exactly;
//! flags are written as 1/0.

use std::fmt::Write as _;

use crate::dynamics::TrajectorySample;
use crate::experiments::{OptimumResult, SweepRow};

pub const SWEEP_HEADER: &str = "omega_over_delta,gamma_tilde,cross,a_param,p0,p1,p2,p1_max,trace_drift";
pub const OPTIMUM_HEADER: &str =
    "gamma_tilde,omega_star_over_delta,p2_star,sigma_star_times_delta,boundary_flag,multimodal_flag";
pub const TRAJECTORY_HEADER: &str = "t_times_delta,p0,p1,p2,re_rho02,im_rho02";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn table<T>(header: &str, rows: &[T], fields: impl Fn(&T) -> Vec<String>) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", fields(r).join(","));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    table(SWEEP_HEADER, rows, |r| {
        vec![
            num(r.omega_over_delta),
            num(r.gamma_tilde),
            bit(r.cross).into(),
            num(r.a_param),
            num(r.populations[0]),
            num(r.populations[1]),
            num(r.populations[2]),
            num(r.p1_max),
            num(r.trace_drift),
        ]
    })
}

pub fn optimum_csv(rows: &[OptimumResult]) -> String {
    table(OPTIMUM_HEADER, rows, |r| {
        vec![
            num(r.gamma_tilde),
            num(r.omega_star_over_delta),
            num(r.p2_star),
            num(r.sigma_star_times_delta),
            bit(r.boundary).into(),
            bit(r.multimodal).into(),
        ]
    })
}

pub fn trajectory_csv(samples: &[TrajectorySample]) -> String {
    table(TRAJECTORY_HEADER, samples, |s| {
        vec![
            num(s.t),
            num(s.populations[0]),
            num(s.populations[1]),
            num(s.populations[2]),
            num(s.rho02.re),
            num(s.rho02.im),
        ]
    })
}
