//! CSV writers for trajectories, threshold reports and search reports.
//!
//! Reals are written in scientific notation with 17 significant digits so
//! files round-trip exactly and reruns diff cleanly.

use std::io::Write;

use crate::de::DeTrajectory;
use crate::error::{Error, Result};
use crate::search::SearchReport;
use crate::threshold::ThresholdResult;

/// `v` with 17 significant digits, e.g. `1.8398100000000000e0`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `iteration,position,sir,ber`, one row per iteration and position.
pub fn write_trajectory_csv<W: Write>(traj: &DeTrajectory, out: W) -> Result<()> {
    if traj.snapshots.is_empty() {
        return Err(Error::Config(
            "trajectory was run without per-position snapshots".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "position", "sir", "ber"])?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        for (m, (s, b)) in snap.sir.iter().zip(&snap.ber).enumerate() {
            w.write_record([i.to_string(), m.to_string(), fmt_f64(*s), fmt_f64(*b)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `iteration,avg_ber,min_ber,argmin_position`.
pub fn write_summary_csv<W: Write>(traj: &DeTrajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "avg_ber", "min_ber", "argmin_position"])?;
    for s in &traj.summaries {
        w.write_record([
            s.iteration.to_string(),
            fmt_f64(s.avg_ber),
            fmt_f64(s.min_ber),
            s.argmin.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `alpha_bp,bracket_lo,bracket_hi,avg_load,evaluations,success_ber,alpha_tol`.
pub fn write_threshold_csv<W: Write>(r: &ThresholdResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "alpha_bp",
        "bracket_lo",
        "bracket_hi",
        "avg_load",
        "evaluations",
        "success_ber",
        "alpha_tol",
    ])?;
    w.write_record([
        fmt_f64(r.alpha_bp),
        fmt_f64(r.bracket.0),
        fmt_f64(r.bracket.1),
        fmt_f64(r.avg_load_at_threshold),
        r.de_evaluations.to_string(),
        fmt_f64(r.success_ber),
        fmt_f64(r.alpha_tol),
    ])?;
    w.flush()?;
    Ok(())
}

/// `alpha,converged,max_ber,iterations`, in evaluation order.
pub fn write_evaluation_log_csv<W: Write>(r: &ThresholdResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "converged", "max_ber", "iterations"])?;
    for e in &r.log {
        w.write_record([
            fmt_f64(e.alpha),
            e.converged.to_string(),
            fmt_f64(e.max_ber),
            e.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `index,instance_seed,iterations_to_target,final_max_ber[,alpha_bp]` in
/// rank order. Unreached targets are written as `NOT_REACHED`, instances
/// that failed to evaluate as `FAILED`.
pub fn write_search_csv<W: Write>(report: &SearchReport, out: W) -> Result<()> {
    let with_thresholds = report.with_thresholds;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "index",
        "instance_seed",
        "iterations_to_target",
        "final_max_ber",
    ];
    if with_thresholds {
        header.push("alpha_bp");
    }
    w.write_record(&header)?;
    for s in &report.ranked {
        let mut row = vec![
            s.index.to_string(),
            s.instance_seed.to_string(),
            s.iterations_to_target
                .map_or_else(|| "NOT_REACHED".to_string(), |i| i.to_string()),
            fmt_f64(s.final_max_ber),
        ];
        if with_thresholds {
            row.push(
                s.threshold
                    .as_ref()
                    .map_or_else(String::new, |t| fmt_f64(t.alpha_bp)),
            );
        }
        w.write_record(&row)?;
    }
    for f in &report.failures {
        let mut row = vec![
            f.index.to_string(),
            f.instance_seed.to_string(),
            "FAILED".to_string(),
            String::new(),
        ];
        if with_thresholds {
            row.push(String::new());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
