//! On-disk formats: CSV tables and the binary trajectory dump.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so that the
//! files round-trip exactly.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::assumptions::AssumptionReport;
use crate::limit_lab::{ContinuityTable, SweepResult};
use crate::solver::{EnergyTrace, Trajectory};

pub const TRAJECTORY_MAGIC: &[u8; 8] = b"FRACTRJ1";

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, format!("{other:?}")),
    }
}

pub fn write_trace_csv<W: Write>(trace: &EnergyTrace, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "time",
        "l2_psi_t",
        "h1_psi",
        "grad_psi",
        "linf_psi_t",
        "coef_min",
        "coef_max",
        "energy",
        "energy_norm",
        "fp_iters",
        "fp_residual",
    ])
    .map_err(csv_err)?;
    for r in &trace.rows {
        w.write_record([
            r.step.to_string(),
            fmt_f64(r.time),
            fmt_f64(r.l2_psi_t),
            fmt_f64(r.h1_psi),
            fmt_f64(r.grad_psi),
            fmt_f64(r.linf_psi_t),
            fmt_f64(r.coef_min),
            fmt_f64(r.coef_max),
            fmt_f64(r.energy),
            fmt_f64(r.energy_norm),
            r.fp_iters.to_string(),
            fmt_f64(r.fp_residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub energy_distance: Option<f64>,
    pub kernel_distance: Option<f64>,
    pub excluded: bool,
    pub reason: String,
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "eps",
        "energy_distance",
        "kernel_distance",
        "excluded",
        "reason",
        "lower_order_ratio",
        "ball_value",
        "coefficient_min",
    ])
    .map_err(csv_err)?;
    for e in &result.entries {
        let m = e.monitors.as_ref();
        w.write_record([
            fmt_f64(e.eps),
            opt(e.energy_distance),
            opt(e.kernel_distance),
            (e.excluded as u8).to_string(),
            e.reason.clone().unwrap_or_default(),
            opt(e.lower_order_ratio),
            opt(m.map(|m| m.ball_value)),
            opt(m.map(|m| m.coefficient_min)),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Reads the first five columns of a sweep table.
pub fn read_sweep_csv<R: Read>(input: R) -> io::Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("missing column {name:?}"),
            )
        })
    };
    let (ce, cd, ck, cx, cr) = (
        col("eps")?,
        col("energy_distance")?,
        col("kernel_distance")?,
        col("excluded")?,
        col("reason")?,
    );
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |c: usize| rec.get(c).unwrap_or("").trim();
        let num = |c: usize, name: &str| -> io::Result<Option<f64>> {
            let s = field(c);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("row {}: column {name}: bad number {s:?}", line + 1),
                )
            })
        };
        let eps = num(ce, "eps")?.ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("row {}: empty eps", line + 1),
            )
        })?;
        let excluded = match field(cx) {
            "1" | "true" => true,
            "0" | "false" | "" => false,
            s => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("row {}: column excluded: {s:?}", line + 1),
                ))
            }
        };
        rows.push(SweepRow {
            eps,
            energy_distance: num(cd, "energy_distance")?,
            kernel_distance: num(ck, "kernel_distance")?,
            excluded,
            reason: field(cr).to_string(),
        });
    }
    Ok(rows)
}

pub fn write_continuity_csv<W: Write>(table: &ContinuityTable, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "first",
        "second",
        "energy_distance",
        "kernel_distance",
        "ratio",
        "identical",
    ])
    .map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.first.to_string(),
            r.second.to_string(),
            fmt_f64(r.energy_distance),
            fmt_f64(r.kernel_distance),
            opt(r.ratio),
            (r.identical as u8).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn write_reports_csv<W: Write>(reports: &[AssumptionReport], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "assumption",
        "kernel",
        "T",
        "estimate",
        "bound",
        "pass",
        "trials",
        "excluded_trials",
        "seed",
        "witness_trial",
        "witness_t",
        "witness_value",
        "t_f",
    ])
    .map_err(csv_err)?;
    for r in reports {
        let wit = r.witness.as_ref();
        w.write_record([
            r.assumption.to_string(),
            r.kernel.clone(),
            fmt_f64(r.t_final),
            fmt_f64(r.estimate),
            opt(r.bound),
            (r.pass as u8).to_string(),
            r.trials.to_string(),
            r.excluded_trials.to_string(),
            r.seed.to_string(),
            wit.map(|w| w.trial.to_string()).unwrap_or_default(),
            opt(wit.map(|w| w.t)),
            opt(wit.map(|w| w.value)),
            opt(r.structural.as_ref().and_then(|s| s.t_f)),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Little-endian layout:
///
/// ```text
/// header  magic  [u8; 8] = "FRACTRJ1"
///         modes  u32     N
///         _pad   u32     0
///         steps  u64     number of steps (records = steps + 1)
///         dt     f64
///         length f64     L
/// record  step   u64
///         time   f64
///         psi    [f64; N]
///         psi_t  [f64; N]
/// ```
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> io::Result<()> {
    out.write_all(TRAJECTORY_MAGIC)?;
    out.write_all(&(traj.modes as u32).to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    out.write_all(&((traj.len() as u64).saturating_sub(1)).to_le_bytes())?;
    out.write_all(&traj.dt.to_le_bytes())?;
    out.write_all(&traj.length.to_le_bytes())?;
    for n in 0..traj.len() {
        out.write_all(&(n as u64).to_le_bytes())?;
        out.write_all(&(n as f64 * traj.dt).to_le_bytes())?;
        for x in traj.psi(n).iter().chain(traj.psi_t(n)) {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    out.flush()
}

/// Decoded `trajectory.bin`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub modes: usize,
    pub dt: f64,
    pub length: f64,
    /// `(step, time, psi, psi_t)`
    pub records: Vec<(u64, f64, Vec<f64>, Vec<f64>)>,
}

pub fn read_trajectory<R: Read>(mut input: R) -> io::Result<TrajectoryFile> {
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b8)?;
    if &b8 != TRAJECTORY_MAGIC {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "not a trajectory file",
        ));
    }
    input.read_exact(&mut b4)?;
    let modes = u32::from_le_bytes(b4) as usize;
    input.read_exact(&mut b4)?;
    let mut u64_ = |r: &mut R| -> io::Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let steps = u64_(&mut input)?;
    let dt = f64::from_bits(u64_(&mut input)?);
    let length = f64::from_bits(u64_(&mut input)?);
    let mut records = Vec::with_capacity(steps as usize + 1);
    for _ in 0..=steps {
        let step = u64_(&mut input)?;
        let time = f64::from_bits(u64_(&mut input)?);
        let mut v = Vec::with_capacity(2 * modes);
        for _ in 0..2 * modes {
            v.push(f64::from_bits(u64_(&mut input)?));
        }
        let psi_t = v.split_off(modes);
        records.push((step, time, v, psi_t));
    }
    Ok(TrajectoryFile {
        modes,
        dt,
        length,
        records,
    })
}
