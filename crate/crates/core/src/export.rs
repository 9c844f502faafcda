//! Plain-text and binary renderings of trajectories and reports.
//!
//! CSV output uses `.` as decimal separator, LF line endings and Rust's
//! shortest round-trip float formatting, so identical inputs give identical
//! bytes.
//!
//! Field snapshots use a little-endian binary layout:
//!
//! | offset | type      | content                 |
//! |--------|-----------|-------------------------|
//! | 0      | `[u8; 4]` | magic `DRDF`            |
//! | 4      | `u32`     | format version (1)      |
//! | 8      | `u64`     | number of points `n`    |
//! | 16     | `f64`     | box half-length `L`     |
//! | 24     | `f64`     | time `t`                |
//! | 32     | `f64 * n` | values at `-L + j 2L/n` |

use std::fmt::Write as _;

use crate::error::{argument, Result};
use crate::model::Grid;
use crate::semigroup::Field;
use crate::solver::Trajectory;
use crate::squeezing::ContractionRow;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"DRDF";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Columns `t,norm,segment_norm,boundary_fraction`, one row per step.
pub fn norms_csv(traj: &Trajectory) -> String {
    let norms = traj.norms();
    let seg = traj.segment_norms();
    let mut out = String::from("t,norm,segment_norm,boundary_fraction\n");
    for (n, f) in traj.fields.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            traj.time(n),
            norms[n],
            seg[n],
            crate::solver::boundary_mass_fraction(f)
        );
    }
    out
}

/// Columns `t,K_1,K_2,...`: segment far-field mass outside each radius.
pub fn farfield_csv(traj: &Trajectory, radii: &[f64]) -> String {
    let series: Vec<Vec<f64>> = radii.iter().map(|&k| traj.far_field_series(k)).collect();
    let mut out = String::from("t");
    for k in radii {
        let _ = write!(out, ",mass_outside_{k}");
    }
    out.push('\n');
    for n in 0..=traj.steps() {
        let _ = write!(out, "{}", traj.time(n));
        for s in &series {
            let _ = write!(out, ",{}", s[n]);
        }
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// Columns `pair,t,status,measured_p,bound_p,measured_q,bound_q,measured_r,bound_r,bound_p_coef2`.
pub fn contraction_csv(rows: &[(usize, ContractionRow)]) -> String {
    let mut out = String::from(
        "pair,t,status,measured_p,bound_p,measured_q,bound_q,measured_r,bound_r,bound_p_coef2\n",
    );
    for (pair, r) in rows {
        let status = match r.status {
            crate::squeezing::ContractionStatus::Measured => "measured",
            crate::squeezing::ContractionStatus::ZeroDifference => "zero_difference",
        };
        let _ = writeln!(
            out,
            "{pair},{},{status},{},{},{},{},{},{},{}",
            r.t,
            opt(r.measured_p),
            r.bounds.bound_p,
            opt(r.measured_q),
            r.bounds.bound_q,
            opt(r.measured_r),
            r.bounds.bound_r,
            r.bounds.bound_p_doubled
        );
    }
    out
}

pub fn encode_snapshot(field: &Field, t: f64) -> Vec<u8> {
    let n = field.values.len();
    let mut out = Vec::with_capacity(32 + 8 * n);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&field.grid.half_length.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < 32 || &bytes[0..4] != SNAPSHOT_MAGIC {
        return Err(argument("not a field snapshot"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(4) != SNAPSHOT_VERSION {
        return Err(argument("unsupported snapshot version"));
    }
    let n = u64_at(8) as usize;
    if bytes.len() != 32 + 8 * n {
        return Err(argument("snapshot length does not match its header"));
    }
    let grid = Grid::new(f64_at(16), n).map_err(crate::error::Error::Config)?;
    let t = f64_at(24);
    let values = (0..n).map(|j| f64_at(32 + 8 * j)).collect();
    Ok((Field { values, grid }, t))
}
