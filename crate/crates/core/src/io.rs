//! CSV export and import of trajectories and solver statistics.
//!
//! Trajectories are long-format tables, one row per (level, cell):
//! `level,t,cell_id,x_K,u,v` for the reaction-diffusion system and
//! `level,t,cell_id,x_K,w` for the limit problem. `x_K` is the first center
//! coordinate. Floats are written with 17 significant digits so a read-back
//! is bit-exact.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::limit::{WState, WTrajectory};
use crate::mesh::Mesh;
use crate::scheme::{State, StepStats, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 6] = ["level", "t", "cell_id", "x_K", "u", "v"];
pub const W_TRAJECTORY_HEADER: [&str; 5] = ["level", "t", "cell_id", "x_K", "w"];
pub const STATS_HEADER: [&str; 6] = ["level", "t", "dt", "newton_iterations", "residual", "used_fallback"];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn x_k(mesh: &Mesh, k: usize) -> f64 {
    mesh.cells()[k].center.first().copied().unwrap_or(0.0)
}

pub fn write_trajectory<W: Write>(mesh: &Mesh, traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &traj.states {
        mesh.ensure_len("state.u", s.u.len())?;
        for k in 0..mesh.n_cells() {
            w.write_record([
                s.level.to_string(),
                fmt(s.time),
                k.to_string(),
                fmt(x_k(mesh, k)),
                fmt(s.u[k]),
                fmt(s.v[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_w_trajectory<W: Write>(mesh: &Mesh, traj: &WTrajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(W_TRAJECTORY_HEADER)?;
    for s in &traj.states {
        mesh.ensure_len("state.w", s.w.len())?;
        for k in 0..mesh.n_cells() {
            w.write_record([
                s.level.to_string(),
                fmt(s.time),
                k.to_string(),
                fmt(x_k(mesh, k)),
                fmt(s.w[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_stats<W: Write>(stats: &[StepStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(STATS_HEADER)?;
    for s in stats {
        w.write_record([
            s.level.to_string(),
            fmt(s.time),
            fmt(s.dt),
            s.newton_iterations.to_string(),
            fmt(s.residual),
            s.used_fallback.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One level of a trajectory table as read back: cell centers and value
/// columns ordered by cell id.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub level: usize,
    pub time: f64,
    pub x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn parse<T: std::str::FromStr>(field: &str, what: &str, line: u64) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("line {line}: cannot parse {what} from {field:?}")))
}

/// Reads a trajectory table with either schema. The value columns are
/// everything after `x_K`; their names are returned alongside the levels.
pub fn read_levels<R: Read>(reader: R) -> Result<(Vec<String>, Vec<LevelTable>)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.len() < 5 || header[..4] != ["level", "t", "cell_id", "x_K"] {
        return Err(Error::InvalidArgument(format!(
            "unexpected trajectory header {header:?}"
        )));
    }
    let columns = header[4..].to_vec();
    // level -> (time, cell -> (x_K, values))
    type Cells = BTreeMap<usize, (f64, Vec<f64>)>;
    let mut levels: BTreeMap<usize, (f64, Cells)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::InvalidArgument(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        let level: usize = parse(&rec[0], "level", line)?;
        let t: f64 = parse(&rec[1], "t", line)?;
        let cell: usize = parse(&rec[2], "cell_id", line)?;
        let x: f64 = parse(&rec[3], "x_K", line)?;
        let vals = (4..rec.len())
            .map(|i| parse::<f64>(&rec[i], &header[i], line))
            .collect::<Result<Vec<_>>>()?;
        let entry = levels.entry(level).or_insert_with(|| (t, BTreeMap::new()));
        if entry.0 != t {
            return Err(Error::InvalidArgument(format!(
                "line {line}: level {level} has inconsistent times {} and {t}",
                entry.0
            )));
        }
        if entry.1.insert(cell, (x, vals)).is_some() {
            return Err(Error::InvalidArgument(format!(
                "line {line}: duplicate cell {cell} at level {level}"
            )));
        }
    }
    let mut out = Vec::with_capacity(levels.len());
    for (level, (time, cells)) in levels {
        if cells.keys().enumerate().any(|(i, &c)| i != c) {
            return Err(Error::InvalidArgument(format!(
                "level {level}: cell ids are not contiguous from 0"
            )));
        }
        let mut values = vec![Vec::with_capacity(cells.len()); columns.len()];
        let mut x = Vec::with_capacity(cells.len());
        for (_, (xk, vals)) in cells {
            x.push(xk);
            for (col, v) in values.iter_mut().zip(vals) {
                col.push(v);
            }
        }
        out.push(LevelTable { level, time, x, values });
    }
    if let Some(n) = out.first().map(|l| l.x.len()) {
        if let Some(bad) = out.iter().find(|l| l.x.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "level {} has {} cells, level {} has {n}",
                bad.level,
                bad.x.len(),
                out[0].level
            )));
        }
    }
    Ok((columns, out))
}

/// Reads a `(u, v)` trajectory written by [`write_trajectory`]. Solver
/// statistics are not part of the table and come back empty.
pub fn read_trajectory<R: Read>(reader: R) -> Result<Trajectory> {
    let (cols, levels) = read_levels(reader)?;
    if cols != ["u", "v"] {
        return Err(Error::InvalidArgument(format!("expected columns u, v; found {cols:?}")));
    }
    let states = levels
        .into_iter()
        .map(|mut l| State {
            v: l.values.pop().unwrap_or_default(),
            u: l.values.pop().unwrap_or_default(),
            level: l.level,
            time: l.time,
        })
        .collect();
    Ok(Trajectory {
        states,
        stats: Vec::new(),
    })
}

pub fn read_w_trajectory<R: Read>(reader: R) -> Result<WTrajectory> {
    let (cols, levels) = read_levels(reader)?;
    if cols != ["w"] {
        return Err(Error::InvalidArgument(format!("expected column w; found {cols:?}")));
    }
    let states = levels
        .into_iter()
        .map(|mut l| WState {
            w: l.values.pop().unwrap_or_default(),
            level: l.level,
            time: l.time,
        })
        .collect();
    Ok(WTrajectory {
        states,
        stats: Vec::new(),
    })
}
