//! Trajectory CSV: `t,px,py,pw,vx,vy,vw,grasp_idx,ux,uy,uw`.
//!
//! One row per state. The last row of each trajectory has empty input
//! fields; several trajectories may be concatenated in one file.

use std::io::{Read, Write};

use nalgebra::Vector3;

use super::{ObjectState, SimConfig, Trajectory, WrenchInput};
use crate::error::{Error, Result};

pub const HEADER: [&str; 11] = [
    "t",
    "px",
    "py",
    "pw",
    "vx",
    "vy",
    "vw",
    "grasp_idx",
    "ux",
    "uy",
    "uw",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_trajectories_csv<W: Write>(out: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for traj in trajectories {
        traj.validate()?;
        for (t, s) in traj.states.iter().enumerate() {
            let mut row: Vec<String> = vec![num(t as f64 * traj.config.dt)];
            row.extend(s.pose.iter().chain(s.velocity.iter()).map(|v| num(*v)));
            match traj.inputs.get(t) {
                Some(inp) => {
                    row.push(inp.particle.to_string());
                    row.extend(inp.u.iter().map(|v| num(*v)));
                }
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("line {line}: bad number {field:?}")))
}

/// Reads one or more trajectories. Gravity and friction threshold take their defaults.
pub fn read_trajectories_csv<R: Read>(input: R) -> Result<Vec<Trajectory>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().map(str::trim).ne(HEADER) {
        return Err(Error::InvalidConfig(format!(
            "unexpected header {headers:?}"
        )));
    }
    let mut out = Vec::new();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let f = |k: usize| parse(&rec[k], line);
        times.push(f(0)?);
        states.push(ObjectState::new(
            Vector3::new(f(1)?, f(2)?, f(3)?),
            Vector3::new(f(4)?, f(5)?, f(6)?),
        ));
        if rec[7].trim().is_empty() {
            if times.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "line {line}: trajectory needs at least two rows"
                )));
            }
            let dt = times[1] - times[0];
            let config = SimConfig {
                dt,
                ..SimConfig::default()
            };
            config.validate()?;
            out.push(Trajectory {
                config,
                states: std::mem::take(&mut states),
                inputs: std::mem::take(&mut inputs),
            });
            times.clear();
        } else {
            let particle = rec[7]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("line {line}: bad grasp index")))?;
            inputs.push(WrenchInput::new(
                particle,
                Vector3::new(f(8)?, f(9)?, f(10)?),
            ));
        }
    }
    if !states.is_empty() {
        return Err(Error::InvalidConfig(
            "trailing trajectory lacks a final row with empty inputs".into(),
        ));
    }
    Ok(out)
}
