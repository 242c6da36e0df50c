//! Trajectory CSV and snapshot JSON.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::srp::TrajectoryRecord;

pub const TRAJECTORY_HEADER: &str = "step,mx,my,angle,inc_frac,energy";
pub const SNAPSHOT_SCHEMA: &str = "rotorpca.snapshot.v1";

/// Streams trajectory rows; reals carry 9 significant digits.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        Ok(TrajectoryWriter { out })
    }

    pub fn write(&mut self, r: &TrajectoryRecord) -> Result<()> {
        writeln!(
            self.out,
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.step, r.magnetization[0], r.magnetization[1], r.angle, r.increment_fraction, r.energy
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = TrajectoryWriter::new(out)?;
    for r in records {
        w.write(r)?;
    }
    w.finish().map(|_| ())
}

pub fn read_trajectory_csv<R: BufRead>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRAJECTORY_HEADER {
        return Err(Error::Config(format!("unexpected trajectory header {header:?}")));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Config(format!("trajectory row {}: {what}", n + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(&e.to_string()));
        out.push(TrajectoryRecord {
            step: f[0].trim().parse().map_err(|_| bad("bad step"))?,
            magnetization: [num(f[1])?, num(f[2])?],
            angle: num(f[3])?,
            increment_fraction: num(f[4])?,
            energy: num(f[5])?,
        });
    }
    Ok(out)
}

/// Resumable chain state. Continuous angles are present only for
/// equilibrium samples and are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub schema: String,
    pub step: u64,
    pub q: usize,
    pub labels: Vec<usize>,
    pub rng_state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetization: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

impl Snapshot {
    pub fn new(step: u64, q: usize, labels: Vec<usize>, rng_state: String) -> Self {
        Snapshot {
            schema: SNAPSHOT_SCHEMA.into(),
            step,
            q,
            labels,
            rng_state,
            angles: None,
            magnetization: None,
            angle: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Snapshot = serde_json::from_str(text)?;
        if s.schema != SNAPSHOT_SCHEMA {
            return Err(Error::Config(format!("unsupported snapshot schema {:?}", s.schema)));
        }
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
