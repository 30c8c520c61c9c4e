//! On-disk formats.
//!
//! * `series.csv`: `t,re_m,im_m,abs_m,phase_unwrapped,energy_per_site`
//! * `correlation.csv`: `r,corr,trunc_corr`
//! * `layers.csv`: `x1,re_m,im_m,abs_m`
//! * `states.bin`: little-endian; magic `ROTSTATE`, version `u32`, dims
//!   `3×u32`, N `u32` (0 for xy), snapshot count `u64`; then per snapshot
//!   the time as `f64` followed by one `u16` (clock index) or `f64` (angle)
//!   per site in site-index order.
//!
//! Floats are written in Rust's shortest round-trip form, so identical
//! trajectories give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rotators_core::observables::{unwrap_phase, CorrelationPoint};
use rotators_core::trajectory::{SnapshotData, Snapshots};
use rotators_core::Trajectory;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SERIES_HEADER: [&str; 6] = ["t", "re_m", "im_m", "abs_m", "phase_unwrapped", "energy_per_site"];
pub const CORRELATION_HEADER: [&str; 3] = ["r", "corr", "trunc_corr"];
pub const LAYERS_HEADER: [&str; 4] = ["x1", "re_m", "im_m", "abs_m"];
pub const STATES_MAGIC: &[u8; 8] = b"ROTSTATE";
pub const STATES_VERSION: u32 = 1;

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::Invalid(format!("{}: {other:?}", path.display())),
    }
}

fn flush(path: &Path, mut w: csv::Writer<File>) -> Result<()> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Returns the number of data rows.
pub fn write_series(path: &Path, trajectory: &Trajectory) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(SERIES_HEADER).map_err(|e| csv_error(path, e))?;
    let unwrapped = unwrap_phase(&trajectory.phases()).values;
    for (s, phase) in trajectory.samples.iter().zip(&unwrapped) {
        w.write_record([
            s.t.to_string(),
            s.m.re.to_string(),
            s.m.im.to_string(),
            s.m.norm().to_string(),
            phase.to_string(),
            s.energy_per_site.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)?;
    Ok(trajectory.samples.len())
}

pub fn write_correlation(path: &Path, curve: &[CorrelationPoint]) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(CORRELATION_HEADER).map_err(|e| csv_error(path, e))?;
    for p in curve {
        w.write_record([p.r.to_string(), p.corr.to_string(), p.truncated.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)?;
    Ok(curve.len())
}

pub fn write_layers(path: &Path, layers: &[Complex64]) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(LAYERS_HEADER).map_err(|e| csv_error(path, e))?;
    for (x1, m) in layers.iter().enumerate() {
        w.write_record([x1.to_string(), m.re.to_string(), m.im.to_string(), m.norm().to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    flush(path, w)?;
    Ok(layers.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatesHeader {
    pub version: u32,
    pub dims: [u32; 3],
    /// 0 for xy snapshots.
    pub n: u32,
    pub count: u64,
}

pub fn write_states(path: &Path, dims: [usize; 3], snapshots: &Snapshots) -> Result<usize> {
    let io = |e| HarnessError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let n = match &snapshots.data {
        SnapshotData::Clock { n, .. } => *n,
        SnapshotData::Xy { .. } => 0,
    };
    let mut head = Vec::with_capacity(36);
    head.extend_from_slice(STATES_MAGIC);
    head.extend_from_slice(&STATES_VERSION.to_le_bytes());
    for d in dims {
        head.extend_from_slice(&(d as u32).to_le_bytes());
    }
    head.extend_from_slice(&n.to_le_bytes());
    head.extend_from_slice(&(snapshots.len() as u64).to_le_bytes());
    w.write_all(&head).map_err(io)?;
    let sites = snapshots.n_sites;
    for (i, t) in snapshots.times.iter().enumerate() {
        w.write_all(&t.to_le_bytes()).map_err(io)?;
        let row = i * sites..(i + 1) * sites;
        match &snapshots.data {
            SnapshotData::Clock { indices, .. } => {
                for k in &indices[row] {
                    w.write_all(&k.to_le_bytes()).map_err(io)?;
                }
            }
            SnapshotData::Xy { angles } => {
                for a in &angles[row] {
                    w.write_all(&a.to_le_bytes()).map_err(io)?;
                }
            }
        }
    }
    w.flush().map_err(io)?;
    Ok(snapshots.len())
}

pub fn read_states(path: &Path) -> Result<(StatesHeader, Snapshots)> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| HarnessError::io(path, e))?;
    let malformed = |what: &str| HarnessError::Invalid(format!("{}: {what}", path.display()));
    if bytes.len() < 36 || &bytes[..8] != STATES_MAGIC {
        return Err(malformed("not a state file"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let header = StatesHeader {
        version: u32_at(8),
        dims: [u32_at(12), u32_at(16), u32_at(20)],
        n: u32_at(24),
        count: u64::from_le_bytes(bytes[28..36].try_into().unwrap()),
    };
    if header.version != STATES_VERSION {
        return Err(malformed("unsupported version"));
    }
    let sites = header.dims.iter().map(|&d| d as usize).product::<usize>();
    let width = if header.n == 0 { 8 } else { 2 };
    let record = 8 + sites * width;
    if bytes.len() != 36 + record * header.count as usize {
        return Err(malformed("length does not match the header"));
    }
    let mut times = Vec::with_capacity(header.count as usize);
    let mut clock = Vec::new();
    let mut xy = Vec::new();
    for chunk in bytes[36..].chunks_exact(record) {
        times.push(f64::from_le_bytes(chunk[..8].try_into().unwrap()));
        if header.n == 0 {
            xy.extend(chunk[8..].chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())));
        } else {
            clock.extend(chunk[8..].chunks_exact(2).map(|b| u16::from_le_bytes(b.try_into().unwrap())));
        }
    }
    let data = if header.n == 0 {
        SnapshotData::Xy { angles: xy }
    } else {
        SnapshotData::Clock {
            n: header.n,
            indices: clock,
        }
    };
    Ok((
        header,
        Snapshots {
            n_sites: sites,
            times,
            data,
        },
    ))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub kind: String,
    pub sha256: String,
    pub rows: usize,
}

impl FileEntry {
    pub fn new(dir: &Path, name: &str, kind: &str, rows: usize) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            kind: kind.to_string(),
            sha256: sha256_file(&dir.join(name))?,
            rows,
        })
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))
}
