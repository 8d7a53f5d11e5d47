//! Binary field snapshots and CSV time series.
//!
//! Snapshot layout (little-endian, 64-byte header):
//!
//! | bytes  | content                                |
//! |--------|----------------------------------------|
//! | 0..4   | magic `BNLS`                           |
//! | 4..8   | format version (`u32`)                 |
//! | 8..12  | grid dimension (`u32`)                 |
//! | 12..16 | points per axis (`u32`)                |
//! | 16..24 | half width `L` (`f64`)                 |
//! | 24..56 | `gamma`, `mu`, `omega`, `sigma` (`f64`) |
//! | 56..60 | model dimension `N` (`u32`)            |
//! | 60..64 | reserved, zero                         |
//!
//! followed by the values in row-major order as interleaved `re, im` pairs of `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::evolution::DiagnosticsRecord;
use crate::field::Field;
use crate::grid::Grid;
use crate::num::Real;
use crate::params::PhysicalParams;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"BNLS";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER_LEN: usize = 64;

/// Columns shared by every series, before the per-radius virial columns.
pub const SERIES_BASE_COLUMNS: [&str; 10] = [
    "t",
    "mass",
    "grad_norm_sq",
    "lap_norm_sq",
    "potential",
    "action",
    "energy0",
    "nehari",
    "pohozaev",
    "virial_q",
];

/// Decoded snapshot header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub grid_dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
    pub params: PhysicalParams<f64>,
}

impl SnapshotHeader {
    fn encode(&self) -> [u8; SNAPSHOT_HEADER_LEN] {
        let mut h = [0u8; SNAPSHOT_HEADER_LEN];
        h[0..4].copy_from_slice(&SNAPSHOT_MAGIC);
        h[4..8].copy_from_slice(&self.version.to_le_bytes());
        h[8..12].copy_from_slice(&(self.grid_dim as u32).to_le_bytes());
        h[12..16].copy_from_slice(&(self.points_per_axis as u32).to_le_bytes());
        h[16..24].copy_from_slice(&self.half_width.to_le_bytes());
        let p = &self.params;
        for (i, v) in [p.gamma, p.mu, p.omega, p.sigma].iter().enumerate() {
            h[24 + 8 * i..32 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        h[56..60].copy_from_slice(&(p.dim as u32).to_le_bytes());
        h
    }

    fn decode(h: &[u8; SNAPSHOT_HEADER_LEN]) -> Result<Self> {
        if h[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::Format(format!("bad magic {:?}, expected \"BNLS\"", &h[0..4])));
        }
        let u32_at = |o: usize| u32::from_le_bytes(h[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        Ok(Self {
            version,
            grid_dim: u32_at(8) as usize,
            points_per_axis: u32_at(12) as usize,
            half_width: f64_at(16),
            params: PhysicalParams {
                gamma: f64_at(24),
                mu: f64_at(32),
                omega: f64_at(40),
                sigma: f64_at(48),
                dim: u32_at(56) as usize,
            },
        })
    }
}

pub fn write_snapshot<T: Real>(f: &Field<T>, p: &PhysicalParams<T>, path: &Path) -> Result<()> {
    let grid = f.grid();
    let header = SnapshotHeader {
        version: SNAPSHOT_VERSION,
        grid_dim: grid.dim(),
        points_per_axis: grid.points_per_axis(),
        half_width: grid.half_width().to_f64().unwrap(),
        params: p.cast(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 16 * f.values().len());
    body.extend_from_slice(&header.encode());
    for z in f.values() {
        body.extend_from_slice(&z.re.to_f64().unwrap().to_le_bytes());
        body.extend_from_slice(&z.im.to_f64().unwrap().to_le_bytes());
    }
    w.write_all(&body).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a snapshot, rebuilding its grid. Parameters are validated.
pub fn read_snapshot<T: Real>(path: &Path) -> Result<(Field<T>, PhysicalParams<T>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut h = [0u8; SNAPSHOT_HEADER_LEN];
    r.read_exact(&mut h).map_err(|e| Error::io(path, e))?;
    let header = SnapshotHeader::decode(&h)?;
    let grid = Grid::new(header.grid_dim, header.points_per_axis, T::from(header.half_width).unwrap())?;
    let params: PhysicalParams<T> = header.params.cast();
    params.validate()?;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| Error::io(path, e))?;
    if raw.len() != 16 * grid.cells() {
        return Err(Error::Format(format!(
            "{}: payload holds {} bytes, grid needs {}",
            path.display(),
            raw.len(),
            16 * grid.cells()
        )));
    }
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
            Complex::new(T::from(re).unwrap(), T::from(im).unwrap())
        })
        .collect();
    Ok((Field::from_values(&grid, values)?, params))
}

fn radius_label<T: Real>(r: T) -> String {
    format!("{}", r.to_f64().unwrap())
}

/// Header row for a series with the given cutoff radii.
///
/// After the functionals come `M_R<r>` (localized virial), `dMdt_R<r>` (finite-difference
/// rate), `rate_R<r>` (instantaneous rate along the flow) per radius, then `lap_norm` and `dt`.
pub fn series_header<T: Real>(radii: &[T]) -> String {
    let mut cols: Vec<String> = SERIES_BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    for prefix in ["M_R", "dMdt_R", "rate_R"] {
        cols.extend(radii.iter().map(|&r| format!("{prefix}{}", radius_label(r))));
    }
    cols.push("lap_norm".into());
    cols.push("dt".into());
    cols.join(",")
}

fn fmt_float<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64().unwrap())
}

pub fn series_row<T: Real>(rec: &DiagnosticsRecord<T>) -> String {
    let r = &rec.report;
    let mut vals = vec![
        rec.t,
        r.mass,
        r.grad_norm_sq,
        r.lap_norm_sq,
        r.potential,
        r.action,
        r.energy0,
        r.nehari,
        r.pohozaev,
        r.virial,
    ];
    vals.extend_from_slice(&rec.virial_m);
    vals.extend_from_slice(&rec.virial_rate_fd);
    vals.extend_from_slice(&rec.virial_rate);
    vals.push(rec.lap_norm);
    vals.push(rec.dt);
    vals.into_iter().map(fmt_float).collect::<Vec<_>>().join(",")
}

pub fn write_series<T: Real>(records: &[DiagnosticsRecord<T>], radii: &[T], path: &Path) -> Result<()> {
    for rec in records {
        if rec.virial_m.len() != radii.len() {
            return Err(Error::Structural(format!(
                "record at t={} has {} virial columns, expected {}",
                rec.t,
                rec.virial_m.len(),
                radii.len()
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = |s: &str| writeln!(w, "{s}").map_err(|e| Error::io(path, e));
    write(&series_header(radii))?;
    for rec in records {
        write(&series_row(rec))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<S: serde::Serialize + ?Sized>(value: &S, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
