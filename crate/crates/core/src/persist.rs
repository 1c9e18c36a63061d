//! Snapshots and the diagnostics table.
//!
//! A snapshot is a text header followed by the raw fields as little-endian
//! `f64`:
//!
//! ```text
//! hanzawa-snapshot
//! version 1
//! grid <n_theta> <n_r_in> <n_r_out> <r_sigma> <r_omega>
//! t <time>
//! fields u_inner_r:<len> u_inner_theta:<len> ...
//! sha256 <hex digest of the payload>
//! end
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::diagnostics::DiagnosticRecord;
use crate::error::{FlowError, Result};
use crate::field::{BulkField, Location};
use crate::geometry::{PolarGrid, SurfaceField};
use crate::hanzawa::HeightFunction;
use crate::state::FlowState;

const MAGIC: &str = "hanzawa-snapshot";
pub const VERSION: u32 = 1;

const FIELDS: [&str; 9] =
    ["u_inner_r", "u_inner_theta", "u_outer_r", "u_outer_theta", "p_inner", "p_outer", "gamma", "c_outer", "c_sigma"];

fn payload_fields(z: &FlowState<f64>) -> [&[f64]; 9] {
    [
        &z.u.inner[0],
        &z.u.inner[1],
        &z.u.outer[0],
        &z.u.outer[1],
        &z.p.inner[0],
        &z.p.outer[0],
        z.gamma.values(),
        &z.c.outer[0],
        z.c_sigma.values(),
    ]
}

/// Grid dimensions recorded in a snapshot header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotGrid {
    pub n_theta: usize,
    pub n_r_in: usize,
    pub n_r_out: usize,
    pub r_sigma: f64,
    pub r_omega: f64,
}

impl SnapshotGrid {
    pub fn of(grid: &PolarGrid<f64>) -> Self {
        Self {
            n_theta: grid.n_theta(),
            n_r_in: grid.inner.len(),
            n_r_out: grid.outer.len(),
            r_sigma: grid.geom.r_sigma,
            r_omega: grid.geom.r_omega,
        }
    }
}

pub fn write_snapshot(path: &Path, grid: &PolarGrid<f64>, z: &FlowState<f64>) -> Result<()> {
    let g = SnapshotGrid::of(grid);
    let fields = payload_fields(z);
    let mut payload = Vec::with_capacity(fields.iter().map(|f| f.len() * 8).sum());
    for f in fields {
        for v in f {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = hex::encode(Sha256::digest(&payload));
    let list: Vec<String> = FIELDS.iter().zip(fields).map(|(n, f)| format!("{n}:{}", f.len())).collect();
    let header = format!(
        "{MAGIC}\nversion {VERSION}\ngrid {} {} {} {} {}\nt {}\nfields {}\nsha256 {digest}\nend\n",
        g.n_theta,
        g.n_r_in,
        g.n_r_out,
        g.r_sigma,
        g.r_omega,
        z.t,
        list.join(" ")
    );
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    file.write_all(&payload)?;
    Ok(())
}

/// A snapshot read from disk, not yet bound to a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: SnapshotGrid,
    pub t: f64,
    fields: Vec<Vec<f64>>,
}

fn bad(m: impl Into<String>) -> FlowError {
    FlowError::Snapshot(m.into())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path)?;
    let marker = b"\nend\n";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| bad("header is not terminated"))?
        + marker.len();
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not text"))?;
    let payload = &bytes[end..];
    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(bad("not a snapshot file"));
    }
    let mut grid = None;
    let mut t = None;
    let mut lens = Vec::new();
    let mut digest = None;
    for line in lines {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
        match key {
            "version" => {
                let v: u32 = rest.parse().map_err(|_| bad("bad version"))?;
                if v != VERSION {
                    return Err(bad(format!("format version {v} is not supported (expected {VERSION})")));
                }
            }
            "grid" => {
                let w: Vec<&str> = rest.split_whitespace().collect();
                if w.len() != 5 {
                    return Err(bad("grid line needs five entries"));
                }
                grid = Some(SnapshotGrid {
                    n_theta: int(w[0])?,
                    n_r_in: int(w[1])?,
                    n_r_out: int(w[2])?,
                    r_sigma: num(w[3])?,
                    r_omega: num(w[4])?,
                });
            }
            "t" => t = Some(num(rest)?),
            "fields" => {
                for (item, want) in rest.split_whitespace().zip(FIELDS) {
                    let (name, len) = item.split_once(':').ok_or_else(|| bad("bad field entry"))?;
                    if name != want {
                        return Err(bad(format!("expected field {want}, found {name}")));
                    }
                    lens.push(int(len)?);
                }
            }
            "sha256" => digest = Some(rest.to_string()),
            "end" => break,
            _ => return Err(bad(format!("unknown header key {key:?}"))),
        }
    }
    let grid = grid.ok_or_else(|| bad("missing grid line"))?;
    let t = t.ok_or_else(|| bad("missing time"))?;
    let digest = digest.ok_or_else(|| bad("missing checksum"))?;
    if lens.len() != FIELDS.len() {
        return Err(bad("incomplete field list"));
    }
    if hex::encode(Sha256::digest(payload)) != digest || payload.len() != 8 * lens.iter().sum::<usize>() {
        return Err(bad("checksum failure (file truncated or corrupted)"));
    }
    let mut fields = Vec::with_capacity(lens.len());
    let mut chunks = payload.chunks_exact(8);
    for n in lens {
        fields.push(chunks.by_ref().take(n).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect());
    }
    Ok(Snapshot { grid, t, fields })
}

impl Snapshot {
    fn build(&self, grid: &PolarGrid<f64>, f: &[Vec<f64>]) -> Result<FlowState<f64>> {
        let nt = grid.n_theta();
        let mut u = BulkField::velocity(grid);
        let mut p = BulkField::pressure(grid);
        let mut c = BulkField::exterior(grid);
        let slots: [&mut Vec<f64>; 6] = {
            let (ui, uo) = (&mut u.inner, &mut u.outer);
            let (ui0, ui1) = ui.split_at_mut(1);
            let (uo0, uo1) = uo.split_at_mut(1);
            [&mut ui0[0], &mut ui1[0], &mut uo0[0], &mut uo1[0], &mut p.inner[0], &mut p.outer[0]]
        };
        for (slot, src) in slots.into_iter().zip(f) {
            if slot.len() != src.len() {
                return Err(bad("field length does not match the grid"));
            }
            slot.copy_from_slice(src);
        }
        if c.outer[0].len() != f[7].len() || f[6].len() != nt || f[8].len() != nt {
            return Err(bad("field length does not match the grid"));
        }
        c.outer[0].copy_from_slice(&f[7]);
        debug_assert_eq!(u.location, Location::Nodes);
        Ok(FlowState {
            u,
            p,
            gamma: HeightFunction::new(SurfaceField::new(f[6].clone())),
            c,
            c_sigma: SurfaceField::new(f[8].clone()),
            t: self.t,
        })
    }

    /// The stored state on `grid`, which must be the grid it was written on.
    pub fn into_state(&self, grid: &PolarGrid<f64>) -> Result<FlowState<f64>> {
        let want = SnapshotGrid::of(grid);
        if self.grid != want {
            return Err(bad(format!(
                "snapshot grid {:?} differs from the run grid {:?}; resample it explicitly",
                self.grid, want
            )));
        }
        self.build(grid, &self.fields)
    }

    /// The stored state carried to a grid with a different angular
    /// resolution by spectral interpolation. Radial dimensions and radii must
    /// agree.
    pub fn resample(&self, grid: &PolarGrid<f64>) -> Result<FlowState<f64>> {
        let want = SnapshotGrid::of(grid);
        if (self.grid.n_r_in, self.grid.n_r_out, self.grid.r_sigma, self.grid.r_omega)
            != (want.n_r_in, want.n_r_out, want.r_sigma, want.r_omega)
        {
            return Err(bad("only the angular resolution can be resampled"));
        }
        let from = crate::spectral::Fourier::<f64>::new(self.grid.n_theta);
        let nt = self.grid.n_theta;
        let fields: Vec<Vec<f64>> = self
            .fields
            .iter()
            .map(|v| v.chunks(nt).flat_map(|ring| from.resample(ring, &grid.fourier)).collect())
            .collect();
        self.build(grid, &fields)
    }
}

/// Writes the diagnostics table with one column per [`DiagnosticRecord`]
/// field.
pub fn write_diagnostics(path: &Path, rows: &[DiagnosticRecord]) -> Result<()> {
    let io = |e: csv::Error| FlowError::Io(e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(DiagnosticRecord::COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record(r.values().iter().map(|v| format!("{v:e}"))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let io = |e: csv::Error| FlowError::Io(e.to_string());
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let head: Vec<String> = r.headers().map_err(io)?.iter().map(String::from).collect();
    if head != DiagnosticRecord::COLUMNS {
        return Err(FlowError::Io(format!("unexpected diagnostics columns {head:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| FlowError::Io(format!("bad number {s:?} in diagnostics"))))
            .collect::<Result<_>>()?;
        out.push(DiagnosticRecord {
            t: v[0],
            kinetic: v[1],
            free_bulk: v[2],
            free_surface: v[3],
            phi: v[4],
            dissipation: v[5],
            energy_residual: v[6],
            surfactant_mass: v[7],
            drop_area: v[8],
            u_max: v[9],
            circle_deviation: v[10],
            c_osc: v[11],
            c_sigma_osc: v[12],
        });
    }
    Ok(out)
}
