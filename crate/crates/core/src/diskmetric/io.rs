//! `.bdisk` container and JSON sidecar.
//!
//! ```text
//! magic    8 bytes  "GLDISK\0\x01"
//! params   u64 length + JSON
//! contour  path container
//! z0       u64 length + f64 values
//! bridge   path container
//! ```
//!
//! Loading recomputes the forest code and label field, so the container holds
//! only sampled data and the bytes are a deterministic function of the seed.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BoundaryPoint, DiskInstance, DiskParams};
use crate::encoding::ForestCode;
use crate::error::ensure;
use crate::sampler::{read_f64, read_path, read_u64, write_path};
use crate::Result;

const MAGIC: &[u8; 8] = b"GLDISK\0\x01";

pub fn write_disk<W: Write>(mut w: W, disk: &DiskInstance) -> Result<()> {
    w.write_all(MAGIC)?;
    let params = serde_json::to_vec(disk.params())?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    w.write_all(&params)?;
    write_path(&mut w, disk.code().path())?;
    let z0 = disk.labels().z0();
    w.write_all(&(z0.len() as u64).to_le_bytes())?;
    for v in z0 {
        w.write_all(&v.to_le_bytes())?;
    }
    write_path(&mut w, disk.labels().bridge())?;
    Ok(())
}

pub fn read_disk<R: Read>(mut r: R) -> Result<DiskInstance> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    ensure!(&magic == MAGIC, Format, "not a disk container");
    let len = read_u64(&mut r)? as usize;
    ensure!(len < 1 << 20, Format, "parameter block of {len} bytes");
    let mut params = vec![0u8; len];
    r.read_exact(&mut params)?;
    let params: DiskParams = serde_json::from_slice(&params)?;
    let code = ForestCode::new(read_path(&mut r)?)?;
    let n = read_u64(&mut r)? as usize;
    ensure!(n == code.len(), Format, "label length {n} ≠ contour length {}", code.len());
    let mut z0 = Vec::with_capacity(n);
    for _ in 0..n {
        z0.push(read_f64(&mut r)?);
    }
    let bridge = read_path(&mut r)?;
    DiskInstance::from_parts(params, code, z0, bridge)
}

/// Human-readable sidecar: parameters, seed and summary statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskSummary {
    pub params: DiskParams,
    pub grid_points: usize,
    pub dt: f64,
    pub classes: usize,
    pub area: f64,
    pub perimeter: f64,
    pub boundary_points: usize,
    pub label_min: f64,
    pub label_max: f64,
    pub boundary_first: BoundaryPoint,
}

impl DiskSummary {
    pub(super) fn of(disk: &DiskInstance) -> Self {
        let z = disk.z();
        Self {
            params: disk.params().clone(),
            grid_points: disk.len(),
            dt: disk.code().path().dt(),
            classes: disk.n_classes(),
            area: disk.area(),
            perimeter: disk.perimeter(),
            boundary_points: disk.boundary().len(),
            label_min: z.iter().cloned().fold(f64::INFINITY, f64::min),
            label_max: z.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            boundary_first: disk.boundary()[0],
        }
    }
}
