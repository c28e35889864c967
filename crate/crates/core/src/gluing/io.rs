//! `.bglue` container: identifications (JSON) followed by the disk containers.
//!
//! ```text
//! magic    8 bytes  "GLGLUE\0\x01"
//! ids      u64 length + JSON
//! count    u64
//! disks    count × disk container
//! ```

use std::io::{Read, Write};
use std::sync::Arc;

use super::{disk_union, quotient_space, GluedSpace, Identification};
use crate::diskmetric::{read_disk, write_disk, Piece};
use crate::error::ensure;
use crate::sampler::read_u64;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"GLGLUE\0\x01";

pub fn write_glued<W: Write>(mut w: W, glued: &GluedSpace) -> Result<()> {
    let disks = glued
        .space
        .pieces()
        .iter()
        .map(|p| match p {
            Piece::Disk(d) => Ok(d),
            _ => Err(Error::InvalidParameter("only disk pieces can be serialized".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    w.write_all(MAGIC)?;
    let ids = serde_json::to_vec(&glued.identifications)?;
    w.write_all(&(ids.len() as u64).to_le_bytes())?;
    w.write_all(&ids)?;
    w.write_all(&(disks.len() as u64).to_le_bytes())?;
    for d in disks {
        write_disk(&mut w, d)?;
    }
    Ok(())
}

pub fn read_glued<R: Read>(mut r: R) -> Result<GluedSpace> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    ensure!(&magic == MAGIC, Format, "not a glued-space container");
    let len = read_u64(&mut r)? as usize;
    ensure!(len < 1 << 24, Format, "identification block of {len} bytes");
    let mut ids = vec![0u8; len];
    r.read_exact(&mut ids)?;
    let ids: Vec<Identification> = serde_json::from_slice(&ids)?;
    let count = read_u64(&mut r)? as usize;
    ensure!(count < 1 << 16, Format, "{count} pieces");
    let disks = (0..count).map(|_| read_disk(&mut r).map(Arc::new)).collect::<Result<Vec<_>>>()?;
    quotient_space(disk_union(disks)?, &ids)
}
