//! Binary container and CSV debugging output for paths.
//!
//! Container layout (all integers and floats little-endian):
//!
//! ```text
//! magic   8 bytes  "GLPATH\0\x01"
//! kind    u8
//! mode    u8
//! n       u64
//! dt      f64
//! seed    u64
//! stream  u64
//! values  n × f64
//! ```

use std::io::{Read, Write};

use super::{Discretization, PathKind, PathSample};
use crate::error::ensure;
use crate::rng::SeedRecord;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"GLPATH\0\x01";

fn kind_code(kind: PathKind) -> u8 {
    match kind {
        PathKind::Bm => 0,
        PathKind::Bridge => 1,
        PathKind::FirstPassageBridge => 2,
        PathKind::StoppedBm => 3,
        PathKind::Excursion => 4,
    }
}

fn kind_from(code: u8) -> Result<PathKind> {
    Ok(match code {
        0 => PathKind::Bm,
        1 => PathKind::Bridge,
        2 => PathKind::FirstPassageBridge,
        3 => PathKind::StoppedBm,
        4 => PathKind::Excursion,
        c => return Err(Error::Format(format!("unknown path kind {c}"))),
    })
}

pub(crate) fn mode_code(mode: Discretization) -> u8 {
    match mode {
        Discretization::Gaussian => 0,
        Discretization::Walk => 1,
    }
}

pub(crate) fn mode_from(code: u8) -> Result<Discretization> {
    match code {
        0 => Ok(Discretization::Gaussian),
        1 => Ok(Discretization::Walk),
        c => Err(Error::Format(format!("unknown discretization {c}"))),
    }
}

pub fn write_path<W: Write>(mut w: W, path: &PathSample) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind_code(path.kind()), mode_code(path.mode())])?;
    w.write_all(&(path.len() as u64).to_le_bytes())?;
    w.write_all(&path.dt().to_le_bytes())?;
    w.write_all(&path.seed().seed.to_le_bytes())?;
    w.write_all(&path.seed().stream.to_le_bytes())?;
    for v in path.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_path<R: Read>(mut r: R) -> Result<PathSample> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    ensure!(&magic == MAGIC, Format, "not a path container");
    let mut codes = [0u8; 2];
    r.read_exact(&mut codes)?;
    let n = read_u64(&mut r)? as usize;
    let dt = read_f64(&mut r)?;
    let seed = SeedRecord::new(read_u64(&mut r)?, read_u64(&mut r)?);
    let mut values = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        values.push(read_f64(&mut r)?);
    }
    PathSample::new(values, dt, kind_from(codes[0])?, mode_from(codes[1])?, seed)
}

/// Writes `t,value` rows.
pub fn write_path_csv<W: Write>(mut w: W, path: &PathSample) -> Result<()> {
    writeln!(w, "t,value")?;
    for (i, v) in path.values().iter().enumerate() {
        writeln!(w, "{},{}", i as f64 * path.dt(), v)?;
    }
    Ok(())
}

/// Reads `t,value` rows back into a plain Brownian-motion sample.
pub fn read_path_csv<R: Read>(mut r: R, kind: PathKind, mode: Discretization) -> Result<PathSample> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let (t, v) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad csv row {line:?}")))?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(e.to_string()));
        times.push(parse(t)?);
        values.push(parse(v)?);
    }
    ensure!(times.len() >= 2, Format, "csv path needs at least two rows");
    let dt = times[1] - times[0];
    PathSample::new(values, dt, kind, mode, SeedRecord::new(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_bm, sample_first_passage_bridge};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn container_round_trip(seed in any::<u64>(), n in 2usize..300) {
            let p = sample_bm(n, 0.01, 1.5, Discretization::Walk, SeedRecord::new(seed, 4)).unwrap();
            let mut buf = Vec::new();
            write_path(&mut buf, &p).unwrap();
            prop_assert_eq!(buf.len(), 8 + 2 + 8 * 4 + 8 * n);
            prop_assert_eq!(read_path(&buf[..]).unwrap(), p);
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = sample_first_passage_bridge(1.0, 1.0, 5, SeedRecord::new(1, 0)).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,value\n"));
        assert_eq!(text.lines().count(), 6);
        let back = read_path_csv(&buf[..], PathKind::FirstPassageBridge, Discretization::Gaussian).unwrap();
        assert_eq!(back.values(), p.values());
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(matches!(read_path(&b"NOTAPATHxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx"[..]), Err(Error::Format(_))));
    }
}
