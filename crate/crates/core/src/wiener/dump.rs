//! Binary path dumps: `b"WMCB"`, version `u32`, L `u32`, T `f64`, ν `f64`,
//! then L+1 records of `(p, q)` as little-endian `f64`.

use std::io::{Read, Write};

use crate::dynamics::PhasePath;
use crate::error::{MetriqError, Result};

pub const MAGIC: [u8; 4] = *b"WMCB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub version: u32,
    pub steps: u32,
    pub duration: f64,
    pub nu: f64,
}

fn io(e: std::io::Error) -> MetriqError {
    MetriqError::Dump(e.to_string())
}

pub fn write_dump<W: Write>(mut w: W, path: &PhasePath, nu: f64) -> Result<()> {
    let steps = u32::try_from(path.steps()).map_err(|_| MetriqError::Dump("too many steps".into()))?;
    w.write_all(&MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&steps.to_le_bytes()).map_err(io)?;
    w.write_all(&path.duration().to_le_bytes()).map_err(io)?;
    w.write_all(&nu.to_le_bytes()).map_err(io)?;
    for &(p, q) in path.points() {
        w.write_all(&p.to_le_bytes()).map_err(io)?;
        w.write_all(&q.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_dump<R: Read>(mut r: R) -> Result<(DumpHeader, PhasePath)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if magic != MAGIC {
        return Err(MetriqError::Dump(format!("bad magic {magic:?}")));
    }
    let mut u = [0u8; 4];
    let mut f = [0u8; 8];
    r.read_exact(&mut u).map_err(io)?;
    let version = u32::from_le_bytes(u);
    if version != VERSION {
        return Err(MetriqError::Dump(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u).map_err(io)?;
    let steps = u32::from_le_bytes(u);
    r.read_exact(&mut f).map_err(io)?;
    let duration = f64::from_le_bytes(f);
    r.read_exact(&mut f).map_err(io)?;
    let nu = f64::from_le_bytes(f);
    let mut points = Vec::with_capacity(steps as usize + 1);
    for _ in 0..=steps {
        r.read_exact(&mut f).map_err(io)?;
        let p = f64::from_le_bytes(f);
        r.read_exact(&mut f).map_err(io)?;
        points.push((p, f64::from_le_bytes(f)));
    }
    let header = DumpHeader {
        version,
        steps,
        duration,
        nu,
    };
    Ok((header, PhasePath::new(duration, points)?))
}
