//! Flat binary container and CSV export for fields.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! magic      8 bytes  "CLFIELD\0"
//! version    u32      1
//! k          u32
//! n          u32
//! flags      u32      bit 0: periodic time, bit 1: periodic space (always set)
//! n_time     u64
//! n_space    u64
//! extent_t   f64
//! extent_x   f64
//! origin_t   f64
//! values     f64 * (n_time * n_space^k * n)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{DiscreteField, Lattice};
use crate::error::{LabError, Result};

const MAGIC: &[u8; 8] = b"CLFIELD\0";
const VERSION: u32 = 1;

/// Largest field accepted by [`write_csv`].
pub const CSV_MAX_NODES: usize = 1 << 20;

pub fn write_binary(field: &DiscreteField, mut w: impl Write) -> Result<()> {
    let l = &field.lattice;
    w.write_all(MAGIC)?;
    let flags = u32::from(field.periodic_time) | 2;
    for v in [VERSION, l.k as u32, field.n as u32, flags] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [l.n_time as u64, l.n_space as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in [l.extent_time, l.extent_space, l.origin_time] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * 4096);
    for chunk in field.values.chunks(4096) {
        buf.clear();
        for v in chunk {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|e| LabError::Format(format!("truncated header: {e}")))?;
    Ok(b)
}

pub fn read_binary(mut r: impl Read) -> Result<DiscreteField> {
    if &read_array::<8>(&mut r)? != MAGIC {
        return Err(LabError::Format("bad magic".into()));
    }
    let u32s: Vec<u32> = (0..4)
        .map(|_| read_array::<4>(&mut r).map(u32::from_le_bytes))
        .collect::<Result<_>>()?;
    if u32s[0] != VERSION {
        return Err(LabError::Format(format!("unsupported version {}", u32s[0])));
    }
    let (k, n, flags) = (u32s[1] as usize, u32s[2] as usize, u32s[3]);
    let n_time = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let n_space = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let extent_time = f64::from_le_bytes(read_array(&mut r)?);
    let extent_space = f64::from_le_bytes(read_array(&mut r)?);
    let origin_time = f64::from_le_bytes(read_array(&mut r)?);
    let lattice = Lattice {
        k,
        n_time,
        n_space,
        extent_time,
        extent_space,
        origin_time,
    };
    lattice.validate()?;
    let len = lattice
        .n_nodes()
        .checked_mul(n)
        .ok_or_else(|| LabError::Format("value count overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(LabError::Format(format!(
            "expected {} value bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DiscreteField::new(lattice, n, values, flags & 1 == 1)
}

/// One row per node: coordinates `t, x1, ..` then components `u0, ..`.
pub fn write_csv(field: &DiscreteField, w: impl Write) -> Result<()> {
    if field.n_nodes() > CSV_MAX_NODES {
        return Err(LabError::Parameter(format!(
            "CSV export is limited to {CSV_MAX_NODES} nodes, field has {}",
            field.n_nodes()
        )));
    }
    let l = &field.lattice;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=l.k).map(|a| format!("x{a}")));
    header.extend((0..field.n).map(|c| format!("u{c}")));
    out.write_record(&header)?;
    let mut p = vec![0.0; l.axes()];
    for node in 0..field.n_nodes() {
        l.point(node, &mut p);
        let row = p.iter().chain(field.state(node)).map(|v| v.to_string());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

impl DiscreteField {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        write_binary(self, std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        read_binary(std::io::BufReader::new(f))
    }
}
