//! Binary field files: a 64-byte text header followed by little-endian f64 samples.
//!
//! Header: `HSF1 rank=<r> nx=<..> ny=<..> nz=<..> L=<..> H=<..> nt=<..>`, space padded, last byte `\n`.
//! With nt > 0 the block starts with the nt sample times; nt = 0 means no time axis.

use super::{Field, Rank, SlabGrid};
use crate::error::{Error, Result};
use std::io::{Read, Write};

pub(crate) const HEADER_LEN: usize = 64;

fn header(f: &Field) -> Result<[u8; HEADER_LEN]> {
    let g = &f.grid;
    let nt = f.time_axis.as_ref().map_or(0, |t| t.len());
    let s = format!(
        "HSF1 rank={} nx={} ny={} nz={} L={} H={} nt={}",
        f.rank.as_u8(),
        g.nx,
        g.ny,
        g.nz,
        g.half_width,
        g.height,
        nt
    );
    if s.len() > HEADER_LEN - 1 {
        return Err(Error::Format(format!("header too long: {s}")));
    }
    let mut h = [b' '; HEADER_LEN];
    h[..s.len()].copy_from_slice(s.as_bytes());
    h[HEADER_LEN - 1] = b'\n';
    Ok(h)
}

pub fn write_field<W: Write>(f: &Field, mut w: W) -> Result<()> {
    f.validate()?;
    if f.grid.extended {
        return Err(Error::Format("extended fields are not stored; restrict first".into()));
    }
    w.write_all(&header(f)?)?;
    let mut buf = Vec::with_capacity(8 * (f.values.len() + f.ntimes()));
    if let Some(t) = &f.time_axis {
        t.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    }
    f.values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    w.write_all(&buf)?;
    Ok(())
}

pub(crate) fn parse_kv<T: std::str::FromStr>(tok: Option<&str>, key: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Format(format!("missing {key}")))?;
    let v = tok
        .strip_prefix(key)
        .and_then(|s| s.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("expected {key}=, got {tok}")))?;
    v.parse().map_err(|_| Error::Format(format!("bad value for {key}: {v}")))
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated data: {e}")))?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn read_field<R: Read>(mut r: R) -> Result<Field> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).map_err(|e| Error::Format(format!("short header: {e}")))?;
    let text = std::str::from_utf8(&h).map_err(|_| Error::Format("header is not utf-8".into()))?;
    let mut it = text.split_whitespace();
    if it.next() != Some("HSF1") {
        return Err(Error::Format("bad magic".into()));
    }
    let rank = Rank::from_u8(parse_kv(it.next(), "rank")?)?;
    let nx = parse_kv(it.next(), "nx")?;
    let ny = parse_kv(it.next(), "ny")?;
    let nz = parse_kv(it.next(), "nz")?;
    let l = parse_kv(it.next(), "L")?;
    let hh = parse_kv(it.next(), "H")?;
    let nt: usize = parse_kv(it.next(), "nt")?;
    let grid = SlabGrid::new(l, hh, nx, ny, nz).map_err(|e| Error::Format(e.to_string()))?;
    let time_axis = if nt > 0 { Some(read_f64s(&mut r, nt)?) } else { None };
    let n = grid.n_nodes() * rank.components() * nt.max(1);
    let values = read_f64s(&mut r, n)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    let f = Field { grid, rank, values, time_axis };
    f.validate().map_err(|e| Error::Format(e.to_string()))?;
    Ok(f)
}
