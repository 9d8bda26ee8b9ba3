//! Field snapshots: flat little-endian binary and small-grid CSV.
//!
//! Binary layout: `dim: u64`, `n: u64`, `L: f64`, then `n^dim` interleaved
//! `(re, im)` pairs of `f64`, all little-endian.

use std::io::{Read, Write};

use super::{Field, GridSpec, C64};
use crate::error::{Error, Result};

pub fn write_binary<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let g = f.grid();
    w.write_all(&(g.dim as u64).to_le_bytes())?;
    w.write_all(&(g.n as u64).to_le_bytes())?;
    w.write_all(&g.half_length.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * f.len());
    for v in f.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn to_bytes(f: &Field) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 16 * f.len());
    write_binary(f, &mut out).expect("writing to a Vec cannot fail");
    out
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Field> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let dim = u64::from_le_bytes(next(&mut r)?) as usize;
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let half_length = f64::from_le_bytes(next(&mut r)?);
    let grid = GridSpec::new(dim, n, half_length)
        .map_err(|e| Error::Format(format!("bad field header: {e}")))?;
    let mut payload = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut payload)
        .map_err(|e| Error::Format(format!("truncated field payload: {e}")))?;
    let values = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    Field::new(grid, values)
}

/// Largest grid written as CSV.
pub const CSV_MAX_NODES: usize = 1 << 16;

pub fn write_csv<W: Write>(f: &Field, mut w: W) -> Result<()> {
    let g = f.grid();
    if g.len() > CSV_MAX_NODES {
        return Err(Error::Format(format!(
            "grid of {} nodes is too large for CSV (max {CSV_MAX_NODES})",
            g.len()
        )));
    }
    match g.dim {
        1 => writeln!(w, "x,re,im")?,
        _ => writeln!(w, "x,y,re,im")?,
    }
    for (i, v) in f.values().iter().enumerate() {
        let [x, y] = g.point(i);
        match g.dim {
            1 => writeln!(w, "{x:e},{:e},{:e}", v.re, v.im)?,
            _ => writeln!(w, "{x:e},{y:e},{:e},{:e}", v.re, v.im)?,
        }
    }
    Ok(())
}

/// Read a CSV written by [`write_csv`] back onto `grid`.
pub fn read_csv(text: &str, grid: GridSpec) -> Result<Field> {
    let cols = grid.dim + 2;
    let values = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != cols {
                return Err(Error::Format(format!("expected {cols} columns: {line}")));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("{e}: {s}")))
            };
            Ok(C64::new(num(parts[cols - 2])?, num(parts[cols - 1])?))
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(grid, values)
}
