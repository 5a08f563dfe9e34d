//! WIG1 binary snapshots and CSV exports.
//!
//! WIG1 layout, all little-endian: the four bytes `WIG1`, `nx` and `np`
//! as u64, then `x_min, x_max, p_min, p_max, hbar, time` as f64, then
//! `nx * np` f64 samples in row-major order (index `ix * np + ip`).

use std::io::{Read, Write};

use super::field::{Moments, WignerField};
use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"WIG1";

pub fn write_wig1<W: Write>(w: &WignerField, mut out: W) -> Result<()> {
    let g = w.grid();
    out.write_all(MAGIC)?;
    out.write_all(&(g.nx() as u64).to_le_bytes())?;
    out.write_all(&(g.np() as u64).to_le_bytes())?;
    let [x_min, x_max] = g.x_extent();
    let [p_min, p_max] = g.p_extent();
    for v in [x_min, x_max, p_min, p_max, g.hbar(), w.time()] {
        out.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * g.len());
    for v in w.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_wig1<R: Read>(mut input: R) -> Result<WignerField> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected WIG1")));
    }
    let mut b8 = [0u8; 8];
    let mut read_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nx = read_u64(&mut input)? as usize;
    let np = read_u64(&mut input)? as usize;
    let mut head = [0f64; 6];
    for h in head.iter_mut() {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        *h = f64::from_le_bytes(b);
    }
    let [x_min, x_max, p_min, p_max, hbar, time] = head;
    let grid = PhaseSpaceGrid::new(nx, np, [x_min, x_max], [p_min, p_max], hbar)?;
    let mut raw = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut raw).map_err(|e| Error::Format(format!("truncated sample block: {e}")))?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    WignerField::new(grid, values, time)
}

/// Writes `axis,coordinate,density` rows, x marginal first then p.
pub fn write_marginals_csv<W: Write>(w: &WignerField, out: W) -> Result<()> {
    let g = w.grid();
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["axis", "coordinate", "density"])?;
    for (i, v) in w.x_marginal().iter().enumerate() {
        wr.write_record(["x", &g.x(i).to_string(), &v.to_string()])?;
    }
    for (j, v) in w.p_marginal().iter().enumerate() {
        wr.write_record(["p", &g.p(j).to_string(), &v.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes a single-row moments table.
pub fn write_moments_csv<W: Write>(time: f64, m: &Moments, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["t", "mean_x", "mean_p", "var_x", "cov_xp", "var_p"])?;
    wr.write_record(
        [time, m.mean_x, m.mean_p, m.var_x(), m.cov_xp(), m.var_p()].map(|v| v.to_string()),
    )?;
    wr.flush()?;
    Ok(())
}
