//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `NLSVSNAP` |
//! | 4     | format version (`u32`, currently 1) |
//! | 4     | grid kind (`u32`: 0 radial, 1 Cartesian) |
//! | 8     | dimension (`u64`: radial intervals `n`, or points per axis `m`) |
//! | 8     | extent (`f64`: `r_max`, or half-width `l`) |
//! | 8     | node count (`u64`) |
//! | 8     | time stamp (`f64`) |
//! | 16 each | values, `re` then `im` as `f64` |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{CartesianGrid, Grid, RadialGrid};

const MAGIC: &[u8; 8] = b"NLSVSNAP";
const VERSION: u32 = 1;

pub fn write_snapshot_to<W: Write>(mut out: W, field: &ComplexField, t: f64) -> Result<()> {
    let (kind, dim, extent) = match field.grid() {
        Grid::Radial(g) => (0u32, g.intervals() as u64, g.r_max()),
        Grid::Cartesian(g) => (1u32, g.points_per_axis() as u64, g.half_width()),
    };
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&kind.to_le_bytes())?;
    out.write_all(&dim.to_le_bytes())?;
    out.write_all(&extent.to_le_bytes())?;
    out.write_all(&(field.len() as u64).to_le_bytes())?;
    out.write_all(&t.to_le_bytes())?;
    for v in field.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_snapshot(path: &Path, field: &ComplexField, t: f64) -> Result<()> {
    write_snapshot_to(BufWriter::new(File::create(path)?), field, t)
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Snapshot(format!("truncated header or data: {e}")))?;
    Ok(buf)
}

/// Returns the field and its time stamp.
pub fn read_snapshot_from<R: Read>(mut input: R) -> Result<(ComplexField, f64)> {
    let magic: [u8; 8] = read_array(&mut input)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input)?);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let kind = u32::from_le_bytes(read_array(&mut input)?);
    let dim = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let extent = f64::from_le_bytes(read_array(&mut input)?);
    let count = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let t = f64::from_le_bytes(read_array(&mut input)?);
    let grid = match kind {
        0 => Grid::Radial(RadialGrid::new(extent, dim)?),
        1 => Grid::Cartesian(CartesianGrid::new(extent, dim)?),
        k => return Err(Error::Snapshot(format!("unknown grid kind {k}"))),
    };
    if count != grid.len() {
        return Err(Error::Snapshot(format!(
            "node count {count} does not match grid ({})",
            grid.len()
        )));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_array(&mut input)?);
        let im = f64::from_le_bytes(read_array(&mut input)?);
        values.push(Complex64::new(re, im));
    }
    Ok((ComplexField::new(grid, values)?, t))
}

pub fn read_snapshot(path: &Path) -> Result<(ComplexField, f64)> {
    read_snapshot_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_smooth_field, seeded_rng};

    #[test]
    fn roundtrip_is_bit_exact() {
        for grid in [
            Grid::Radial(RadialGrid::new(12.0, 256).unwrap()),
            Grid::Cartesian(CartesianGrid::new(6.0, 8).unwrap()),
        ] {
            let f = random_smooth_field(&grid, &mut seeded_rng(3));
            let mut buf = Vec::new();
            write_snapshot_to(&mut buf, &f, 1.25).unwrap();
            assert_eq!(buf.len(), 48 + 16 * f.len());
            let (g, t) = read_snapshot_from(buf.as_slice()).unwrap();
            assert_eq!(t, 1.25);
            assert_eq!(g.grid(), f.grid());
            assert_eq!(g.values(), f.values());
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(read_snapshot_from(&b"NOTASNAP"[..]).is_err());
        let f = ComplexField::zeros(&Grid::Radial(RadialGrid::new(5.0, 16).unwrap()));
        let mut buf = Vec::new();
        write_snapshot_to(&mut buf, &f, 0.0).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot_from(buf.as_slice()), Err(Error::Snapshot(_))));
    }
}
