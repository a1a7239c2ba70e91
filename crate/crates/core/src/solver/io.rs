//! CSV and binary dumps of discrete fields.

use std::io::{Read, Write};

use super::grid::{Frame, Grid, NodeKind};
use super::scheme::DiscreteField;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OSCF";
const VERSION: u32 = 1;

impl DiscreteField {
    /// Writes `x,y,value,kind` rows in node order; exterior nodes are skipped.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value,kind")?;
        for k in 0..self.grid.len() {
            let kind = match self.kinds[k] {
                NodeKind::Interior => "interior",
                NodeKind::Boundary => "boundary",
                NodeKind::Exterior => continue,
            };
            let (i, j) = self.grid.coords(k);
            let p = self.grid.point(i, j);
            writeln!(w, "{},{},{},{}", p[0], p[1], self.values[k], kind)?;
        }
        Ok(())
    }

    /// Little-endian header (magic, version, cols, rows, periodic, h, origin,
    /// e1, e2) followed by row-major values with NaN at exterior nodes.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(g.cols as u64).to_le_bytes())?;
        w.write_all(&(g.rows as u64).to_le_bytes())?;
        w.write_all(&[g.periodic as u8])?;
        for v in [
            g.h,
            g.origin[0],
            g.origin[1],
            g.frame.e1[0],
            g.frame.e1[1],
            g.frame.e2[0],
            g.frame.e2[1],
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for (v, k) in self.values.iter().zip(&self.kinds) {
            let v = if *k == NodeKind::Exterior {
                f64::NAN
            } else {
                *v
            };
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Grid and raw values read back from a binary dump.
pub fn read_binary<R: Read>(mut r: R) -> Result<(Grid, Vec<f64>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Invalid("not a field dump".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(Error::Invalid("unsupported field dump version".into()));
    }
    let mut b8 = [0u8; 8];
    let mut next_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let cols = next_u64(&mut r)? as usize;
    let rows = next_u64(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut f = [0.0; 7];
    for v in &mut f {
        *v = f64::from_bits(next_u64(&mut r)?);
    }
    let grid = Grid::new(
        [f[1], f[2]],
        Frame {
            e1: [f[3], f[4]],
            e2: [f[5], f[6]],
        },
        f[0],
        cols,
        rows,
        flag[0] != 0,
    )?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(f64::from_bits(next_u64(&mut r)?));
    }
    Ok((grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::EllipticOperator;
    use crate::solver::{Region, Scheme, SchemeConfig};

    #[test]
    fn binary_round_trip_and_csv() {
        let grid = Grid::new(
            [0.1, 0.2],
            Frame::from_normal([0.6, 0.8]),
            0.125,
            9,
            9,
            false,
        )
        .unwrap();
        let s = Scheme::new(
            &EllipticOperator::laplacian(),
            grid,
            Region::Rect {
                width: 1.0,
                depth: 1.0,
            },
            SchemeConfig::default(),
        )
        .unwrap();
        let f = s.solve_dirichlet(&|p| p[0] - p[1]).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        let (g, v) = read_binary(buf.as_slice()).unwrap();
        assert_eq!(g, f.grid);
        assert_eq!(v, f.values);
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 82);
        assert!(read_binary(&b"nope"[..]).is_err());
    }
}
