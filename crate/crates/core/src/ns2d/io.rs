//! Snapshot and report files.
//!
//! Binary snapshot layout, little-endian: `M: u64`, `Ny: u64`, `Ymax: f64`,
//! `Lx: f64`, `t: f64`, then `ω̂` for `m = -M..=M` (row-major, `Ny` complex
//! values per mode as `re, im` pairs), the same block for `ψ̂`, and finally
//! the mean velocity `U` as `Ny` values.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{EnergyLedger, Field2D};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub fn write_snapshot(field: &Field2D, path: &Path) -> Result<()> {
    let big_m = field.modes() as i64;
    let n = field.grid.n;
    let mut buf = Vec::with_capacity(40 + 2 * (2 * big_m as usize + 1) * n * 16 + n * 8);
    buf.extend_from_slice(&(big_m as u64).to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for v in [field.grid.y_max, field.lx, field.t] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for coeff in [Field2D::omega_coefficient as fn(&Field2D, i64, usize) -> Complex64, Field2D::psi_coefficient] {
        for m in -big_m..=big_m {
            for j in 0..n {
                let z = coeff(field, m, j);
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    for v in &field.mean {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(&buf)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Field2D> {
    let mut bytes = Vec::new();
    std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| Error::io(path, e))?;
    let mut pos = 0usize;
    let take8 = |pos: &mut usize| -> Result<[u8; 8]> {
        let chunk = bytes
            .get(*pos..*pos + 8)
            .ok_or_else(|| Error::InvalidInput(format!("truncated snapshot {}", path.display())))?;
        *pos += 8;
        Ok(chunk.try_into().expect("8-byte slice"))
    };
    let big_m = u64::from_le_bytes(take8(&mut pos)?) as usize;
    let n = u64::from_le_bytes(take8(&mut pos)?) as usize;
    let y_max = f64::from_le_bytes(take8(&mut pos)?);
    let lx = f64::from_le_bytes(take8(&mut pos)?);
    let t = f64::from_le_bytes(take8(&mut pos)?);
    let grid = GridSpec::new(y_max, n)?;
    let mut blocks = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut modes = Vec::with_capacity(2 * big_m + 1);
        for _ in 0..2 * big_m + 1 {
            let mut row = Vec::with_capacity(n);
            for _ in 0..n {
                let re = f64::from_le_bytes(take8(&mut pos)?);
                let im = f64::from_le_bytes(take8(&mut pos)?);
                row.push(Complex64::new(re, im));
            }
            modes.push(row);
        }
        // Keep m = 1..=M; negative modes are redundant.
        blocks.push(modes.split_off(big_m + 1));
    }
    let mut mean = Vec::with_capacity(n);
    for _ in 0..n {
        mean.push(f64::from_le_bytes(take8(&mut pos)?));
    }
    let psi = blocks.pop().expect("two blocks");
    let omega = blocks.pop().expect("two blocks");
    Ok(Field2D { t, lx, grid, mean, omega, psi })
}

/// Physical values along `y = y_j`: columns `x,u1,u2,omega`.
pub fn write_slice_csv(field: &Field2D, j: usize, nx: usize, path: &Path) -> Result<()> {
    let [u1, u2, w] = field.physical(nx);
    let mut out = String::from("x,u1,u2,omega\n");
    for l in 0..nx {
        let x = field.lx * l as f64 / nx as f64;
        out.push_str(&format!("{:.12e},{:.12e},{:.12e},{:.12e}\n", x, u1[j][l], u2[j][l], w[j][l]));
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(|e| Error::io(path, e))
}

/// Columns `t,kinetic,wall,strain,total,violated`.
pub fn write_ledger_csv(ledger: &EnergyLedger, path: &Path) -> Result<()> {
    let mut out = String::from("t,kinetic,wall,strain,total,violated\n");
    for r in &ledger.rows {
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
            r.t,
            r.kinetic,
            r.wall,
            r.strain,
            r.total(),
            u8::from(r.violated)
        ));
    }
    std::fs::File::create(path).and_then(|mut f| f.write_all(out.as_bytes())).map_err(|e| Error::io(path, e))
}
