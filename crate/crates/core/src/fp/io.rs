//! Field export: CSV snapshots and a versioned binary checkpoint.
//!
//! Checkpoint layout (little endian): magic `WZMFP\0`, `u32` version,
//! `u8` chart, `u8` boundary condition, `u64` cell count, then `lo`, `width`,
//! `t`, `absorbed` as `f64`, then the cell values.

use std::io::{Read, Write};

use super::solver::{BoundaryCondition, Field};
use crate::error::{Error, Result};
use crate::measurement::Chart;

const MAGIC: &[u8; 6] = b"WZMFP\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn chart_name(c: Chart) -> &'static str {
    match c {
        Chart::X => "x",
        Chart::Theta => "theta",
        Chart::Pi => "pi",
    }
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::ZeroFlux => "zero-flux",
        BoundaryCondition::Periodic => "periodic",
        BoundaryCondition::Absorbing => "absorbing",
    }
}

/// Columns `y,P,J` with `J` averaged from the faces to the centres; `#` lines
/// carry the chart, grid and time.
pub fn write_field_csv(field: &Field, mut w: impl Write) -> Result<()> {
    writeln!(w, "# chart={}", chart_name(field.chart))?;
    writeln!(
        w,
        "# cells={} lo={:.16e} hi={:.16e} bc={}",
        field.cells(),
        field.lo,
        field.hi(),
        bc_name(field.bc)
    )?;
    writeln!(w, "# t={:.16e}", field.t)?;
    writeln!(w, "{},P,J", chart_name(field.chart))?;
    let have_flux = field.flux.len() == field.cells() + 1;
    for (i, p) in field.values.iter().enumerate() {
        let j = if have_flux {
            0.5 * (field.flux[i] + field.flux[i + 1])
        } else {
            f64::NAN
        };
        writeln!(w, "{:.16e},{:.16e},{:.16e}", field.node(i), p, j)?;
    }
    Ok(())
}

pub fn write_checkpoint(field: &Field, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let chart = match field.chart {
        Chart::X => 0u8,
        Chart::Theta => 1,
        Chart::Pi => 2,
    };
    let bc = match field.bc {
        BoundaryCondition::ZeroFlux => 0u8,
        BoundaryCondition::Periodic => 1,
        BoundaryCondition::Absorbing => 2,
    };
    w.write_all(&[chart, bc])?;
    w.write_all(&(field.cells() as u64).to_le_bytes())?;
    for v in [field.lo, field.width, field.t, field.absorbed] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint(mut r: impl Read) -> Result<Field> {
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a field checkpoint".into()));
    }
    let mut u32b = [0u8; 4];
    r.read_exact(&mut u32b)?;
    let version = u32::from_le_bytes(u32b);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut tags = [0u8; 2];
    r.read_exact(&mut tags)?;
    let chart = match tags[0] {
        0 => Chart::X,
        1 => Chart::Theta,
        2 => Chart::Pi,
        c => return Err(Error::Checkpoint(format!("unknown chart tag {c}"))),
    };
    let bc = match tags[1] {
        0 => BoundaryCondition::ZeroFlux,
        1 => BoundaryCondition::Periodic,
        2 => BoundaryCondition::Absorbing,
        b => return Err(Error::Checkpoint(format!("unknown boundary tag {b}"))),
    };
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u64b)?;
    let cells = u64::from_le_bytes(u64b) as usize;
    let mut read_f64 = || -> Result<f64> {
        r.read_exact(&mut u64b)?;
        Ok(f64::from_le_bytes(u64b))
    };
    let (lo, width, t, absorbed) = (read_f64()?, read_f64()?, read_f64()?, read_f64()?);
    if !(width > 0.0) || cells < 3 {
        return Err(Error::Checkpoint("corrupt grid header".into()));
    }
    let values = (0..cells).map(|_| read_f64()).collect::<Result<Vec<_>>>()?;
    Ok(Field {
        chart,
        lo,
        width,
        values,
        t,
        bc,
        flux: Vec::new(),
        absorbed,
    })
}
