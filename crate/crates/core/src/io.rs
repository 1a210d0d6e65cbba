//! File formats.
//!
//! Grid function container (all little-endian):
//!
//! ```text
//! b"GPGF" | u32 version = 1 | u32 dim | u32 n[dim] | (f64 lo, f64 hi)[dim] | (f64 re, f64 im)[prod n]
//! ```
//!
//! Values follow the in-memory row-major order with axis order (x, y, z).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::solver::StepDiagnostics;

pub const MAGIC: &[u8; 4] = b"GPGF";
pub const VERSION: u32 = 1;

pub fn encode_grid_function(f: &GridFunction, mut w: impl Write) -> Result<()> {
    let spec = f.spec();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.dim() as u32).to_le_bytes())?;
    for &n in spec.n() {
        let n = u32::try_from(n).map_err(|_| Error::Format(format!("axis length {n} exceeds u32")))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for a in 0..spec.dim() {
        w.write_all(&spec.lo()[a].to_le_bytes())?;
        w.write_all(&spec.hi()[a].to_le_bytes())?;
    }
    for z in f.values() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize>(r: &mut impl Read, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated while reading {what}")),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array::<4>(r, what)?))
}

fn read_f64(r: &mut impl Read, what: &str) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array::<8>(r, what)?))
}

pub fn decode_grid_function(mut r: impl Read) -> Result<GridFunction> {
    let magic = read_array::<4>(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r, "dim")? as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dim {dim} outside 1..=3")));
    }
    let mut n = Vec::with_capacity(dim);
    for a in 0..dim {
        n.push(read_u32(&mut r, &format!("n[{a}]"))? as usize);
    }
    let (mut lo, mut hi) = (Vec::with_capacity(dim), Vec::with_capacity(dim));
    for a in 0..dim {
        lo.push(read_f64(&mut r, &format!("lo[{a}]"))?);
        hi.push(read_f64(&mut r, &format!("hi[{a}]"))?);
    }
    let spec = GridSpec::new(&n, &lo, &hi).map_err(|e| Error::Format(e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    for _ in 0..spec.len() {
        let re = read_f64(&mut r, "values")?;
        let im = read_f64(&mut r, "values")?;
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after values".into()));
    }
    GridFunction::from_values(spec, values)
}

pub fn write_grid_function(path: impl AsRef<Path>, f: &GridFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_grid_function(f, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_grid_function(path: impl AsRef<Path>) -> Result<GridFunction> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    decode_grid_function(BufReader::new(file))
}

/// One line per point: `x[,y[,z]],re,im`.
pub fn write_grid_function_csv(mut w: impl Write, f: &GridFunction) -> Result<()> {
    let spec = f.spec();
    let axes = ["x", "y", "z"];
    writeln!(w, "{},re,im", axes[..spec.dim()].join(","))?;
    for (idx, z) in f.values().iter().enumerate() {
        let x = spec.coords(idx);
        for xi in &x[..spec.dim()] {
            write!(w, "{xi:e},")?;
        }
        writeln!(w, "{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

pub const HISTORY_HEADER: &str = "step,E_h,E_std,lambda,A,norm_drift,ortho_defect,increment";

pub fn write_history_csv<'a>(
    mut w: impl Write,
    history: impl IntoIterator<Item = &'a StepDiagnostics>,
) -> Result<()> {
    writeln!(w, "{HISTORY_HEADER}")?;
    for d in history {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            d.step,
            d.energy_after,
            d.energy_standard,
            d.lambda,
            d.stabilizer,
            d.norm_drift,
            d.ortho_defect,
            d.increment
        )?;
    }
    Ok(())
}
