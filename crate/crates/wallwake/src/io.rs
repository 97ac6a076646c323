//! On-disk artifact formats: a binary field container and CSV curve tables.
//!
//! Pipelines exchange three kinds of artifacts. Configuration and summary
//! reports are JSON and owned by the harness; decay and sweep curves are CSV
//! so they load anywhere; sampled fields use the compact binary container
//! defined here, because a quarter-million `f64` samples per field make text
//! formats both slow and lossy.
//!
//! # Container layout
//!
//! All integers and floats are little-endian. A file holds one field:
//!
//! ```text
//! offset  size  content
//!      0     8  magic bytes "WALLWAKE"
//!      8     4  format version, u32 (currently 1)
//!     12     4  kind, u32: 1 = scalar field, 2 = velocity field
//!     16     8  nx, u64 — number of x samples
//!     24     8  ny, u64 — number of wall-normal samples
//!     32     8  x0, f64 — first x node
//!     40     8  dx, f64 — uniform x spacing
//!     48  8·ny  wall-normal nodes, f64 each, strictly increasing from 1
//!      …  8·nx·ny        scalar samples, row-major (row = constant y)
//!      […  8·nx·ny]       second component, present only for kind 2
//! ```
//!
//! Readers validate the magic, version, kind, and grid invariants before
//! touching the payload and fail with [`Error::Format`] on any mismatch, so
//! a truncated or foreign file cannot come back as a silently wrong field.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{PhysicalVectorField, ScalarField};
use crate::grid::{WallNormalGrid, XGrid};

/// Leading magic bytes of the binary container.
pub const MAGIC: &[u8; 8] = b"WALLWAKE";

/// Current container format version.
pub const FORMAT_VERSION: u32 = 1;

const KIND_SCALAR: u32 = 1;
const KIND_VECTOR: u32 = 2;

fn write_header(w: &mut impl Write, kind: u32, x: &XGrid, y: &WallNormalGrid) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&kind.to_le_bytes())?;
    w.write_all(&(x.len() as u64).to_le_bytes())?;
    w.write_all(&(y.len() as u64).to_le_bytes())?;
    w.write_all(&x.x0().to_le_bytes())?;
    w.write_all(&x.dx().to_le_bytes())?;
    for &node in y.nodes() {
        w.write_all(&node.to_le_bytes())?;
    }
    Ok(())
}

fn write_samples(w: &mut impl Write, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 8);
    for &v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_samples(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks_exact yields 8 bytes")))
        .collect())
}

fn read_header(r: &mut impl Read, expect_kind: u32) -> Result<(XGrid, WallNormalGrid)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}; not a field container",
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let kind = read_u32(r)?;
    if kind != expect_kind {
        return Err(Error::Format(format!(
            "container holds kind {kind}, expected {expect_kind}"
        )));
    }
    let nx = read_u64(r)? as usize;
    let ny = read_u64(r)? as usize;
    const MAX_SAMPLES: usize = 1 << 28; // 2 GiB of f64 — reject absurd headers
    if nx == 0 || ny == 0 || nx.saturating_mul(ny) > MAX_SAMPLES {
        return Err(Error::Format(format!("implausible field shape {nx} x {ny}")));
    }
    let x0 = read_f64(r)?;
    let dx = read_f64(r)?;
    let x = XGrid::new(x0, dx, nx).map_err(|e| Error::Format(format!("x grid: {e}")))?;
    let nodes = read_samples(r, ny)?;
    let y = WallNormalGrid::from_nodes(nodes).map_err(|e| Error::Format(format!("y grid: {e}")))?;
    Ok((x, y))
}

/// Writes one scalar field to `path` in the binary container format.
pub fn write_scalar_field(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_SCALAR, field.x_grid(), field.y_grid())?;
    write_samples(&mut w, field.data())?;
    w.flush()?;
    Ok(())
}

/// Reads a scalar field previously written by [`write_scalar_field`].
pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let (x, y) = read_header(&mut r, KIND_SCALAR)?;
    let data = read_samples(&mut r, x.len() * y.len())?;
    let mut field = ScalarField::zeros(x, y);
    for j in 0..field.y_grid().len() {
        for m in 0..x.len() {
            field.set(m, j, data[j * x.len() + m]);
        }
    }
    Ok(field)
}

/// Writes a velocity field (both components) to `path`.
pub fn write_vector_field(path: &Path, field: &PhysicalVectorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_VECTOR, field.x_grid(), field.y_grid())?;
    write_samples(&mut w, field.u.data())?;
    write_samples(&mut w, field.v.data())?;
    w.flush()?;
    Ok(())
}

/// Reads a velocity field previously written by [`write_vector_field`].
pub fn read_vector_field(path: &Path) -> Result<PhysicalVectorField> {
    let mut r = BufReader::new(File::open(path)?);
    let (x, y) = read_header(&mut r, KIND_VECTOR)?;
    let n = x.len() * y.len();
    let du = read_samples(&mut r, n)?;
    let dv = read_samples(&mut r, n)?;
    let mut field = PhysicalVectorField::zeros(x, y);
    for j in 0..field.y_grid().len() {
        for m in 0..x.len() {
            field.u.set(m, j, du[j * x.len() + m]);
            field.v.set(m, j, dv[j * x.len() + m]);
        }
    }
    Ok(field)
}

/// Writes a numeric curve table as CSV: one header row, then one row per
/// entry with full `f64` round-trip precision.
pub fn write_csv(path: &Path, headers: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        if row.len() != headers.len() {
            return Err(Error::Format(format!(
                "CSV row has {} fields, header has {}",
                row.len(),
                headers.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(headers).map_err(csv_err)?;
    for row in rows {
        let rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV written by [`write_csv`]; returns headers and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let mut row = Vec::with_capacity(rec.len());
        for cell in rec.iter() {
            row.push(cell.parse::<f64>().map_err(|e| {
                Error::Format(format!("non-numeric CSV cell {cell:?}: {e}"))
            })?);
        }
        rows.push(row);
    }
    Ok((headers, rows))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("wallwake-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn scalar_field_round_trips_bit_exact() {
        let x = XGrid::centered(2.0, 32).unwrap();
        let y = WallNormalGrid::stretched(9.0, 0.05, 1.1).unwrap();
        let field = ScalarField::from_fn(x, y, |xv, yv| (3.1 * xv).sin() * (-0.7 * yv).exp());
        let path = tmp("scalar.wwf");
        write_scalar_field(&path, &field).unwrap();
        let back = read_scalar_field(&path).unwrap();
        assert_eq!(field, back, "binary container must round-trip bit-exactly");
    }

    #[test]
    fn vector_field_round_trips_bit_exact() {
        let x = XGrid::centered(1.5, 16).unwrap();
        let y = WallNormalGrid::uniform(4.0, 21).unwrap();
        let field = PhysicalVectorField::from_fns(
            x,
            y,
            |xv, yv| xv * yv,
            |xv, yv| (xv - yv).cos(),
        );
        let path = tmp("vector.wwf");
        write_vector_field(&path, &field).unwrap();
        let back = read_vector_field(&path).unwrap();
        assert_eq!(field, back);
    }

    #[test]
    fn reader_rejects_foreign_and_mismatched_files() {
        let path = tmp("bogus.wwf");
        let mut f = File::create(&path).unwrap();
        f.write_all(b"NOTAFILEATALL___").unwrap();
        drop(f);
        assert!(matches!(read_scalar_field(&path), Err(Error::Format(_))));

        // a scalar container must not open as a vector field
        let x = XGrid::centered(1.0, 8).unwrap();
        let y = WallNormalGrid::uniform(2.0, 5).unwrap();
        let field = ScalarField::from_fn(x, y, |a, b| a + b);
        let spath = tmp("kind.wwf");
        write_scalar_field(&spath, &field).unwrap();
        assert!(matches!(read_vector_field(&spath), Err(Error::Format(_))));

        // truncation is an error, not a short field
        let bytes = std::fs::read(&spath).unwrap();
        let tpath = tmp("short.wwf");
        std::fs::write(&tpath, &bytes[..bytes.len() - 9]).unwrap();
        assert!(read_scalar_field(&tpath).is_err());
    }

    #[test]
    fn csv_round_trips_full_precision() {
        let path = tmp("curve.csv");
        let rows = vec![
            vec![0.1, 1.0 / 3.0, std::f64::consts::PI],
            vec![-4.0e-300, 2.5e280, 0.0],
        ];
        write_csv(&path, &["a", "b", "c"], &rows).unwrap();
        let (headers, back) = read_csv(&path).unwrap();
        assert_eq!(headers, vec!["a", "b", "c"]);
        assert_eq!(back, rows, "CSV must round-trip f64 exactly via debug formatting");
        assert!(write_csv(&path, &["a"], &rows).is_err(), "ragged rows are rejected");
    }
}
