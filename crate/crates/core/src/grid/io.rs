//! PPGF binary grid-function files and CSV export.
//!
//! Layout (little endian): `b"PPGF"`, `u32` version, `u8` axis count,
//! `u32` resolution per axis, `f64` values row-major, then the domain mask
//! packed eight nodes per byte, least significant bit first.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Grid, GridError, GridFunction, Polydisc};

pub const MAGIC: &[u8; 4] = b"PPGF";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_grid_function<W: Write>(f: &GridFunction, mut w: W) -> Result<(), GridError> {
    let grid = f.grid();
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let ndim = u8::try_from(grid.ndim())
        .map_err(|_| GridError::Format(format!("{} axes exceed u8", grid.ndim())))?;
    w.write_all(&[ndim])?;
    for &r in grid.resolution() {
        let r = u32::try_from(r).map_err(|_| GridError::Format(format!("resolution {r} exceeds u32")))?;
        w.write_all(&r.to_le_bytes())?;
    }
    for (node, v) in f.values().iter().enumerate() {
        if f.in_domain(node) && (v.is_nan() || *v == f64::INFINITY) {
            return Err(GridError::InvalidValue { node, value: *v });
        }
        w.write_all(&v.to_le_bytes())?;
    }
    for chunk in f.mask().chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |acc, (bit, set)| if *set { acc | (1 << bit) } else { acc });
        w.write_all(&[byte])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid function, attaching the lattice to `polydisc`.
pub fn read_grid_function<R: Read>(mut r: R, polydisc: Option<Polydisc>) -> Result<GridFunction, GridError> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(GridError::Format(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    read_exact(&mut r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != FORMAT_VERSION {
        return Err(GridError::Format(format!("unsupported version {version}")));
    }
    let mut byte = [0u8; 1];
    read_exact(&mut r, &mut byte, "axis count")?;
    let ndim = byte[0] as usize;
    if ndim == 0 || ndim % 2 != 0 {
        return Err(GridError::Format(format!("axis count {ndim} is not a positive even number")));
    }
    let mut resolution = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        read_exact(&mut r, &mut word, "resolution")?;
        resolution.push(u32::from_le_bytes(word) as usize);
    }
    let polydisc = polydisc.unwrap_or_else(|| Polydisc::unit(ndim / 2));
    if polydisc.dim() * 2 != ndim {
        return Err(GridError::Format(format!(
            "file has {ndim} axes but polydisc has {} coordinates",
            polydisc.dim()
        )));
    }
    let grid = Grid::with_resolutions(polydisc, resolution)
        .map_err(|e| GridError::Format(format!("bad dimensions: {e}")))?;
    let n = grid.node_count();
    let mut raw = vec![0u8; n.checked_mul(8).ok_or(GridError::TooLarge(n as u128 * 8))?];
    read_exact(&mut r, &mut raw, "values")?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut packed = vec![0u8; n.div_ceil(8)];
    read_exact(&mut r, &mut packed, "mask")?;
    let mask: Vec<bool> = (0..n).map(|i| packed[i / 8] & (1 << (i % 8)) != 0).collect();
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(GridError::Format("trailing bytes after mask".into()));
    }
    GridFunction::new(grid, values, mask).map_err(|e| GridError::Format(e.to_string()))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), GridError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => GridError::Format(format!("truncated file while reading {what}")),
        _ => GridError::Io(e),
    })
}

pub fn save_grid_function(f: &GridFunction, path: impl AsRef<Path>) -> Result<(), GridError> {
    write_grid_function(f, BufWriter::new(File::create(path)?))
}

/// Loads a grid function over the unit polydisc of matching dimension.
pub fn load_grid_function(path: impl AsRef<Path>) -> Result<GridFunction, GridError> {
    read_grid_function(BufReader::new(File::open(path)?), None)
}

/// Loads a grid function and places its lattice over `polydisc`.
pub fn load_grid_function_on(path: impl AsRef<Path>, polydisc: Polydisc) -> Result<GridFunction, GridError> {
    read_grid_function(BufReader::new(File::open(path)?), Some(polydisc))
}

/// One row per node: real-axis coordinates, then the value (`nan` off-domain).
pub fn export_csv<W: Write>(f: &GridFunction, w: W) -> Result<(), GridError> {
    let mut w = BufWriter::new(w);
    let grid = f.grid();
    let header: Vec<String> = (0..grid.complex_dim())
        .flat_map(|j| [format!("re{j}"), format!("im{j}")])
        .chain(std::iter::once("value".to_string()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let mut buf = vec![Default::default(); grid.complex_dim()];
    for node in 0..grid.node_count() {
        grid.coords_into(node, &mut buf);
        for z in &buf {
            write!(w, "{},{},", z.re, z.im)?;
        }
        if f.in_domain(node) {
            writeln!(w, "{}", f.value(node))?;
        } else {
            writeln!(w, "nan")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample() -> GridFunction {
        let g = make_grid(Polydisc::unit(1), 5).unwrap();
        GridFunction::from_fn(&g, |z| if z[0].re == 0.5 { f64::NEG_INFINITY } else { z[0].norm() - 0.3 })
            .unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let f = sample();
        let mut buf = Vec::new();
        write_grid_function(&f, &mut buf).unwrap();
        let back = read_grid_function(buf.as_slice(), None).unwrap();
        assert_eq!(back, f);
        assert!(back.values().iter().any(|v| *v == f64::NEG_INFINITY));
    }

    #[test]
    fn header_layout() {
        let mut buf = Vec::new();
        write_grid_function(&sample(), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"PPGF");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(buf[8], 2);
        assert_eq!(u32::from_le_bytes(buf[9..13].try_into().unwrap()), 5);
        assert_eq!(buf.len(), 4 + 4 + 1 + 2 * 4 + 25 * 8 + 4);
    }

    #[test]
    fn truncated_file_is_format_error() {
        let mut buf = Vec::new();
        write_grid_function(&sample(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_grid_function(buf.as_slice(), None), Err(GridError::Format(_))));
    }

    #[test]
    fn wrong_magic_is_format_error() {
        let mut buf = Vec::new();
        write_grid_function(&sample(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(read_grid_function(buf.as_slice(), None), Err(GridError::Format(_))));
    }

    #[test]
    fn bad_version_and_dims_are_format_errors() {
        let mut buf = Vec::new();
        write_grid_function(&sample(), &mut buf).unwrap();
        let mut v = buf.clone();
        v[4] = 2;
        assert!(matches!(read_grid_function(v.as_slice(), None), Err(GridError::Format(_))));
        let mut d = buf.clone();
        d[8] = 3;
        assert!(matches!(read_grid_function(d.as_slice(), None), Err(GridError::Format(_))));
        let mut e = buf;
        e[9] = 4; // even resolution
        assert!(matches!(read_grid_function(e.as_slice(), None), Err(GridError::Format(_))));
    }

    #[test]
    fn positive_infinity_rejected_at_write() {
        let f = sample();
        let (grid, mut values, mask) = f.into_parts();
        let node = grid.center_node();
        values[node] = f64::INFINITY;
        // bypass the constructor check to exercise the writer
        let bad = GridFunction { grid, values, mask };
        assert!(matches!(write_grid_function(&bad, Vec::new()), Err(GridError::InvalidValue { .. })));
    }

    #[test]
    fn csv_has_row_per_node() {
        let f = sample();
        let mut out = Vec::new();
        export_csv(&f, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 25);
        assert!(text.starts_with("re0,im0,value"));
    }
}
