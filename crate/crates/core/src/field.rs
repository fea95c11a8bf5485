//! Gridded spatio-temporal fields and their on-disk snapshot format.
//!
//! A snapshot file is a single line of UTF-8 JSON (the [`SnapshotHeader`])
//! terminated by `\n`, followed by `nt * nx [* ny]` little-endian `f64`
//! values in row-major `(t, x[, y])` order.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid metadata. `dt` is the spacing between stored snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
    pub nt: usize,
    pub dx: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
    pub dt: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(default)]
    pub t0: f64,
}

impl GridSpec {
    pub fn new_1d(nx: usize, dx: f64, x0: f64, nt: usize, dt: f64, t0: f64) -> Self {
        GridSpec {
            nx,
            ny: None,
            nt,
            dx,
            dy: None,
            dt,
            x0,
            y0: None,
            t0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new_2d(nx: usize, dx: f64, x0: f64, ny: usize, dy: f64, y0: f64, nt: usize, dt: f64, t0: f64) -> Self {
        GridSpec {
            nx,
            ny: Some(ny),
            nt,
            dx,
            dy: Some(dy),
            dt,
            x0,
            y0: Some(y0),
            t0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::InvalidGrid(format!("nx = {} < 3", self.nx)));
        }
        if self.nt < 3 {
            return Err(Error::InvalidGrid(format!("nt = {} < 3", self.nt)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) || !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid("dx and dt must be positive".into()));
        }
        match (self.ny, self.dy) {
            (None, None) => {}
            (Some(ny), Some(dy)) => {
                if ny < 3 {
                    return Err(Error::InvalidGrid(format!("ny = {ny} < 3")));
                }
                if !(dy > 0.0 && dy.is_finite()) {
                    return Err(Error::InvalidGrid("dy must be positive".into()));
                }
            }
            _ => return Err(Error::InvalidGrid("ny and dy must be given together".into())),
        }
        Ok(())
    }

    pub fn is_2d(&self) -> bool {
        self.ny.is_some()
    }

    pub fn ny_or_one(&self) -> usize {
        self.ny.unwrap_or(1)
    }

    /// Number of values in one snapshot.
    pub fn spatial_len(&self) -> usize {
        self.nx * self.ny_or_one()
    }

    pub fn len(&self) -> usize {
        self.nt * self.spatial_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        match self.ny {
            Some(ny) => vec![self.nt, self.nx, ny],
            None => vec![self.nt, self.nx],
        }
    }

    pub fn axis_len(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => self.nt,
            Axis::X => self.nx,
            Axis::Y => self.ny_or_one(),
        }
    }

    /// Distance in the flat buffer between neighbours along `axis`.
    pub fn stride(&self, axis: Axis) -> usize {
        match axis {
            Axis::T => self.spatial_len(),
            Axis::X => self.ny_or_one(),
            Axis::Y => 1,
        }
    }

    pub fn spacing(&self, axis: Axis) -> Option<f64> {
        match axis {
            Axis::T => Some(self.dt),
            Axis::X => Some(self.dx),
            Axis::Y => self.dy,
        }
    }

    pub fn index(&self, t: usize, x: usize, y: usize) -> usize {
        (t * self.nx + x) * self.ny_or_one() + y
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0.unwrap_or(0.0) + j as f64 * self.dy.unwrap_or(0.0)
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }
}

/// Coordinate axes of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    T,
    X,
    Y,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::T => "t",
            Axis::X => "x",
            Axis::Y => "y",
        }
    }
}

/// Grid point `(t, x, y)`; `y` is zero for 1D fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: usize,
    pub x: usize,
    pub y: usize,
}

/// A measured or simulated state `u(t, x[, y])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::InvalidField(format!(
                "expected {} values for shape {:?}, got {}",
                grid.len(),
                grid.shape(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at flat index {i}")));
        }
        Ok(Field { grid, values })
    }

    /// Builds a field by evaluating `f(t, x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        grid.validate()?;
        let mut values = Vec::with_capacity(grid.len());
        for n in 0..grid.nt {
            for i in 0..grid.nx {
                for j in 0..grid.ny_or_one() {
                    values.push(f(grid.t(n), grid.x(i), grid.y(j)));
                }
            }
        }
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, t: usize, x: usize, y: usize) -> f64 {
        self.values[self.grid.index(t, x, y)]
    }

    pub fn snapshot(&self, t: usize) -> &[f64] {
        let s = self.grid.spatial_len();
        &self.values[t * s..(t + 1) * s]
    }

    /// Sample standard deviation over every value in the field.
    pub fn std(&self) -> f64 {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let ss: f64 = self.values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same grid with different values; the caller guarantees the length.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), self.values.len());
        Field {
            grid: self.grid.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub endianness: String,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<crate::solvers::NoiseSpec>,
}

pub const SNAPSHOT_FORMAT: &str = "pdesift-field";
pub const SNAPSHOT_VERSION: u32 = 1;

impl SnapshotHeader {
    pub fn for_grid(grid: &GridSpec) -> Self {
        SnapshotHeader {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            endianness: "little".to_string(),
            grid: grid.clone(),
            system: None,
            coefficients: BTreeMap::new(),
            noise: None,
        }
    }
}

pub fn write_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, field: &Field) -> Result<()> {
    if header.grid != *field.grid() {
        return Err(Error::Format("header grid does not match field grid".into()));
    }
    let line = serde_json::to_string(header)?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<(SnapshotHeader, Field)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(Error::Format("missing header line".into()));
    }
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    if header.format != SNAPSHOT_FORMAT {
        return Err(Error::Format(format!("unknown format `{}`", header.format)));
    }
    if header.endianness != "little" {
        return Err(Error::Format(format!("unsupported endianness `{}`", header.endianness)));
    }
    header.grid.validate()?;
    let n = header.grid.len();
    let mut bytes = Vec::with_capacity(n * 8);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != n * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            n * 8,
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::new(header.grid.clone(), values)?;
    Ok((header, field))
}

pub fn save_snapshot(path: &Path, header: &SnapshotHeader, field: &Field) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), header, field)
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, Field)> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new_1d(5, 0.25, 0.0, 4, 0.1, 0.0)
    }

    #[test]
    fn rejects_small_or_inconsistent_grids() {
        let mut g = grid();
        g.nx = 2;
        assert!(g.validate().is_err());
        let mut g = grid();
        g.ny = Some(4);
        assert!(g.validate().is_err());
        let mut g = grid();
        g.dt = 0.0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(Field::new(grid(), vec![0.0; 19]).is_err());
        let mut v = vec![0.0; 20];
        v[7] = f64::NAN;
        assert!(Field::new(grid(), v).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let g = GridSpec::new_2d(3, 1.0, 0.0, 4, 1.0, 0.0, 3, 1.0, 0.0);
        let f = Field::from_fn(g.clone(), |t, x, y| 100.0 * t + 10.0 * x + y).unwrap();
        assert_eq!(f.at(2, 1, 3), 213.0);
        assert_eq!(f.values()[g.index(2, 1, 3)], 213.0);
        assert_eq!(g.stride(Axis::T), 12);
        assert_eq!(g.stride(Axis::X), 4);
    }

    #[test]
    fn snapshot_round_trip() {
        let f = Field::from_fn(grid(), |t, x, _| (t + 1.0) * x.sin()).unwrap();
        let mut header = SnapshotHeader::for_grid(f.grid());
        header.system = Some("heat1d".into());
        header.coefficients.insert("alpha".into(), 2.0);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &header, &f).unwrap();
        let newline = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(buf.len() - newline - 1, 20 * 8);
        let (h2, f2) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(h2, header);
        assert_eq!(f2, f);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let f = Field::from_fn(grid(), |_, x, _| x).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &SnapshotHeader::for_grid(f.grid()), &f).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_snapshot(buf.as_slice()), Err(Error::Format(_))));
    }
}
