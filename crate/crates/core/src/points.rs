//! Finite point sets in R^d and their CSV form.
//!
//! The CSV form has one row per point, `d` comma-separated decimal fields, no header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An ordered, non-empty collection of points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    /// Builds a point set from a flat row-major buffer.
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(PointSet { coords, dim })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        PointSet::new(coords, dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for the `len`/`is_empty` convention.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Parses the headerless CSV form.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut coords = Vec::new();
        let mut dim = None;
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            match dim {
                None => dim = Some(record.len()),
                Some(d) if d != record.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: record.len(),
                    })
                }
                _ => {}
            }
            for (col, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| {
                    Error::Parse(format!("row {row}, column {col}: cannot parse {field:?}"))
                })?;
                if !value.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
                coords.push(value);
            }
        }
        let dim = dim.ok_or(Error::EmptyInput)?;
        PointSet::new(coords, dim)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        PointSet::from_csv_reader(file)
    }

    /// Writes the CSV form with shortest round-trip float formatting and LF line endings.
    pub fn write_csv_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut line = String::new();
        for p in self.iter() {
            line.clear();
            for (j, c) in p.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&c.to_string());
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv_to(&mut buf)
            .and_then(|_| buf.flush())
            .map_err(|e| Error::io(path, e))
    }
}
