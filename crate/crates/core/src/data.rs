//! Fixed-design datasets, evaluation points, and their CSV form.
//!
//! Dataset CSV: header `x_1,..,x_q,y`. Fit CSV: header `x_1,..,x_q,ghat,undefined`
//! where `ghat` is empty on undefined rows and `undefined` is `0` or `1`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major `m × q` matrix of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    coords: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("points need at least one dimension"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not form rows of width {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(Points { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("ragged point rows"));
        }
        Points::new(rows.concat(), dim)
    }

    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Points::new(xs.to_vec(), 1)
    }

    /// Pixel-centre coordinates `(column, row)` in row-major pixel order.
    pub fn pixel_grid(width: usize, height: usize) -> Self {
        let mut coords = Vec::with_capacity(2 * width * height);
        for r in 0..height {
            for c in 0..width {
                coords.push(c as f64);
                coords.push(r as f64);
            }
        }
        Points { coords, dim: 2 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    /// Values of coordinate `j` over all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }
}

/// `n` observations `(X_i, Y_i)` of a fixed-design regression.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Points,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!(
                "{} regressor rows but {} outcomes",
                x.len(),
                y.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::invalid("a dataset needs at least two observations"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("outcomes must be finite"));
        }
        Ok(Dataset { x, y })
    }

    pub fn from_1d(xs: &[f64], ys: &[f64]) -> Result<Self> {
        Dataset::new(Points::from_1d(xs)?, ys.to_vec())
    }

    pub fn x(&self) -> &Points {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Same design, new outcomes.
    pub fn with_y(&self, y: Vec<f64>) -> Result<Self> {
        Dataset::new(self.x.clone(), y)
    }

    /// Drops observation `i`.
    pub fn without(&self, i: usize) -> Result<Self> {
        let q = self.dim();
        let mut coords = Vec::with_capacity((self.len() - 1) * q);
        let mut y = Vec::with_capacity(self.len() - 1);
        for k in 0..self.len() {
            if k != i {
                coords.extend_from_slice(self.x.row(k));
                y.push(self.y[k]);
            }
        }
        Dataset::new(Points::new(coords, q)?, y)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        self.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let q = self.dim();
        let mut header: Vec<String> = (1..=q).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        wtr.write_record(&header)?;
        for (row, y) in self.x.rows().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            rec.push(fmt_f64(*y));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        let q = parse_x_header(&headers, 1)?;
        if headers.get(q) != Some("y") {
            return Err(Error::invalid("dataset CSV must end with a 'y' column"));
        }
        let mut coords = Vec::new();
        let mut y = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != q + 1 {
                return Err(Error::invalid(format!("row {} has {} fields", line + 2, rec.len())));
            }
            for j in 0..q {
                coords.push(parse_f64(&rec[j], line)?);
            }
            y.push(parse_f64(&rec[q], line)?);
        }
        Dataset::new(Points::new(coords, q)?, y)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::read_csv(std::io::BufReader::new(f))
    }
}

/// Reads points from a CSV whose leading columns are `x_1..x_q`; trailing columns are ignored.
pub fn read_points_csv<R: Read>(r: R) -> Result<Points> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let q = parse_x_header(&headers, 0)?;
    let mut coords = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for j in 0..q {
            let field = rec
                .get(j)
                .ok_or_else(|| Error::invalid(format!("row {} is short", line + 2)))?;
            coords.push(parse_f64(field, line)?);
        }
    }
    Points::new(coords, q)
}

fn parse_x_header(headers: &csv::StringRecord, trailing: usize) -> Result<usize> {
    let q = headers.iter().take_while(|h| h.starts_with("x_")).count();
    for (j, h) in headers.iter().take(q).enumerate() {
        if h != format!("x_{}", j + 1) {
            return Err(Error::invalid(format!("unexpected column '{h}', expected x_{}", j + 1)));
        }
    }
    if q == 0 || headers.len() < q + trailing {
        return Err(Error::invalid("CSV header must start with x_1..x_q columns"));
    }
    Ok(q)
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("row {}: cannot parse '{s}' as a number", line + 2)))
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
