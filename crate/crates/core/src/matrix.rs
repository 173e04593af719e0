//! Coefficient matrices of correlation inequalities.
//!
//! A [`CoefficientMatrix`] holds the real coefficients `a_kl` of a Bell
//! functional `sum_kl a_kl <X_k Y_l>`. Rows index X-site observables, columns
//! index Y-site observables. The reference family is the CHSH matrix
//! `[[1, 1], [1, -1]]` and its Kronecker powers.

use std::io::{Read, Write};

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

/// Largest supported Kronecker exponent (4096 x 4096).
pub const MAX_TENSOR_DEGREE: u32 = 12;

/// Dense real `rows x cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl CoefficientMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "entry ({}, {}) is not finite",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from a list of rows, rejecting ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: row 1 has {m} entries, row {} has {}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Zero-based entry access.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.cols)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x * factor).collect(),
        }
    }

    /// Kronecker product with `(A⊗B)[i*p + k, j*q + l] = A[i,j] * B[k,l]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        let rows = self.rows * p;
        let cols = self.cols * q;
        let mut entries = vec![0.0; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..p {
                    for l in 0..q {
                        entries[(i * p + k) * cols + j * q + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// True when every entry is exactly `+1`, `-1` or `0`.
    pub fn is_ternary(&self) -> bool {
        self.entries
            .iter()
            .all(|&x| x == 1.0 || x == -1.0 || x == 0.0)
    }

    /// Returns `d` when this matrix is exactly `tensor_power(d)`.
    pub fn tensor_power_degree(&self) -> Option<u32> {
        if self.rows != self.cols || !self.rows.is_power_of_two() || self.rows < 2 {
            return None;
        }
        let d = self.rows.trailing_zeros();
        if d > MAX_TENSOR_DEGREE {
            return None;
        }
        let matches = (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let sign = if (i & j).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                self.get(i, j) == sign
            })
        });
        matches.then_some(d)
    }
}

/// The CHSH coefficient matrix `[[1, 1], [1, -1]]`.
pub fn chsh_matrix() -> CoefficientMatrix {
    CoefficientMatrix {
        rows: 2,
        cols: 2,
        entries: vec![1.0, 1.0, 1.0, -1.0],
    }
}

/// d-fold Kronecker power of the CHSH matrix, a `2^d x 2^d` Sylvester-Hadamard matrix.
pub fn tensor_power(d: u32) -> Result<CoefficientMatrix> {
    if !(1..=MAX_TENSOR_DEGREE).contains(&d) {
        return Err(Error::SizeLimit(format!(
            "tensor power degree must be in 1..={MAX_TENSOR_DEGREE}, got {d}"
        )));
    }
    let base = chsh_matrix();
    let mut out = base.clone();
    for _ in 1..d {
        out = out.kron(&base);
    }
    Ok(out)
}

fn entry_to_json(x: f64) -> Value {
    // Integers are written without a fractional part; -0.0 keeps its sign as a float.
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    if x.fract() == 0.0 && x.abs() < EXACT_INT && !(x == 0.0 && x.is_sign_negative()) {
        Value::Number(Number::from(x as i64))
    } else {
        // finite by construction
        Value::Number(Number::from_f64(x).expect("finite entry"))
    }
}

/// Serializes a matrix as `{"rows": n, "cols": m, "entries": [[...], ...]}`.
pub fn matrix_to_json(a: &CoefficientMatrix) -> Value {
    let entries = a
        .entries
        .chunks(a.cols)
        .map(|row| Value::Array(row.iter().copied().map(entry_to_json).collect()))
        .collect();
    let mut obj = Map::new();
    obj.insert("rows".into(), Value::from(a.rows));
    obj.insert("cols".into(), Value::from(a.cols));
    obj.insert("entries".into(), Value::Array(entries));
    Value::Object(obj)
}

/// Parses the JSON matrix document from an already-decoded value.
pub fn matrix_from_json(doc: &Value) -> Result<CoefficientMatrix> {
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::parse("document", "expected a JSON object"))?;
    let dim = |key: &str| -> Result<usize> {
        let v = obj
            .get(key)
            .ok_or_else(|| Error::parse(key, "missing field"))?;
        match v.as_u64() {
            Some(k) if k >= 1 => Ok(k as usize),
            _ => Err(Error::parse(key, "expected a positive integer")),
        }
    };
    let rows = dim("rows")?;
    let cols = dim("cols")?;
    let entry_rows = obj
        .get("entries")
        .ok_or_else(|| Error::parse("entries", "missing field"))?
        .as_array()
        .ok_or_else(|| Error::parse("entries", "expected an array of rows"))?;

    let mut parsed: Vec<Vec<f64>> = Vec::with_capacity(entry_rows.len());
    for (i, row) in entry_rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::parse(format!("entries[{i}]"), "expected an array"))?;
        let mut out = Vec::with_capacity(row.len());
        for (j, v) in row.iter().enumerate() {
            let x = v.as_f64().ok_or_else(|| {
                Error::parse(
                    format!("entries[{i}][{j}]"),
                    format!("expected a number, found {v}"),
                )
            })?;
            if !x.is_finite() {
                return Err(Error::parse(
                    format!("entries[{i}][{j}]"),
                    "entry is not finite",
                ));
            }
            out.push(x);
        }
        parsed.push(out);
    }
    if let Some(first) = parsed.first() {
        if let Some(i) = parsed.iter().position(|r| r.len() != first.len()) {
            return Err(Error::parse(
                format!("entries[{i}]"),
                format!(
                    "ragged rows: row 0 has {} entries, row {i} has {}",
                    first.len(),
                    parsed[i].len()
                ),
            ));
        }
    }
    if parsed.len() != rows {
        return Err(Error::parse(
            "entries",
            format!("\"rows\" is {rows} but {} rows are present", parsed.len()),
        ));
    }
    if parsed[0].len() != cols {
        return Err(Error::parse(
            "entries[0]",
            format!(
                "\"cols\" is {cols} but rows have {} entries",
                parsed[0].len()
            ),
        ));
    }
    CoefficientMatrix::new(rows, cols, parsed.concat())
}

/// Reads a matrix document. Trailing non-whitespace data is rejected.
pub fn load_matrix<R: Read>(mut source: R) -> Result<CoefficientMatrix> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let text = std::str::from_utf8(&buf)
        .map_err(|e| Error::parse(format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    matrix_from_json(&doc)
}

/// Writes a matrix document followed by a newline.
pub fn save_matrix<W: Write>(a: &CoefficientMatrix, mut sink: W) -> Result<()> {
    serde_json::to_writer(&mut sink, &matrix_to_json(a)).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

/// Serde adapter that encodes a matrix in the JSON matrix format.
pub mod serde_format {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        a: &CoefficientMatrix,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(a).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<CoefficientMatrix, D::Error> {
        let v = Value::deserialize(deserializer)?;
        matrix_from_json(&v).map_err(D::Error::custom)
    }
}
