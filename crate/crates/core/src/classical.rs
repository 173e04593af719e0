//! Exact classical (local deterministic) maximum of a correlation functional.
//!
//! `L(A) = max_{s,t in {±1}} sᵀ A t`. For a fixed `s` the best `t` is
//! `t_l = sign(sum_k a_kl s_k)`, so only one side is enumerated. The enumerated
//! side walks a reflected Gray code with its first sign pinned to `+1`
//! (global sign flip symmetry), updating column sums in `O(m)` per step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;

/// Largest side length that can be enumerated.
pub const MAX_ENUMERATION: usize = 28;

/// Gray-code positions per work chunk. Fixed so that results do not depend on thread count.
const CHUNK_BITS: u32 = 14;

/// A deterministic ±1 assignment to both sites and the value it attains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAssignment {
    pub s: Vec<i8>,
    pub t: Vec<i8>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBoundResult {
    pub bound: f64,
    pub witness: SignAssignment,
}

fn check_signs(name: &str, v: &[i8], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "{name} has {} components, expected {expected}",
            v.len()
        )));
    }
    if let Some(i) = v.iter().position(|&x| x != 1 && x != -1) {
        return Err(Error::InvalidArgument(format!(
            "{name}[{i}] = {} is not ±1",
            v[i]
        )));
    }
    Ok(())
}

/// Evaluates `sᵀ A t` for ±1 vectors.
pub fn evaluate_classical(a: &CoefficientMatrix, s: &[i8], t: &[i8]) -> Result<f64> {
    check_signs("s", s, a.rows())?;
    check_signs("t", t, a.cols())?;
    Ok(bilinear(a, s, t))
}

fn bilinear(a: &CoefficientMatrix, s: &[i8], t: &[i8]) -> f64 {
    let mut total = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        let row: f64 = a
            .row(k)
            .iter()
            .zip(t)
            .map(|(&x, &tl)| x * f64::from(tl))
            .sum();
        total += f64::from(sk) * row;
    }
    total
}

#[inline]
fn gray(i: u64) -> u64 {
    i ^ (i >> 1)
}

/// Sign vector of length `len` for Gray position `pos`: component 0 is +1,
/// component `j + 1` is -1 iff bit `j` of `gray(pos)` is set.
fn signs_at(pos: u64, len: usize) -> Vec<i8> {
    let g = gray(pos);
    (0..len)
        .map(|k| {
            if k > 0 && (g >> (k - 1)) & 1 == 1 {
                -1
            } else {
                1
            }
        })
        .collect()
}

fn column_sums(a: &CoefficientMatrix, s: &[i8]) -> Vec<f64> {
    let mut sums = vec![0.0; a.cols()];
    for (k, &sk) in s.iter().enumerate() {
        let sk = f64::from(sk);
        for (c, &x) in sums.iter_mut().zip(a.row(k)) {
            *c += sk * x;
        }
    }
    sums
}

#[inline]
fn sign_of(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Best `(value, position)` inside the Gray positions `[start, start + len)`.
fn scan_chunk(a: &CoefficientMatrix, start: u64, len: u64) -> (f64, u64) {
    let n = a.rows();
    let mut s = signs_at(start, n);
    let mut sums = column_sums(a, &s);
    let mut best = (sums.iter().map(|c| c.abs()).sum::<f64>(), start);
    for pos in start + 1..start + len {
        let row = pos.trailing_zeros() as usize + 1;
        s[row] = -s[row];
        let twice = 2.0 * f64::from(s[row]);
        let mut value = 0.0;
        for (c, &x) in sums.iter_mut().zip(a.row(row)) {
            *c += twice * x;
            value += c.abs();
        }
        if value > best.0 {
            best = (value, pos);
        }
    }
    best
}

fn better(x: (f64, u64), y: (f64, u64)) -> (f64, u64) {
    if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
        y
    } else {
        x
    }
}

/// Maximizes over `s` in rows of `a`; returns `(s, t)` with `t` solved in closed form.
fn enumerate_rows(a: &CoefficientMatrix) -> (Vec<i8>, Vec<i8>) {
    let n = a.rows();
    let free_bits = (n - 1) as u32;
    let total = 1u64 << free_bits;
    let (chunk_len, chunks) = if free_bits <= CHUNK_BITS {
        (total, 1)
    } else {
        (1u64 << CHUNK_BITS, 1u64 << (free_bits - CHUNK_BITS))
    };
    let (_, pos) = if chunks == 1 {
        scan_chunk(a, 0, chunk_len)
    } else {
        (0..chunks)
            .into_par_iter()
            .map(|c| scan_chunk(a, c * chunk_len, chunk_len))
            .reduce(|| (f64::NEG_INFINITY, u64::MAX), better)
    };
    let s = signs_at(pos, n);
    let t = column_sums(a, &s).into_iter().map(sign_of).collect();
    (s, t)
}

/// Exact classical bound by enumeration over the smaller side.
///
/// Ties resolve to the first optimum in Gray-code order of the enumerated side.
pub fn classical_bound(a: &CoefficientMatrix) -> Result<ClassicalBoundResult> {
    let (n, m) = (a.rows(), a.cols());
    if n.min(m) > MAX_ENUMERATION {
        return Err(Error::SizeLimit(format!(
            "classical enumeration needs min(rows, cols) <= {MAX_ENUMERATION}, got {n}x{m}"
        )));
    }
    let (s, t) = if n <= m {
        enumerate_rows(a)
    } else {
        let (t, s) = enumerate_rows(&a.transpose());
        (s, t)
    };
    let value = bilinear(a, &s, &t);
    Ok(ClassicalBoundResult {
        bound: value,
        witness: SignAssignment { s, t, value },
    })
}
