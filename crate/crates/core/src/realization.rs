//! Explicit observables and state reproducing a set of Gram vectors.
//!
//! With anticommuting Hermitian involutions `γ_1..γ_r` on dimension
//! `D = 2^⌈r/2⌉`, the operator `Σ_a x^a γ_a` squares to `|x|² I`, and
//! `tr(γ_a γ_b) = D δ_ab`. On the maximally entangled state
//! `|Φ⟩ = D^{-1/2} Σ_i |i⟩|i⟩` one has `⟨Φ|X ⊗ conj(Y)|Φ⟩ = tr(X Y) / D`, so
//! the correlations of `X_k ⊗ conj(Y_l)` equal the inner products `x_k · y_l`.

use nalgebra::{Complex, DMatrix};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;
use crate::quantum::GramSolution;

/// Largest number of Clifford generators (local dimension 64).
pub const MAX_GENERATORS: usize = 12;

/// Tolerance on `| |v| - 1 |` for Gram vectors passed to [`realize`].
pub const UNIT_TOL: f64 = 1e-10;

type C64 = Complex<f64>;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Anticommuting Hermitian involutions.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordBasis {
    pub r: usize,
    pub dim: usize,
    pub generators: Vec<DMatrix<C64>>,
}

fn pauli_x() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

fn pauli_y() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

fn pauli_z() -> DMatrix<C64> {
    DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `Z^{⊗j} ⊗ middle ⊗ I^{⊗(qubits - j - 1)}`
fn ladder(j: usize, qubits: usize, middle: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::identity(1, 1);
    for _ in 0..j {
        out = out.kronecker(&pauli_z());
    }
    out = out.kronecker(middle);
    for _ in j + 1..qubits {
        out = out.kronecker(&DMatrix::<C64>::identity(2, 2));
    }
    out
}

/// `r` generators on `2^⌈r/2⌉` dimensions (Jordan-Wigner ladder).
pub fn clifford_generators(r: usize) -> Result<CliffordBasis> {
    if !(1..=MAX_GENERATORS).contains(&r) {
        return Err(Error::SizeLimit(format!(
            "number of generators must be in 1..={MAX_GENERATORS}, got {r}"
        )));
    }
    let qubits = r.div_ceil(2);
    let generators = (0..r)
        .map(|a| {
            let middle = if a % 2 == 0 { pauli_x() } else { pauli_y() };
            ladder(a / 2, qubits, &middle)
        })
        .collect();
    Ok(CliffordBasis {
        r,
        dim: 1 << qubits,
        generators,
    })
}

impl CliffordBasis {
    /// `Σ_a coeffs[a] γ_a`
    pub fn combine(&self, coeffs: &[f64]) -> DMatrix<C64> {
        let mut out = DMatrix::<C64>::zeros(self.dim, self.dim);
        for (g, &w) in self.generators.iter().zip(coeffs) {
            if w != 0.0 {
                out += g * c(w, 0.0);
            }
        }
        out
    }
}

/// Observables for both sites plus the shared state.
///
/// `y_observables` hold `Y_l` itself; the operator measured on the second
/// tensor factor is its entrywise complex conjugate, see [`Self::second_site`].
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRealization {
    pub dim: usize,
    pub x_observables: Vec<DMatrix<C64>>,
    pub y_observables: Vec<DMatrix<C64>>,
    /// Density matrix on the `dim²`-dimensional bipartite space.
    pub state: DMatrix<C64>,
}

impl ObservableRealization {
    /// The second-site operator `conj(Y_l)`.
    pub fn second_site(&self, l: usize) -> DMatrix<C64> {
        self.y_observables[l].map(|z| z.conj())
    }

    /// `tr(ρ (X_k ⊗ conj(Y_l)))` evaluated entrywise without forming the product.
    pub fn correlation(&self, k: usize, l: usize) -> f64 {
        let d = self.dim;
        let x = &self.x_observables[k];
        let y = self.second_site(l);
        let mut total = c(0.0, 0.0);
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    let xca = x[(cc, a)];
                    if xca == c(0.0, 0.0) {
                        continue;
                    }
                    for dd in 0..d {
                        total += self.state[(a * d + b, cc * d + dd)] * xca * y[(dd, b)];
                    }
                }
            }
        }
        total.re
    }

    /// Largest `|Z² - I|` entry over all observables.
    pub fn max_involution_defect(&self) -> f64 {
        let eye = DMatrix::<C64>::identity(self.dim, self.dim);
        self.x_observables
            .iter()
            .chain(&self.y_observables)
            .map(|z| (z * z - &eye).iter().map(|e| e.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// JSON dump with complex entries as `[re, im]` pairs.
    pub fn to_json(&self) -> Value {
        let mat = |m: &DMatrix<C64>| -> Value {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        json!({
            "dim": self.dim,
            "bipartite_dim": self.dim * self.dim,
            "second_site": "complex_conjugate",
            "x_observables": self.x_observables.iter().map(mat).collect::<Vec<_>>(),
            "y_observables": self.y_observables.iter().map(mat).collect::<Vec<_>>(),
            "state": mat(&self.state),
        })
    }
}

/// Maximally entangled density matrix `|Φ⟩⟨Φ|` on `dim ⊗ dim`.
fn maximally_entangled(dim: usize) -> DMatrix<C64> {
    let full = dim * dim;
    let w = c(1.0 / dim as f64, 0.0);
    DMatrix::from_fn(full, full, |p, q| {
        if p % (dim + 1) == 0 && q % (dim + 1) == 0 {
            w
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Builds observables `X_k = Σ_a x_k^a γ_a`, `Y_l = Σ_a y_l^a γ_a` and the
/// maximally entangled state.
pub fn realize(a: &CoefficientMatrix, gram: &GramSolution) -> Result<ObservableRealization> {
    if gram.x.len() != a.rows() || gram.y.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Gram solution has {}+{} vectors, matrix is {}x{}",
            gram.x.len(),
            gram.y.len(),
            a.rows(),
            a.cols()
        )));
    }
    if gram.dim > MAX_GENERATORS {
        return Err(Error::SizeLimit(format!(
            "Gram dimension {} exceeds {MAX_GENERATORS}",
            gram.dim
        )));
    }
    let defect = gram.max_norm_defect();
    if defect > UNIT_TOL {
        return Err(Error::InvalidArgument(format!(
            "Gram vectors are not unit vectors (max defect {defect:.3e})"
        )));
    }
    let basis = clifford_generators(gram.dim)?;
    Ok(ObservableRealization {
        dim: basis.dim,
        x_observables: gram.x.iter().map(|v| basis.combine(v)).collect(),
        y_observables: gram.y.iter().map(|v| basis.combine(v)).collect(),
        state: maximally_entangled(basis.dim),
    })
}

/// `tr(ρ Σ_kl a_kl X_k ⊗ conj(Y_l))`
pub fn bell_value(real: &ObservableRealization, a: &CoefficientMatrix) -> Result<f64> {
    if real.x_observables.len() != a.rows() || real.y_observables.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "realization has {}+{} observables, matrix is {}x{}",
            real.x_observables.len(),
            real.y_observables.len(),
            a.rows(),
            a.cols()
        )));
    }
    let mut total = 0.0;
    for k in 0..a.rows() {
        for l in 0..a.cols() {
            let w = a.get(k, l);
            if w != 0.0 {
                total += w * real.correlation(k, l);
            }
        }
    }
    Ok(total)
}
