//! Quantum (Tsirelson) value of a correlation functional.
//!
//! The quantum maximum equals `max sum_kl a_kl <x_k, y_l>` over unit vectors in
//! a Euclidean space of dimension `min(n, m)`. A lower bound comes from
//! alternating maximization over the two families of vectors; an upper bound
//! comes from a dual certificate: weights `u, v >= 0` with
//! `[[diag(u), -A], [-Aᵀ, diag(v)]] ⪰ 0` imply `Q(A) <= (Σu + Σv) / 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::classical_bound;
use crate::eigen::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;

/// Minimum eigenvalue accepted for a dual certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Unit vectors for both sites and the objective they attain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSolution {
    pub dim: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub objective: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl GramSolution {
    /// Builds a solution from explicit vectors and computes its objective.
    pub fn new(a: &CoefficientMatrix, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        if x.len() != a.rows() || y.len() != a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} x-vectors and {} y-vectors, got {} and {}",
                a.rows(),
                a.cols(),
                a.rows(),
                a.cols(),
                x.len(),
                y.len()
            )));
        }
        let dim = x[0].len();
        if dim == 0 || x.iter().chain(&y).any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "Gram vectors must share one positive dimension".into(),
            ));
        }
        let mut sol = Self {
            dim,
            x,
            y,
            objective: 0.0,
        };
        sol.objective = sol.bilinear(a);
        Ok(sol)
    }

    /// `sum_kl a_kl <x_k, y_l>` recomputed from the vectors.
    pub fn bilinear(&self, a: &CoefficientMatrix) -> f64 {
        let mut total = 0.0;
        for (k, xk) in self.x.iter().enumerate() {
            for (l, yl) in self.y.iter().enumerate() {
                let c = a.get(k, l);
                if c != 0.0 {
                    total += c * dot(xk, yl);
                }
            }
        }
        total
    }

    /// Correlation matrix `<x_k, y_l>`.
    pub fn correlations(&self) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .map(|xk| self.y.iter().map(|yl| dot(xk, yl)).collect())
            .collect()
    }

    /// Largest deviation of any vector norm from one.
    pub fn max_norm_defect(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .map(|v| (norm(v) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Dual weights and the spectral data certifying `Q(A) <= upper_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub upper_bound: f64,
    pub min_eigenvalue: f64,
}

fn block_matrix(a: &CoefficientMatrix, u: &[f64], v: &[f64]) -> SymmetricMatrix {
    let (n, m) = (a.rows(), a.cols());
    let mut mat = SymmetricMatrix::zeros(n + m);
    for (k, &uk) in u.iter().enumerate() {
        mat.set(k, k, uk);
    }
    for (l, &vl) in v.iter().enumerate() {
        mat.set(n + l, n + l, vl);
    }
    for k in 0..n {
        for l in 0..m {
            mat.set(k, n + l, -a.get(k, l));
        }
    }
    mat
}

fn check_weight_dims(a: &CoefficientMatrix, u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != a.rows() || v.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix needs weights of lengths {} and {}, got {} and {}",
            a.rows(),
            a.cols(),
            a.rows(),
            a.cols(),
            u.len(),
            v.len()
        )));
    }
    Ok(())
}

impl DualCertificate {
    /// Computes the bound and minimum eigenvalue for the given weights.
    pub fn from_weights(a: &CoefficientMatrix, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        check_weight_dims(a, &u, &v)?;
        let min_eigenvalue = block_matrix(a, &u, &v).min_eigenvalue();
        let upper_bound = (u.iter().sum::<f64>() + v.iter().sum::<f64>()) / 2.0;
        Ok(Self {
            u,
            v,
            upper_bound,
            min_eigenvalue,
        })
    }

    /// Certificate read off a (near-)stationary primal point, shifted until
    /// the block matrix is positive semidefinite.
    pub fn from_primal(a: &CoefficientMatrix, sol: &GramSolution) -> Self {
        let u: Vec<f64> = (0..a.rows())
            .map(|k| norm(&row_combination(a, k, &sol.y)))
            .collect();
        let v: Vec<f64> = (0..a.cols())
            .map(|l| norm(&col_combination(a, l, &sol.x)))
            .collect();
        let cert = Self::from_weights(a, u, v).expect("dimensions follow from the matrix");
        if cert.min_eigenvalue >= 0.0 {
            return cert;
        }
        let shift = -cert.min_eigenvalue;
        let u = cert.u.iter().map(|x| x + shift).collect();
        let v = cert.v.iter().map(|x| x + shift).collect();
        Self::from_weights(a, u, v).expect("dimensions follow from the matrix")
    }

    pub fn is_valid(&self) -> bool {
        self.min_eigenvalue >= -CERTIFICATE_TOL
    }
}

/// Recomputes the minimum eigenvalue of the certificate's block matrix from
/// scratch and accepts it when it is at least `-tol`.
pub fn check_dual(a: &CoefficientMatrix, cert: &DualCertificate, tol: f64) -> Result<bool> {
    check_weight_dims(a, &cert.u, &cert.v)?;
    Ok(block_matrix(a, &cert.u, &cert.v).min_eigenvalue() >= -tol)
}

/// `sum_l a_kl y_l`
fn row_combination(a: &CoefficientMatrix, k: usize, y: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; y[0].len()];
    for (l, yl) in y.iter().enumerate() {
        let c = a.get(k, l);
        if c != 0.0 {
            for (o, &z) in out.iter_mut().zip(yl) {
                *o += c * z;
            }
        }
    }
    out
}

/// `sum_k a_kl x_k`
fn col_combination(a: &CoefficientMatrix, l: usize, x: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; x[0].len()];
    for (k, xk) in x.iter().enumerate() {
        let c = a.get(k, l);
        if c != 0.0 {
            for (o, &z) in out.iter_mut().zip(xk) {
                *o += c * z;
            }
        }
    }
    out
}

/// Replaces `target` by `g / |g|`, or keeps it when `g` vanishes.
/// Returns `<g, target>` after the update.
fn align(target: &mut [f64], g: &[f64]) -> f64 {
    let len = norm(g);
    if len > 0.0 {
        for (t, &z) in target.iter_mut().zip(g) {
            *t = z / len;
        }
        len
    } else {
        dot(g, target)
    }
}

/// Result of a run of [`alternating_ascent`].
#[derive(Debug, Clone)]
pub struct AscentOutcome {
    pub solution: GramSolution,
    /// Full sweeps performed (one sweep updates both sites).
    pub sweeps: usize,
    /// Whether the relative objective change fell to `tol`.
    pub stalled: bool,
}

/// Alternating maximization: `x_k <- normalize(sum_l a_kl y_l)`, then
/// `y_l <- normalize(sum_k a_kl x_k)`, until the relative objective change
/// across a sweep is at most `tol` or `max_sweeps` is reached.
///
/// `observer` receives the objective after every half step. Each half step
/// maximizes exactly over one site, so the observed sequence is nondecreasing
/// up to rounding.
pub fn alternating_ascent(
    a: &CoefficientMatrix,
    start: GramSolution,
    max_sweeps: usize,
    tol: f64,
    observer: &mut dyn FnMut(f64),
) -> AscentOutcome {
    let mut sol = start;
    let mut previous = sol.bilinear(a);
    let mut sweeps = 0;
    let mut stalled = false;
    while sweeps < max_sweeps {
        let mut after_x = 0.0;
        for k in 0..a.rows() {
            let g = row_combination(a, k, &sol.y);
            after_x += align(&mut sol.x[k], &g);
        }
        observer(after_x);
        let mut after_y = 0.0;
        for l in 0..a.cols() {
            let g = col_combination(a, l, &sol.x);
            after_y += align(&mut sol.y[l], &g);
        }
        observer(after_y);
        sweeps += 1;
        let change = (after_y - previous).abs();
        previous = after_y;
        if change <= tol * after_y.abs() {
            stalled = true;
            break;
        }
    }
    sol.objective = sol.bilinear(a);
    AscentOutcome {
        solution: sol,
        sweeps,
        stalled,
    }
}

/// Dimension of the Gram vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GramDimension {
    /// `min(n, m)`, always sufficient.
    MinSide,
    /// `n + m`, a larger landscape that avoids rare saddle points.
    Full,
    Fixed(usize),
}

impl GramDimension {
    pub fn resolve(self, a: &CoefficientMatrix) -> usize {
        match self {
            GramDimension::MinSide => a.rows().min(a.cols()),
            GramDimension::Full => a.rows() + a.cols(),
            GramDimension::Fixed(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub gram_dim: GramDimension,
    /// Also start from the classical optimum embedded as rank-one vectors,
    /// when the smaller side is at most [`CLASSICAL_START_MAX_SIDE`].
    pub classical_start: bool,
}

/// Largest smaller side for which the classical start is computed.
pub const CLASSICAL_START_MAX_SIDE: usize = 20;

impl Default for QuantumOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 10_000,
            tol: 1e-7,
            seed: 0,
            gram_dim: GramDimension::MinSide,
            classical_start: true,
        }
    }
}

/// Per-restart diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub objective: f64,
    pub sweeps: usize,
    /// Smallest change between consecutive half-step objectives; negative
    /// values beyond rounding would indicate a broken ascent.
    pub min_increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumBoundResult {
    pub primal: GramSolution,
    pub dual: DualCertificate,
    pub gap: f64,
    pub converged: bool,
    /// Index of the restart that produced the primal solution.
    pub best_restart: usize,
    /// Sweeps spent refining the best restart after selection.
    pub refinement_sweeps: usize,
    pub restarts: Vec<RestartSummary>,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let len = norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|z| z / len).collect();
        }
    }
}

/// Seeded random start for restart `index`.
pub fn random_start(a: &CoefficientMatrix, dim: usize, seed: u64, index: usize) -> GramSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let x = (0..a.rows()).map(|_| random_unit(&mut rng, dim)).collect();
    let y = (0..a.cols()).map(|_| random_unit(&mut rng, dim)).collect();
    GramSolution::new(a, x, y).expect("dimensions follow from the matrix")
}

/// `x_k = s_k e_1`, `y_l = t_l e_1` for the classical witness `(s, t)`.
fn classical_start(a: &CoefficientMatrix, dim: usize) -> Result<GramSolution> {
    let w = classical_bound(a)?.witness;
    let embed = |sign: i8| {
        let mut v = vec![0.0; dim];
        v[0] = f64::from(sign);
        v
    };
    GramSolution::new(
        a,
        w.s.iter().copied().map(embed).collect(),
        w.t.iter().copied().map(embed).collect(),
    )
}

fn run_restart(
    a: &CoefficientMatrix,
    opts: &QuantumOptions,
    dim: usize,
    index: usize,
) -> Result<(AscentOutcome, RestartSummary)> {
    let start = if index < opts.restarts {
        random_start(a, dim, opts.seed, index)
    } else {
        classical_start(a, dim)?
    };
    let mut last = f64::NEG_INFINITY;
    let mut min_increment = f64::INFINITY;
    let outcome = alternating_ascent(a, start, opts.max_iters, opts.tol, &mut |f| {
        if last.is_finite() {
            min_increment = min_increment.min(f - last);
        }
        last = f;
    });
    let summary = RestartSummary {
        index,
        objective: outcome.solution.objective,
        sweeps: outcome.sweeps,
        min_increment,
    };
    Ok((outcome, summary))
}

/// Quantum bound by seeded multi-start alternating maximization, certified
/// by a dual certificate built at the best point.
///
/// Random starts use indices `0..restarts`; the optional classical start
/// comes last, so it only wins when strictly better.
///
/// After the best restart is selected it keeps iterating, within the
/// remaining sweep budget, until the certified gap is at most `tol` or the
/// objective stops changing. Non-convergence is reported via `converged`.
pub fn quantum_bound(a: &CoefficientMatrix, opts: &QuantumOptions) -> Result<QuantumBoundResult> {
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::InvalidArgument(
            "restarts and max_iters must be positive".into(),
        ));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let dim = opts.gram_dim.resolve(a);
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "Gram dimension must be positive".into(),
        ));
    }

    let with_classical = opts.classical_start && a.rows().min(a.cols()) <= CLASSICAL_START_MAX_SIDE;
    let starts = opts.restarts + usize::from(with_classical);
    let runs: Vec<(AscentOutcome, RestartSummary)> = (0..starts)
        .into_par_iter()
        .map(|i| run_restart(a, opts, dim, i))
        .collect::<Result<_>>()?;
    let best = runs.iter().enumerate().fold(0, |best, (i, (o, _))| {
        if o.solution.objective > runs[best].0.solution.objective {
            i
        } else {
            best
        }
    });
    let restarts: Vec<RestartSummary> = runs.iter().map(|(_, s)| s.clone()).collect();
    let (outcome, _) = runs.into_iter().nth(best).expect("at least one restart");

    let mut solution = outcome.solution;
    let mut budget = opts.max_iters - outcome.sweeps;
    let mut refinement_sweeps = 0;
    let mut chunk = 8;
    let mut dual = DualCertificate::from_primal(a, &solution);
    while dual.upper_bound - solution.objective > opts.tol && budget > 0 {
        let before = solution.objective;
        let step = chunk.min(budget);
        let refined = alternating_ascent(a, solution, step, 0.0, &mut |_| {});
        budget -= refined.sweeps;
        refinement_sweeps += refined.sweeps;
        solution = refined.solution;
        dual = DualCertificate::from_primal(a, &solution);
        if refined.stalled || solution.objective == before {
            break;
        }
        chunk = (chunk * 2).min(1024);
    }

    let gap = dual.upper_bound - solution.objective;
    Ok(QuantumBoundResult {
        converged: gap <= opts.tol && dual.is_valid(),
        primal: solution,
        dual,
        gap,
        best_restart: best,
        refinement_sweeps,
        restarts,
    })
}

/// `Q(A) / L(A)` with the quantum value from [`quantum_bound`].
pub fn violation_ratio(a: &CoefficientMatrix, opts: &QuantumOptions) -> Result<f64> {
    let classical = classical_bound(a)?.bound;
    if classical <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(quantum_bound(a, opts)?.primal.objective / classical)
}
