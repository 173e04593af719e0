//! Symbolic square of a Bell operator `B = sum_kl a_kl X_k Y_l`.
//!
//! With `X_k² = Y_l² = I` and `[X_k, Y_l] = 0`,
//!
//! ```text
//! B² = (Σ a_kl²) I
//!    + Σ_{i<k, j<l} ½(α - β) [X_i,X_k][Y_j,Y_l] + ½(α + β) {X_i,X_k}{Y_j,Y_l}
//!    + Σ_{i<k} (row_i · row_k) {X_i,X_k} + Σ_{j<l} (col_j · col_l) {Y_j,Y_l}
//! ```
//!
//! where `α = a_ij a_kl` and `β = a_il a_kj`. The last two sums are the
//! single-site residuals; they vanish when rows and columns are orthogonal.
//! Operator norms are then bounded by the triangle inequality with
//! `‖[·,·]‖ <= 2`, `‖{·,·}‖ <= 2` and `‖B‖ <= sqrt(‖B²‖)`.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::matrix::CoefficientMatrix;

/// Largest side accepted by [`square_bell_operator`].
pub const MAX_EXPANSION_SIDE: usize = 64;
/// Largest side accepted by [`numeric_check`].
pub const MAX_CHECK_SIDE: usize = 8;
/// Largest local Hilbert dimension accepted by [`numeric_check`].
pub const MAX_CHECK_DIM: usize = 16;

type C64 = Complex<f64>;

/// `coeff · P(X_{x.0}, X_{x.1}) P(Y_{y.0}, Y_{y.1})` where `P` is either a
/// commutator or an anticommutator. Indices are zero-based with `x.0 < x.1`
/// and `y.0 < y.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairProduct {
    pub x: (usize, usize),
    pub y: (usize, usize),
    pub coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    X,
    Y,
}

/// `coeff · {Z_{pair.0}, Z_{pair.1}}` on a single site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualTerm {
    pub site: Site,
    pub pair: (usize, usize),
    pub coeff: f64,
}

/// Collected expansion of a squared Bell operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorExpression {
    pub identity: f64,
    pub commutators: Vec<PairProduct>,
    pub anticommutators: Vec<PairProduct>,
    pub residual: Vec<ResidualTerm>,
}

impl OperatorExpression {
    /// The expression after imposing `[X_i, X_k] = [Y_j, Y_l] = 0`.
    pub fn with_commuting_sites(&self) -> Self {
        Self {
            commutators: Vec::new(),
            ..self.clone()
        }
    }

    pub fn commutator_weight(&self) -> f64 {
        self.commutators.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn anticommutator_weight(&self) -> f64 {
        self.anticommutators.iter().map(|t| t.coeff.abs()).sum()
    }

    pub fn residual_weight(&self) -> f64 {
        self.residual.iter().map(|t| t.coeff.abs()).sum()
    }

    /// JSON dump with one-based observable indices.
    pub fn to_json(&self) -> Value {
        let products = |terms: &[PairProduct]| -> Value {
            terms
                .iter()
                .map(|t| json!([[t.x.0 + 1, t.x.1 + 1], [t.y.0 + 1, t.y.1 + 1], t.coeff]))
                .collect()
        };
        let residual: Value = self
            .residual
            .iter()
            .map(|t| {
                let site = match t.site {
                    Site::X => "x",
                    Site::Y => "y",
                };
                json!([site, [t.pair.0 + 1, t.pair.1 + 1], t.coeff])
            })
            .collect();
        json!({
            "identity": self.identity,
            "commutators": products(&self.commutators),
            "anticommutators": products(&self.anticommutators),
            "residual": residual,
        })
    }
}

fn check_expandable(a: &CoefficientMatrix, max_side: usize) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "operator expansion needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > max_side {
        return Err(Error::SizeLimit(format!(
            "operator expansion is limited to {max_side} observables per site, got {}",
            a.rows()
        )));
    }
    if !a.is_ternary() {
        return Err(Error::InvalidArgument(
            "operator expansion needs entries in {+1, -1, 0}".into(),
        ));
    }
    Ok(())
}

/// Expands `B²` into identity, commutator-product, anticommutator-product and
/// single-site residual terms. Terms are sorted by `(x, y)` pair and zero
/// coefficients are dropped.
pub fn square_bell_operator(a: &CoefficientMatrix) -> Result<OperatorExpression> {
    check_expandable(a, MAX_EXPANSION_SIDE)?;
    let n = a.rows();
    let identity = a.entries().iter().map(|x| x * x).sum();

    let mut commutators = Vec::new();
    let mut anticommutators = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..n {
                for l in j + 1..n {
                    let alpha = a.get(i, j) * a.get(k, l);
                    let beta = a.get(i, l) * a.get(k, j);
                    let comm = 0.5 * (alpha - beta);
                    let acomm = 0.5 * (alpha + beta);
                    if comm != 0.0 {
                        commutators.push(PairProduct {
                            x: (i, k),
                            y: (j, l),
                            coeff: comm,
                        });
                    }
                    if acomm != 0.0 {
                        anticommutators.push(PairProduct {
                            x: (i, k),
                            y: (j, l),
                            coeff: acomm,
                        });
                    }
                }
            }
        }
    }

    let mut residual = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            let c: f64 = a.row(i).iter().zip(a.row(k)).map(|(p, q)| p * q).sum();
            if c != 0.0 {
                residual.push(ResidualTerm {
                    site: Site::X,
                    pair: (i, k),
                    coeff: c,
                });
            }
        }
    }
    for j in 0..n {
        for l in j + 1..n {
            let c: f64 = (0..n).map(|i| a.get(i, j) * a.get(i, l)).sum();
            if c != 0.0 {
                residual.push(ResidualTerm {
                    site: Site::Y,
                    pair: (j, l),
                    coeff: c,
                });
            }
        }
    }

    Ok(OperatorExpression {
        identity,
        commutators,
        anticommutators,
        residual,
    })
}

/// Upper bound on `‖B‖` from the expansion: `sqrt(c_I + 4 Σ|c_acomm| +
/// 2 Σ|c_residual| + 4 Σ|c_comm|)`, with the commutator sum dropped when
/// same-site observables commute.
pub fn norm_estimate(expr: &OperatorExpression, commuting_sites: bool) -> f64 {
    let mut total =
        expr.identity + 4.0 * expr.anticommutator_weight() + 2.0 * expr.residual_weight();
    if !commuting_sites {
        total += 4.0 * expr.commutator_weight();
    }
    total.sqrt()
}

fn observables_per_site(d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    let n = 2f64.powi(d as i32);
    if !n.is_finite() || d > 500 {
        return Err(Error::Domain(format!("d = {d} is too large to evaluate")));
    }
    Ok(n)
}

/// Closed-form estimate for `2^d` observables per site.
///
/// Commuting sites: `sqrt(4 · C(N,2) · N/2 + N²) = N^{3/2}`.
/// General: `sqrt(4 · C(N,2) · N + 4 · C(N,2) · N/2 + N²) = N sqrt(3N - 2)`.
/// The commuting form is rejected for `d = 1`, where the squared CHSH
/// operator has no anticommutator contribution.
pub fn paper_bound_formula(d: u32, commuting_sites: bool) -> Result<f64> {
    let n = observables_per_site(d)?;
    if commuting_sites && d < 2 {
        return Err(Error::Domain(
            "the commuting-site estimate needs d >= 2: for d = 1 the squared operator has no anticommutator terms"
                .into(),
        ));
    }
    let pairs = n * (n - 1.0) / 2.0;
    let mut total = 4.0 * pairs * (n / 2.0) + n * n;
    if !commuting_sites {
        total += 4.0 * pairs * n;
    }
    Ok(total.sqrt())
}

/// Warning attached to formula evaluations outside their intended range.
pub fn formula_warning(d: u32, commuting_sites: bool) -> Option<&'static str> {
    (d == 1 && !commuting_sites)
        .then_some("d = 1 has no anticommutator terms; the general formula is not tight here")
}

/// `2^{-d/2} (3·2^d - 2)^{1/2}`, the general estimate normalized by `2^{3d/2}`.
pub fn normalized_violation_estimate(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "normalized estimate needs d >= 2, got {d}"
        )));
    }
    let n = observables_per_site(d)?;
    Ok(((3.0 * n - 2.0) / n).sqrt())
}

fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

/// Random Hermitian matrix with spectrum in `{+1, -1}`.
fn random_involution(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<C64> {
    let u = random_unitary(rng, dim);
    let signs = DMatrix::from_fn(dim, dim, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if rng.random_bool(0.5) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(-1.0, 0.0)
        }
    });
    &u * signs * u.adjoint()
}

fn commutator(p: &DMatrix<C64>, q: &DMatrix<C64>) -> DMatrix<C64> {
    p * q - q * p
}

fn anticommutator(p: &DMatrix<C64>, q: &DMatrix<C64>) -> DMatrix<C64> {
    p * q + q * p
}

fn real(c: f64) -> C64 {
    C64::new(c, 0.0)
}

/// Evaluates `B²` for random dichotomic observables of local dimension `dim`,
/// once by direct matrix multiplication and once through
/// [`square_bell_operator`], and returns the largest entrywise discrepancy.
pub fn numeric_check(a: &CoefficientMatrix, dim: usize, seed: u64) -> Result<f64> {
    check_expandable(a, MAX_CHECK_SIDE)?;
    if dim == 0 || dim > MAX_CHECK_DIM {
        return Err(Error::SizeLimit(format!(
            "local dimension must be in 1..={MAX_CHECK_DIM}, got {dim}"
        )));
    }
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<_> = (0..n).map(|_| random_involution(&mut rng, dim)).collect();
    let ys: Vec<_> = (0..n).map(|_| random_involution(&mut rng, dim)).collect();
    let eye = DMatrix::<C64>::identity(dim, dim);
    let full = dim * dim;

    let mut bell = DMatrix::<C64>::zeros(full, full);
    for (k, x) in xs.iter().enumerate() {
        for (l, y) in ys.iter().enumerate() {
            let c = a.get(k, l);
            if c != 0.0 {
                bell += x.kronecker(y) * real(c);
            }
        }
    }
    let direct = &bell * &bell;

    let expr = square_bell_operator(a)?;
    let mut symbolic = DMatrix::<C64>::identity(full, full) * real(expr.identity);
    for t in &expr.commutators {
        let p = commutator(&xs[t.x.0], &xs[t.x.1]);
        let q = commutator(&ys[t.y.0], &ys[t.y.1]);
        symbolic += p.kronecker(&q) * real(t.coeff);
    }
    for t in &expr.anticommutators {
        let p = anticommutator(&xs[t.x.0], &xs[t.x.1]);
        let q = anticommutator(&ys[t.y.0], &ys[t.y.1]);
        symbolic += p.kronecker(&q) * real(t.coeff);
    }
    for t in &expr.residual {
        let term = match t.site {
            Site::X => anticommutator(&xs[t.pair.0], &xs[t.pair.1]).kronecker(&eye),
            Site::Y => eye.kronecker(&anticommutator(&ys[t.pair.0], &ys[t.pair.1])),
        };
        symbolic += term * real(t.coeff);
    }

    Ok((direct - symbolic)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{chsh_matrix, tensor_power};

    #[test]
    fn chsh_square() {
        let e = square_bell_operator(&chsh_matrix()).unwrap();
        assert_eq!(e.identity, 4.0);
        assert_eq!(
            e.commutators,
            vec![PairProduct {
                x: (0, 1),
                y: (0, 1),
                coeff: -1.0
            }]
        );
        assert!(e.anticommutators.is_empty());
        assert!(e.residual.is_empty());
    }

    #[test]
    fn four_observable_square_groupings() {
        let e = square_bell_operator(&tensor_power(2).unwrap()).unwrap();
        assert_eq!(e.identity, 16.0);
        assert_eq!(e.commutators.len(), 24);
        assert_eq!(e.anticommutators.len(), 12);
        assert!(e.residual.is_empty());
        assert!(e
            .commutators
            .iter()
            .chain(&e.anticommutators)
            .all(|t| t.coeff.abs() == 1.0));
        // every X pair: four commutator partners and two anticommutator partners
        for i in 0..4 {
            for k in i + 1..4 {
                let c = e.commutators.iter().filter(|t| t.x == (i, k)).count();
                let ac = e.anticommutators.iter().filter(|t| t.x == (i, k)).count();
                assert_eq!((c, ac), (4, 2));
            }
        }
        // {X1,X2}({Y1,Y3} - {Y2,Y4})
        let group: Vec<_> = e.anticommutators.iter().filter(|t| t.x == (0, 1)).collect();
        assert_eq!(group[0].y, (0, 2));
        assert_eq!(group[0].coeff, 1.0);
        assert_eq!(group[1].y, (1, 3));
        assert_eq!(group[1].coeff, -1.0);

        let commuting = e.with_commuting_sites();
        assert!(commuting.commutators.is_empty());
        assert_eq!(commuting.anticommutators.len(), 12);
    }

    #[test]
    fn residuals_for_non_orthogonal_matrix() {
        let ones = CoefficientMatrix::new(2, 2, vec![1.0; 4]).unwrap();
        let e = square_bell_operator(&ones).unwrap();
        assert_eq!(e.residual.len(), 2);
        assert!(e.residual.iter().all(|t| t.coeff == 2.0));
        assert!(numeric_check(&ones, 3, 5).unwrap() < 1e-10);
    }

    #[test]
    fn norm_estimates() {
        let chsh = square_bell_operator(&chsh_matrix()).unwrap();
        assert!((norm_estimate(&chsh, false) - 8f64.sqrt()).abs() < 1e-15);
        let e = square_bell_operator(&tensor_power(2).unwrap()).unwrap();
        assert_eq!(norm_estimate(&e, true), 8.0);
        assert_eq!(norm_estimate(&e, false), 160f64.sqrt());
    }

    #[test]
    fn formula_values() {
        assert_eq!(paper_bound_formula(2, true).unwrap(), 8.0);
        assert!((paper_bound_formula(2, false).unwrap() - 4.0 * 10f64.sqrt()).abs() < 1e-12);
        assert!((paper_bound_formula(3, false).unwrap() - 8.0 * 22f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            paper_bound_formula(1, true),
            Err(Error::Domain(_))
        ));
        assert_eq!(paper_bound_formula(1, false).unwrap(), 4.0);
        assert!(formula_warning(1, false).is_some());
        for d in 2..=10 {
            let commuting = paper_bound_formula(d, true).unwrap();
            assert!((commuting - 2f64.powf(1.5 * d as f64)).abs() < 1e-9 * commuting);
        }
    }

    #[test]
    fn normalized_estimate() {
        assert!((normalized_violation_estimate(2).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
        let limit = 3f64.sqrt();
        assert!((normalized_violation_estimate(20).unwrap() - limit).abs() < 1e-3);
        let mut prev = 0.0;
        for d in 2..=30 {
            let v = normalized_violation_estimate(d).unwrap();
            assert!(v > prev && v < limit);
            prev = v;
        }
        assert!(matches!(
            normalized_violation_estimate(1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn numeric_check_agrees() {
        assert!(numeric_check(&chsh_matrix(), 2, 0).unwrap() <= 1e-10);
        assert!(numeric_check(&tensor_power(2).unwrap(), 4, 0).unwrap() <= 1e-9);
        let z = CoefficientMatrix::zeros(3, 3).unwrap();
        assert_eq!(numeric_check(&z, 2, 0).unwrap(), 0.0);
    }

    #[test]
    fn guards() {
        let big = CoefficientMatrix::zeros(9, 9).unwrap();
        assert!(matches!(
            numeric_check(&big, 2, 0),
            Err(Error::SizeLimit(_))
        ));
        assert!(matches!(
            numeric_check(&chsh_matrix(), 17, 0),
            Err(Error::SizeLimit(_))
        ));
        let frac = CoefficientMatrix::new(1, 1, vec![0.5]).unwrap();
        assert!(square_bell_operator(&frac).is_err());
        let rect = CoefficientMatrix::zeros(2, 3).unwrap();
        assert!(matches!(
            square_bell_operator(&rect),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            square_bell_operator(&CoefficientMatrix::zeros(65, 65).unwrap()),
            Err(Error::SizeLimit(_))
        ));
    }

    #[test]
    fn json_dump_uses_one_based_indices() {
        let v = square_bell_operator(&chsh_matrix()).unwrap().to_json();
        assert_eq!(v["identity"], 4.0);
        assert_eq!(v["commutators"], json!([[[1, 2], [1, 2], -1.0]]));
        assert_eq!(v["anticommutators"], json!([]));
        assert_eq!(v["residual"], json!([]));
    }
}
