//! Classical and quantum bounds for generalized CHSH correlation inequalities.
//!
//! * [`matrix`]: coefficient matrices, the CHSH matrix and its Kronecker powers, JSON I/O.
//! * [`classical`]: exact local bound by Gray-code enumeration.
//! * [`quantum`]: Tsirelson bound by Gram-vector ascent with a dual PSD certificate.
//! * [`operator`]: symbolic square of the Bell operator and norm estimates.
//! * [`realization`]: observables and a state reproducing Gram correlations.
//! * [`search`]: random search for large quantum/classical ratios.

pub mod classical;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod operator;
pub mod quantum;
pub mod realization;
pub mod search;

pub use classical::{classical_bound, evaluate_classical, ClassicalBoundResult, SignAssignment};
pub use error::{Error, Result};
pub use matrix::{chsh_matrix, load_matrix, save_matrix, tensor_power, CoefficientMatrix};
pub use operator::{
    norm_estimate, normalized_violation_estimate, numeric_check, paper_bound_formula,
    square_bell_operator, OperatorExpression,
};
pub use quantum::{
    check_dual, quantum_bound, violation_ratio, DualCertificate, GramDimension, GramSolution,
    QuantumBoundResult, QuantumOptions,
};
pub use realization::{
    bell_value, clifford_generators, realize, CliffordBasis, ObservableRealization,
};
pub use search::{
    ratio_search, reference_constants, RatioSearch, ReferenceConstants, SearchRecord,
};
