use bellbound::quantum::GramSolution;
use bellbound::{
    bell_value, chsh_matrix, clifford_generators, quantum_bound, realize, tensor_power,
    CoefficientMatrix, QuantumOptions,
};
use nalgebra::{Complex, DMatrix};

fn check_realization(a: &CoefficientMatrix, gram: &GramSolution) {
    let real = realize(a, gram).unwrap();
    let expected = gram.correlations();
    for (k, row) in expected.iter().enumerate() {
        for (l, &c) in row.iter().enumerate() {
            assert!((real.correlation(k, l) - c).abs() <= 1e-10);
        }
    }
    let value = bell_value(&real, a).unwrap();
    assert!((value - gram.objective).abs() <= 1e-9);
    assert!(real.max_involution_defect() <= 1e-10);
    let tr = real.state.trace();
    assert!((tr - Complex::new(1.0, 0.0)).norm() <= 1e-12);
    let state_eigs = real.state.clone().symmetric_eigen().eigenvalues;
    assert!(state_eigs.iter().all(|&e| e >= -1e-12));
    for z in real.x_observables.iter().chain(&real.y_observables) {
        let eigs = z.clone().symmetric_eigen().eigenvalues;
        assert!(eigs.iter().all(|e| (e.abs() - 1.0).abs() <= 1e-9));
    }
}

#[test]
fn chsh_optimum_is_realized() {
    let a = chsh_matrix();
    let q = quantum_bound(&a, &QuantumOptions::default()).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for row in q.primal.correlations() {
        for c in row {
            assert!((c.abs() - h).abs() <= 1e-6);
        }
    }
    check_realization(&a, &q.primal);
}

#[test]
fn four_observable_optimum_is_realized() {
    let a = tensor_power(2).unwrap();
    let q = quantum_bound(&a, &QuantumOptions::default()).unwrap();
    check_realization(&a, &q.primal);
}

#[test]
fn random_matrix_optimum_is_realized() {
    let a = CoefficientMatrix::new(
        3,
        5,
        (0..15)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0)
            .collect(),
    )
    .unwrap();
    let q = quantum_bound(&a, &QuantumOptions::default()).unwrap();
    check_realization(&a, &q.primal);
}

#[test]
fn generator_traces_are_orthogonal() {
    for r in 1..=8 {
        let b = clifford_generators(r).unwrap();
        let d = b.dim as f64;
        for (i, g) in b.generators.iter().enumerate() {
            for (j, h) in b.generators.iter().enumerate() {
                let tr = (g * h).trace();
                let expected = if i == j { d } else { 0.0 };
                assert!((tr - Complex::new(expected, 0.0)).norm() <= 1e-12);
            }
        }
    }
    let b = clifford_generators(1).unwrap();
    let eye = DMatrix::<Complex<f64>>::identity(2, 2);
    assert_eq!(&b.generators[0] * &b.generators[0], eye);
}
