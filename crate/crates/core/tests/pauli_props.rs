mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qblue::matrix::{hermitian_deviation, max_abs};
use qblue::pauli::{is_hermitian_pauli, multiply, pauli_to_matrix, simplify, PauliSum};

use common::pauli::{arb_sum, arb_sum_on};

fn mat(s: &PauliSum) -> DMatrix<Complex64> {
    pauli_to_matrix(s).unwrap()
}

fn same_width() -> impl Strategy<Value = (PauliSum, PauliSum, PauliSum)> {
    (1usize..=4).prop_flat_map(|n| (arb_sum_on(n), arb_sum_on(n), arb_sum_on(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn multiply_is_associative_and_faithful((a, b, c) in same_width()) {
        let left = multiply(&multiply(&a, &b), &c);
        let right = multiply(&a, &multiply(&b, &c));
        prop_assert!(left.approx_eq(&right, 1e-12));
        prop_assert!(max_abs(&(mat(&multiply(&a, &b)) - mat(&a) * mat(&b))) <= 1e-12);
        prop_assert!(max_abs(&(mat(&a.add(&b)) - (mat(&a) + mat(&b)))) <= 1e-12);
    }

    #[test]
    fn tensor_is_kronecker(a in arb_sum(2), b in arb_sum(2)) {
        prop_assert!(max_abs(&(mat(&a.tensor(&b)) - mat(&a).kronecker(&mat(&b)))) <= 1e-12);
    }

    #[test]
    fn simplify_is_idempotent_and_faithful(a in arb_sum(4), tol in prop_oneof![Just(1e-14), Just(1e-3)]) {
        let once = simplify(&a, tol);
        prop_assert_eq!(simplify(&once, tol), once.clone());
        let bound = tol * a.len().max(1) as f64 + 1e-12;
        prop_assert!(max_abs(&(mat(&once) - mat(&a))) <= bound);
    }

    #[test]
    fn hermiticity_agrees_with_the_matrix(a in arb_sum(3), real in any::<bool>()) {
        let s = if real { a.add(&a.adjoint()) } else { a };
        prop_assert_eq!(is_hermitian_pauli(&s), hermitian_deviation(&mat(&s)) <= 1e-12);
    }
}
