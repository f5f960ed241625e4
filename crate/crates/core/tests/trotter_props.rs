mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qblue::ast::SiteList;
use qblue::matrix::{matrix_exp_sim, op_norm, phase_distance, DenseOperator};
use qblue::pauli::{Pauli, PauliString, PauliSum};
use qblue::trotter::{circuit_to_matrix, fit_machine, plan_unitary, synthesize_plan, synthesize_term, trotterize, MachineSpec};

use common::pauli::arb_string;

fn exact(hs: &PauliSum, t: f64) -> DenseOperator {
    matrix_exp_sim(&DenseOperator::new(SiteList::qubits(hs.n_qubits()), hs.to_matrix().unwrap()), t).unwrap()
}

fn non_commuting_sum() -> impl Strategy<Value = PauliSum> {
    (2usize..=3)
        .prop_flat_map(|n| prop::collection::vec((0.3f64..1.0, any::<bool>(), arb_string(n)), 2..5))
        .prop_filter_map("needs a non-commuting pair", |terms| {
            let n = terms[0].2.len();
            let mut s = PauliSum::zero(n);
            for (c, neg, p) in terms {
                s.add_term(Complex64::new(if neg { -c } else { c }, 0.0), p);
            }
            let strings: Vec<&PauliString> = s.terms().map(|(p, _)| p).collect();
            let clash = strings.iter().any(|a| strings.iter().any(|b| !a.commutes_with(b)));
            clash.then_some(s)
        })
}

/// Random sums built only from shapes the IBM machine offers.
fn ibm_shaped_sum() -> impl Strategy<Value = PauliSum> {
    (2usize..=5).prop_flat_map(|n| {
        prop::collection::vec((0..n - 1, 0usize..4, -2.0f64..2.0), 1..8).prop_map(move |slots| {
            let shapes = [[Pauli::Z, Pauli::X], [Pauli::Z, Pauli::Z], [Pauli::Z, Pauli::I], [Pauli::I, Pauli::X]];
            let mut s = PauliSum::zero(n);
            for (j, shape, c) in slots {
                let mut p = PauliString::identity(n);
                p.0[j..j + 2].copy_from_slice(&shapes[shape]);
                s.add_term(Complex64::new(c, 0.0), p);
            }
            s.add_term(Complex64::new(0.25, 0.0), PauliString::identity(n));
            s
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gadget_is_the_pauli_exponential(p in (1usize..=4).prop_flat_map(arb_string), theta in -6.0f64..6.0) {
        prop_assume!(!p.is_identity());
        let hs = PauliSum::from_term(Complex64::new(1.0, 0.0), p.clone());
        let u = circuit_to_matrix(&synthesize_term(&p, theta).unwrap()).unwrap();
        prop_assert!(phase_distance(&exact(&hs, theta / 2.0).mat, &u.mat) <= 1e-9);
    }

    #[test]
    fn circuits_match_their_plans(hs in non_commuting_sum(), n in 1usize..6) {
        let plan = trotterize(&hs, 0.4, n).unwrap();
        let u = circuit_to_matrix(&synthesize_plan(&plan).unwrap()).unwrap();
        prop_assert!(qblue::matrix::max_abs(&(u.mat - plan_unitary(&plan))) <= 1e-9);
    }

    #[test]
    fn trotter_error_is_first_order(hs in non_commuting_sum()) {
        let t = 0.5;
        let target = exact(&hs, t).mat;
        let err = |n: usize| op_norm(&(plan_unitary(&trotterize(&hs, t, n).unwrap()) - &target));
        let (e1, e2, e3) = (err(16), err(32), err(64));
        prop_assume!(e3 > 1e-9);
        for r in [e1 / e2, e2 / e3] {
            prop_assert!((1.7..=2.3).contains(&r), "ratios {} {}", e1 / e2, e2 / e3);
        }
    }

    #[test]
    fn fitted_schedule_rebuilds_the_input(hs in ibm_shaped_sum()) {
        let spec = MachineSpec::ibm();
        let schedule = fit_machine(&hs, &spec).unwrap();
        prop_assert!(schedule.to_pauli_sum(&spec).approx_eq(&hs, 1e-12));
    }
}
