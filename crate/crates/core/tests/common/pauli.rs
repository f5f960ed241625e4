use num_complex::Complex64;
use proptest::prelude::*;
use qblue::pauli::{Pauli, PauliString, PauliSum};

pub fn arb_letter() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

pub fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
    prop::collection::vec(arb_letter(), n).prop_map(PauliString)
}

pub fn arb_coeff() -> impl Strategy<Value = Complex64> {
    prop_oneof![
        (-2.0f64..2.0).prop_map(|re| Complex64::new(re, 0.0)),
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im)),
    ]
}

pub fn arb_sum_on(n: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((arb_coeff(), arb_string(n)), 0..6).prop_map(move |terms| {
        let mut s = PauliSum::zero(n);
        for (c, p) in terms {
            s.add_term(c, p);
        }
        s
    })
}

pub fn arb_sum(max_qubits: usize) -> impl Strategy<Value = PauliSum> {
    (1..=max_qubits).prop_flat_map(arb_sum_on)
}
