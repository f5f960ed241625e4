//! A typed language for second-quantized Hamiltonians on mixed boson and
//! fermion lattices.
//!
//! Programs are checked for site-layout consistency and Hermiticity, run
//! against sparse Fock states, mapped to qubits by direct, Holstein-Primakoff
//! or Jordan-Wigner encodings, and compiled into Trotterized gate circuits or
//! fitted onto analog machine templates.

pub mod ast;
pub mod canonical;
pub mod encodings;
pub mod lang;
pub mod matrix;
pub mod pauli;
pub mod semantics;
pub mod trotter;
pub mod typecheck;

pub use ast::{desugar_indexed, scale, site_layout, Flag, HamExpr, LadderKind, OpType, SiteList, SiteType};
pub use canonical::{canonicalize, dagger_normalize, CanonicalForm};
pub use matrix::{expr_to_matrix, ground_energy, matrix_exp_sim, matrix_log, DenseOperator};
pub use pauli::{Pauli, PauliString, PauliSum};
pub use semantics::{apply, expectation, inner_product, normalize, FockState};
pub use typecheck::{check, is_hermitian, typecheck, TypeError};
