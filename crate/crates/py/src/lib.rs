//! Python bindings: parse programs and run the checker, encoder, compiler
//! and dense backend from Python.

use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use qblue::ast::{Flag, HamExpr, SiteList};
use qblue::encodings::{encode, Encoding};
use qblue::lang;
use qblue::matrix::{expr_to_matrix, ground_energy, matrix_exp_sim, phase_distance, DenseOperator};
use qblue::trotter::{circuit_to_matrix, compile_digital};
use qblue::typecheck::check;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_encoding(text: Option<&str>) -> PyResult<Option<Encoding>> {
    text.map(|t| Encoding::parse(t).ok_or_else(|| PyValueError::new_err(format!("unknown encoding {t:?}"))))
        .transpose()
}

/// A parsed program.
#[pyclass(module = "qblue", frozen)]
struct Program {
    inner: lang::Program,
}

impl Program {
    fn def(&self, name: &str) -> PyResult<&HamExpr> {
        self.inner
            .get(name)
            .ok_or_else(|| PyKeyError::new_err(name.to_string()))
    }

    fn hermitian(&self, name: &str) -> PyResult<&HamExpr> {
        let e = self.def(name)?;
        let ty = check(e).map_err(value_err)?.ty;
        if ty.flag != Flag::H {
            return Err(PyValueError::new_err(format!("`{name}` has type {ty}; a Hermitian operator is required")));
        }
        Ok(e)
    }
}

#[pymethods]
impl Program {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        lang::parse(source).map(|inner| Program { inner }).map_err(value_err)
    }

    #[getter]
    fn layout(&self) -> String {
        self.inner.layout.to_decl()
    }

    fn names(&self) -> Vec<String> {
        self.inner.definitions.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Type of a definition, e.g. `F[h](t(2) ⊗ t(2))`.
    fn type_of(&self, name: &str) -> PyResult<String> {
        Ok(check(self.def(name)?).map_err(value_err)?.ty.to_string())
    }

    fn is_hermitian(&self, name: &str) -> PyResult<bool> {
        Ok(check(self.def(name)?).map_err(value_err)?.ty.flag == Flag::H)
    }

    /// Pauli terms of the encoded Hamiltonian as `(string, coefficient)`.
    #[pyo3(signature = (name, encoding=None))]
    fn pauli_terms(&self, name: &str, encoding: Option<&str>) -> PyResult<Vec<(String, Complex64)>> {
        let e = self.def(name)?;
        let sites = check(e).map_err(value_err)?.ty.sites;
        let enc = match parse_encoding(encoding)? {
            Some(enc) => enc,
            None => Encoding::default_for(&sites).map_err(value_err)?,
        };
        let (hs, _) = encode(e, enc).map_err(value_err)?;
        Ok(hs.terms().map(|(p, c)| (p.to_string(), *c)).collect())
    }

    fn ground_energy(&self, name: &str) -> PyResult<f64> {
        let m = expr_to_matrix(self.hermitian(name)?).map_err(value_err)?;
        Ok(ground_energy(&m).map_err(value_err)?.energy)
    }

    /// Trotterized circuit in the text circuit format.
    #[pyo3(signature = (name, t, n, encoding=None))]
    fn compile(&self, name: &str, t: f64, n: usize, encoding: Option<&str>) -> PyResult<String> {
        let compiled = compile_digital(self.hermitian(name)?, t, n, parse_encoding(encoding)?).map_err(value_err)?;
        Ok(compiled.circuit.to_string())
    }

    /// Distance up to global phase between the compiled circuit and exact
    /// evolution of the encoded Hamiltonian.
    #[pyo3(signature = (name, t, n, encoding=None))]
    fn verify(&self, name: &str, t: f64, n: usize, encoding: Option<&str>) -> PyResult<f64> {
        let compiled = compile_digital(self.hermitian(name)?, t, n, parse_encoding(encoding)?).map_err(value_err)?;
        let width = compiled.hamiltonian.n_qubits();
        let h = DenseOperator::new(SiteList::qubits(width), compiled.hamiltonian.to_matrix().map_err(value_err)?);
        let exact = matrix_exp_sim(&h, t).map_err(value_err)?;
        let u = circuit_to_matrix(&compiled.circuit).map_err(value_err)?;
        Ok(phase_distance(&exact.mat, &u.mat))
    }

    /// Source text that parses back to the same program.
    fn pretty(&self) -> String {
        lang::pretty_program(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Program(sites {}; {})", self.inner.layout.to_decl(), self.names().join(", "))
    }
}

#[pymodule(name = "qblue")]
fn qblue_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Program>()?;
    Ok(())
}
