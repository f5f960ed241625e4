//! Pauli strings and sums with exact single-qubit product rules.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients at or below this magnitude are dropped from sums.
pub const PRUNE_TOL: f64 = 1e-14;

/// Tolerance used when deciding whether a sum is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// `self · other = phase · result`.
    pub fn mul(self, other: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        match (self, other) {
            (I, p) | (p, I) => (one, p),
            (a, b) if a == b => (one, I),
            (X, Y) => (i, Z),
            (Y, X) => (-i, Z),
            (Y, Z) => (i, X),
            (Z, Y) => (-i, X),
            (Z, X) => (i, Y),
            (X, Z) => (-i, Y),
            _ => unreachable!("all pairs covered"),
        }
    }

    /// 2×2 matrix in the computational basis.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        match self {
            Pauli::I => [[o, z], [z, o]],
            Pauli::X => [[z, o], [o, z]],
            Pauli::Y => [[z, -i], [i, z]],
            Pauli::Z => [[o, z], [z, -o]],
        }
    }
}

/// A tensor product of single-qubit Paulis; qubit 0 is leftmost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    /// A single non-identity letter at `q` on `n` qubits.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut s = vec![Pauli::I; n];
        s[q] = p;
        PauliString(s)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Indices of the non-identity letters.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn mul(&self, other: &PauliString) -> (Complex64, PauliString) {
        assert_eq!(self.len(), other.len(), "Pauli string width mismatch");
        let mut phase = Complex64::new(1.0, 0.0);
        let letters = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| {
                let (ph, p) = a.mul(b);
                phase *= ph;
                p
            })
            .collect();
        (phase, PauliString(letters))
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .0
            .iter()
            .zip(&other.0)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, PauliError> {
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| PauliError::BadLetter(c)))
            .collect::<Result<Vec<_>, _>>()
            .map(PauliString)
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PauliString {
    type Error = PauliError;

    fn try_from(s: String) -> Result<Self, PauliError> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PauliError {
    #[error("invalid Pauli letter {0:?}")]
    BadLetter(char),
    #[error("Pauli string {string} has width {found}, expected {expected}")]
    WidthMismatch {
        string: String,
        found: usize,
        expected: usize,
    },
    #[error("malformed Pauli sum line {line}: {text:?}")]
    BadLine { line: usize, text: String },
    #[error("Pauli sum on {0} qubits exceeds the dense-matrix cap")]
    TooLarge(usize),
}

/// A complex linear combination of Pauli strings of equal width, kept in
/// canonical form: unique strings, sorted, no near-zero coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(Complex64::new(1.0, 0.0), PauliString::identity(n_qubits))
    }

    pub fn from_term(coeff: Complex64, string: PauliString) -> Self {
        let mut s = Self::zero(string.len());
        s.add_term(coeff, string);
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = (Complex64, PauliString)>,
    {
        let mut s = Self::zero(n_qubits);
        for (c, p) in terms {
            if p.len() != n_qubits {
                return Err(PauliError::WidthMismatch {
                    string: p.to_string(),
                    found: p.len(),
                    expected: n_qubits,
                });
            }
            s.add_term(c, p);
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Adds `coeff · string`, merging and pruning.
    pub fn add_term(&mut self, coeff: Complex64, string: PauliString) {
        assert_eq!(string.len(), self.n_qubits, "Pauli string width mismatch");
        match self.terms.entry(string) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().norm() <= PRUNE_TOL {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if coeff.norm() > PRUNE_TOL {
                    v.insert(coeff);
                }
            }
        }
    }

    pub fn add(&self, other: &PauliSum) -> PauliSum {
        assert_eq!(self.n_qubits, other.n_qubits, "Pauli sum width mismatch");
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(*c, p.clone());
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(z * c, p.clone());
        }
        out
    }

    /// Distributes the product using the single-qubit multiplication table.
    pub fn multiply(&self, other: &PauliSum) -> PauliSum {
        assert_eq!(self.n_qubits, other.n_qubits, "Pauli sum width mismatch");
        let mut out = PauliSum::zero(self.n_qubits);
        for (p, c) in &self.terms {
            for (q, d) in &other.terms {
                let (phase, r) = p.mul(q);
                out.add_term(phase * c * d, r);
            }
        }
        out
    }

    /// Tensor product; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits + other.n_qubits);
        for (p, c) in &self.terms {
            for (q, d) in &other.terms {
                let mut letters = p.0.clone();
                letters.extend_from_slice(&q.0);
                out.add_term(c * d, PauliString(letters));
            }
        }
        out
    }

    pub fn adjoint(&self) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(c.conj(), p.clone());
        }
        out
    }

    /// Re-canonicalizes with a caller-chosen pruning threshold.
    pub fn simplify(&self, tol: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.norm() > tol)
                .map(|(p, c)| (p.clone(), *c))
                .collect(),
        }
    }

    /// All coefficients real (to `HERMITIAN_TOL`).
    pub fn is_hermitian(&self) -> bool {
        self.terms.values().all(|c| c.im.abs() <= HERMITIAN_TOL)
    }

    pub fn approx_eq(&self, other: &PauliSum, tol: f64) -> bool {
        self.n_qubits == other.n_qubits
            && self
                .terms
                .keys()
                .chain(other.terms.keys())
                .all(|p| (self.coeff(p) - other.coeff(p)).norm() <= tol)
    }

    /// Dense matrix in the computational basis, qubit 0 most significant.
    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>, PauliError> {
        if self.n_qubits > 12 {
            return Err(PauliError::TooLarge(self.n_qubits));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, c) in &self.terms {
            add_string_matrix(&mut m, p, *c);
        }
        Ok(m)
    }

    /// Parses the text form produced by `Display`: one `(re±imi) STRING`
    /// per line. The width is taken from the first term, or from `n_qubits`
    /// when given.
    pub fn parse(text: &str, n_qubits: Option<usize>) -> Result<PauliSum, PauliError> {
        let mut terms = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || PauliError::BadLine {
                line: i + 1,
                text: line.to_string(),
            };
            let rest = line.strip_prefix('(').ok_or_else(bad)?;
            let close = rest.find(')').ok_or_else(bad)?;
            let coeff: Complex64 = rest[..close].trim().parse().map_err(|_| bad())?;
            let string: PauliString = rest[close + 1..].trim().parse()?;
            terms.push((coeff, string));
        }
        let n = n_qubits
            .or_else(|| terms.first().map(|(_, p)| p.len()))
            .unwrap_or(0);
        PauliSum::from_terms(n, terms)
    }
}

fn add_string_matrix(m: &mut DMatrix<Complex64>, p: &PauliString, c: Complex64) {
    let n = p.len();
    let dim = 1usize << n;
    // Each row has exactly one nonzero entry: flip the X/Y bits and collect
    // the phase from the diagonal Y/Z factors.
    let mut flip = 0usize;
    for (q, &l) in p.0.iter().enumerate() {
        if matches!(l, Pauli::X | Pauli::Y) {
            flip |= 1 << (n - 1 - q);
        }
    }
    for col in 0..dim {
        let row = col ^ flip;
        let mut amp = c;
        for (q, &l) in p.0.iter().enumerate() {
            let bit = (col >> (n - 1 - q)) & 1;
            amp *= l.matrix()[(row >> (n - 1 - q)) & 1][bit];
        }
        m[(row, col)] += amp;
    }
}

/// One `(+0.125+0.000i) XXYY` line per term, honoring the formatter
/// precision (default 12 digits).
impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(12);
        for (p, c) in &self.terms {
            writeln!(f, "({:+.prec$}{:+.prec$}i) {}", c.re, c.im, p, prec = prec)?;
        }
        Ok(())
    }
}

pub fn multiply(a: &PauliSum, b: &PauliSum) -> PauliSum {
    a.multiply(b)
}

pub fn simplify(s: &PauliSum, tol: f64) -> PauliSum {
    s.simplify(tol)
}

pub fn is_hermitian_pauli(s: &PauliSum) -> bool {
    s.is_hermitian()
}

pub fn pauli_to_matrix(s: &PauliSum) -> Result<DMatrix<Complex64>, PauliError> {
    s.to_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn dense(p: Pauli) -> DMatrix<Complex64> {
        let m = p.matrix();
        DMatrix::from_fn(2, 2, |r, c| m[r][c])
    }

    #[test]
    fn letter_table_matches_matrices() {
        for a in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
            for b in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                let (phase, r) = a.mul(b);
                let lhs = dense(a) * dense(b);
                let rhs = dense(r) * phase;
                assert!((lhs - rhs).iter().all(|z| z.norm() < 1e-15), "{a:?}{b:?}");
            }
        }
    }

    #[test]
    fn xy_is_iz() {
        let x = PauliSum::from_term(c(1.0, 0.0), ps("X"));
        let y = PauliSum::from_term(c(1.0, 0.0), ps("Y"));
        let xy = x.multiply(&y);
        assert_eq!(xy.len(), 1);
        assert_eq!(xy.coeff(&ps("Z")), c(0.0, 1.0));
    }

    #[test]
    fn cancellation_prunes() {
        let mut s = PauliSum::from_term(c(0.5, 0.0), ps("XZ"));
        s.add_term(c(-0.5, 0.0), ps("XZ"));
        assert!(s.is_empty());
        let t = PauliSum::from_terms(2, vec![(c(1e-15, 0.0), ps("ZZ"))]).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn matrix_kron_order() {
        let s = PauliSum::from_term(c(1.0, 0.0), ps("ZI"));
        let m = s.to_matrix().unwrap();
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let x1 = PauliSum::from_term(c(1.0, 0.0), ps("IX")).to_matrix().unwrap();
        assert_eq!(x1[(1, 0)], c(1.0, 0.0));
        assert_eq!(x1[(2, 0)], c(0.0, 0.0));
    }

    #[test]
    fn text_round_trip() {
        let s = PauliSum::from_terms(
            2,
            vec![(c(0.125, 0.0), ps("XY")), (c(-0.25, 1.5), ps("ZI")), (c(1.0, 0.0), ps("II"))],
        )
        .unwrap();
        let text = s.to_string();
        assert!(text.contains("(+0.125000000000+0.000000000000i) XY"));
        let back = PauliSum::parse(&text, None).unwrap();
        assert!(back.approx_eq(&s, 1e-12));
        assert_eq!(format!("{s:.3}").lines().next().unwrap(), "(+1.000+0.000i) II");
    }

    #[test]
    fn serde_round_trip() {
        let s = PauliSum::from_term(c(0.5, -0.5), ps("XZ"));
        let json = serde_json::to_string(&s).unwrap();
        let back: PauliSum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn hermiticity() {
        assert!(PauliSum::from_term(c(0.3, 0.0), ps("XY")).is_hermitian());
        assert!(!PauliSum::from_term(c(0.3, 0.1), ps("XY")).is_hermitian());
    }

    #[test]
    fn commutation() {
        assert!(ps("XX").commutes_with(&ps("YY")));
        assert!(!ps("XI").commutes_with(&ps("ZI")));
    }
}
