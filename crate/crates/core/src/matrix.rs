//! Dense-matrix backend: compilation of expressions to matrices, Hermitian
//! exponentials, principal logarithms and ground states.
//!
//! Matrices are indexed in the occupation-number product basis with site 0 as
//! the most significant digit.

use std::fmt;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::ast::{site_layout, AstError, HamExpr, LadderKind, SiteList, SiteType};
use crate::semantics::FockState;

/// Largest Hilbert-space dimension handled densely (twelve qubits).
pub const DIM_CAP: usize = 4096;

/// Max-entry tolerance for Hermiticity and unitarity checks.
pub const CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("dimension {dim} exceeds the cap of {DIM_CAP}")]
    DimensionCap { dim: String },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("eigendecomposition did not converge")]
    NoConvergence,
    #[error(transparent)]
    Layout(#[from] AstError),
    #[error("malformed matrix dump: {0}")]
    Parse(String),
}

/// A dense operator together with the site layout it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub sites: SiteList,
    pub mat: DMatrix<Complex64>,
}

pub fn check_dim(sites: &SiteList) -> Result<usize, MatrixError> {
    match sites.dim() {
        Some(d) if d <= DIM_CAP => Ok(d),
        Some(d) => Err(MatrixError::DimensionCap { dim: d.to_string() }),
        None => Err(MatrixError::DimensionCap {
            dim: format!("product of {sites}"),
        }),
    }
}

fn ladder_matrix(kind: LadderKind, m: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m, m);
    for k in 0..m.saturating_sub(1) {
        let v = Complex64::new(((k + 1) as f64).sqrt(), 0.0);
        match kind {
            LadderKind::Create => out[(k + 1, k)] = v,
            LadderKind::Annihilate => out[(k, k + 1)] = v,
        }
    }
    out
}

fn parity_diagonal(sites: &[SiteType]) -> Vec<f64> {
    let mut diag = vec![1.0];
    for s in sites {
        let mut next = Vec::with_capacity(diag.len() * s.dim());
        for &d in &diag {
            for k in 0..s.dim() {
                let flip = s.is_fermion() && k % 2 == 1;
                next.push(if flip { -d } else { d });
            }
        }
        diag = next;
    }
    diag
}

fn build(e: &HamExpr, sites: &[SiteType]) -> DMatrix<Complex64> {
    match e {
        HamExpr::Ladder { kind, amp, site } => ladder_matrix(*kind, site.dim()) * *amp,
        HamExpr::Identity { amp, site } => DMatrix::identity(site.dim(), site.dim()) * *amp,
        HamExpr::Dagger(inner) => build(inner, sites).adjoint(),
        HamExpr::Sum(l, r) => build(l, sites) + build(r, sites),
        HamExpr::Seq(l, r) => build(l, sites) * build(r, sites),
        HamExpr::Tensor(l, r) => {
            let k = l.arity();
            let (ls, rs) = sites.split_at(k);
            let a = build(l, ls);
            let b = build(r, rs);
            let left_fermions = ls.iter().any(|s| s.is_fermion());
            let right_fermions = rs.iter().any(|s| s.is_fermion());
            if !left_fermions || !right_fermions {
                return a.kronecker(&b);
            }
            // Odd part of B picks up the parity of the left block.
            let pr = parity_diagonal(rs);
            let pl = parity_diagonal(ls);
            let n = b.nrows();
            let b_odd = DMatrix::from_fn(n, n, |i, j| if pr[i] * pr[j] < 0.0 { b[(i, j)] } else { Complex64::default() });
            let b_even = &b - &b_odd;
            let a_par = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * pl[j]);
            a.kronecker(&b_even) + a_par.kronecker(&b_odd)
        }
    }
}

/// Dense matrix of `e` over its inferred layout.
pub fn expr_to_matrix(e: &HamExpr) -> Result<DenseOperator, MatrixError> {
    let sites = site_layout(e)?;
    check_dim(&sites)?;
    let mat = build(e, &sites);
    Ok(DenseOperator { sites, mat })
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    max_abs(&(m - m.adjoint()))
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<SymmetricEigen<Complex64, nalgebra::Dyn>, MatrixError> {
    let dev = hermitian_deviation(m);
    if dev > CHECK_TOL {
        return Err(MatrixError::NotHermitian(dev));
    }
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::try_new(sym, 1e-15, 0).ok_or(MatrixError::NoConvergence)
}

/// `exp(-i H t)` via the spectral decomposition of Hermitian `H`.
pub fn matrix_exp_sim(h: &DenseOperator, t: f64) -> Result<DenseOperator, MatrixError> {
    let eig = hermitian_eigen(&h.mat)?;
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -l * t)),
    );
    let mat = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(DenseOperator {
        sites: h.sites.clone(),
        mat,
    })
}

/// Hermitian `H` with `exp(-i H) = U`, eigenphases taken in `(-π, π]`.
pub fn matrix_log(u: &DenseOperator) -> Result<DenseOperator, MatrixError> {
    let n = u.mat.nrows();
    let dev = max_abs(&(u.mat.adjoint() * &u.mat - DMatrix::identity(n, n)));
    if dev > CHECK_TOL {
        return Err(MatrixError::NotUnitary(dev));
    }
    let (q, t) = Schur::try_new(u.mat.clone(), 1e-15, 0)
        .ok_or(MatrixError::NoConvergence)?
        .unpack();
    let angles = DVector::from_iterator(
        n,
        (0..n).map(|k| {
            // arg is in (-π, π]; the Hermitian generator is its negation.
            let theta = t[(k, k)].arg();
            Complex64::new(if theta == -std::f64::consts::PI { std::f64::consts::PI } else { theta }, 0.0)
        }),
    );
    let h = &q * DMatrix::from_diagonal(&angles) * q.adjoint() * Complex64::new(-1.0, 0.0);
    let mat = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(DenseOperator {
        sites: u.sites.clone(),
        mat,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    pub state: FockState,
}

/// Smallest eigenvalue and a normalized eigenvector, phased so that its
/// largest component is real and positive.
pub fn ground_energy(h: &DenseOperator) -> Result<GroundState, MatrixError> {
    let eig = hermitian_eigen(&h.mat)?;
    let (idx, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(MatrixError::NoConvergence)?;
    let mut v: DVector<Complex64> = eig.eigenvectors.column(idx).into_owned();
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() > 0.0 {
        v *= pivot.conj() / pivot.norm();
    }
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    Ok(GroundState {
        energy,
        state: FockState::from_vector(h.sites.clone(), &v),
    })
}

/// `min_α max |a - e^{iα} b|`, the max-entry distance up to global phase.
pub fn phase_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let dist = |alpha: f64| max_abs(&(a - b * Complex64::from_polar(1.0, alpha)));
    let overlap: Complex64 = b.iter().zip(a.iter()).map(|(x, y)| x.conj() * y).sum();
    let start = overlap.arg();
    // The max-norm is not smooth in α: coarse scan around the trace phase,
    // then golden-section refinement of the best bracket.
    let steps = 256;
    let width = std::f64::consts::PI;
    let mut best = (dist(start), start);
    for k in 0..=steps {
        let alpha = start - width + 2.0 * width * k as f64 / steps as f64;
        let d = dist(alpha);
        if d < best.0 {
            best = (d, alpha);
        }
    }
    let h = 2.0 * width / steps as f64;
    let (mut lo, mut hi) = (best.1 - h, best.1 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if dist(m1) < dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.0.min(dist(0.5 * (lo + hi)))
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().max()
}

/// Conjugation by `X` on every qubit: maps an operator written in the
/// occupation basis of `t(2)` sites to the computational qubit basis, where
/// occupation `1` is bit `0`.
pub fn flip_qubit_basis(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
}

impl DenseOperator {
    pub fn new(sites: SiteList, mat: DMatrix<Complex64>) -> Self {
        DenseOperator { sites, mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Parses the dump format written by `Display`.
    pub fn parse(text: &str, sites: SiteList) -> Result<DenseOperator, MatrixError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MatrixError::Parse("empty dump".into()))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim ")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| MatrixError::Parse(format!("bad header {header:?}")))?;
        let mut mat = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let line = lines.next().ok_or_else(|| MatrixError::Parse(format!("missing row {r}")))?;
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| MatrixError::Parse(format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            if nums.len() != 2 * dim {
                return Err(MatrixError::Parse(format!("row {r} has {} numbers", nums.len())));
            }
            for c in 0..dim {
                mat[(r, c)] = Complex64::new(nums[2 * c], nums[2 * c + 1]);
            }
        }
        Ok(DenseOperator { sites, mat })
    }
}

/// `dim N` followed by one row per line of `re im` pairs.
impl fmt::Display for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dim {}", self.mat.nrows())?;
        for r in 0..self.mat.nrows() {
            let row: Vec<String> = (0..self.mat.ncols())
                .map(|c| {
                    let z = self.mat[(r, c)];
                    format!("{} {}", z.re, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join("  "))?;
        }
        Ok(())
    }
}
