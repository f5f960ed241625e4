//! Site types, operator types and the Hamiltonian expression tree.
//!
//! Expressions are built from scaled ladder operators on single sites and
//! combined with dagger, tensor, sum and sequencing (matrix product). Tensor
//! and sum chains are kept right-associated by the smart constructors so that
//! structurally equal operators compare equal.

use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The state space of a single lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SiteType {
    /// A truncated boson-like site `t(m)` with occupations `0..m`.
    Boson(usize),
    /// A fermionic site; always two-dimensional.
    Fermion,
}

impl SiteType {
    pub const QUBIT: SiteType = SiteType::Boson(2);

    pub fn dim(self) -> usize {
        match self {
            SiteType::Boson(m) => m,
            SiteType::Fermion => 2,
        }
    }

    pub fn is_fermion(self) -> bool {
        matches!(self, SiteType::Fermion)
    }
}

impl fmt::Display for SiteType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteType::Boson(m) => write!(f, "t({m})"),
            SiteType::Fermion => write!(f, "F"),
        }
    }
}

/// Ordered list of site types; the tensor type `t(m1) ⊗ t(m2) ⊗ ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SiteList(pub Vec<SiteType>);

impl SiteList {
    pub fn new(sites: Vec<SiteType>) -> Self {
        SiteList(sites)
    }

    pub fn qubits(n: usize) -> Self {
        SiteList(vec![SiteType::QUBIT; n])
    }

    pub fn single(site: SiteType) -> Self {
        SiteList(vec![site])
    }

    pub fn concat(&self, other: &SiteList) -> SiteList {
        let mut sites = self.0.clone();
        sites.extend_from_slice(&other.0);
        SiteList(sites)
    }

    /// Total Hilbert-space dimension, or `None` on overflow.
    pub fn dim(&self) -> Option<usize> {
        self.0.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.dim()))
    }

    pub fn has_fermions(&self) -> bool {
        self.0.iter().any(|s| s.is_fermion())
    }

    pub fn all_qubits(&self) -> bool {
        self.0.iter().all(|s| *s == SiteType::QUBIT)
    }

    /// Comma-separated declaration form, `t(2), t(4), F`.
    pub fn to_decl(&self) -> String {
        self.0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
    }
}

impl Deref for SiteList {
    type Target = [SiteType];

    fn deref(&self) -> &[SiteType] {
        &self.0
    }
}

impl fmt::Display for SiteList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" ⊗ "))
    }
}

/// Matrix kind flag. `H ⊑ P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flag {
    P,
    H,
}

impl Flag {
    pub fn join(self, other: Flag) -> Flag {
        if self == Flag::H && other == Flag::H {
            Flag::H
        } else {
            Flag::P
        }
    }

    /// Subtyping: `H ⊑ P`, and every flag is below itself.
    pub fn is_subtype_of(self, other: Flag) -> bool {
        self == other || (self == Flag::H && other == Flag::P)
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::P => write!(f, "p"),
            Flag::H => write!(f, "h"),
        }
    }
}

/// Operator type `F[ζ](ι)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpType {
    pub flag: Flag,
    pub sites: SiteList,
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F[{}]({})", self.flag, self.sites)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LadderKind {
    Create,
    Annihilate,
}

impl LadderKind {
    pub fn dagger(self) -> LadderKind {
        match self {
            LadderKind::Create => LadderKind::Annihilate,
            LadderKind::Annihilate => LadderKind::Create,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HamExpr {
    Ladder {
        kind: LadderKind,
        amp: Complex64,
        site: SiteType,
    },
    /// Identity on one site, carrying an amplitude (1 unless scaled).
    Identity { amp: Complex64, site: SiteType },
    Dagger(Box<HamExpr>),
    Tensor(Box<HamExpr>, Box<HamExpr>),
    Sum(Box<HamExpr>, Box<HamExpr>),
    /// Matrix product; the right operand acts first.
    Seq(Box<HamExpr>, Box<HamExpr>),
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl HamExpr {
    pub fn create(site: SiteType) -> HamExpr {
        HamExpr::Ladder {
            kind: LadderKind::Create,
            amp: ONE,
            site,
        }
    }

    pub fn annihilate(site: SiteType) -> HamExpr {
        HamExpr::Ladder {
            kind: LadderKind::Annihilate,
            amp: ONE,
            site,
        }
    }

    pub fn ladder(kind: LadderKind, site: SiteType) -> HamExpr {
        HamExpr::Ladder { kind, amp: ONE, site }
    }

    pub fn identity(site: SiteType) -> HamExpr {
        HamExpr::Identity { amp: ONE, site }
    }

    /// Identity over a whole layout, as a right-associated tensor chain.
    pub fn identity_on(layout: &[SiteType]) -> HamExpr {
        tensor_chain(layout.iter().map(|&s| HamExpr::identity(s)).collect())
            .expect("identity_on requires a non-empty layout")
    }

    pub fn dagger(e: HamExpr) -> HamExpr {
        HamExpr::Dagger(Box::new(e))
    }

    /// Tensor product, re-associated to the right.
    pub fn tensor(l: HamExpr, r: HamExpr) -> HamExpr {
        match l {
            HamExpr::Tensor(a, b) => HamExpr::tensor(*a, HamExpr::tensor(*b, r)),
            l => HamExpr::Tensor(Box::new(l), Box::new(r)),
        }
    }

    /// Sum, re-associated to the right.
    pub fn sum(l: HamExpr, r: HamExpr) -> HamExpr {
        match l {
            HamExpr::Sum(a, b) => HamExpr::sum(*a, HamExpr::sum(*b, r)),
            l => HamExpr::Sum(Box::new(l), Box::new(r)),
        }
    }

    pub fn seq(l: HamExpr, r: HamExpr) -> HamExpr {
        HamExpr::Seq(Box::new(l), Box::new(r))
    }

    /// Number of sites the expression acts on, assuming it is layout-consistent.
    pub fn arity(&self) -> usize {
        match self {
            HamExpr::Ladder { .. } | HamExpr::Identity { .. } => 1,
            HamExpr::Dagger(e) => e.arity(),
            HamExpr::Tensor(l, r) => l.arity() + r.arity(),
            HamExpr::Sum(l, _) | HamExpr::Seq(l, _) => l.arity(),
        }
    }

    pub fn mentions_fermions(&self) -> bool {
        match self {
            HamExpr::Ladder { site, .. } | HamExpr::Identity { site, .. } => site.is_fermion(),
            HamExpr::Dagger(e) => e.mentions_fermions(),
            HamExpr::Tensor(l, r) | HamExpr::Sum(l, r) | HamExpr::Seq(l, r) => {
                l.mentions_fermions() || r.mentions_fermions()
            }
        }
    }

    /// Every amplitude in the tree is finite.
    pub fn amplitudes_finite(&self) -> bool {
        match self {
            HamExpr::Ladder { amp, .. } | HamExpr::Identity { amp, .. } => amp.is_finite(),
            HamExpr::Dagger(e) => e.amplitudes_finite(),
            HamExpr::Tensor(l, r) | HamExpr::Sum(l, r) | HamExpr::Seq(l, r) => {
                l.amplitudes_finite() && r.amplitudes_finite()
            }
        }
    }

    /// Structural equality with amplitudes compared to within `tol`.
    pub fn approx_eq(&self, other: &HamExpr, tol: f64) -> bool {
        use HamExpr::*;
        match (self, other) {
            (
                Ladder { kind, amp, site },
                Ladder {
                    kind: k2,
                    amp: a2,
                    site: s2,
                },
            ) => kind == k2 && site == s2 && (amp - a2).norm() <= tol,
            (Identity { amp, site }, Identity { amp: a2, site: s2 }) => {
                site == s2 && (amp - a2).norm() <= tol
            }
            (Dagger(a), Dagger(b)) => a.approx_eq(b, tol),
            (Tensor(a, b), Tensor(c, d)) | (Sum(a, b), Sum(c, d)) | (Seq(a, b), Seq(c, d)) => {
                a.approx_eq(c, tol) && b.approx_eq(d, tol)
            }
            _ => false,
        }
    }
}

/// Builds `e0 ⊗ (e1 ⊗ (...))`; `None` for an empty list.
pub fn tensor_chain(factors: Vec<HamExpr>) -> Option<HamExpr> {
    factors.into_iter().rev().reduce(|acc, f| HamExpr::tensor(f, acc))
}

/// Builds `e0 + (e1 + (...))`; `None` for an empty list.
pub fn sum_chain(terms: Vec<HamExpr>) -> Option<HamExpr> {
    terms.into_iter().rev().reduce(|acc, t| HamExpr::sum(t, acc))
}

impl fmt::Display for HamExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn amp_prefix(amp: &Complex64) -> String {
            if *amp == ONE {
                String::new()
            } else if amp.im == 0.0 {
                format!("{}·", amp.re)
            } else {
                format!("({}{:+}i)·", amp.re, amp.im)
            }
        }
        match self {
            HamExpr::Ladder { kind, amp, .. } => {
                let sym = match kind {
                    LadderKind::Create => "a†",
                    LadderKind::Annihilate => "a",
                };
                write!(f, "{}{}", amp_prefix(amp), sym)
            }
            HamExpr::Identity { amp, .. } => write!(f, "{}I", amp_prefix(amp)),
            HamExpr::Dagger(e) => write!(f, "({e})†"),
            HamExpr::Tensor(l, r) => write!(f, "({l} ⊗ {r})"),
            HamExpr::Sum(l, r) => write!(f, "({l} + {r})"),
            HamExpr::Seq(l, r) => write!(f, "({l})({r})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Sum,
    Seq,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Sum => write!(f, "T-Plus"),
            Rule::Seq => write!(f, "T-App"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AstError {
    #[error("site index {index} out of range for a layout of {len} sites")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("operator acts on {found} but site {index} has type {expected}")]
    SiteMismatch {
        index: usize,
        expected: SiteType,
        found: SiteList,
    },
    #[error("{rule} at {path}: operands act on {left} and {right}")]
    LayoutMismatch {
        rule: Rule,
        path: String,
        left: SiteList,
        right: SiteList,
    },
}

/// Pads a single-site operator with identities so that it acts on site `j`
/// of `layout`.
pub fn desugar_indexed(op: HamExpr, j: usize, layout: &[SiteType]) -> Result<HamExpr, AstError> {
    if j >= layout.len() {
        return Err(AstError::IndexOutOfRange {
            index: j,
            len: layout.len(),
        });
    }
    let op_sites = site_layout(&op)?;
    if op_sites.0 != [layout[j]] {
        return Err(AstError::SiteMismatch {
            index: j,
            expected: layout[j],
            found: op_sites,
        });
    }
    let mut op = Some(op);
    let factors = layout
        .iter()
        .enumerate()
        .map(|(k, &site)| {
            if k == j {
                op.take().expect("operator placed once")
            } else {
                HamExpr::identity(site)
            }
        })
        .collect();
    Ok(tensor_chain(factors).expect("layout is non-empty"))
}

/// Multiplies `e` by `z`, pushing the factor down to a single leaf per
/// product (both branches of a sum).
pub fn scale(z: Complex64, e: HamExpr) -> HamExpr {
    match e {
        HamExpr::Ladder { kind, amp, site } => HamExpr::Ladder {
            kind,
            amp: z * amp,
            site,
        },
        HamExpr::Identity { amp, site } => HamExpr::Identity { amp: z * amp, site },
        HamExpr::Dagger(inner) => HamExpr::Dagger(Box::new(scale(z.conj(), *inner))),
        HamExpr::Tensor(l, r) => HamExpr::Tensor(Box::new(scale(z, *l)), r),
        HamExpr::Sum(l, r) => HamExpr::Sum(Box::new(scale(z, *l)), Box::new(scale(z, *r))),
        HamExpr::Seq(l, r) => HamExpr::Seq(Box::new(scale(z, *l)), r),
    }
}

/// Infers the list of sites an expression acts on.
pub fn site_layout(e: &HamExpr) -> Result<SiteList, AstError> {
    layout_at(e, &mut String::from("root"))
}

fn layout_at(e: &HamExpr, path: &mut String) -> Result<SiteList, AstError> {
    fn descend<T>(
        path: &mut String,
        step: &str,
        f: impl FnOnce(&mut String) -> Result<T, AstError>,
    ) -> Result<T, AstError> {
        let len = path.len();
        path.push('.');
        path.push_str(step);
        let out = f(path);
        path.truncate(len);
        out
    }

    match e {
        HamExpr::Ladder { site, .. } | HamExpr::Identity { site, .. } => Ok(SiteList::single(*site)),
        HamExpr::Dagger(inner) => descend(path, "dag", |p| layout_at(inner, p)),
        HamExpr::Tensor(l, r) => {
            let left = descend(path, "tensor.left", |p| layout_at(l, p))?;
            let right = descend(path, "tensor.right", |p| layout_at(r, p))?;
            Ok(left.concat(&right))
        }
        HamExpr::Sum(l, r) | HamExpr::Seq(l, r) => {
            let (rule, name) = match e {
                HamExpr::Sum(..) => (Rule::Sum, "sum"),
                _ => (Rule::Seq, "seq"),
            };
            let left = descend(path, &format!("{name}.left"), |p| layout_at(l, p))?;
            let right = descend(path, &format!("{name}.right"), |p| layout_at(r, p))?;
            if left != right {
                return Err(AstError::LayoutMismatch {
                    rule,
                    path: path.clone(),
                    left,
                    right,
                });
            }
            Ok(left)
        }
    }
}
