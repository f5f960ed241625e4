//! Maps from particle layouts to qubits.
//!
//! `t(2)` ladders become Pauli sums through `a† = ½(X + iY)`,
//! `a = ½(X − iY)`. In the computational basis this makes bit `0` the
//! occupied level of a `t(2)` site, so `pauli_to_matrix(ladder_to_pauli(e))`
//! equals `expr_to_matrix(e)` conjugated by `X` on every qubit.
//!
//! Truncated bosons `t(2^(n+1))` go through the unary Holstein-Primakoff map:
//! occupation `k ≤ n` is the qubit string with a single `1` at position `k`
//! (a single empty `t(2)` site among occupied ones). Fermions go through
//! Jordan-Wigner with `Z` strings on the preceding sites.

use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{scale, site_layout, sum_chain, tensor_chain, AstError, HamExpr, LadderKind, SiteList, SiteType};
use crate::canonical::canonicalize;
use crate::matrix::flip_qubit_basis;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::semantics::FockState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("site {index} has type {site}; expected {expected}")]
    WrongSite {
        index: usize,
        site: SiteType,
        expected: String,
    },
    #[error("truncation level must be at least 1")]
    ZeroTruncation,
    #[error("layout {0} has no default encoding; pass one explicitly")]
    NoDefault(SiteList),
    #[error(transparent)]
    Layout(#[from] AstError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Encoding {
    Direct,
    JordanWigner,
    HolsteinPrimakoff { n: usize },
}

impl Encoding {
    /// Parses `direct`, `jw` or `hp:<n>`.
    pub fn parse(text: &str) -> Option<Encoding> {
        match text {
            "direct" => Some(Encoding::Direct),
            "jw" => Some(Encoding::JordanWigner),
            _ => text
                .strip_prefix("hp:")
                .and_then(|n| n.parse().ok())
                .map(|n| Encoding::HolsteinPrimakoff { n }),
        }
    }

    /// The natural encoding for a layout: qubits directly, fermions through
    /// Jordan-Wigner, uniform `t(2^(n+1))` bosons through Holstein-Primakoff.
    pub fn default_for(layout: &SiteList) -> Result<Encoding, EncodingError> {
        if layout.all_qubits() {
            return Ok(Encoding::Direct);
        }
        if layout.iter().all(|s| s.is_fermion()) {
            return Ok(Encoding::JordanWigner);
        }
        if let Some(&SiteType::Boson(m)) = layout.first() {
            if m.is_power_of_two() && m >= 4 && layout.iter().all(|&s| s == SiteType::Boson(m)) {
                return Ok(Encoding::HolsteinPrimakoff {
                    n: m.trailing_zeros() as usize - 1,
                });
            }
        }
        Err(EncodingError::NoDefault(layout.clone()))
    }

    pub fn qubits_per_site(self) -> usize {
        match self {
            Encoding::HolsteinPrimakoff { n } => n + 1,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Encoding::Direct => write!(f, "direct"),
            Encoding::JordanWigner => write!(f, "jw"),
            Encoding::HolsteinPrimakoff { n } => write!(f, "hp:{n}"),
        }
    }
}

/// Where each input site landed among the output qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub encoding: Encoding,
    pub input_layout: SiteList,
    pub output_layout: SiteList,
    pub site_map: Vec<Range<usize>>,
}

impl EncodingReport {
    pub fn new(encoding: Encoding, input_layout: SiteList) -> EncodingReport {
        let w = encoding.qubits_per_site();
        let site_map = (0..input_layout.len()).map(|k| k * w..(k + 1) * w).collect();
        EncodingReport {
            encoding,
            output_layout: SiteList::qubits(input_layout.len() * w),
            input_layout,
            site_map,
        }
    }

    /// Encodes a basis state of the input layout as a qubit bit string
    /// (qubit 0 first). `None` when an occupation lies outside the encoded
    /// subspace.
    pub fn encode_occupations(&self, occ: &[usize]) -> Option<Vec<u8>> {
        let mut bits = Vec::with_capacity(self.output_layout.len());
        for &k in occ {
            match self.encoding {
                Encoding::HolsteinPrimakoff { n } => {
                    if k > n {
                        return None;
                    }
                    bits.extend((0..=n).map(|j| u8::from(j == k)));
                }
                _ => bits.push(u8::from(k == 0)),
            }
        }
        Some(bits)
    }

    /// The encoded state as a Fock state over the output `t(2)` layout.
    pub fn encode_state(&self, s: &FockState) -> Option<FockState> {
        let kets = s
            .kets()
            .iter()
            .map(|k| {
                let bits = self.encode_occupations(&k.occ)?;
                Some((k.amp, bits.iter().map(|&b| 1 - b as usize).collect()))
            })
            .collect::<Option<Vec<_>>>()?;
        FockState::from_terms(self.output_layout.clone(), kets).ok()
    }

    /// Rewrites a matrix of the source operator, in the occupation basis, into
    /// the computational basis of the encoded qubits. Holstein-Primakoff has
    /// no such map (the encoding is not onto), so it yields `None`.
    pub fn source_to_qubit_basis(&self, m: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
        match self.encoding {
            Encoding::Direct => Some(flip_qubit_basis(m)),
            Encoding::JordanWigner => {
                // The Z strings count empty sites, which differs from the
                // interpreter's occupied-site sign by (-1)^j on site j.
                let n = self.input_layout.len();
                let gauge: Vec<f64> = (0..m.nrows())
                    .map(|i| {
                        let odd_sites_occupied = (0..n).filter(|&j| j % 2 == 1 && (i >> (n - 1 - j)) & 1 == 1).count();
                        if odd_sites_occupied % 2 == 1 {
                            -1.0
                        } else {
                            1.0
                        }
                    })
                    .collect();
                let d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * gauge[i] * gauge[j]);
                Some(flip_qubit_basis(&d))
            }
            Encoding::HolsteinPrimakoff { .. } => None,
        }
    }
}

fn half(re: f64, im: f64) -> Complex64 {
    Complex64::new(re / 2.0, im / 2.0)
}

/// Single-qubit Pauli form of one ladder letter.
fn letter_sum(kind: LadderKind) -> PauliSum {
    let y_sign = match kind {
        LadderKind::Create => 1.0,
        LadderKind::Annihilate => -1.0,
    };
    PauliSum::from_terms(
        1,
        [
            (half(1.0, 0.0), PauliString(vec![Pauli::X])),
            (half(0.0, y_sign), PauliString(vec![Pauli::Y])),
        ],
    )
    .expect("single-qubit terms")
}

fn word_sum(word: &[LadderKind]) -> PauliSum {
    word.iter()
        .fold(PauliSum::identity(1), |acc, &k| acc.multiply(&letter_sum(k)))
}

fn require_sites(layout: &SiteList, ok: impl Fn(SiteType) -> bool, expected: &str) -> Result<(), EncodingError> {
    match layout.iter().enumerate().find(|(_, &s)| !ok(s)) {
        Some((index, &site)) => Err(EncodingError::WrongSite {
            index,
            site,
            expected: expected.to_string(),
        }),
        None => Ok(()),
    }
}

/// Exact Pauli form of an expression over `t(2)` sites.
pub fn ladder_to_pauli(e: &HamExpr) -> Result<PauliSum, EncodingError> {
    let cf = canonicalize(e)?;
    require_sites(&cf.sites, |s| s == SiteType::QUBIT, "t(2)")?;
    let mut out = PauliSum::zero(cf.sites.len());
    for term in &cf.terms {
        let product = term
            .words
            .iter()
            .map(|w| word_sum(w))
            .reduce(|acc, p| acc.tensor(&p))
            .expect("non-empty layout");
        out = out.add(&product.scale(term.coeff));
    }
    Ok(out)
}

fn hp_ladder(kind: LadderKind, n: usize) -> HamExpr {
    let terms = (0..n)
        .map(|j| {
            let factors = (0..=n)
                .map(|q| match q {
                    _ if q == j => HamExpr::ladder(kind, SiteType::QUBIT),
                    _ if q == j + 1 => HamExpr::ladder(kind.dagger(), SiteType::QUBIT),
                    _ => HamExpr::identity(SiteType::QUBIT),
                })
                .collect();
            let chain = tensor_chain(factors).expect("n + 1 ≥ 2 qubits");
            scale(Complex64::new(((j + 1) as f64).sqrt(), 0.0), chain)
        })
        .collect();
    sum_chain(terms).expect("n ≥ 1")
}

fn hp_map(e: &HamExpr, n: usize) -> HamExpr {
    match e {
        HamExpr::Ladder { kind, amp, .. } => scale(*amp, hp_ladder(*kind, n)),
        HamExpr::Identity { amp, .. } => scale(*amp, HamExpr::identity_on(&vec![SiteType::QUBIT; n + 1])),
        HamExpr::Dagger(inner) => HamExpr::dagger(hp_map(inner, n)),
        HamExpr::Tensor(l, r) => HamExpr::tensor(hp_map(l, n), hp_map(r, n)),
        HamExpr::Sum(l, r) => HamExpr::sum(hp_map(l, n), hp_map(r, n)),
        HamExpr::Seq(l, r) => HamExpr::seq(hp_map(l, n), hp_map(r, n)),
    }
}

/// Replaces every ladder on a `t(2^(n+1))` site by its unary encoding over
/// `n + 1` qubits.
pub fn holstein_primakoff(e: &HamExpr, n: usize) -> Result<(HamExpr, EncodingReport), EncodingError> {
    if n == 0 {
        return Err(EncodingError::ZeroTruncation);
    }
    let layout = site_layout(e)?;
    let m = 1usize
        .checked_shl(n as u32 + 1)
        .filter(|&m| m != 0)
        .ok_or(EncodingError::ZeroTruncation)?;
    require_sites(&layout, |s| s == SiteType::Boson(m), &format!("t({m})"))?;
    let report = EncodingReport::new(Encoding::HolsteinPrimakoff { n }, layout);
    Ok((hp_map(e, n), report))
}

/// Jordan-Wigner image of an all-fermion expression.
pub fn jordan_wigner(e: &HamExpr) -> Result<PauliSum, EncodingError> {
    let cf = canonicalize(e)?;
    require_sites(&cf.sites, |s| s.is_fermion(), "F")?;
    let n = cf.sites.len();
    let one = Complex64::new(1.0, 0.0);
    let lifted = |j: usize, kind: LadderKind| -> PauliSum {
        let string = PauliSum::from_term(one, PauliString(vec![Pauli::Z; j]));
        let tail = PauliSum::from_term(one, PauliString::identity(n - j - 1));
        string.tensor(&letter_sum(kind)).tensor(&tail)
    };
    let mut out = PauliSum::zero(n);
    for term in &cf.terms {
        let mut product = PauliSum::identity(n);
        for (j, word) in term.words.iter().enumerate() {
            for &kind in word {
                product = product.multiply(&lifted(j, kind));
            }
        }
        out = out.add(&product.scale(term.coeff));
    }
    Ok(out)
}

/// Ladder form of a Pauli sum over `t(2)` sites.
pub fn pauli_to_ladder(p: &PauliSum) -> HamExpr {
    let q = SiteType::QUBIT;
    let i = Complex64::i();
    let create = || HamExpr::create(q);
    let annihilate = || HamExpr::annihilate(q);
    let letter = |l: Pauli| match l {
        Pauli::I => HamExpr::sum(HamExpr::seq(create(), annihilate()), HamExpr::seq(annihilate(), create())),
        Pauli::X => HamExpr::sum(create(), annihilate()),
        Pauli::Y => HamExpr::sum(scale(i, annihilate()), scale(-i, create())),
        Pauli::Z => HamExpr::sum(
            HamExpr::seq(create(), annihilate()),
            scale(Complex64::new(-1.0, 0.0), HamExpr::seq(annihilate(), create())),
        ),
    };
    if p.n_qubits() == 0 {
        let c = p.terms().map(|(_, c)| *c).sum();
        return HamExpr::Identity {
            amp: c,
            site: SiteType::Boson(1),
        };
    }
    let terms = p
        .terms()
        .map(|(s, c)| {
            let chain = tensor_chain(s.0.iter().map(|&l| letter(l)).collect()).expect("non-empty string");
            scale(*c, chain)
        })
        .collect();
    sum_chain(terms).unwrap_or_else(|| {
        scale(Complex64::new(0.0, 0.0), HamExpr::identity_on(&vec![q; p.n_qubits()]))
    })
}

/// Encodes an expression to a Pauli sum under the given encoding.
pub fn encode(e: &HamExpr, encoding: Encoding) -> Result<(PauliSum, EncodingReport), EncodingError> {
    let layout = site_layout(e)?;
    match encoding {
        Encoding::Direct => Ok((ladder_to_pauli(e)?, EncodingReport::new(encoding, layout))),
        Encoding::JordanWigner => Ok((jordan_wigner(e)?, EncodingReport::new(encoding, layout))),
        Encoding::HolsteinPrimakoff { n } => {
            let (qubit_expr, report) = holstein_primakoff(e, n)?;
            Ok((ladder_to_pauli(&qubit_expr)?, report))
        }
    }
}
