//! Dagger normalization and the sum-of-products normal form.
//!
//! A canonical term is `c · W₀ ⊗ W₁ ⊗ ... ⊗ Wₙ₋₁` where each `Wₖ` is a word
//! of ladder letters on site `k` (empty for identity). On fermionic layouts a
//! tensor product is read as the ordered product of Jordan-Wigner-lifted
//! factors, so concatenating words under `⊗` is sign-free while fusing two
//! products under sequencing picks up a sign from reordering odd factors.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::ast::{scale, site_layout, sum_chain, tensor_chain, AstError, HamExpr, LadderKind, SiteList, SiteType};

/// Terms whose merged coefficient is at or below this are dropped.
pub const MERGE_TOL: f64 = 1e-12;

pub type Word = Vec<LadderKind>;

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTerm {
    pub coeff: Complex64,
    pub words: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub sites: SiteList,
    pub terms: Vec<CanonicalTerm>,
}

/// Splits `e` into its even and odd fermion-parity parts. A ladder letter on
/// a fermionic site is odd; everything else is even.
pub fn split_parity(e: &HamExpr) -> (Option<HamExpr>, Option<HamExpr>) {
    if !e.mentions_fermions() {
        return (Some(e.clone()), None);
    }
    fn add(a: Option<HamExpr>, b: Option<HamExpr>) -> Option<HamExpr> {
        match (a, b) {
            (Some(a), Some(b)) => Some(HamExpr::sum(a, b)),
            (a, None) => a,
            (None, b) => b,
        }
    }
    fn both(
        a: &Option<HamExpr>,
        b: &Option<HamExpr>,
        f: fn(HamExpr, HamExpr) -> HamExpr,
    ) -> Option<HamExpr> {
        match (a, b) {
            (Some(a), Some(b)) => Some(f(a.clone(), b.clone())),
            _ => None,
        }
    }
    match e {
        HamExpr::Ladder { site, .. } => {
            if site.is_fermion() {
                (None, Some(e.clone()))
            } else {
                (Some(e.clone()), None)
            }
        }
        HamExpr::Identity { .. } => (Some(e.clone()), None),
        HamExpr::Dagger(inner) => {
            let (ev, od) = split_parity(inner);
            (ev.map(HamExpr::dagger), od.map(HamExpr::dagger))
        }
        HamExpr::Sum(l, r) => {
            let (le, lo) = split_parity(l);
            let (re, ro) = split_parity(r);
            (add(le, re), add(lo, ro))
        }
        HamExpr::Tensor(l, r) | HamExpr::Seq(l, r) => {
            let f: fn(HamExpr, HamExpr) -> HamExpr = match e {
                HamExpr::Tensor(..) => HamExpr::tensor,
                _ => HamExpr::seq,
            };
            let (le, lo) = split_parity(l);
            let (re, ro) = split_parity(r);
            (
                add(both(&le, &re, f), both(&lo, &ro, f)),
                add(both(&le, &ro, f), both(&lo, &re, f)),
            )
        }
    }
}

/// Pushes every dagger down to the leaves.
///
/// On fermionic layouts `(A ⊗ B)† = A† ⊗ B† − 2 (A_odd† ⊗ B_odd†)`, since
/// reversing the product of two odd lifted factors flips its sign.
pub fn dagger_normalize(e: &HamExpr) -> HamExpr {
    push(e, false)
}

fn push(e: &HamExpr, dag: bool) -> HamExpr {
    match e {
        HamExpr::Ladder { kind, amp, site } => {
            if dag {
                HamExpr::Ladder {
                    kind: kind.dagger(),
                    amp: amp.conj(),
                    site: *site,
                }
            } else {
                e.clone()
            }
        }
        HamExpr::Identity { amp, site } => HamExpr::Identity {
            amp: if dag { amp.conj() } else { *amp },
            site: *site,
        },
        HamExpr::Dagger(inner) => push(inner, !dag),
        HamExpr::Sum(l, r) => HamExpr::sum(push(l, dag), push(r, dag)),
        HamExpr::Seq(l, r) => {
            if dag {
                HamExpr::seq(push(r, true), push(l, true))
            } else {
                HamExpr::seq(push(l, false), push(r, false))
            }
        }
        HamExpr::Tensor(l, r) => {
            let base = HamExpr::tensor(push(l, dag), push(r, dag));
            if !dag {
                return base;
            }
            match (split_parity(l).1, split_parity(r).1) {
                (Some(lo), Some(ro)) => {
                    let fix = HamExpr::tensor(push(&lo, true), push(&ro, true));
                    HamExpr::sum(base, scale(Complex64::new(-2.0, 0.0), fix))
                }
                _ => base,
            }
        }
    }
}

fn word_is_odd(site: SiteType, w: &Word) -> bool {
    site.is_fermion() && w.len() % 2 == 1
}

fn terms_of(e: &HamExpr, sites: &[SiteType]) -> Vec<(Complex64, Vec<Word>)> {
    match e {
        HamExpr::Ladder { kind, amp, .. } => vec![(*amp, vec![vec![*kind]])],
        HamExpr::Identity { amp, .. } => vec![(*amp, vec![Vec::new()])],
        HamExpr::Dagger(_) => terms_of(&dagger_normalize(e), sites),
        HamExpr::Sum(l, r) => {
            let mut out = terms_of(l, sites);
            out.extend(terms_of(r, sites));
            out
        }
        HamExpr::Tensor(l, r) => {
            let k = l.arity();
            let lt = terms_of(l, &sites[..k]);
            let rt = terms_of(r, &sites[k..]);
            let mut out = Vec::with_capacity(lt.len() * rt.len());
            for (cl, wl) in &lt {
                for (cr, wr) in &rt {
                    let mut words = wl.clone();
                    words.extend(wr.iter().cloned());
                    out.push((cl * cr, words));
                }
            }
            out
        }
        HamExpr::Seq(l, r) => {
            let lt = terms_of(l, sites);
            let rt = terms_of(r, sites);
            let mut out = Vec::with_capacity(lt.len() * rt.len());
            for (cl, wl) in &lt {
                for (cr, wr) in &rt {
                    // Moving each lifted right factor R_i left past the left
                    // factors L_k with k > i.
                    let mut odd_r_before = false;
                    let mut flips = false;
                    let mut words = Vec::with_capacity(sites.len());
                    for (k, &site) in sites.iter().enumerate() {
                        if odd_r_before && word_is_odd(site, &wl[k]) {
                            flips = !flips;
                        }
                        odd_r_before ^= word_is_odd(site, &wr[k]);
                        let mut w = wl[k].clone();
                        w.extend_from_slice(&wr[k]);
                        words.push(w);
                    }
                    let sign = if flips { -1.0 } else { 1.0 };
                    out.push((cl * cr * sign, words));
                }
            }
            out
        }
    }
}

impl CanonicalForm {
    pub fn approx_eq(&self, other: &CanonicalForm, tol: f64) -> bool {
        if self.sites != other.sites {
            return false;
        }
        let a: BTreeMap<&Vec<Word>, Complex64> = self.terms.iter().map(|t| (&t.words, t.coeff)).collect();
        let b: BTreeMap<&Vec<Word>, Complex64> = other.terms.iter().map(|t| (&t.words, t.coeff)).collect();
        let zero = Complex64::new(0.0, 0.0);
        a.keys()
            .chain(b.keys())
            .all(|w| (a.get(w).copied().unwrap_or(zero) - b.get(w).copied().unwrap_or(zero)).norm() <= tol)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Canonical form of the adjoint, computed term by term.
    pub fn adjoint(&self) -> CanonicalForm {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let words: Vec<Word> = t
                    .words
                    .iter()
                    .map(|w| w.iter().rev().map(|k| k.dagger()).collect())
                    .collect();
                // Reversing the ordered product of lifted factors reorders
                // the odd ones: sign (-1)^(m(m-1)/2) for m odd factors.
                let m = t
                    .words
                    .iter()
                    .zip(self.sites.iter())
                    .filter(|(w, &s)| word_is_odd(s, w))
                    .count();
                let sign = if (m * m.saturating_sub(1) / 2) % 2 == 1 { -1.0 } else { 1.0 };
                (t.coeff.conj() * sign, words)
            })
            .collect();
        merge(self.sites.clone(), terms)
    }

    /// Rebuilds an expression: a sum of tensor chains of sequenced letters.
    pub fn to_expr(&self) -> HamExpr {
        let word_expr = |site: SiteType, w: &Word| -> HamExpr {
            w.iter()
                .map(|&k| HamExpr::ladder(k, site))
                .reduce(HamExpr::seq)
                .unwrap_or_else(|| HamExpr::identity(site))
        };
        let terms: Vec<HamExpr> = self
            .terms
            .iter()
            .map(|t| {
                let factors = t.words.iter().zip(self.sites.iter()).map(|(w, &s)| word_expr(s, w)).collect();
                scale(t.coeff, tensor_chain(factors).expect("non-empty layout"))
            })
            .collect();
        sum_chain(terms).unwrap_or_else(|| scale(Complex64::new(0.0, 0.0), HamExpr::identity_on(&self.sites)))
    }
}

fn merge(sites: SiteList, raw: Vec<(Complex64, Vec<Word>)>) -> CanonicalForm {
    let mut acc: BTreeMap<Vec<Word>, Complex64> = BTreeMap::new();
    for (c, w) in raw {
        *acc.entry(w).or_default() += c;
    }
    let terms = acc
        .into_iter()
        .filter(|(_, c)| c.norm() > MERGE_TOL)
        .map(|(words, coeff)| CanonicalTerm { coeff, words })
        .collect();
    CanonicalForm { sites, terms }
}

/// Normal form of `e`: daggers pushed to leaves, products distributed over
/// sums, per-site words fused, like terms merged and sorted.
pub fn canonicalize(e: &HamExpr) -> Result<CanonicalForm, AstError> {
    let sites = site_layout(e)?;
    let normalized = dagger_normalize(e);
    let raw = terms_of(&normalized, &sites);
    Ok(merge(sites, raw))
}
