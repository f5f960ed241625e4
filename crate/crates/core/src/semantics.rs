//! Sparse Fock-state interpreter.
//!
//! States are finite superpositions of occupation-number kets kept in a
//! canonical form (sorted by occupation vector, merged, pruned). Operators act
//! ket by ket. On fermionic layouts `A ⊗ B` applies `B` to the right block
//! and attaches the sign `(-1)^N` whenever `B` changes the right block's
//! parity, `N` being the left block's fermion count before `A` acts.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::ast::{site_layout, AstError, HamExpr, LadderKind, SiteList, SiteType};
use crate::canonical::dagger_normalize;

/// Kets with amplitude magnitude at or below this are dropped.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest imaginary part tolerated in an expectation value.
pub const EXPECTATION_IM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("occupation {occ} out of range for site {index} of type {site}")]
    InvalidOccupation { index: usize, occ: usize, site: SiteType },
    #[error("ket has {found} occupations but the layout has {expected} sites")]
    WrongLength { found: usize, expected: usize },
    #[error("operator acts on {operator} but the state lives on {state}")]
    LayoutMismatch { operator: SiteList, state: SiteList },
    #[error("states live on different layouts: {left} and {right}")]
    StateLayoutMismatch { left: SiteList, right: SiteList },
    #[error("cannot normalize the zero state")]
    ZeroNorm,
    #[error("expectation requires a Hermitian operator")]
    NotHermitian,
    #[error("expectation has imaginary part {0:e}")]
    ImaginaryResidue(f64),
    #[error(transparent)]
    Layout(#[from] AstError),
    #[error("malformed state literal at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    pub amp: Complex64,
    pub occ: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FockState {
    Zero,
    Kets { layout: SiteList, terms: Vec<Ket> },
}

fn check_occ(layout: &[SiteType], occ: &[usize]) -> Result<(), StateError> {
    if occ.len() != layout.len() {
        return Err(StateError::WrongLength {
            found: occ.len(),
            expected: layout.len(),
        });
    }
    for (index, (&o, &site)) in occ.iter().zip(layout).enumerate() {
        if o >= site.dim() {
            return Err(StateError::InvalidOccupation { index, occ: o, site });
        }
    }
    Ok(())
}

impl FockState {
    /// A single basis ket with unit amplitude.
    pub fn basis(layout: SiteList, occ: Vec<usize>) -> Result<FockState, StateError> {
        FockState::from_terms(layout, vec![(Complex64::new(1.0, 0.0), occ)])
    }

    /// Builds a state from arbitrary kets, merging duplicates and pruning.
    pub fn from_terms<I>(layout: SiteList, kets: I) -> Result<FockState, StateError>
    where
        I: IntoIterator<Item = (Complex64, Vec<usize>)>,
    {
        let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (amp, occ) in kets {
            check_occ(&layout, &occ)?;
            *acc.entry(occ).or_default() += amp;
        }
        Ok(FockState::from_map(layout, acc))
    }

    fn from_map(layout: SiteList, acc: BTreeMap<Vec<usize>, Complex64>) -> FockState {
        let terms: Vec<Ket> = acc
            .into_iter()
            .filter(|(_, a)| a.norm() > PRUNE_TOL)
            .map(|(occ, amp)| Ket { amp, occ })
            .collect();
        if terms.is_empty() {
            FockState::Zero
        } else {
            FockState::Kets { layout, terms }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FockState::Zero)
    }

    pub fn layout(&self) -> Option<&SiteList> {
        match self {
            FockState::Zero => None,
            FockState::Kets { layout, .. } => Some(layout),
        }
    }

    pub fn kets(&self) -> &[Ket] {
        match self {
            FockState::Zero => &[],
            FockState::Kets { terms, .. } => terms,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.kets().iter().map(|k| k.amp.norm_sqr()).sum()
    }

    pub fn scale(&self, z: Complex64) -> FockState {
        match self {
            FockState::Zero => FockState::Zero,
            FockState::Kets { layout, terms } => FockState::from_map(
                layout.clone(),
                terms.iter().map(|k| (k.occ.clone(), z * k.amp)).collect(),
            ),
        }
    }

    pub fn add(&self, other: &FockState) -> Result<FockState, StateError> {
        match (self, other) {
            (FockState::Zero, s) | (s, FockState::Zero) => Ok(s.clone()),
            (FockState::Kets { layout: l1, terms: t1 }, FockState::Kets { layout: l2, terms: t2 }) => {
                if l1 != l2 {
                    return Err(StateError::StateLayoutMismatch {
                        left: l1.clone(),
                        right: l2.clone(),
                    });
                }
                let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
                for k in t1.iter().chain(t2) {
                    *acc.entry(k.occ.clone()).or_default() += k.amp;
                }
                Ok(FockState::from_map(l1.clone(), acc))
            }
        }
    }

    /// Dense vector over the product basis, site 0 most significant.
    pub fn to_vector(&self, layout: &SiteList) -> DVector<Complex64> {
        let dim = layout.dim().expect("layout dimension overflow");
        let mut v = DVector::zeros(dim);
        for k in self.kets() {
            v[basis_index(layout, &k.occ)] += k.amp;
        }
        v
    }

    pub fn from_vector(layout: SiteList, v: &DVector<Complex64>) -> FockState {
        let acc = v
            .iter()
            .enumerate()
            .map(|(i, a)| (basis_occ(&layout, i), *a))
            .collect();
        FockState::from_map(layout, acc)
    }

    pub fn approx_eq(&self, other: &FockState, tol: f64) -> bool {
        let mut acc: BTreeMap<&[usize], Complex64> = BTreeMap::new();
        for k in self.kets() {
            *acc.entry(&k.occ).or_default() += k.amp;
        }
        for k in other.kets() {
            *acc.entry(&k.occ).or_default() -= k.amp;
        }
        let layouts_ok = match (self.layout(), other.layout()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        };
        layouts_ok && acc.values().all(|d| d.norm() <= tol)
    }

    /// Parses the literal format: a `sites:` header, then `(re,im) |k0,k1⟩`
    /// lines. A leading `amp` keyword and a plain `>` are also accepted.
    pub fn parse(text: &str) -> Result<FockState, StateError> {
        let mut layout: Option<SiteList> = None;
        let mut kets = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |message: &str| StateError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("sites:") {
                layout = Some(parse_site_decl(rest).map_err(|m| err(&m))?);
                continue;
            }
            let layout = layout.as_ref().ok_or_else(|| err("ket before `sites:` header"))?;
            let line = line.strip_prefix("amp").unwrap_or(line).trim_start();
            let body = line.strip_prefix('(').ok_or_else(|| err("expected `(re,im)`"))?;
            let close = body.find(')').ok_or_else(|| err("unclosed amplitude"))?;
            let (re, im) = body[..close].split_once(',').ok_or_else(|| err("amplitude needs `re,im`"))?;
            let re: f64 = re.trim().parse().map_err(|_| err("bad real part"))?;
            let im: f64 = im.trim().parse().map_err(|_| err("bad imaginary part"))?;
            let ket = body[close + 1..].trim();
            let ket = ket.strip_prefix('|').ok_or_else(|| err("expected `|`"))?;
            let ket = ket
                .strip_suffix('⟩')
                .or_else(|| ket.strip_suffix('>'))
                .ok_or_else(|| err("expected `⟩`"))?;
            let occ = if ket.trim().is_empty() {
                Vec::new()
            } else {
                ket.split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("bad occupation"))?
            };
            check_occ(layout, &occ).map_err(|e| err(&e.to_string()))?;
            kets.push((Complex64::new(re, im), occ));
        }
        let layout = layout.ok_or(StateError::Parse {
            line: 0,
            message: "missing `sites:` header".into(),
        })?;
        FockState::from_terms(layout, kets)
    }

    /// Text form accepted by `parse`. The zero state needs a layout to print,
    /// so it is rendered against `layout`.
    pub fn to_text(&self, layout: &SiteList) -> String {
        let mut out = format!("sites: {}\n", layout.to_decl());
        for k in self.kets() {
            let occ: Vec<String> = k.occ.iter().map(|o| o.to_string()).collect();
            out.push_str(&format!("({},{}) |{}⟩\n", k.amp.re, k.amp.im, occ.join(",")));
        }
        out
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FockState::Zero => write!(f, "0"),
            FockState::Kets { layout, .. } => write!(f, "{}", self.to_text(layout).trim_end()),
        }
    }
}

/// Parses `t(2), t(4), F`.
pub fn parse_site_decl(text: &str) -> Result<SiteList, String> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            if s == "F" {
                return Ok(SiteType::Fermion);
            }
            let m = s
                .strip_prefix("t(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| format!("bad site type {s:?}"))?;
            let m: usize = m.trim().parse().map_err(|_| format!("bad site dimension {m:?}"))?;
            if m == 0 {
                return Err("site dimension must be positive".into());
            }
            Ok(SiteType::Boson(m))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(SiteList)
}

pub fn basis_index(layout: &[SiteType], occ: &[usize]) -> usize {
    layout.iter().zip(occ).fold(0, |acc, (s, &o)| acc * s.dim() + o)
}

pub fn basis_occ(layout: &[SiteType], mut index: usize) -> Vec<usize> {
    let mut occ = vec![0; layout.len()];
    for (k, s) in layout.iter().enumerate().rev() {
        occ[k] = index % s.dim();
        index /= s.dim();
    }
    occ
}

/// `a†|k⟩ = √(k+1)|k+1⟩` (zero at the top), `a|k⟩ = √k|k-1⟩`.
pub fn apply_single(kind: LadderKind, site: SiteType, k: usize) -> Option<(f64, usize)> {
    match kind {
        LadderKind::Create if k + 1 < site.dim() => Some((((k + 1) as f64).sqrt(), k + 1)),
        LadderKind::Annihilate if k > 0 => Some(((k as f64).sqrt(), k - 1)),
        _ => None,
    }
}

/// `(-1)^(number of occupied fermionic sites)` over the given prefix.
pub fn fermion_sign(layout: &[SiteType], occ_prefix: &[usize]) -> i32 {
    if fermion_parity(layout, occ_prefix) {
        -1
    } else {
        1
    }
}

fn fermion_parity(layout: &[SiteType], occ: &[usize]) -> bool {
    layout
        .iter()
        .zip(occ)
        .filter(|(s, &o)| s.is_fermion() && o % 2 == 1)
        .count()
        % 2
        == 1
}

type Branches = Vec<(Complex64, Vec<usize>)>;

fn merge(branches: Branches) -> Branches {
    let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for (a, o) in branches {
        *acc.entry(o).or_default() += a;
    }
    acc.into_iter().filter(|(_, a)| a.norm() > PRUNE_TOL).map(|(o, a)| (a, o)).collect()
}

fn eval(e: &HamExpr, sites: &[SiteType], occ: &[usize]) -> Branches {
    match e {
        HamExpr::Ladder { kind, amp, site } => match apply_single(*kind, *site, occ[0]) {
            Some((c, k)) => vec![(amp * c, vec![k])],
            None => Vec::new(),
        },
        HamExpr::Identity { amp, .. } => vec![(*amp, occ.to_vec())],
        HamExpr::Dagger(_) => eval(&dagger_normalize(e), sites, occ),
        HamExpr::Sum(l, r) => {
            let mut out = eval(l, sites, occ);
            out.extend(eval(r, sites, occ));
            out
        }
        HamExpr::Seq(l, r) => {
            let mut out = Vec::new();
            for (c, o) in merge(eval(r, sites, occ)) {
                for (c2, o2) in eval(l, sites, &o) {
                    out.push((c * c2, o2));
                }
            }
            out
        }
        HamExpr::Tensor(l, r) => {
            let k = l.arity();
            let (ls, rs) = sites.split_at(k);
            let (lo, ro) = occ.split_at(k);
            let left = eval(l, ls, lo);
            if left.is_empty() {
                return Vec::new();
            }
            let right = eval(r, rs, ro);
            let left_odd = fermion_parity(ls, lo);
            let right_parity = fermion_parity(rs, ro);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for (cr, or) in &right {
                let flips = left_odd && fermion_parity(rs, or) != right_parity;
                let sign = if flips { -1.0 } else { 1.0 };
                for (cl, ol) in &left {
                    let mut o = ol.clone();
                    o.extend_from_slice(or);
                    out.push((cl * cr * sign, o));
                }
            }
            out
        }
    }
}

/// Applies `e` to `s`.
pub fn apply(e: &HamExpr, s: &FockState) -> Result<FockState, StateError> {
    let (layout, terms) = match s {
        FockState::Zero => return Ok(FockState::Zero),
        FockState::Kets { layout, terms } => (layout, terms),
    };
    let op_layout = site_layout(e)?;
    if &op_layout != layout {
        return Err(StateError::LayoutMismatch {
            operator: op_layout,
            state: layout.clone(),
        });
    }
    let e = dagger_normalize(e);
    let mut acc: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    for ket in terms {
        for (c, o) in eval(&e, layout, &ket.occ) {
            *acc.entry(o).or_default() += ket.amp * c;
        }
    }
    Ok(FockState::from_map(layout.clone(), acc))
}

pub fn normalize(s: &FockState) -> Result<FockState, StateError> {
    let n = s.norm_sqr().sqrt();
    if s.is_zero() || n == 0.0 {
        return Err(StateError::ZeroNorm);
    }
    Ok(s.scale(Complex64::new(1.0 / n, 0.0)))
}

/// `⟨s1|s2⟩`, antilinear in the first argument.
pub fn inner_product(s1: &FockState, s2: &FockState) -> Result<Complex64, StateError> {
    if let (Some(a), Some(b)) = (s1.layout(), s2.layout()) {
        if a != b {
            return Err(StateError::StateLayoutMismatch {
                left: a.clone(),
                right: b.clone(),
            });
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let (k1, k2) = (s1.kets(), s2.kets());
    let (mut i, mut j) = (0, 0);
    while i < k1.len() && j < k2.len() {
        match k1[i].occ.cmp(&k2[j].occ) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += k1[i].amp.conj() * k2[j].amp;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc)
}

/// `⟨s|e|s⟩ / ⟨s|s⟩` for a Hermitian `e`.
pub fn expectation(e: &HamExpr, s: &FockState) -> Result<f64, StateError> {
    let ty = crate::typecheck::typecheck(e).map_err(|_| StateError::NotHermitian)?;
    if ty.flag != crate::ast::Flag::H {
        return Err(StateError::NotHermitian);
    }
    let n = s.norm_sqr();
    if s.is_zero() || n == 0.0 {
        return Err(StateError::ZeroNorm);
    }
    let v = inner_product(s, &apply(e, s)?)? / n;
    if v.im.abs() > EXPECTATION_IM_TOL {
        return Err(StateError::ImaginaryResidue(v.im));
    }
    Ok(v.re)
}
