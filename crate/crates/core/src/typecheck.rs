//! Type inference for Hamiltonian expressions.
//!
//! Leaves are typed syntactically: ladders get `p`, identities get `h` when
//! their amplitude is real. Composite rules join flags and check that sums and
//! products act on the same layout. A `p` result at the root is promoted to
//! `h` when Hermiticity can be established, first from the canonical form and
//! then, for small layouts, from the dense matrix.

use serde::Serialize;
use thiserror::Error;

use crate::ast::{AstError, Flag, HamExpr, OpType, Rule, SiteList};
use crate::canonical::{canonicalize, MERGE_TOL};
use crate::matrix::{expr_to_matrix, hermitian_deviation, CHECK_TOL, DIM_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("{rule} at {path}: operands act on {left} and {right}")]
    LayoutMismatch {
        rule: Rule,
        path: String,
        left: SiteList,
        right: SiteList,
    },
    #[error("non-finite amplitude at {path}")]
    NonFiniteAmplitude { path: String },
}

impl From<AstError> for TypeError {
    fn from(e: AstError) -> Self {
        match e {
            AstError::LayoutMismatch { rule, path, left, right } => TypeError::LayoutMismatch { rule, path, left, right },
            other => TypeError::NonFiniteAmplitude { path: other.to_string() },
        }
    }
}

/// Which check settled a Hermiticity question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decider {
    /// Leaf flags alone already give `h`.
    Syntax,
    /// The canonical form equals the canonical form of its adjoint.
    Canonical,
    /// `‖M - M†‖_max` on the dense matrix.
    Matrix,
    /// Neither check applies (canonical forms differ, layout too large).
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermiticityCheck {
    pub hermitian: bool,
    pub decided_by: Decider,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeJudgment {
    pub ty: OpType,
    pub hermiticity: HermiticityCheck,
}

fn infer(e: &HamExpr, path: &mut String) -> Result<(Flag, SiteList), TypeError> {
    fn at<T>(path: &mut String, step: &str, f: impl FnOnce(&mut String) -> T) -> T {
        let len = path.len();
        path.push('.');
        path.push_str(step);
        let out = f(path);
        path.truncate(len);
        out
    }

    match e {
        HamExpr::Ladder { amp, site, .. } => {
            if !amp.is_finite() {
                return Err(TypeError::NonFiniteAmplitude { path: path.clone() });
            }
            Ok((Flag::P, SiteList::single(*site)))
        }
        HamExpr::Identity { amp, site } => {
            if !amp.is_finite() {
                return Err(TypeError::NonFiniteAmplitude { path: path.clone() });
            }
            let flag = if amp.im == 0.0 { Flag::H } else { Flag::P };
            Ok((flag, SiteList::single(*site)))
        }
        HamExpr::Dagger(inner) => at(path, "dag", |p| infer(inner, p)),
        HamExpr::Tensor(l, r) => {
            let (fl, sl) = at(path, "tensor.left", |p| infer(l, p))?;
            let (fr, sr) = at(path, "tensor.right", |p| infer(r, p))?;
            Ok((fl.join(fr), sl.concat(&sr)))
        }
        HamExpr::Sum(l, r) | HamExpr::Seq(l, r) => {
            let (rule, name) = match e {
                HamExpr::Sum(..) => (Rule::Sum, "sum"),
                _ => (Rule::Seq, "seq"),
            };
            let (fl, sl) = at(path, &format!("{name}.left"), |p| infer(l, p))?;
            let (fr, sr) = at(path, &format!("{name}.right"), |p| infer(r, p))?;
            if sl != sr {
                return Err(TypeError::LayoutMismatch {
                    rule,
                    path: path.clone(),
                    left: sl,
                    right: sr,
                });
            }
            Ok((fl.join(fr), sl))
        }
    }
}

/// Decides Hermiticity of a layout-consistent expression: canonical
/// certificate first, then the dense matrix when the layout is small enough.
pub fn is_hermitian(e: &HamExpr) -> Result<HermiticityCheck, TypeError> {
    let cf = canonicalize(e)?;
    if cf.adjoint().approx_eq(&cf, MERGE_TOL) {
        return Ok(HermiticityCheck {
            hermitian: true,
            decided_by: Decider::Canonical,
        });
    }
    match cf.sites.dim() {
        Some(d) if d <= DIM_CAP => {
            let m = expr_to_matrix(e).map_err(|err| TypeError::NonFiniteAmplitude { path: err.to_string() })?;
            Ok(HermiticityCheck {
                hermitian: hermitian_deviation(&m.mat) <= CHECK_TOL,
                decided_by: Decider::Matrix,
            })
        }
        _ => Ok(HermiticityCheck {
            hermitian: false,
            decided_by: Decider::Undecided,
        }),
    }
}

/// Full judgment for `e`, including how the root flag was decided.
pub fn check(e: &HamExpr) -> Result<TypeJudgment, TypeError> {
    let (flag, sites) = infer(e, &mut String::from("root"))?;
    let hermiticity = if flag == Flag::H {
        HermiticityCheck {
            hermitian: true,
            decided_by: Decider::Syntax,
        }
    } else {
        is_hermitian(e)?
    };
    let flag = if hermiticity.hermitian { Flag::H } else { Flag::P };
    Ok(TypeJudgment {
        ty: OpType { flag, sites },
        hermiticity,
    })
}

pub fn typecheck(e: &HamExpr) -> Result<OpType, TypeError> {
    check(e).map(|j| j.ty)
}
