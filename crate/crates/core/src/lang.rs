//! Surface syntax: lexer, recursive-descent parser, elaboration to
//! [`HamExpr`] and a pretty-printer whose output parses back to the same tree.
//!
//! ```text
//! sites t(2), t(2), t(2);
//! let zh = 0.5;
//! H = sum j in 0..1 { Z(j) Z(j+1) } + sum j in 0..2 { zh * X(j) };
//! state psi { (1,0) |0,0,0⟩ }
//! ```
//!
//! Precedence, loosest first: `+`/`-`, juxtaposition (operator product, the
//! right operand acts first), `#` (tensor), then `scalar * unary` and unary
//! minus. Indexed leaves `a(j)`, `adag(j)`, `I(j)`, `X(j)`, `Y(j)`, `Z(j)`
//! act on site `j` of the enclosing window and are padded with identities;
//! bare leaves act on a single-site window, as produced by splitting a window
//! with `#`. `sum j in lo..hi` includes both bounds.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::ast::{desugar_indexed, scale, site_layout, AstError, HamExpr, LadderKind, SiteList, SiteType};
use crate::semantics::FockState;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num { value: f64, int: bool },
    Imag(f64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num { value, .. } => write!(f, "number {value}"),
            Tok::Imag(v) => write!(f, "imaginary {v}i"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
    end: usize,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

const PUNCT: [&str; 14] = ["..", "(", ")", "{", "}", ",", ";", "=", "+", "-", "*", "/", "#", "|"];

impl<'a> Lexer<'a> {
    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.src[self.pos..].starts_with("//") => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let (line, col) = (self.line, self.col);
        let err = |message: String| ParseError { line, col, message };
        let Some(c) = self.peek_char() else {
            return Ok(Token {
                tok: Tok::Eof,
                line,
                col,
                end: self.pos,
            });
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = self.pos;
            while matches!(self.peek_char(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
            Tok::Ident(self.src[start..self.pos].to_string())
        } else if c.is_ascii_digit() || (c == '.' && self.src[self.pos + 1..].starts_with(|d: char| d.is_ascii_digit())) {
            self.number()?
        } else if let Some(p) = PUNCT.iter().find(|p| self.src[self.pos..].starts_with(**p)) {
            for _ in 0..p.len() {
                self.bump();
            }
            Tok::Punct(p)
        } else {
            return Err(err(format!("unexpected character {c:?}")));
        };
        Ok(Token {
            tok,
            line,
            col,
            end: self.pos,
        })
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut int = true;
        let digits = |lx: &mut Lexer| {
            while matches!(lx.peek_char(), Some(c) if c.is_ascii_digit()) {
                lx.bump();
            }
        };
        digits(self);
        if self.peek_char() == Some('.') && !self.src[self.pos..].starts_with("..") {
            int = false;
            self.bump();
            digits(self);
        }
        if matches!(self.peek_char(), Some('e' | 'E')) {
            let rest = &self.src[self.pos + 1..];
            let exp_follows = rest.starts_with(|c: char| c.is_ascii_digit())
                || ((rest.starts_with('+') || rest.starts_with('-')) && rest[1..].starts_with(|c: char| c.is_ascii_digit()));
            if exp_follows {
                int = false;
                self.bump();
                if matches!(self.peek_char(), Some('+' | '-')) {
                    self.bump();
                }
                digits(self);
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text.parse().map_err(|_| ParseError {
            line: self.line,
            col: self.col,
            message: format!("bad number {text:?}"),
        })?;
        let rest = &self.src[self.pos..];
        if rest.starts_with('i') && !rest[1..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
            return Ok(Tok::Imag(value));
        }
        Ok(Tok::Num { value, int })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeafOp {
    Create,
    Annihilate,
    Identity,
    X,
    Y,
    Z,
}

impl LeafOp {
    fn from_name(s: &str) -> Option<LeafOp> {
        Some(match s {
            "a" => LeafOp::Annihilate,
            "adag" => LeafOp::Create,
            "I" => LeafOp::Identity,
            "X" => LeafOp::X,
            "Y" => LeafOp::Y,
            "Z" => LeafOp::Z,
            _ => return None,
        })
    }
}

const KEYWORDS: [&str; 14] = ["a", "adag", "I", "X", "Y", "Z", "dag", "sum", "in", "let", "sites", "state", "sqrt", "i"];

#[derive(Debug, Clone)]
struct Idx {
    var: Option<String>,
    offset: i64,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
enum SExpr {
    Leaf { op: LeafOp, idx: Option<Idx>, line: usize, col: usize },
    Dag(Box<SExpr>),
    Tensor(Box<SExpr>, Box<SExpr>, usize, usize),
    Sum(Box<SExpr>, Box<SExpr>),
    Diff(Box<SExpr>, Box<SExpr>),
    Seq(Box<SExpr>, Box<SExpr>),
    Scale(Complex64, Box<SExpr>),
    Neg(Box<SExpr>),
    Ref(String, usize, usize),
    Loop { var: String, lo: i64, hi: i64, body: Box<SExpr> },
}

/// A parsed program: one site layout, named definitions in source order and
/// optional state literals.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub layout: SiteList,
    pub definitions: Vec<(String, HamExpr)>,
    pub states: Vec<(String, FockState)>,
}

impl Program {
    pub fn get(&self, name: &str) -> Option<&HamExpr> {
        self.definitions.iter().find(|(n, _)| n == name).map(|(_, e)| e)
    }

    pub fn state(&self, name: &str) -> Option<&FockState> {
        self.states.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// The last definition, which the command line uses by default.
    pub fn main(&self) -> Option<(&str, &HamExpr)> {
        self.definitions.last().map(|(n, e)| (n.as_str(), e))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    buf: Vec<Token>,
    at: usize,
    layout: Option<SiteList>,
    lets: Vec<(String, Complex64)>,
    defs: Vec<(String, HamExpr)>,
    states: Vec<(String, FockState)>,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            lexer: Lexer {
                src,
                pos: 0,
                line: 1,
                col: 1,
            },
            buf: Vec::new(),
            at: 0,
            layout: None,
            lets: Vec::new(),
            defs: Vec::new(),
            states: Vec::new(),
        }
    }

    fn fill(&mut self, k: usize) -> PResult<()> {
        while self.buf.len() <= self.at + k {
            if matches!(self.buf.last(), Some(Token { tok: Tok::Eof, .. })) {
                let last = self.buf.last().cloned().expect("non-empty");
                self.buf.push(last);
            } else {
                let t = self.lexer.next()?;
                self.buf.push(t);
            }
        }
        Ok(())
    }

    fn peek_n(&mut self, k: usize) -> PResult<&Token> {
        self.fill(k)?;
        Ok(&self.buf[self.at + k])
    }

    fn peek(&mut self) -> PResult<&Token> {
        self.peek_n(0)
    }

    fn next(&mut self) -> PResult<Token> {
        self.fill(0)?;
        let t = self.buf[self.at].clone();
        self.at += 1;
        Ok(t)
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn unexpected(&self, t: &Token, wanted: &str) -> ParseError {
        self.error_at(t, format!("expected {wanted}, found {}", t.tok))
    }

    fn is_punct(&mut self, p: &str) -> PResult<bool> {
        Ok(matches!(&self.peek()?.tok, Tok::Punct(q) if *q == p))
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Token> {
        let t = self.next()?;
        match &t.tok {
            Tok::Punct(q) if *q == p => Ok(t),
            _ => Err(self.unexpected(&t, &format!("`{p}`"))),
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Token)> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            _ => Err(self.unexpected(&t, "a name")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            _ => Err(self.unexpected(&t, &format!("`{kw}`"))),
        }
    }

    fn expect_int(&mut self) -> PResult<i64> {
        let negative = if self.is_punct("-")? {
            self.next()?;
            true
        } else {
            false
        };
        let t = self.next()?;
        match t.tok {
            Tok::Num { value, int: true } => Ok(if negative { -(value as i64) } else { value as i64 }),
            _ => Err(self.unexpected(&t, "an integer")),
        }
    }

    fn program(mut self) -> PResult<Program> {
        loop {
            let t = self.peek()?.clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(kw) if kw == "sites" => {
                    self.next()?;
                    self.sites_decl(&t)?;
                }
                Tok::Ident(kw) if kw == "let" => {
                    self.next()?;
                    let (name, nt) = self.expect_ident()?;
                    self.check_fresh(&name, &nt)?;
                    self.expect_punct("=")?;
                    let v = self.scalar_sum()?;
                    self.expect_punct(";")?;
                    self.lets.push((name, v));
                }
                Tok::Ident(kw) if kw == "state" => {
                    self.next()?;
                    self.state_block()?;
                }
                Tok::Ident(_) => self.definition()?,
                _ => return Err(self.unexpected(&t, "`sites`, `let`, `state` or a definition")),
            }
        }
        let layout = self.layout.ok_or(ParseError {
            line: 1,
            col: 1,
            message: "missing `sites` declaration".into(),
        })?;
        Ok(Program {
            layout,
            definitions: self.defs,
            states: self.states,
        })
    }

    fn check_fresh(&self, name: &str, t: &Token) -> PResult<()> {
        if KEYWORDS.contains(&name) {
            return Err(self.error_at(t, format!("`{name}` is reserved")));
        }
        let taken = self.lets.iter().any(|(n, _)| n == name)
            || self.defs.iter().any(|(n, _)| n == name)
            || self.states.iter().any(|(n, _)| n == name);
        if taken {
            return Err(self.error_at(t, format!("`{name}` is already defined")));
        }
        Ok(())
    }

    fn sites_decl(&mut self, kw: &Token) -> PResult<()> {
        if self.layout.is_some() {
            return Err(self.error_at(kw, "duplicate `sites` declaration"));
        }
        let mut sites = Vec::new();
        loop {
            let (name, t) = self.expect_ident()?;
            match name.as_str() {
                "F" => sites.push(SiteType::Fermion),
                "t" => {
                    self.expect_punct("(")?;
                    let m = self.expect_int()?;
                    if m < 1 {
                        return Err(self.error_at(&t, "site dimension must be positive"));
                    }
                    self.expect_punct(")")?;
                    sites.push(SiteType::Boson(m as usize));
                }
                _ => return Err(self.unexpected(&t, "`t(m)` or `F`")),
            }
            if self.is_punct(",")? {
                self.next()?;
            } else {
                break;
            }
        }
        if self.is_punct(";")? {
            self.next()?;
        }
        self.layout = Some(SiteList(sites));
        Ok(())
    }

    fn state_block(&mut self) -> PResult<()> {
        let (name, nt) = self.expect_ident()?;
        self.check_fresh(&name, &nt)?;
        let open = self.expect_punct("{")?;
        let layout = self
            .layout
            .clone()
            .ok_or_else(|| self.error_at(&open, "`state` before `sites` declaration"))?;
        // The literal body is taken verbatim up to the closing brace.
        let src = self.lexer.src;
        let body_start = open.end;
        let close = src[body_start..]
            .find('}')
            .ok_or_else(|| self.error_at(&open, "unclosed state literal"))?;
        let body = &src[body_start..body_start + close];
        let text = if body.trim_start().starts_with("sites:") {
            body.to_string()
        } else {
            format!("sites: {}\n{}", layout.to_decl(), body)
        };
        let state = FockState::parse(&text).map_err(|e| self.error_at(&open, format!("in state `{name}`: {e}")))?;
        if state.layout().is_some_and(|l| *l != layout) {
            return Err(self.error_at(&open, format!("state `{name}` does not match the program layout")));
        }
        self.buf.truncate(self.at);
        self.lexer.pos = body_start;
        self.lexer.line = open.line;
        self.lexer.col = open.col + 1;
        while self.lexer.pos < body_start + close + 1 {
            self.lexer.bump();
        }
        self.states.push((name, state));
        Ok(())
    }

    fn definition(&mut self) -> PResult<()> {
        let (name, nt) = self.expect_ident()?;
        self.check_fresh(&name, &nt)?;
        self.expect_punct("=")?;
        let body = self.expr()?;
        self.expect_punct(";")?;
        let layout = self
            .layout
            .clone()
            .ok_or_else(|| self.error_at(&nt, "definition before `sites` declaration"))?;
        let e = self.elaborate(&body, &layout, &mut Vec::new())?;
        self.defs.push((name, e));
        Ok(())
    }

    fn expr(&mut self) -> PResult<SExpr> {
        let mut lhs = self.term()?;
        loop {
            if self.is_punct("+")? {
                self.next()?;
                lhs = SExpr::Sum(Box::new(lhs), Box::new(self.term()?));
            } else if self.is_punct("-")? {
                self.next()?;
                lhs = SExpr::Diff(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn starts_factor(&mut self) -> PResult<bool> {
        Ok(match &self.peek()?.tok {
            Tok::Ident(s) => !matches!(s.as_str(), "in" | "let" | "sites" | "state"),
            Tok::Num { .. } | Tok::Imag(_) => true,
            Tok::Punct(p) => *p == "(",
            Tok::Eof => false,
        })
    }

    fn term(&mut self) -> PResult<SExpr> {
        let mut lhs = self.tensor()?;
        while self.starts_factor()? {
            // A definition name followed by `=` starts the next statement
            // only after a `;`, so juxtaposition here is always a product.
            lhs = SExpr::Seq(Box::new(lhs), Box::new(self.tensor()?));
        }
        Ok(lhs)
    }

    fn tensor(&mut self) -> PResult<SExpr> {
        let mut factors = vec![self.unary()?];
        let mut hashes = Vec::new();
        while self.is_punct("#")? {
            let t = self.next()?;
            hashes.push((t.line, t.col));
            factors.push(self.unary()?);
        }
        let mut rhs = factors.pop().expect("at least one factor");
        while let Some(lhs) = factors.pop() {
            let (line, col) = hashes.pop().expect("one `#` per split");
            rhs = SExpr::Tensor(Box::new(lhs), Box::new(rhs), line, col);
        }
        Ok(rhs)
    }

    fn unary(&mut self) -> PResult<SExpr> {
        if self.is_punct("-")? {
            self.next()?;
            return Ok(SExpr::Neg(Box::new(self.unary()?)));
        }
        let save = self.at;
        if let Ok(z) = self.scalar_product() {
            if self.is_punct("*")? {
                self.next()?;
                return Ok(SExpr::Scale(z, Box::new(self.unary()?)));
            }
        }
        self.at = save;
        self.primary()
    }

    fn primary(&mut self) -> PResult<SExpr> {
        let t = self.next()?;
        match &t.tok {
            Tok::Punct("(") => {
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "dag" => {
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(SExpr::Dag(Box::new(e)))
            }
            Tok::Ident(s) if s == "sum" => {
                let (var, vt) = self.expect_ident()?;
                if KEYWORDS.contains(&var.as_str()) {
                    return Err(self.error_at(&vt, format!("`{var}` is reserved")));
                }
                self.expect_keyword("in")?;
                let lo = self.expect_int()?;
                self.expect_punct("..")?;
                let hi = self.expect_int()?;
                if hi < lo {
                    return Err(self.error_at(&t, format!("empty range {lo}..{hi}")));
                }
                self.expect_punct("{")?;
                let body = self.expr()?;
                self.expect_punct("}")?;
                Ok(SExpr::Loop {
                    var,
                    lo,
                    hi,
                    body: Box::new(body),
                })
            }
            Tok::Ident(s) => {
                if let Some(op) = LeafOp::from_name(s) {
                    let idx = if self.is_punct("(")? {
                        self.next()?;
                        let idx = self.index()?;
                        self.expect_punct(")")?;
                        Some(idx)
                    } else {
                        None
                    };
                    return Ok(SExpr::Leaf {
                        op,
                        idx,
                        line: t.line,
                        col: t.col,
                    });
                }
                if self.defs.iter().any(|(n, _)| n == s) {
                    return Ok(SExpr::Ref(s.clone(), t.line, t.col));
                }
                if self.lets.iter().any(|(n, _)| n == s) {
                    return Err(self.error_at(&t, format!("scalar `{s}` must be followed by `*` and an operator")));
                }
                Err(self.error_at(&t, format!("unknown name `{s}`")))
            }
            _ => Err(self.unexpected(&t, "an operator")),
        }
    }

    fn index(&mut self) -> PResult<Idx> {
        let t = self.peek()?.clone();
        match &t.tok {
            Tok::Num { .. } | Tok::Punct("-") => Ok(Idx {
                var: None,
                offset: self.expect_int()?,
                line: t.line,
                col: t.col,
            }),
            Tok::Ident(_) => {
                let (var, _) = self.expect_ident()?;
                let offset = if self.is_punct("+")? {
                    self.next()?;
                    self.expect_int()?
                } else if self.is_punct("-")? {
                    self.next()?;
                    -self.expect_int()?
                } else {
                    0
                };
                Ok(Idx {
                    var: Some(var),
                    offset,
                    line: t.line,
                    col: t.col,
                })
            }
            _ => Err(self.unexpected(&t, "a site index")),
        }
    }

    /// `a * b / c`, stopping before a `*` whose right side is not a scalar.
    fn scalar_product(&mut self) -> PResult<Complex64> {
        let mut acc = self.scalar_atom()?;
        loop {
            let save = self.at;
            if self.is_punct("*")? {
                self.next()?;
                match self.scalar_atom() {
                    Ok(v) => acc *= v,
                    Err(_) => {
                        self.at = save;
                        return Ok(acc);
                    }
                }
            } else if self.is_punct("/")? {
                self.next()?;
                acc /= self.scalar_atom()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn scalar_sum(&mut self) -> PResult<Complex64> {
        let mut acc = self.scalar_product()?;
        loop {
            if self.is_punct("+")? {
                self.next()?;
                acc += self.scalar_product()?;
            } else if self.is_punct("-")? {
                self.next()?;
                acc -= self.scalar_product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn scalar_atom(&mut self) -> PResult<Complex64> {
        let t = self.next()?;
        match &t.tok {
            Tok::Num { value, .. } => Ok(Complex64::new(*value, 0.0)),
            Tok::Imag(v) => Ok(Complex64::new(0.0, *v)),
            Tok::Punct("-") => Ok(-self.scalar_atom()?),
            Tok::Punct("(") => {
                let v = self.scalar_sum()?;
                self.expect_punct(")")?;
                Ok(v)
            }
            Tok::Ident(s) if s == "i" => Ok(Complex64::i()),
            Tok::Ident(s) if s == "sqrt" => {
                self.expect_punct("(")?;
                let v = self.scalar_sum()?;
                self.expect_punct(")")?;
                Ok(v.sqrt())
            }
            Tok::Ident(s) => self
                .lets
                .iter()
                .find(|(n, _)| n == s)
                .map(|(_, v)| *v)
                .ok_or_else(|| self.error_at(&t, format!("unknown scalar `{s}`"))),
            _ => Err(self.unexpected(&t, "a scalar")),
        }
    }

    fn arity(&self, e: &SExpr) -> Option<usize> {
        match e {
            SExpr::Leaf { idx, .. } => idx.is_none().then_some(1),
            SExpr::Dag(x) | SExpr::Scale(_, x) | SExpr::Neg(x) => self.arity(x),
            SExpr::Loop { body, .. } => self.arity(body),
            SExpr::Tensor(l, r, ..) => Some(self.arity(l)? + self.arity(r)?),
            SExpr::Sum(l, r) | SExpr::Diff(l, r) | SExpr::Seq(l, r) => self.arity(l).or_else(|| self.arity(r)),
            SExpr::Ref(name, ..) => self
                .defs
                .iter()
                .find(|(n, _)| n == name)
                .and_then(|(_, e)| site_layout(e).ok())
                .map(|l| l.len()),
        }
    }

    fn elaborate(&self, e: &SExpr, window: &[SiteType], env: &mut Vec<(String, i64)>) -> PResult<HamExpr> {
        let here = |line: usize, col: usize, message: String| ParseError { line, col, message };
        match e {
            SExpr::Leaf { op, idx, line, col } => match idx {
                None => {
                    if window.len() != 1 {
                        return Err(here(
                            *line,
                            *col,
                            format!("unindexed operator needs a single site but the context spans {} sites", window.len()),
                        ));
                    }
                    leaf(*op, window[0]).map_err(|m| here(*line, *col, m))
                }
                Some(idx) => {
                    let j = match &idx.var {
                        None => idx.offset,
                        Some(v) => {
                            let base = env
                                .iter()
                                .rev()
                                .find(|(n, _)| n == v)
                                .map(|(_, x)| *x)
                                .ok_or_else(|| here(idx.line, idx.col, format!("unbound index `{v}`")))?;
                            base + idx.offset
                        }
                    };
                    if j < 0 || j as usize >= window.len() {
                        return Err(here(
                            idx.line,
                            idx.col,
                            format!("site index {j} out of range for {} sites", window.len()),
                        ));
                    }
                    let j = j as usize;
                    let op = leaf(*op, window[j]).map_err(|m| here(*line, *col, m))?;
                    desugar_indexed(op, j, window).map_err(|err: AstError| here(*line, *col, err.to_string()))
                }
            },
            SExpr::Dag(x) => Ok(HamExpr::dagger(self.elaborate(x, window, env)?)),
            SExpr::Scale(z, x) => Ok(scale(*z, self.elaborate(x, window, env)?)),
            SExpr::Neg(x) => Ok(scale(Complex64::new(-1.0, 0.0), self.elaborate(x, window, env)?)),
            SExpr::Sum(l, r) => Ok(HamExpr::sum(self.elaborate(l, window, env)?, self.elaborate(r, window, env)?)),
            SExpr::Diff(l, r) => Ok(HamExpr::sum(
                self.elaborate(l, window, env)?,
                scale(Complex64::new(-1.0, 0.0), self.elaborate(r, window, env)?),
            )),
            SExpr::Seq(l, r) => Ok(HamExpr::seq(self.elaborate(l, window, env)?, self.elaborate(r, window, env)?)),
            SExpr::Tensor(l, r, line, col) => {
                let k = match (self.arity(l), self.arity(r)) {
                    (Some(k), _) => Some(k),
                    (None, Some(kr)) => window.len().checked_sub(kr),
                    (None, None) => None,
                };
                let k = k
                    .filter(|&k| k >= 1 && k < window.len())
                    .ok_or_else(|| here(*line, *col, format!("cannot split {} sites across `#`", window.len())))?;
                let (lw, rw) = window.split_at(k);
                Ok(HamExpr::tensor(self.elaborate(l, lw, env)?, self.elaborate(r, rw, env)?))
            }
            SExpr::Ref(name, line, col) => {
                let def = self
                    .defs
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, e)| e.clone())
                    .ok_or_else(|| here(*line, *col, format!("unknown name `{name}`")))?;
                let layout = site_layout(&def).map_err(|err| here(*line, *col, err.to_string()))?;
                if layout.0 != window {
                    return Err(here(
                        *line,
                        *col,
                        format!("`{name}` acts on {layout} but is used on {}", SiteList(window.to_vec())),
                    ));
                }
                Ok(def)
            }
            SExpr::Loop { var, lo, hi, body } => {
                let mut terms = Vec::new();
                for j in *lo..=*hi {
                    env.push((var.clone(), j));
                    let t = self.elaborate(body, window, env);
                    env.pop();
                    terms.push(t?);
                }
                Ok(crate::ast::sum_chain(terms).expect("non-empty range"))
            }
        }
    }
}

fn leaf(op: LeafOp, site: SiteType) -> Result<HamExpr, String> {
    let c = || HamExpr::create(site);
    let a = || HamExpr::annihilate(site);
    let neg = Complex64::new(-1.0, 0.0);
    if matches!(op, LeafOp::X | LeafOp::Y | LeafOp::Z) && site.dim() != 2 {
        return Err(format!("Pauli sugar needs a two-level site, not {site}"));
    }
    Ok(match op {
        LeafOp::Create => c(),
        LeafOp::Annihilate => a(),
        LeafOp::Identity => HamExpr::identity(site),
        LeafOp::X => HamExpr::sum(c(), a()),
        LeafOp::Y => HamExpr::sum(scale(Complex64::i(), a()), scale(-Complex64::i(), c())),
        LeafOp::Z => HamExpr::sum(HamExpr::seq(c(), a()), scale(neg, HamExpr::seq(a(), c()))),
    })
}

/// Parses and elaborates a program.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    Parser::new(source).program()
}

fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("({}{}{}i)", z.re + 0.0, sign, z.im.abs())
}

/// Surface text for an expression, using bare leaves and `#`. Parsing the
/// text against the expression's own layout rebuilds the same tree.
pub fn pretty(e: &HamExpr) -> String {
    let one = Complex64::new(1.0, 0.0);
    match e {
        HamExpr::Ladder { kind, amp, .. } => {
            let name = match kind {
                LadderKind::Create => "adag",
                LadderKind::Annihilate => "a",
            };
            if *amp == one {
                name.to_string()
            } else {
                format!("{} * {name}", fmt_complex(*amp))
            }
        }
        HamExpr::Identity { amp, .. } => {
            if *amp == one {
                "I".to_string()
            } else {
                format!("{} * I", fmt_complex(*amp))
            }
        }
        HamExpr::Dagger(x) => format!("dag({})", pretty(x)),
        HamExpr::Tensor(l, r) => format!("({} # {})", pretty(l), pretty(r)),
        HamExpr::Sum(l, r) => format!("({} + {})", pretty(l), pretty(r)),
        // `a (x)` would read back as the indexed leaf `a(x)`.
        HamExpr::Seq(l, r) => match **l {
            HamExpr::Ladder { .. } | HamExpr::Identity { .. } => format!("(({}) {})", pretty(l), pretty(r)),
            _ => format!("({} {})", pretty(l), pretty(r)),
        },
    }
}

/// Source text for a whole program.
pub fn pretty_program(p: &Program) -> String {
    let mut out = format!("sites {};\n", p.layout.to_decl());
    for (name, e) in &p.definitions {
        out.push_str(&format!("{name} = {};\n", pretty(e)));
    }
    for (name, s) in &p.states {
        let body = s.to_text(&p.layout);
        let kets: Vec<&str> = body.lines().skip(1).collect();
        out.push_str(&format!("state {name} {{\n  {}\n}}\n", kets.join("\n  ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{expr_to_matrix, max_abs};

    const T2: SiteType = SiteType::QUBIT;

    #[test]
    fn hopping_program() {
        let p = parse("sites t(2), t(2); H = adag(0) a(1) + adag(1) a(0);").unwrap();
        let (name, h) = p.main().unwrap();
        assert_eq!(name, "H");
        let expected = HamExpr::sum(
            HamExpr::seq(
                desugar_indexed(HamExpr::create(T2), 0, &[T2, T2]).unwrap(),
                desugar_indexed(HamExpr::annihilate(T2), 1, &[T2, T2]).unwrap(),
            ),
            HamExpr::seq(
                desugar_indexed(HamExpr::create(T2), 1, &[T2, T2]).unwrap(),
                desugar_indexed(HamExpr::annihilate(T2), 0, &[T2, T2]).unwrap(),
            ),
        );
        assert_eq!(*h, expected);
    }

    #[test]
    fn sum_loop_is_inclusive() {
        let p = parse("sites t(2), t(2), t(2); H = sum j in 0..1 { adag(j) a(j+1) };").unwrap();
        let h = p.get("H").unwrap();
        match h {
            HamExpr::Sum(_, r) => assert!(matches!(**r, HamExpr::Seq(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("sites t(2);\nH = a(0").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("end of input"), "{err}");
        let unbound = parse("sites t(2); H = a(k);").unwrap_err();
        assert!(unbound.message.contains("unbound index"));
        let range = parse("sites t(2); H = a(1);").unwrap_err();
        assert!(range.message.contains("out of range"));
        assert_eq!((range.line, range.col), (1, 19));
        assert!(parse("H = a(0);").is_err());
        assert!(parse("sites t(2); H = a(0); H = a(0);").is_err());
    }

    #[test]
    fn scalars() {
        let p = parse(
            "sites t(2);\nlet g = sqrt(2) / 4;\nA = 2i * a(0);\nB = -(0.5-0.5i) * adag(0);\nC = g * 2 * I(0);\nD = 1e-1 * X(0) - i * Y(0);",
        )
        .unwrap();
        assert!(matches!(p.get("A").unwrap(), HamExpr::Ladder { amp, .. } if *amp == Complex64::new(0.0, 2.0)));
        assert!(matches!(p.get("B").unwrap(), HamExpr::Ladder { amp, .. } if *amp == Complex64::new(-0.5, 0.5)));
        assert!(matches!(p.get("C").unwrap(), HamExpr::Identity { amp, .. } if (amp.re - 2f64.sqrt() / 2.0).abs() < 1e-15));
        assert!(p.get("D").is_some());
    }

    #[test]
    fn tensor_and_local_leaves() {
        let p = parse("sites t(4), t(2); H = a # (adag + a); K = a(0) (X(1));").unwrap();
        let h = expr_to_matrix(p.get("H").unwrap()).unwrap().mat;
        let k = expr_to_matrix(p.get("K").unwrap()).unwrap().mat;
        assert!(max_abs(&(h - k)) < 1e-15);
        assert!(parse("sites t(2), t(2); H = a;").is_err());
    }

    #[test]
    fn references_and_states() {
        let src = "sites t(2), t(2);\nA = Z(0) Z(1);\nB = A + 0.5 * X(0);\nstate psi {\n  (1,0) |0,1⟩\n  (0,1) |1,0⟩\n}\nC = dag(B);\n";
        let p = parse(src).unwrap();
        assert_eq!(p.definitions.len(), 3);
        let psi = p.state("psi").unwrap();
        assert_eq!(psi.kets().len(), 2);
        assert_eq!(p.main().unwrap().0, "C");
    }

    #[test]
    fn pretty_round_trip() {
        let src = "sites t(2), t(4), F;\nlet z = 0.25;\nH = sum j in 0..1 { adag(j) a(j+1) } + dag(z * a(2) (I(0) + -1 * adag(1))) - 2i * I(0);";
        let p = parse(src).unwrap();
        let printed = pretty_program(&p);
        let q = parse(&printed).unwrap();
        assert_eq!(p, q);
        assert_eq!(pretty_program(&q), printed);
    }

    #[test]
    fn comments_and_numbers() {
        let p = parse("// leading comment\nsites t(2); // layout\nH = .5 * X(0) + 1.5e0 * Z(0);").unwrap();
        assert!(p.get("H").is_some());
    }
}
