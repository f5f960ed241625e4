//! First-order Trotterization, Pauli-exponential gadgets, analog template
//! fitting and a dense simulator for the emitted circuits.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::ast::{HamExpr, SiteList};
use crate::encodings::{encode, Encoding, EncodingError, EncodingReport};
use crate::matrix::DenseOperator;
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::typecheck::{check, TypeError};

/// Widest circuit `circuit_to_matrix` will simulate.
pub const MAX_SIM_WIDTH: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H { q: usize },
    S { q: usize },
    Sdg { q: usize },
    CX { control: usize, target: usize },
    RX { angle: f64, q: usize },
    RY { angle: f64, q: usize },
    RZ { angle: f64, q: usize },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H { q } | Gate::S { q } | Gate::Sdg { q } => vec![q],
            Gate::RX { q, .. } | Gate::RY { q, .. } | Gate::RZ { q, .. } => vec![q],
            Gate::CX { control, target } => vec![control, target],
        }
    }

    fn single_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::i();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Some(match *self {
            Gate::H { .. } => {
                let h = Complex64::new(r, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::S { .. } => [[one, z], [z, i]],
            Gate::Sdg { .. } => [[one, z], [z, -i]],
            Gate::RX { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
            }
            Gate::RY { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
            }
            Gate::RZ { angle, .. } => [
                [Complex64::from_polar(1.0, -angle / 2.0), z],
                [z, Complex64::from_polar(1.0, angle / 2.0)],
            ],
            Gate::CX { .. } => return None,
        })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { q } => write!(f, "h {q}"),
            Gate::S { q } => write!(f, "s {q}"),
            Gate::Sdg { q } => write!(f, "sdg {q}"),
            Gate::CX { control, target } => write!(f, "cx {control} {target}"),
            Gate::RX { angle, q } => write!(f, "rx {angle} {q}"),
            Gate::RY { angle, q } => write!(f, "ry {angle} {q}"),
            Gate::RZ { angle, q } => write!(f, "rz {angle} {q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrotterError {
    #[error("Hamiltonian has complex coefficients and is not Hermitian")]
    NotHermitian,
    #[error("step count must be at least 1")]
    ZeroSteps,
    #[error("identity string has no gadget; fold it into the global phase")]
    IdentityString,
    #[error("gate {gate} is out of range for width {width}")]
    BadGate { gate: String, width: usize },
    #[error("circuit width {0} exceeds the simulator cap of {MAX_SIM_WIDTH}")]
    TooWide(usize),
    #[error("malformed circuit at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit {
    pub width: usize,
    pub gates: Vec<Gate>,
    pub global_phase: f64,
}

impl Circuit {
    pub fn new(width: usize) -> Circuit {
        Circuit {
            width,
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    /// Appends a gate after checking its qubit indices.
    pub fn push(&mut self, gate: Gate) -> Result<(), TrotterError> {
        let qs = gate.qubits();
        let distinct = qs.len() < 2 || qs[0] != qs[1];
        if !distinct || qs.iter().any(|&q| q >= self.width) {
            return Err(TrotterError::BadGate {
                gate: gate.to_string(),
                width: self.width,
            });
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn count(&self, pred: impl Fn(&Gate) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(g)).count()
    }
}

/// `qubits N; phase <rad>;` then one gate per line.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}; phase {};", self.width, self.global_phase)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = TrotterError;

    fn from_str(text: &str) -> Result<Circuit, TrotterError> {
        let mut circuit: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let err = |message: String| TrotterError::Parse { line: i + 1, message };
            let Some(c) = circuit.as_mut() else {
                let parts: Vec<&str> = line.split(';').map(str::trim).collect();
                let width = parts
                    .first()
                    .and_then(|p| p.strip_prefix("qubits "))
                    .and_then(|w| w.trim().parse().ok())
                    .ok_or_else(|| err("expected `qubits N; phase P;` header".into()))?;
                let phase = parts
                    .get(1)
                    .and_then(|p| p.strip_prefix("phase "))
                    .and_then(|w| w.trim().parse().ok())
                    .ok_or_else(|| err("expected `phase P` in header".into()))?;
                circuit = Some(Circuit {
                    width,
                    gates: Vec::new(),
                    global_phase: phase,
                });
                continue;
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let q = |k: usize| -> Result<usize, TrotterError> {
                toks.get(k)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(format!("bad qubit operand in {line:?}")))
            };
            let angle = || -> Result<f64, TrotterError> {
                toks.get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(format!("bad angle in {line:?}")))
            };
            let gate = match toks[0] {
                "h" => Gate::H { q: q(1)? },
                "s" => Gate::S { q: q(1)? },
                "sdg" => Gate::Sdg { q: q(1)? },
                "cx" => Gate::CX {
                    control: q(1)?,
                    target: q(2)?,
                },
                "rx" => Gate::RX { angle: angle()?, q: q(2)? },
                "ry" => Gate::RY { angle: angle()?, q: q(2)? },
                "rz" => Gate::RZ { angle: angle()?, q: q(2)? },
                other => return Err(err(format!("unknown gate {other:?}"))),
            };
            c.push(gate)?;
        }
        circuit.ok_or(TrotterError::Parse {
            line: 0,
            message: "empty circuit file".into(),
        })
    }
}

/// One Trotter step: `(string, angle)` pairs applied in order, repeated
/// `steps` times. Identity terms are folded into `global_phase`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrotterPlan {
    pub steps: usize,
    pub time: f64,
    pub n_qubits: usize,
    pub slices: Vec<(PauliString, f64)>,
    pub global_phase: f64,
}

pub fn trotterize(hs: &PauliSum, t: f64, n: usize) -> Result<TrotterPlan, TrotterError> {
    if !hs.is_hermitian() {
        return Err(TrotterError::NotHermitian);
    }
    if n == 0 {
        return Err(TrotterError::ZeroSteps);
    }
    let mut slices = Vec::new();
    let mut global_phase = 0.0;
    for (p, c) in hs.terms() {
        if p.is_identity() {
            global_phase -= c.re * t;
        } else {
            slices.push((p.clone(), 2.0 * c.re * t / n as f64));
        }
    }
    Ok(TrotterPlan {
        steps: n,
        time: t,
        n_qubits: hs.n_qubits(),
        slices,
        global_phase,
    })
}

/// Exact `e^{-i(θ/2)P}` for a single Pauli string.
pub fn pauli_exponential(p: &PauliString, angle: f64) -> DMatrix<Complex64> {
    let pm = PauliSum::from_term(Complex64::new(1.0, 0.0), p.clone())
        .to_matrix()
        .expect("string within simulator width");
    let dim = pm.nrows();
    let (s, c) = (angle / 2.0).sin_cos();
    DMatrix::identity(dim, dim) * Complex64::new(c, 0.0) - pm * Complex64::new(0.0, s)
}

/// The unitary the plan denotes, built from exact per-term exponentials.
pub fn plan_unitary(plan: &TrotterPlan) -> DMatrix<Complex64> {
    let dim = 1usize << plan.n_qubits;
    let mut step = DMatrix::identity(dim, dim);
    for (p, angle) in &plan.slices {
        step = pauli_exponential(p, *angle) * step;
    }
    let mut u = DMatrix::identity(dim, dim);
    for _ in 0..plan.steps {
        u = &step * u;
    }
    u * Complex64::from_polar(1.0, plan.global_phase)
}

/// Gates for `e^{-i(θ/2)P}`: basis changes into `Z`, a CX ladder into the
/// highest active qubit, `RZ(θ)`, then the inverse ladder and basis changes.
/// Single-qubit strings become a bare rotation.
pub fn synthesize_term(p: &PauliString, angle: f64) -> Result<Circuit, TrotterError> {
    let active = p.support();
    if active.is_empty() {
        return Err(TrotterError::IdentityString);
    }
    let mut c = Circuit::new(p.len());
    if let [q] = active[..] {
        c.push(match p.0[q] {
            Pauli::X => Gate::RX { angle, q },
            Pauli::Y => Gate::RY { angle, q },
            _ => Gate::RZ { angle, q },
        })?;
        return Ok(c);
    }
    for &q in &active {
        match p.0[q] {
            Pauli::X => c.push(Gate::H { q })?,
            Pauli::Y => {
                c.push(Gate::Sdg { q })?;
                c.push(Gate::H { q })?;
            }
            _ => {}
        }
    }
    for w in active.windows(2) {
        c.push(Gate::CX {
            control: w[0],
            target: w[1],
        })?;
    }
    let last = *active.last().expect("non-empty support");
    c.push(Gate::RZ { angle, q: last })?;
    for w in active.windows(2).rev() {
        c.push(Gate::CX {
            control: w[0],
            target: w[1],
        })?;
    }
    for &q in &active {
        match p.0[q] {
            Pauli::X => c.push(Gate::H { q })?,
            Pauli::Y => {
                c.push(Gate::H { q })?;
                c.push(Gate::S { q })?;
            }
            _ => {}
        }
    }
    Ok(c)
}

/// Concatenates the gadgets of every slice, `steps` times.
pub fn synthesize_plan(plan: &TrotterPlan) -> Result<Circuit, TrotterError> {
    let mut step = Vec::new();
    for (p, angle) in &plan.slices {
        step.extend(synthesize_term(p, *angle)?.gates);
    }
    let mut c = Circuit::new(plan.n_qubits);
    c.global_phase = plan.global_phase;
    for _ in 0..plan.steps {
        for g in &step {
            c.push(*g)?;
        }
    }
    Ok(c)
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("only Hermitian programs compile; this one types as {0}")]
    NotHermitian(String),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Trotter(#[from] TrotterError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Compiled {
    pub circuit: Circuit,
    pub report: EncodingReport,
    pub hamiltonian: PauliSum,
}

/// Encodes a Hermitian program to qubits, Trotterizes it and synthesizes the
/// circuit. Without an explicit encoding the layout's default is used.
pub fn compile_digital(e: &HamExpr, t: f64, n: usize, encoding: Option<Encoding>) -> Result<Compiled, CompileError> {
    let judgment = check(e)?;
    if judgment.ty.flag != crate::ast::Flag::H {
        return Err(CompileError::NotHermitian(judgment.ty.to_string()));
    }
    let encoding = match encoding {
        Some(enc) => enc,
        None => Encoding::default_for(&judgment.ty.sites)?,
    };
    let (hamiltonian, report) = encode(e, encoding)?;
    let plan = trotterize(&hamiltonian, t, n)?;
    let circuit = synthesize_plan(&plan)?;
    Ok(Compiled {
        circuit,
        report,
        hamiltonian,
    })
}

fn apply_single(u: &mut DMatrix<Complex64>, width: usize, q: usize, m: [[Complex64; 2]; 2]) {
    let dim = u.nrows();
    let bit = 1usize << (width - 1 - q);
    for col in u.column_iter_mut() {
        let mut col = col;
        for i in 0..dim {
            if i & bit == 0 {
                let (a, b) = (col[i], col[i | bit]);
                col[i] = m[0][0] * a + m[0][1] * b;
                col[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }
}

fn apply_cx(u: &mut DMatrix<Complex64>, width: usize, control: usize, target: usize) {
    let dim = u.nrows();
    let cb = 1usize << (width - 1 - control);
    let tb = 1usize << (width - 1 - target);
    for mut col in u.column_iter_mut() {
        for i in 0..dim {
            if i & cb != 0 && i & tb == 0 {
                col.swap_rows(i, i | tb);
            }
        }
    }
}

/// Dense unitary of a circuit, qubit 0 most significant.
pub fn circuit_to_matrix(c: &Circuit) -> Result<DenseOperator, TrotterError> {
    if c.width > MAX_SIM_WIDTH {
        return Err(TrotterError::TooWide(c.width));
    }
    let dim = 1usize << c.width;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for g in &c.gates {
        match (*g, g.single_matrix()) {
            (Gate::CX { control, target }, _) => apply_cx(&mut u, c.width, control, target),
            (g, Some(m)) => apply_single(&mut u, c.width, g.qubits()[0], m),
            (_, None) => unreachable!("only CX lacks a single-qubit matrix"),
        }
    }
    Ok(DenseOperator::new(
        SiteList::qubits(c.width),
        u * Complex64::from_polar(1.0, c.global_phase),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Acts on adjacent qubits `(j, j+1)`.
    Pair,
    /// Acts on one qubit.
    Site,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Template {
    pub name: String,
    pub scope: Scope,
    pub pattern: Vec<Pauli>,
}

/// A machine Hamiltonian: the interaction patterns whose real coefficients
/// can be freely set. Identity terms go to a global offset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineSpec {
    pub name: String,
    pub templates: Vec<Template>,
}

impl MachineSpec {
    /// `z1 Z⊗X + z2 Z⊗Z + z3 Z⊗I + z4 I⊗X` on each adjacent pair, plus
    /// single-qubit `X` and `Z` rotations for qubits no pair slot reaches.
    pub fn ibm() -> MachineSpec {
        use Pauli::*;
        let pair = |name: &str, a, b| Template {
            name: name.into(),
            scope: Scope::Pair,
            pattern: vec![a, b],
        };
        let site = |name: &str, a| Template {
            name: name.into(),
            scope: Scope::Site,
            pattern: vec![a],
        };
        MachineSpec {
            name: "ibm".into(),
            templates: vec![
                pair("z1", Z, X),
                pair("z2", Z, Z),
                pair("z3", Z, I),
                pair("z4", I, X),
                site("x", X),
                site("z", Z),
            ],
        }
    }

    pub fn by_name(name: &str) -> Option<MachineSpec> {
        match name {
            "ibm" => Some(MachineSpec::ibm()),
            _ => None,
        }
    }

    fn pair_templates(&self) -> impl Iterator<Item = &Template> {
        self.templates.iter().filter(|t| t.scope == Scope::Pair)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSlot {
    pub first: usize,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteSlot {
    pub qubit: usize,
    pub values: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalogSchedule {
    pub machine: String,
    pub n_qubits: usize,
    pub pairs: Vec<PairSlot>,
    pub sites: Vec<SiteSlot>,
    pub offset: f64,
}

impl AnalogSchedule {
    pub fn pair_value(&self, first: usize, name: &str) -> Option<f64> {
        self.pairs
            .iter()
            .find(|p| p.first == first)
            .and_then(|p| p.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
    }

    pub fn site_value(&self, qubit: usize, name: &str) -> Option<f64> {
        self.sites
            .iter()
            .find(|s| s.qubit == qubit)
            .and_then(|s| s.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && self.sites.is_empty() && self.offset == 0.0
    }

    /// The Hamiltonian the schedule programs.
    pub fn to_pauli_sum(&self, spec: &MachineSpec) -> PauliSum {
        let n = self.n_qubits;
        let mut out = PauliSum::zero(n);
        let place = |at: usize, pattern: &[Pauli]| {
            let mut s = PauliString::identity(n);
            s.0[at..at + pattern.len()].copy_from_slice(pattern);
            s
        };
        for slot in &self.pairs {
            for (name, v) in &slot.values {
                if let Some(t) = spec.templates.iter().find(|t| &t.name == name) {
                    out.add_term(Complex64::new(*v, 0.0), place(slot.first, &t.pattern));
                }
            }
        }
        for slot in &self.sites {
            for (name, v) in &slot.values {
                if let Some(t) = spec.templates.iter().find(|t| &t.name == name) {
                    out.add_term(Complex64::new(*v, 0.0), place(slot.qubit, &t.pattern));
                }
            }
        }
        if n > 0 {
            out.add_term(Complex64::new(self.offset, 0.0), PauliString::identity(n));
        }
        out
    }
}

impl fmt::Display for AnalogSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for slot in &self.pairs {
            let vals: Vec<String> = slot.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
            writeln!(f, "pair {} {}: {}", slot.first, slot.first + 1, vals.join(" "))?;
        }
        for slot in &self.sites {
            let vals: Vec<String> = slot.values.iter().map(|(n, v)| format!("{n}={v}")).collect();
            writeln!(f, "site {}: {}", slot.qubit, vals.join(" "))?;
        }
        if self.offset != 0.0 {
            writeln!(f, "offset: {}", self.offset)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("Hamiltonian has complex coefficients and is not Hermitian")]
    NotHermitian,
    #[error("no {machine} template covers: {}", .terms.iter().map(|(p, c)| format!("{c} {p}")).collect::<Vec<_>>().join(", "))]
    Uncovered { machine: String, terms: Vec<(PauliString, f64)> },
}

/// Assigns every term to exactly one template slot.
///
/// Two-qubit terms must sit on an adjacent pair. A single-qubit term prefers
/// the pair ending at its qubit, then the pair starting there, then a
/// single-site template.
pub fn fit_machine(hs: &PauliSum, spec: &MachineSpec) -> Result<AnalogSchedule, FitError> {
    if !hs.is_hermitian() {
        return Err(FitError::NotHermitian);
    }
    let n = hs.n_qubits();
    let mut pair_vals: Vec<Vec<f64>> = vec![vec![0.0; spec.pair_templates().count()]; n.saturating_sub(1)];
    let mut pair_used = vec![false; n.saturating_sub(1)];
    let site_templates: Vec<&Template> = spec.templates.iter().filter(|t| t.scope == Scope::Site).collect();
    let mut site_vals: Vec<Vec<f64>> = vec![vec![0.0; site_templates.len()]; n];
    let mut offset = 0.0;
    let mut uncovered = Vec::new();

    let find_pair = |pattern: [Pauli; 2]| spec.pair_templates().position(|t| t.pattern[..] == pattern);

    for (p, c) in hs.terms() {
        let v = c.re;
        let support = p.support();
        let slot = match support[..] {
            [] => {
                offset += v;
                continue;
            }
            [j, k] if k == j + 1 => find_pair([p.0[j], p.0[k]]).map(|t| (j, t)),
            [q] => {
                let letter = p.0[q];
                let before = (q > 0)
                    .then(|| find_pair([Pauli::I, letter]).map(|t| (q - 1, t)))
                    .flatten();
                let after = (q + 1 < n)
                    .then(|| find_pair([letter, Pauli::I]).map(|t| (q, t)))
                    .flatten();
                match before.or(after) {
                    Some(s) => Some(s),
                    None => {
                        if let Some(t) = site_templates.iter().position(|t| t.pattern == [letter]) {
                            site_vals[q][t] += v;
                            continue;
                        }
                        None
                    }
                }
            }
            _ => None,
        };
        match slot {
            Some((j, t)) => {
                pair_vals[j][t] += v;
                pair_used[j] = true;
            }
            None => uncovered.push((p.clone(), v)),
        }
    }
    if !uncovered.is_empty() {
        return Err(FitError::Uncovered {
            machine: spec.name.clone(),
            terms: uncovered,
        });
    }
    let pair_names: Vec<String> = spec.pair_templates().map(|t| t.name.clone()).collect();
    let pairs = pair_vals
        .into_iter()
        .enumerate()
        .filter(|(j, _)| pair_used[*j])
        .map(|(first, vals)| PairSlot {
            first,
            values: pair_names.iter().cloned().zip(vals).collect(),
        })
        .collect();
    let sites = site_vals
        .into_iter()
        .enumerate()
        .filter(|(_, vals)| vals.iter().any(|&v| v != 0.0))
        .map(|(qubit, vals)| SiteSlot {
            qubit,
            values: site_templates
                .iter()
                .zip(vals)
                .filter(|(_, v)| *v != 0.0)
                .map(|(t, v)| (t.name.clone(), v))
                .collect(),
        })
        .collect();
    Ok(AnalogSchedule {
        machine: spec.name.clone(),
        n_qubits: n,
        pairs,
        sites,
        offset,
    })
}
