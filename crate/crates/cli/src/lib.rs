//! Command pipeline behind the `qblue` binary.
//!
//! Every command returns an [`Outcome`] with a human-readable text form and a
//! JSON form, or a [`Failure`] that knows its exit code and renders as a
//! single JSON diagnostic line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use qblue::ast::{Flag, HamExpr, SiteList};
use qblue::encodings::{encode, Encoding, EncodingError, EncodingReport};
use qblue::lang::{self, Program};
use qblue::matrix::{expr_to_matrix, ground_energy, matrix_exp_sim, phase_distance, DenseOperator, MatrixError};
use qblue::pauli::{PauliError, PauliSum};
use qblue::semantics::{apply, FockState, StateError};
use qblue::trotter::{circuit_to_matrix, compile_digital, fit_machine, Circuit, CompileError, MachineSpec, TrotterError};
use qblue::typecheck::{check, TypeError};

#[derive(Debug, Parser)]
#[command(name = "qblue", version, about = "Check, run and compile second-quantized Hamiltonian programs")]
pub struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Target {
    /// Program file.
    pub file: PathBuf,
    /// Definition to use; defaults to the last one in the file.
    pub def: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the type of every definition.
    Check {
        file: PathBuf,
    },
    /// Apply a definition to a state.
    Eval {
        #[command(flatten)]
        target: Target,
        /// A state literal file, or the name of a `state` block in the program.
        #[arg(long)]
        state: String,
    },
    /// Smallest eigenvalue and its eigenstate.
    Energy {
        #[command(flatten)]
        target: Target,
    },
    /// Trotterize and synthesize a gate circuit.
    Compile {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        n: usize,
        /// `direct`, `jw` or `hp:<n>`.
        #[arg(long)]
        encode: Option<String>,
        /// Circuit file; the encoding report goes next to it as `.report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the encoded Hamiltonian onto an analog machine's templates.
    Fit {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value = "ibm")]
        machine: String,
        #[arg(long)]
        encode: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance, up to global phase, between a circuit and exact evolution.
    Verify {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        t: f64,
        /// Circuit file to check; without it the program is compiled with `--n` steps.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        encode: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Parse,
    Type,
    Compile,
    DimensionCap,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Usage => 1,
            FailureKind::Parse => 2,
            FailureKind::Type => 3,
            FailureKind::Compile => 4,
            FailureKind::DimensionCap => 5,
        }
    }

    fn name(self) -> &'static str {
        match self {
            FailureKind::Usage => "usage",
            FailureKind::Parse => "parse",
            FailureKind::Type => "type",
            FailureKind::Compile => "compile",
            FailureKind::DimensionCap => "dimension_cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    pub file: Option<PathBuf>,
    pub position: Option<(usize, usize)>,
}

impl Failure {
    fn new(kind: FailureKind, message: impl Into<String>) -> Failure {
        Failure {
            kind,
            message: message.into(),
            file: None,
            position: None,
        }
    }

    fn in_file(mut self, file: &Path) -> Failure {
        self.file = Some(file.to_path_buf());
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// One JSON object, suitable for a JSON-lines diagnostic stream.
    pub fn to_json_line(&self) -> String {
        let mut v = json!({
            "severity": "error",
            "kind": self.kind.name(),
            "exit_code": self.exit_code(),
            "message": self.message,
        });
        if let Some(file) = &self.file {
            v["file"] = json!(file.display().to_string());
        }
        if let Some((line, col)) = self.position {
            v["line"] = json!(line);
            v["col"] = json!(col);
        }
        v.to_string()
    }
}

impl From<TypeError> for Failure {
    fn from(e: TypeError) -> Self {
        Failure::new(FailureKind::Type, e.to_string())
    }
}

impl From<MatrixError> for Failure {
    fn from(e: MatrixError) -> Self {
        let kind = match e {
            MatrixError::DimensionCap { .. } => FailureKind::DimensionCap,
            MatrixError::NotHermitian(_) => FailureKind::Type,
            _ => FailureKind::Compile,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<PauliError> for Failure {
    fn from(e: PauliError) -> Self {
        let kind = match e {
            PauliError::TooLarge(_) => FailureKind::DimensionCap,
            _ => FailureKind::Compile,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<EncodingError> for Failure {
    fn from(e: EncodingError) -> Self {
        Failure::new(FailureKind::Compile, e.to_string())
    }
}

impl From<TrotterError> for Failure {
    fn from(e: TrotterError) -> Self {
        let kind = match e {
            TrotterError::TooWide(_) => FailureKind::DimensionCap,
            TrotterError::Parse { .. } => FailureKind::Parse,
            _ => FailureKind::Compile,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<CompileError> for Failure {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Type(t) => t.into(),
            CompileError::NotHermitian(_) => Failure::new(FailureKind::Type, e.to_string()),
            CompileError::Encoding(x) => x.into(),
            CompileError::Trotter(x) => x.into(),
        }
    }
}

impl From<StateError> for Failure {
    fn from(e: StateError) -> Self {
        let kind = match e {
            StateError::Parse { .. } | StateError::InvalidOccupation { .. } | StateError::WrongLength { .. } => FailureKind::Parse,
            _ => FailureKind::Type,
        };
        Failure::new(kind, e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub json: Value,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(FailureKind::Usage, format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(FailureKind::Usage, format!("cannot write {}: {e}", path.display())))
}

pub fn load_program(path: &Path) -> Result<Program, Failure> {
    let src = read(path)?;
    lang::parse(&src).map_err(|e| Failure {
        kind: FailureKind::Parse,
        message: e.message,
        file: Some(path.to_path_buf()),
        position: Some((e.line, e.col)),
    })
}

fn pick<'p>(program: &'p Program, target: &Target) -> Result<(&'p str, &'p HamExpr), Failure> {
    match &target.def {
        Some(name) => program
            .definitions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, e)| (n.as_str(), e))
            .ok_or_else(|| Failure::new(FailureKind::Usage, format!("no definition named `{name}`")).in_file(&target.file)),
        None => program
            .main()
            .ok_or_else(|| Failure::new(FailureKind::Usage, "program has no definitions").in_file(&target.file)),
    }
}

fn parse_encoding(text: Option<&str>) -> Result<Option<Encoding>, Failure> {
    text.map(|t| {
        Encoding::parse(t).ok_or_else(|| Failure::new(FailureKind::Usage, format!("unknown encoding {t:?}; use direct, jw or hp:<n>")))
    })
    .transpose()
}

fn require_hermitian(name: &str, e: &HamExpr) -> Result<SiteList, Failure> {
    let j = check(e)?;
    if j.ty.flag != Flag::H {
        return Err(Failure::new(
            FailureKind::Type,
            format!("`{name}` has type {}; a Hermitian operator is required", j.ty),
        ));
    }
    Ok(j.ty.sites)
}

fn encode_hermitian(name: &str, e: &HamExpr, encoding: Option<Encoding>) -> Result<(PauliSum, EncodingReport), Failure> {
    let sites = require_hermitian(name, e)?;
    let encoding = match encoding {
        Some(enc) => enc,
        None => Encoding::default_for(&sites)?,
    };
    Ok(encode(e, encoding)?)
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn state_json(s: &FockState) -> Value {
    Value::Array(
        s.kets()
            .iter()
            .map(|k| json!({ "amp": complex_json(k.amp), "occ": k.occ }))
            .collect(),
    )
}

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Check { file } => run_check(file),
        Command::Eval { target, state } => run_eval(target, state),
        Command::Energy { target } => run_energy(target),
        Command::Compile {
            target,
            t,
            n,
            encode,
            out,
        } => run_compile(target, *t, *n, encode.as_deref(), out.as_deref()),
        Command::Fit {
            target,
            machine,
            encode,
            out,
        } => run_fit(target, machine, encode.as_deref(), out.as_deref()),
        Command::Verify {
            target,
            t,
            circuit,
            n,
            encode,
        } => run_verify(target, *t, circuit.as_deref(), *n, encode.as_deref()),
    }
}

fn run_check(file: &Path) -> Result<Outcome, Failure> {
    let program = load_program(file)?;
    let mut text = String::new();
    let mut defs = Vec::new();
    for (name, e) in &program.definitions {
        let j = check(e).map_err(|err| Failure::from(err).in_file(file))?;
        text.push_str(&format!("{name} : {}\n", j.ty));
        defs.push(json!({
            "name": name,
            "type": j.ty.to_string(),
            "flag": j.ty.flag,
            "sites": j.ty.sites,
            "decided_by": j.hermiticity.decided_by,
        }));
    }
    Ok(Outcome {
        text,
        json: json!({ "layout": program.layout, "definitions": defs }),
    })
}

fn run_eval(target: &Target, state: &str) -> Result<Outcome, Failure> {
    let program = load_program(&target.file)?;
    let (_, e) = pick(&program, target)?;
    let input = match program.state(state) {
        Some(s) => s.clone(),
        None => {
            let path = Path::new(state);
            FockState::parse(&read(path)?).map_err(|err| Failure::from(err).in_file(path))?
        }
    };
    check(e)?;
    let out = apply(e, &input)?;
    let text = match out.layout() {
        Some(layout) => out.to_text(layout),
        None => format!("sites: {}\n0\n", program.layout.to_decl()),
    };
    Ok(Outcome {
        text,
        json: json!({ "zero": out.is_zero(), "kets": state_json(&out) }),
    })
}

fn run_energy(target: &Target) -> Result<Outcome, Failure> {
    let program = load_program(&target.file)?;
    let (name, e) = pick(&program, target)?;
    require_hermitian(name, e)?;
    let m = expr_to_matrix(e)?;
    let g = ground_energy(&m)?;
    let state_text = g.state.layout().map(|l| g.state.to_text(l)).unwrap_or_default();
    Ok(Outcome {
        text: format!("energy: {}\n{state_text}", g.energy),
        json: json!({ "energy": g.energy, "state": state_json(&g.state) }),
    })
}

fn run_compile(target: &Target, t: f64, n: usize, enc: Option<&str>, out: Option<&Path>) -> Result<Outcome, Failure> {
    let program = load_program(&target.file)?;
    let (name, e) = pick(&program, target)?;
    let encoding = parse_encoding(enc)?;
    require_hermitian(name, e)?;
    let compiled = compile_digital(e, t, n, encoding)?;
    let circuit_text = compiled.circuit.to_string();
    let report = serde_json::to_value(&compiled.report).expect("report serializes");
    let json = json!({
        "definition": name,
        "qubits": compiled.circuit.width,
        "gates": compiled.circuit.gates.len(),
        "cx": compiled.circuit.count(|g| matches!(g, qblue::trotter::Gate::CX { .. })),
        "global_phase": compiled.circuit.global_phase,
        "encoding": report,
        "hamiltonian": compiled.hamiltonian.to_string(),
        "circuit": out.is_none().then(|| circuit_text.clone()),
    });
    let text = match out {
        Some(path) => {
            write(path, &circuit_text)?;
            let report_path = path.with_extension("report.json");
            write(&report_path, &serde_json::to_string_pretty(&json["encoding"]).expect("json"))?;
            format!(
                "wrote {} ({} qubits, {} gates) and {}\n",
                path.display(),
                compiled.circuit.width,
                compiled.circuit.gates.len(),
                report_path.display()
            )
        }
        None => circuit_text,
    };
    Ok(Outcome { text, json })
}

fn run_fit(target: &Target, machine: &str, enc: Option<&str>, out: Option<&Path>) -> Result<Outcome, Failure> {
    let spec = MachineSpec::by_name(machine).ok_or_else(|| Failure::new(FailureKind::Usage, format!("unknown machine {machine:?}")))?;
    let program = load_program(&target.file)?;
    let (name, e) = pick(&program, target)?;
    let (hs, _) = encode_hermitian(name, e, parse_encoding(enc)?)?;
    let schedule = fit_machine(&hs, &spec).map_err(|err| Failure::new(FailureKind::Compile, err.to_string()))?;
    let text = schedule.to_string();
    if let Some(path) = out {
        write(path, &text)?;
    }
    Ok(Outcome {
        json: serde_json::to_value(&schedule).expect("schedule serializes"),
        text,
    })
}

fn run_verify(target: &Target, t: f64, circuit: Option<&Path>, n: Option<usize>, enc: Option<&str>) -> Result<Outcome, Failure> {
    let program = load_program(&target.file)?;
    let (name, e) = pick(&program, target)?;
    let encoding = parse_encoding(enc)?;
    let (hs, _) = encode_hermitian(name, e, encoding)?;
    let circuit: Circuit = match (circuit, n) {
        (Some(path), _) => read(path)?.parse().map_err(|err: TrotterError| Failure::from(err).in_file(path))?,
        (None, Some(n)) => compile_digital(e, t, n, encoding)?.circuit,
        (None, None) => return Err(Failure::new(FailureKind::Usage, "verify needs --circuit or --n")),
    };
    if circuit.width != hs.n_qubits() {
        return Err(Failure::new(
            FailureKind::Compile,
            format!("circuit has {} qubits but the encoded program has {}", circuit.width, hs.n_qubits()),
        ));
    }
    let h = DenseOperator::new(SiteList::qubits(hs.n_qubits()), hs.to_matrix()?);
    let exact = matrix_exp_sim(&h, t)?;
    let u = circuit_to_matrix(&circuit)?;
    let distance = phase_distance(&exact.mat, &u.mat);
    Ok(Outcome {
        text: format!("distance: {distance:e}\n"),
        json: json!({ "definition": name, "t": t, "qubits": circuit.width, "distance": distance }),
    })
}
