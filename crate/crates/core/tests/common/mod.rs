//! Seeded generators shared by the property and acceptance suites.
#![allow(dead_code)]

pub mod pauli;

use std::path::PathBuf;

use num_complex::Complex64;
use qblue::ast::{desugar_indexed, scale, HamExpr, SiteList, SiteType};
use qblue::semantics::FockState;
use rand::seq::SliceRandom;
use rand::Rng;

pub const SITE_CHOICES: [SiteType; 5] = [
    SiteType::Boson(2),
    SiteType::Boson(2),
    SiteType::Boson(3),
    SiteType::Boson(4),
    SiteType::Fermion,
];

pub fn random_layout<R: Rng>(rng: &mut R, max_sites: usize, max_dim: usize) -> SiteList {
    loop {
        let n = rng.gen_range(1..=max_sites);
        let sites: Vec<SiteType> = (0..n).map(|_| *SITE_CHOICES.choose(rng).unwrap()).collect();
        let layout = SiteList(sites);
        if layout.dim().is_some_and(|d| d <= max_dim) {
            return layout;
        }
    }
}

pub fn random_amp<R: Rng>(rng: &mut R) -> Complex64 {
    match rng.gen_range(0..3) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(rng.gen_range(-2.0..2.0), 0.0),
        _ => Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
    }
}

fn random_leaf<R: Rng>(rng: &mut R, site: SiteType) -> HamExpr {
    let leaf = match rng.gen_range(0..5) {
        0 | 1 => HamExpr::create(site),
        2 | 3 => HamExpr::annihilate(site),
        _ => HamExpr::identity(site),
    };
    scale(random_amp(rng), leaf)
}

/// A well-typed expression acting on exactly `layout`.
pub fn random_expr<R: Rng>(rng: &mut R, layout: &[SiteType], depth: usize) -> HamExpr {
    if depth == 0 || rng.gen_bool(0.25) {
        let j = rng.gen_range(0..layout.len());
        return desugar_indexed(random_leaf(rng, layout[j]), j, layout).unwrap();
    }
    match rng.gen_range(0..6) {
        0 => HamExpr::sum(random_expr(rng, layout, depth - 1), random_expr(rng, layout, depth - 1)),
        1 | 2 => HamExpr::seq(random_expr(rng, layout, depth - 1), random_expr(rng, layout, depth - 1)),
        3 => HamExpr::dagger(random_expr(rng, layout, depth - 1)),
        4 => scale(random_amp(rng), random_expr(rng, layout, depth - 1)),
        _ if layout.len() >= 2 => {
            let k = rng.gen_range(1..layout.len());
            HamExpr::tensor(
                random_expr(rng, &layout[..k], depth - 1),
                random_expr(rng, &layout[k..], depth - 1),
            )
        }
        _ => random_expr(rng, layout, depth - 1),
    }
}

/// `e + e†`, Hermitian by construction.
pub fn random_hermitian<R: Rng>(rng: &mut R, layout: &[SiteType], depth: usize) -> HamExpr {
    let e = random_expr(rng, layout, depth);
    HamExpr::sum(e.clone(), HamExpr::dagger(e))
}

pub fn random_occ<R: Rng>(rng: &mut R, layout: &[SiteType]) -> Vec<usize> {
    layout.iter().map(|s| rng.gen_range(0..s.dim())).collect()
}

/// A sparse state with a few random kets; never the zero state.
pub fn random_state<R: Rng>(rng: &mut R, layout: &SiteList) -> FockState {
    loop {
        let k = rng.gen_range(1..=4);
        let kets: Vec<(Complex64, Vec<usize>)> = (0..k)
            .map(|_| {
                let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (amp, random_occ(rng, layout))
            })
            .collect();
        let s = FockState::from_terms(layout.clone(), kets).unwrap();
        if !s.is_zero() {
            return s;
        }
    }
}

/// A normalized state with every basis amplitude populated.
pub fn random_dense_state<R: Rng>(rng: &mut R, layout: &SiteList) -> FockState {
    let dim = layout.dim().unwrap();
    let v = nalgebra::DVector::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let v = v.unscale(v.norm());
    FockState::from_vector(layout.clone(), &v)
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// A corpus program with the `// run:` parameters from its header.
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    pub t: f64,
    pub n: usize,
    pub encode: String,
}

pub fn corpus() -> Vec<CorpusEntry> {
    let mut out: Vec<CorpusEntry> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|entry| entry.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "qb"))
        .map(|path| {
            let source = std::fs::read_to_string(&path).unwrap();
            let run = source
                .lines()
                .find_map(|l| l.strip_prefix("// run:"))
                .unwrap_or_else(|| panic!("{} has no run line", path.display()));
            let field = |key: &str| {
                run.split_whitespace()
                    .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                    .unwrap_or_else(|| panic!("{} run line lacks {key}", path.display()))
                    .to_string()
            };
            CorpusEntry {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                t: field("t").parse().unwrap(),
                n: field("n").parse().unwrap(),
                encode: field("encode"),
                source,
            }
        })
        .collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    out
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.qb"))).unwrap()
}
