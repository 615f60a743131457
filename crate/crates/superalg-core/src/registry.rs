//! The bundled data: algebra tables, degeneration arrows, non-degeneration
//! certificates, cocycle families, variety lists and orbit-dimension tables.
//!
//! Every file is line oriented. A section starts with `[algebra]`,
//! `[arrow]`, `[conditions]`, `[eta]`, `[autshape]`, `[variety]` or
//! `[dimtable]`; its body holds `key = value` lines and, for algebras,
//! product lines `b * b = combination`. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{basis_index, parity, AlgebraError, ParametricAlgebra, SuperAlgebra};
use crate::cocycle::{delta, Theta};
use crate::degeneration::{ConditionSet, InvariantCondition, ParametricFamily};
use crate::identity::{IdentityLibrary, VarietySet, VarietyTag};
use crate::linalg::Matrix;
use crate::morphism::GradedMap;
use crate::scalar::{
    parse_combination, ratio, Env, Field, FieldContext, QuadExt, RatFunc, Rational, ScalarError, ScalarExpr,
};

/// The data files shipped with the crate, as `(file name, contents)`.
pub const BUNDLED_FILES: &[(&str, &str)] = &[
    ("trivial.alg", include_str!("../../../data/trivial.alg")),
    ("jordan.alg", include_str!("../../../data/jordan.alg")),
    ("ralt12.alg", include_str!("../../../data/ralt12.alg")),
    ("ralt21.alg", include_str!("../../../data/ralt21.alg")),
    ("arrows.degen", include_str!("../../../data/arrows.degen")),
    ("errata.degen", include_str!("../../../data/errata.degen")),
    ("certificates.cond", include_str!("../../../data/certificates.cond")),
    ("cocycles.eta", include_str!("../../../data/cocycles.eta")),
    ("varieties.var", include_str!("../../../data/varieties.var")),
    ("dimtables.dim", include_str!("../../../data/dimtables.dim")),
];

/// Environment variable naming a directory that replaces the bundled data.
pub const DATA_ENV: &str = "SUPERALG_DATA";

/// Parameter values used when a family is sampled without further input.
pub fn default_sample_values() -> Vec<Rational> {
    [(-2, 1), (-1, 2), (1, 2), (1, 1), (2, 1), (5, 1), (0, 1)].into_iter().map(|(p, q)| ratio(p, q)).collect()
}

/// Errors raised while loading or querying the registry.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("{file}:{line}: duplicate {kind} `{name}`")]
    Duplicate { file: String, line: usize, kind: &'static str, name: String },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("{name}: parameter value {binding} is excluded")]
    Excluded { name: String, binding: String },
    #[error("{name}: missing value for parameter `{param}`")]
    MissingParameter { name: String, param: String },
    #[error("{name}: `{param}` is not a parameter")]
    UnknownParameter { name: String, param: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{context}: {source}")]
    Scalar { context: String, source: ScalarError },
    #[error("{context}: {source}")]
    Algebra { context: String, source: AlgebraError },
    #[error("{context}: {msg}")]
    Invalid { context: String, msg: String },
}

type Result<T> = std::result::Result<T, RegistryError>;

fn scalar_err(context: impl Into<String>) -> impl FnOnce(ScalarError) -> RegistryError {
    let context = context.into();
    move |source| RegistryError::Scalar { context, source }
}

fn algebra_err(context: impl Into<String>) -> impl FnOnce(AlgebraError) -> RegistryError {
    let context = context.into();
    move |source| RegistryError::Algebra { context, source }
}

// ---------------------------------------------------------------------------
// Sample points and member references
// ---------------------------------------------------------------------------

/// Concrete parameter values in a field context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePoint {
    pub ctx: FieldContext,
    pub values: BTreeMap<String, QuadExt>,
    /// How the point was written, e.g. `alpha=r @ -3`.
    pub label: String,
}

impl SamplePoint {
    /// The point without parameters.
    pub fn empty() -> Self {
        Self { ctx: FieldContext::RATIONAL, values: BTreeMap::new(), label: String::new() }
    }

    /// The values as an evaluation environment.
    pub fn env(&self) -> Env {
        self.values.iter().map(|(k, v)| (k.clone(), RatFunc::constant(v.clone()))).collect()
    }

    fn from_rationals(values: BTreeMap<String, Rational>) -> Self {
        let label = values.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
        Self {
            ctx: FieldContext::RATIONAL,
            values: values.into_iter().map(|(k, v)| (k, QuadExt::rational(v))).collect(),
            label,
        }
    }
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.label.is_empty() {
            let parts: Vec<String> = self.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "{}", parts.join(","))
        } else {
            write!(f, "{}", self.label)
        }
    }
}

/// Which members of a (possibly parametric) algebra a reference denotes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberSpec {
    /// `Name`: every admissible member.
    All,
    /// `Name[alpha]`: the family as a whole (its orbit union).
    Family(String),
    /// `Name[a=v;d=D]`: a single member, optionally over `ℚ(√D)`.
    Point { bindings: Vec<(String, ScalarExpr)>, d: i64 },
    /// `Name[a!=v,w]`: all members except the listed values.
    Except { param: String, values: Vec<ScalarExpr> },
}

/// A reference like `R01[alpha!=-1,3]` to registry algebras.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberRef {
    pub name: String,
    pub spec: MemberSpec,
}

impl MemberRef {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        let Some(open) = text.find('[') else {
            if text.is_empty() || !text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(format!("bad algebra name `{text}`"));
            }
            return Ok(Self { name: text.to_string(), spec: MemberSpec::All });
        };
        let name = text[..open].trim().to_string();
        let inner = text[open + 1..].strip_suffix(']').ok_or_else(|| format!("missing `]` in `{text}`"))?;
        if let Some((param, values)) = inner.split_once("!=") {
            let values = values
                .split(',')
                .map(|v| ScalarExpr::parse(v.trim()).map_err(|e| e.to_string()))
                .collect::<std::result::Result<_, _>>()?;
            return Ok(Self { name, spec: MemberSpec::Except { param: param.trim().to_string(), values } });
        }
        if !inner.contains('=') {
            return Ok(Self { name, spec: MemberSpec::Family(inner.trim().to_string()) });
        }
        let mut bindings = Vec::new();
        let mut d = 0;
        for part in inner.split(';') {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected `key=value` in `{text}`"))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "d" {
                d = v.parse().map_err(|_| format!("bad field context `{v}`"))?;
            } else {
                bindings.push((k.to_string(), ScalarExpr::parse(v).map_err(|e| e.to_string())?));
            }
        }
        Ok(Self { name, spec: MemberSpec::Point { bindings, d } })
    }

    /// Whether the member of `self.name` at `point` is denoted.
    pub fn matches(&self, point: &SamplePoint) -> bool {
        let value_of = |expr: &ScalarExpr| expr.eval_const(&point.ctx, &Env::new()).ok();
        match &self.spec {
            MemberSpec::All | MemberSpec::Family(_) => true,
            MemberSpec::Point { bindings, d } => {
                point.ctx.d() == *d
                    && bindings.iter().all(|(k, e)| value_of(e).is_some_and(|v| point.values.get(k) == Some(&v)))
            }
            MemberSpec::Except { param, values } => {
                let current = point.values.get(param);
                !values.iter().any(|e| value_of(e).is_some_and(|v| current == Some(&v)))
            }
        }
    }
}

impl fmt::Display for MemberRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        match &self.spec {
            MemberSpec::All => Ok(()),
            MemberSpec::Family(p) => write!(f, "[{p}]"),
            MemberSpec::Point { bindings, d } => {
                let mut parts: Vec<String> = bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
                if *d != 0 {
                    parts.push(format!("d={d}"));
                }
                write!(f, "[{}]", parts.join(";"))
            }
            MemberSpec::Except { param, values } => {
                let vals: Vec<String> = values.iter().map(ToString::to_string).collect();
                write!(f, "[{param}!={}]", vals.join(","))
            }
        }
    }
}

/// Splits at `sep` outside square brackets and parentheses.
fn split_top(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            _ if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Parses `a = expr, b = expr` (or `;`-separated) bindings.
fn parse_bindings(text: &str) -> std::result::Result<Vec<(String, ScalarExpr)>, String> {
    text.split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|part| {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected `name = value`, got `{part}`"))?;
            let e = ScalarExpr::parse(v.trim()).map_err(|e| format!("`{}`: {e}", v.trim()))?;
            Ok((k.trim().to_string(), e))
        })
        .collect()
}

fn parse_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn parse_type(text: &str) -> std::result::Result<(usize, usize), String> {
    let (m, n) = text.split_once(',').ok_or_else(|| format!("bad type `{text}`"))?;
    let m = m.trim().parse().map_err(|_| format!("bad type `{text}`"))?;
    let n = n.trim().parse().map_err(|_| format!("bad type `{text}`"))?;
    Ok((m, n))
}

// ---------------------------------------------------------------------------
// Raw sections
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Section {
    kind: String,
    file: String,
    line: usize,
    keys: BTreeMap<String, (String, usize)>,
    /// `(left factor, right factor, combination, line)`.
    products: Vec<(String, String, String, usize)>,
}

impl Section {
    fn err(&self, line: usize, msg: impl Into<String>) -> RegistryError {
        RegistryError::Parse { file: self.file.clone(), line, msg: msg.into() }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.keys.get(key).map(|(v, _)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.keys.get(key).map_or(self.line, |(_, l)| *l)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| self.err(self.line, format!("[{}] without `{key}`", self.kind)))
    }

    /// Applies a string-error parser to a key, attaching the key's line.
    fn parse_key<T>(&self, key: &str, f: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => f(v).map(Some).map_err(|msg| self.err(self.line_of(key), format!("{key}: {msg}"))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (k, (_, line)) in &self.keys {
            if !allowed.contains(&k.as_str()) {
                return Err(self.err(*line, format!("unknown key `{k}` in [{}]", self.kind)));
            }
        }
        Ok(())
    }
}

fn parse_sections(file: &str, text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') && content.ends_with(']') {
            out.push(Section {
                kind: content[1..content.len() - 1].to_string(),
                file: file.to_string(),
                line,
                keys: BTreeMap::new(),
                products: Vec::new(),
            });
            continue;
        }
        let Some(section) = out.last_mut() else {
            return Err(RegistryError::Parse { file: file.into(), line, msg: "content outside a section".into() });
        };
        let (lhs, rhs) = content.split_once('=').ok_or_else(|| RegistryError::Parse {
            file: file.into(),
            line,
            msg: "expected `key = value`".into(),
        })?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        if let Some((a, b)) = lhs.split_once('*') {
            section.products.push((a.trim().to_string(), b.trim().to_string(), rhs.to_string(), line));
        } else if section.keys.insert(lhs.to_string(), (rhs.to_string(), line)).is_some() {
            return Err(RegistryError::Parse { file: file.into(), line, msg: format!("duplicate key `{lhs}`") });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One tabulated superalgebra or family.
#[derive(Debug, Clone)]
pub struct AlgebraRecord {
    pub name: String,
    pub even: usize,
    pub odd: usize,
    pub params: Vec<String>,
    /// Forbidden `(parameter, value)` pairs.
    pub exclude: Vec<(String, ScalarExpr)>,
    /// Extra sample points beyond the default grid.
    pub special: Vec<(Vec<(String, ScalarExpr)>, i64)>,
    pub origin: String,
    pub algebra: ParametricAlgebra,
    pub file: String,
    pub line: usize,
}

impl AlgebraRecord {
    pub fn kind(&self) -> (usize, usize) {
        (self.even, self.odd)
    }

    /// The excluded binding hit by `point`, if any.
    pub fn excluded_by(&self, point: &SamplePoint) -> Option<String> {
        self.exclude.iter().find_map(|(p, e)| {
            let v = e.eval_const(&point.ctx, &Env::new()).ok()?;
            (point.values.get(p) == Some(&v)).then(|| format!("{p}={e}"))
        })
    }

    /// Admissible sample points: the grid `values` for every parameter
    /// (cartesian product) minus exclusions, plus the special points.
    pub fn samples(&self, values: &[Rational]) -> Vec<SamplePoint> {
        let mut out = self.grid_samples(values);
        for (bindings, d) in &self.special {
            let Ok(ctx) = FieldContext::new(*d) else { continue };
            let values: Option<BTreeMap<String, QuadExt>> =
                bindings.iter().map(|(k, e)| e.eval_const(&ctx, &Env::new()).ok().map(|v| (k.clone(), v))).collect();
            let Some(values) = values else { continue };
            let mut label: Vec<String> = bindings.iter().map(|(k, e)| format!("{k}={e}")).collect();
            if *d != 0 {
                label.push(format!("@ {d}"));
            }
            let pt = SamplePoint { ctx, values, label: label.join(" ") };
            if !out.iter().any(|o| o.ctx == pt.ctx && o.values == pt.values) {
                out.push(pt);
            }
        }
        out
    }

    /// The grid part of [`AlgebraRecord::samples`], without special points.
    pub fn grid_samples(&self, values: &[Rational]) -> Vec<SamplePoint> {
        if self.params.is_empty() {
            return vec![SamplePoint::empty()];
        }
        let mut grid: Vec<BTreeMap<String, Rational>> = vec![BTreeMap::new()];
        for p in &self.params {
            grid = grid
                .into_iter()
                .flat_map(|g| {
                    values.iter().map(move |v| {
                        let mut g = g.clone();
                        g.insert(p.clone(), v.clone());
                        g
                    })
                })
                .collect();
        }
        grid.into_iter().map(SamplePoint::from_rationals).filter(|pt| self.excluded_by(pt).is_none()).collect()
    }

    /// The member at `point` (all parameters must be bound).
    pub fn at(&self, point: &SamplePoint) -> Result<SuperAlgebra<QuadExt>> {
        for p in &self.params {
            if !point.values.contains_key(p) {
                return Err(RegistryError::MissingParameter { name: self.name.clone(), param: p.clone() });
            }
        }
        if let Some(k) = point.values.keys().find(|k| !self.params.contains(k)) {
            return Err(RegistryError::UnknownParameter { name: self.name.clone(), param: k.clone() });
        }
        if let Some(binding) = self.excluded_by(point) {
            return Err(RegistryError::Excluded { name: self.name.clone(), binding });
        }
        let a = self.algebra.concrete(&point.ctx, &point.env()).map_err(algebra_err(self.name.clone()))?;
        Ok(a.with_name(self.display_name(point)))
    }

    /// `R01[alpha=3]`-style name of a member.
    pub fn display_name(&self, point: &SamplePoint) -> String {
        if self.params.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{point}]", self.name)
        }
    }
}

/// A displayed degeneration `source → target` along a basis family.
#[derive(Debug, Clone)]
pub struct ArrowRecord {
    pub id: String,
    pub group: String,
    pub source: String,
    pub bind: Vec<(String, ScalarExpr)>,
    pub basis: Vec<Vec<(ScalarExpr, String)>>,
    pub alternative: Option<Vec<Vec<(ScalarExpr, String)>>>,
    pub target: String,
    pub target_bind: Vec<(String, ScalarExpr)>,
    pub params: Vec<String>,
    pub exclude: Vec<(String, ScalarExpr)>,
    pub reparam: Option<ScalarExpr>,
    pub limit: Option<ScalarExpr>,
    pub context: i64,
    pub restates: Option<String>,
    pub corrects: Option<String>,
    pub file: String,
    pub line: usize,
}

/// What a certificate asserts about its source.
#[derive(Debug, Clone)]
pub enum ConditionKind {
    Linear(ConditionSet),
    Invariant(Vec<InvariantCondition>),
}

/// A non-degeneration certificate.
#[derive(Debug, Clone)]
pub struct ConditionRecord {
    pub id: String,
    pub group: String,
    pub source: String,
    pub bind: Vec<(String, ScalarExpr)>,
    pub context: i64,
    pub kind: ConditionKind,
    pub targets: Vec<MemberRef>,
    pub flag: Option<String>,
    /// Seed of the Borel stability sample.
    pub seed: u64,
    pub line: usize,
}

/// Borel sampling seed of certificates that do not record their own.
pub const CERTIFICATE_SEED: u64 = 1;

/// A parametrized automorphism pattern of a Jordan superalgebra.
#[derive(Debug, Clone)]
pub struct AutShapeRecord {
    pub id: String,
    pub jordan: String,
    pub params: Vec<String>,
    /// Parameters ranging over `{1, −1}`.
    pub signs: Vec<String>,
    /// Entry `(i, j)` is the `i`-th coordinate of `φ(b_j)`.
    pub rows: Vec<Vec<ScalarExpr>>,
}

/// A family of cocycles on a Jordan superalgebra.
#[derive(Debug, Clone)]
pub struct EtaRecord {
    pub id: String,
    pub jordan: String,
    pub params: Vec<String>,
    pub exclude: Vec<(String, ScalarExpr)>,
    /// Component `B_k` as a combination of `(coefficient, (i, j))` forms.
    pub components: Vec<Vec<(ScalarExpr, (usize, usize))>>,
    pub yields: Option<String>,
    pub bind: Vec<(String, ScalarExpr)>,
    pub from: Option<String>,
    pub from_bind: Vec<(String, ScalarExpr)>,
    pub act: Option<(String, Vec<(String, ScalarExpr)>)>,
}

/// A corollary membership list: every member of `base` plus `extra`.
#[derive(Debug, Clone)]
pub struct VarietyRecord {
    pub tag: VarietyTag,
    pub kind: (usize, usize),
    pub base: Option<VarietyTag>,
    pub extra: Vec<MemberRef>,
}

/// Geometric data of one variety.
#[derive(Debug, Clone)]
pub struct DimTableRecord {
    pub id: String,
    pub group: String,
    pub dimension: usize,
    pub rigid: usize,
    pub components: Vec<MemberRef>,
    /// `(tabulated dimension, algebras)`.
    pub dims: Vec<(usize, Vec<MemberRef>)>,
}

// ---------------------------------------------------------------------------
// The registry
// ---------------------------------------------------------------------------

/// Every record, cross-linked by name.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    algebras: Vec<AlgebraRecord>,
    index: BTreeMap<String, usize>,
    pub arrows: Vec<ArrowRecord>,
    pub errata: Vec<ArrowRecord>,
    pub conditions: Vec<ConditionRecord>,
    pub autshapes: Vec<AutShapeRecord>,
    pub etas: Vec<EtaRecord>,
    pub varieties: Vec<VarietyRecord>,
    pub dimtables: Vec<DimTableRecord>,
}

impl Registry {
    /// The bundled data, or the directory named by `SUPERALG_DATA`.
    pub fn load_default() -> Result<Self> {
        match std::env::var_os(DATA_ENV) {
            Some(dir) => Self::load(Path::new(&dir)),
            None => Self::bundled(),
        }
    }

    /// The data compiled into the crate.
    pub fn bundled() -> Result<Self> {
        let mut reg = Self::default();
        for (file, text) in BUNDLED_FILES {
            reg.add_text(file, text)?;
        }
        Ok(reg)
    }

    /// Loads every data file of `dir` (or a single file), in file-name order.
    pub fn load(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| RegistryError::Io { path: path.display().to_string(), msg: e.to_string() };
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(io)? {
                let p = entry.map_err(io)?.path();
                let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
                if ["alg", "degen", "cond", "eta", "var", "dim"].contains(&ext) {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        // Algebra files first, so later sections can refer to them.
        files.sort_by_key(|p| p.extension().and_then(|e| e.to_str()) != Some("alg"));
        let mut reg = Self::default();
        for p in files {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| RegistryError::Io { path: p.display().to_string(), msg: e.to_string() })?;
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("?").to_string();
            reg.add_text(&name, &text)?;
        }
        Ok(reg)
    }

    /// Parses one file's worth of sections into the registry.
    pub fn add_text(&mut self, file: &str, text: &str) -> Result<()> {
        for s in parse_sections(file, text)? {
            match s.kind.as_str() {
                "algebra" => {
                    let rec = parse_algebra(&s)?;
                    if self.index.contains_key(&rec.name) {
                        return Err(RegistryError::Duplicate {
                            file: file.into(),
                            line: s.line,
                            kind: "algebra",
                            name: rec.name,
                        });
                    }
                    self.index.insert(rec.name.clone(), self.algebras.len());
                    self.algebras.push(rec);
                }
                "arrow" => {
                    let rec = parse_arrow(&s)?;
                    if self.arrows.iter().chain(self.errata.iter()).any(|a| a.id == rec.id) {
                        return Err(RegistryError::Duplicate {
                            file: file.into(),
                            line: s.line,
                            kind: "arrow",
                            name: rec.id,
                        });
                    }
                    if rec.corrects.is_some() {
                        self.errata.push(rec);
                    } else {
                        self.arrows.push(rec);
                    }
                }
                "conditions" => {
                    let rec = parse_conditions(&s)?;
                    if self.conditions.iter().any(|c| c.id == rec.id) {
                        return Err(RegistryError::Duplicate {
                            file: file.into(),
                            line: s.line,
                            kind: "conditions",
                            name: rec.id,
                        });
                    }
                    self.conditions.push(rec);
                }
                "autshape" => self.autshapes.push(parse_autshape(&s)?),
                "eta" => {
                    let rec = parse_eta(&s)?;
                    if self.etas.iter().any(|e| e.id == rec.id) {
                        return Err(RegistryError::Duplicate {
                            file: file.into(),
                            line: s.line,
                            kind: "eta",
                            name: rec.id,
                        });
                    }
                    self.etas.push(rec);
                }
                "variety" => self.varieties.push(parse_variety(&s)?),
                "dimtable" => self.dimtables.push(parse_dimtable(&s)?),
                other => return Err(s.err(s.line, format!("unknown section [{other}]"))),
            }
        }
        Ok(())
    }

    pub fn algebras(&self) -> &[AlgebraRecord] {
        &self.algebras
    }

    pub fn algebra(&self, name: &str) -> Result<&AlgebraRecord> {
        self.index
            .get(name)
            .map(|&i| &self.algebras[i])
            .ok_or_else(|| RegistryError::Unknown { kind: "algebra", name: name.to_string() })
    }

    pub fn arrow(&self, id: &str) -> Result<&ArrowRecord> {
        self.arrows
            .iter()
            .chain(&self.errata)
            .find(|a| a.id == id)
            .ok_or_else(|| RegistryError::Unknown { kind: "arrow", name: id.to_string() })
    }

    pub fn eta(&self, id: &str) -> Result<&EtaRecord> {
        self.etas
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| RegistryError::Unknown { kind: "eta", name: id.to_string() })
    }

    pub fn autshape(&self, id: &str) -> Result<&AutShapeRecord> {
        self.autshapes
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| RegistryError::Unknown { kind: "autshape", name: id.to_string() })
    }

    /// The tabulated right alternative algebras (names `Rnn` or `Rnn_bold`).
    pub fn right_alternative(&self, kind: (usize, usize)) -> impl Iterator<Item = &AlgebraRecord> {
        self.algebras.iter().filter(move |a| a.origin.starts_with("ralt") && a.kind() == kind)
    }

    /// The tabulated Jordan superalgebras.
    pub fn jordan(&self) -> impl Iterator<Item = &AlgebraRecord> {
        self.algebras.iter().filter(|a| a.origin.starts_with("jordan"))
    }

    /// Concrete algebra `name` with the given parameter values. The field
    /// context is taken from the values (ℚ when all are rational).
    pub fn resolve(&self, name: &str, values: &BTreeMap<String, QuadExt>) -> Result<SuperAlgebra<QuadExt>> {
        let d = values.values().map(QuadExt::d).find(|&d| d != 0).unwrap_or(0);
        let ctx = FieldContext::new(d).map_err(scalar_err(name))?;
        self.algebra(name)?.at(&SamplePoint { ctx, values: values.clone(), label: String::new() })
    }

    /// Concrete algebra from textual bindings (`alpha=2`, `alpha=r` with `d`).
    pub fn resolve_text(&self, name: &str, bindings: &[(String, String)], d: i64) -> Result<SuperAlgebra<QuadExt>> {
        let ctx = FieldContext::new(d).map_err(scalar_err(name))?;
        let mut values = BTreeMap::new();
        for (k, v) in bindings {
            let e = ScalarExpr::parse(v).map_err(scalar_err(format!("{name}: {k}")))?;
            values.insert(k.clone(), e.eval_const(&ctx, &Env::new()).map_err(scalar_err(format!("{name}: {k}")))?);
        }
        let label = bindings.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
        self.algebra(name)?.at(&SamplePoint { ctx, values, label })
    }

    /// Sample points denoted by a member reference, drawn from `values`. A
    /// family reference `Name[alpha]` yields generic (grid) members only.
    pub fn member_samples(&self, member: &MemberRef, values: &[Rational]) -> Result<Vec<SamplePoint>> {
        let rec = self.algebra(&member.name)?;
        Ok(match &member.spec {
            MemberSpec::Point { bindings, d } => {
                let ctx = FieldContext::new(*d).map_err(scalar_err(member.to_string()))?;
                let mut vals = BTreeMap::new();
                for (k, e) in bindings {
                    vals.insert(k.clone(), e.eval_const(&ctx, &Env::new()).map_err(scalar_err(member.to_string()))?);
                }
                let label = bindings.iter().map(|(k, e)| format!("{k}={e}")).collect::<Vec<_>>().join(",");
                vec![SamplePoint { ctx, values: vals, label }]
            }
            MemberSpec::Family(_) => rec.grid_samples(values),
            _ => rec.samples(values).into_iter().filter(|p| member.matches(p)).collect(),
        })
    }

    /// Counts of `(J, J_bold, R, R_bold)` records.
    pub fn counts(&self) -> (usize, usize, usize, usize) {
        let is = |prefix: char, bold: bool| {
            self.algebras
                .iter()
                .filter(|a| {
                    let n = &a.name;
                    n.starts_with(prefix)
                        && n.ends_with("_bold") == bold
                        && n[1..].trim_end_matches("_bold").chars().all(|c| c.is_ascii_digit())
                })
                .count()
        };
        (is('J', false), is('J', true), is('R', false), is('R', true))
    }

    /// Cross-link audit: every name referenced anywhere resolves, and every
    /// basis, component and binding fits its algebra. Returns the problems.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut need = |context: String, name: &str| {
            if !self.index.contains_key(name) {
                problems.push(format!("{context}: unknown algebra `{name}`"));
            }
        };
        for a in self.arrows.iter().chain(&self.errata) {
            need(format!("arrow {}", a.id), &a.source);
            need(format!("arrow {}", a.id), &a.target);
        }
        for c in &self.conditions {
            need(format!("conditions {}", c.id), &c.source);
            for t in &c.targets {
                need(format!("conditions {}", c.id), &t.name);
            }
        }
        for s in &self.autshapes {
            need(format!("autshape {}", s.id), &s.jordan);
        }
        for e in &self.etas {
            need(format!("eta {}", e.id), &e.jordan);
            if let Some(y) = &e.yields {
                need(format!("eta {}", e.id), y);
            }
        }
        for v in &self.varieties {
            for m in &v.extra {
                need(format!("variety {}", v.tag), &m.name);
            }
        }
        for d in &self.dimtables {
            for m in d.components.iter().chain(d.dims.iter().flat_map(|(_, l)| l)) {
                need(format!("dimtable {}", d.id), &m.name);
            }
        }
        for a in self.arrows.iter().chain(&self.errata) {
            for (label, other) in [("restates", &a.restates), ("corrects", &a.corrects)] {
                if let Some(o) = other {
                    if !self.arrows.iter().any(|x| &x.id == o) {
                        problems.push(format!("arrow {}: {label} unknown arrow `{o}`", a.id));
                    }
                }
            }
            if let Ok(src) = self.algebra(&a.source) {
                for basis in std::iter::once(&a.basis).chain(a.alternative.as_ref()) {
                    if basis.len() != src.even + src.odd {
                        problems.push(format!("arrow {}: basis has {} vectors", a.id, basis.len()));
                    }
                    for (_, tok) in basis.iter().flatten() {
                        if basis_index(src.even, src.odd, tok).is_none() {
                            problems.push(format!("arrow {}: `{tok}` is not a basis vector", a.id));
                        }
                    }
                }
            }
        }
        for e in &self.etas {
            if let Some(f) = &e.from {
                if self.eta(f).is_err() {
                    problems.push(format!("eta {}: unknown source family `{f}`", e.id));
                }
            }
            if let Some((shape, _)) = &e.act {
                if self.autshape(shape).is_err() {
                    problems.push(format!("eta {}: unknown autshape `{shape}`", e.id));
                }
            }
            if let Ok(j) = self.algebra(&e.jordan) {
                if e.components.len() != j.even + j.odd {
                    problems.push(format!(
                        "eta {}: {} components for dimension {}",
                        e.id,
                        e.components.len(),
                        j.even + j.odd
                    ));
                }
            }
        }
        for c in &self.conditions {
            if let (ConditionKind::Linear(cs), Ok(src)) = (&c.kind, self.algebra(&c.source)) {
                if let Err(e) = cs.validate(src.even + src.odd) {
                    problems.push(format!("conditions {}: {e}", c.id));
                }
            }
        }
        problems
    }

    // -- variety lists ------------------------------------------------------

    /// The stated members of `tag` in type `kind`, following the base chain.
    pub fn stated_members(&self, tag: VarietyTag, kind: (usize, usize)) -> Option<Vec<MemberRef>> {
        let rec = self.varieties.iter().find(|v| v.tag == tag && v.kind == kind)?;
        let mut out = rec.extra.clone();
        if let Some(base) = rec.base {
            out.extend(self.stated_members(base, kind)?);
        }
        Some(out)
    }

    /// Compares computed variety membership with the stated lists for every
    /// right alternative algebra of `kind` at every sample point.
    pub fn classify(
        &self,
        library: &IdentityLibrary,
        kind: (usize, usize),
        values: &[Rational],
    ) -> Result<ClassifyReport> {
        if values.is_empty() {
            return Err(RegistryError::Invalid { context: "classify".into(), msg: "empty sample list".into() });
        }
        let tags: Vec<(VarietyTag, Vec<MemberRef>)> =
            VarietyTag::ALL.into_iter().filter_map(|t| self.stated_members(t, kind).map(|m| (t, m))).collect();
        let mut rows = Vec::new();
        for rec in self.right_alternative(kind) {
            for point in rec.samples(values) {
                let a = rec.at(&point)?;
                let computed = library.varieties(&a);
                let stated: VarietySet = tags
                    .iter()
                    .filter(|(_, members)| members.iter().any(|m| m.name == rec.name && m.matches(&point)))
                    .map(|(t, _)| *t)
                    .collect();
                rows.push(ClassifyRow { name: rec.display_name(&point), computed, stated });
            }
        }
        Ok(ClassifyReport { kind, tags: tags.into_iter().map(|(t, _)| t).collect(), rows })
    }

    // -- cocycles -----------------------------------------------------------

    /// The cocycle of `eta` at the parameter values of `point`.
    pub fn eta_theta(&self, eta: &EtaRecord, point: &SamplePoint) -> Result<Theta<QuadExt>> {
        let j = self.algebra(&eta.jordan)?;
        let dims = (j.even, j.odd);
        let env = point.env();
        let mut theta = Theta::zero(j.even, j.odd);
        for (k, comp) in eta.components.iter().enumerate() {
            for (coef, (i, jj)) in comp {
                let c = coef.eval_const(&point.ctx, &env).map_err(scalar_err(format!("eta {}", eta.id)))?;
                let d = delta::<QuadExt>(*i, *jj, k + 1, dims)
                    .map_err(|e| RegistryError::Invalid { context: format!("eta {}", eta.id), msg: e.to_string() })?;
                theta = theta.plus(&d.scale(&c));
            }
        }
        Ok(theta)
    }

    /// The automorphism of `shape` at the given values.
    pub fn autshape_map(&self, shape: &AutShapeRecord, point: &SamplePoint) -> Result<GradedMap<QuadExt>> {
        let j = self.algebra(&shape.jordan)?;
        let env = point.env();
        let rows = shape
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| e.eval_const(&point.ctx, &env).map_err(scalar_err(format!("autshape {}", shape.id))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GradedMap::from_full(&Matrix::from_rows(rows), j.even, j.odd)
            .map_err(|e| RegistryError::Invalid { context: format!("autshape {}", shape.id), msg: e.to_string() })
    }
}

/// Parameter values at which orbit-dimension table entries for families are
/// checked.
pub fn family_sample_values() -> Vec<Rational> {
    [(2, 1), (1, 2), (5, 1)].into_iter().map(|(p, q)| ratio(p, q)).collect()
}

/// One checked orbit-dimension table entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitRow {
    pub table: String,
    /// The algebra, with the sample point for family members.
    pub member: String,
    pub tabulated: usize,
    /// `orbit_dim`, plus one for a family entry `Name[alpha]`.
    pub computed: usize,
}

impl OrbitRow {
    pub fn is_match(&self) -> bool {
        self.tabulated == self.computed
    }
}

impl Registry {
    /// Computes every orbit-dimension table entry. A family entry is the
    /// closure of a one-parameter union of orbits, so its tabulated value is
    /// compared with `orbit_dim + 1` at each of three sampled members.
    pub fn orbit_rows(&self, table: &DimTableRecord) -> Result<Vec<OrbitRow>> {
        let mut rows = Vec::new();
        for (tabulated, members) in &table.dims {
            for m in members {
                let rec = self.algebra(&m.name)?;
                let extra = usize::from(matches!(m.spec, MemberSpec::Family(_)));
                for point in self.member_samples(m, &family_sample_values())? {
                    let a = rec.at(&point)?;
                    rows.push(OrbitRow {
                        table: table.id.clone(),
                        member: rec.display_name(&point),
                        tabulated: *tabulated,
                        computed: crate::morphism::orbit_dim(&a) + extra,
                    });
                }
            }
        }
        Ok(rows)
    }
}

/// A deterministic sampler for cocycle and automorphism parameters.
///
/// Values come from `{±2, ±1/2, ±3, 5, 1/3}`; sign parameters from `{±1}`.
/// Points hitting an exclusion are skipped.
pub struct ParamSampler {
    rng: ChaCha8Rng,
}

impl ParamSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn values() -> Vec<Rational> {
        [(2, 1), (-2, 1), (1, 2), (-1, 2), (3, 1), (-3, 1), (5, 1), (1, 3)]
            .into_iter()
            .map(|(p, q)| ratio(p, q))
            .collect()
    }

    /// One random point for `params` (and `signs`) avoiding `exclude`.
    pub fn draw(&mut self, params: &[String], signs: &[String], exclude: &[(String, ScalarExpr)]) -> SamplePoint {
        let vals = Self::values();
        loop {
            let mut values = BTreeMap::new();
            for p in params {
                values.insert(p.clone(), vals[self.rng.gen_range(0..vals.len())].clone());
            }
            for s in signs {
                values.insert(s.clone(), Rational::from_integer(if self.rng.gen_bool(0.5) { 1 } else { -1 }.into()));
            }
            let point = SamplePoint::from_rationals(values);
            let hit = exclude
                .iter()
                .any(|(p, e)| e.eval_const(&point.ctx, &Env::new()).is_ok_and(|v| point.values.get(p) == Some(&v)));
            if !hit {
                return point;
            }
        }
    }
}

/// One row of [`Registry::classify`].
#[derive(Debug, Clone)]
pub struct ClassifyRow {
    pub name: String,
    pub computed: VarietySet,
    pub stated: VarietySet,
}

/// Membership matrix with the stated lists alongside.
#[derive(Debug, Clone)]
pub struct ClassifyReport {
    pub kind: (usize, usize),
    /// The varieties that have a stated list for this type.
    pub tags: Vec<VarietyTag>,
    pub rows: Vec<ClassifyRow>,
}

impl ClassifyReport {
    /// `(algebra, variety, stated, computed)` for each disagreement.
    pub fn mismatches(&self) -> Vec<(String, VarietyTag, bool, bool)> {
        let mut out = Vec::new();
        for row in &self.rows {
            for &t in &self.tags {
                if row.stated.contains(t) != row.computed.contains(t) {
                    out.push((row.name.clone(), t, row.stated.contains(t), row.computed.contains(t)));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Section parsers
// ---------------------------------------------------------------------------

fn parse_algebra(s: &Section) -> Result<AlgebraRecord> {
    s.check_keys(&["name", "type", "params", "exclude", "special", "origin"])?;
    let name = s.require("name")?.to_string();
    let (even, odd) = s.parse_key("type", parse_type)?.ok_or_else(|| s.err(s.line, "[algebra] without `type`"))?;
    let params = s.get("params").map(parse_list).unwrap_or_default();
    let exclude = s.parse_key("exclude", parse_bindings)?.unwrap_or_default();
    let special = s
        .parse_key("special", |text| {
            text.split(';')
                .map(|pt| {
                    let (b, d) = match pt.split_once('@') {
                        Some((b, d)) => (b, d.trim().parse::<i64>().map_err(|_| format!("bad context in `{pt}`"))?),
                        None => (pt, 0),
                    };
                    Ok((parse_bindings(b)?, d))
                })
                .collect::<std::result::Result<Vec<_>, String>>()
        })?
        .unwrap_or_default();
    let param_refs: Vec<&str> = params.iter().map(String::as_str).collect();
    let mut entries = Vec::new();
    for (lhs, b, rhs, line) in &s.products {
        let i = basis_index(even, odd, lhs).ok_or_else(|| s.err(*line, format!("unknown basis vector `{lhs}`")))?;
        let j = basis_index(even, odd, b).ok_or_else(|| s.err(*line, format!("unknown basis vector `{b}`")))?;
        let combo = parse_combination(rhs, |tok| basis_index(even, odd, tok).is_some())
            .map_err(|e| s.err(*line, format!("{name}: {e}")))?;
        for (coef, tok) in combo {
            if let Some(bad) = coef.names().into_iter().find(|n| !param_refs.contains(&n.as_str())) {
                return Err(s.err(*line, format!("{name}: undeclared parameter `{bad}`")));
            }
            let k = basis_index(even, odd, &tok).expect("token checked");
            let allowed = parity(even, i) ^ parity(even, j) == parity(even, k);
            if !allowed {
                return Err(s.err(*line, format!("{name}: {lhs}*{b} cannot have a {tok} component")));
            }
            entries.push(((i, j, k), coef));
        }
    }
    Ok(AlgebraRecord {
        algebra: ParametricAlgebra { name: name.clone(), even, odd, params: params.clone(), entries },
        name,
        even,
        odd,
        params,
        exclude,
        special,
        origin: s.get("origin").unwrap_or("").to_string(),
        file: s.file.clone(),
        line: s.line,
    })
}

fn parse_basis(text: &str) -> std::result::Result<Vec<Vec<(ScalarExpr, String)>>, String> {
    let is_basis = |tok: &str| {
        let mut c = tok.chars();
        matches!(c.next(), Some('e' | 'f')) && c.as_str().parse::<usize>().is_ok_and(|n| n >= 1)
    };
    split_top(text, ';')
        .into_iter()
        .map(|v| parse_combination(v, is_basis).map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

fn parse_arrow(s: &Section) -> Result<ArrowRecord> {
    s.check_keys(&[
        "id",
        "group",
        "source",
        "bind",
        "basis",
        "alternative",
        "target",
        "target_bind",
        "params",
        "exclude",
        "reparam",
        "limit",
        "context",
        "restates",
        "corrects",
    ])?;
    let expr = |text: &str| ScalarExpr::parse(text).map_err(|e| e.to_string());
    Ok(ArrowRecord {
        id: s.require("id")?.to_string(),
        group: s.get("group").unwrap_or("").to_string(),
        source: s.require("source")?.to_string(),
        bind: s.parse_key("bind", parse_bindings)?.unwrap_or_default(),
        basis: s.parse_key("basis", parse_basis)?.ok_or_else(|| s.err(s.line, "[arrow] without `basis`"))?,
        alternative: s.parse_key("alternative", parse_basis)?,
        target: s.require("target")?.to_string(),
        target_bind: s.parse_key("target_bind", parse_bindings)?.unwrap_or_default(),
        params: s.get("params").map(parse_list).unwrap_or_default(),
        exclude: s.parse_key("exclude", parse_bindings)?.unwrap_or_default(),
        reparam: s.parse_key("reparam", expr)?,
        limit: s.parse_key("limit", expr)?,
        context: s.parse_key("context", |v| v.trim().parse::<i64>().map_err(|e| e.to_string()))?.unwrap_or(0),
        restates: s.get("restates").map(String::from),
        corrects: s.get("corrects").map(String::from),
        file: s.file.clone(),
        line: s.line,
    })
}

fn parse_conditions(s: &Section) -> Result<ConditionRecord> {
    s.check_keys(&["id", "group", "source", "bind", "context", "kind", "holds", "targets", "flag", "seed"])?;
    let holds = s.require("holds")?;
    let kind = match s.require("kind")? {
        "linear" => {
            ConditionKind::Linear(ConditionSet::parse(holds).map_err(|e| s.err(s.line_of("holds"), e.to_string()))?)
        }
        "invariant" => ConditionKind::Invariant(
            InvariantCondition::parse_list(holds).map_err(|e| s.err(s.line_of("holds"), e.to_string()))?,
        ),
        other => return Err(s.err(s.line_of("kind"), format!("unknown kind `{other}`"))),
    };
    let targets =
        s.parse_key("targets", |t| split_top(t, ',').into_iter().map(MemberRef::parse).collect())?.unwrap_or_default();
    Ok(ConditionRecord {
        id: s.require("id")?.to_string(),
        group: s.get("group").unwrap_or("").to_string(),
        source: s.require("source")?.to_string(),
        bind: s.parse_key("bind", parse_bindings)?.unwrap_or_default(),
        context: s.parse_key("context", |v| v.trim().parse::<i64>().map_err(|e| e.to_string()))?.unwrap_or(0),
        kind,
        targets,
        flag: s.get("flag").map(String::from),
        seed: s.parse_key("seed", |v| v.trim().parse::<u64>().map_err(|e| e.to_string()))?.unwrap_or(CERTIFICATE_SEED),
        line: s.line,
    })
}

fn parse_autshape(s: &Section) -> Result<AutShapeRecord> {
    let mut rows = Vec::new();
    for k in 1.. {
        let key = format!("row{k}");
        let Some(row) = s.parse_key(&key, |text| {
            text.split(',').map(|v| ScalarExpr::parse(v.trim()).map_err(|e| e.to_string())).collect()
        })?
        else {
            break;
        };
        rows.push(row);
    }
    let allowed: Vec<String> = ["id", "jordan", "params", "signs"]
        .into_iter()
        .map(String::from)
        .chain((1..=rows.len()).map(|k| format!("row{k}")))
        .collect();
    s.check_keys(&allowed.iter().map(String::as_str).collect::<Vec<_>>())?;
    if rows.is_empty() || rows.iter().any(|r: &Vec<ScalarExpr>| r.len() != rows.len()) {
        return Err(s.err(s.line, "autshape rows must form a square matrix"));
    }
    Ok(AutShapeRecord {
        id: s.require("id")?.to_string(),
        jordan: s.require("jordan")?.to_string(),
        params: s.get("params").map(parse_list).unwrap_or_default(),
        signs: s.get("signs").map(parse_list).unwrap_or_default(),
        rows,
    })
}

fn parse_form_token(tok: &str) -> Option<(usize, usize)> {
    let digits = tok.strip_prefix('D')?;
    let mut c = digits.chars();
    let i = c.next()?.to_digit(10)? as usize;
    let j = c.next()?.to_digit(10)? as usize;
    (c.next().is_none() && i >= 1 && j >= 1).then_some((i, j))
}

fn parse_eta(s: &Section) -> Result<EtaRecord> {
    let mut components = Vec::new();
    for k in 1.. {
        let key = format!("B{k}");
        let Some(comp) = s.parse_key(&key, |text| {
            parse_combination(text, |t| parse_form_token(t).is_some())
                .map(|c| c.into_iter().map(|(e, t)| (e, parse_form_token(&t).expect("token checked"))).collect())
                .map_err(|e| e.to_string())
        })?
        else {
            break;
        };
        components.push(comp);
    }
    let allowed: Vec<String> = ["id", "jordan", "params", "exclude", "yields", "bind", "from", "from_bind", "act"]
        .into_iter()
        .map(String::from)
        .chain((1..=components.len()).map(|k| format!("B{k}")))
        .collect();
    s.check_keys(&allowed.iter().map(String::as_str).collect::<Vec<_>>())?;
    let act = s.parse_key("act", |text| {
        let (shape, bindings) = text.split_once(':').ok_or("expected `SHAPE: bindings`")?;
        Ok((shape.trim().to_string(), parse_bindings(bindings)?))
    })?;
    Ok(EtaRecord {
        id: s.require("id")?.to_string(),
        jordan: s.require("jordan")?.to_string(),
        params: s.get("params").map(parse_list).unwrap_or_default(),
        exclude: s.parse_key("exclude", parse_bindings)?.unwrap_or_default(),
        components,
        yields: s.get("yields").map(String::from),
        bind: s.parse_key("bind", parse_bindings)?.unwrap_or_default(),
        from: s.get("from").map(String::from),
        from_bind: s.parse_key("from_bind", parse_bindings)?.unwrap_or_default(),
        act,
    })
}

fn parse_tag(s: &Section, key: &str, text: &str) -> Result<VarietyTag> {
    VarietyTag::from_name(text.trim()).ok_or_else(|| s.err(s.line_of(key), format!("unknown variety `{text}`")))
}

fn parse_variety(s: &Section) -> Result<VarietyRecord> {
    s.check_keys(&["tag", "type", "base", "extra"])?;
    Ok(VarietyRecord {
        tag: parse_tag(s, "tag", s.require("tag")?)?,
        kind: s.parse_key("type", parse_type)?.ok_or_else(|| s.err(s.line, "[variety] without `type`"))?,
        base: s.get("base").map(|b| parse_tag(s, "base", b)).transpose()?,
        extra: s
            .parse_key("extra", |t| split_top(t, ',').into_iter().map(MemberRef::parse).collect())?
            .unwrap_or_default(),
    })
}

fn parse_dimtable(s: &Section) -> Result<DimTableRecord> {
    s.check_keys(&["id", "group", "dimension", "rigid", "components", "dims"])?;
    let number = |key: &str| -> Result<usize> {
        s.parse_key(key, |v| v.trim().parse::<usize>().map_err(|e| e.to_string()))?
            .ok_or_else(|| s.err(s.line, format!("[dimtable] without `{key}`")))
    };
    let dims = s
        .parse_key("dims", |text| {
            split_top(text, ';')
                .into_iter()
                .map(|group| {
                    let (d, names) =
                        group.split_once(':').ok_or_else(|| format!("expected `dim: names` in `{group}`"))?;
                    let d = d.trim().parse::<usize>().map_err(|e| e.to_string())?;
                    let members = split_top(names, ',')
                        .into_iter()
                        .map(MemberRef::parse)
                        .collect::<std::result::Result<_, _>>()?;
                    Ok((d, members))
                })
                .collect()
        })?
        .unwrap_or_default();
    Ok(DimTableRecord {
        id: s.require("id")?.to_string(),
        group: s.get("group").unwrap_or("").to_string(),
        dimension: number("dimension")?,
        rigid: number("rigid")?,
        components: s
            .parse_key("components", |t| split_top(t, ',').into_iter().map(MemberRef::parse).collect())?
            .unwrap_or_default(),
        dims,
    })
}

// ---------------------------------------------------------------------------
// Arrow instances
// ---------------------------------------------------------------------------

/// An arrow with its free parameters fixed: a source over `ℚ(√d)(t)`, the
/// basis family (and the alternative reading, if any) and the target.
#[derive(Debug, Clone)]
pub struct ArrowInstance {
    pub label: String,
    pub ctx: FieldContext,
    pub source: SuperAlgebra<RatFunc>,
    pub family: ParametricFamily,
    pub alternative: Option<ParametricFamily>,
    pub target: SuperAlgebra<QuadExt>,
}

/// Parameter values at which arrow families are checked. Zero and `±1`
/// are avoided: several families degenerate there.
pub fn arrow_sample_values() -> Vec<Rational> {
    [(-2, 1), (-1, 2), (1, 2), (2, 1), (5, 1)].into_iter().map(|(p, q)| ratio(p, q)).collect()
}

impl Registry {
    /// Every instance of `arrow` (one per sample of its free parameters).
    pub fn arrow_instances(&self, arrow: &ArrowRecord) -> Result<Vec<ArrowInstance>> {
        let ctx = FieldContext::new(arrow.context).map_err(scalar_err(format!("arrow {}", arrow.id)))?;
        let points: Vec<SamplePoint> = if arrow.params.is_empty() {
            vec![SamplePoint { ctx, ..SamplePoint::empty() }]
        } else {
            let pseudo = AlgebraRecord {
                name: arrow.id.clone(),
                even: 0,
                odd: 0,
                params: arrow.params.clone(),
                exclude: arrow.exclude.clone(),
                special: Vec::new(),
                origin: String::new(),
                algebra: ParametricAlgebra {
                    name: arrow.id.clone(),
                    even: 0,
                    odd: 0,
                    params: Vec::new(),
                    entries: Vec::new(),
                },
                file: arrow.file.clone(),
                line: arrow.line,
            };
            pseudo.grid_samples(&arrow_sample_values()).into_iter().map(|p| SamplePoint { ctx, ..p }).collect()
        };
        points.iter().map(|p| self.arrow_instance(arrow, p)).collect()
    }

    /// The instance of `arrow` at the given values of its free parameters.
    pub fn arrow_instance(&self, arrow: &ArrowRecord, point: &SamplePoint) -> Result<ArrowInstance> {
        let context = format!("arrow {}", arrow.id);
        let ctx = point.ctx;
        let env = point.env();
        let src = self.algebra(&arrow.source)?;
        let mut bind: BTreeMap<String, ScalarExpr> = arrow.bind.iter().cloned().collect();
        for p in &src.params {
            if !bind.contains_key(p) {
                if !arrow.params.contains(p) {
                    return Err(RegistryError::MissingParameter { name: context, param: p.clone() });
                }
                bind.insert(p.clone(), ScalarExpr::Name(p.clone()));
            }
        }
        // Constant bindings must respect the source's exclusions.
        let mut constant = BTreeMap::new();
        for (k, e) in &bind {
            if !e.mentions_t() {
                constant.insert(k.clone(), e.eval_const(&ctx, &env).map_err(scalar_err(context.clone()))?);
            }
        }
        if let Some(binding) = src.excluded_by(&SamplePoint { ctx, values: constant, label: String::new() }) {
            return Err(RegistryError::Excluded { name: src.name.clone(), binding });
        }
        let bound = src.algebra.substitute_params(&bind).map_err(algebra_err(context.clone()))?;
        let source_env: Env =
            env.iter().filter(|(k, _)| bound.params.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
        let source =
            bound.instantiate(&ctx, &source_env).map_err(algebra_err(context.clone()))?.with_name(src.name.clone());
        let tgt = self.algebra(&arrow.target)?;
        let mut values = BTreeMap::new();
        for (k, e) in &arrow.target_bind {
            values.insert(k.clone(), e.eval_const(&ctx, &env).map_err(scalar_err(context.clone()))?);
        }
        let tpoint = SamplePoint { ctx, values, label: String::new() };
        let target = tgt.at(&tpoint)?.with_name(tgt.display_name(&tpoint));
        let reparam =
            arrow.reparam.as_ref().map(|r| r.eval(&ctx, &env)).transpose().map_err(scalar_err(context.clone()))?;
        let limit = match &arrow.limit {
            Some(l) => l.eval_const(&ctx, &env).map_err(scalar_err(context.clone()))?,
            None => QuadExt::int(0),
        };
        let family = |basis: &Vec<Vec<(ScalarExpr, String)>>| -> Result<ParametricFamily> {
            let n = src.even + src.odd;
            let mut m = Matrix::<RatFunc>::zeros(basis.len(), n);
            for (i, row) in basis.iter().enumerate() {
                for (coef, tok) in row {
                    let j = basis_index(src.even, src.odd, tok).ok_or_else(|| RegistryError::Invalid {
                        context: context.clone(),
                        msg: format!("`{tok}` is not a basis vector of {}", src.name),
                    })?;
                    let c = coef.eval(&ctx, &env).map_err(scalar_err(context.clone()))?;
                    let v = m.get(i, j).add_ref(&c);
                    m.set(i, j, v);
                }
            }
            Ok(ParametricFamily { basis: m, reparam: reparam.clone(), limit: limit.clone() })
        };
        Ok(ArrowInstance {
            label: point.to_string(),
            ctx,
            source,
            family: family(&arrow.basis)?,
            alternative: arrow.alternative.as_ref().map(family).transpose()?,
            target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    #[test]
    fn bundled_counts() {
        let reg = Registry::bundled().unwrap();
        assert_eq!(reg.counts(), (12, 15, 28, 39));
        assert_eq!(reg.right_alternative((1, 2)).count(), 28);
        assert_eq!(reg.right_alternative((2, 1)).count(), 39);
    }

    #[test]
    fn bundled_audit_is_clean() {
        let reg = Registry::bundled().unwrap();
        assert_eq!(reg.audit(), Vec::<String>::new());
    }

    #[test]
    fn empty_text_gives_empty_registry() {
        let mut reg = Registry::default();
        reg.add_text("empty.alg", "").unwrap();
        assert!(reg.algebras().is_empty());
    }

    #[test]
    fn resolve_family_member() {
        let reg = Registry::bundled().unwrap();
        let a = reg.resolve("R04", &BTreeMap::from([("alpha".to_string(), q(2))])).unwrap();
        assert_eq!(a.get(1, 2, 0), &q(3));
        assert_eq!(a.get(2, 1, 0), &q(1));
    }

    #[test]
    fn excluded_value_rejected() {
        let reg = Registry::bundled().unwrap();
        let err = reg.resolve("R01", &BTreeMap::from([("alpha".to_string(), q(-1))])).unwrap_err();
        assert!(matches!(err, RegistryError::Excluded { .. }));
        assert!(matches!(reg.resolve("R99", &BTreeMap::new()), Err(RegistryError::Unknown { .. })));
    }

    #[test]
    fn j07_is_an_idempotent() {
        let reg = Registry::bundled().unwrap();
        let a = reg.resolve("J07", &BTreeMap::new()).unwrap();
        assert_eq!(a.product_lines(), vec!["e1 * e1 = e1".to_string()]);
    }

    #[test]
    fn member_references() {
        let m = MemberRef::parse("R01[alpha!=-1,3]").unwrap();
        assert_eq!(m.to_string(), "R01[alpha!=-1,3]");
        let p = MemberRef::parse("R01[alpha=r;d=-3]").unwrap();
        let ctx = FieldContext::new(-3).unwrap();
        let point = SamplePoint {
            ctx,
            values: BTreeMap::from([("alpha".into(), ctx.radical().unwrap())]),
            label: String::new(),
        };
        assert!(p.matches(&point));
        assert!(m.matches(&point));
        assert!(matches!(MemberRef::parse("R04[alpha]").unwrap().spec, MemberSpec::Family(_)));
        assert_eq!(split_top("R01[a=r;d=-3], R02", ','), vec!["R01[a=r;d=-3]", "R02"]);
    }

    #[test]
    fn parse_errors_carry_locations() {
        let mut reg = Registry::default();
        let err = reg.add_text("bad.alg", "[algebra]\nname = X\ntype = 1,2\ne1 * f1 = 2 e1\n").unwrap_err();
        assert!(err.to_string().starts_with("bad.alg:4:"), "{err}");
        let dup = "[algebra]\nname = X\ntype = 1,2\n[algebra]\nname = X\ntype = 1,2\n";
        assert!(matches!(Registry::default().add_text("d.alg", dup), Err(RegistryError::Duplicate { .. })));
    }

    #[test]
    fn samples_respect_exclusions_and_specials() {
        let reg = Registry::bundled().unwrap();
        let r01 = reg.algebra("R01").unwrap();
        let pts = r01.samples(&default_sample_values());
        assert!(pts.iter().all(|p| p.values["alpha"] != q(-1)));
        assert!(pts.iter().any(|p| p.ctx.d() == -3));
        assert!(pts.iter().any(|p| p.values["alpha"] == q(3)));
    }
}
