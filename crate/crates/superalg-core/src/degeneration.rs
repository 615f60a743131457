//! Degenerations along one-parameter basis families, and the closed
//! conditions that certify non-degenerations.
//!
//! A family is a basis `E_1, …, E_{m+n}` whose coordinates are rational
//! functions of `t`. Rewriting an algebra in that basis gives constants in
//! `ℚ(√d)(t)`; their limit as `t → c` is the degeneration.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{basis_name, AlgebraError, SuperAlgebra};
use crate::identity::IdentityLibrary;
use crate::linalg::Matrix;
use crate::morphism::{change_basis_rows, random_borel_rows, MorphismError};
use crate::registry::{family_sample_values, ArrowRecord, ConditionKind, ConditionRecord, Registry, SamplePoint};
use crate::scalar::{Env, FieldContext};
use crate::scalar::{Field, PoleReport, QuadExt, RatFunc, Rational, ScalarError};
use crate::Verdict;

/// Errors raised while building families or parsing conditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DegenerationError {
    #[error("the basis family is singular for every t")]
    Singular,
    #[error("basis family has {got} vectors, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("basis vector E{0} mixes parities")]
    NotGraded(usize),
    #[error("condition syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("structure constant c{i}{j}^{k} is out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, k: usize, dim: usize },
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Morphism(MorphismError),
}

/// A basis depending on `t`, with an optional rationalizing substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFamily {
    /// Row `i` holds the coordinates of `E_i` in the old basis.
    pub basis: Matrix<RatFunc>,
    /// `t := r(t)`, applied to the source constants before the basis change.
    pub reparam: Option<RatFunc>,
    pub limit: QuadExt,
}

impl ParametricFamily {
    pub fn new(basis: Matrix<RatFunc>) -> Self {
        Self { basis, reparam: None, limit: QuadExt::int(0) }
    }

    /// The constant identity family.
    pub fn identity(dim: usize) -> Self {
        Self::new(Matrix::identity(dim))
    }
}

/// The constants of `a` in the basis of `family`, as rational functions.
pub fn transform_family(
    a: &SuperAlgebra<RatFunc>,
    family: &ParametricFamily,
) -> Result<SuperAlgebra<RatFunc>, DegenerationError> {
    let n = a.dim();
    if family.basis.rows() != n || family.basis.cols() != n {
        return Err(DegenerationError::Shape { expected: n, got: family.basis.rows() });
    }
    let source = match &family.reparam {
        Some(r) => a.try_map(|c| c.substitute(r))?,
        None => a.clone(),
    };
    change_basis_rows(&source, &family.basis).map_err(|e| match e {
        MorphismError::Singular => DegenerationError::Singular,
        MorphismError::NotGraded(i, _) => DegenerationError::NotGraded(i),
        other => DegenerationError::Morphism(other),
    })
}

/// A structure constant without a limit at the limit point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoleEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub report: PoleReport,
}

impl fmt::Display for PoleEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}{}^{}: {}", self.i + 1, self.j + 1, self.k + 1, self.report)
    }
}

/// Entrywise limit `t → c`; lists every entry with a pole instead.
pub fn take_limit(at: &SuperAlgebra<RatFunc>, c: &QuadExt) -> Result<SuperAlgebra<QuadExt>, Vec<PoleEntry>> {
    let n = at.dim();
    let mut out = SuperAlgebra::zero(at.even_dim(), at.odd_dim());
    let mut poles = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = at.get(i, j, k);
                if v.is_zero() {
                    continue;
                }
                match v.limit_at(c) {
                    Ok(x) => out.set(i, j, k, x).expect("limit preserves grading"),
                    Err(report) => poles.push(PoleEntry { i, j, k, report }),
                }
            }
        }
    }
    if poles.is_empty() {
        Ok(out)
    } else {
        Err(poles)
    }
}

/// The outcome of checking one family against its expected limit.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub verdict: Verdict,
    /// The constants in the new basis, when the basis change succeeded.
    pub intermediate: Option<SuperAlgebra<RatFunc>>,
    /// The limit, when every entry has one.
    pub limit: Option<SuperAlgebra<QuadExt>>,
}

/// Checks that `source` in the basis `family` tends to `target` exactly.
pub fn verify_family(
    source: &SuperAlgebra<RatFunc>,
    family: &ParametricFamily,
    target: &SuperAlgebra<QuadExt>,
) -> FamilyReport {
    let intermediate = match transform_family(source, family) {
        Ok(a) => a,
        Err(e) => return FamilyReport { verdict: Verdict::fail(e.to_string()), intermediate: None, limit: None },
    };
    let limit = match take_limit(&intermediate, &family.limit) {
        Ok(l) => l,
        Err(poles) => {
            let list: Vec<String> = poles.iter().map(ToString::to_string).collect();
            return FamilyReport {
                verdict: Verdict::fail(format!("poles at t = {}: {}", family.limit, list.join(", "))),
                intermediate: Some(intermediate),
                limit: None,
            };
        }
    };
    let verdict = if limit.kind() != target.kind() {
        Verdict::fail("limit and target have different types")
    } else if limit.same_constants(target) {
        Verdict::pass()
    } else {
        Verdict::fail(format!(
            "limit [{}] differs from target [{}]",
            limit.product_lines().join(", "),
            target.product_lines().join(", ")
        ))
    };
    FamilyReport { verdict, intermediate: Some(intermediate), limit: Some(limit) }
}

/// The outcome of [`verify_arrow`] for one registry arrow.
#[derive(Debug, Clone)]
pub struct ArrowReport {
    pub id: String,
    pub source: String,
    pub target: String,
    pub verdict: Verdict,
    /// Per sample of the arrow's free parameters: label and report.
    pub instances: Vec<(String, FamilyReport)>,
}

impl fmt::Display for ArrowReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ARROW {} -> {} : {}", self.source, self.target, self.verdict)
    }
}

/// Verifies a registry arrow at every sample of its free parameters. When
/// the primary basis fails and the record carries an alternative reading,
/// the alternative is tried and the outcome noted.
pub fn verify_arrow(registry: &Registry, arrow: &ArrowRecord) -> ArrowReport {
    let mut report = ArrowReport {
        id: arrow.id.clone(),
        source: arrow.source.clone(),
        target: arrow.target.clone(),
        verdict: Verdict::pass(),
        instances: Vec::new(),
    };
    let instances = match registry.arrow_instances(arrow) {
        Ok(list) => list,
        Err(e) => {
            report.verdict = Verdict::fail(e.to_string());
            return report;
        }
    };
    let mut used_alternative = false;
    for inst in instances {
        let mut r = verify_family(&inst.source, &inst.family, &inst.target);
        if !r.verdict.is_pass() {
            if let Some(alt) = &inst.alternative {
                let second = verify_family(&inst.source, alt, &inst.target);
                if second.verdict.is_pass() {
                    used_alternative = true;
                    r = second;
                }
            }
        }
        if !r.verdict.is_pass() {
            let label = if inst.label.is_empty() { String::new() } else { format!("[{}] ", inst.label) };
            let detail = format!("{label}{}", r.verdict.details().join("; "));
            report.verdict = Verdict::fail(detail);
            report.instances.push((inst.label, r));
            return report;
        }
        report.instances.push((inst.label, r));
    }
    if used_alternative {
        report.verdict = report.verdict.with_note("primary reading fails; alternative reading passes");
    }
    report
}

/// Every identity set the source satisfies must hold in the target, since
/// varieties are closed.
pub fn degeneration_closedness_check<F: Field>(
    source: &SuperAlgebra<F>,
    target: &SuperAlgebra<F>,
    library: &IdentityLibrary,
) -> Verdict {
    let s = library.varieties(source);
    let t = library.varieties(target);
    let lost: Vec<String> = s.iter().filter(|tag| !t.contains(*tag)).map(|tag| tag.to_string()).collect();
    if lost.is_empty() {
        Verdict::pass()
    } else {
        Verdict::fail(format!("target leaves {}", lost.join(", ")))
    }
}

// ---------------------------------------------------------------------------
// Condition sets
// ---------------------------------------------------------------------------

/// A polynomial expression in structure constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondExpr {
    /// `c_{ij}^k`, zero-based.
    Const(usize, usize, usize),
    Number(Rational),
    Neg(Box<CondExpr>),
    Add(Box<CondExpr>, Box<CondExpr>),
    Sub(Box<CondExpr>, Box<CondExpr>),
    Mul(Box<CondExpr>, Box<CondExpr>),
}

impl CondExpr {
    pub fn eval<F: Field>(&self, a: &SuperAlgebra<F>) -> F {
        match self {
            CondExpr::Const(i, j, k) => a.get(*i, *j, *k).clone(),
            CondExpr::Number(q) => F::from_rational(q.clone()),
            CondExpr::Neg(x) => x.eval(a).neg_ref(),
            CondExpr::Add(x, y) => x.eval(a).add_ref(&y.eval(a)),
            CondExpr::Sub(x, y) => x.eval(a).sub_ref(&y.eval(a)),
            CondExpr::Mul(x, y) => x.eval(a).mul_ref(&y.eval(a)),
        }
    }

    fn max_index(&self) -> usize {
        match self {
            CondExpr::Const(i, j, k) => *i.max(j).max(k),
            CondExpr::Number(_) => 0,
            CondExpr::Neg(x) => x.max_index(),
            CondExpr::Add(x, y) | CondExpr::Sub(x, y) | CondExpr::Mul(x, y) => x.max_index().max(y.max_index()),
        }
    }

    fn first_const(&self) -> Option<(usize, usize, usize)> {
        match self {
            CondExpr::Const(i, j, k) => Some((*i, *j, *k)),
            CondExpr::Number(_) => None,
            CondExpr::Neg(x) => x.first_const(),
            CondExpr::Add(x, y) | CondExpr::Sub(x, y) | CondExpr::Mul(x, y) => {
                x.first_const().or_else(|| y.first_const())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            CondExpr::Add(..) | CondExpr::Sub(..) => 1,
            CondExpr::Mul(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for CondExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |e: &CondExpr, min: u8| if e.precedence() < min { format!("({e})") } else { e.to_string() };
        match self {
            CondExpr::Const(i, j, k) => write!(f, "c{}{}^{}", i + 1, j + 1, k + 1),
            CondExpr::Number(q) => write!(f, "{q}"),
            CondExpr::Neg(x) => write!(f, "-{}", side(x, 3)),
            CondExpr::Add(x, y) => write!(f, "{} + {}", x, side(y, 2)),
            CondExpr::Sub(x, y) => write!(f, "{} - {}", x, side(y, 2)),
            CondExpr::Mul(x, y) => write!(f, "{}*{}", side(x, 2), side(y, 3)),
        }
    }
}

/// A list of equality chains `x₁ = x₂ = … ` among constant expressions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionSet {
    pub chains: Vec<Vec<CondExpr>>,
}

impl ConditionSet {
    /// Parses `;`-separated chains such as `c11^1 = c21^2; c12^2 = 0`.
    pub fn parse(text: &str) -> Result<Self, DegenerationError> {
        let mut chains = Vec::new();
        let mut offset = 0;
        for part in text.split(';') {
            let mut chain = Vec::new();
            let mut inner = offset;
            for side in part.split('=') {
                let mut p = CondParser { src: side.as_bytes(), pos: 0, offset: inner };
                let e = p.sum()?;
                p.skip_ws();
                if p.pos != p.src.len() {
                    return Err(p.error("unexpected trailing input"));
                }
                chain.push(e);
                inner += side.len() + 1;
            }
            if chain.len() < 2 {
                return Err(DegenerationError::Syntax { pos: offset + 1, msg: "expected an equality".into() });
            }
            chains.push(chain);
            offset += part.len() + 1;
        }
        Ok(Self { chains })
    }

    /// Confirms every index fits an algebra of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<(), DegenerationError> {
        for e in self.chains.iter().flatten() {
            if e.max_index() >= dim {
                let (i, j, k) = e.first_const().unwrap_or((0, 0, 0));
                return Err(DegenerationError::IndexOutOfRange { i: i + 1, j: j + 1, k: k + 1, dim });
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chains: Vec<String> =
            self.chains.iter().map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(" = ")).collect();
        write!(f, "{}", chains.join("; "))
    }
}

struct CondParser<'a> {
    src: &'a [u8],
    pos: usize,
    offset: usize,
}

impl CondParser<'_> {
    fn error(&self, msg: &str) -> DegenerationError {
        DegenerationError::Syntax { pos: self.offset + self.pos + 1, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<CondExpr, DegenerationError> {
        let mut acc = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if c == b'+' {
                CondExpr::Add(Box::new(acc), Box::new(rhs))
            } else {
                CondExpr::Sub(Box::new(acc), Box::new(rhs))
            };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<CondExpr, DegenerationError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = CondExpr::Mul(Box::new(acc), Box::new(self.factor()?));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<CondExpr, DegenerationError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(CondExpr::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'c') => {
                self.pos += 1;
                let i = self.digit()?;
                let j = self.digit()?;
                if self.src.get(self.pos) != Some(&b'^') {
                    return Err(self.error("expected `^`"));
                }
                self.pos += 1;
                let k = self.digit()?;
                Ok(CondExpr::Const(i, j, k))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let n: i64 = std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| self.error("integer too large"))?;
                Ok(CondExpr::Number(Rational::from_integer(n.into())))
            }
            _ => Err(self.error("expected a structure constant, number or `(`")),
        }
    }

    fn digit(&mut self) -> Result<usize, DegenerationError> {
        match self.src.get(self.pos) {
            Some(&c) if (b'1'..=b'9').contains(&c) => {
                self.pos += 1;
                Ok(usize::from(c - b'1'))
            }
            _ => Err(self.error("expected a basis index 1-9")),
        }
    }
}

/// Whether every chain holds exactly in the stored basis of `a`.
pub fn check_conditions<F: Field>(a: &SuperAlgebra<F>, cs: &ConditionSet) -> Verdict {
    if let Err(e) = cs.validate(a.dim()) {
        return Verdict::fail(e.to_string());
    }
    let mut failures = Vec::new();
    for chain in &cs.chains {
        let values: Vec<F> = chain.iter().map(|e| e.eval(a)).collect();
        if values.iter().any(|v| v != &values[0]) {
            let shown: Vec<String> = chain.iter().zip(&values).map(|(e, v)| format!("{e} = {v}")).collect();
            failures.push(format!("violated: {}", shown.join(", ")));
        }
    }
    Verdict::from_failures(failures)
}

/// Samples `trials` random upper-triangular graded basis changes and checks
/// that the conditions survive each. A probabilistic certificate of
/// stability under the Borel subgroup, reproducible from `seed`.
pub fn borel_stability_sample(a: &SuperAlgebra<QuadExt>, cs: &ConditionSet, trials: usize, seed: u64) -> Verdict {
    let base = check_conditions(a, cs);
    if !base.is_pass() {
        return Verdict::fail("conditions fail in the stored basis").and(base);
    }
    if trials == 0 {
        return Verdict::pass().with_note("untested");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 1..=trials {
        let rows = random_borel_rows(&mut rng, a.even_dim(), a.odd_dim());
        let moved = match change_basis_rows(a, &rows) {
            Ok(m) => m,
            Err(e) => return Verdict::fail(format!("trial {trial}: {e}")),
        };
        let v = check_conditions(&moved, cs);
        if !v.is_pass() {
            return Verdict::fail(format!("trial {trial} (seed {seed}, rows {rows})")).and(v);
        }
    }
    Verdict::pass().with_note(format!("{trials} trials, seed {seed}"))
}

/// A basis-independent property: `key = value`, or a bare boolean key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantCondition {
    pub key: String,
    pub value: usize,
}

impl InvariantCondition {
    /// Parses `;`-separated items such as `dim_even_sq = 0; even_commutative`.
    pub fn parse_list(text: &str) -> Result<Vec<Self>, DegenerationError> {
        let probe = SuperAlgebra::<QuadExt>::zero(0, 0).structural_invariants();
        text.split(';')
            .map(|item| {
                let (key, value) = match item.split_once('=') {
                    Some((k, v)) => {
                        let v = v.trim().parse().map_err(|_| DegenerationError::Syntax {
                            pos: 1,
                            msg: format!("bad invariant value in `{}`", item.trim()),
                        })?;
                        (k.trim(), v)
                    }
                    None => (item.trim(), 1),
                };
                if probe.value(key).is_none() {
                    return Err(DegenerationError::UnknownInvariant(key.to_string()));
                }
                Ok(Self { key: key.to_string(), value })
            })
            .collect()
    }

    pub fn holds<F: Field>(&self, a: &SuperAlgebra<F>) -> bool {
        a.structural_invariants().value(&self.key) == Some(self.value)
    }
}

impl fmt::Display for InvariantCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if crate::algebra::StructuralInvariants::is_boolean(&self.key) && self.value == 1 {
            write!(f, "{}", self.key)
        } else {
            write!(f, "{} = {}", self.key, self.value)
        }
    }
}

/// Checks a list of invariant conditions, naming each failing one.
pub fn check_invariants<F: Field>(a: &SuperAlgebra<F>, conditions: &[InvariantCondition]) -> Verdict {
    let inv = a.structural_invariants();
    Verdict::from_failures(
        conditions
            .iter()
            .filter(|c| inv.value(&c.key) != Some(c.value))
            .map(|c| format!("{c} fails (actual {})", inv.value(&c.key).unwrap_or(0)))
            .collect(),
    )
}

/// Checks the source side of a registry certificate: the source satisfies
/// the conditions at every sampled member, and linear sets also survive
/// `trials` Borel samples drawn from `seed`.
pub fn check_certificate(registry: &Registry, cert: &ConditionRecord, trials: usize, seed: u64) -> Verdict {
    let points = match certificate_points(registry, cert) {
        Ok(p) => p,
        Err(e) => return Verdict::fail(e),
    };
    let mut verdict = Verdict::pass();
    for (name, a) in &points {
        let v = match &cert.kind {
            ConditionKind::Linear(cs) => borel_stability_sample(a, cs, trials, seed),
            ConditionKind::Invariant(list) => check_invariants(a, list),
        };
        if !v.is_pass() {
            return Verdict::fail(format!("source {name}: {}", v.details().join("; ")));
        }
        if points.len() == 1 {
            verdict = v;
        }
    }
    verdict
}

/// Targets of a certificate that also satisfy its conditions in their
/// stored basis (at some sampled member). For these the certificate does
/// not by itself exclude the degeneration.
pub fn inconclusive_targets(registry: &Registry, cert: &ConditionRecord) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for target in &cert.targets {
        let rec = registry.algebra(&target.name).map_err(|e| e.to_string())?;
        for point in registry.member_samples(target, &family_sample_values()).map_err(|e| e.to_string())? {
            let t = rec.at(&point).map_err(|e| e.to_string())?;
            let holds = match &cert.kind {
                ConditionKind::Linear(cs) => check_conditions(&t, cs).is_pass(),
                ConditionKind::Invariant(list) => check_invariants(&t, list).is_pass(),
            };
            if holds {
                out.push(rec.display_name(&point));
                break;
            }
        }
    }
    Ok(out)
}

/// The source members a certificate speaks about: the bound member, or
/// generic members of a family.
fn certificate_points(
    registry: &Registry,
    cert: &ConditionRecord,
) -> Result<Vec<(String, SuperAlgebra<QuadExt>)>, String> {
    let rec = registry.algebra(&cert.source).map_err(|e| e.to_string())?;
    let points = if cert.bind.is_empty() {
        rec.grid_samples(&family_sample_values())
    } else {
        let ctx = FieldContext::new(cert.context).map_err(|e| e.to_string())?;
        let mut values = std::collections::BTreeMap::new();
        for (k, e) in &cert.bind {
            values.insert(k.clone(), e.eval_const(&ctx, &Env::new()).map_err(|e| e.to_string())?);
        }
        let label = cert.bind.iter().map(|(k, e)| format!("{k}={e}")).collect::<Vec<_>>().join(",");
        vec![SamplePoint { ctx, values, label }]
    };
    points.iter().map(|p| rec.at(p).map(|a| (rec.display_name(p), a)).map_err(|e| e.to_string())).collect()
}

/// The degeneration graph in Graphviz DOT form: one edge per arrow,
/// labelled by its id. Corrected arrows are drawn dashed.
pub fn degeneration_dot(arrows: &[ArrowRecord]) -> String {
    let mut out = String::from("digraph degenerations {\n  rankdir=TB;\n  node [shape=box];\n");
    let mut sorted: Vec<&ArrowRecord> = arrows.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for a in sorted {
        let style = if a.corrects.is_some() { ", style=dashed" } else { "" };
        out.push_str(&format!("  \"{}\" -> \"{}\" [label=\"{}\"{style}];\n", a.source, a.target, a.id));
    }
    out.push_str("}\n");
    out
}

/// Renders a family basis as `E1 = …; E2 = …`.
pub fn format_family(family: &ParametricFamily, even: usize) -> String {
    (0..family.basis.rows())
        .map(|i| {
            let terms: Vec<String> = family
                .basis
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| format!("({c}) {}", basis_name(even, j)))
                .collect();
            format!("E{} = {}", i + 1, terms.join(" + "))
        })
        .collect::<Vec<_>>()
        .join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    fn rf(n: i64) -> RatFunc {
        RatFunc::int(n)
    }

    /// e1 e1 = e1, e1 f1 = f1 e1 = f1, e1 f2 = f2, f1 f1 = e1.
    fn r18_like() -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(0, 0, 0, q(1)).unwrap();
        a.set(0, 1, 1, q(1)).unwrap();
        a.set(1, 0, 1, q(1)).unwrap();
        a.set(0, 2, 2, q(1)).unwrap();
        a.set(1, 1, 0, q(1)).unwrap();
        a
    }

    fn diag_family(entries: [RatFunc; 3]) -> ParametricFamily {
        let [a, b, c] = entries;
        ParametricFamily::new(Matrix::from_rows(vec![
            vec![a, rf(0), rf(0)],
            vec![rf(0), b, rf(0)],
            vec![rf(0), rf(0), c],
        ]))
    }

    #[test]
    fn scaling_an_odd_vector_scales_its_square() {
        let a = r18_like().to_ratfunc();
        let fam = diag_family([rf(1), RatFunc::t(), rf(1)]);
        let at = transform_family(&a, &fam).unwrap();
        let t = RatFunc::t();
        assert_eq!(at.get(1, 1, 0), &t.mul_ref(&t));
        let lim = take_limit(&at, &q(0)).unwrap();
        assert!(lim.get(1, 1, 0).is_zero());
    }

    #[test]
    fn identity_family_is_constant() {
        let a = r18_like();
        let report = verify_family(&a.to_ratfunc(), &ParametricFamily::identity(3), &a);
        assert!(report.verdict.is_pass());
    }

    #[test]
    fn inverse_scaling_has_a_pole() {
        let a = r18_like().to_ratfunc();
        let fam = diag_family([rf(1), RatFunc::t().inv().unwrap(), rf(1)]);
        let at = transform_family(&a, &fam).unwrap();
        let poles = take_limit(&at, &q(0)).unwrap_err();
        assert!(poles.iter().any(|p| (p.i, p.j, p.k) == (1, 1, 0)));
    }

    #[test]
    fn singular_family_rejected() {
        let a = r18_like().to_ratfunc();
        let fam = diag_family([rf(1), rf(0), rf(1)]);
        assert_eq!(transform_family(&a, &fam), Err(DegenerationError::Singular));
    }

    #[test]
    fn condition_parsing_and_checking() {
        let cs = ConditionSet::parse("c11^1 = c12^2 = c21^2; c13^3 = c31^3 = 0").unwrap();
        assert_eq!(cs.chains.len(), 2);
        assert_eq!(cs.chains[1].len(), 3);
        assert!(check_conditions(&SuperAlgebra::<QuadExt>::zero(1, 2), &cs).is_pass());
        let poly = ConditionSet::parse("c12^3*c23^1 = c21^3*(c32^1 - c23^1)").unwrap();
        assert_eq!(poly.to_string(), "c12^3*c23^1 = c21^3*(c32^1 - c23^1)");
        assert!(ConditionSet::parse("c11^1").is_err());
        assert!(ConditionSet::parse("c1x^1 = 0").is_err());
        assert!(check_conditions(&SuperAlgebra::<QuadExt>::zero(1, 1), &cs).details()[0].contains("out of range"));
    }

    #[test]
    fn borel_sampler_with_zero_trials_is_untested() {
        let cs = ConditionSet::parse("c22^2 = 0").unwrap();
        let v = borel_stability_sample(&r18_like(), &cs, 0, 7);
        assert!(v.is_pass());
        assert_eq!(v.details(), ["untested"]);
    }

    #[test]
    fn invariant_parsing() {
        let list = InvariantCondition::parse_list("dim_even_sq = 0; even_commutative").unwrap();
        assert_eq!(list[1], InvariantCondition { key: "even_commutative".into(), value: 1 });
        assert!(InvariantCondition::parse_list("dim_bogus = 1").is_err());
        assert!(check_invariants(&SuperAlgebra::<QuadExt>::zero(1, 2), &list).is_pass());
    }

    #[test]
    fn empty_graph_is_header_only() {
        assert_eq!(degeneration_dot(&[]), "digraph degenerations {\n  rankdir=TB;\n  node [shape=box];\n}\n");
    }
}
