//! Multilinear super-identities: a small DSL, an evaluator with Koszul signs
//! and the classifier for the standard varieties.
//!
//! Grammar of an identity (one `= 0` part):
//!
//! ```text
//! sum     := ["+"|"-"] product (("+"|"-") product)*
//! product := factor ("*" factor)*
//! factor  := INT ["/" INT] | "s(" VAR "," VAR ")" | "assoc(" sum "," sum "," sum ")"
//!          | VAR | "(" sum ")"
//! ```
//!
//! `s(u,v)` multiplies a term by `(−1)^{|u||v|}`, `assoc(a,b,c)` is the
//! associator `(ab)c − a(bc)`, and `*` is the non-associative product,
//! grouped from the left. Scalar factors commute out of products. Every term
//! must use each variable exactly once.
//!
//! A definition file has one entry per line, `name := part; part; ...`, where
//! a part is either `expr = 0` or the name of an earlier definition whose
//! identities are included.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{basis_name, format_element, SuperAlgebra};
use crate::scalar::{Field, Rational};
use crate::Verdict;

/// The bundled identity definitions.
pub const BUILTIN_IDENTITIES: &str = include_str!("../../../identities/builtin.idl");

/// Errors raised while parsing or applying identities.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable `{var}` used twice in term {term}")]
    RepeatedVariable { var: String, term: usize },
    #[error("term {term} does not use variable `{var}`")]
    MissingVariable { var: String, term: usize },
    #[error("sign factor references unknown variable `{0}`")]
    UnknownSignVariable(String),
    #[error("line {line}: {msg}")]
    Definition { line: usize, msg: String },
    #[error("unknown identity `{0}`")]
    Unknown(String),
    #[error("inclusion violated: member of {sub} but not of {sup}")]
    ChainViolation { sub: VarietyTag, sup: VarietyTag },
}

/// A product tree over variables (indices into the variable list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Word {
    Var(usize),
    Mul(Box<Word>, Box<Word>),
    /// `(ab)c − a(bc)`, kept as a node for display.
    Assoc(Box<Word>, Box<Word>, Box<Word>),
}

impl Word {
    fn count_vars(&self, counts: &mut [usize]) {
        match self {
            Word::Var(v) => counts[*v] += 1,
            Word::Mul(a, b) => {
                a.count_vars(counts);
                b.count_vars(counts);
            }
            Word::Assoc(a, b, c) => {
                a.count_vars(counts);
                b.count_vars(counts);
                c.count_vars(counts);
            }
        }
    }

    /// The same word with associators expanded into product trees, as a
    /// signed list `(±1, tree)`.
    pub fn expand(&self) -> Vec<(i8, Word)> {
        match self {
            Word::Var(_) => vec![(1, self.clone())],
            Word::Mul(a, b) => {
                let mut out = Vec::new();
                for (sa, wa) in a.expand() {
                    for (sb, wb) in b.expand() {
                        out.push((sa * sb, Word::Mul(Box::new(wa.clone()), Box::new(wb))));
                    }
                }
                out
            }
            Word::Assoc(a, b, c) => {
                let left = Word::Mul(Box::new(Word::Mul(a.clone(), b.clone())), c.clone());
                let right = Word::Mul(a.clone(), Box::new(Word::Mul(b.clone(), c.clone())));
                let mut out = left.expand();
                out.extend(right.expand().into_iter().map(|(s, w)| (-s, w)));
                out
            }
        }
    }

    fn eval<F: Field>(&self, a: &SuperAlgebra<F>, values: &[Vec<F>]) -> Vec<F> {
        match self {
            Word::Var(v) => values[*v].clone(),
            Word::Mul(x, y) => a.mul(&x.eval(a, values), &y.eval(a, values)),
            Word::Assoc(x, y, z) => {
                let (x, y, z) = (x.eval(a, values), y.eval(a, values), z.eval(a, values));
                let left = a.mul(&a.mul(&x, &y), &z);
                let right = a.mul(&x, &a.mul(&y, &z));
                left.iter().zip(&right).map(|(p, q)| p.sub_ref(q)).collect()
            }
        }
    }

    fn render(&self, vars: &[String], top: bool) -> String {
        match self {
            Word::Var(v) => vars[*v].clone(),
            Word::Mul(a, b) => {
                let s = format!("{}*{}", a.render(vars, false), b.render(vars, false));
                if top {
                    s
                } else {
                    format!("({s})")
                }
            }
            Word::Assoc(a, b, c) => {
                format!("assoc({},{},{})", a.render(vars, true), b.render(vars, true), c.render(vars, true))
            }
        }
    }
}

/// One term: `coefficient · Π s(u,v) · word`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coefficient: Rational,
    /// Unordered variable pairs contributing `|u||v|` to the sign exponent.
    pub signs: Vec<(usize, usize)>,
    pub word: Word,
}

/// A parsed multilinear super-identity `Σ terms = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityExpr {
    pub variables: Vec<String>,
    pub terms: Vec<Term>,
}

impl IdentityExpr {
    /// Confirms that every term uses each variable exactly once.
    pub fn audit(&self) -> Result<(), IdentityError> {
        for (t, term) in self.terms.iter().enumerate() {
            let mut counts = vec![0; self.variables.len()];
            term.word.count_vars(&mut counts);
            for (v, &c) in counts.iter().enumerate() {
                if c > 1 {
                    return Err(IdentityError::RepeatedVariable { var: self.variables[v].clone(), term: t + 1 });
                }
                if c == 0 {
                    return Err(IdentityError::MissingVariable { var: self.variables[v].clone(), term: t + 1 });
                }
            }
        }
        Ok(())
    }

    /// Evaluates the left-hand side on homogeneous elements `values` of the
    /// given parities.
    pub fn evaluate<F: Field>(&self, a: &SuperAlgebra<F>, values: &[Vec<F>], parities: &[u8]) -> Vec<F> {
        let mut total = vec![F::zero(); a.dim()];
        for term in &self.terms {
            let exponent: u32 = term.signs.iter().map(|&(u, v)| u32::from(parities[u] * parities[v])).sum();
            let mut coef = F::from_rational(term.coefficient.clone());
            if exponent % 2 == 1 {
                coef = coef.neg_ref();
            }
            let w = term.word.eval(a, values);
            for (slot, c) in total.iter_mut().zip(&w) {
                if !c.is_zero() {
                    *slot = slot.add_ref(&coef.mul_ref(c));
                }
            }
        }
        total
    }
}

impl fmt::Display for IdentityExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            let negative = t.coefficient < Rational::zero();
            let mag = if negative { -t.coefficient.clone() } else { t.coefficient.clone() };
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if negative { "-" } else { "+" })?;
            }
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            for &(u, v) in &t.signs {
                write!(f, "s({},{})*", self.variables[u], self.variables[v])?;
            }
            write!(f, "{}", t.word.render(&self.variables, true))?;
        }
        write!(f, " = 0")
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Mono {
    coef: Rational,
    signs: Vec<(usize, usize)>,
    word: Option<Word>,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Vec<String>,
    sign_vars: Vec<String>,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> IdentityError {
        IdentityError::Syntax { pos: self.pos + 1, msg: msg.into() }
    }

    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), IdentityError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.peek();
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            self.pos = start;
            None
        } else {
            Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        }
    }

    fn var_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            i
        } else {
            self.vars.push(name.to_string());
            self.vars.len() - 1
        }
    }

    fn sum(&mut self) -> Result<Vec<Mono>, IdentityError> {
        let mut out = Vec::new();
        let mut negate = false;
        if let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            negate = c == b'-';
        }
        loop {
            let mut p = self.product()?;
            if negate {
                for m in &mut p {
                    m.coef = -m.coef.clone();
                }
            }
            out.extend(p);
            match self.peek() {
                Some(c @ (b'+' | b'-')) => {
                    self.pos += 1;
                    negate = c == b'-';
                }
                _ => return Ok(out),
            }
        }
    }

    fn product(&mut self) -> Result<Vec<Mono>, IdentityError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = multiply(&acc, &rhs);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Vec<Mono>, IdentityError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let s = self.sum()?;
                self.expect(b')')?;
                Ok(s)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                let coef = if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let d = self.integer()?;
                    if d.is_zero() {
                        return Err(self.error("zero denominator"));
                    }
                    Rational::new(n, d)
                } else {
                    Rational::from_integer(n)
                };
                Ok(vec![Mono { coef, signs: Vec::new(), word: None }])
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident().ok_or_else(|| self.error("expected a name"))?;
                let call = self.peek() == Some(b'(');
                match (name.as_str(), call) {
                    ("s", true) => {
                        self.pos += 1;
                        let u = self.ident().ok_or_else(|| self.error("expected a variable"))?;
                        self.expect(b',')?;
                        let v = self.ident().ok_or_else(|| self.error("expected a variable"))?;
                        self.expect(b')')?;
                        self.sign_vars.push(u.clone());
                        self.sign_vars.push(v.clone());
                        let (ui, vi) = (self.var_index(&u), self.var_index(&v));
                        Ok(vec![Mono { coef: Rational::one(), signs: vec![(ui, vi)], word: None }])
                    }
                    ("assoc", true) => {
                        self.pos += 1;
                        let a = self.sum()?;
                        self.expect(b',')?;
                        let b = self.sum()?;
                        self.expect(b',')?;
                        let c = self.sum()?;
                        self.expect(b')')?;
                        self.associator(&a, &b, &c)
                    }
                    (_, true) => Err(self.error(format!("unknown function `{name}`"))),
                    _ => {
                        let v = self.var_index(&name);
                        Ok(vec![Mono { coef: Rational::one(), signs: Vec::new(), word: Some(Word::Var(v)) }])
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn integer(&mut self) -> Result<BigInt, IdentityError> {
        self.peek();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("expected an integer"))
    }

    fn associator(&self, a: &[Mono], b: &[Mono], c: &[Mono]) -> Result<Vec<Mono>, IdentityError> {
        let mut out = Vec::new();
        for x in a {
            for y in b {
                for z in c {
                    let (Some(wx), Some(wy), Some(wz)) = (&x.word, &y.word, &z.word) else {
                        return Err(self.error("associator argument without a variable"));
                    };
                    let mut signs = x.signs.clone();
                    signs.extend(&y.signs);
                    signs.extend(&z.signs);
                    out.push(Mono {
                        coef: &x.coef * &y.coef * &z.coef,
                        signs,
                        word: Some(Word::Assoc(Box::new(wx.clone()), Box::new(wy.clone()), Box::new(wz.clone()))),
                    });
                }
            }
        }
        Ok(out)
    }
}

fn multiply(a: &[Mono], b: &[Mono]) -> Vec<Mono> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let word = match (&x.word, &y.word) {
                (None, w) | (w, None) => w.clone(),
                (Some(p), Some(q)) => Some(Word::Mul(Box::new(p.clone()), Box::new(q.clone()))),
            };
            let mut signs = x.signs.clone();
            signs.extend(&y.signs);
            out.push(Mono { coef: &x.coef * &y.coef, signs, word });
        }
    }
    out
}

/// Parses `expr = 0` (the `= 0` is optional) into an audited identity.
pub fn parse_identity(text: &str) -> Result<IdentityExpr, IdentityError> {
    let body = match text.rfind('=') {
        Some(eq) => {
            if text[eq + 1..].trim() != "0" {
                return Err(IdentityError::Syntax { pos: eq + 2, msg: "expected `= 0`".into() });
            }
            &text[..eq]
        }
        None => text,
    };
    let mut p = Parser { src: body.as_bytes(), pos: 0, vars: Vec::new(), sign_vars: Vec::new() };
    let monos = p.sum()?;
    if p.peek().is_some() {
        return Err(p.error("unexpected trailing input"));
    }
    // Variables are those occurring in words; sign factors may only refer
    // to them.
    let mut used = BTreeSet::new();
    for m in &monos {
        if let Some(w) = &m.word {
            let mut counts = vec![0; p.vars.len()];
            w.count_vars(&mut counts);
            used.extend(counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i));
        }
    }
    if let Some(bad) = p.sign_vars.iter().find(|s| {
        let i = p.vars.iter().position(|v| v == *s).expect("registered");
        !used.contains(&i)
    }) {
        return Err(IdentityError::UnknownSignVariable(bad.clone()));
    }
    // Re-index variables in order of first use inside words.
    let remap: BTreeMap<usize, usize> = {
        let mut order = Vec::new();
        for m in &monos {
            if let Some(w) = &m.word {
                collect_order(w, &mut order);
            }
        }
        order.into_iter().enumerate().map(|(new, old)| (old, new)).collect()
    };
    let variables = {
        let mut v = vec![String::new(); remap.len()];
        for (&old, &new) in &remap {
            v[new] = p.vars[old].clone();
        }
        v
    };
    let mut terms = Vec::new();
    for m in monos {
        let Some(word) = m.word else {
            return Err(IdentityError::Syntax { pos: 1, msg: "term without variables".into() });
        };
        if m.coef.is_zero() {
            continue;
        }
        terms.push(Term {
            coefficient: m.coef,
            signs: m.signs.iter().map(|(u, v)| (remap[u], remap[v])).collect(),
            word: reindex(&word, &remap),
        });
    }
    let id = IdentityExpr { variables, terms };
    id.audit()?;
    Ok(id)
}

fn collect_order(w: &Word, order: &mut Vec<usize>) {
    match w {
        Word::Var(v) => {
            if !order.contains(v) {
                order.push(*v);
            }
        }
        Word::Mul(a, b) => {
            collect_order(a, order);
            collect_order(b, order);
        }
        Word::Assoc(a, b, c) => {
            collect_order(a, order);
            collect_order(b, order);
            collect_order(c, order);
        }
    }
}

fn reindex(w: &Word, map: &BTreeMap<usize, usize>) -> Word {
    match w {
        Word::Var(v) => Word::Var(map[v]),
        Word::Mul(a, b) => Word::Mul(Box::new(reindex(a, map)), Box::new(reindex(b, map))),
        Word::Assoc(a, b, c) => {
            Word::Assoc(Box::new(reindex(a, map)), Box::new(reindex(b, map)), Box::new(reindex(c, map)))
        }
    }
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

/// A basis tuple on which an identity does not vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation<F> {
    /// Basis index substituted for each variable.
    pub tuple: Vec<usize>,
    pub residual: Vec<F>,
}

/// The outcome of [`check_identity`].
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityVerdict<F> {
    pub violations: Vec<Violation<F>>,
}

impl<F: Field> IdentityVerdict<F> {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    /// Summarizes the verdict, naming the first violating tuple.
    pub fn to_verdict(&self, even: usize) -> Verdict {
        match self.violations.first() {
            None => Verdict::pass(),
            Some(v) => {
                let tuple: Vec<String> = v.tuple.iter().map(|&i| basis_name(even, i)).collect();
                Verdict::fail(format!(
                    "{} violating tuple(s); first ({}) residual {}",
                    self.violations.len(),
                    tuple.join(","),
                    format_element(even, &v.residual)
                ))
            }
        }
    }
}

/// Evaluates `id` on every tuple of basis vectors. By multilinearity this
/// decides the identity on all homogeneous elements.
pub fn check_identity<F: Field>(a: &SuperAlgebra<F>, id: &IdentityExpr) -> IdentityVerdict<F> {
    let n = a.dim();
    let k = id.variables.len();
    let mut violations = Vec::new();
    let mut tuple = vec![0usize; k];
    if n == 0 {
        return IdentityVerdict { violations };
    }
    loop {
        let values: Vec<Vec<F>> = tuple.iter().map(|&i| a.basis_vector(i)).collect();
        let parities: Vec<u8> = tuple.iter().map(|&i| a.parity(i)).collect();
        let residual = id.evaluate(a, &values, &parities);
        if residual.iter().any(|c| !c.is_zero()) {
            violations.push(Violation { tuple: tuple.clone(), residual });
        }
        // Next tuple in lexicographic order.
        let mut pos = k;
        loop {
            if pos == 0 {
                return IdentityVerdict { violations };
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

/// Whether `id` holds in `a`; stops at the first violating tuple.
pub fn holds_identity<F: Field>(a: &SuperAlgebra<F>, id: &IdentityExpr) -> bool {
    let n = a.dim();
    let k = id.variables.len();
    if n == 0 {
        return true;
    }
    let mut tuple = vec![0usize; k];
    loop {
        let values: Vec<Vec<F>> = tuple.iter().map(|&i| a.basis_vector(i)).collect();
        let parities: Vec<u8> = tuple.iter().map(|&i| a.parity(i)).collect();
        if id.evaluate(a, &values, &parities).iter().any(|c| !c.is_zero()) {
            return false;
        }
        let mut pos = k;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
        }
    }
}

// ---------------------------------------------------------------------------
// Varieties
// ---------------------------------------------------------------------------

/// The varieties of the inclusion diagram (plus supercommutativity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarietyTag {
    Supercommutative,
    Asscom,
    Perm,
    BinaryPerm,
    Assoc,
    BinaryAssoc,
    Minus11,
    BinaryMinus11,
    RightAlt,
}

impl VarietyTag {
    pub const ALL: [VarietyTag; 9] = [
        VarietyTag::Supercommutative,
        VarietyTag::Asscom,
        VarietyTag::Perm,
        VarietyTag::BinaryPerm,
        VarietyTag::Assoc,
        VarietyTag::BinaryAssoc,
        VarietyTag::Minus11,
        VarietyTag::BinaryMinus11,
        VarietyTag::RightAlt,
    ];

    /// The identity-library name of the tag.
    pub fn name(self) -> &'static str {
        match self {
            VarietyTag::Supercommutative => "supercommutative",
            VarietyTag::Asscom => "asscom",
            VarietyTag::Perm => "perm",
            VarietyTag::BinaryPerm => "binary_perm",
            VarietyTag::Assoc => "assoc",
            VarietyTag::BinaryAssoc => "binary_assoc",
            VarietyTag::Minus11 => "minus11",
            VarietyTag::BinaryMinus11 => "binary_minus11",
            VarietyTag::RightAlt => "right_alt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// The inclusions `sub ⊆ sup` of the diagram.
    pub const INCLUSIONS: [(VarietyTag, VarietyTag); 10] = [
        (VarietyTag::Asscom, VarietyTag::Supercommutative),
        (VarietyTag::Asscom, VarietyTag::Perm),
        (VarietyTag::Perm, VarietyTag::Assoc),
        (VarietyTag::Perm, VarietyTag::BinaryPerm),
        (VarietyTag::Assoc, VarietyTag::Minus11),
        (VarietyTag::Assoc, VarietyTag::BinaryAssoc),
        (VarietyTag::BinaryPerm, VarietyTag::BinaryAssoc),
        (VarietyTag::Minus11, VarietyTag::BinaryMinus11),
        (VarietyTag::BinaryAssoc, VarietyTag::BinaryMinus11),
        (VarietyTag::BinaryMinus11, VarietyTag::RightAlt),
    ];
}

impl fmt::Display for VarietyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of varieties (membership bitmask).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct VarietySet(u16);

impl VarietySet {
    pub fn insert(&mut self, tag: VarietyTag) {
        self.0 |= 1 << tag as u16;
    }

    pub fn contains(&self, tag: VarietyTag) -> bool {
        self.0 & (1 << tag as u16) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = VarietyTag> + '_ {
        VarietyTag::ALL.into_iter().filter(|t| self.contains(*t))
    }

    pub fn bits(&self) -> u16 {
        self.0
    }

    /// The first inclusion `sub ⊆ sup` this set violates, if any.
    pub fn chain_violation(&self) -> Option<(VarietyTag, VarietyTag)> {
        VarietyTag::INCLUSIONS.into_iter().find(|&(sub, sup)| self.contains(sub) && !self.contains(sup))
    }
}

impl FromIterator<VarietyTag> for VarietySet {
    fn from_iter<I: IntoIterator<Item = VarietyTag>>(iter: I) -> Self {
        let mut s = VarietySet::default();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

impl fmt::Display for VarietySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(VarietyTag::name).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Named identity sets, as loaded from a definition file.
#[derive(Debug, Clone, Default)]
pub struct IdentityLibrary {
    defs: BTreeMap<String, Vec<IdentityExpr>>,
}

impl IdentityLibrary {
    /// Parses a definition file.
    pub fn parse(text: &str) -> Result<Self, IdentityError> {
        let mut defs: BTreeMap<String, Vec<IdentityExpr>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| IdentityError::Definition { line: lineno + 1, msg };
            let (name, body) = line.split_once(":=").ok_or_else(|| err("expected `name := ...`".into()))?;
            let name = name.trim();
            if defs.contains_key(name) {
                return Err(err(format!("duplicate definition `{name}`")));
            }
            let mut ids = Vec::new();
            for part in body.split(';') {
                let part = part.trim();
                if part.contains('=') {
                    ids.push(parse_identity(part).map_err(|e| err(format!("{name}: {e}")))?);
                } else {
                    let included = defs.get(part).ok_or_else(|| err(format!("unknown include `{part}`")))?;
                    ids.extend(included.iter().cloned());
                }
            }
            defs.insert(name.to_string(), ids);
        }
        Ok(Self { defs })
    }

    /// The bundled definitions.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_IDENTITIES).expect("bundled identities parse")
    }

    pub fn get(&self, name: &str) -> Result<&[IdentityExpr], IdentityError> {
        self.defs.get(name).map(Vec::as_slice).ok_or_else(|| IdentityError::Unknown(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    /// Checks every identity of a named set; the verdict names the first
    /// failing identity.
    pub fn check<F: Field>(&self, a: &SuperAlgebra<F>, name: &str) -> Result<Verdict, IdentityError> {
        for (i, id) in self.get(name)?.iter().enumerate() {
            let v = check_identity(a, id);
            if !v.is_pass() {
                let mut verdict = v.to_verdict(a.even_dim());
                verdict = Verdict::fail(format!("{name} identity #{}: {}", i + 1, verdict.details().join("; ")));
                return Ok(verdict);
            }
        }
        Ok(Verdict::pass())
    }

    /// Membership in every variety, without the chain check.
    pub fn varieties<F: Field>(&self, a: &SuperAlgebra<F>) -> VarietySet {
        VarietyTag::ALL
            .into_iter()
            .filter(|t| self.get(t.name()).map(|ids| ids.iter().all(|id| holds_identity(a, id))).unwrap_or(false))
            .collect()
    }
}

/// Membership bitmask over all varieties, checked against the inclusion
/// diagram. A violation signals an engine bug rather than a user error.
pub fn classify_varieties<F: Field>(
    a: &SuperAlgebra<F>,
    library: &IdentityLibrary,
) -> Result<VarietySet, IdentityError> {
    let set = library.varieties(a);
    match set.chain_violation() {
        Some((sub, sup)) => Err(IdentityError::ChainViolation { sub, sup }),
        None => Ok(set),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::QuadExt;

    #[test]
    fn parses_right_alternativity() {
        let id = parse_identity("assoc(x,y,z) + s(y,z)*assoc(x,z,y) = 0").unwrap();
        assert_eq!(id.variables, vec!["x", "y", "z"]);
        assert_eq!(id.terms.len(), 2);
        assert_eq!(id.terms[1].signs, vec![(1, 2)]);
    }

    #[test]
    fn parses_perm_identity() {
        let id = parse_identity("x*(y*z) - s(y,z)*x*(z*y) = 0").unwrap();
        assert_eq!(id.terms.len(), 2);
        assert_eq!(id.terms[1].coefficient, -Rational::one());
        assert!(matches!(id.terms[1].word, Word::Mul(..)));
    }

    #[test]
    fn rejects_bad_identities() {
        assert!(matches!(parse_identity("x*x = 0"), Err(IdentityError::RepeatedVariable { .. })));
        assert!(matches!(parse_identity("s(x,w)*x*y - y*x = 0"), Err(IdentityError::UnknownSignVariable(_))));
        assert!(matches!(parse_identity("x*y + = 0"), Err(IdentityError::Syntax { .. })));
        assert!(matches!(parse_identity("x*y - x = 0"), Err(IdentityError::MissingVariable { .. })));
    }

    #[test]
    fn builtin_library_is_multilinear() {
        let lib = IdentityLibrary::builtin();
        for tag in VarietyTag::ALL {
            for id in lib.get(tag.name()).unwrap() {
                id.audit().unwrap();
            }
        }
        let bm = lib.get("binary_minus11").unwrap();
        assert_eq!(bm.last().unwrap().variables.len(), 4);
    }

    #[test]
    fn trivial_algebra_satisfies_everything() {
        let lib = IdentityLibrary::builtin();
        let a = SuperAlgebra::<QuadExt>::zero(1, 2);
        let set = classify_varieties(&a, &lib).unwrap();
        assert!(VarietyTag::ALL.iter().all(|t| set.contains(*t)));
    }

    #[test]
    fn associator_expansion() {
        let id = parse_identity("assoc(x,y,z) = 0").unwrap();
        let e = id.terms[0].word.expand();
        assert_eq!(e.len(), 2);
        assert_eq!(e[1].0, -1);
    }

    #[test]
    fn display_round_trips() {
        let text = "assoc(x,y,z) + s(y,z)*assoc(x,z,y) = 0";
        let id = parse_identity(text).unwrap();
        assert_eq!(parse_identity(&id.to_string()).unwrap(), id);
    }
}
