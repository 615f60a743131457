//! Superalgebras given by graded structure constants.
//!
//! The basis is ordered `e1..em, f1..fn`: the first `m` vectors are even and
//! the remaining `n` are odd. `c[i][j][k]` is the coefficient of `b_k` in the
//! product `b_i b_j`; a constant is allowed to be nonzero only when
//! `|b_k| = |b_i| + |b_j| (mod 2)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::cocycle::Theta;
use crate::linalg::{rank_of, Matrix};
use crate::scalar::{Env, Field, FieldContext, QuadExt, RatFunc, ScalarError, ScalarExpr};

/// Errors raised when building or using a superalgebra.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grading violation: b{i} b{j} has a component on b{k}")]
    Grading { i: usize, j: usize, k: usize },
    #[error("unknown basis symbol `{0}`")]
    UnknownBasis(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("type mismatch: ({0},{1}) vs ({2},{3})")]
    TypeMismatch(usize, usize, usize, usize),
    #[error("{context}: {source}")]
    Scalar {
        context: String,
        #[source]
        source: ScalarError,
    },
}

impl AlgebraError {
    pub(crate) fn scalar(context: impl Into<String>, source: ScalarError) -> Self {
        Self::Scalar { context: context.into(), source }
    }
}

/// An element of a superalgebra: its coordinates in the basis `e.., f..`.
pub type Element<F> = Vec<F>;

/// Parity of basis index `i` (0-based) in type `(m, n)`.
pub fn parity(even: usize, i: usize) -> u8 {
    u8::from(i >= even)
}

/// Name of basis vector `i` (0-based): `e1.., f1..`.
pub fn basis_name(even: usize, i: usize) -> String {
    if i < even {
        format!("e{}", i + 1)
    } else {
        format!("f{}", i - even + 1)
    }
}

/// Index of a basis symbol `eK` / `fK` in type `(m, n)`.
pub fn basis_index(even: usize, odd: usize, symbol: &str) -> Option<usize> {
    let (kind, num) = symbol.split_at(1.min(symbol.len()));
    let k: usize = num.parse().ok()?;
    match kind {
        "e" if (1..=even).contains(&k) => Some(k - 1),
        "f" if (1..=odd).contains(&k) => Some(even + k - 1),
        _ => None,
    }
}

/// A superalgebra of type `(even, odd)` with constants in `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperAlgebra<F> {
    even: usize,
    odd: usize,
    constants: Vec<F>,
    name: Option<String>,
}

impl<F: Field> SuperAlgebra<F> {
    /// The zero-product algebra of type `(even, odd)`.
    pub fn zero(even: usize, odd: usize) -> Self {
        let n = even + odd;
        Self { even, odd, constants: vec![F::zero(); n * n * n], name: None }
    }

    /// Builds an algebra from the full constant table `c[i][j][k]`
    /// (flattened in `i, j, k` order), checking the grading.
    pub fn from_constants(even: usize, odd: usize, constants: Vec<F>) -> Result<Self, AlgebraError> {
        let n = even + odd;
        if constants.len() != n * n * n {
            return Err(AlgebraError::DimensionMismatch { expected: n * n * n, found: constants.len() });
        }
        let a = Self { even, odd, constants, name: None };
        a.check_grading()?;
        Ok(a)
    }

    fn check_grading(&self) -> Result<(), AlgebraError> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !self.get(i, j, k).is_zero() && !self.allowed(i, j, k) {
                        return Err(AlgebraError::Grading { i: i + 1, j: j + 1, k: k + 1 });
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the grading allows `b_i b_j` to have a `b_k` component.
    pub fn allowed(&self, i: usize, j: usize, k: usize) -> bool {
        (self.parity(i) + self.parity(j)) % 2 == self.parity(k)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn even_dim(&self) -> usize {
        self.even
    }

    pub fn odd_dim(&self) -> usize {
        self.odd
    }

    /// `(even, odd)`.
    pub fn kind(&self) -> (usize, usize) {
        (self.even, self.odd)
    }

    pub fn dim(&self) -> usize {
        self.even + self.odd
    }

    pub fn parity(&self, i: usize) -> u8 {
        parity(self.even, i)
    }

    /// `(-1)^{|b_i||b_j|}`.
    pub fn sign(&self, i: usize, j: usize) -> F {
        if self.parity(i) * self.parity(j) == 1 {
            F::from_int(-1)
        } else {
            F::one()
        }
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.dim();
        (i * n + j) * n + k
    }

    /// The structure constant `c[i][j][k]` (0-based indices).
    pub fn get(&self, i: usize, j: usize, k: usize) -> &F {
        &self.constants[self.index(i, j, k)]
    }

    /// Sets `c[i][j][k]`, checking the grading.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: F) -> Result<(), AlgebraError> {
        if !v.is_zero() && !self.allowed(i, j, k) {
            return Err(AlgebraError::Grading { i: i + 1, j: j + 1, k: k + 1 });
        }
        let idx = self.index(i, j, k);
        self.constants[idx] = v;
        Ok(())
    }

    /// The flattened constant table.
    pub fn constants(&self) -> &[F] {
        &self.constants
    }

    /// The product `b_i b_j` as a coordinate vector.
    pub fn basis_product(&self, i: usize, j: usize) -> Element<F> {
        let n = self.dim();
        let start = self.index(i, j, 0);
        self.constants[start..start + n].to_vec()
    }

    /// The basis vector `b_i`.
    pub fn basis_vector(&self, i: usize) -> Element<F> {
        let mut v = vec![F::zero(); self.dim()];
        v[i] = F::one();
        v
    }

    /// The bilinear product `xy`.
    pub fn multiply(&self, x: &[F], y: &[F]) -> Result<Element<F>, AlgebraError> {
        let n = self.dim();
        for v in [x, y] {
            if v.len() != n {
                return Err(AlgebraError::DimensionMismatch { expected: n, found: v.len() });
            }
        }
        Ok(self.mul(x, y))
    }

    /// The bilinear product, assuming correctly sized inputs.
    pub(crate) fn mul(&self, x: &[F], y: &[F]) -> Element<F> {
        let n = self.dim();
        let mut out = vec![F::zero(); n];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                if yj.is_zero() {
                    continue;
                }
                let w = xi.mul_ref(yj);
                for (k, slot) in out.iter_mut().enumerate() {
                    let c = self.get(i, j, k);
                    if !c.is_zero() {
                        *slot = slot.add_ref(&w.mul_ref(c));
                    }
                }
            }
        }
        out
    }

    /// The symmetrized superalgebra `x∙y = ½(xy + (−1)^{|x||y|} yx)`.
    pub fn symmetrize(&self) -> Self {
        self.graded_half(true)
    }

    /// The supercommutator map `[x,y] = ½(xy − (−1)^{|x||y|} yx)`.
    pub fn supercommutator_map(&self) -> Theta<F> {
        let skew = self.graded_half(false);
        let n = self.dim();
        let components = (0..n)
            .map(|k| {
                let mut b = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        b.set(i, j, skew.get(i, j, k).clone());
                    }
                }
                b
            })
            .collect();
        Theta::from_components(self.even, self.odd, components).expect("supercommutator is super-skew and even")
    }

    fn graded_half(&self, symmetric: bool) -> Self {
        let n = self.dim();
        let half = F::from_rational(crate::scalar::ratio(1, 2));
        let mut out = Self::zero(self.even, self.odd);
        out.name = self.name.as_ref().map(|s| format!("{s}{}", if symmetric { "+" } else { "-" }));
        for i in 0..n {
            for j in 0..n {
                let s = self.sign(i, j);
                for k in 0..n {
                    let swapped = s.mul_ref(self.get(j, i, k));
                    let v = if symmetric {
                        self.get(i, j, k).add_ref(&swapped)
                    } else {
                        self.get(i, j, k).sub_ref(&swapped)
                    };
                    let idx = out.index(i, j, k);
                    out.constants[idx] = v.mul_ref(&half);
                }
            }
        }
        out
    }

    /// Whether `xy = (−1)^{|x||y|} yx` on all basis pairs.
    pub fn is_supercommutative(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let s = self.sign(i, j);
                (0..n).all(|k| *self.get(i, j, k) == s.mul_ref(self.get(j, i, k)))
            })
        })
    }

    /// Entrywise map of the constants into another field.
    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> SuperAlgebra<G> {
        SuperAlgebra {
            even: self.even,
            odd: self.odd,
            constants: self.constants.iter().map(f).collect(),
            name: self.name.clone(),
        }
    }

    /// Entrywise fallible map of the constants.
    pub fn try_map<G: Field, E>(&self, f: impl Fn(&F) -> Result<G, E>) -> Result<SuperAlgebra<G>, E> {
        Ok(SuperAlgebra {
            even: self.even,
            odd: self.odd,
            constants: self.constants.iter().map(f).collect::<Result<_, E>>()?,
            name: self.name.clone(),
        })
    }

    /// Entrywise sum of two algebras of the same type.
    pub fn plus(&self, other: &Self) -> Result<Self, AlgebraError> {
        if self.kind() != other.kind() {
            return Err(AlgebraError::TypeMismatch(self.even, self.odd, other.even, other.odd));
        }
        let constants = self.constants.iter().zip(&other.constants).map(|(a, b)| a.add_ref(b)).collect();
        Ok(Self { even: self.even, odd: self.odd, constants, name: None })
    }

    /// Whether the constant tables agree (names are ignored).
    pub fn same_constants(&self, other: &Self) -> bool {
        self.kind() == other.kind() && self.constants == other.constants
    }

    /// Indices of the even (`parity = 0`) or odd basis vectors.
    pub fn block(&self, p: u8) -> std::ops::Range<usize> {
        if p == 0 {
            0..self.even
        } else {
            self.even..self.dim()
        }
    }

    /// Rank of the span of the products `b_i b_j`, `i` in block `p`, `j` in
    /// block `q` (use `None` for the whole basis).
    pub fn product_span_dim(&self, pairs: &[(Option<u8>, Option<u8>)]) -> usize {
        let n = self.dim();
        let range = |p: Option<u8>| p.map_or(0..n, |p| self.block(p));
        let mut vecs = Vec::new();
        for &(p, q) in pairs {
            for i in range(p) {
                for j in range(q) {
                    let v = self.basis_product(i, j);
                    if v.iter().any(|c| !c.is_zero()) {
                        vecs.push(v);
                    }
                }
            }
        }
        rank_of(&vecs, n)
    }

    /// Basis-independent structural invariants.
    pub fn structural_invariants(&self) -> StructuralInvariants {
        let n = self.dim();
        let even = self.block(0);
        let even_commutative =
            even.clone().all(|i| even.clone().all(|j| self.basis_product(i, j) == self.basis_product(j, i)));
        let even_associative = even.clone().all(|i| {
            even.clone().all(|j| {
                even.clone().all(|k| {
                    let bi = self.basis_vector(i);
                    let bj = self.basis_vector(j);
                    let bk = self.basis_vector(k);
                    self.mul(&self.mul(&bi, &bj), &bk) == self.mul(&bi, &self.mul(&bj, &bk))
                })
            })
        });
        // x ↦ (x b_j)_j  and  x ↦ (b_j x)_j  as n² × n matrices.
        let ann = |left: bool| {
            let mut m = Matrix::<F>::zeros(n * n, n);
            for x in 0..n {
                for j in 0..n {
                    let v = if left { self.basis_product(x, j) } else { self.basis_product(j, x) };
                    for (k, c) in v.into_iter().enumerate() {
                        m.set(j * n + k, x, c);
                    }
                }
            }
            n - m.rank()
        };
        StructuralInvariants {
            dim_sq: self.product_span_dim(&[(None, None)]),
            dim_even_sq: self.product_span_dim(&[(Some(0), Some(0))]),
            dim_even_odd: self.product_span_dim(&[(Some(0), Some(1))]),
            dim_odd_even: self.product_span_dim(&[(Some(1), Some(0))]),
            dim_mixed: self.product_span_dim(&[(Some(0), Some(1)), (Some(1), Some(0))]),
            dim_odd_sq: self.product_span_dim(&[(Some(1), Some(1))]),
            even_commutative,
            even_associative,
            left_ann: ann(true),
            right_ann: ann(false),
        }
    }

    /// Lists the nonzero products as `b_i * b_j = ...` lines.
    pub fn product_lines(&self) -> Vec<String> {
        let n = self.dim();
        let mut lines = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.basis_product(i, j);
                if v.iter().all(Field::is_zero) {
                    continue;
                }
                lines.push(format!(
                    "{} * {} = {}",
                    basis_name(self.even, i),
                    basis_name(self.even, j),
                    format_element(self.even, &v)
                ));
            }
        }
        lines
    }
}

/// Formats coordinates as a combination of `e1.., f1..`.
pub fn format_element<F: Field>(even: usize, v: &[F]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (k, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let name = basis_name(even, k);
        let s = c.to_string();
        let term = if s == "1" {
            name
        } else if s == "-1" {
            format!("-{name}")
        } else if s.contains([' ', '/']) && !s.starts_with('(') {
            format!("({s}) {name}")
        } else {
            format!("{s} {name}")
        };
        parts.push(term);
    }
    if parts.is_empty() {
        return "0".to_string();
    }
    let mut out = parts[0].clone();
    for p in &parts[1..] {
        if let Some(rest) = p.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(p);
        }
    }
    out
}

impl<F: Field> fmt::Display for SuperAlgebra<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines = self.product_lines();
        write!(f, "{} ({},{}): ", self.name.as_deref().unwrap_or("<algebra>"), self.even, self.odd)?;
        if lines.is_empty() {
            write!(f, "all products zero")
        } else {
            write!(f, "{}", lines.join(", "))
        }
    }
}

impl SuperAlgebra<RatFunc> {
    /// Converts an algebra whose constants do not depend on `t`.
    pub fn to_constant(&self) -> Result<SuperAlgebra<QuadExt>, AlgebraError> {
        self.try_map(|c| c.to_constant().map_err(|e| AlgebraError::scalar("constant algebra", e)))
    }
}

impl SuperAlgebra<QuadExt> {
    /// Embeds the constants into ℚ(√d)(t).
    pub fn to_ratfunc(&self) -> SuperAlgebra<RatFunc> {
        self.map(|c| RatFunc::constant(c.clone()))
    }
}

/// Dimensions of product spaces and related basis-independent data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StructuralInvariants {
    /// `dim A²`.
    pub dim_sq: usize,
    /// `dim (A₀)²`.
    pub dim_even_sq: usize,
    /// `dim A₀A₁`.
    pub dim_even_odd: usize,
    /// `dim A₁A₀`.
    pub dim_odd_even: usize,
    /// `dim (A₀A₁ + A₁A₀)`.
    pub dim_mixed: usize,
    /// `dim (A₁)²`.
    pub dim_odd_sq: usize,
    /// `A₀` is commutative.
    pub even_commutative: bool,
    /// `A₀` is associative.
    pub even_associative: bool,
    /// `dim {x : xA = 0}`.
    pub left_ann: usize,
    /// `dim {x : Ax = 0}`.
    pub right_ann: usize,
}

impl StructuralInvariants {
    /// Looks an invariant up by its registry key. Booleans map to 0/1.
    pub fn value(&self, key: &str) -> Option<usize> {
        Some(match key {
            "dim_sq" => self.dim_sq,
            "dim_even_sq" => self.dim_even_sq,
            "dim_even_odd" => self.dim_even_odd,
            "dim_odd_even" => self.dim_odd_even,
            "dim_mixed" => self.dim_mixed,
            "dim_odd_sq" => self.dim_odd_sq,
            "even_commutative" => usize::from(self.even_commutative),
            "even_associative" => usize::from(self.even_associative),
            "left_ann" => self.left_ann,
            "right_ann" => self.right_ann,
            _ => return None,
        })
    }

    /// Whether `key` names a boolean invariant.
    pub fn is_boolean(key: &str) -> bool {
        matches!(key, "even_commutative" | "even_associative")
    }
}

impl fmt::Display for StructuralInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dim_sq={} dim_even_sq={} dim_even_odd={} dim_odd_even={} dim_mixed={} dim_odd_sq={} \
             even_commutative={} even_associative={} left_ann={} right_ann={}",
            self.dim_sq,
            self.dim_even_sq,
            self.dim_even_odd,
            self.dim_odd_even,
            self.dim_mixed,
            self.dim_odd_sq,
            self.even_commutative,
            self.even_associative,
            self.left_ann,
            self.right_ann
        )
    }
}

// ---------------------------------------------------------------------------
// Parametric algebras
// ---------------------------------------------------------------------------

/// A superalgebra whose constants are scalar expressions in named parameters
/// (and possibly `t`), as stored in the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricAlgebra {
    pub name: String,
    pub even: usize,
    pub odd: usize,
    pub params: Vec<String>,
    /// `((i, j, k), c)`: the product `b_i b_j` has coefficient `c` on `b_k`.
    pub entries: Vec<((usize, usize, usize), ScalarExpr)>,
}

impl ParametricAlgebra {
    /// Replaces the listed parameters by expressions (which may contain `t`
    /// or other names); the parameter list shrinks accordingly.
    pub fn substitute_params(&self, bindings: &BTreeMap<String, ScalarExpr>) -> Result<Self, AlgebraError> {
        if let Some(bad) = bindings.keys().find(|k| !self.params.contains(k)) {
            return Err(AlgebraError::UnknownParameter(bad.clone()));
        }
        let mut params: Vec<String> = self.params.iter().filter(|p| !bindings.contains_key(*p)).cloned().collect();
        for e in bindings.values() {
            for n in e.names() {
                if !params.contains(&n) {
                    params.push(n);
                }
            }
        }
        Ok(Self {
            name: self.name.clone(),
            even: self.even,
            odd: self.odd,
            params,
            entries: self.entries.iter().map(|(ijk, e)| (*ijk, e.substitute_names(bindings))).collect(),
        })
    }

    /// Evaluates every constant in `ctx` with the given parameter values.
    pub fn instantiate(&self, ctx: &FieldContext, env: &Env) -> Result<SuperAlgebra<RatFunc>, AlgebraError> {
        if let Some(bad) = env.keys().find(|k| !self.params.contains(k)) {
            return Err(AlgebraError::UnknownParameter(bad.clone()));
        }
        let mut a = SuperAlgebra::<RatFunc>::zero(self.even, self.odd).with_name(self.name.clone());
        for ((i, j, k), e) in &self.entries {
            let v = e.eval(ctx, env).map_err(|err| {
                AlgebraError::scalar(format!("{} constant c{}{}^{}", self.name, i + 1, j + 1, k + 1), err)
            })?;
            let sum = a.get(*i, *j, *k).add_ref(&v);
            a.set(*i, *j, *k, sum)?;
        }
        Ok(a)
    }

    /// Evaluates to constants in ℚ(√d); fails if a value depends on `t`.
    pub fn concrete(&self, ctx: &FieldContext, env: &Env) -> Result<SuperAlgebra<QuadExt>, AlgebraError> {
        self.instantiate(ctx, env)?.to_constant()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    /// R19: e1 e1 = e1 in type (1,2).
    fn r19() -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(0, 0, 0, q(1)).unwrap();
        a
    }

    /// R03: e1 f1 = f2, f1 e1 = −f2, f1 f2 = 2 e1.
    fn r03() -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(0, 1, 2, q(1)).unwrap();
        a.set(1, 0, 2, q(-1)).unwrap();
        a.set(1, 2, 0, q(2)).unwrap();
        a
    }

    #[test]
    fn multiply_basis() {
        let a = r19();
        assert_eq!(a.multiply(&a.basis_vector(0), &a.basis_vector(0)).unwrap(), a.basis_vector(0));
        let zero = vec![q(0); 3];
        assert_eq!(a.multiply(&zero, &a.basis_vector(0)).unwrap(), zero);
        assert!(a.multiply(&[q(1)], &zero).is_err());
    }

    #[test]
    fn grading_enforced() {
        let mut a = SuperAlgebra::<QuadExt>::zero(1, 2);
        assert!(matches!(a.set(0, 0, 1, q(1)), Err(AlgebraError::Grading { .. })));
    }

    #[test]
    fn symmetrize_r03_is_j02() {
        let s = r03().symmetrize();
        assert_eq!(*s.get(1, 2, 0), q(1));
        assert_eq!(*s.get(2, 1, 0), q(-1));
        assert!(s.get(0, 1, 2).is_zero());
        assert!(s.is_supercommutative());
        assert_eq!(s.symmetrize(), s);
    }

    #[test]
    fn supercommutator_of_r03() {
        let theta = r03().supercommutator_map();
        assert_eq!(*theta.component(0).get(1, 2), q(1));
        assert_eq!(*theta.component(2).get(0, 1), q(1));
    }

    #[test]
    fn decomposition_into_symmetric_and_skew_parts() {
        let a = r03();
        let sum = a.symmetrize().plus(&a.supercommutator_map().as_algebra()).unwrap();
        assert!(sum.same_constants(&a));
    }

    #[test]
    fn trivial_invariants() {
        let inv = SuperAlgebra::<QuadExt>::zero(2, 1).structural_invariants();
        assert_eq!(inv.dim_sq, 0);
        assert!(inv.even_commutative && inv.even_associative);
        assert_eq!(inv.left_ann, 3);
    }

    #[test]
    fn parametric_substitution() {
        let alpha = ScalarExpr::Name("alpha".into());
        let plus_one = ScalarExpr::Add(Box::new(alpha.clone()), Box::new(ScalarExpr::int(1)));
        let p = ParametricAlgebra {
            name: "R04".into(),
            even: 1,
            odd: 2,
            params: vec!["alpha".into()],
            entries: vec![((1, 2, 0), plus_one)],
        };
        let mut b = BTreeMap::new();
        b.insert("alpha".to_string(), ScalarExpr::parse("-t/(t+2)").unwrap());
        let s = p.substitute_params(&b).unwrap();
        assert!(s.params.is_empty());
        let a = s.instantiate(&FieldContext::RATIONAL, &Env::new()).unwrap();
        let expected = ScalarExpr::parse("2/(t+2)").unwrap().eval(&FieldContext::RATIONAL, &Env::new()).unwrap();
        assert_eq!(*a.get(1, 2, 0), expected);
        let mut bad = BTreeMap::new();
        bad.insert("beta".to_string(), ScalarExpr::int(1));
        assert!(p.substitute_params(&bad).is_err());
    }
}
