//! Graded linear maps and what they act on: basis changes, homomorphism
//! witnesses, automorphisms, even derivations and orbit dimensions, plus the
//! invariant fingerprint used to tell algebras apart.
//!
//! Matrix convention: column `j` of a map holds the coordinates of `φ(b_j)`.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::algebra::{basis_name, format_element, AlgebraError, StructuralInvariants, SuperAlgebra};
use crate::identity::{IdentityLibrary, VarietySet};
use crate::linalg::Matrix;
use crate::scalar::{ratio, Field, QuadExt, ScalarError};
use crate::Verdict;

/// Errors raised by graded maps.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MorphismError {
    #[error("the map is singular")]
    Singular,
    #[error("type mismatch: ({0},{1}) vs ({2},{3})")]
    TypeMismatch(usize, usize, usize, usize),
    #[error("block shapes do not match type ({0},{1})")]
    Shape(usize, usize),
    #[error("the map does not preserve parity: entry ({0},{1})")]
    NotGraded(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A parity-preserving linear map `V₀ ⊕ V₁ → V₀ ⊕ V₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMap<F> {
    even: Matrix<F>,
    odd: Matrix<F>,
}

impl<F: Field> GradedMap<F> {
    pub fn identity(even: usize, odd: usize) -> Self {
        Self { even: Matrix::identity(even), odd: Matrix::identity(odd) }
    }

    /// Builds a map from its even and odd blocks.
    pub fn from_blocks(even: Matrix<F>, odd: Matrix<F>) -> Result<Self, MorphismError> {
        if !even.is_square() || !odd.is_square() {
            return Err(MorphismError::Shape(even.rows(), odd.rows()));
        }
        Ok(Self { even, odd })
    }

    /// Splits a full matrix of type `(even, odd)`, rejecting entries that mix
    /// parities.
    pub fn from_full(m: &Matrix<F>, even: usize, odd: usize) -> Result<Self, MorphismError> {
        let n = even + odd;
        if m.rows() != n || m.cols() != n {
            return Err(MorphismError::Shape(even, odd));
        }
        for i in 0..n {
            for j in 0..n {
                if (i < even) != (j < even) && !m.get(i, j).is_zero() {
                    return Err(MorphismError::NotGraded(i + 1, j + 1));
                }
            }
        }
        let block = |r: std::ops::Range<usize>| {
            Matrix::from_rows(r.clone().map(|i| r.clone().map(|j| m.get(i, j).clone()).collect()).collect())
        };
        let even_block = if even == 0 { Matrix::zeros(0, 0) } else { block(0..even) };
        let odd_block = if odd == 0 { Matrix::zeros(0, 0) } else { block(even..n) };
        Ok(Self { even: even_block, odd: odd_block })
    }

    pub fn kind(&self) -> (usize, usize) {
        (self.even.rows(), self.odd.rows())
    }

    pub fn even_block(&self) -> &Matrix<F> {
        &self.even
    }

    pub fn odd_block(&self) -> &Matrix<F> {
        &self.odd
    }

    /// The block-diagonal matrix of the map.
    pub fn full_matrix(&self) -> Matrix<F> {
        let (m, n) = self.kind();
        let mut full = Matrix::zeros(m + n, m + n);
        for i in 0..m {
            for j in 0..m {
                full.set(i, j, self.even.get(i, j).clone());
            }
        }
        for i in 0..n {
            for j in 0..n {
                full.set(m + i, m + j, self.odd.get(i, j).clone());
            }
        }
        full
    }

    pub fn is_invertible(&self) -> bool {
        !self.full_matrix().determinant().is_zero()
    }

    pub fn inverse(&self) -> Result<Self, MorphismError> {
        let inv = |b: &Matrix<F>| {
            if b.rows() == 0 {
                Ok(b.clone())
            } else {
                b.inverse().map_err(|_| MorphismError::Singular)
            }
        };
        Ok(Self { even: inv(&self.even)?, odd: inv(&self.odd)? })
    }

    /// The composite `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self { even: self.even.mul(&other.even), odd: self.odd.mul(&other.odd) }
    }

    /// `φ(x)`.
    pub fn apply(&self, x: &[F]) -> Vec<F> {
        self.full_matrix().mul_vec(x)
    }

    /// Checks that `φ` is an invertible homomorphism `A → A`.
    pub fn is_automorphism(&self, a: &SuperAlgebra<F>) -> Verdict {
        match is_homomorphism_witness(a, a, self) {
            Ok(v) if v.is_pass() && self.is_invertible() => Verdict::pass(),
            Ok(v) if v.is_pass() => Verdict::fail("singular"),
            Ok(v) => v,
            Err(e) => Verdict::fail(e.to_string()),
        }
    }
}

impl<F: Field> fmt::Display for GradedMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, _) = self.kind();
        let full = self.full_matrix();
        let parts: Vec<String> = (0..full.cols())
            .map(|j| format!("{} -> {}", basis_name(m, j), format_element(m, &full.column(j))))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// The conjugated structure `(g∗μ)(x, y) = g μ(g⁻¹x, g⁻¹y)`.
pub fn apply_basis_change<F: Field>(a: &SuperAlgebra<F>, g: &GradedMap<F>) -> Result<SuperAlgebra<F>, MorphismError> {
    if g.kind() != a.kind() {
        let (m, n) = g.kind();
        return Err(MorphismError::TypeMismatch(a.even_dim(), a.odd_dim(), m, n));
    }
    let gm = g.full_matrix();
    let gi = gm.inverse().map_err(|_| MorphismError::Singular)?;
    let n = a.dim();
    let mut out = SuperAlgebra::zero(a.even_dim(), a.odd_dim());
    for i in 0..n {
        for j in 0..n {
            let v = gm.mul_vec(&a.mul(&gi.column(i), &gi.column(j)));
            for (k, c) in v.into_iter().enumerate() {
                out.set(i, j, k, c)?;
            }
        }
    }
    Ok(match a.name() {
        Some(name) => out.with_name(name),
        None => out,
    })
}

/// Structure constants in a new basis given by rows: `E_i = Σ_j G_ij b_j`.
///
/// The product `E_i E_j`, written in the old basis, is multiplied by `G⁻¹`
/// to obtain its coordinates in the new basis. The rows must respect parity.
pub fn change_basis_rows<F: Field>(a: &SuperAlgebra<F>, rows: &Matrix<F>) -> Result<SuperAlgebra<F>, MorphismError> {
    let n = a.dim();
    if rows.rows() != n || rows.cols() != n {
        return Err(MorphismError::Shape(a.even_dim(), a.odd_dim()));
    }
    for i in 0..n {
        for j in 0..n {
            if a.parity(i) != a.parity(j) && !rows.get(i, j).is_zero() {
                return Err(MorphismError::NotGraded(i + 1, j + 1));
            }
        }
    }
    let inv = rows.inverse().map_err(|_| MorphismError::Singular)?;
    let mut out = SuperAlgebra::zero(a.even_dim(), a.odd_dim());
    for i in 0..n {
        let ei = rows.row(i);
        for j in 0..n {
            let w = a.mul(&ei, &rows.row(j));
            if w.iter().all(Field::is_zero) {
                continue;
            }
            for (k, c) in inv.vec_mul(&w).into_iter().enumerate() {
                out.set(i, j, k, c)?;
            }
        }
    }
    Ok(match a.name() {
        Some(name) => out.with_name(name),
        None => out,
    })
}

/// Checks `φ(x·_A y) = φ(x)·_B φ(y)` on all basis pairs. The verdict notes
/// whether `φ` is invertible (an invertible witness certifies `A ≅ B`).
pub fn is_homomorphism_witness<F: Field>(
    a: &SuperAlgebra<F>,
    b: &SuperAlgebra<F>,
    phi: &GradedMap<F>,
) -> Result<Verdict, MorphismError> {
    if a.kind() != b.kind() || phi.kind() != a.kind() {
        return Err(MorphismError::TypeMismatch(a.even_dim(), a.odd_dim(), b.even_dim(), b.odd_dim()));
    }
    let p = phi.full_matrix();
    let n = a.dim();
    let mut failures = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let lhs = p.mul_vec(&a.basis_product(i, j));
            let rhs = b.mul(&p.column(i), &p.column(j));
            if lhs != rhs {
                failures.push(format!(
                    "{}{}: φ(xy) = {} but φ(x)φ(y) = {}",
                    basis_name(a.even_dim(), i),
                    basis_name(a.even_dim(), j),
                    format_element(a.even_dim(), &lhs),
                    format_element(a.even_dim(), &rhs)
                ));
            }
        }
    }
    let verdict = Verdict::from_failures(failures);
    Ok(if phi.is_invertible() { verdict.with_note("invertible") } else { verdict.with_note("not invertible") })
}

/// Dimension of the space of even derivations `D(xy) = D(x)y + xD(y)`.
pub fn even_derivation_dim<F: Field>(a: &SuperAlgebra<F>) -> usize {
    let n = a.dim();
    // Unknowns D_kl (coefficient of b_k in D(b_l)) for same-parity k, l.
    let mut unknowns = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if a.parity(k) == a.parity(l) {
                unknowns.push((k, l));
            }
        }
    }
    let col = |k: usize, l: usize| unknowns.iter().position(|&u| u == (k, l));
    let mut system = Matrix::<F>::zeros(n * n * n, unknowns.len());
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let row = (i * n + j) * n + k;
                let mut add = |c: Option<usize>, v: &F, sign: bool| {
                    if let Some(c) = c {
                        if !v.is_zero() {
                            let v = if sign { v.clone() } else { v.neg_ref() };
                            let cur = system.get(row, c).add_ref(&v);
                            system.set(row, c, cur);
                        }
                    }
                };
                for l in 0..n {
                    // D(b_i b_j)_k = Σ_l c_ijl D_kl
                    add(col(k, l), a.get(i, j, l), true);
                    // (D b_i) b_j = Σ_l D_li c_ljk
                    add(col(l, i), a.get(l, j, k), false);
                    // b_i (D b_j) = Σ_l D_lj c_ilk
                    add(col(l, j), a.get(i, l, k), false);
                }
            }
        }
    }
    unknowns.len() - system.rank()
}

/// `dim O(A) = m² + n² − dim Der₀(A)`.
pub fn orbit_dim<F: Field>(a: &SuperAlgebra<F>) -> usize {
    let (m, n) = a.kind();
    m * m + n * n - even_derivation_dim(a)
}

/// Isomorphism-invariant data of an algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantRecord {
    pub structural: StructuralInvariants,
    pub varieties: VarietySet,
    pub even_derivation_dim: usize,
    pub orbit_dim: usize,
}

impl fmt::Display for InvariantRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} der0={} orbit={} varieties={}",
            self.structural, self.even_derivation_dim, self.orbit_dim, self.varieties
        )
    }
}

/// The fingerprint of `a`. Different fingerprints certify non-isomorphism;
/// equal fingerprints are inconclusive.
pub fn fingerprint(a: &SuperAlgebra<QuadExt>, library: &IdentityLibrary) -> InvariantRecord {
    let der = even_derivation_dim(a);
    let (m, n) = a.kind();
    InvariantRecord {
        structural: a.structural_invariants(),
        varieties: library.varieties(a),
        even_derivation_dim: der,
        orbit_dim: m * m + n * n - der,
    }
}

// ---------------------------------------------------------------------------
// Random sampling
// ---------------------------------------------------------------------------

/// The entries used by the Borel sampler: `{±1, ±2, ±1/2, ±3}`.
pub fn borel_entries() -> Vec<QuadExt> {
    [(1, 1), (-1, 1), (2, 1), (-2, 1), (1, 2), (-1, 2), (3, 1), (-3, 1)]
        .into_iter()
        .map(|(p, q)| QuadExt::rational(ratio(p, q)))
        .collect()
}

/// A random upper-triangular graded basis-change matrix in the row
/// convention (`E_i = Σ_{j ≥ i} G_ij b_j`, same-parity `j` only), with all
/// admissible entries drawn from [`borel_entries`].
pub fn random_borel_rows<R: Rng>(rng: &mut R, even: usize, odd: usize) -> Matrix<QuadExt> {
    let vals = borel_entries();
    let n = even + odd;
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if (i < even) == (j < even) {
                g.set(i, j, vals[rng.gen_range(0..vals.len())].clone());
            }
        }
    }
    g
}

/// A random invertible graded map with small rational entries.
pub fn random_graded_map<R: Rng>(rng: &mut R, even: usize, odd: usize) -> GradedMap<QuadExt> {
    let mut block = |size: usize| loop {
        let rows = (0..size)
            .map(|_| (0..size).map(|_| QuadExt::rational(ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3)))).collect())
            .collect::<Vec<_>>();
        let m = if size == 0 { Matrix::zeros(0, 0) } else { Matrix::from_rows(rows) };
        if size == 0 || !m.determinant().is_zero() {
            return m;
        }
    };
    let e = block(even);
    let o = block(odd);
    GradedMap { even: e, odd: o }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    fn r04(alpha: i64) -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(1, 2, 0, q(alpha + 1)).unwrap();
        a.set(2, 1, 0, q(alpha - 1)).unwrap();
        a
    }

    fn r19() -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(0, 0, 0, q(1)).unwrap();
        a
    }

    fn map(rows: Vec<Vec<i64>>) -> GradedMap<QuadExt> {
        let m = Matrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(q).collect()).collect());
        GradedMap::from_full(&m, 1, 2).unwrap()
    }

    #[test]
    fn r04_sign_witness() {
        // e1 -> e1, f1 -> f2, f2 -> -f1 (columns are images).
        let phi = map(vec![vec![1, 0, 0], vec![0, 0, -1], vec![0, 1, 0]]);
        for alpha in [-2, 1, 3] {
            let v = is_homomorphism_witness(&r04(alpha), &r04(-alpha), &phi).unwrap();
            assert!(v.is_pass(), "{v}");
        }
        let swap = map(vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]);
        assert!(!is_homomorphism_witness(&r04(2), &r04(2), &swap).unwrap().is_pass());
    }

    #[test]
    fn derivation_dimensions() {
        assert_eq!(even_derivation_dim(&SuperAlgebra::<QuadExt>::zero(1, 2)), 5);
        assert_eq!(even_derivation_dim(&r19()), 4);
        assert_eq!(orbit_dim(&r19()), 1);
        assert_eq!(orbit_dim(&SuperAlgebra::<QuadExt>::zero(1, 2)), 0);
        // R04^1: f1 f2 = 2 e1.
        assert_eq!(even_derivation_dim(&r04(1)), 2);
    }

    #[test]
    fn basis_change_identity_and_inverse() {
        let a = r04(2);
        assert_eq!(apply_basis_change(&a, &GradedMap::identity(1, 2)).unwrap(), a);
        let g = map(vec![vec![2, 0, 0], vec![0, 1, 3], vec![0, 1, 1]]);
        let b = apply_basis_change(&a, &g).unwrap();
        let back = apply_basis_change(&b, &g.inverse().unwrap()).unwrap();
        assert_eq!(back, a);
        // g is an isomorphism A -> g∗A.
        assert!(is_homomorphism_witness(&a, &b, &g).unwrap().is_pass());
    }

    #[test]
    fn row_basis_change_matches_conjugation() {
        let a = r04(3);
        let g = map(vec![vec![2, 0, 0], vec![0, 1, 3], vec![0, 1, 1]]);
        // Conjugation by g is the algebra written in the basis g⁻¹ b_i,
        // i.e. rows of (g⁻¹)ᵗ.
        let rows = g.full_matrix().inverse().unwrap().transpose();
        assert_eq!(change_basis_rows(&a, &rows).unwrap(), apply_basis_change(&a, &g).unwrap());
    }

    #[test]
    fn non_graded_rows_rejected() {
        let rows = Matrix::from_rows(vec![vec![q(1), q(1), q(0)], vec![q(0), q(1), q(0)], vec![q(0), q(0), q(1)]]);
        assert!(matches!(change_basis_rows(&r19(), &rows), Err(MorphismError::NotGraded(1, 2))));
    }
}
