//! Super-skew-symmetric bilinear maps `θ : A × A → A`, the cocycle space
//! `Z²(J, J)` of a Jordan superalgebra, the action of `Aut(J)` on it, and the
//! extension `x ∗_θ y = x∙y + θ(x, y)`.
//!
//! A [`Theta`] is stored as one matrix per output coordinate:
//! `B_k[i][j]` is the coefficient of `b_k` in `θ(b_i, b_j)`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{basis_name, format_element, parity, AlgebraError, Element, SuperAlgebra};
use crate::linalg::Matrix;

use crate::morphism::GradedMap;
use crate::registry::{AutShapeRecord, EtaRecord, ParamSampler, Registry, SamplePoint};
use crate::scalar::{Field, QuadExt};
use crate::Verdict;

/// Errors raised by cocycle operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CocycleError {
    #[error("index out of range: {0}")]
    IndexOutOfRange(usize),
    #[error("parity violation: Δ{i}{j} cannot take values along b{k}")]
    Parity { i: usize, j: usize, k: usize },
    #[error("Δ{0}{0} requires an odd index")]
    EvenDiagonal(usize),
    #[error("Δ{i}{j} requires i ≤ j")]
    Order { i: usize, j: usize },
    #[error("component {k} is not super-skew-symmetric at ({i},{j})")]
    NotSkew { i: usize, j: usize, k: usize },
    #[error("component {k} is not even at ({i},{j})")]
    NotEven { i: usize, j: usize, k: usize },
    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },
    #[error("the map is not an automorphism: {0}")]
    NotAutomorphism(String),
    #[error("the definitional and component formulas for the action disagree at B{0}")]
    PathDisagreement(usize),
    #[error("θ is not in Z²: {0}")]
    NotCocycle(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// An even super-skew-symmetric bilinear map on a superalgebra of type
/// `(even, odd)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta<F> {
    even: usize,
    odd: usize,
    components: Vec<Matrix<F>>,
}

impl<F: Field> Theta<F> {
    pub fn zero(even: usize, odd: usize) -> Self {
        let n = even + odd;
        Self { even, odd, components: vec![Matrix::zeros(n, n); n] }
    }

    /// Builds a map from its components `B_1..B_n`, checking super-skew
    /// symmetry and evenness.
    pub fn from_components(even: usize, odd: usize, components: Vec<Matrix<F>>) -> Result<Self, CocycleError> {
        let n = even + odd;
        if components.len() != n {
            return Err(CocycleError::ComponentCount { expected: n, found: components.len() });
        }
        for (k, b) in components.iter().enumerate() {
            if b.rows() != n || b.cols() != n {
                return Err(CocycleError::ComponentCount { expected: n, found: b.rows() });
            }
            for i in 0..n {
                for j in 0..n {
                    let pi = parity(even, i);
                    let pj = parity(even, j);
                    if !b.get(i, j).is_zero() && (pi + pj) % 2 != parity(even, k) {
                        return Err(CocycleError::NotEven { i: i + 1, j: j + 1, k: k + 1 });
                    }
                    // B_k[j][i] = −(−1)^{|i||j|} B_k[i][j]
                    let mirrored = if pi * pj == 1 { b.get(i, j).clone() } else { b.get(i, j).neg_ref() };
                    if *b.get(j, i) != mirrored {
                        return Err(CocycleError::NotSkew { i: i + 1, j: j + 1, k: k + 1 });
                    }
                }
            }
        }
        Ok(Self { even, odd, components })
    }

    pub fn kind(&self) -> (usize, usize) {
        (self.even, self.odd)
    }

    pub fn dim(&self) -> usize {
        self.even + self.odd
    }

    /// Component `B_k` (0-based).
    pub fn component(&self, k: usize) -> &Matrix<F> {
        &self.components[k]
    }

    pub fn components(&self) -> &[Matrix<F>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Matrix::is_zero)
    }

    /// `θ(x, y)`.
    pub fn eval(&self, x: &[F], y: &[F]) -> Element<F> {
        self.components
            .iter()
            .map(|b| {
                let by = b.mul_vec(y);
                x.iter().zip(&by).fold(F::zero(), |acc, (a, c)| {
                    if a.is_zero() || c.is_zero() {
                        acc
                    } else {
                        acc.add_ref(&a.mul_ref(c))
                    }
                })
            })
            .collect()
    }

    /// Entrywise sum.
    pub fn plus(&self, other: &Self) -> Self {
        Self {
            even: self.even,
            odd: self.odd,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        Self { even: self.even, odd: self.odd, components: self.components.iter().map(|b| b.scale(c)).collect() }
    }

    /// The bilinear map viewed as a (generally non-associative) product.
    pub fn as_algebra(&self) -> SuperAlgebra<F> {
        let n = self.dim();
        let mut a = SuperAlgebra::zero(self.even, self.odd);
        for (k, b) in self.components.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    a.set(i, j, k, b.get(i, j).clone()).expect("θ is even");
                }
            }
        }
        a
    }
}

impl<F: Field> fmt::Display for Theta<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        let mut parts = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v: Vec<F> = self.components.iter().map(|b| b.get(i, j).clone()).collect();
                if v.iter().all(Field::is_zero) {
                    continue;
                }
                parts.push(format!(
                    "θ({},{}) = {}",
                    basis_name(self.even, i),
                    basis_name(self.even, j),
                    format_element(self.even, &v)
                ));
            }
        }
        if parts.is_empty() {
            write!(f, "θ = 0")
        } else {
            write!(f, "{}", parts.join(", "))
        }
    }
}

/// The elementary map `Δ_{ij}` placed in output coordinate `target`
/// (all indices 1-based, basis order `e.., f..`).
///
/// `Δ_{ij}` has value 1 at `(i, j)`, `−(−1)^{|b_i||b_j|}` at `(j, i)`, and 1 at
/// `(i, i)` when `i = j` is odd.
pub fn delta<F: Field>(i: usize, j: usize, target: usize, dims: (usize, usize)) -> Result<Theta<F>, CocycleError> {
    let (even, odd) = dims;
    let n = even + odd;
    for idx in [i, j, target] {
        if idx == 0 || idx > n {
            return Err(CocycleError::IndexOutOfRange(idx));
        }
    }
    if i > j {
        return Err(CocycleError::Order { i, j });
    }
    if i == j && i <= even {
        return Err(CocycleError::EvenDiagonal(i));
    }
    let (pi, pj, pk) = (parity(even, i - 1), parity(even, j - 1), parity(even, target - 1));
    if (pi + pj) % 2 != pk {
        return Err(CocycleError::Parity { i, j, k: target });
    }
    let mut theta = Theta::zero(even, odd);
    let b = &mut theta.components[target - 1];
    b.set(i - 1, j - 1, F::one());
    if i != j {
        let v = if pi * pj == 1 { F::one() } else { F::from_int(-1) };
        b.set(j - 1, i - 1, v);
    }
    Ok(theta)
}

/// Checks the defining condition of `Z²(J, J)` on all basis triples:
///
/// ```text
/// (x∙y)∙z + θ(x∙y,z) + θ(x,y)∙z + θ(θ(x,y),z)
///   + (−1)^{|y||z|} [ (x∙z)∙y + θ(x∙z,y) + θ(x,z)∙y + θ(θ(x,z),y) ]
/// = x∙(y∙z) + θ(x,y∙z) + x∙θ(y,z) + θ(x,θ(y,z))
///   + (−1)^{|y||z|} [ x∙(z∙y) + θ(x,z∙y) + x∙θ(z,y) + θ(x,θ(z,y)) ].
/// ```
pub fn z2_check<F: Field>(jordan: &SuperAlgebra<F>, theta: &Theta<F>) -> Verdict {
    if jordan.kind() != theta.kind() {
        return Verdict::fail("θ and J have different types");
    }
    if !jordan.is_supercommutative() {
        return Verdict::fail("J is not supercommutative");
    }
    let n = jordan.dim();
    let bullet = |u: &[F], v: &[F]| jordan.mul(u, v);
    let th = |u: &[F], v: &[F]| theta.eval(u, v);
    let add = |a: Vec<F>, b: Vec<F>| a.iter().zip(&b).map(|(p, q)| p.add_ref(q)).collect::<Vec<F>>();
    let mut failures = Vec::new();
    for xi in 0..n {
        for yi in 0..n {
            for zi in 0..n {
                let (x, y, z) = (jordan.basis_vector(xi), jordan.basis_vector(yi), jordan.basis_vector(zi));
                let s = jordan.sign(yi, zi);
                // (a∙b)∙c + θ(a∙b,c) + θ(a,b)∙c + θ(θ(a,b),c)
                let left_half = |a: &[F], b: &[F], c: &[F]| {
                    let ab = bullet(a, b);
                    let tab = th(a, b);
                    [bullet(&ab, c), th(&ab, c), bullet(&tab, c), th(&tab, c)]
                        .into_iter()
                        .reduce(add)
                        .expect("four terms")
                };
                // x∙(b∙c) + θ(x,b∙c) + x∙θ(b,c) + θ(x,θ(b,c))
                let right_half = |b: &[F], c: &[F]| {
                    let bc = bullet(b, c);
                    let tbc = th(b, c);
                    [bullet(&x, &bc), th(&x, &bc), bullet(&x, &tbc), th(&x, &tbc)]
                        .into_iter()
                        .reduce(add)
                        .expect("four terms")
                };
                let lhs = add(left_half(&x, &y, &z), scale(&left_half(&x, &z, &y), &s));
                let rhs = add(right_half(&y, &z), scale(&right_half(&z, &y), &s));
                let residual: Vec<F> = lhs.iter().zip(&rhs).map(|(a, b)| a.sub_ref(b)).collect();
                if residual.iter().any(|c| !c.is_zero()) {
                    failures.push(format!(
                        "({},{},{}): residual {}",
                        basis_name(jordan.even_dim(), xi),
                        basis_name(jordan.even_dim(), yi),
                        basis_name(jordan.even_dim(), zi),
                        format_element(jordan.even_dim(), &residual)
                    ));
                }
            }
        }
    }
    Verdict::from_failures(failures)
}

fn scale<F: Field>(v: &[F], c: &F) -> Vec<F> {
    v.iter().map(|a| a.mul_ref(c)).collect()
}

/// The action `(θ∗φ)(x, y) = φ⁻¹ θ(φx, φy)` of an automorphism `φ` of `J`.
///
/// Computes both the definitional formula and the component formula
/// `B′_i = Σ_j b_ij φᵗ B_j φ` with `(b_ij) = φ⁻¹`, and fails if they differ.
pub fn act<F: Field>(theta: &Theta<F>, phi: &GradedMap<F>, jordan: &SuperAlgebra<F>) -> Result<Theta<F>, CocycleError> {
    let verdict = phi.is_automorphism(jordan);
    if !verdict.is_pass() {
        return Err(CocycleError::NotAutomorphism(verdict.details().join("; ")));
    }
    let definitional = act_definitional(theta, phi)?;
    let by_components = act_components(theta, phi)?;
    for k in 0..theta.dim() {
        if definitional.components[k] != by_components.components[k] {
            return Err(CocycleError::PathDisagreement(k + 1));
        }
    }
    Ok(definitional)
}

/// `(θ∗φ)(b_i, b_j) = φ⁻¹ θ(φ b_i, φ b_j)`, evaluated pair by pair.
pub fn act_definitional<F: Field>(theta: &Theta<F>, phi: &GradedMap<F>) -> Result<Theta<F>, CocycleError> {
    let p = phi.full_matrix();
    let p_inv = p.inverse().map_err(|_| CocycleError::NotAutomorphism("singular map".into()))?;
    let n = theta.dim();
    let mut comps = vec![Matrix::zeros(n, n); n];
    for i in 0..n {
        for j in 0..n {
            let v = p_inv.mul_vec(&theta.eval(&p.column(i), &p.column(j)));
            for (k, c) in v.into_iter().enumerate() {
                comps[k].set(i, j, c);
            }
        }
    }
    Theta::from_components(theta.even, theta.odd, comps)
}

/// `B′_i = Σ_j b_ij φᵗ B_j φ` with `(b_ij) = φ⁻¹`.
pub fn act_components<F: Field>(theta: &Theta<F>, phi: &GradedMap<F>) -> Result<Theta<F>, CocycleError> {
    let p = phi.full_matrix();
    let p_inv = p.inverse().map_err(|_| CocycleError::NotAutomorphism("singular map".into()))?;
    let pt = p.transpose();
    let n = theta.dim();
    let conjugated: Vec<Matrix<F>> = theta.components.iter().map(|b| pt.mul(b).mul(&p)).collect();
    let comps = (0..n)
        .map(|i| {
            (0..n).fold(Matrix::zeros(n, n), |acc, j| {
                let c = p_inv.get(i, j);
                if c.is_zero() {
                    acc
                } else {
                    acc.add(&conjugated[j].scale(c))
                }
            })
        })
        .collect();
    Theta::from_components(theta.even, theta.odd, comps)
}

/// The extension `x ∗_θ y = x∙y + θ(x, y)`; requires `θ ∈ Z²(J, J)`.
pub fn extend<F: Field>(jordan: &SuperAlgebra<F>, theta: &Theta<F>) -> Result<SuperAlgebra<F>, CocycleError> {
    let verdict = z2_check(jordan, theta);
    if !verdict.is_pass() {
        return Err(CocycleError::NotCocycle(verdict.details().first().cloned().unwrap_or_default()));
    }
    Ok(jordan.plus(&theta.as_algebra())?)
}

// ---------------------------------------------------------------------------
// Registry-driven checks
// ---------------------------------------------------------------------------

/// How many parameter draws are tried before a sample is declared
/// impossible (every draw singular or excluded).
const MAX_DRAWS: usize = 200;

/// Checks a registry cocycle family at `samples` random parameter points:
/// `θ ∈ Z²(J, J)`; the extension equals the named algebra (when `yields` is
/// set); and the named automorphism carries the source family to this one
/// (when `from`/`act` are set), with both action formulas agreeing.
pub fn check_eta(registry: &Registry, eta: &EtaRecord, samples: usize, seed: u64) -> Verdict {
    let jordan = match registry.resolve(&eta.jordan, &BTreeMap::new()) {
        Ok(j) => j,
        Err(e) => return Verdict::fail(e.to_string()),
    };
    let mut sampler = ParamSampler::new(seed);
    let mut done = 0;
    for _ in 0..MAX_DRAWS {
        if done == samples {
            break;
        }
        let point = sampler.draw(&eta.params, &[], &eta.exclude);
        match eta_at(registry, eta, &jordan, &point) {
            Ok(None) => continue,
            Ok(Some(v)) if v.is_pass() => done += 1,
            Ok(Some(v)) => return Verdict::fail(format!("at {point}: {}", v.details().join("; "))),
            Err(e) => return Verdict::fail(format!("at {point}: {e}")),
        }
        if eta.params.is_empty() {
            return Verdict::pass();
        }
    }
    if done < samples {
        return Verdict::fail(format!("only {done} of {samples} admissible samples found"));
    }
    Verdict::pass().with_note(format!("{samples} samples, seed {seed}"))
}

/// One sample of [`check_eta`]; `None` when the point is degenerate
/// (a coefficient has a pole or the automorphism is singular).
fn eta_at(
    registry: &Registry,
    eta: &EtaRecord,
    jordan: &SuperAlgebra<QuadExt>,
    point: &SamplePoint,
) -> Result<Option<Verdict>, String> {
    let Ok(theta) = registry.eta_theta(eta, point) else {
        return Ok(None);
    };
    let mut verdict = z2_check(jordan, &theta);
    if !verdict.is_pass() {
        return Ok(Some(verdict));
    }
    let env = point.env();
    let eval = |bindings: &[(String, crate::scalar::ScalarExpr)]| -> Option<BTreeMap<String, QuadExt>> {
        bindings.iter().map(|(k, e)| e.eval_const(&point.ctx, &env).ok().map(|v| (k.clone(), v))).collect()
    };
    if let Some(name) = &eta.yields {
        let Some(values) = eval(&eta.bind) else { return Ok(None) };
        let target = match registry.resolve(name, &values) {
            Ok(t) => t,
            Err(crate::registry::RegistryError::Excluded { .. }) => return Ok(None),
            Err(e) => return Err(e.to_string()),
        };
        let extended = extend(jordan, &theta).map_err(|e| e.to_string())?;
        if !extended.same_constants(&target) {
            verdict = verdict.and(Verdict::fail(format!(
                "extension [{}] differs from {name} [{}]",
                extended.product_lines().join(", "),
                target.product_lines().join(", ")
            )));
        }
    }
    if let (Some(from), Some((shape_id, act_bind))) = (&eta.from, &eta.act) {
        let source = registry.eta(from).map_err(|e| e.to_string())?;
        let shape = registry.autshape(shape_id).map_err(|e| e.to_string())?;
        let (Some(from_values), Some(act_values)) = (eval(&eta.from_bind), eval(act_bind)) else {
            return Ok(None);
        };
        let from_point = SamplePoint { ctx: point.ctx, values: from_values, label: String::new() };
        let act_point = SamplePoint { ctx: point.ctx, values: act_values, label: String::new() };
        let Ok(source_theta) = registry.eta_theta(source, &from_point) else { return Ok(None) };
        let Ok(phi) = registry.autshape_map(shape, &act_point) else { return Ok(None) };
        if !phi.is_invertible() {
            return Ok(None);
        }
        match act(&source_theta, &phi, jordan) {
            Ok(moved) if moved == theta => {}
            Ok(moved) => {
                verdict = verdict.and(Verdict::fail(format!("{from} * phi = {moved}, expected {theta}")));
            }
            Err(e) => verdict = verdict.and(Verdict::fail(e.to_string())),
        }
    }
    Ok(Some(verdict))
}

/// The decomposition `A = A⁺ + [·,·]`: the supercommutator of `a` must be a
/// cocycle of the symmetrized algebra, and extending by it must give `a` back.
pub fn check_decomposition<F: Field>(a: &SuperAlgebra<F>) -> Verdict {
    let jordan = a.symmetrize();
    let theta = a.supercommutator_map();
    let verdict = z2_check(&jordan, &theta);
    if !verdict.is_pass() {
        return verdict;
    }
    match extend(&jordan, &theta) {
        Ok(b) if b.same_constants(a) => Verdict::pass(),
        Ok(b) => Verdict::fail(format!("extension gives [{}]", b.product_lines().join(", "))),
        Err(e) => Verdict::fail(e.to_string()),
    }
}

/// A random automorphism of `shape`'s algebra (redrawing singular samples).
pub fn random_automorphism(
    registry: &Registry,
    shape: &AutShapeRecord,
    sampler: &mut ParamSampler,
) -> Option<GradedMap<QuadExt>> {
    (0..MAX_DRAWS).find_map(|_| {
        let point = sampler.draw(&shape.params, &shape.signs, &[]);
        registry.autshape_map(shape, &point).ok().filter(GradedMap::is_invertible)
    })
}

/// A random super-skew even map with every admissible `Δ_ij` component.
pub fn random_theta(even: usize, odd: usize, sampler: &mut ParamSampler) -> Theta<QuadExt> {
    let n = even + odd;
    let mut theta = Theta::zero(even, odd);
    for i in 1..=n {
        for j in i..=n {
            for k in 1..=n {
                if let Ok(d) = delta::<QuadExt>(i, j, k, (even, odd)) {
                    let c = sampler.draw(&["c".to_string()], &[], &[]).values["c"].clone();
                    theta = theta.plus(&d.scale(&c));
                }
            }
        }
    }
    theta
}

/// The action law `(θ∗φ)∗ψ = θ∗(φψ)` for `pairs` random automorphism pairs
/// of `shape`, with a random `θ` per pair. Both action formulas are
/// compared at every call.
pub fn check_action_law(registry: &Registry, shape: &AutShapeRecord, pairs: usize, seed: u64) -> Verdict {
    let jordan = match registry.resolve(&shape.jordan, &BTreeMap::new()) {
        Ok(j) => j,
        Err(e) => return Verdict::fail(e.to_string()),
    };
    let mut sampler = ParamSampler::new(seed);
    for pair in 1..=pairs {
        let (Some(phi), Some(psi)) =
            (random_automorphism(registry, shape, &mut sampler), random_automorphism(registry, shape, &mut sampler))
        else {
            return Verdict::fail("no invertible sample of the shape");
        };
        let theta = random_theta(jordan.even_dim(), jordan.odd_dim(), &mut sampler);
        let lhs = act(&theta, &phi, &jordan).and_then(|t| act(&t, &psi, &jordan));
        let rhs = act(&theta, &phi.compose(&psi), &jordan);
        match (lhs, rhs) {
            (Ok(l), Ok(r)) if l == r => {}
            (Ok(_), Ok(_)) => return Verdict::fail(format!("pair {pair}: (θ∗φ)∗ψ ≠ θ∗(φψ) for φ = {phi}, ψ = {psi}")),
            (Err(e), _) | (_, Err(e)) => return Verdict::fail(format!("pair {pair}: {e}")),
        }
    }
    Verdict::pass().with_note(format!("{pairs} pairs, seed {seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::QuadExt;

    fn q(n: i64) -> QuadExt {
        QuadExt::int(n)
    }

    /// J06: e1 e1 = e1, e1 f1 = f1 e1 = f1.
    fn j06() -> SuperAlgebra<QuadExt> {
        let mut a = SuperAlgebra::zero(1, 2);
        a.set(0, 0, 0, q(1)).unwrap();
        a.set(0, 1, 1, q(1)).unwrap();
        a.set(1, 0, 1, q(1)).unwrap();
        a
    }

    #[test]
    fn delta_shapes() {
        let d: Theta<QuadExt> = delta(2, 3, 1, (1, 2)).unwrap();
        assert_eq!(*d.component(0).get(1, 2), q(1));
        assert_eq!(*d.component(0).get(2, 1), q(1));
        let d: Theta<QuadExt> = delta(1, 2, 3, (1, 2)).unwrap();
        assert_eq!(*d.component(2).get(0, 1), q(1));
        assert_eq!(*d.component(2).get(1, 0), q(-1));
        let d: Theta<QuadExt> = delta(2, 2, 1, (1, 2)).unwrap();
        assert_eq!(*d.component(0).get(1, 1), q(1));
        assert!(matches!(delta::<QuadExt>(1, 1, 1, (1, 2)), Err(CocycleError::EvenDiagonal(1))));
        assert!(matches!(delta::<QuadExt>(2, 3, 2, (1, 2)), Err(CocycleError::Parity { .. })));
    }

    #[test]
    fn j06_extension_by_delta22_is_r18() {
        let theta = delta(2, 2, 1, (1, 2)).unwrap();
        assert!(z2_check(&j06(), &theta).is_pass());
        let r18 = extend(&j06(), &theta).unwrap();
        assert_eq!(*r18.get(1, 1, 0), q(1));
        assert_eq!(*r18.get(0, 0, 0), q(1));
        assert!(r18.symmetrize().same_constants(&j06()));
    }

    #[test]
    fn extension_by_zero_is_identity() {
        assert!(extend(&j06(), &Theta::zero(1, 2)).unwrap().same_constants(&j06()));
    }

    #[test]
    fn non_skew_components_rejected() {
        let mut b = Matrix::<QuadExt>::zeros(3, 3);
        b.set(0, 1, q(1));
        let comps = vec![Matrix::zeros(3, 3), b, Matrix::zeros(3, 3)];
        assert!(matches!(Theta::from_components(1, 2, comps), Err(CocycleError::NotSkew { .. })));
    }

    #[test]
    fn identity_action_is_trivial() {
        let theta: Theta<QuadExt> = delta(2, 2, 1, (1, 2)).unwrap();
        let id = GradedMap::identity(1, 2);
        assert_eq!(act(&theta, &id, &j06()).unwrap(), theta);
    }
}
