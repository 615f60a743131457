//! Property tests: field axioms, rational-function substitution and limits,
//! multilinearity of identity evaluation, and invariance under graded basis
//! changes.

use proptest::prelude::*;

use superalg_core::algebra::SuperAlgebra;
use superalg_core::cocycle::check_decomposition;
use superalg_core::identity::{check_identity, IdentityLibrary};
use superalg_core::linalg::Matrix;
use superalg_core::morphism::{apply_basis_change, even_derivation_dim, GradedMap};
use superalg_core::registry::{family_sample_values, Registry};
use superalg_core::scalar::{ratio, Field, Poly, QuadExt, RatFunc};

fn rational() -> impl Strategy<Value = superalg_core::scalar::Rational> {
    (-20i64..=20, 1i64..=6).prop_map(|(p, q)| ratio(p, q))
}

/// Elements of ℚ(√−3) (or ℚ when the irrational part is zero).
fn quad() -> impl Strategy<Value = QuadExt> {
    (rational(), rational()).prop_map(|(a, b)| QuadExt::new(a, b, -3).expect("valid context"))
}

fn poly(max_degree: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec(quad(), 1..=max_degree + 1).prop_map(Poly::from_coeffs)
}

fn ratfunc() -> impl Strategy<Value = RatFunc> {
    (poly(2), poly(1))
        .prop_filter("nonzero denominator", |(_, d)| !d.is_zero())
        .prop_map(|(n, d)| RatFunc::new(n, d).expect("nonzero denominator"))
}

/// A random structure on type (1,2) or (2,1) respecting the grading.
fn algebra() -> impl Strategy<Value = SuperAlgebra<QuadExt>> {
    prop_oneof![Just((1usize, 2usize)), Just((2, 1))].prop_flat_map(|(m, n)| {
        prop::collection::vec(-2i64..=2, 27).prop_map(move |raw| {
            let mut a = SuperAlgebra::zero(m, n);
            let mut it = raw.into_iter();
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let v = it.next().expect("27 entries");
                        if a.allowed(i, j, k) {
                            a.set(i, j, k, QuadExt::int(v)).expect("allowed entry");
                        }
                    }
                }
            }
            a
        })
    })
}

/// A random invertible graded map of the given type.
fn graded_map(m: usize, n: usize) -> impl Strategy<Value = GradedMap<QuadExt>> {
    let block = |size: usize| {
        prop::collection::vec(prop::collection::vec(-3i64..=3, size), size)
            .prop_map(|rows| {
                Matrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(QuadExt::int).collect()).collect())
            })
            .prop_filter("invertible", |m: &Matrix<QuadExt>| !m.determinant().is_zero())
    };
    (block(m), block(n)).prop_map(|(e, o)| GradedMap::from_blocks(e, o).expect("square blocks"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quad_field_axioms(a in quad(), b in quad(), c in quad()) {
        prop_assert_eq!(a.add_ref(&b), b.add_ref(&a));
        prop_assert_eq!(a.mul_ref(&b), b.mul_ref(&a));
        prop_assert_eq!(a.add_ref(&b).add_ref(&c), a.add_ref(&b.add_ref(&c)));
        prop_assert_eq!(a.mul_ref(&b).mul_ref(&c), a.mul_ref(&b.mul_ref(&c)));
        prop_assert_eq!(a.mul_ref(&b.add_ref(&c)), a.mul_ref(&b).add_ref(&a.mul_ref(&c)));
        prop_assert!(a.sub_ref(&a).is_zero());
        if !a.is_zero() {
            prop_assert!(a.mul_ref(&a.inv().unwrap()).is_one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ratfunc_field_axioms(a in ratfunc(), b in ratfunc(), c in ratfunc()) {
        prop_assert_eq!(a.add_ref(&b), b.add_ref(&a));
        prop_assert_eq!(a.mul_ref(&b.add_ref(&c)), a.mul_ref(&b).add_ref(&a.mul_ref(&c)));
        prop_assert_eq!(a.mul_ref(&b).mul_ref(&c), a.mul_ref(&b.mul_ref(&c)));
        if !a.is_zero() {
            prop_assert!(a.mul_ref(&a.inv().unwrap()).is_one());
        }
    }

    /// `f(g(t))` evaluated at `s` equals `f` evaluated at `g(s)` for Möbius `g`.
    #[test]
    fn mobius_substitution_commutes_with_evaluation(
        f in ratfunc(),
        (p, q, r, s) in (rational(), rational(), rational(), rational()),
        point in rational(),
    ) {
        let (p, q, r, s) = (QuadExt::rational(p), QuadExt::rational(q), QuadExt::rational(r), QuadExt::rational(s));
        prop_assume!(!p.mul_ref(&s).sub_ref(&q.mul_ref(&r)).is_zero());
        let g = RatFunc::new(Poly::from_coeffs(vec![q, p]), Poly::from_coeffs(vec![s, r])).unwrap();
        let x = QuadExt::rational(point);
        let Ok(gx) = g.eval_at(&x) else { return Ok(()) };
        let Ok(fgx) = f.eval_at(&gx) else { return Ok(()) };
        let composed = f.substitute(&g).unwrap();
        if let Ok(v) = composed.eval_at(&x) {
            prop_assert_eq!(v, fgx);
        }
    }

    /// Away from poles the limit is the value.
    #[test]
    fn limit_agrees_with_evaluation(f in ratfunc(), point in quad()) {
        if let Ok(v) = f.eval_at(&point) {
            prop_assert_eq!(f.limit_at(&point).unwrap(), v);
        }
    }

    /// Identity evaluation is multilinear: the residual on homogeneous
    /// combinations of basis vectors is the corresponding combination of
    /// basis-tuple residuals.
    #[test]
    fn identity_evaluation_is_multilinear(
        a in algebra(),
        which in 0usize..4,
        coeffs in prop::collection::vec(-3i64..=3, 12),
        parities in prop::collection::vec(0u8..=1, 4),
    ) {
        let library = IdentityLibrary::builtin();
        let name = ["right_alt", "assoc", "binary_perm", "binary_minus11"][which];
        let id = library.get(name).unwrap().last().unwrap().clone();
        let k = id.variables.len();
        let par = &parities[..k];
        // Homogeneous element of parity par[v] with small coefficients.
        let a_ref = &a;
        let block = |p: u8| (0..3).filter(|&i| a_ref.parity(i) == p).collect::<Vec<_>>();
        let values: Vec<Vec<QuadExt>> = (0..k)
            .map(|v| {
                let mut x = vec![QuadExt::int(0); 3];
                for (slot, i) in block(par[v]).into_iter().enumerate() {
                    x[i] = QuadExt::int(coeffs[3 * v + slot]);
                }
                x
            })
            .collect();
        let direct = id.evaluate(&a, &values, par);
        // Expand over basis tuples of the chosen parities.
        let mut expanded = vec![QuadExt::int(0); 3];
        let mut tuple = vec![0usize; k];
        let choices: Vec<Vec<usize>> = (0..k).map(|v| block(par[v])).collect();
        if choices.iter().all(|c| !c.is_empty()) {
            let mut idx = vec![0usize; k];
            'outer: loop {
                for v in 0..k {
                    tuple[v] = choices[v][idx[v]];
                }
                let weight = (0..k).fold(QuadExt::int(1), |w, v| w.mul_ref(&values[v][tuple[v]]));
                let basis: Vec<Vec<QuadExt>> = tuple.iter().map(|&i| a.basis_vector(i)).collect();
                let r = id.evaluate(&a, &basis, par);
                for (e, c) in expanded.iter_mut().zip(&r) {
                    *e = e.add_ref(&weight.mul_ref(c));
                }
                let mut v = k;
                loop {
                    if v == 0 {
                        break 'outer;
                    }
                    v -= 1;
                    idx[v] += 1;
                    if idx[v] < choices[v].len() {
                        break;
                    }
                    idx[v] = 0;
                }
            }
        }
        prop_assert_eq!(direct, expanded);
    }

    /// Basis changes preserve invariants, compose, and invert.
    #[test]
    fn basis_change_invariants((a, g, h) in algebra().prop_flat_map(|a| {
        let (m, n) = a.kind();
        (Just(a), graded_map(m, n), graded_map(m, n))
    })) {
        let library = IdentityLibrary::builtin();
        let b = apply_basis_change(&a, &g).unwrap();
        prop_assert_eq!(b.structural_invariants(), a.structural_invariants());
        prop_assert_eq!(even_derivation_dim(&b), even_derivation_dim(&a));
        prop_assert_eq!(library.varieties(&b), library.varieties(&a));
        let back = apply_basis_change(&b, &g.inverse().unwrap()).unwrap();
        prop_assert!(back.same_constants(&a));
        let stepwise = apply_basis_change(&apply_basis_change(&a, &h).unwrap(), &g).unwrap();
        let composed = apply_basis_change(&a, &g.compose(&h)).unwrap();
        prop_assert!(stepwise.same_constants(&composed));
    }

    /// Any product is its symmetrization plus its supercommutator; the sum
    /// is an extension exactly when the algebra is right alternative.
    #[test]
    fn decomposition_round_trips(a in algebra()) {
        let jordan = a.symmetrize();
        let theta = a.supercommutator_map();
        prop_assert!(jordan.plus(&theta.as_algebra()).unwrap().same_constants(&a));
        let right_alt = IdentityLibrary::builtin().check(&a, "right_alt").unwrap().is_pass();
        prop_assert_eq!(superalg_core::cocycle::extend(&jordan, &theta).is_ok(), right_alt);
    }
}

/// Every identity of the library holds in the trivial algebras.
#[test]
fn trivial_algebras_satisfy_everything() {
    let library = IdentityLibrary::builtin();
    for (m, n) in [(1, 2), (2, 1)] {
        let a = SuperAlgebra::<QuadExt>::zero(m, n);
        for name in library.names() {
            for id in library.get(name).unwrap() {
                assert!(check_identity(&a, id).is_pass(), "{name}");
            }
        }
    }
}

/// The registry's right alternative algebras decompose exactly at the
/// family sample values.
#[test]
fn registry_algebras_decompose() {
    let registry = Registry::bundled().unwrap();
    for kind in [(1, 2), (2, 1)] {
        for rec in registry.right_alternative(kind) {
            for point in rec.grid_samples(&family_sample_values()) {
                let a = rec.at(&point).unwrap();
                assert!(check_decomposition(&a).is_pass(), "{}", rec.display_name(&point));
            }
        }
    }
}
