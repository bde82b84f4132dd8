use std::sync::Arc;

use proptest::prelude::*;

use hochsheaf::colimit::{BasisPresheaf, CochainPresheaf, ColimitPresheaf};
use hochsheaf::hochschild::{build_complex, Cochain, HochschildComplex};
use hochsheaf::linalg::{add_scaled, Field, Scalar};
use hochsheaf::model::{fixture_names, load_model, Model};

fn model(name: &str) -> Model {
    load_model(name, None).unwrap()
}

fn full(name: &str, n: usize) -> HochschildComplex {
    let m = model(name);
    build_complex(&m.basis, &m.presheaf, n).unwrap()
}

fn sign(k: usize) -> i64 {
    if k.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `Σ c_i x_i` over cochains of one degree.
fn combo(cx: &HochschildComplex, terms: &[(i64, &Cochain)]) -> Cochain {
    let degree = terms[0].1.degree;
    let mut out = cx.zero(degree).unwrap();
    for (c, x) in terms {
        assert_eq!(x.degree, degree);
        add_scaled(&mut out.values, &Scalar::from_i64(cx.field(), *c), &x.values);
    }
    out
}

fn is_zero(c: &Cochain) -> bool {
    c.values.iter().all(Scalar::is_zero)
}

fn basis_cochains(cx: &HochschildComplex, p: usize) -> Vec<Cochain> {
    (0..cx.layout(p).dim()).map(|i| cx.basis_cochain(p, i).unwrap()).collect()
}

fn leibniz_holds(cx: &HochschildComplex, f: &Cochain, g: &Cochain) -> bool {
    let p = f.degree;
    let lhs = cx.apply_d(&cx.cup(f, g).unwrap()).unwrap();
    let a = cx.cup(&cx.apply_d(f).unwrap(), g).unwrap();
    let b = cx.cup(f, &cx.apply_d(g).unwrap()).unwrap();
    is_zero(&combo(cx, &[(1, &lhs), (-1, &a), (-sign(p), &b)]))
}

#[test]
fn leibniz_rule_on_full_cochain_spaces() {
    for name in ["point_dual", "chain2"] {
        let cx = full(name, 3);
        for p in 0..=2 {
            for q in 0..=(2 - p) {
                for f in basis_cochains(&cx, p) {
                    for g in basis_cochains(&cx, q) {
                        assert!(leibniz_holds(&cx, &f, &g), "{name} degrees {p},{q}");
                    }
                }
            }
        }
    }
}

#[test]
fn bracket_is_graded_antisymmetric_and_satisfies_jacobi() {
    for name in ["point_dual", "chain2"] {
        let cx = full(name, 3);
        let by_degree: Vec<Vec<Cochain>> = (0..=3).map(|p| basis_cochains(&cx, p)).collect();
        for p in 0..=3 {
            for q in 0..=3 {
                if p + q == 0 || p + q > 4 {
                    continue;
                }
                for f in &by_degree[p] {
                    for g in &by_degree[q] {
                        let fg = cx.bracket(f, g).unwrap();
                        let gf = cx.bracket(g, f).unwrap();
                        let s = sign((p + 1) * (q + 1));
                        assert!(is_zero(&combo(&cx, &[(1, &fg), (s, &gf)])), "{name} {p},{q}");
                    }
                }
            }
        }
        for p in 1..=3 {
            for q in 1..=3 {
                for r in 1..=3 {
                    if p + q + r > 5 {
                        continue;
                    }
                    for f in &by_degree[p] {
                        for g in &by_degree[q] {
                            for h in &by_degree[r] {
                                let t1 = cx.bracket(f, &cx.bracket(g, h).unwrap()).unwrap();
                                let t2 = cx.bracket(g, &cx.bracket(h, f).unwrap()).unwrap();
                                let t3 = cx.bracket(h, &cx.bracket(f, g).unwrap()).unwrap();
                                let sum = combo(
                                    &cx,
                                    &[
                                        (sign((p + 1) * (r + 1)), &t1),
                                        (sign((q + 1) * (p + 1)), &t2),
                                        (sign((r + 1) * (q + 1)), &t3),
                                    ],
                                );
                                assert!(is_zero(&sum), "{name} Jacobi {p},{q},{r}");
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn multiplication_brackets_to_zero_on_every_model() {
    for name in fixture_names() {
        let cx = full(name, 4);
        let m = cx.composition_cochain().unwrap();
        assert!(is_zero(&cx.bracket(&m, &m).unwrap()), "{name}");
    }
}

#[test]
fn cup_is_commutative_on_cohomology() {
    let cx = full("point_dual", 4);
    for p in 0..=1 {
        for q in 0..=1 {
            for f in &cx.cohomology(p).unwrap().representatives {
                for g in &cx.cohomology(q).unwrap().representatives {
                    let fg = cx.cup(f, g).unwrap();
                    let gf = cx.cup(g, f).unwrap();
                    let diff = combo(&cx, &[(1, &fg), (-sign(p * q), &gf)]);
                    assert!(cx.is_coboundary(&diff).unwrap(), "degrees {p},{q}");
                }
            }
        }
    }
}

/// `d² = 0` and `d` commutes with every restriction, as matrix identities.
fn check_chain_maps<C: CochainPresheaf>(c: &C, label: &str) {
    let space = c.space();
    let n = c.truncation();
    let opens: Vec<_> = space.opens().into_iter().filter(|u| !u.is_empty()).collect();
    for &u in &opens {
        let cu = c.complex_at(u).unwrap();
        for p in 0..n.saturating_sub(1) {
            let dd = cu.differential(p + 1).unwrap().mul(cu.differential(p).unwrap()).unwrap();
            assert!(dd.is_zero(), "{label}: d² on {}", space.name(u));
        }
        for &v in opens.iter().filter(|v| v.is_subset(u)) {
            let cv = c.complex_at(v).unwrap();
            for p in 0..n {
                let left = cu.projection_matrix(&cv, p + 1).unwrap().mul(cu.differential(p).unwrap()).unwrap();
                let right = cv.differential(p).unwrap().mul(&cu.projection_matrix(&cv, p).unwrap()).unwrap();
                assert_eq!(left, right, "{label}: {} → {} degree {p}", space.name(u), space.name(v));
            }
        }
    }
}

#[test]
fn restrictions_are_chain_maps() {
    for name in fixture_names() {
        let m = model(name);
        let generated = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).unwrap();
        check_chain_maps(&generated, name);
        let single = BasisPresheaf::new(m.presheaf.clone(), m.basis.clone(), 4);
        check_chain_maps(&single, name);
    }
}

#[test]
fn golden_cohomology() {
    let dims = |name: &str| -> Vec<usize> {
        let cx = full(name, 4);
        (0..3).map(|q| cx.cohomology_dim(q).unwrap()).collect()
    };
    assert_eq!(dims("point_field"), vec![1, 0, 0]);
    assert_eq!(dims("point_dual"), vec![2, 1, 1]);
    assert_eq!(dims("chain2"), vec![1, 0, 0]);
    let m = model("pseudocircle");
    let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).unwrap();
    let x = c.complex_at(m.space.whole()).unwrap();
    assert_eq!((0..3).map(|q| x.cohomology_dim(q).unwrap()).collect::<Vec<_>>(), vec![1, 1, 0]);
    assert_eq!(full("point_triangular", 4).cohomology_dim(0).unwrap(), 1);
}

#[test]
fn prime_field_reruns_match_rationals() {
    let f5 = Field::prime(5).unwrap();
    for name in fixture_names() {
        let q = model(name);
        let p = load_model(name, Some(f5)).unwrap();
        assert_eq!(p.field(), f5);
        let cq = ColimitPresheaf::generated(q.presheaf.clone(), &q.basis, 4).unwrap();
        let cp = ColimitPresheaf::generated(p.presheaf.clone(), &p.basis, 4).unwrap();
        for u in q.space.opens().into_iter().filter(|u| !u.is_empty()) {
            let a = cq.complex_at(u).unwrap();
            let b = cp.complex_at(u).unwrap();
            assert_eq!(a.dims(), b.dims());
            for k in 0..4 {
                assert_eq!(a.cohomology_dim(k).unwrap(), b.cohomology_dim(k).unwrap(), "{name} {k}");
            }
        }
    }
}

fn refinement_is_quasi_isomorphism(name: &str) -> bool {
    let m = model(name);
    let c = ColimitPresheaf::generated(m.presheaf.clone(), &m.basis, 4).unwrap();
    let x = m.space.whole();
    let top = Arc::new(build_complex(&m.basis, &m.presheaf, 4).unwrap());
    let terminal = c.complex_at(x).unwrap();
    (0..3).all(|q| {
        let rank = top.induced_rank(&terminal, q).unwrap();
        rank == top.cohomology_dim(q).unwrap() && rank == terminal.cohomology_dim(q).unwrap()
    })
}

#[test]
fn refining_the_generating_basis_preserves_cohomology_except_on_the_cone() {
    for name in fixture_names() {
        assert_eq!(refinement_is_quasi_isomorphism(name), name != "pseudocircle_redundant", "{name}");
    }
}

fn small_cochain(cx: &HochschildComplex, p: usize, coeffs: &[i64]) -> Cochain {
    let dim = cx.layout(p).dim();
    let values = (0..dim).map(|i| Scalar::from_i64(cx.field(), coeffs[i % coeffs.len()])).collect();
    cx.cochain(p, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leibniz_on_random_cochains(
        p in 0usize..=1,
        q in 0usize..=1,
        a in prop::collection::vec(-3i64..=3, 1..12),
        b in prop::collection::vec(-3i64..=3, 1..12),
    ) {
        let cx = full("chain2_dual", 3);
        let f = small_cochain(&cx, p, &a);
        let g = small_cochain(&cx, q, &b);
        prop_assert!(leibniz_holds(&cx, &f, &g));
    }

    #[test]
    fn d_squares_to_zero_on_random_cochains(
        p in 0usize..=2,
        a in prop::collection::vec(-5i64..=5, 1..20),
    ) {
        let cx = full("point_triangular", 4);
        let f = small_cochain(&cx, p, &a);
        prop_assert!(is_zero(&cx.apply_d(&cx.apply_d(&f).unwrap()).unwrap()));
    }

    #[test]
    fn differential_is_bracket_with_multiplication(
        p in 0usize..=2,
        a in prop::collection::vec(-3i64..=3, 1..12),
    ) {
        let cx = full("chain2_dual", 4);
        let f = small_cochain(&cx, p, &a);
        let m = cx.composition_cochain().unwrap();
        let df = cx.apply_d(&f).unwrap();
        let br = cx.bracket(&m, &f).unwrap();
        prop_assert!(is_zero(&combo(&cx, &[(1, &df), (-sign(p + 1), &br)])));
    }
}
