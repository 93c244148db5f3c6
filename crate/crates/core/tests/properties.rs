use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;

use threeadic::catalog::Catalog;
use threeadic::classifier::{canonical, Classifier, FactBase, GraphQuery, GraphType, LabelTuple};
use threeadic::cusps::{cusp_set, genus_data};
use threeadic::modmat::gl2_order;
use threeadic::transform::transform_image;
use threeadic::{is_conjugate, Line, Mat2, Subgroup};

fn catalog() -> &'static Catalog {
    static CAT: OnceLock<Catalog> = OnceLock::new();
    CAT.get_or_init(|| Catalog::shipped().unwrap())
}

fn classifier() -> &'static Classifier {
    static CLS: OnceLock<Classifier> = OnceLock::new();
    CLS.get_or_init(|| Classifier::new(catalog()).unwrap())
}

fn mat(n: u32) -> impl Strategy<Value = Mat2> {
    prop::array::uniform4(0..n as i64).prop_map(move |[a, b, c, d]| Mat2::new(n, a, b, c, d))
}

fn unit_mat(n: u32) -> impl Strategy<Value = Mat2> {
    mat(n).prop_filter("invertible", |m| m.is_invertible())
}

/// Subgroups of GL2(Z/9) with surjective determinant and containing -I.
fn curve_group9() -> impl Strategy<Value = Subgroup> {
    prop::collection::vec(unit_mat(9), 1..3).prop_map(|mut gens| {
        gens.push(Mat2::new(9, 1, 0, 0, 2));
        gens.push(Mat2::minus_identity(9));
        Subgroup::generate(&gens, 9).unwrap()
    })
}

/// Level 9 subgroups stabilising the line e1 mod 3, at modulus 27.
fn borel_group() -> impl Strategy<Value = Subgroup> {
    prop::collection::vec(prop::array::uniform4(0..9i64), 1..3).prop_map(|raw| {
        let mut gens: Vec<Mat2> = raw
            .into_iter()
            .map(|[a, b, c, d]| Mat2::new(9, 3 * a + 1, b, 3 * c, 3 * d + 1))
            .collect();
        gens.push(Mat2::new(9, 1, 0, 0, 2));
        Subgroup::generate(&gens, 9).unwrap().full_preimage(27).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mul_is_associative(a in mat(27), b in mat(27), c in mat(27)) {
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn det_is_multiplicative(a in mat(27), b in mat(27)) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(u64::from(ab.det()), u64::from(a.det()) * u64::from(b.det()) % 27);
    }

    #[test]
    fn inverse_is_two_sided(a in unit_mat(27)) {
        let inv = a.inv().unwrap();
        prop_assert!(a.mul(&inv).unwrap().is_identity());
        prop_assert!(inv.mul(&a).unwrap().is_identity());
    }

    #[test]
    fn singular_matrices_have_no_inverse(a in mat(9).prop_filter("singular", |m| !m.is_invertible())) {
        prop_assert!(a.inv().is_err());
    }

    #[test]
    fn reduction_is_a_homomorphism(a in mat(27), b in mat(27)) {
        let lhs = a.mul(&b).unwrap().reduce(9).unwrap();
        let rhs = a.reduce(9).unwrap().mul(&b.reduce(9).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn double_cosets_partition_gl2(g in curve_group9()) {
        let cs = cusp_set(&g).unwrap();
        let total: u64 = (0..cs.len()).map(|k| cs.double_coset_size(k)).sum();
        prop_assert_eq!(total, gl2_order(9));
    }

    #[test]
    fn galois_action_is_an_action(g in curve_group9()) {
        let cs = cusp_set(&g).unwrap();
        for k in 0..cs.len() {
            prop_assert_eq!(cs.galois_image(1, k), Some(k));
        }
        for &a in cs.units() {
            for &b in cs.units() {
                let ab = a * b % cs.n;
                for k in 0..cs.len() {
                    let step = cs.galois_image(b, k).and_then(|j| cs.galois_image(a, j));
                    prop_assert_eq!(step, cs.galois_image(ab, k));
                }
            }
        }
    }

    #[test]
    fn genus_is_a_nonnegative_integer(g in curve_group9()) {
        let gd = genus_data(&g).unwrap();
        prop_assert_eq!(gd.index, g.index_in_gl2());
        prop_assert_eq!(gd.cusps as usize, cusp_set(&g).unwrap().len());
    }

    #[test]
    fn transform_round_trip(g in borel_group()) {
        let e1 = Line::new(3, 1, 0).unwrap();
        let e2 = Line::new(3, 0, 1).unwrap();
        let out = transform_image(&g, &e1).unwrap();
        prop_assert!(out.gens().iter().all(|m| e2.is_stable_under(m)));
        let back = transform_image(&out, &e2).unwrap();
        prop_assert!(is_conjugate(&back, &g).is_some());
    }

    #[test]
    fn identify_is_conjugation_invariant(k in 0usize..48, t in unit_mat(27)) {
        let cat = catalog();
        let e = &cat.entries()[k % cat.len()];
        let t = t.reduce(e.modulus()).unwrap();
        let conj = e.group().conjugate(&t).unwrap();
        let got = cat.identify(&conj).unwrap();
        prop_assert_eq!(got.as_deref(), Some(e.label()));
    }
}

fn queries() -> Vec<GraphQuery> {
    [
        ("L2(3)", ""),
        ("L2(3)", "3,1"),
        ("L3(9)", ""),
        ("T6", ""),
        ("T4", "2x2,2,2,2"),
        ("R4(6)", "6,2,6,2"),
        ("R4(15)", ""),
        ("R6", ""),
    ]
    .iter()
    .map(|(g, t)| GraphQuery::parse(g, t).unwrap())
    .collect()
}

fn tuple_set(ts: &[LabelTuple]) -> BTreeSet<Vec<String>> {
    ts.iter().map(|t| t.labels.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn more_facts_never_more_tuples(q in 0usize..8, keep in prop::collection::vec(any::<bool>(), 64)) {
        let q = &queries()[q];
        let all = FactBase::shipped().unwrap();
        let mut some = FactBase::empty();
        for (f, k) in all.facts().iter().zip(keep.iter().cycle()) {
            if *k {
                some.push(f.clone());
            }
        }
        let fewer = tuple_set(&classifier().classify(q, &some).unwrap());
        let more = tuple_set(&classifier().classify(q, &all).unwrap());
        let none = tuple_set(&classifier().classify(q, &FactBase::empty()).unwrap());
        prop_assert!(more.is_subset(&fewer));
        prop_assert!(fewer.is_subset(&none));
    }

    #[test]
    fn canonical_form_is_idempotent(g in prop::sample::select(GraphType::all()), picks in prop::collection::vec(0usize..48, 8)) {
        let labels: Vec<String> = catalog().labels().map(String::from).collect();
        let shape = g.shape();
        let autos = shape.automorphisms();
        let n = autos[0].len();
        let tuple: Vec<String> = picks[..n].iter().map(|&i| labels[i % labels.len()].clone()).collect();
        let c = canonical(&tuple, &autos);
        prop_assert_eq!(canonical(&c, &autos), c.clone());
        for pi in &autos {
            let moved: Vec<String> = pi.iter().map(|&i| tuple[i].clone()).collect();
            prop_assert_eq!(canonical(&moved, &autos), c.clone());
        }
    }
}
