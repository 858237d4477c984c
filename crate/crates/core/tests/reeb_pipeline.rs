use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use reebforge::complex::{builtin, orientability, Orientability, SimplicialComplex, Subcomplex};
use reebforge::construct::{
    assign_values, build_pl_reeb, glue_pl, reparameterize, spine, ConstructError, ReebBuild,
    Reparameterization,
};
use reebforge::homology::{homology, Coefficients};
use reebforge::plmap::PlMap;
use reebforge::verify::{genus_bound, interlevel_complex, lower_link, verify_reeb, VertexKind};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn build(name: &str, x: &[Vec<usize>]) -> ReebBuild {
    let m = builtin(name).unwrap();
    let x = Subcomplex::new(
        Arc::new(m.clone()),
        x.iter()
            .map(|s| reebforge::complex::Simplex::new(s.clone()).unwrap())
            .collect(),
    )
    .unwrap();
    build_pl_reeb(&m, &x, 3).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn octahedron_build() -> &'static ReebBuild {
    static CELL: OnceLock<ReebBuild> = OnceLock::new();
    CELL.get_or_init(|| build("octahedron", &[vec![0]]))
}

fn torus_build() -> &'static ReebBuild {
    static CELL: OnceLock<ReebBuild> = OnceLock::new();
    CELL.get_or_init(|| build("torus_7vertex", &[vec![0, 1], vec![1, 3], vec![0, 3]]))
}

fn vertex_set(c: &SimplicialComplex) -> HashSet<usize> {
    c.vertices().iter().copied().collect()
}

#[test]
fn extreme_levels_are_exactly_x0_and_x1() {
    for b in [octahedron_build(), torus_build()] {
        let zero = b.f.level_set(&BigRational::zero());
        let one = b.f.level_set(&BigRational::one());
        assert_eq!(zero, vertex_set(b.x0.complex()));
        assert_eq!(one, vertex_set(b.x1.complex()));
        assert!(zero.is_disjoint(&one));
        for s in b.x0.complex().all_faces() {
            assert!(s
                .vertices()
                .iter()
                .all(|v| b.f.value(*v).unwrap().is_zero()));
        }
        for s in b.x1.complex().all_faces() {
            assert!(s.vertices().iter().all(|v| b.f.value(*v).unwrap().is_one()));
        }
    }
}

#[test]
fn collapse_steps_preserve_homotopy_invariants() {
    for (name, x) in [
        ("boundary_simplex(2)", vec![vec![0]]),
        ("octahedron", vec![vec![0]]),
        ("torus_7vertex", vec![vec![0, 1]]),
    ] {
        let b = build(name, &x);
        let mut faces: HashSet<_> = b.neighborhood.v.complex().all_faces().cloned().collect();
        let start = SimplicialComplex::from_simplices(faces.iter().cloned().collect());
        let reference = homology(&start, Coefficients::Z2, false).betti;
        let trim = |mut v: Vec<usize>| {
            while v.len() > 1 && v.last() == Some(&0) {
                v.pop();
            }
            v
        };
        for (free, coface) in &b.collapse.steps {
            assert!(
                faces.remove(free) && faces.remove(coface),
                "{name}: step removes faces not present"
            );
            let c = SimplicialComplex::from_simplices(faces.iter().cloned().collect());
            assert_eq!(
                c.euler_characteristic(),
                start.euler_characteristic(),
                "{name}"
            );
            assert_eq!(
                trim(homology(&c, Coefficients::Z2, false).betti),
                trim(reference.clone()),
                "{name}"
            );
        }
        assert_eq!(
            faces,
            b.x1.complex().all_faces().cloned().collect::<HashSet<_>>(),
            "{name}"
        );
    }
}

#[test]
fn spine_of_a_disk_is_a_point() {
    let c = Arc::new(
        SimplicialComplex::from_maximal_simplices([vec![0, 1, 2], vec![0, 2, 3], vec![0, 3, 4]])
            .unwrap(),
    );
    let s = spine(&Subcomplex::whole(c));
    assert_eq!(s.residue.complex().vertex_count(), 1);
    assert_eq!(s.residue.complex().facets().len(), 1);
}

#[test]
fn spine_of_an_annulus_is_a_circle() {
    // Triangulated annulus: inner triangle 0 1 2, outer triangle 3 4 5.
    let facets = [
        [0, 1, 3],
        [1, 3, 4],
        [1, 2, 4],
        [2, 4, 5],
        [2, 0, 5],
        [0, 5, 3],
    ]
    .map(|f| f.to_vec());
    let c = Arc::new(SimplicialComplex::from_maximal_simplices(facets).unwrap());
    let s = spine(&Subcomplex::whole(c));
    let r = s.residue.complex();
    assert_eq!(r.dimension(), 1);
    assert_eq!(r.euler_characteristic(), 0);
}

#[test]
fn builds_pass_duality() {
    for b in [octahedron_build(), torus_build()] {
        let m = b.complex();
        let expected = if orientability(m).unwrap() == Orientability::Orientable {
            2
        } else {
            1
        };
        assert_eq!(b.report.duality.len(), expected);
        assert!(b.report.duality.iter().all(|d| d.pass));
    }
}

#[test]
fn construction_preconditions() {
    let m = builtin("octahedron").unwrap();
    let whole = Subcomplex::whole(Arc::new(m.clone()));
    assert!(matches!(
        build_pl_reeb(&m, &whole, 3),
        Err(ConstructError::SubcomplexEqualsComplex)
    ));
    let open_disk = SimplicialComplex::from_maximal_simplices([vec![0, 1, 2]]).unwrap();
    let x = Subcomplex::induced(Arc::new(open_disk.clone()), &HashSet::from([0]));
    assert!(matches!(
        build_pl_reeb(&open_disk, &x, 3),
        Err(ConstructError::NotClosedPseudomanifold)
    ));
}

#[test]
fn assign_values_puts_free_vertices_strictly_inside() {
    let m = Arc::new(builtin("boundary_simplex(3)").unwrap());
    let f = assign_values(&m, &HashSet::from([0]), &HashSet::from([3])).unwrap();
    assert!(f.value(0).unwrap().is_zero());
    assert!(f.value(3).unwrap().is_one());
    let mid: Vec<_> = [1, 2]
        .iter()
        .map(|v| f.value(*v).unwrap().clone())
        .collect();
    assert!(mid
        .iter()
        .all(|x| *x > BigRational::zero() && *x < BigRational::one()));
}

#[test]
fn gluing_requires_frontier_agreement() {
    let m = Arc::new(builtin("octahedron").unwrap());
    let lower = Arc::new(
        SimplicialComplex::from_maximal_simplices([
            vec![0, 2, 4],
            vec![0, 2, 5],
            vec![0, 3, 4],
            vec![0, 3, 5],
        ])
        .unwrap(),
    );
    let upper = Arc::new(
        SimplicialComplex::from_maximal_simplices([
            vec![1, 2, 4],
            vec![1, 2, 5],
            vec![1, 3, 4],
            vec![1, 3, 5],
        ])
        .unwrap(),
    );
    let frontier =
        SimplicialComplex::from_maximal_simplices([vec![2, 4], vec![2, 5], vec![3, 4], vec![3, 5]])
            .unwrap();
    let vals = |pairs: &[(usize, BigRational)]| pairs.iter().cloned().collect::<BTreeMap<_, _>>();
    let half = rat(1, 2);
    let fu = PlMap::from_values(
        lower,
        vals(&[
            (0, rat(0, 1)),
            (2, half.clone()),
            (3, half.clone()),
            (4, half.clone()),
            (5, half.clone()),
        ]),
    )
    .unwrap();
    let fv = PlMap::from_values(
        upper.clone(),
        vals(&[
            (1, rat(1, 1)),
            (2, half.clone()),
            (3, half.clone()),
            (4, half.clone()),
            (5, half.clone()),
        ]),
    )
    .unwrap();
    let glued = glue_pl(&fu, &fv, &frontier).unwrap();
    assert_eq!(glued.domain().as_ref(), m.as_ref());
    assert!(verify_reeb(&m, &glued, None).unwrap().is_reeb);
    let bad = PlMap::from_values(
        upper,
        vals(&[
            (1, rat(1, 1)),
            (2, rat(1, 3)),
            (3, half.clone()),
            (4, half.clone()),
            (5, half),
        ]),
    )
    .unwrap();
    assert!(matches!(
        glue_pl(&fu, &bad, &frontier),
        Err(ConstructError::BoundaryMismatch(2))
    ));
}

#[test]
fn heegaard_arithmetic() {
    assert_eq!(genus_bound(1, Orientability::Orientable), 0);
    assert_eq!(genus_bound(0, Orientability::Orientable), 1);
    assert_eq!(genus_bound(0, Orientability::NonOrientable), 2);
    assert_eq!(genus_bound(-1, Orientability::Orientable), 2);
}

#[test]
fn interlevel_sets_of_verified_functions_stay_connected() {
    // 0-1-2 is not a facet boundary, so it does not separate the torus.
    let nonseparating = build("torus_7vertex", &[vec![0, 1], vec![1, 2], vec![0, 2]]);
    let mut checked = 0;
    for b in [octahedron_build(), torus_build(), &nonseparating] {
        assert!(b.report.is_reeb);
        if b.x0.complex().connected_components().len() != 1
            || b.x1.complex().connected_components().len() != 1
        {
            continue;
        }
        checked += 1;
        for k in 1..10 {
            let eps = rat(k, 10);
            let above = interlevel_complex(
                &b.f,
                (
                    std::ops::Bound::Excluded(eps.clone()),
                    std::ops::Bound::Included(BigRational::one()),
                ),
            );
            let below = interlevel_complex(&b.f, BigRational::zero()..eps);
            assert_eq!(
                above.complex().connected_components().len(),
                1,
                "above {k}/10"
            );
            assert_eq!(
                below.complex().connected_components().len(),
                1,
                "below {k}/10"
            );
        }
    }
    assert_eq!(checked, 2);
}

#[test]
fn separating_cycle_gives_two_maximum_components() {
    // {0, 1, 3} is a facet: the cycle bounds a disk on one side.
    assert_eq!(torus_build().x1.complex().connected_components().len(), 2);
}

/// `Σ_v (1 − χ(Lk⁻(v)))` over unreduced Euler characteristics of lower links.
fn morse_count(m: &SimplicialComplex, f: &PlMap) -> i64 {
    m.vertices()
        .iter()
        .map(|&v| 1 - lower_link(m, f, v).unwrap().euler_characteristic())
        .sum()
}

fn surface() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "octahedron",
        "torus_7vertex",
        "rp2_6vertex",
        "boundary_simplex(3)",
    ])
}

fn knots() -> impl Strategy<Value = Reparameterization> {
    (
        prop::collection::btree_set(1u32..99, 0..5),
        prop::collection::btree_set(1u32..99, 0..5),
    )
        .prop_map(|(xs, ys)| {
            let n = xs.len().min(ys.len());
            let mut k = vec![(BigRational::zero(), BigRational::zero())];
            k.extend(
                xs.into_iter()
                    .zip(ys)
                    .take(n)
                    .map(|(x, y)| (rat(x as i64, 100), rat(y as i64, 100))),
            );
            k.push((BigRational::one(), BigRational::one()));
            Reparameterization::PiecewiseLinear(k)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn morse_count_equals_euler_characteristic(name in surface(), seed in any::<u64>()) {
        let m = Arc::new(builtin(name).unwrap());
        let mut order = m.vertices().to_vec();
        let n = order.len();
        // A seeded shuffle gives a generic injective order.
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let values = order.iter().enumerate().map(|(i, &v)| (v, rat(i as i64, n as i64 - 1))).collect();
        let f = PlMap::from_values(m.clone(), values).unwrap();
        prop_assert_eq!(morse_count(&m, &f), m.euler_characteristic());
    }

    #[test]
    fn every_map_has_a_minimum_and_a_maximum(name in surface(), raw in prop::collection::vec(0i64..4, 7)) {
        let m = Arc::new(builtin(name).unwrap());
        let values = m.vertices().iter().map(|&v| (v, rat(raw[v % raw.len()], 3))).collect();
        let f = PlMap::from_values(m.clone(), values).unwrap();
        let kinds: Vec<VertexKind> = verify_reeb(&m, &f, None).unwrap().classes.iter().map(|c| c.class).collect();
        prop_assert!(kinds.contains(&VertexKind::MinLike));
        prop_assert!(kinds.contains(&VertexKind::MaxLike));
    }

    #[test]
    fn monotone_reparameterization_keeps_classification(g in knots(), power in 1u32..4, which in 0usize..2) {
        let b = [octahedron_build(), torus_build()][which];
        let m = b.complex();
        for g in [g, Reparameterization::Power(power)] {
            let h = reparameterize(&b.f, &g).unwrap();
            let r = verify_reeb(m, &h, None).unwrap();
            prop_assert_eq!(r.classification(), b.report.classification());
            prop_assert_eq!(r.is_reeb, b.report.is_reeb);
        }
    }
}
