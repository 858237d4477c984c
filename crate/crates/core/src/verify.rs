//! Combinatorial certification that a PL map has only two critical levels.
//!
//! A vertex is classified from its lower and upper links. Regularity is
//! certified when both half-links are non-empty and ℤ₂-acyclic; that is
//! necessary for PL regularity but not sufficient (acyclic is weaker than
//! collapsible), so anything else off the extreme levels is reported as
//! `suspect_critical` rather than declared critical.

use std::collections::{HashMap, HashSet};
use std::ops::RangeBounds;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::complex::{
    orientability, ComplexError, Orientability, Simplex, SimplicialComplex, Subcomplex, Vertex,
};
use crate::homology::{duality_betti_check, homology, Coefficients, DualityReport};
use crate::plmap::PlMap;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("vertex {0} not found")]
    VertexNotFound(Vertex),
    #[error("map is defined on a different complex")]
    DomainMismatch,
    #[error("genus bound needs a 3-dimensional complex, got dimension {0}")]
    DimensionNot3(isize),
    #[error("genus bound needs a verified Reeb function")]
    NotReeb,
    #[error("extrema must be connected graphs (dimension <= 1)")]
    ExtremaNotGraphs,
    #[error("extrema Euler characteristics differ or exceed 1: {0} vs {1}")]
    ChiMismatch(i64, i64),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    MinLike,
    MaxLike,
    RegularCertified,
    SuspectCritical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexClass {
    pub vertex: Vertex,
    pub class: VertexKind,
    /// Reduced ℤ₂ Betti numbers of the lower link; empty when the link is empty.
    pub lower_betti: Vec<usize>,
    pub upper_betti: Vec<usize>,
}

fn serialize_rationals<S: Serializer>(xs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .serialize(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HeegaardBound {
    pub genus_bound: i64,
    pub case: Orientability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReebReport {
    pub is_reeb: bool,
    /// Distinct values carrying a vertex that is not `regular_certified`.
    #[serde(serialize_with = "serialize_rationals")]
    pub critical_values: Vec<BigRational>,
    /// Vertices at value 0 and at value 1.
    pub extrema: (Vec<Vertex>, Vec<Vertex>),
    /// Whether `f⁻¹(0)` equals the expected subcomplex, when one was given.
    pub zero_set_matches: Option<bool>,
    pub failures: Vec<String>,
    pub genus_bound: Option<HeegaardBound>,
    pub duality: Vec<DualityReport>,
    pub classes: Vec<VertexClass>,
}

impl ReebReport {
    pub fn class_of(&self, v: Vertex) -> Option<VertexKind> {
        self.classes.iter().find(|c| c.vertex == v).map(|c| c.class)
    }

    pub fn classification(&self) -> Vec<(Vertex, VertexKind)> {
        self.classes.iter().map(|c| (c.vertex, c.class)).collect()
    }
}

fn check_vertex(m: &SimplicialComplex, f: &PlMap, v: Vertex) -> Result<(), VerifyError> {
    if !m.has_vertex(v) || f.value(v).is_none() {
        return Err(VerifyError::VertexNotFound(v));
    }
    Ok(())
}

/// Link of `v` split into the full subcomplexes below and above it.
fn half_links(
    star_facets: &[&Simplex],
    f: &PlMap,
    v: Vertex,
) -> (SimplicialComplex, SimplicialComplex) {
    let vs = Simplex::vertex(v);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for facet in star_facets {
        let Some(rest) = facet.difference(&vs) else {
            continue;
        };
        let (lo, hi): (Vec<Vertex>, Vec<Vertex>) = rest
            .vertices()
            .iter()
            .partition(|&&w| f.compare(w, v).is_lt());
        if !lo.is_empty() {
            lower.push(Simplex::new(lo).expect("sorted subset"));
        }
        if !hi.is_empty() {
            upper.push(Simplex::new(hi).expect("sorted subset"));
        }
    }
    (
        SimplicialComplex::from_simplices(lower),
        SimplicialComplex::from_simplices(upper),
    )
}

fn star_facets(m: &SimplicialComplex, v: Vertex) -> Vec<&Simplex> {
    m.facets().iter().filter(|s| s.contains_vertex(v)).collect()
}

pub fn lower_link(
    m: &SimplicialComplex,
    f: &PlMap,
    v: Vertex,
) -> Result<SimplicialComplex, VerifyError> {
    check_vertex(m, f, v)?;
    Ok(half_links(&star_facets(m, v), f, v).0)
}

pub fn upper_link(
    m: &SimplicialComplex,
    f: &PlMap,
    v: Vertex,
) -> Result<SimplicialComplex, VerifyError> {
    check_vertex(m, f, v)?;
    Ok(half_links(&star_facets(m, v), f, v).1)
}

fn classify_from_links(
    v: Vertex,
    lower: &SimplicialComplex,
    upper: &SimplicialComplex,
) -> VertexClass {
    let lower_betti = homology(lower, Coefficients::Z2, true).betti;
    let upper_betti = homology(upper, Coefficients::Z2, true).betti;
    let class = if lower.is_empty() {
        VertexKind::MinLike
    } else if upper.is_empty() {
        VertexKind::MaxLike
    } else if lower_betti.iter().chain(&upper_betti).all(|&b| b == 0) {
        VertexKind::RegularCertified
    } else {
        VertexKind::SuspectCritical
    };
    VertexClass {
        vertex: v,
        class,
        lower_betti,
        upper_betti,
    }
}

pub fn classify_vertex(
    m: &SimplicialComplex,
    f: &PlMap,
    v: Vertex,
) -> Result<VertexClass, VerifyError> {
    check_vertex(m, f, v)?;
    let (lower, upper) = half_links(&star_facets(m, v), f, v);
    Ok(classify_from_links(v, &lower, &upper))
}

/// Classifies every vertex and decides whether `f` is a discrete Reeb function.
///
/// `is_reeb` holds when every vertex strictly between the extreme levels is
/// `regular_certified`, every `min_like` vertex sits at 0, every `max_like`
/// vertex sits at 1, and both extreme levels are non-empty. Vertices on the
/// extreme levels belong to the critical set and are not required to be regular.
pub fn verify_reeb(
    m: &SimplicialComplex,
    f: &PlMap,
    expected_x0: Option<&SimplicialComplex>,
) -> Result<ReebReport, VerifyError> {
    if **f.domain() != *m {
        return Err(VerifyError::DomainMismatch);
    }
    let mut by_vertex: HashMap<Vertex, Vec<&Simplex>> = HashMap::new();
    for s in m.facets() {
        for &v in s.vertices() {
            by_vertex.entry(v).or_default().push(s);
        }
    }
    let classes: Vec<VertexClass> = m
        .vertices()
        .par_iter()
        .map(|&v| {
            let (lower, upper) = half_links(&by_vertex[&v], f, v);
            classify_from_links(v, &lower, &upper)
        })
        .collect();

    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut failures = Vec::new();
    let mut critical: Vec<BigRational> = Vec::new();
    for c in &classes {
        let x = f.value(c.vertex).expect("domain checked");
        if c.class != VertexKind::RegularCertified {
            critical.push(x.clone());
        }
        let extreme = *x == zero || *x == one;
        match c.class {
            VertexKind::MinLike if *x != zero => failures.push(format!(
                "vertex {} is a local minimum at value {x}",
                c.vertex
            )),
            VertexKind::MaxLike if *x != one => failures.push(format!(
                "vertex {} is a local maximum at value {x}",
                c.vertex
            )),
            VertexKind::SuspectCritical if !extreme => failures.push(format!(
                "vertex {} at value {x} has non-acyclic half-links",
                c.vertex
            )),
            _ => {}
        }
    }
    critical.sort();
    critical.dedup();

    let mut x0: Vec<Vertex> = f.level_set(&zero).into_iter().collect();
    let mut x1: Vec<Vertex> = f.level_set(&one).into_iter().collect();
    x0.sort_unstable();
    x1.sort_unstable();
    if x0.is_empty() {
        failures.push("no vertex at value 0".into());
    }
    if x1.is_empty() {
        failures.push("no vertex at value 1".into());
    }
    let zero_set_matches = expected_x0.map(|expected| {
        let keep: HashSet<Vertex> = x0.iter().copied().collect();
        m.induced(&keep) == *expected
    });
    if zero_set_matches == Some(false) {
        failures.push("zero set differs from the expected subcomplex".into());
    }
    Ok(ReebReport {
        is_reeb: failures.is_empty(),
        critical_values: critical,
        extrema: (x0, x1),
        zero_set_matches,
        failures,
        genus_bound: None,
        duality: Vec::new(),
        classes,
    })
}

/// Full subcomplex on the vertices whose value lies in `range`.
pub fn interlevel_complex<R: RangeBounds<BigRational>>(f: &PlMap, range: R) -> Subcomplex {
    let keep: HashSet<Vertex> = f
        .values()
        .iter()
        .filter(|(_, x)| range.contains(x))
        .map(|(&v, _)| v)
        .collect();
    Subcomplex::induced(f.domain().clone(), &keep)
}

/// Upper bound on the Heegaard genus from extrema that are connected graphs of Euler characteristic `chi`.
pub fn genus_bound(chi: i64, case: Orientability) -> i64 {
    match case {
        Orientability::Orientable => 1 - chi,
        Orientability::NonOrientable => 2 - 2 * chi,
    }
}

pub fn heegaard_bound(
    m: &SimplicialComplex,
    report: &ReebReport,
) -> Result<HeegaardBound, VerifyError> {
    if m.dimension() != 3 {
        return Err(VerifyError::DimensionNot3(m.dimension()));
    }
    if !report.is_reeb {
        return Err(VerifyError::NotReeb);
    }
    let level = |vs: &[Vertex]| m.induced(&vs.iter().copied().collect());
    let (c0, c1) = (level(&report.extrema.0), level(&report.extrema.1));
    for c in [&c0, &c1] {
        if c.dimension() > 1 || c.connected_components().len() != 1 {
            return Err(VerifyError::ExtremaNotGraphs);
        }
    }
    let (chi0, chi1) = (c0.euler_characteristic(), c1.euler_characteristic());
    if chi0 != chi1 || chi0 > 1 {
        return Err(VerifyError::ChiMismatch(chi0, chi1));
    }
    let case = orientability(m)?;
    Ok(HeegaardBound {
        genus_bound: genus_bound(chi0, case),
        case,
    })
}

/// Fills `duality` (ℤ₂, plus ℚ when `m` is orientable) and, for a verified
/// function on a 3-dimensional complex, `genus_bound`. Inputs that are not
/// closed pseudomanifolds leave both empty.
pub fn attach_necessary_conditions(m: &SimplicialComplex, report: &mut ReebReport) {
    let level = |vs: &[Vertex]| m.induced(&vs.iter().copied().collect());
    let (x0, x1) = (level(&report.extrema.0), level(&report.extrema.1));
    report.duality.clear();
    let Ok(case) = orientability(m) else { return };
    let mut coefficients = vec![Coefficients::Z2];
    if case == Orientability::Orientable {
        coefficients.push(Coefficients::Rational);
    }
    for c in coefficients {
        if let Ok(d) = duality_betti_check(m, &x0, &x1, c) {
            report.duality.push(d);
        }
    }
    report.genus_bound = heegaard_bound(m, report).ok();
}
