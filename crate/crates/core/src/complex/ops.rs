use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use itertools::Itertools;

use super::{ComplexError, Simplex, SimplicialComplex, Subcomplex, Vertex};

/// Result of one barycentric subdivision.
///
/// Original vertices keep their identifiers. Every higher-dimensional face
/// receives a fresh identifier, assigned in (dimension, lexicographic) order
/// starting after the largest original vertex.
#[derive(Debug, Clone)]
pub struct SubdivisionRecord {
    pub original: Arc<SimplicialComplex>,
    pub subdivided: Arc<SimplicialComplex>,
    pub provenance: BTreeMap<Vertex, Simplex>,
}

impl SubdivisionRecord {
    /// The subdivided copy of a subcomplex of the original: the full
    /// subcomplex on barycenters of its simplices.
    pub fn lift(&self, x: &SimplicialComplex) -> Subcomplex {
        let keep: HashSet<Vertex> = self
            .provenance
            .iter()
            .filter(|(_, s)| x.contains(s))
            .map(|(&v, _)| v)
            .collect();
        Subcomplex::induced(self.subdivided.clone(), &keep)
    }
}

fn validate(c: &SimplicialComplex, x: &Subcomplex) -> Result<(), ComplexError> {
    match x.complex().facets().iter().find(|s| !c.contains(s)) {
        Some(bad) => Err(ComplexError::InvalidSubcomplex(bad.clone())),
        None => Ok(()),
    }
}

/// Closed star: every simplex of `c` meeting `x`, with all of its faces.
pub fn star(c: &Arc<SimplicialComplex>, x: &Subcomplex) -> Result<Subcomplex, ComplexError> {
    validate(c, x)?;
    let xv = x.vertex_set();
    let facets: Vec<Simplex> = c
        .facets()
        .iter()
        .filter(|f| f.vertices().iter().any(|v| xv.contains(v)))
        .cloned()
        .collect();
    Ok(Subcomplex::new_unchecked(
        c.clone(),
        SimplicialComplex::from_facets_unchecked(facets),
    ))
}

/// `{ t : t ∪ s ∈ c, t ∩ s = ∅ }`.
pub fn link(c: &SimplicialComplex, s: &Simplex) -> Result<SimplicialComplex, ComplexError> {
    if !c.contains(s) {
        return Err(ComplexError::SimplexNotInComplex(s.clone()));
    }
    let pieces: Vec<Simplex> = c
        .facets()
        .iter()
        .filter(|f| s.is_face_of(f))
        .filter_map(|f| f.difference(s))
        .collect();
    Ok(SimplicialComplex::from_simplices(pieces))
}

/// Join after shifting the vertices of `b` past those of `a`.
pub fn join(a: &SimplicialComplex, b: &SimplicialComplex) -> SimplicialComplex {
    let offset = a.vertices().last().map_or(0, |v| v + 1);
    let shifted: Vec<Simplex> = b
        .facets()
        .iter()
        .map(|f| Simplex::from_sorted(f.vertices().iter().map(|v| v + offset).collect()))
        .collect();
    if a.is_empty() {
        return SimplicialComplex::from_facets_unchecked(shifted);
    }
    if shifted.is_empty() {
        return a.clone();
    }
    let facets = a
        .facets()
        .iter()
        .cartesian_product(&shifted)
        .map(|(x, y)| x.union(y))
        .collect();
    SimplicialComplex::from_facets_unchecked(facets)
}

pub fn barycentric_subdivision(c: &SimplicialComplex) -> SubdivisionRecord {
    let mut next = c.vertices().last().map_or(0, |v| v + 1);
    let mut ids: HashMap<&Simplex, Vertex> = HashMap::new();
    let mut provenance = BTreeMap::new();
    for s in c.all_faces() {
        let id = if s.len() == 1 {
            s.vertices()[0]
        } else {
            next += 1;
            next - 1
        };
        ids.insert(s, id);
        provenance.insert(id, s.clone());
    }
    let mut facets = Vec::new();
    for f in c.facets() {
        for perm in f.vertices().iter().copied().permutations(f.len()) {
            let mut prefix: Vec<Vertex> = Vec::with_capacity(perm.len());
            let mut chain: Vec<Vertex> = Vec::with_capacity(perm.len());
            for v in perm {
                let at = prefix.partition_point(|&w| w < v);
                prefix.insert(at, v);
                chain.push(ids[&Simplex::from_sorted(prefix.clone())]);
            }
            chain.sort_unstable();
            facets.push(Simplex::from_sorted(chain));
        }
    }
    SubdivisionRecord {
        original: Arc::new(c.clone()),
        subdivided: Arc::new(SimplicialComplex::from_facets_unchecked(facets)),
        provenance,
    }
}

/// Derived neighbourhood of `x` in the second barycentric subdivision of `m`.
#[derive(Debug, Clone)]
pub struct DerivedNeighborhood {
    pub first: SubdivisionRecord,
    /// Second subdivision; `second.subdivided` is the ambient complex of every field below.
    pub second: SubdivisionRecord,
    /// Subdivided copy of `x`.
    pub x: Subcomplex,
    /// Closed star of the subdivided `x`.
    pub u: Subcomplex,
    /// Closure of the complement of `u`.
    pub v: Subcomplex,
    /// `u ∩ v`.
    pub frontier: Subcomplex,
}

impl DerivedNeighborhood {
    pub fn ambient(&self) -> &Arc<SimplicialComplex> {
        &self.second.subdivided
    }
}

pub fn derived_neighborhood(
    m: &SimplicialComplex,
    x: &Subcomplex,
) -> Result<DerivedNeighborhood, ComplexError> {
    validate(m, x)?;
    if x.complex() == m {
        return Err(ComplexError::SubcomplexEqualsComplex);
    }
    let first = barycentric_subdivision(m);
    let x1 = first.lift(x.complex());
    let second = barycentric_subdivision(&first.subdivided);
    let x2 = second.lift(x1.complex());
    let ambient = second.subdivided.clone();
    let u = star(&ambient, &x2)?;
    let xv = x2.vertex_set();
    let outside: Vec<Simplex> = ambient
        .facets()
        .iter()
        .filter(|f| f.vertices().iter().all(|v| !xv.contains(v)))
        .cloned()
        .collect();
    let v = SimplicialComplex::from_facets_unchecked(outside);
    let mut common: HashSet<Simplex> = HashSet::new();
    for f in v.facets() {
        for s in f.all_faces() {
            if u.complex().contains(&s) {
                common.insert(s);
            }
        }
    }
    let frontier = SimplicialComplex::from_simplices(common.into_iter().collect());
    Ok(DerivedNeighborhood {
        first,
        second,
        x: x2,
        u,
        v: Subcomplex::new_unchecked(ambient.clone(), v),
        frontier: Subcomplex::new_unchecked(ambient, frontier),
    })
}
