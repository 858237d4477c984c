//! Finite abstract simplicial complexes stored by their maximal simplices.

mod builtin;
mod manifold;
mod ops;
pub mod scx;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use itertools::Itertools;
use thiserror::Error;

pub use builtin::{builtin, builtin_suite, BUILTIN_NAMES};
pub use manifold::{is_closed_pseudomanifold, orientability, Orientability, PseudomanifoldReport};
pub use ops::{
    barycentric_subdivision, derived_neighborhood, join, link, star, DerivedNeighborhood,
    SubdivisionRecord,
};

pub type Vertex = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("no simplices given")]
    EmptyInput,
    #[error("empty simplex")]
    EmptySimplex,
    #[error("vertex {0} repeated within one simplex")]
    DuplicateVertexInSimplex(Vertex),
    #[error("dimension {requested} out of range (complex dimension {dimension})")]
    DimensionOutOfRange { requested: usize, dimension: isize },
    #[error("simplex {0} is not a face of the parent complex")]
    InvalidSubcomplex(Simplex),
    #[error("simplex {0} is not in the complex")]
    SimplexNotInComplex(Simplex),
    #[error("subcomplex must be a proper subcomplex")]
    SubcomplexEqualsComplex,
    #[error("complex is not a closed pseudomanifold")]
    NotClosedPseudomanifold,
    #[error("unknown built-in complex `{0}`")]
    UnknownName(String),
}

/// A simplex in canonical form: strictly increasing vertex identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(Vec<Vertex>);

impl Simplex {
    pub fn new(mut vertices: Vec<Vertex>) -> Result<Self, ComplexError> {
        if vertices.is_empty() {
            return Err(ComplexError::EmptySimplex);
        }
        vertices.sort_unstable();
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(ComplexError::DuplicateVertexInSimplex(w[0]));
        }
        Ok(Simplex(vertices))
    }

    /// Caller guarantees the vertices are non-empty and strictly increasing.
    pub(crate) fn from_sorted(vertices: Vec<Vertex>) -> Self {
        debug_assert!(!vertices.is_empty());
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    pub fn vertex(v: Vertex) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// Subset test on sorted vertex lists.
    pub fn is_face_of(&self, other: &Simplex) -> bool {
        if self.len() > other.len() {
            return false;
        }
        let mut it = other.0.iter();
        'outer: for v in &self.0 {
            for w in it.by_ref() {
                if w == v {
                    continue 'outer;
                }
                if w > v {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &Simplex) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// All faces with `d + 1` vertices, in lexicographic order.
    pub fn faces(&self, d: usize) -> impl Iterator<Item = Simplex> + '_ {
        self.0.iter().copied().combinations(d + 1).map(Simplex)
    }

    /// All non-empty faces, including the simplex itself.
    pub fn all_faces(&self) -> impl Iterator<Item = Simplex> + '_ {
        (0..self.len()).flat_map(move |d| self.faces(d))
    }

    /// Codimension-one faces paired with their incidence sign `(-1)^i`.
    pub fn boundary(&self) -> impl Iterator<Item = (i8, Simplex)> + '_ {
        (0..self.len()).filter(|_| self.len() > 1).map(move |i| {
            let mut vs = self.0.clone();
            vs.remove(i);
            (if i % 2 == 0 { 1 } else { -1 }, Simplex(vs))
        })
    }

    /// Vertices of `self` not in `other`, if any remain.
    pub fn difference(&self, other: &Simplex) -> Option<Simplex> {
        let vs: Vec<_> = self
            .0
            .iter()
            .copied()
            .filter(|v| !other.contains_vertex(*v))
            .collect();
        (!vs.is_empty()).then_some(Simplex(vs))
    }

    pub fn union(&self, other: &Simplex) -> Simplex {
        Simplex(
            self.0
                .iter()
                .chain(&other.0)
                .copied()
                .sorted_unstable()
                .dedup()
                .collect(),
        )
    }

    /// Ordering key used for deterministic enumeration: lower dimension first, then lexicographic.
    pub fn dim_lex_key(&self) -> (usize, &[Vertex]) {
        (self.len(), &self.0)
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.0.iter().join(","))
    }
}

#[derive(Debug, Clone, Default)]
struct FaceIndex {
    by_dim: Vec<Vec<Simplex>>,
    position: HashMap<Simplex, usize>,
}

/// A finite abstract simplicial complex described by its maximal simplices.
///
/// Immutable once built. The full face lattice is computed lazily on first
/// use and cached.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    facets: Vec<Simplex>,
    vertices: Vec<Vertex>,
    index: OnceLock<FaceIndex>,
}

impl PartialEq for SimplicialComplex {
    fn eq(&self, other: &Self) -> bool {
        self.facets == other.facets
    }
}

impl Eq for SimplicialComplex {}

impl SimplicialComplex {
    pub fn empty() -> Self {
        Self::from_facets_unchecked(Vec::new())
    }

    pub fn from_maximal_simplices<I, S>(lists: I) -> Result<Self, ComplexError>
    where
        I: IntoIterator<Item = S>,
        S: Into<Vec<Vertex>>,
    {
        let simplices = lists
            .into_iter()
            .map(|l| Simplex::new(l.into()))
            .collect::<Result<Vec<_>, _>>()?;
        if simplices.is_empty() {
            return Err(ComplexError::EmptyInput);
        }
        Ok(Self::from_simplices(simplices))
    }

    /// Builds the complex generated by arbitrary simplices, dropping every
    /// simplex that is a face of another.
    pub fn from_simplices(mut simplices: Vec<Simplex>) -> Self {
        simplices.sort_unstable_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        simplices.dedup();
        let mut kept: Vec<Simplex> = Vec::with_capacity(simplices.len());
        let mut by_vertex: HashMap<Vertex, Vec<usize>> = HashMap::new();
        for s in simplices {
            let absorbed = by_vertex.get(&s.0[0]).is_some_and(|cands| {
                cands
                    .iter()
                    .any(|&i| kept[i].len() > s.len() && s.is_face_of(&kept[i]))
            });
            if absorbed {
                continue;
            }
            for &v in &s.0 {
                by_vertex.entry(v).or_default().push(kept.len());
            }
            kept.push(s);
        }
        Self::from_facets_unchecked(kept)
    }

    /// Caller guarantees that no simplex is a face of another.
    pub(crate) fn from_facets_unchecked(mut facets: Vec<Simplex>) -> Self {
        facets.sort_unstable();
        facets.dedup();
        let vertices: BTreeSet<Vertex> = facets.iter().flat_map(|s| s.0.iter().copied()).collect();
        SimplicialComplex {
            facets,
            vertices: vertices.into_iter().collect(),
            index: OnceLock::new(),
        }
    }

    pub fn facets(&self) -> &[Simplex] {
        &self.facets
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    /// Largest simplex cardinality minus one; `-1` for the empty complex.
    pub fn dimension(&self) -> isize {
        self.facets
            .iter()
            .map(|s| s.len() as isize)
            .max()
            .unwrap_or(0)
            - 1
    }

    pub fn has_vertex(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    fn index(&self) -> &FaceIndex {
        self.index.get_or_init(|| {
            let dim = self.dimension();
            let mut by_dim: Vec<Vec<Simplex>> = vec![Vec::new(); (dim + 1).max(0) as usize];
            let mut seen: HashSet<Simplex> = HashSet::new();
            for f in &self.facets {
                for face in f.all_faces() {
                    if !seen.contains(&face) {
                        seen.insert(face.clone());
                        by_dim[face.dim()].push(face);
                    }
                }
            }
            let mut position = HashMap::with_capacity(seen.len());
            for layer in &mut by_dim {
                layer.sort_unstable();
                for (i, s) in layer.iter().enumerate() {
                    position.insert(s.clone(), i);
                }
            }
            FaceIndex { by_dim, position }
        })
    }

    /// All `d`-dimensional faces in lexicographic order.
    pub fn faces(&self, d: usize) -> Result<&[Simplex], ComplexError> {
        if d as isize > self.dimension() {
            return Err(ComplexError::DimensionOutOfRange {
                requested: d,
                dimension: self.dimension(),
            });
        }
        Ok(&self.index().by_dim[d])
    }

    /// Faces of every dimension, lowest dimension first.
    pub fn all_faces(&self) -> impl Iterator<Item = &Simplex> {
        self.index().by_dim.iter().flatten()
    }

    pub fn face_count(&self, d: usize) -> usize {
        self.index().by_dim.get(d).map_or(0, Vec::len)
    }

    pub fn f_vector(&self) -> Vec<usize> {
        self.index().by_dim.iter().map(Vec::len).collect()
    }

    /// Position of a face within the canonical order of its dimension.
    pub fn face_position(&self, s: &Simplex) -> Option<usize> {
        self.index().position.get(s).copied()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.index().position.contains_key(s)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.f_vector()
            .iter()
            .enumerate()
            .map(|(d, &n)| if d % 2 == 0 { n as i64 } else { -(n as i64) })
            .sum()
    }

    /// Vertex sets of the connected components of the 1-skeleton, each sorted,
    /// ordered by smallest vertex.
    pub fn connected_components(&self) -> Vec<Vec<Vertex>> {
        let pos: HashMap<Vertex, usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for f in &self.facets {
            let first = pos[&f.0[0]];
            for v in &f.0[1..] {
                let (a, b) = (find(&mut parent, first), find(&mut parent, pos[v]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<Vertex>> = Default::default();
        for (i, &v) in self.vertices.iter().enumerate() {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// Full subcomplex spanned by the given vertices.
    pub fn induced(&self, keep: &HashSet<Vertex>) -> SimplicialComplex {
        let pieces: Vec<Simplex> = self
            .facets
            .iter()
            .filter_map(|f| {
                let vs: Vec<_> = f.0.iter().copied().filter(|v| keep.contains(v)).collect();
                (!vs.is_empty()).then_some(Simplex(vs))
            })
            .collect();
        Self::from_simplices(pieces)
    }

    /// Neighbours of `v` in the 1-skeleton.
    pub fn neighbors(&self, v: Vertex) -> BTreeSet<Vertex> {
        self.facets
            .iter()
            .filter(|f| f.contains_vertex(v))
            .flat_map(|f| f.0.iter().copied())
            .filter(|&w| w != v)
            .collect()
    }

    /// Vertex adjacency of the 1-skeleton.
    pub fn adjacency(&self) -> HashMap<Vertex, BTreeSet<Vertex>> {
        let mut adj: HashMap<Vertex, BTreeSet<Vertex>> = self
            .vertices
            .iter()
            .map(|&v| (v, BTreeSet::new()))
            .collect();
        for f in &self.facets {
            for (a, b) in f.0.iter().tuple_combinations() {
                adj.get_mut(a).unwrap().insert(*b);
                adj.get_mut(b).unwrap().insert(*a);
            }
        }
        adj
    }
}

impl fmt::Display for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.facets.iter().join(" "))
    }
}

/// A subcomplex together with the complex it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct Subcomplex {
    parent: Arc<SimplicialComplex>,
    complex: SimplicialComplex,
}

impl Subcomplex {
    pub fn new(
        parent: Arc<SimplicialComplex>,
        simplices: Vec<Simplex>,
    ) -> Result<Self, ComplexError> {
        if let Some(bad) = simplices.iter().find(|s| !parent.contains(s)) {
            return Err(ComplexError::InvalidSubcomplex(bad.clone()));
        }
        Ok(Subcomplex {
            parent,
            complex: SimplicialComplex::from_simplices(simplices),
        })
    }

    pub fn from_complex(
        parent: Arc<SimplicialComplex>,
        complex: SimplicialComplex,
    ) -> Result<Self, ComplexError> {
        Self::new(parent, complex.facets)
    }

    pub(crate) fn new_unchecked(
        parent: Arc<SimplicialComplex>,
        complex: SimplicialComplex,
    ) -> Self {
        Subcomplex { parent, complex }
    }

    /// The full subcomplex spanned by a vertex set.
    pub fn induced(parent: Arc<SimplicialComplex>, keep: &HashSet<Vertex>) -> Self {
        let complex = parent.induced(keep);
        Subcomplex { parent, complex }
    }

    pub fn whole(parent: Arc<SimplicialComplex>) -> Self {
        let complex = (*parent).clone();
        Subcomplex { parent, complex }
    }

    pub fn parent(&self) -> &Arc<SimplicialComplex> {
        &self.parent
    }

    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn into_complex(self) -> SimplicialComplex {
        self.complex
    }

    pub fn is_proper(&self) -> bool {
        self.complex != *self.parent
    }

    pub fn vertex_set(&self) -> HashSet<Vertex> {
        self.complex.vertices().iter().copied().collect()
    }
}
