//! Discrete construction of a Reeb function with a prescribed zero set:
//! derived neighbourhood of `X`, spine of the complement by elementary
//! collapses, and a value assignment ordered by the discrete harmonic
//! function that is 0 on `X` and 1 on the spine.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::complex::{
    barycentric_subdivision, derived_neighborhood, is_closed_pseudomanifold, ComplexError,
    DerivedNeighborhood, Simplex, SimplicialComplex, Subcomplex, Vertex,
};
use crate::plmap::{PlMap, PlMapError};
use crate::verify::{attach_necessary_conditions, verify_reeb, ReebReport, VerifyError};

pub const DEFAULT_MAX_RETRIES: usize = 3;

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("subcomplex must be a proper subcomplex")]
    SubcomplexEqualsComplex,
    #[error("ambient complex is not a closed pseudomanifold")]
    NotClosedPseudomanifold,
    #[error("connected component containing vertex {0} does not meet the subcomplex")]
    ComponentWithoutX(Vertex),
    #[error("no verified Reeb function after {attempts} attempt(s)")]
    RetriesExhausted {
        attempts: usize,
        candidate: Box<ReebBuild>,
    },
    #[error("maps disagree on shared vertex {0}")]
    BoundaryMismatch(Vertex),
    #[error("reparameterization is not strictly increasing on the stored values")]
    NotMonotone,
    #[error("value {0} has no exact root of the requested order")]
    InexactRoot(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Map(#[from] PlMapError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// Elementary collapses performed in order, and what was left.
#[derive(Debug, Clone)]
pub struct CollapseSequence {
    /// `(free face, its unique coface)` pairs.
    pub steps: Vec<(Simplex, Simplex)>,
    pub residue: Subcomplex,
}

/// Greedy maximal collapse. Among free faces the lowest-dimensional,
/// lexicographically smallest one is removed first.
pub fn spine(v: &Subcomplex) -> CollapseSequence {
    let c = v.complex();
    // Alive simplices -> alive cofacets.
    let mut cofacets: HashMap<Simplex, BTreeSet<Simplex>> = c
        .all_faces()
        .map(|s| (s.clone(), BTreeSet::new()))
        .collect();
    for s in c.all_faces() {
        for (_, r) in s.boundary() {
            cofacets.get_mut(&r).expect("face-closed").insert(s.clone());
        }
    }
    let free_partner =
        |cof: &HashMap<Simplex, BTreeSet<Simplex>>, s: &Simplex| -> Option<Simplex> {
            let set = cof.get(s)?;
            if set.len() != 1 {
                return None;
            }
            let t = set.first().expect("one element");
            cof[t].is_empty().then(|| t.clone())
        };
    let key = |s: &Simplex| (s.len(), s.vertices().to_vec());
    let mut queue: BTreeSet<(usize, Vec<Vertex>)> = cofacets
        .keys()
        .filter(|s| free_partner(&cofacets, s).is_some())
        .map(key)
        .collect();
    let mut steps = Vec::new();
    while let Some((_, vs)) = queue.pop_first() {
        let s = Simplex::new(vs).expect("canonical");
        let Some(t) = free_partner(&cofacets, &s) else {
            continue;
        };
        cofacets.remove(&s);
        cofacets.remove(&t);
        let mut touched: Vec<Simplex> = Vec::new();
        for (_, r) in t.boundary().chain(s.boundary()) {
            if let Some(set) = cofacets.get_mut(&r) {
                set.remove(&t);
                set.remove(&s);
                touched.push(r);
            }
        }
        // Faces that just became maximal may free their own faces.
        let newly_maximal: Vec<Simplex> = touched
            .iter()
            .filter(|r| cofacets[*r].is_empty())
            .cloned()
            .collect();
        for r in newly_maximal {
            touched.extend(r.boundary().map(|(_, x)| x));
        }
        queue.remove(&key(&t));
        for r in touched {
            if free_partner(&cofacets, &r).is_some() {
                queue.insert(key(&r));
            } else {
                queue.remove(&key(&r));
            }
        }
        steps.push((s, t));
    }
    let remaining: Vec<Simplex> = cofacets
        .into_iter()
        .filter(|(_, cof)| cof.is_empty())
        .map(|(s, _)| s)
        .collect();
    let residue =
        Subcomplex::new(v.parent().clone(), remaining).expect("residue lies in the parent");
    CollapseSequence { steps, residue }
}

/// Multi-source breadth-first edge distance; `usize::MAX` when unreachable.
fn edge_distance(
    adj: &HashMap<Vertex, BTreeSet<Vertex>>,
    sources: &HashSet<Vertex>,
) -> HashMap<Vertex, usize> {
    let mut dist: HashMap<Vertex, usize> = adj.keys().map(|&v| (v, usize::MAX)).collect();
    let mut queue = VecDeque::new();
    for &s in sources {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[&v] + 1;
        for &w in &adj[&v] {
            if dist[&w] == usize::MAX {
                dist.insert(w, d);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Discrete harmonic extension of the boundary data `0` on `x0`, `1` on `x1`:
/// every other vertex is the mean of its neighbours. Solved by conjugate
/// gradients on the graph Laplacian restricted to the free vertices.
fn harmonic_extension(
    adj: &HashMap<Vertex, BTreeSet<Vertex>>,
    free: &[Vertex],
    x1: &HashSet<Vertex>,
) -> HashMap<Vertex, f64> {
    let index: HashMap<Vertex, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let n = free.len();
    let degree: Vec<f64> = free.iter().map(|v| adj[v].len() as f64).collect();
    let rhs: Vec<f64> = free
        .iter()
        .map(|v| adj[v].iter().filter(|w| x1.contains(w)).count() as f64)
        .collect();
    let nbrs: Vec<Vec<usize>> = free
        .iter()
        .map(|v| {
            adj[v]
                .iter()
                .filter_map(|w| index.get(w).copied())
                .collect()
        })
        .collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = degree[i] * x[i] - nbrs[i].iter().map(|&j| x[j]).sum::<f64>();
        }
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // Jacobi-preconditioned CG.
    let mut x: Vec<f64> = rhs.iter().zip(&degree).map(|(b, d)| b / d).collect();
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&degree).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let scale = dot(&rhs, &rhs).sqrt().max(1.0);
    let mut ap = vec![0.0; n];
    for _ in 0..10 * n + 100 {
        if dot(&r, &r).sqrt() <= 1e-15 * scale {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] / degree[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    free.iter().copied().zip(x).collect()
}

/// Values `0` on `x0`, `1` on `x1`, and `i/(N+1)` elsewhere, ranked by the
/// discrete harmonic extension of that boundary data. Ties fall back to
/// `(d_x0, −d_x1, vertex)` with `d` the edge distance; the same order is the tie-break.
pub fn assign_values(
    m: &Arc<SimplicialComplex>,
    x0: &HashSet<Vertex>,
    x1: &HashSet<Vertex>,
) -> Result<PlMap, PlMapError> {
    let adj = m.adjacency();
    let d0 = edge_distance(&adj, x0);
    let d1 = edge_distance(&adj, x1);
    let inner: Vec<Vertex> = m
        .vertices()
        .iter()
        .copied()
        .filter(|v| !x0.contains(v) && !x1.contains(v))
        .collect();
    let mut h = harmonic_extension(&adj, &inner, x1);
    for &v in x0 {
        h.insert(v, 0.0);
    }
    for &v in x1 {
        h.insert(v, 1.0);
    }
    let mut order: Vec<Vertex> = m.vertices().to_vec();
    order.sort_by(|a, b| {
        h[a].total_cmp(&h[b])
            .then((d0[a], Reverse(d1[a]), a).cmp(&(d0[b], Reverse(d1[b]), b)))
    });
    let denom = BigInt::from(inner.len() + 1);
    let mut values: BTreeMap<Vertex, BigRational> = BTreeMap::new();
    let mut next = 0;
    for &v in &order {
        let value = if x0.contains(&v) {
            BigRational::zero()
        } else if x1.contains(&v) {
            BigRational::one()
        } else {
            next += 1;
            BigRational::new(BigInt::from(next), denom.clone())
        };
        values.insert(v, value);
    }
    PlMap::new(m.clone(), values, &order)
}

/// One candidate of the construction with everything needed to audit it.
#[derive(Debug, Clone)]
pub struct ReebBuild {
    pub f: PlMap,
    /// Subdivided copy of `X`; equals `f⁻¹(0)` on success.
    pub x0: Subcomplex,
    /// Spine of the complement of the derived neighbourhood; `f⁻¹(1)`.
    pub x1: Subcomplex,
    pub neighborhood: DerivedNeighborhood,
    pub collapse: CollapseSequence,
    pub report: ReebReport,
    /// Barycentric subdivisions applied to the input complex.
    pub subdivisions: usize,
}

impl ReebBuild {
    pub fn complex(&self) -> &Arc<SimplicialComplex> {
        self.neighborhood.ambient()
    }
}

fn build_once(
    m: &SimplicialComplex,
    x: &Subcomplex,
    extra: usize,
) -> Result<ReebBuild, ConstructError> {
    let neighborhood = derived_neighborhood(m, x)?;
    let ambient = neighborhood.ambient().clone();
    let collapse = spine(&neighborhood.v);
    let x0 = neighborhood.x.clone();
    let x1 = collapse.residue.clone();
    let f = assign_values(&ambient, &x0.vertex_set(), &x1.vertex_set())?;
    let mut report = verify_reeb(&ambient, &f, Some(x0.complex()))?;
    attach_necessary_conditions(&ambient, &mut report);
    Ok(ReebBuild {
        f,
        x0,
        x1,
        neighborhood,
        collapse,
        report,
        subdivisions: 2 + extra,
    })
}

/// Builds a PL Reeb function on a subdivision of `m` whose zero set is the
/// subdivided `x`. A rejected candidate triggers one more subdivision, up to
/// `max_retries` times.
pub fn build_pl_reeb(
    m: &SimplicialComplex,
    x: &Subcomplex,
    max_retries: usize,
) -> Result<ReebBuild, ConstructError> {
    if !is_closed_pseudomanifold(m).passes() {
        return Err(ConstructError::NotClosedPseudomanifold);
    }
    if let Some(bad) = x.complex().facets().iter().find(|s| !m.contains(s)) {
        return Err(ComplexError::InvalidSubcomplex(bad.clone()).into());
    }
    if x.complex() == m {
        return Err(ConstructError::SubcomplexEqualsComplex);
    }
    let xv = x.vertex_set();
    if let Some(comp) = m
        .connected_components()
        .into_iter()
        .find(|comp| !comp.iter().any(|v| xv.contains(v)))
    {
        return Err(ConstructError::ComponentWithoutX(comp[0]));
    }
    let mut current_m = m.clone();
    let mut current_x = x.clone();
    let mut attempt = 0;
    loop {
        let build = build_once(&current_m, &current_x, attempt)?;
        if build.report.is_reeb {
            return Ok(build);
        }
        if attempt == max_retries {
            return Err(ConstructError::RetriesExhausted {
                attempts: attempt + 1,
                candidate: Box::new(build),
            });
        }
        let rec = barycentric_subdivision(&current_m);
        current_x = rec.lift(current_x.complex());
        current_m = (*rec.subdivided).clone();
        attempt += 1;
    }
}

/// Combines maps on two pieces that agree on their common vertices.
pub fn glue_pl(
    fu: &PlMap,
    fv: &PlMap,
    frontier: &SimplicialComplex,
) -> Result<PlMap, ConstructError> {
    for &v in frontier.vertices() {
        match (fu.value(v), fv.value(v)) {
            (Some(a), Some(b)) if a == b => {}
            _ => return Err(ConstructError::BoundaryMismatch(v)),
        }
    }
    let mut values: BTreeMap<Vertex, BigRational> = fu.values().clone();
    for (&v, x) in fv.values() {
        if let Some(prev) = values.insert(v, x.clone()) {
            if prev != *x {
                return Err(ConstructError::BoundaryMismatch(v));
            }
        }
    }
    // Merge the two effective orders: successor edges from each, then a
    // deterministic topological sort preferring lower value, then the U side.
    let mut succ: HashMap<Vertex, Vec<Vertex>> = HashMap::new();
    let mut indeg: HashMap<Vertex, usize> = values.keys().map(|&v| (v, 0)).collect();
    let mut priority: HashMap<Vertex, (usize, usize)> = HashMap::new();
    for (side, f) in [fu, fv].into_iter().enumerate() {
        let order = f.ordered_vertices();
        for (i, &v) in order.iter().enumerate() {
            priority.entry(v).or_insert((side, i));
        }
        for w in order.windows(2) {
            succ.entry(w[0]).or_default().push(w[1]);
            *indeg.get_mut(&w[1]).expect("known vertex") += 1;
        }
    }
    type Entry = Reverse<(BigRational, (usize, usize), Vertex)>;
    let mut heap: BinaryHeap<Entry> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&v, _)| Reverse((values[&v].clone(), priority[&v], v)))
        .collect();
    let mut order = Vec::with_capacity(values.len());
    while let Some(Reverse((_, _, v))) = heap.pop() {
        order.push(v);
        for &w in succ.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indeg.get_mut(&w).expect("known vertex");
            *d -= 1;
            if *d == 0 {
                heap.push(Reverse((values[&w].clone(), priority[&w], w)));
            }
        }
    }
    if order.len() != values.len() {
        // The two orders disagree on some pair of shared vertices.
        let stuck = indeg
            .iter()
            .find(|(_, &d)| d > 0)
            .map(|(&v, _)| v)
            .unwrap_or_default();
        return Err(ConstructError::BoundaryMismatch(stuck));
    }
    let union: Vec<Simplex> = fu
        .domain()
        .facets()
        .iter()
        .chain(fv.domain().facets())
        .cloned()
        .collect();
    let domain = Arc::new(SimplicialComplex::from_simplices(union));
    Ok(PlMap::new(domain, values, &order)?)
}

/// Strictly increasing self-maps of `[0, 1]` fixing both endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reparameterization {
    Identity,
    /// `t ↦ tⁿ`, `n ≥ 1`.
    Power(u32),
    /// `t ↦ t^{1/n}`; exact only on values that are perfect `n`-th powers.
    Root(u32),
    /// Linear interpolation through knots from `(0, 0)` to `(1, 1)`.
    PiecewiseLinear(Vec<(BigRational, BigRational)>),
}

fn exact_root(x: &BigRational, n: u32) -> Option<BigRational> {
    let (num, den) = (x.numer(), x.denom());
    let (rn, rd) = (num.nth_root(n), den.nth_root(n));
    (Pow::pow(&rn, n) == *num && Pow::pow(&rd, n) == *den).then(|| BigRational::new(rn, rd))
}

impl Reparameterization {
    pub fn apply(&self, t: &BigRational) -> Result<BigRational, ConstructError> {
        match self {
            Reparameterization::Identity => Ok(t.clone()),
            Reparameterization::Power(n) => Ok(Pow::pow(t, *n)),
            Reparameterization::Root(n) => {
                exact_root(t, *n).ok_or_else(|| ConstructError::InexactRoot(t.to_string()))
            }
            Reparameterization::PiecewiseLinear(knots) => {
                let seg = knots
                    .windows(2)
                    .find(|w| w[0].0 <= *t && *t <= w[1].0)
                    .ok_or(ConstructError::NotMonotone)?;
                let ((x0, y0), (x1, y1)) = (&seg[0], &seg[1]);
                Ok(y0 + (y1 - y0) * (t - x0) / (x1 - x0))
            }
        }
    }

    fn validate(&self) -> Result<(), ConstructError> {
        let ok = match self {
            Reparameterization::Identity => true,
            Reparameterization::Power(n) | Reparameterization::Root(n) => *n >= 1,
            Reparameterization::PiecewiseLinear(knots) => {
                knots.len() >= 2
                    && knots.first() == Some(&(BigRational::zero(), BigRational::zero()))
                    && knots.last() == Some(&(BigRational::one(), BigRational::one()))
                    && knots.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ConstructError::NotMonotone)
        }
    }
}

/// `g ∘ f` with the tie-break order unchanged.
pub fn reparameterize(f: &PlMap, g: &Reparameterization) -> Result<PlMap, ConstructError> {
    g.validate()?;
    let mut values = BTreeMap::new();
    for (&v, x) in f.values() {
        values.insert(v, g.apply(x)?);
    }
    // Strictness on the stored values: the induced order must not change.
    let ordered = f.ordered_vertices();
    for w in ordered.windows(2) {
        let (a, b) = (&f.values()[&w[0]], &f.values()[&w[1]]);
        let (ga, gb) = (&values[&w[0]], &values[&w[1]]);
        if (a < b && ga >= gb) || (a == b && ga != gb) {
            return Err(ConstructError::NotMonotone);
        }
    }
    Ok(f.with_values(values)?)
}
