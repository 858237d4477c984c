use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::{ComplexError, Simplex, SimplicialComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PseudomanifoldReport {
    pub pure: bool,
    pub ridge_degree_ok: bool,
    pub strongly_connected_per_component: bool,
    pub dimension: isize,
}

impl PseudomanifoldReport {
    pub fn passes(&self) -> bool {
        self.pure && self.ridge_degree_ok && self.strongly_connected_per_component
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientability {
    Orientable,
    NonOrientable,
}

/// Ridge -> incident facet indices.
fn ridge_incidence(c: &SimplicialComplex) -> HashMap<Simplex, Vec<usize>> {
    let mut map: HashMap<Simplex, Vec<usize>> = HashMap::new();
    for (i, f) in c.facets().iter().enumerate() {
        for (_, r) in f.boundary() {
            map.entry(r).or_default().push(i);
        }
    }
    map
}

/// Pseudomanifold evidence only; links of faces are not checked to be spheres.
///
/// Strong connectivity uses ridge adjacency: two facets are adjacent when they
/// share a codimension-one face.
pub fn is_closed_pseudomanifold(c: &SimplicialComplex) -> PseudomanifoldReport {
    let dimension = c.dimension();
    let pure = !c.is_empty() && c.facets().iter().all(|f| f.dim() as isize == dimension);
    if !pure {
        return PseudomanifoldReport {
            pure,
            ridge_degree_ok: false,
            strongly_connected_per_component: false,
            dimension,
        };
    }
    if dimension == 0 {
        // Ridges are empty; a finite set of points is a closed 0-manifold.
        return PseudomanifoldReport {
            pure,
            ridge_degree_ok: true,
            strongly_connected_per_component: true,
            dimension,
        };
    }
    let ridges = ridge_incidence(c);
    let ridge_degree_ok = ridges.values().all(|fs| fs.len() == 2);

    let n = c.facets().len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for fs in ridges.values() {
        for w in fs.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let ridge_classes = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    let strongly_connected_per_component = ridge_classes == c.connected_components().len();
    PseudomanifoldReport {
        pure,
        ridge_degree_ok,
        strongly_connected_per_component,
        dimension,
    }
}

/// Coherent orientation propagation across ridges, component by component.
pub fn orientability(c: &SimplicialComplex) -> Result<Orientability, ComplexError> {
    if !is_closed_pseudomanifold(c).passes() {
        return Err(ComplexError::NotClosedPseudomanifold);
    }
    if c.dimension() == 0 {
        return Ok(Orientability::Orientable);
    }
    let facets = c.facets();
    // For each facet, (ridge, sign of the ridge in the facet's boundary).
    let mut by_ridge: HashMap<Simplex, Vec<(usize, i8)>> = HashMap::new();
    for (i, f) in facets.iter().enumerate() {
        for (sign, r) in f.boundary() {
            by_ridge.entry(r).or_default().push((i, sign));
        }
    }
    let mut neighbours: Vec<Vec<(usize, i8)>> = vec![Vec::new(); facets.len()];
    for inc in by_ridge.values() {
        let [(a, sa), (b, sb)] = [inc[0], inc[1]];
        // Coherent iff the ridge receives opposite induced signs: o_a * sa == -(o_b * sb).
        let rel = -sa * sb;
        neighbours[a].push((b, rel));
        neighbours[b].push((a, rel));
    }
    let mut orient: Vec<i8> = vec![0; facets.len()];
    for start in 0..facets.len() {
        if orient[start] != 0 {
            continue;
        }
        orient[start] = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &(j, rel) in &neighbours[i] {
                let want = orient[i] * rel;
                if orient[j] == 0 {
                    orient[j] = want;
                    queue.push_back(j);
                } else if orient[j] != want {
                    return Ok(Orientability::NonOrientable);
                }
            }
        }
    }
    Ok(Orientability::Orientable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::builtin;

    fn cx(lists: &[&[usize]]) -> SimplicialComplex {
        SimplicialComplex::from_maximal_simplices(lists.iter().map(|l| l.to_vec())).unwrap()
    }

    #[test]
    fn sphere_three() {
        let r = is_closed_pseudomanifold(&builtin("boundary_simplex(4)").unwrap());
        assert!(r.passes());
        assert_eq!(r.dimension, 3);
    }

    #[test]
    fn open_disk_fails_ridge_degree() {
        let r = is_closed_pseudomanifold(&cx(&[&[0, 1, 2], &[1, 2, 3]]));
        assert!(r.pure);
        assert!(!r.ridge_degree_ok);
    }

    #[test]
    fn wedge_of_spheres_is_not_strongly_connected() {
        // Two tetrahedron boundaries sharing vertex 0.
        let r = is_closed_pseudomanifold(&cx(&[
            &[0, 1, 2],
            &[0, 1, 3],
            &[0, 2, 3],
            &[1, 2, 3],
            &[0, 4, 5],
            &[0, 4, 6],
            &[0, 5, 6],
            &[4, 5, 6],
        ]));
        assert!(r.pure && r.ridge_degree_ok);
        assert!(!r.strongly_connected_per_component);
    }

    #[test]
    fn impure_complex() {
        let r = is_closed_pseudomanifold(&cx(&[&[0, 1, 2], &[2, 3]]));
        assert!(!r.pure);
    }

    #[test]
    fn orientations() {
        assert_eq!(
            orientability(&builtin("boundary_simplex(3)").unwrap()),
            Ok(Orientability::Orientable)
        );
        assert_eq!(
            orientability(&builtin("torus_7vertex").unwrap()),
            Ok(Orientability::Orientable)
        );
        assert_eq!(
            orientability(&builtin("rp2_6vertex").unwrap()),
            Ok(Orientability::NonOrientable)
        );
        assert_eq!(
            orientability(&builtin("circle(5)").unwrap()),
            Ok(Orientability::Orientable)
        );
        assert_eq!(
            orientability(&cx(&[&[0, 1, 2]])),
            Err(ComplexError::NotClosedPseudomanifold)
        );
    }
}
