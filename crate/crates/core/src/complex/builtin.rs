use itertools::Itertools;

use super::{ComplexError, Simplex, SimplicialComplex};

pub const BUILTIN_NAMES: &[&str] = &[
    "boundary_simplex(n)",
    "rp2_6vertex",
    "torus_7vertex",
    "octahedron",
    "circle(k)",
];

/// Standard triangulations by name.
///
/// * `boundary_simplex(n)`: all `n`-subsets of `{0..=n}`, the boundary of the `n`-simplex (`n >= 1`).
/// * `rp2_6vertex`: the minimal 6-vertex real projective plane, 10 triangles.
/// * `torus_7vertex`: the Möbius torus, triangles `{i,i+1,i+3}` and `{i,i+2,i+3}` mod 7.
/// * `octahedron`: boundary of the cross-polytope; antipodal pairs `(0,1)`, `(2,3)`, `(4,5)`.
/// * `circle(k)`: the `k`-cycle, `k >= 3`.
pub fn builtin(name: &str) -> Result<SimplicialComplex, ComplexError> {
    let unknown = || ComplexError::UnknownName(name.to_string());
    let name = name.trim();
    let arg = |prefix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?
            .strip_prefix('(')?
            .strip_suffix(')')?
            .trim()
            .parse()
            .ok()
    };
    let facets: Vec<Vec<usize>> = if let Some(n) = arg("boundary_simplex") {
        if n == 0 {
            return Err(unknown());
        }
        (0..=n).combinations(n).collect()
    } else if let Some(k) = arg("circle") {
        if k < 3 {
            return Err(unknown());
        }
        (0..k).map(|i| vec![i, (i + 1) % k]).collect()
    } else {
        match name {
            "rp2_6vertex" => vec![
                vec![0, 1, 2],
                vec![0, 2, 3],
                vec![0, 3, 4],
                vec![0, 4, 5],
                vec![0, 5, 1],
                vec![1, 2, 4],
                vec![2, 3, 5],
                vec![3, 4, 1],
                vec![4, 5, 2],
                vec![5, 1, 3],
            ],
            "torus_7vertex" => (0..7)
                .flat_map(|i| {
                    [
                        vec![i, (i + 1) % 7, (i + 3) % 7],
                        vec![i, (i + 2) % 7, (i + 3) % 7],
                    ]
                })
                .collect(),
            "octahedron" => [0, 1]
                .into_iter()
                .cartesian_product([2, 3])
                .cartesian_product([4, 5])
                .map(|((a, b), c)| vec![a, b, c])
                .collect(),
            _ => return Err(unknown()),
        }
    };
    let simplices = facets
        .into_iter()
        .map(Simplex::new)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimplicialComplex::from_facets_unchecked(simplices))
}

/// The named complexes exercised by the test suites.
pub fn builtin_suite() -> Vec<(&'static str, SimplicialComplex)> {
    [
        "circle(3)",
        "circle(4)",
        "circle(6)",
        "boundary_simplex(2)",
        "boundary_simplex(3)",
        "boundary_simplex(4)",
        "octahedron",
        "torus_7vertex",
        "rp2_6vertex",
    ]
    .into_iter()
    .map(|n| (n, builtin(n).expect("built-in name")))
    .collect()
}
