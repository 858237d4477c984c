//! Simplicial homology over ℚ, ℤ₂ and ℤ, plus the Betti-number checks that a
//! pair of Reeb critical levels must satisfy.

mod snf;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::complex::{
    is_closed_pseudomanifold, orientability, ComplexError, Orientability, SimplicialComplex,
};

pub use snf::{smith_normal_form, smith_normal_form_i64, SmithForm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("boundary dimension {requested} out of range 1..={dimension}")]
    DimensionOutOfRange { requested: usize, dimension: isize },
    #[error("rational coefficients need an orientable manifold; use z2")]
    CoefficientNotValidForNonorientable,
    #[error("coefficients must be a field for this check")]
    CoefficientNotAField,
    #[error("ambient complex does not have the homology of a sphere")]
    NotAHomologySphere,
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Coefficients {
    #[serde(rename = "q")]
    Rational,
    #[serde(rename = "z2")]
    Z2,
    #[serde(rename = "z")]
    Integers,
}

impl FromStr for Coefficients {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "q" | "rational" => Ok(Coefficients::Rational),
            "z2" | "f2" => Ok(Coefficients::Z2),
            "z" | "integers" => Ok(Coefficients::Integers),
            other => Err(format!(
                "unknown coefficients `{other}` (expected q, z2 or z)"
            )),
        }
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coefficients::Rational => "q",
            Coefficients::Z2 => "z2",
            Coefficients::Integers => "z",
        })
    }
}

/// Signed incidence matrix `∂_d` from `d`-faces (columns) to `(d-1)`-faces (rows),
/// both in the complex's canonical face order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    pub dim: usize,
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, ±1)` triples, column-major.
    pub entries: Vec<(usize, usize, i8)>,
}

impl BoundaryMatrix {
    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut m = vec![vec![0i64; self.cols]; self.rows];
        for &(i, j, v) in &self.entries {
            m[i][j] = v as i64;
        }
        m
    }

    pub fn smith_form(&self) -> SmithForm {
        let mut cols = vec![BTreeMap::new(); self.cols];
        for &(i, j, v) in &self.entries {
            cols[j].insert(i, v as i64);
        }
        snf::sparse_smith_form(snf::SparseColumns {
            rows: self.rows,
            cols,
        })
    }
}

pub fn boundary_matrix(c: &SimplicialComplex, d: usize) -> Result<BoundaryMatrix, HomologyError> {
    if d == 0 || d as isize > c.dimension() {
        return Err(HomologyError::DimensionOutOfRange {
            requested: d,
            dimension: c.dimension(),
        });
    }
    let cols = c.faces(d)?;
    let rows = c.face_count(d - 1);
    let mut entries = Vec::with_capacity(cols.len() * (d + 1));
    for (j, s) in cols.iter().enumerate() {
        for (sign, face) in s.boundary() {
            let i = c.face_position(&face).expect("complex is face-closed");
            entries.push((i, j, sign));
        }
    }
    Ok(BoundaryMatrix {
        dim: d,
        rows,
        cols: cols.len(),
        entries,
    })
}

fn serialize_torsion<S: Serializer>(t: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
    let strings: Vec<Vec<String>> = t
        .iter()
        .map(|row| row.iter().map(|d| d.to_string()).collect())
        .collect();
    strings.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyProfile {
    pub coefficients: Coefficients,
    pub reduced: bool,
    /// `betti[i]`; the free rank for integer coefficients.
    pub betti: Vec<usize>,
    /// Invariant factors greater than one of the torsion of `H_i(·; ℤ)`.
    /// Empty unless the coefficients are the integers.
    #[serde(serialize_with = "serialize_torsion")]
    pub torsion: Vec<Vec<BigInt>>,
}

impl HomologyProfile {
    pub fn betti(&self, i: usize) -> usize {
        self.betti.get(i).copied().unwrap_or(0)
    }

    pub fn betti_sum(&self) -> usize {
        self.betti.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut chi: i64 = self
            .betti
            .iter()
            .enumerate()
            .map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum();
        if self.reduced && !self.betti.is_empty() {
            chi += 1;
        }
        chi
    }

    pub fn is_acyclic(&self) -> bool {
        self.betti.iter().all(|&b| b == 0) && self.torsion.iter().all(Vec::is_empty)
    }
}

/// Smith forms of every boundary map `∂_1 … ∂_n`.
fn boundary_smith_forms(c: &SimplicialComplex) -> Vec<SmithForm> {
    let n = c.dimension();
    if n < 1 {
        return Vec::new();
    }
    (1..=n as usize)
        .into_par_iter()
        .map(|d| boundary_matrix(c, d).expect("d within range").smith_form())
        .collect()
}

pub fn homology(
    c: &SimplicialComplex,
    coefficients: Coefficients,
    reduced: bool,
) -> HomologyProfile {
    let n = c.dimension();
    if n < 0 {
        return HomologyProfile {
            coefficients,
            reduced,
            betti: Vec::new(),
            torsion: Vec::new(),
        };
    }
    let forms = boundary_smith_forms(c);
    // rank(∂_d) for d = 0..=n+1, with ∂_0 = ∂_{n+1} = 0.
    let rank = |d: usize| -> usize {
        if d == 0 || d > n as usize {
            return 0;
        }
        let sf = &forms[d - 1];
        match coefficients {
            Coefficients::Z2 => sf.rank_mod(2),
            Coefficients::Rational | Coefficients::Integers => sf.rank(),
        }
    };
    let mut betti: Vec<usize> = (0..=n as usize)
        .map(|d| c.face_count(d) - rank(d) - rank(d + 1))
        .collect();
    if reduced {
        betti[0] -= 1;
    }
    let torsion = match coefficients {
        Coefficients::Integers => (0..=n as usize)
            .map(|d| {
                if d < n as usize {
                    forms[d].torsion()
                } else {
                    Vec::new()
                }
            })
            .collect(),
        _ => Vec::new(),
    };
    HomologyProfile {
        coefficients,
        reduced,
        betti,
        torsion,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualityViolation {
    pub i: usize,
    pub b_m: usize,
    pub b_x1: usize,
    pub b_x0_dual: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DualityReport {
    pub pass: bool,
    pub coefficients: Coefficients,
    pub dimension: usize,
    pub betti_m: Vec<usize>,
    pub betti_x0: Vec<usize>,
    pub betti_x1: Vec<usize>,
    pub violations: Vec<DualityViolation>,
}

/// Checks `b_i(M) ≤ b_i(X₁) + b_{n−i}(X₀)` for `0 ≤ i ≤ n`, the rank consequence of
/// exactness of `H_i(X₁) → H_i(M) → H^{n−i}(X₀)`.
pub fn duality_betti_check(
    m: &SimplicialComplex,
    x0: &SimplicialComplex,
    x1: &SimplicialComplex,
    coefficients: Coefficients,
) -> Result<DualityReport, HomologyError> {
    let pm = is_closed_pseudomanifold(m);
    if !pm.passes() {
        return Err(ComplexError::NotClosedPseudomanifold.into());
    }
    match coefficients {
        Coefficients::Integers => return Err(HomologyError::CoefficientNotAField),
        Coefficients::Rational if orientability(m)? == Orientability::NonOrientable => {
            return Err(HomologyError::CoefficientNotValidForNonorientable)
        }
        _ => {}
    }
    let n = pm.dimension as usize;
    let (hm, h0, h1) = (
        homology(m, coefficients, false),
        homology(x0, coefficients, false),
        homology(x1, coefficients, false),
    );
    let violations: Vec<DualityViolation> = (0..=n)
        .map(|i| DualityViolation {
            i,
            b_m: hm.betti(i),
            b_x1: h1.betti(i),
            b_x0_dual: h0.betti(n - i),
        })
        .filter(|v| v.b_m > v.b_x1 + v.b_x0_dual)
        .collect();
    Ok(DualityReport {
        pass: violations.is_empty(),
        coefficients,
        dimension: n,
        betti_m: hm.betti,
        betti_x0: h0.betti,
        betti_x1: h1.betti,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiSumReport {
    pub pass: bool,
    pub coefficients: Coefficients,
    pub reduced_sum_x0: usize,
    pub reduced_sum_x1: usize,
}

/// In a homology sphere the reduced Betti sums of the two critical levels agree.
pub fn alexander_betti_sum_check(
    m: &SimplicialComplex,
    x0: &SimplicialComplex,
    x1: &SimplicialComplex,
    coefficients: Coefficients,
) -> Result<BettiSumReport, HomologyError> {
    if coefficients == Coefficients::Integers {
        return Err(HomologyError::CoefficientNotAField);
    }
    let hm = homology(m, coefficients, false);
    let n = m.dimension();
    let sphere = n >= 1
        && hm
            .betti
            .iter()
            .enumerate()
            .all(|(i, &b)| b == usize::from(i == 0 || i as isize == n));
    if !sphere {
        return Err(HomologyError::NotAHomologySphere);
    }
    let s0 = homology(x0, coefficients, true).betti_sum();
    let s1 = homology(x1, coefficients, true).betti_sum();
    Ok(BettiSumReport {
        pass: s0 == s1,
        coefficients,
        reduced_sum_x0: s0,
        reduced_sum_x1: s1,
    })
}
