//! Independent oracles: dense linear algebra over ℚ and 𝔽ₚ on boundary
//! matrices built straight from facet lists, determinantal divisors, and
//! brute-force orientability. None of this calls into the library's
//! homology or orientation code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use reebforge::complex::SimplicialComplex;

pub type Face = Vec<usize>;

/// All faces, grouped by dimension, each dimension sorted lexicographically.
pub fn faces_by_dim(facets: &[Face]) -> Vec<Vec<Face>> {
    let top = facets.iter().map(Vec::len).max().unwrap_or(0);
    let mut sets: Vec<BTreeSet<Face>> = vec![BTreeSet::new(); top];
    for f in facets {
        let mut f = f.clone();
        f.sort_unstable();
        for k in 1..=f.len() {
            for c in f.iter().copied().combinations(k) {
                sets[k - 1].insert(c);
            }
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

pub fn facets_of(c: &SimplicialComplex) -> Vec<Face> {
    c.facets().iter().map(|s| s.vertices().to_vec()).collect()
}

/// Dense `∂_d`: rows are `(d−1)`-faces, columns `d`-faces.
pub fn boundary(faces: &[Vec<Face>], d: usize) -> Vec<Vec<i64>> {
    let rows: BTreeMap<&Face, usize> = faces[d - 1]
        .iter()
        .enumerate()
        .map(|(i, f)| (f, i))
        .collect();
    let mut m = vec![vec![0i64; faces[d].len()]; faces[d - 1].len()];
    for (j, s) in faces[d].iter().enumerate() {
        for i in 0..s.len() {
            let mut face = s.clone();
            face.remove(i);
            m[rows[&face]][j] = if i % 2 == 0 { 1 } else { -1 };
        }
    }
    m
}

pub fn rank_rational(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<BigRational>> = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect()
        })
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..a.len()).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let pivot = a[rank][c].clone();
        for r in 0..a.len() {
            if r != rank && !a[r][c].is_zero() {
                let factor = &a[r][c] / &pivot;
                for k in c..cols {
                    let delta = &factor * &a[rank][k];
                    a[r][k] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn rank_mod(m: &[Vec<i64>], p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = m
        .iter()
        .map(|r| r.iter().map(|&x| x.rem_euclid(p)).collect())
        .collect();
    let cols = a.first().map_or(0, Vec::len);
    let inv = |x: i64| (1..p).find(|y| (x * y) % p == 1).expect("field element");
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..a.len()).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let s = inv(a[rank][c]);
        for k in c..cols {
            a[rank][k] = a[rank][k] * s % p;
        }
        for r in 0..a.len() {
            if r != rank && a[r][c] != 0 {
                let f = a[r][c];
                for k in c..cols {
                    a[r][k] = (a[r][k] - f * a[rank][k]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Unreduced Betti numbers from dense ranks; `p = None` means ℚ.
pub fn betti_oracle(facets: &[Face], p: Option<i64>) -> Vec<usize> {
    let faces = faces_by_dim(facets);
    let rank = |d: usize| -> usize {
        if d == 0 || d >= faces.len() {
            return 0;
        }
        let m = boundary(&faces, d);
        match p {
            None => rank_rational(&m),
            Some(p) => rank_mod(&m, p),
        }
    };
    (0..faces.len())
        .map(|d| faces[d].len() - rank(d) - rank(d + 1))
        .collect()
}

/// For each degree `i`, how many invariant factors of `∂_{i+1}` are divisible
/// by `p`; this is the number of cyclic `p`-power summands of the torsion of `H_i(·; ℤ)`.
pub fn torsion_count_oracle(facets: &[Face], p: i64) -> Vec<usize> {
    let faces = faces_by_dim(facets);
    (0..faces.len())
        .map(|i| {
            if i + 1 >= faces.len() {
                return 0;
            }
            let m = boundary(&faces, i + 1);
            rank_rational(&m) - rank_mod(&m, p)
        })
        .collect()
}

fn det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<BigInt>> = m[1..]
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != j)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][j] * det(&minor);
            if j % 2 == 0 {
                term
            } else {
                -term
            }
        })
        .sum()
}

/// Invariant factors as ratios of determinantal divisors `d_k = gcd(all k×k minors)`.
pub fn invariant_factors_oracle(m: &[Vec<i64>]) -> Vec<BigInt> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let big: Vec<Vec<BigInt>> = m
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut prev = BigInt::from(1);
    let mut out = Vec::new();
    for k in 1..=rows.min(cols) {
        let mut g = BigInt::zero();
        for rs in (0..rows).combinations(k) {
            for cs in (0..cols).combinations(k) {
                let sub: Vec<Vec<BigInt>> = rs
                    .iter()
                    .map(|&r| cs.iter().map(|&c| big[r][c].clone()).collect())
                    .collect();
                g = g.gcd(&det(&sub));
            }
        }
        if g.is_zero() {
            break;
        }
        out.push((&g / &prev).abs());
        prev = g;
    }
    out
}

/// Orientable iff some choice of facet signs makes the signed sum of facets a cycle.
pub fn orientable_oracle(facets: &[Face]) -> bool {
    let faces = faces_by_dim(facets);
    let n = faces.len() - 1;
    let m = boundary(&faces, n);
    let f = faces[n].len();
    assert!(f <= 20, "exhaustive search limited to 20 facets");
    (0..1u32 << f).any(|mask| {
        if mask & 1 == 1 {
            return false; // a global sign flip gives the same answer
        }
        m.iter().all(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &x)| if mask >> j & 1 == 1 { -x } else { x })
                .sum::<i64>()
                == 0
        })
    })
}

pub fn euler(facets: &[Face]) -> i64 {
    faces_by_dim(facets)
        .iter()
        .enumerate()
        .map(|(d, fs)| {
            if d % 2 == 0 {
                fs.len() as i64
            } else {
                -(fs.len() as i64)
            }
        })
        .sum()
}
