//! Smith normal form over the integers.
//!
//! Dense reduction works on arbitrary-precision entries with minimal-absolute-value
//! pivoting. Sparse boundary matrices are first reduced by unit pivots, which keep
//! entries small and rarely leave anything for the dense stage.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Non-zero invariant factors `d_1 | d_2 | … | d_r`, all positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub factors: Vec<BigInt>,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    /// Rank of the matrix reduced modulo a prime `p`.
    pub fn rank_mod(&self, p: u32) -> usize {
        let p = BigInt::from(p);
        self.factors.iter().filter(|d| !(*d % &p).is_zero()).count()
    }

    /// Factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.factors
            .iter()
            .filter(|d| !d.is_one())
            .cloned()
            .collect()
    }
}

pub fn smith_normal_form_i64(m: &[Vec<i64>]) -> SmithForm {
    let big: Vec<Vec<BigInt>> = m
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    smith_normal_form(&big)
}

#[allow(clippy::needless_range_loop)]
pub fn smith_normal_form(m: &[Vec<BigInt>]) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut factors = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Pivot: smallest non-zero |entry| in the trailing block.
        let Some((pr, pc)) = min_abs_entry(&a, t) else {
            break;
        };
        a.swap(t, pr);
        for row in a.iter_mut() {
            row.swap(t, pc);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..cols {
                    let sub = &q * &a[t][j];
                    a[i][j] -= sub;
                }
                if !a[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for i in t..rows {
                    let sub = &q * &a[i][t];
                    a[i][j] -= sub;
                }
                if !a[t][j].is_zero() {
                    clean = false;
                }
            }
            if clean {
                // Divisibility: fold any row with an entry not divisible by the pivot into row t.
                let bad = (t + 1..rows)
                    .find(|&i| (t + 1..cols).any(|j| !(&a[i][j] % &a[t][t]).is_zero()));
                match bad {
                    None => break,
                    Some(i) => {
                        for j in t..cols {
                            let add = a[i][j].clone();
                            a[t][j] += add;
                        }
                    }
                }
            } else {
                // A remainder smaller than the pivot appeared in row/column t; move it to (t, t).
                let (pr, pc) = min_abs_in_cross(&a, t);
                a.swap(t, pr);
                for row in a.iter_mut() {
                    row.swap(t, pc);
                }
            }
        }
        factors.push(a[t][t].abs());
        t += 1;
    }
    SmithForm { factors }
}

fn min_abs_entry(a: &[Vec<BigInt>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < a[bi][bj].abs()) {
                best = Some((i, j));
                if x.abs().is_one() {
                    return best;
                }
            }
        }
    }
    best
}

fn min_abs_in_cross(a: &[Vec<BigInt>], t: usize) -> (usize, usize) {
    let mut best = (t, t);
    for i in t..a.len() {
        let x = &a[i][t];
        if !x.is_zero() && (a[best.0][best.1].is_zero() || x.abs() < a[best.0][best.1].abs()) {
            best = (i, t);
        }
    }
    for j in t..a[t].len() {
        let x = &a[t][j];
        if !x.is_zero() && (a[best.0][best.1].is_zero() || x.abs() < a[best.0][best.1].abs()) {
            best = (t, j);
        }
    }
    best
}

/// Sparse integer matrix given by column entries.
pub(crate) struct SparseColumns {
    pub rows: usize,
    pub cols: Vec<BTreeMap<usize, i64>>,
}

/// Smith form of a sparse matrix: unit-pivot elimination, then dense reduction of what remains.
pub(crate) fn sparse_smith_form(m: SparseColumns) -> SmithForm {
    let SparseColumns { rows, mut cols } = m;
    let mut row_index: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); rows];
    for (j, col) in cols.iter().enumerate() {
        for &i in col.keys() {
            row_index[i].insert(j);
        }
    }
    let mut alive = vec![true; cols.len()];
    let mut units = 0usize;
    'sweep: loop {
        let mut progressed = false;
        for c in 0..cols.len() {
            if !alive[c] {
                continue;
            }
            let pivot_row = cols[c]
                .iter()
                .filter(|(_, v)| v.abs() == 1)
                .map(|(&r, _)| r)
                .min_by_key(|&r| (row_index[r].len(), r));
            let Some(r) = pivot_row else { continue };
            let p = cols[c][&r];
            let pivot_col = cols[c].clone();
            let others: Vec<usize> = row_index[r].iter().copied().filter(|&j| j != c).collect();
            for j in others {
                // col_j -= (a[r][j] / p) * col_c, with p = ±1.
                let factor = cols[j][&r] * p;
                let mut updated = cols[j].clone();
                for (&i, &v) in &pivot_col {
                    let next = factor
                        .checked_mul(v)
                        .and_then(|d| updated.get(&i).copied().unwrap_or(0).checked_sub(d));
                    match next {
                        None => break 'sweep,
                        Some(0) => {
                            updated.remove(&i);
                        }
                        Some(x) => {
                            updated.insert(i, x);
                        }
                    }
                }
                for &i in pivot_col.keys() {
                    if updated.contains_key(&i) {
                        row_index[i].insert(j);
                    } else {
                        row_index[i].remove(&j);
                    }
                }
                cols[j] = updated;
            }
            for &i in pivot_col.keys() {
                row_index[i].remove(&c);
            }
            cols[c].clear();
            alive[c] = false;
            debug_assert!(row_index[r].is_empty());
            units += 1;
            progressed = true;
        }
        if !progressed {
            break;
        }
    }
    let live_cols: Vec<usize> = (0..cols.len())
        .filter(|&j| alive[j] && !cols[j].is_empty())
        .collect();
    let live_rows: Vec<usize> = (0..rows).filter(|&i| !row_index[i].is_empty()).collect();
    let mut factors = vec![BigInt::one(); units];
    if !live_cols.is_empty() {
        let row_pos: BTreeMap<usize, usize> =
            live_rows.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut dense = vec![vec![BigInt::zero(); live_cols.len()]; live_rows.len()];
        for (k, &j) in live_cols.iter().enumerate() {
            for (&i, &v) in &cols[j] {
                dense[row_pos[&i]][k] = BigInt::from(v);
            }
        }
        factors.extend(smith_normal_form(&dense).factors);
    }
    SmithForm { factors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factors(m: &[Vec<i64>]) -> Vec<i64> {
        smith_normal_form_i64(m)
            .factors
            .iter()
            .map(|d| i64::try_from(d).unwrap())
            .collect()
    }

    #[test]
    fn identity() {
        let sf = smith_normal_form_i64(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(sf.rank(), 3);
        assert_eq!(
            factors(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]),
            vec![1, 1, 1]
        );
    }

    #[test]
    fn two_and_zero() {
        assert_eq!(factors(&[vec![2, 0], vec![0, 0]]), vec![2]);
    }

    #[test]
    fn divisibility_is_enforced() {
        // diag(2, 3) ~ diag(1, 6)
        assert_eq!(factors(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(factors(&[vec![4, 0], vec![0, 6]]), vec![2, 12]);
    }

    #[test]
    fn empty_and_zero_matrices() {
        assert!(factors(&[]).is_empty());
        assert!(factors(&[vec![0, 0], vec![0, 0]]).is_empty());
    }

    #[test]
    fn sparse_matches_dense() {
        let m = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let mut cols = vec![BTreeMap::new(); 3];
        for (i, row) in m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    cols[j].insert(i, v);
                }
            }
        }
        assert_eq!(
            sparse_smith_form(SparseColumns { rows: 3, cols }),
            smith_normal_form_i64(&m)
        );
        assert_eq!(factors(&m), vec![2, 6, 12]);
    }
}
