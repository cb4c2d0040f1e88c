//! Enumeration of linear subspaces of F_p^n by reduced echelon representatives.

use crate::gfpoly::Field;
use crate::linalg::Vector;

/// Gaussian binomial coefficient `[n choose k]_q`, the number of
/// `k`-dimensional subspaces of F_q^n.
pub fn gaussian_binomial(q: u128, n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..k {
        num *= q.pow((n - i) as u32) - 1;
        den *= q.pow((i + 1) as u32) - 1;
    }
    num / den
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Every `k`-dimensional subspace of F_p^n exactly once, as the rows of its
/// reduced echelon basis. Order: pivot sets lexicographically, then the free
/// entries as base-p counters.
pub fn subspaces(field: Field, n: usize, k: usize) -> impl Iterator<Item = Vec<Vector>> {
    let p = field.p() as u64;
    combinations(n, k).into_iter().flat_map(move |pivots| {
        // free slots: (row, column) with column right of the row's pivot and not a pivot column
        let free: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(r, &c)| ((c + 1)..n).filter(|j| !pivots.contains(j)).map(move |j| (r, j)))
            .collect();
        let total = p.pow(free.len() as u32);
        let pivots = pivots.clone();
        (0..total).map(move |mut idx| {
            let mut rows: Vec<Vector> = pivots
                .iter()
                .map(|&c| {
                    let mut v = vec![0u8; n];
                    v[c] = 1;
                    v
                })
                .collect();
            for &(r, j) in free.iter().rev() {
                rows[r][j] = (idx % p) as u8;
                idx /= p;
            }
            rows
        })
    })
}
