//! Independent oracles shared by the integration tests. Nothing here calls the
//! library's elimination or simplex code.

#![allow(dead_code)]

use correq::game::Game;
use correq::Rational;

/// Plain Gauss-Jordan elimination; returns the unique solution of `a x = b` or `None`.
pub fn gauss_unique(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let p = (r..rows).find(|&i| !a[i][c].is_zero())?;
        a.swap(r, p);
        b.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        b[r] = &b[r] * &inv;
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
                let d = &f * &b[r];
                b[i] -= d;
            }
        }
        r += 1;
    }
    if (r..rows).any(|i| !b[i].is_zero()) {
        return None;
    }
    Some(b[..cols].to_vec())
}

/// Rank by plain Gaussian elimination.
pub fn gauss_rank(mut a: Vec<Vec<Rational>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                for j in c..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
            }
        }
        r += 1;
    }
    r
}

pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Incentive rows written out directly from the definition.
pub fn incentive_rows(g: &Game) -> Vec<Vec<Rational>> {
    let mut rows = Vec::new();
    for i in 0..g.n() {
        let m = g.action_counts()[i];
        for a in 0..m {
            for b in (0..m).filter(|&b| b != a) {
                rows.push(
                    (0..g.num_profiles())
                        .map(|idx| {
                            let mut prof = g.unindex(idx);
                            if prof[i] != a {
                                return Rational::zero();
                            }
                            let here = g.utility(i, idx).clone();
                            prof[i] = b;
                            here - g.utility(i, g.index(&prof).unwrap())
                        })
                        .collect(),
                );
            }
        }
    }
    rows
}

/// All vertices of `{x >= 0, sum x = 1, A x >= 0}` by brute force over tight sets.
pub fn polytope_vertices(n: usize, ineq: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let mut all: Vec<Vec<Rational>> = (0..n)
        .map(|j| (0..n).map(|t| if t == j { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    all.extend(ineq.iter().cloned());
    let mut out: Vec<Vec<Rational>> = Vec::new();
    for_each_subset(all.len(), n - 1, |sel| {
        let mut a: Vec<Vec<Rational>> = sel.iter().map(|&s| all[s].clone()).collect();
        let mut b = vec![Rational::zero(); n - 1];
        a.push(vec![Rational::one(); n]);
        b.push(Rational::one());
        let Some(x) = gauss_unique(a, b) else { return };
        let feasible = all
            .iter()
            .all(|row| !row.iter().zip(&x).map(|(p, q)| p * q).sum::<Rational>().is_negative());
        if feasible && !out.contains(&x) {
            out.push(x);
        }
    });
    out
}

pub fn ce_vertices(g: &Game) -> Vec<Vec<Rational>> {
    polytope_vertices(g.num_profiles(), &incentive_rows(g))
}

/// `(-1)^(a_1 + ... + a_n)` over binary profiles.
pub fn parity_vector(n: usize) -> Vec<Rational> {
    (0..1usize << n)
        .map(|idx| {
            if idx.count_ones() % 2 == 0 {
                Rational::one()
            } else {
                -Rational::one()
            }
        })
        .collect()
}

/// Whether `v` is a nonzero multiple of `w`.
pub fn proportional(v: &[Rational], w: &[Rational]) -> bool {
    let Some(k) = w.iter().position(|x| !x.is_zero()) else {
        return false;
    };
    let s = &v[k] / &w[k];
    !s.is_zero() && v.iter().zip(w).all(|(x, y)| *x == &s * y)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
