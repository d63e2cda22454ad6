//! Dense rational matrices, rank and kernels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rational::Rational;
use crate::error::{Error, Result};

/// Row-major dense matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix from rows of equal length; `cols` is used when `rows` is empty.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Result<Self> {
        let r = rows.len();
        let mut entries = Vec::with_capacity(r * cols);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {k} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            entries.extend(row);
        }
        Ok(Self {
            rows: r,
            cols,
            entries,
        })
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows
            .iter()
            .map(|r| r.iter().map(|&x| Rational::from(x)).collect())
            .collect();
        Self::from_rows(data, cols).expect("ragged rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Rational] {
        &mut self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn push_row(&mut self, row: &[Rational]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::Dimension(format!(
                "row has {} entries, expected {}",
                row.len(),
                self.cols
            )));
        }
        self.entries.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &RationalMatrix) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "cannot stack {} columns on {}",
                other.cols, self.cols
            )));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            entries.extend(cols.iter().map(|&c| row[c].clone()));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            entries,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Rational::is_zero)
    }
}

/// Inner product, skipping zero entries of `a`.
pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += x * y;
        }
    }
    acc
}

/// Scales a row to integer entries with no common factor. Returns false for a zero row.
fn make_primitive(row: &mut [Rational]) -> bool {
    let mut small_ok = true;
    let mut lcm_d: i128 = 1;
    let mut g: i128 = 0;
    for x in row.iter() {
        if x.is_zero() {
            continue;
        }
        match x.to_small() {
            Some((_, d)) => {
                let l = lcm_d / lcm_d.gcd(&(d as i128)) * d as i128;
                if l > i64::MAX as i128 {
                    small_ok = false;
                    break;
                }
                lcm_d = l;
            }
            None => {
                small_ok = false;
                break;
            }
        }
    }
    if small_ok {
        for x in row.iter() {
            if let Some((n, d)) = x.to_small() {
                if n != 0 {
                    g = g.gcd(&(n as i128 * (lcm_d / d as i128)));
                }
            }
        }
        if g == 0 {
            return false;
        }
        let scale = Rational::from_bigints(BigInt::from(lcm_d), BigInt::from(g));
        if !scale.is_one() {
            for x in row.iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &scale;
                }
            }
        }
        return true;
    }
    let mut lcm = BigInt::one();
    for x in row.iter().filter(|x| !x.is_zero()) {
        lcm = lcm.lcm(&x.denom());
    }
    let mut g = BigInt::zero();
    for x in row.iter().filter(|x| !x.is_zero()) {
        g = g.gcd(&(x.numer() * (&lcm / x.denom())));
    }
    if g.is_zero() {
        return false;
    }
    let scale = Rational::from_bigints(lcm, g.abs());
    for x in row.iter_mut() {
        if !x.is_zero() {
            *x = &*x * &scale;
        }
    }
    true
}

/// Row echelon form computed without fractions: every stored row is an
/// integer row with unit content, and eliminations use cross-multiplication.
struct Echelon {
    rows: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

fn echelon(rows: Vec<Vec<Rational>>, cols: usize) -> Echelon {
    let mut work: Vec<Vec<Rational>> = rows
        .into_iter()
        .filter_map(|mut r| make_primitive(&mut r).then_some(r))
        .collect();
    let mut out = Vec::new();
    let mut pivots = Vec::new();
    for c in 0..cols {
        if work.is_empty() {
            break;
        }
        // Prefer the sparsest row with a nonzero in this column.
        let mut best: Option<(usize, usize)> = None;
        for (k, r) in work.iter().enumerate() {
            if !r[c].is_zero() {
                let nnz = r[c..].iter().filter(|x| !x.is_zero()).count();
                if best.is_none_or(|(_, b)| nnz < b) {
                    best = Some((k, nnz));
                }
            }
        }
        let Some((k, _)) = best else { continue };
        let piv = work.swap_remove(k);
        let nz: Vec<usize> = (c..cols).filter(|&j| !piv[j].is_zero()).collect();
        let p = piv[c].clone();
        work.retain_mut(|r| {
            if r[c].is_zero() {
                return true;
            }
            let f = r[c].clone();
            if !p.is_one() {
                for x in r[c..].iter_mut() {
                    if !x.is_zero() {
                        *x = &*x * &p;
                    }
                }
            }
            for &j in &nz {
                let d = &f * &piv[j];
                r[j] -= d;
            }
            make_primitive(r)
        });
        out.push(piv);
        pivots.push(c);
    }
    Echelon { rows: out, pivots }
}

/// Exact rank.
pub fn rank(m: &RationalMatrix) -> usize {
    rank_of_rows(m.to_rows(), m.cols())
}

pub fn rank_of_rows(rows: Vec<Vec<Rational>>, cols: usize) -> usize {
    echelon(rows, cols).pivots.len()
}

/// Reduced row echelon form of a system, kept implicitly so that kernel
/// vectors can be produced one at a time when the kernel is large.
#[derive(Clone, Debug)]
pub struct NullSpace {
    cols: usize,
    rref: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
    free: Vec<usize>,
}

impl NullSpace {
    pub fn of(m: &RationalMatrix) -> Self {
        Self::of_rows(m.to_rows(), m.cols())
    }

    pub fn of_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Self {
        let (rref, pivots) = rref(rows, cols);
        let mut is_pivot = vec![false; cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let free = (0..cols).filter(|&c| !is_pivot[c]).collect();
        Self {
            cols,
            rref,
            pivots,
            free,
        }
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.cols
    }

    pub fn free_columns(&self) -> &[usize] {
        &self.free
    }

    /// The `k`-th basis vector, scaled to primitive integers.
    ///
    /// It has a nonzero entry at `free_columns()[k]` and zeros at every other free column.
    pub fn vector(&self, k: usize) -> Vec<Rational> {
        let fc = self.free[k];
        let mut v = vec![Rational::zero(); self.cols];
        v[fc] = Rational::one();
        for (row, &pc) in self.rref.iter().zip(&self.pivots) {
            if !row[fc].is_zero() {
                v[pc] = -&row[fc];
            }
        }
        make_primitive(&mut v);
        if v[fc].is_negative() {
            for x in v.iter_mut() {
                *x = -&*x;
            }
        }
        v
    }

    pub fn basis(&self) -> Vec<Vec<Rational>> {
        (0..self.dim()).map(|k| self.vector(k)).collect()
    }

    /// The kernel vector with the given coefficients on the free columns.
    pub fn combine(&self, coeffs: &[Rational]) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.cols];
        for (c, &fc) in coeffs.iter().zip(&self.free) {
            v[fc] = c.clone();
        }
        for (row, &pc) in self.rref.iter().zip(&self.pivots) {
            let mut s = Rational::zero();
            for (c, &fc) in coeffs.iter().zip(&self.free) {
                if !row[fc].is_zero() && !c.is_zero() {
                    s -= &row[fc] * c;
                }
            }
            v[pc] = s;
        }
        v
    }
}

/// Reduced row echelon form: nonzero rows only, each with leading 1, plus pivot columns.
pub fn rref(rows: Vec<Vec<Rational>>, cols: usize) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let Echelon { mut rows, pivots } = echelon(rows, cols);
    for k in (0..rows.len()).rev() {
        let c = pivots[k];
        let inv = rows[k][c].recip();
        if !inv.is_one() {
            for x in rows[k][c..].iter_mut() {
                if !x.is_zero() {
                    *x = &*x * &inv;
                }
            }
        }
        let nz: Vec<usize> = (c..cols).filter(|&j| !rows[k][j].is_zero()).collect();
        let (above, rest) = rows.split_at_mut(k);
        let piv = &rest[0];
        for r in above.iter_mut() {
            if r[c].is_zero() {
                continue;
            }
            let f = r[c].clone();
            for &j in &nz {
                let d = &f * &piv[j];
                r[j] -= d;
            }
        }
    }
    (rows, pivots)
}

/// Basis of the kernel `{x : M x = 0}`; empty when the kernel is trivial.
pub fn null_space(m: &RationalMatrix) -> Vec<Vec<Rational>> {
    NullSpace::of(m).basis()
}

/// Solves `A x = b`. Returns a particular solution with free variables set to zero
/// together with the kernel of `A`, or `None` if the system is inconsistent.
pub fn solve(a: &RationalMatrix, b: &[Rational]) -> Result<Option<(Vec<Rational>, NullSpace)>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} entries, expected {}",
            b.len(),
            a.rows()
        )));
    }
    let n = a.cols();
    let aug: Vec<Vec<Rational>> = (0..a.rows())
        .map(|r| {
            let mut row = a.row(r).to_vec();
            row.push(b[r].clone());
            row
        })
        .collect();
    let (red, pivots) = rref(aug, n + 1);
    if pivots.last() == Some(&n) {
        return Ok(None);
    }
    let mut x = vec![Rational::zero(); n];
    for (row, &pc) in red.iter().zip(&pivots) {
        x[pc] = row[n].clone();
    }
    Ok(Some((x, NullSpace::of(a))))
}

/// True iff the given vectors are linearly independent.
pub fn independent(vectors: &[Vec<Rational>]) -> bool {
    let cols = vectors.first().map_or(0, Vec::len);
    rank_of_rows(vectors.to_vec(), cols) == vectors.len()
}
