//! Exact two-phase primal simplex on a fraction-free integer tableau.
//!
//! Pricing picks the largest reduced cost (lowest index on ties). After a run
//! of degenerate pivots it falls back to Bland's rule until the objective
//! moves, which rules out cycling.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::{dot, RationalMatrix};
use super::rational::Rational;
use crate::error::{Error, Result};

/// `maximize objective·x` subject to `eq·x = eq_rhs`, `ineq·x ≤ ineq_rhs`,
/// and `x_j ≥ 0` wherever `nonneg[j]` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<Rational>,
    pub eq: RationalMatrix,
    pub eq_rhs: Vec<Rational>,
    pub ineq: RationalMatrix,
    pub ineq_rhs: Vec<Rational>,
    pub nonneg: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value; zero unless `status` is `Optimal`.
    pub value: Rational,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub point: Vec<Rational>,
    /// Indices of the original variables that are basic at the optimum.
    pub basis: Vec<usize>,
}

impl LpProblem {
    /// An unconstrained problem in `n` nonnegative variables.
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq: RationalMatrix::zeros(0, n),
            eq_rhs: Vec::new(),
            ineq: RationalMatrix::zeros(0, n),
            ineq_rhs: Vec::new(),
            nonneg: vec![true; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: &[Rational], rhs: Rational) -> Result<()> {
        self.eq.push_row(row)?;
        self.eq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_le(&mut self, row: &[Rational], rhs: Rational) -> Result<()> {
        self.ineq.push_row(row)?;
        self.ineq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_ge(&mut self, row: &[Rational], rhs: Rational) -> Result<()> {
        let neg: Vec<Rational> = row.iter().map(|x| -x).collect();
        self.add_le(&neg, -rhs)
    }

    pub fn set_free(&mut self, var: usize) {
        self.nonneg[var] = false;
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let ok = self.eq.cols() == n
            && self.ineq.cols() == n
            && self.nonneg.len() == n
            && self.eq_rhs.len() == self.eq.rows()
            && self.ineq_rhs.len() == self.ineq.rows();
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("inconsistent linear program dimensions".into()))
        }
    }

    /// True iff `x` satisfies every constraint exactly.
    pub fn is_feasible(&self, x: &[Rational]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        let sign_ok = x
            .iter()
            .zip(&self.nonneg)
            .all(|(v, &nn)| !nn || !v.is_negative());
        let eq_ok = (0..self.eq.rows()).all(|r| dot(self.eq.row(r), x) == self.eq_rhs[r]);
        let le_ok = (0..self.ineq.rows()).all(|r| dot(self.ineq.row(r), x) <= self.ineq_rhs[r]);
        sign_ok && eq_ok && le_ok
    }
}

/// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const STALL_LIMIT: usize = 64;

/// Fraction-free tableau: every entry is an integer over the shared positive
/// denominator `det`, which is the absolute determinant of the current basis
/// in the integer-scaled constraint matrix. Pivots divide exactly.
struct Tableau {
    rows: Vec<Vec<BigInt>>,
    basis: Vec<usize>,
    /// Reduced costs over `det`; entering candidates have positive entries.
    d: Vec<BigInt>,
    det: BigInt,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &BigInt {
        &self.rows[r][self.ncols]
    }

    fn eliminate(row: &mut [BigInt], prow: &[BigInt], e: usize, det: &BigInt) {
        let piv = &prow[e];
        let f = row[e].clone();
        for (x, p) in row.iter_mut().zip(prow) {
            if f.is_zero() || p.is_zero() {
                if !x.is_zero() {
                    *x *= piv;
                    *x /= det;
                }
            } else {
                *x *= piv;
                *x -= &f * p;
                *x /= det;
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                Self::eliminate(row, &prow, e, &self.det);
            }
        }
        Self::eliminate(&mut self.d, &prow[..self.ncols], e, &self.det);
        self.det = prow[e].clone();
        self.rows[r] = prow;
        self.basis[r] = e;
        if self.det.is_negative() {
            self.det = -&self.det;
            for x in self.rows.iter_mut().flatten().chain(self.d.iter_mut()) {
                if !x.is_zero() {
                    *x = -&*x;
                }
            }
        }
    }

    /// Largest-coefficient pricing, switching to Bland's rule after a run of
    /// degenerate pivots until the objective moves again. Returns false if unbounded.
    fn run(&mut self, allowed: &[bool]) -> bool {
        let mut stalled = 0usize;
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        loop {
            let mut candidates = (0..self.ncols)
                .filter(|&j| allowed[j] && !is_basic[j] && self.d[j].is_positive());
            let entering = if stalled < STALL_LIMIT {
                candidates.fold(None, |best: Option<usize>, j| match best {
                    Some(b) if self.d[b] >= self.d[j] => Some(b),
                    _ => Some(j),
                })
            } else {
                candidates.next()
            };
            let Some(e) = entering else { return true };
            let mut best: Option<usize> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[e].is_positive() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let lhs = &row[self.ncols] * &self.rows[b][e];
                        let rhs = &self.rows[b][self.ncols] * &row[e];
                        lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[b])
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            let Some(r) = best else { return false };
            if self.rhs(r).is_zero() {
                stalled += 1;
            } else {
                stalled = 0;
            }
            is_basic[self.basis[r]] = false;
            is_basic[e] = true;
            self.pivot(r, e);
        }
    }

    /// Installs integer costs `c`, storing `det * (c_j - c_B B^-1 A_j)`.
    fn set_costs(&mut self, c: &[BigInt]) {
        let mut d: Vec<BigInt> = c.iter().map(|x| x * &self.det).collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if c[b].is_zero() {
                continue;
            }
            for (j, x) in row[..self.ncols].iter().enumerate() {
                if !x.is_zero() {
                    d[j] -= &c[b] * x;
                }
            }
        }
        self.d = d;
    }
}

/// Scales a row of rationals by the least common multiple of its denominators.
fn integer_row(src: &[Rational]) -> Vec<BigInt> {
    let l = src
        .iter()
        .filter(|x| !x.is_integer())
        .fold(BigInt::one(), |acc, x| acc.lcm(&x.denom()));
    src.iter()
        .map(|x| {
            if x.is_zero() {
                BigInt::zero()
            } else {
                x.numer() * (&l / x.denom())
            }
        })
        .collect()
}

/// Solves the problem exactly. Infeasible and unbounded problems are reported
/// through the status, not as errors.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    // Structural columns: one per nonnegative variable, a +/- pair per free one.
    let mut col_of: Vec<(usize, bool)> = Vec::new();
    let mut first_col = vec![0usize; n];
    for j in 0..n {
        first_col[j] = col_of.len();
        col_of.push((j, true));
        if !p.nonneg[j] {
            col_of.push((j, false));
        }
    }
    let ns = col_of.len();
    let m_eq = p.eq.rows();
    let m_le = p.ineq.rows();
    let m = m_eq + m_le;

    // Each row is scaled to integers; slack variables absorb the scale factor.
    let mut raw: Vec<(Vec<BigInt>, Option<usize>)> = Vec::with_capacity(m);
    let expand = |src: &[Rational], rhs: &Rational| {
        let mut row = vec![Rational::zero(); ns + 1];
        for (j, v) in src.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            row[first_col[j]] = v.clone();
            if !p.nonneg[j] {
                row[first_col[j] + 1] = -v;
            }
        }
        row[ns] = rhs.clone();
        integer_row(&row)
    };
    for r in 0..m_eq {
        raw.push((expand(p.eq.row(r), &p.eq_rhs[r]), None));
    }
    for r in 0..m_le {
        raw.push((expand(p.ineq.row(r), &p.ineq_rhs[r]), Some(r)));
    }

    // Column layout: structural | slacks | artificials | rhs.
    let needs_art: Vec<bool> = raw
        .iter()
        .map(|(row, slack)| slack.is_none() || row[ns].is_negative())
        .collect();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let ncols = ns + m_le + n_art;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut art = ns + m_le;
    for (k, (coeffs, slack)) in raw.into_iter().enumerate() {
        let rhs = coeffs[ns].clone();
        let mut row = coeffs;
        row.truncate(ns);
        row.resize(ncols + 1, BigInt::zero());
        if let Some(s) = slack {
            row[ns + s] = BigInt::one();
        }
        row[ncols] = rhs;
        if row[ncols].is_negative() {
            for x in row.iter_mut() {
                if !x.is_zero() {
                    *x = -&*x;
                }
            }
        }
        if needs_art[k] {
            row[art] = BigInt::one();
            basis.push(art);
            art += 1;
        } else {
            basis.push(ns + slack.expect("slack row"));
        }
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis,
        d: Vec::new(),
        det: BigInt::one(),
        ncols,
    };

    let is_art = |j: usize| j >= ns + m_le && j < ncols;
    if n_art > 0 {
        let c1: Vec<BigInt> = (0..ncols)
            .map(|j| if is_art(j) { -BigInt::one() } else { BigInt::zero() })
            .collect();
        t.set_costs(&c1);
        t.run(&vec![true; ncols]);
        let infeas = t
            .basis
            .iter()
            .enumerate()
            .any(|(r, &b)| is_art(b) && !t.rhs(r).is_zero());
        if infeas {
            log::debug!("phase one ended with positive artificial mass");
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                value: Rational::zero(),
                point: Vec::new(),
                basis: Vec::new(),
            });
        }
        // Drive remaining artificials out; rows where that is impossible are redundant.
        let mut r = 0;
        while r < t.rows.len() {
            if is_art(t.basis[r]) {
                match (0..ns + m_le).find(|&j| !t.rows[r][j].is_zero()) {
                    Some(j) => t.pivot(r, j),
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let mut c2 = vec![Rational::zero(); ncols];
    for (col, &(j, plus)) in col_of.iter().enumerate() {
        c2[col] = if plus {
            p.objective[j].clone()
        } else {
            -&p.objective[j]
        };
    }
    t.set_costs(&integer_row(&c2));
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    if !t.run(&allowed) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: Rational::zero(),
            point: Vec::new(),
            basis: Vec::new(),
        });
    }

    let mut point = vec![Rational::zero(); n];
    let mut basic_vars = Vec::new();
    for (r, &b) in t.basis.iter().enumerate() {
        if b < ns {
            let (j, plus) = col_of[b];
            let v = Rational::from_bigints(t.rhs(r).clone(), t.det.clone());
            if plus {
                point[j] += v;
            } else {
                point[j] -= v;
            }
            basic_vars.push(j);
        }
    }
    basic_vars.sort_unstable();
    basic_vars.dedup();
    let value = dot(&p.objective, &point);
    debug_assert!(p.is_feasible(&point));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        point,
        basis: basic_vars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rational::q;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    #[test]
    fn zero_objective_on_simplex() {
        let mut p = LpProblem::new(ints(&[0, 0, 0]));
        p.add_eq(&ints(&[1, 1, 1]), q(1, 1)).unwrap();
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, Rational::zero());
        assert_eq!(s.point.iter().filter(|x| x.is_one()).count(), 1);
    }

    #[test]
    fn simple_max() {
        let mut p = LpProblem::new(ints(&[1, 0]));
        p.add_eq(&ints(&[1, 1]), q(1, 1)).unwrap();
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.value, q(1, 1));
        assert_eq!(s.point, ints(&[1, 0]));
        assert_eq!(s.basis, vec![0]);
    }

    #[test]
    fn statuses() {
        let mut p = LpProblem::new(ints(&[1]));
        p.add_le(&ints(&[1]), q(-1, 1)).unwrap();
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);
        let mut p = LpProblem::new(ints(&[1, 0]));
        p.add_le(&ints(&[-1, 1]), q(1, 1)).unwrap();
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_redundant_rows() {
        // maximize -x with x free, x >= -3/2, plus a duplicated equality.
        let mut p = LpProblem::new(ints(&[-1, 0]));
        p.set_free(0);
        p.add_ge(&ints(&[1, 0]), q(-3, 2)).unwrap();
        p.add_eq(&ints(&[0, 1]), q(2, 1)).unwrap();
        p.add_eq(&ints(&[0, 2]), q(4, 1)).unwrap();
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.point, vec![q(-3, 2), q(2, 1)]);
        assert_eq!(s.value, q(3, 2));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut p = LpProblem::new(vec![q(3, 4), q(-150, 1), q(1, 50), q(-6, 1)]);
        p.add_le(&[q(1, 4), q(-60, 1), q(-1, 25), q(9, 1)], q(0, 1)).unwrap();
        p.add_le(&[q(1, 2), q(-90, 1), q(-1, 50), q(3, 1)], q(0, 1)).unwrap();
        p.add_le(&ints(&[0, 0, 1, 0]), q(1, 1)).unwrap();
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.value, q(1, 20));
    }
}
