//! Correlated equilibrium polytope: incentive constraints, tangent spaces, extremality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{for_each_profile, profile_index, Game, JointDist, ProductDist, Support};
use crate::linalg::matrix::{dot, rank_of_rows, NullSpace, RationalMatrix};
use crate::linalg::Rational;
use crate::nash::{polygon_check, require_quasi_strict};

/// Rows `(i, a_i, a_i')` of the incentive system `R mu >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncentiveMatrix {
    pub labels: Vec<(usize, usize, usize)>,
    pub matrix: RationalMatrix,
}

impl IncentiveMatrix {
    pub fn row(&self, k: usize) -> &[Rational] {
        self.matrix.row(k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Row for agent `i` told to play `a` and considering `b` instead.
pub fn incentive_row(g: &Game, i: usize, a: usize, b: usize) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); g.num_profiles()];
    for (idx, x) in row.iter_mut().enumerate() {
        if g.action_of(idx, i) == a {
            *x = g.utility(i, idx) - g.utility(i, g.with_action(idx, i, b));
        }
    }
    row
}

/// All incentive rows ordered by agent, then recommended action, then deviation.
pub fn incentive_matrix(g: &Game) -> IncentiveMatrix {
    let mut labels = Vec::new();
    let mut matrix = RationalMatrix::zeros(0, g.num_profiles());
    for i in 0..g.n() {
        let m = g.action_counts()[i];
        for a in 0..m {
            for b in (0..m).filter(|&b| b != a) {
                labels.push((i, a, b));
                matrix
                    .push_row(&incentive_row(g, i, a, b))
                    .expect("row length");
            }
        }
    }
    IncentiveMatrix { labels, matrix }
}

fn check_len(g: &Game, w: &[Rational]) -> Result<()> {
    if w.len() == g.num_profiles() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "distribution has {} weights, game has {} profiles",
            w.len(),
            g.num_profiles()
        )))
    }
}

/// Exact membership test for the correlated equilibrium polytope.
pub fn is_ce(g: &Game, mu: &JointDist) -> Result<bool> {
    check_len(g, &mu.0)?;
    if mu.0.iter().any(Rational::is_negative) || mu.0.iter().sum::<Rational>() != Rational::one() {
        return Ok(false);
    }
    Ok(satisfies_incentives(g, &mu.0))
}

/// True iff `R w >= 0`, without any normalization requirement on `w`.
pub fn satisfies_incentives(g: &Game, w: &[Rational]) -> bool {
    for i in 0..g.n() {
        let m = g.action_counts()[i];
        for a in 0..m {
            for b in (0..m).filter(|&b| b != a) {
                if dot(&incentive_row(g, i, a, b), w).is_negative() {
                    return false;
                }
            }
        }
    }
    true
}

/// Directions `tau` keeping `nu +- eps tau` correlated equilibria for small `eps`.
#[derive(Clone, Debug)]
pub struct TangentSpace {
    pub support: Support,
    /// Profile indices of `S`, ascending; kernel coordinates refer to these.
    columns: Vec<usize>,
    total: usize,
    kernel: NullSpace,
}

impl TangentSpace {
    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Profile indices inside the support.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    fn expand(&self, local: Vec<Rational>) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.total];
        for (x, &c) in local.into_iter().zip(&self.columns) {
            v[c] = x;
        }
        v
    }

    /// The `k`-th basis vector as a full profile-indexed vector.
    pub fn vector(&self, k: usize) -> Vec<Rational> {
        self.expand(self.kernel.vector(k))
    }

    pub fn basis(&self) -> Vec<Vec<Rational>> {
        (0..self.dim()).map(|k| self.vector(k)).collect()
    }

    /// Combination of basis-free coordinates; see [`NullSpace::combine`].
    pub fn combine(&self, coeffs: &[Rational]) -> Vec<Rational> {
        self.expand(self.kernel.combine(coeffs))
    }

    /// Whether `tau` solves the defining system.
    pub fn contains(&self, g: &Game, tau: &[Rational]) -> bool {
        in_tangent_space(g, &self.support, tau)
    }
}

/// Rows of the tangent system restricted to the profiles of `S`, plus the mass row.
pub(crate) fn tangent_system(g: &Game, s: &Support, columns: &[usize]) -> Vec<Vec<Rational>> {
    let mut rows = Vec::new();
    for i in 0..g.n() {
        for &a in &s.0[i] {
            for &b in s.0[i].iter().filter(|&&b| b != a) {
                let row: Vec<Rational> = columns
                    .iter()
                    .map(|&idx| {
                        if g.action_of(idx, i) == a {
                            g.utility(i, idx) - g.utility(i, g.with_action(idx, i, b))
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect();
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    rows.push(vec![Rational::one(); columns.len()]);
    rows
}

pub fn in_tangent_space(g: &Game, s: &Support, tau: &[Rational]) -> bool {
    if tau.len() != g.num_profiles() {
        return false;
    }
    let counts = g.action_counts();
    let mut off_support_zero = true;
    for_each_profile(counts, |idx, a| {
        if !s.contains_profile(a) && !tau[idx].is_zero() {
            off_support_zero = false;
        }
    });
    if !off_support_zero || !tau.iter().sum::<Rational>().is_zero() {
        return false;
    }
    for i in 0..g.n() {
        for &a in &s.0[i] {
            for &b in s.0[i].iter().filter(|&&b| b != a) {
                if !dot(&incentive_row(g, i, a, b), tau).is_zero() {
                    return false;
                }
            }
        }
    }
    true
}

/// Tangent space at a quasi-strict Nash equilibrium.
pub fn tangent_space(g: &Game, nu: &ProductDist) -> Result<TangentSpace> {
    require_quasi_strict(g, nu)?;
    let support = nu.support();
    let columns = support.profile_indices(g.action_counts());
    let rows = tangent_system(g, &support, &columns);
    let kernel = NullSpace::of_rows(rows, columns.len());
    Ok(TangentSpace {
        support,
        columns,
        total: g.num_profiles(),
        kernel,
    })
}

/// Dimension of the tangent space, via rank only.
pub fn tangent_dim(g: &Game, nu: &ProductDist) -> Result<usize> {
    require_quasi_strict(g, nu)?;
    let support = nu.support();
    let columns = support.profile_indices(g.action_counts());
    let rows = tangent_system(g, &support, &columns);
    Ok(columns.len() - rank_of_rows(rows, columns.len()))
}

/// Active-set extremality test for any correlated equilibrium.
pub fn is_extreme(g: &Game, mu: &JointDist) -> Result<bool> {
    if !is_ce(g, mu)? {
        return Err(Error::NotCorrelated("input fails an incentive constraint".into()));
    }
    let supp = mu.support();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let im = incentive_matrix(g);
    for k in 0..im.len() {
        let row = im.row(k);
        if dot(row, &mu.0).is_zero() {
            let local: Vec<Rational> = supp.iter().map(|&c| row[c].clone()).collect();
            if local.iter().any(|x| !x.is_zero()) {
                rows.push(local);
            }
        }
    }
    rows.push(vec![Rational::one(); supp.len()]);
    Ok(rank_of_rows(rows, supp.len()) == supp.len())
}

/// Basis of perturbations on `S` whose one-agent-deleted marginals all vanish.
pub fn zero_marginal_space(s: &Support, counts: &[usize]) -> Vec<Vec<Rational>> {
    let total: usize = counts.iter().product();
    let refs = s.reference();
    let others: Vec<Vec<usize>> = s.0.iter().map(|set| set[1..].to_vec()).collect();
    if others.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let sizes: Vec<usize> = others.iter().map(Vec::len).collect();
    let n = counts.len();
    let mut basis = Vec::new();
    for_each_profile(&sizes, |_, pos| {
        let c: Vec<usize> = pos.iter().enumerate().map(|(i, &p)| others[i][p]).collect();
        let mut v = vec![Rational::zero(); total];
        for mask in 0u64..(1u64 << n) {
            let a: Vec<usize> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { refs[i] } else { c[i] })
                .collect();
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            v[profile_index(&a, counts).expect("in range")] = Rational::from(sign);
        }
        basis.push(v);
    });
    basis
}

/// True iff every marginal obtained by summing out one agent vanishes.
pub fn has_zero_marginals(tau: &[Rational], counts: &[usize]) -> bool {
    first_nonzero_marginal(tau, counts).is_none()
}

/// First `(i, a_{-i}, m)` with nonzero marginal `m = sum_{a_i} tau(a_i, a_{-i})`.
pub fn first_nonzero_marginal(tau: &[Rational], counts: &[usize]) -> Option<(usize, usize, Rational)> {
    for i in 0..counts.len() {
        let opp: usize = counts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &c)| c).product();
        let mut marg = vec![Rational::zero(); opp];
        for_each_profile(counts, |idx, a| {
            if !tau[idx].is_zero() {
                marg[crate::game::opponent_index(a, counts, i)] += &tau[idx];
            }
        });
        if let Some(k) = marg.iter().position(|m| !m.is_zero()) {
            return Some((i, k, marg[k].clone()));
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// Number of agents mixing over at least two actions.
    pub k: usize,
    pub dim_t: usize,
    /// `prod |S_i| - 1 - sum |S_i|(|S_i| - 1)`; may be negative.
    pub count_bound: i128,
    /// Bound in terms of the mixers, defined only when `k >= 3`.
    pub mixer_bound: Option<i128>,
    /// Maximum support size of a vertex: number of incentive rows plus one.
    pub vertex_support_bound: usize,
    pub polygon_ok: bool,
}

/// `prod m_i - 1 - sum m_i (m_i - 1)`.
pub fn count_bound(sizes: &[usize]) -> i128 {
    let prod: i128 = sizes.iter().map(|&m| m as i128).product();
    let pairs: i128 = sizes.iter().map(|&m| (m * (m - 1)) as i128).sum();
    prod - 1 - pairs
}

/// `2^k - 2k - 1`, plus `prod_{mixers}(m_i - 1) - 1` when `k >= 4`; `None` for `k < 3`.
pub fn mixer_bound(sizes: &[usize]) -> Option<i128> {
    let mixers: Vec<usize> = sizes.iter().copied().filter(|&m| m >= 2).collect();
    let k = mixers.len() as u32;
    if k < 3 {
        return None;
    }
    let base = (1i128 << k) - 2 * k as i128 - 1;
    let extra = if k >= 4 {
        mixers.iter().map(|&m| (m - 1) as i128).product::<i128>() - 1
    } else {
        0
    };
    Some(base + extra)
}

pub fn dimension_report(g: &Game, nu: &ProductDist) -> Result<DimensionReport> {
    let dim_t = tangent_dim(g, nu)?;
    let sizes = nu.support().sizes();
    let rows: usize = g.action_counts().iter().map(|&m| m * (m - 1)).sum();
    Ok(DimensionReport {
        k: sizes.iter().filter(|&&m| m >= 2).count(),
        dim_t,
        count_bound: count_bound(&sizes),
        mixer_bound: mixer_bound(&sizes),
        vertex_support_bound: rows + 1,
        polygon_ok: polygon_check(&sizes),
    })
}
