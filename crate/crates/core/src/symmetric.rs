//! Exchangeable distributions, urns, and symmetric correlated equilibria.
//!
//! An urn is a composition `(k_1, ..., k_m)` of `n`. Drawing all `n` balls
//! without replacement and handing ball `i` to agent `i` gives the extreme
//! exchangeable distribution associated with it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{for_each_profile, AnonymousForm, Game, JointDist};
use crate::improve::ObjectiveWeights;
use crate::linalg::matrix::{dot, rank_of_rows};
use crate::linalg::{lp_solve, LpProblem, LpStatus, Rational};

/// All compositions of `n` into `m` parts, ordered by the first count
/// descending, then the second, and so on. For `m = 2` position `k` holds `(n - k, k)`.
pub fn enumerate_compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(rest);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=rest).rev() {
            cur.push(k);
            rec(rest - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Action counts of a profile over `m` labels.
pub fn frequency(a: &[usize], m: usize) -> Vec<usize> {
    let mut f = vec![0usize; m];
    for &x in a {
        f[x] += 1;
    }
    f
}

fn factorial(n: usize) -> Rational {
    (1..=n).map(Rational::from).product()
}

/// Multinomial coefficient `n! / prod k_j!`.
pub fn multinomial(k: &[usize]) -> Rational {
    let n: usize = k.iter().sum();
    k.iter().fold(factorial(n), |acc, &x| acc / factorial(x))
}

/// Symmetrized point mass of the urn: each arrangement gets `prod k_j! / n!`.
pub fn urn_dist(k: &[usize]) -> JointDist {
    let n: usize = k.iter().sum();
    let m = k.len();
    let p = multinomial(k).recip();
    let counts = vec![m; n];
    let mut w = Vec::with_capacity(m.pow(n as u32));
    for_each_profile(&counts, |_, a| {
        w.push(if frequency(a, m) == k { p.clone() } else { Rational::zero() });
    });
    JointDist(w)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnWeight {
    pub counts: Vec<usize>,
    pub p: Rational,
}

/// Weights over the compositions of `n` into `m` parts, listed in
/// [`enumerate_compositions`] order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrnMixture {
    pub n: usize,
    pub m: usize,
    pub weights: Vec<UrnWeight>,
}

impl UrnMixture {
    pub fn from_weights(n: usize, m: usize, p: Vec<Rational>) -> Result<Self> {
        let comps = enumerate_compositions(n, m);
        if comps.len() != p.len() {
            return Err(Error::Dimension(format!(
                "{} urn weights for {} compositions",
                p.len(),
                comps.len()
            )));
        }
        Ok(Self {
            n,
            m,
            weights: comps
                .into_iter()
                .zip(p)
                .map(|(counts, p)| UrnWeight { counts, p })
                .collect(),
        })
    }

    /// Validates against the full composition list and returns the weights in order.
    pub fn dense(&self) -> Result<Vec<Rational>> {
        let comps = enumerate_compositions(self.n, self.m);
        if comps.len() != self.weights.len()
            || comps.iter().zip(&self.weights).any(|(c, w)| *c != w.counts)
        {
            return Err(Error::Invalid("urn weights must list every composition in order".into()));
        }
        let p: Vec<Rational> = self.weights.iter().map(|w| w.p.clone()).collect();
        if p.iter().any(Rational::is_negative) || p.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::Invalid("urn weights must be a probability vector".into()));
        }
        Ok(p)
    }

    pub fn positive_urns(&self) -> usize {
        self.weights.iter().filter(|w| w.p.is_positive()).count()
    }

    /// The joint distribution `sum_k p_k urn_dist(k)`.
    pub fn to_joint(&self) -> JointDist {
        let total = self.m.pow(self.n as u32);
        let mut w = vec![Rational::zero(); total];
        for u in self.weights.iter().filter(|u| !u.p.is_zero()) {
            let d = urn_dist(&u.counts);
            for (x, y) in w.iter_mut().zip(d.0) {
                if !y.is_zero() {
                    *x += &u.p * &y;
                }
            }
        }
        JointDist(w)
    }
}

/// Splits an exchangeable distribution into urn weights.
pub fn exchangeable_decompose(mu: &JointDist, n: usize, m: usize) -> Result<UrnMixture> {
    let counts = vec![m; n];
    let total: usize = counts.iter().product();
    if mu.0.len() != total {
        return Err(Error::Dimension("distribution does not match m^n profiles".into()));
    }
    let mut stride = 1usize;
    for t in 0..n.saturating_sub(1) {
        let next = stride * m;
        for idx in 0..total {
            let x = (idx / stride) % m;
            let y = (idx / next) % m;
            let sw = idx - x * stride - y * next + y * stride + x * next;
            if mu.0[idx] != mu.0[sw] {
                return Err(Error::NotExchangeable(t, t + 1));
            }
        }
        stride = next;
    }
    let comps = enumerate_compositions(n, m);
    let pos: std::collections::HashMap<Vec<usize>, usize> =
        comps.iter().enumerate().map(|(k, c)| (c.clone(), k)).collect();
    let mut p = vec![Rational::zero(); comps.len()];
    for_each_profile(&counts, |idx, a| {
        if !mu.0[idx].is_zero() {
            p[pos[&frequency(a, m)]] += &mu.0[idx];
        }
    });
    UrnMixture::from_weights(n, m, p)
}

/// Weights of the i.i.d. product of `probs` across `n` agents.
pub fn iid_mixture(n: usize, probs: &[Rational]) -> Result<UrnMixture> {
    let m = probs.len();
    let p = enumerate_compositions(n, m)
        .iter()
        .map(|k| {
            k.iter()
                .zip(probs)
                .fold(multinomial(k), |acc, (&c, q)| acc * q.pow(c as u32))
        })
        .collect();
    UrnMixture::from_weights(n, m, p)
}

/// Urn-coordinate incentive rows `(a, a', row)`: for each urn `k`,
/// `(k_a / n) [g(a; k - e_a) - g(a'; k - e_a)]`.
pub fn urn_incentive_rows(af: &AnonymousForm) -> Vec<(usize, usize, Vec<Rational>)> {
    let (n, m) = (af.n(), af.m());
    let comps = enumerate_compositions(n, m);
    let mut out = Vec::new();
    for a in 0..m {
        for b in (0..m).filter(|&b| b != a) {
            let row = comps
                .iter()
                .map(|k| {
                    if k[a] == 0 {
                        return Rational::zero();
                    }
                    let mut opp = k.clone();
                    opp[a] -= 1;
                    let d = af.payoff(a, &opp).expect("composition") - af.payoff(b, &opp).expect("composition");
                    d * Rational::new(k[a] as i64, n as i64)
                })
                .collect();
            out.push((a, b, row));
        }
    }
    out
}

/// Expected payoff per agent under each urn: `sum_a (k_a / n) g(a; k - e_a)`.
pub fn urn_per_capita_welfare(af: &AnonymousForm) -> Vec<Rational> {
    let (n, m) = (af.n(), af.m());
    enumerate_compositions(n, m)
        .iter()
        .map(|k| {
            (0..m)
                .filter(|&a| k[a] > 0)
                .map(|a| {
                    let mut opp = k.clone();
                    opp[a] -= 1;
                    af.payoff(a, &opp).expect("composition") * &Rational::new(k[a] as i64, n as i64)
                })
                .sum()
        })
        .collect()
}

/// Objective value of each urn distribution for a profile objective.
pub fn urn_objective(g: &Game, w: &ObjectiveWeights) -> Result<Vec<Rational>> {
    let c = w.to_profile(g)?;
    let m = g.action_counts()[0];
    let comps = enumerate_compositions(g.n(), m);
    let pos: std::collections::HashMap<Vec<usize>, usize> =
        comps.iter().enumerate().map(|(k, c)| (c.clone(), k)).collect();
    let mut out = vec![Rational::zero(); comps.len()];
    for_each_profile(g.action_counts(), |idx, a| {
        if !c[idx].is_zero() {
            out[pos[&frequency(a, m)]] += &c[idx];
        }
    });
    for (v, k) in out.iter_mut().zip(&comps) {
        *v = &*v / &multinomial(k);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricOptimum {
    pub mixture: UrnMixture,
    pub value: Rational,
}

/// Exact LP over urn weights for a game given by its anonymous table.
pub fn symmetric_ce_lp_anonymous(af: &AnonymousForm, objective: &[Rational]) -> Result<SymmetricOptimum> {
    let (n, m) = (af.n(), af.m());
    let nu = objective.len();
    let mut p = LpProblem::new(objective.to_vec());
    p.add_eq(&vec![Rational::one(); nu], Rational::one())?;
    for (_, _, row) in urn_incentive_rows(af) {
        if row.len() != nu {
            return Err(Error::Dimension("objective length differs from urn count".into()));
        }
        p.add_ge(&row, Rational::zero())?;
    }
    let sol = lp_solve(&p)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("ended with status {:?}", sol.status)));
    }
    Ok(SymmetricOptimum {
        mixture: UrnMixture::from_weights(n, m, sol.point)?,
        value: sol.value,
    })
}

/// Best exchangeable correlated equilibrium of a symmetric game.
pub fn symmetric_ce_lp(g: &Game, w: &ObjectiveWeights) -> Result<SymmetricOptimum> {
    let af = g.detect_symmetry().ok_or(Error::NotSymmetric)?;
    symmetric_ce_lp_anonymous(&af, &urn_objective(g, w)?)
}

/// Active-set extremality within the symmetric correlated equilibria, in urn coordinates.
pub fn symmetric_is_extreme(af: &AnonymousForm, mixture: &UrnMixture) -> Result<bool> {
    if mixture.n != af.n() || mixture.m != af.m() {
        return Err(Error::Dimension("mixture does not match the game".into()));
    }
    let p = mixture.dense()?;
    let supp: Vec<usize> = (0..p.len()).filter(|&k| p[k].is_positive()).collect();
    let mut rows = Vec::new();
    for (_, _, row) in urn_incentive_rows(af) {
        let v = dot(&row, &p);
        if v.is_negative() {
            return Err(Error::NotCorrelated("urn incentive row is violated".into()));
        }
        if v.is_zero() {
            let local: Vec<Rational> = supp.iter().map(|&k| row[k].clone()).collect();
            if local.iter().any(|x| !x.is_zero()) {
                rows.push(local);
            }
        }
    }
    rows.push(vec![Rational::one(); supp.len()]);
    Ok(rank_of_rows(rows, supp.len()) == supp.len())
}

/// Total variation between the first `j` draws without replacement from urn
/// `k` and `j` i.i.d. draws with probabilities `k / n`.
pub fn definetti_tv(k: &[usize], j: usize) -> Result<Rational> {
    let n: usize = k.iter().sum();
    if j == 0 || j > n {
        return Err(Error::Precondition(format!("draw count {j} outside 1..={n}")));
    }
    let nr = Rational::from(n);
    let falling = |x: usize, r: usize| -> Rational { (0..r).map(|t| Rational::from(x as i64 - t as i64)).product() };
    let total_fall = falling(n, j);
    let mut tv = Rational::zero();
    for c in enumerate_compositions(j, k.len()) {
        let without: Rational = c.iter().zip(k).map(|(&ci, &ki)| falling(ki, ci)).product::<Rational>() / &total_fall;
        let with: Rational = c
            .iter()
            .zip(k)
            .map(|(&ci, &ki)| (Rational::from(ki) / &nr).pow(ci as u32))
            .product();
        tv += multinomial(&c) * (without - with).abs();
    }
    Ok(tv / Rational::from(2))
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r).fold(1u128, |acc, t| acc * (n - t) as u128 / (t + 1) as u128)
}

/// Number of compositions of `n` into `m` parts.
pub fn composition_count(n: usize, m: usize) -> u128 {
    binomial(n + m - 1, m - 1)
}
