//! Linear objectives over the correlated equilibrium polytope and improvements on Nash equilibria.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, JointDist, ProductDist};
use crate::linalg::matrix::{dot, rank_of_rows};
use crate::linalg::{lp_solve, LpProblem, LpStatus, Rational};
use crate::nash::{require_nash, require_quasi_strict};
use crate::polytope::{
    first_nonzero_marginal, in_tangent_space, incentive_matrix, is_ce, tangent_space, tangent_system,
    IncentiveMatrix,
};

/// A linear objective, given per profile or as weights on the agents' utilities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveWeights {
    Profile(Vec<Rational>),
    Agents(Vec<Rational>),
}

impl ObjectiveWeights {
    /// Equal weight on every agent.
    pub fn welfare(g: &Game) -> Self {
        ObjectiveWeights::Agents(vec![Rational::one(); g.n()])
    }

    /// Agent `i`'s utility alone.
    pub fn agent(g: &Game, i: usize) -> Self {
        let mut w = vec![Rational::zero(); g.n()];
        w[i] = Rational::one();
        ObjectiveWeights::Agents(w)
    }

    pub fn to_profile(&self, g: &Game) -> Result<Vec<Rational>> {
        match self {
            ObjectiveWeights::Profile(c) => {
                if c.len() != g.num_profiles() {
                    return Err(Error::Dimension(format!(
                        "objective has {} weights, game has {} profiles",
                        c.len(),
                        g.num_profiles()
                    )));
                }
                Ok(c.clone())
            }
            ObjectiveWeights::Agents(alpha) => {
                if alpha.len() != g.n() {
                    return Err(Error::Dimension(format!(
                        "{} agent weights for {} agents",
                        alpha.len(),
                        g.n()
                    )));
                }
                let mut c = vec![Rational::zero(); g.num_profiles()];
                for (i, a) in alpha.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (x, u) in c.iter_mut().zip(g.utilities(i)) {
                        if !u.is_zero() {
                            *x += a * u;
                        }
                    }
                }
                Ok(c)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimum {
    pub mu: JointDist,
    pub value: Rational,
}

/// LP over the polytope with `extra` free variables appended after the profile weights.
fn ce_lp(im: &IncentiveMatrix, total: usize, extra: usize) -> Result<LpProblem> {
    let nv = total + extra;
    let mut p = LpProblem::new(vec![Rational::zero(); nv]);
    let mut ones = vec![Rational::one(); total];
    ones.resize(nv, Rational::zero());
    p.add_eq(&ones, Rational::one())?;
    for k in 0..im.len() {
        let mut row = im.row(k).to_vec();
        row.resize(nv, Rational::zero());
        p.add_ge(&row, Rational::zero())?;
    }
    for j in total..nv {
        p.set_free(j);
    }
    Ok(p)
}

fn expect_optimal(status: LpStatus) -> Result<()> {
    match status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(Error::Lp("reported the polytope empty".into())),
        LpStatus::Unbounded => Err(Error::Lp("reported an unbounded objective".into())),
    }
}

/// Maximizes a linear objective over the correlated equilibria; the optimum is a vertex.
pub fn optimize_objective(g: &Game, w: &ObjectiveWeights) -> Result<Optimum> {
    let c = w.to_profile(g)?;
    let mut p = ce_lp(&incentive_matrix(g), g.num_profiles(), 0)?;
    p.objective = c;
    let sol = lp_solve(&p)?;
    expect_optimal(sol.status)?;
    Ok(Optimum {
        mu: JointDist(sol.point),
        value: sol.value,
    })
}

/// Largest admissible step along a direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Step {
    Finite(Rational),
    Unbounded,
}

/// Largest `eps` with `nu +- eps tau` nonnegative and satisfying every
/// incentive constraint that is slack at `nu`.
pub fn max_step(g: &Game, nu: &ProductDist, tau: &[Rational]) -> Result<Step> {
    require_quasi_strict(g, nu)?;
    if !in_tangent_space(g, &nu.support(), tau) {
        return Err(Error::NotTangent("tau violates the tangent system".into()));
    }
    if tau.iter().all(Rational::is_zero) {
        return Ok(Step::Unbounded);
    }
    let nuj = nu.to_joint();
    let mut best: Option<Rational> = None;
    let mut consider = |r: Rational| {
        if best.as_ref().is_none_or(|b| r < *b) {
            best = Some(r);
        }
    };
    for (w, t) in nuj.0.iter().zip(tau) {
        if !t.is_zero() {
            consider(w / &t.abs());
        }
    }
    let im = incentive_matrix(g);
    for k in 0..im.len() {
        let slack = dot(im.row(k), &nuj.0);
        if slack.is_positive() {
            let rt = dot(im.row(k), tau);
            if !rt.is_zero() {
                consider(&slack / &rt.abs());
            }
        }
    }
    let eps = best.expect("nonzero tau has a nonzero coordinate");
    for sign in [Rational::one(), -Rational::one()] {
        let s = &sign * &eps;
        let end = JointDist(nuj.0.iter().zip(tau).map(|(w, t)| w + &(&s * t)).collect());
        if !is_ce(g, &end)? {
            return Err(Error::Certificate("step endpoint is not a correlated equilibrium".into()));
        }
    }
    Ok(Step::Finite(eps))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImprovementResult {
    pub direction: Option<Vec<Rational>>,
    pub epsilon: Option<Step>,
    pub improved: Option<JointDist>,
    pub worsened: Option<JointDist>,
    pub base_value: Rational,
    pub improved_value: Option<Rational>,
    pub worsened_value: Option<Rational>,
}

/// Searches the tangent space for a direction along which the objective changes.
pub fn improving_direction(g: &Game, nu: &ProductDist, w: &ObjectiveWeights) -> Result<ImprovementResult> {
    let ts = tangent_space(g, nu)?;
    let c = w.to_profile(g)?;
    let nuj = nu.to_joint();
    let base_value = dot(&c, &nuj.0);
    for k in 0..ts.dim() {
        let mut tau = ts.vector(k);
        let pairing = dot(&c, &tau);
        if pairing.is_zero() {
            continue;
        }
        if pairing.is_negative() {
            tau = tau.iter().map(|x| -x).collect();
        }
        let step = max_step(g, nu, &tau)?;
        let Step::Finite(eps) = step.clone() else {
            return Err(Error::Certificate("nonzero direction with unbounded step".into()));
        };
        let plus = JointDist(nuj.0.iter().zip(&tau).map(|(x, t)| x + &(&eps * t)).collect());
        let minus = JointDist(nuj.0.iter().zip(&tau).map(|(x, t)| x - &(&eps * t)).collect());
        let (vp, vm) = (dot(&c, &plus.0), dot(&c, &minus.0));
        if !(vp > base_value && base_value > vm) {
            return Err(Error::Certificate("objective did not move along the direction".into()));
        }
        return Ok(ImprovementResult {
            direction: Some(tau),
            epsilon: Some(step),
            improved: Some(plus),
            worsened: Some(minus),
            base_value,
            improved_value: Some(vp),
            worsened_value: Some(vm),
        });
    }
    if ts.dim() > 0 {
        // Pairing is linear, so a random combination must pair to zero as well.
        let mut rng = ChaCha8Rng::seed_from_u64(ts.dim() as u64);
        let coeffs: Vec<Rational> = (0..ts.dim())
            .map(|_| Rational::new(rng.gen_range(-9i64..=9), rng.gen_range(1i64..=9)))
            .collect();
        if !dot(&c, &ts.combine(&coeffs)).is_zero() {
            return Err(Error::Certificate("objective pairs to zero on a basis but not on its span".into()));
        }
    }
    Ok(ImprovementResult {
        direction: None,
        epsilon: None,
        improved: None,
        worsened: None,
        base_value,
        improved_value: None,
        worsened_value: None,
    })
}

/// Shifts `delta_i(a_{-i})` so that `sum_i delta_i(tau) = 1`, where
/// `delta_i(tau) = sum_a delta_i(a_{-i}) tau(a)`. Indexing follows [`crate::game::opponent_index`].
pub fn strategic_perturbation(g: &Game, nu: &ProductDist, tau: &[Rational]) -> Result<Vec<Vec<Rational>>> {
    require_quasi_strict(g, nu)?;
    if !in_tangent_space(g, &nu.support(), tau) {
        return Err(Error::NotTangent("tau violates the tangent system".into()));
    }
    let counts = g.action_counts();
    let (i, k, m) = first_nonzero_marginal(tau, counts).ok_or(Error::ZeroMarginal)?;
    let mut deltas: Vec<Vec<Rational>> = counts
        .iter()
        .map(|&c| vec![Rational::zero(); g.num_profiles() / c])
        .collect();
    deltas[i][k] = m.recip();
    Ok(deltas)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiImprovement {
    pub t_star: Rational,
    pub mu: JointDist,
}

/// Maximizes the smallest gain `t` over all objectives relative to `nu`.
pub fn multi_improve_lp(g: &Game, nu: &ProductDist, objectives: &[ObjectiveWeights]) -> Result<MultiImprovement> {
    nu.check_shape(g.action_counts())?;
    if objectives.is_empty() {
        return Err(Error::Invalid("at least one objective is required".into()));
    }
    let total = g.num_profiles();
    let nuj = nu.to_joint();
    let mut p = ce_lp(&incentive_matrix(g), total, 1)?;
    p.objective[total] = Rational::one();
    for w in objectives {
        let mut row = w.to_profile(g)?;
        let base = dot(&row, &nuj.0);
        row.push(-Rational::one());
        p.add_ge(&row, base)?;
    }
    let sol = lp_solve(&p)?;
    expect_optimal(sol.status)?;
    let mut point = sol.point;
    let t_star = point.pop().expect("t variable");
    Ok(MultiImprovement {
        t_star,
        mu: JointDist(point),
    })
}

/// Objectives for every agent's own utility.
pub fn all_utilities(g: &Game) -> Vec<ObjectiveWeights> {
    (0..g.n()).map(|i| ObjectiveWeights::agent(g, i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffFaceDimension {
    pub dim_t: usize,
    pub ker_dim: usize,
    pub image_dim: usize,
}

/// Dimension of the image of the tangent space under the payoff map.
pub fn payoff_face_dimension(g: &Game, nu: &ProductDist) -> Result<PayoffFaceDimension> {
    require_nash(g, nu)?;
    require_quasi_strict(g, nu)?;
    let s = nu.support();
    let columns = s.profile_indices(g.action_counts());
    let mut rows = tangent_system(g, &s, &columns);
    let r_t = rank_of_rows(rows.clone(), columns.len());
    for i in 0..g.n() {
        rows.push(columns.iter().map(|&c| g.utility(i, c).clone()).collect());
    }
    let r_all = rank_of_rows(rows, columns.len());
    let dim_t = columns.len() - r_t;
    let ker_dim = columns.len() - r_all;
    Ok(PayoffFaceDimension {
        dim_t,
        ker_dim,
        image_dim: dim_t - ker_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{aumann_game, expected_welfare, parity_cycle_game};
    use crate::linalg::q;
    use crate::polytope::{is_extreme, satisfies_incentives};

    #[test]
    fn aumann_welfare_optimum() {
        let g = aumann_game();
        let opt = optimize_objective(&g, &ObjectiveWeights::welfare(&g)).unwrap();
        assert_eq!(opt.value, q(16, 3));
        let third = q(1, 3);
        assert_eq!(opt.mu.0, vec![q(0, 1), third.clone(), third.clone(), third]);
        assert!(is_extreme(&g, &opt.mu).unwrap());
    }

    #[test]
    fn aumann_mixed_is_unique_optimum_for_diagonal_weights() {
        let g = aumann_game();
        let w = ObjectiveWeights::Profile(vec![q(1, 1), q(0, 1), q(0, 1), q(1, 1)]);
        let opt = optimize_objective(&g, &w).unwrap();
        assert_eq!(opt.mu, ProductDist::uniform(&[2, 2]).to_joint());
        assert_eq!(opt.value, q(1, 2));
    }

    #[test]
    fn zero_objective() {
        let g = aumann_game();
        let opt = optimize_objective(&g, &ObjectiveWeights::Profile(vec![Rational::zero(); 4])).unwrap();
        assert!(opt.value.is_zero());
        assert!(is_extreme(&g, &opt.mu).unwrap());
    }

    #[test]
    fn no_direction_at_aumann_or_parity() {
        let g = aumann_game();
        let u = ProductDist::uniform(&[2, 2]);
        let r = improving_direction(&g, &u, &ObjectiveWeights::welfare(&g)).unwrap();
        assert!(r.direction.is_none());
        assert_eq!(r.base_value, q(4, 1));
        let g = parity_cycle_game();
        let u = ProductDist::uniform(&[2, 2, 2]);
        let r = improving_direction(&g, &u, &ObjectiveWeights::welfare(&g)).unwrap();
        assert!(r.direction.is_none());
    }

    #[test]
    fn parity_steps_and_perturbation() {
        let g = parity_cycle_game();
        let u = ProductDist::uniform(&[2, 2, 2]);
        let ts = tangent_space(&g, &u).unwrap();
        let tau: Vec<Rational> = ts.vector(0).iter().map(|x| x * &q(1, 8)).collect();
        assert_eq!(max_step(&g, &u, &tau).unwrap(), Step::Finite(q(1, 1)));
        assert_eq!(max_step(&g, &u, &vec![Rational::zero(); 8]).unwrap(), Step::Unbounded);
        assert!(matches!(strategic_perturbation(&g, &u, &tau), Err(Error::ZeroMarginal)));
        let mut bad = tau.clone();
        bad[0] += q(1, 1);
        bad[1] -= q(1, 1);
        assert!(matches!(max_step(&g, &u, &bad), Err(Error::NotTangent(_))));
    }

    #[test]
    fn single_marginal_perturbation() {
        // Every direction with zero mass is tangent when all payoffs vanish.
        let g = Game::from_fn(vec![2, 2], |_, _| Rational::zero()).unwrap();
        let u = ProductDist::uniform(&[2, 2]);
        let ts = tangent_space(&g, &u).unwrap();
        assert_eq!(ts.dim(), 3);
        let tau = vec![q(2, 1), q(0, 1), q(-2, 1), q(0, 1)];
        assert!(ts.contains(&g, &tau));
        let d = strategic_perturbation(&g, &u, &tau).unwrap();
        // Agent 0 sums over its own action: marginal at a_1 = 0 is 2.
        assert_eq!(d[0], vec![q(1, 2), q(0, 1)]);
        let h = g.strategic_shift(&d).unwrap();
        assert_eq!(incentive_matrix(&h), incentive_matrix(&g));
        assert_eq!(
            dot(&h.welfare_vector(), &tau) - dot(&g.welfare_vector(), &tau),
            q(1, 1)
        );
    }

    #[test]
    fn multi_objective_lp() {
        let g = aumann_game();
        let u = ProductDist::uniform(&[2, 2]);
        let r = multi_improve_lp(&g, &u, &all_utilities(&g)).unwrap();
        assert!(r.t_star.is_positive());
        assert!(satisfies_incentives(&g, &r.mu.0));
        let zero = ObjectiveWeights::Profile(vec![Rational::zero(); 4]);
        assert!(multi_improve_lp(&g, &u, &[zero]).unwrap().t_star.is_zero());
        assert!(expected_welfare(&g, &r.mu.0) > q(4, 1));
    }

    #[test]
    fn face_dimensions() {
        let g = aumann_game();
        let u = ProductDist::uniform(&[2, 2]);
        let f = payoff_face_dimension(&g, &u).unwrap();
        assert_eq!((f.dim_t, f.image_dim), (0, 0));
        let g = parity_cycle_game();
        let f = payoff_face_dimension(&g, &ProductDist::uniform(&[2, 2, 2])).unwrap();
        assert_eq!((f.dim_t, f.image_dim), (1, 0));
    }
}
