//! Nash equilibrium checks, regularity, and fixture generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, ProductDist, Support};
use crate::linalg::matrix::{independent, rank, solve, RationalMatrix};
use crate::linalg::Rational;

/// Expected payoff of each of agent `i`'s actions against `nu_{-i}`.
pub fn action_payoffs(g: &Game, nu: &ProductDist, i: usize) -> Vec<Rational> {
    let counts = g.action_counts();
    let mut out = vec![Rational::zero(); counts[i]];
    'profiles: for idx in 0..g.num_profiles() {
        let u = g.utility(i, idx);
        if u.is_zero() {
            continue;
        }
        let mut w = Rational::one();
        for j in 0..g.n() {
            if j == i {
                continue;
            }
            let p = &nu.0[j][g.action_of(idx, j)];
            if p.is_zero() {
                continue 'profiles;
            }
            w = &w * p;
        }
        out[g.action_of(idx, i)] += &w * u;
    }
    out
}

fn check(g: &Game, nu: &ProductDist) -> Result<()> {
    nu.check_shape(g.action_counts())
}

/// True iff every on-support action of every agent is a best response to `nu_{-i}`.
pub fn verify_nash(g: &Game, nu: &ProductDist) -> Result<bool> {
    check(g, nu)?;
    for i in 0..g.n() {
        let pay = action_payoffs(g, nu, i);
        let best = pay.iter().max().expect("nonempty").clone();
        let ok = nu.0[i]
            .iter()
            .zip(&pay)
            .all(|(w, p)| w.is_zero() || *p == best);
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Finds an agent and action that profitably deviates, if any.
fn first_violation(g: &Game, nu: &ProductDist) -> Option<String> {
    for i in 0..g.n() {
        let pay = action_payoffs(g, nu, i);
        let best = pay.iter().max().expect("nonempty");
        for (a, w) in nu.0[i].iter().enumerate() {
            if !w.is_zero() && pay[a] < *best {
                return Some(format!("agent {i} gains by abandoning action {a}"));
            }
        }
    }
    None
}

pub(crate) fn require_nash(g: &Game, nu: &ProductDist) -> Result<()> {
    check(g, nu)?;
    match first_violation(g, nu) {
        Some(msg) => Err(Error::NotNash(msg)),
        None => Ok(()),
    }
}

/// True iff every off-support action is strictly worse. Errors if `nu` is not Nash.
pub fn is_quasi_strict(g: &Game, nu: &ProductDist) -> Result<bool> {
    require_nash(g, nu)?;
    for i in 0..g.n() {
        let pay = action_payoffs(g, nu, i);
        let best = pay.iter().max().expect("nonempty");
        if nu.0[i]
            .iter()
            .zip(&pay)
            .any(|(w, p)| w.is_zero() && p == best)
        {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn require_quasi_strict(g: &Game, nu: &ProductDist) -> Result<()> {
    if is_quasi_strict(g, nu)? {
        Ok(())
    } else {
        Err(Error::NotQuasiStrict(
            "some off-support action is also a best response".into(),
        ))
    }
}

/// Jacobian of the stacked indifference conditions at `nu`.
///
/// Rows and columns are indexed by `(i, a_i)` with `a_i` in `S_i` other than
/// `reference[i]`, agent-major. Blocks with `j = i` are zero.
pub fn indifference_jacobian(g: &Game, nu: &ProductDist, reference: &[usize]) -> Result<RationalMatrix> {
    require_nash(g, nu)?;
    let s = nu.support();
    let n = g.n();
    if reference.len() != n || (0..n).any(|i| !s.contains(i, reference[i])) {
        return Err(Error::Invalid("reference action outside the support".into()));
    }
    // Coordinates: offset[i] + position of a_i among the non-reference support actions.
    let mut coord = vec![vec![None; 0]; n];
    let mut d = 0;
    for i in 0..n {
        coord[i] = vec![None; g.action_counts()[i]];
        for &a in &s.0[i] {
            if a != reference[i] {
                coord[i][a] = Some(d);
                d += 1;
            }
        }
    }
    let mut jac = RationalMatrix::zeros(d, d);
    if d == 0 {
        return Ok(jac);
    }
    // acc[(row, j, a_j)] accumulates sum over a_{-ij} of du_i * prod nu_l.
    for i in 0..n {
        let mut acc: Vec<Vec<Vec<Rational>>> = (0..g.action_counts()[i])
            .map(|_| {
                (0..n)
                    .map(|j| vec![Rational::zero(); g.action_counts()[j]])
                    .collect()
            })
            .collect();
        for idx in 0..g.num_profiles() {
            let ai = g.action_of(idx, i);
            if coord[i][ai].is_none() {
                continue;
            }
            let du = g.utility(i, idx) - g.utility(i, g.with_action(idx, i, reference[i]));
            if du.is_zero() {
                continue;
            }
            let acts: Vec<usize> = (0..n).map(|l| g.action_of(idx, l)).collect();
            for j in 0..n {
                if j == i || !s.contains(j, acts[j]) {
                    continue;
                }
                let mut w = Rational::one();
                for l in 0..n {
                    if l != i && l != j {
                        let p = &nu.0[l][acts[l]];
                        if p.is_zero() {
                            w = Rational::zero();
                            break;
                        }
                        w = &w * p;
                    }
                }
                if !w.is_zero() {
                    acc[ai][j][acts[j]] += &du * &w;
                }
            }
        }
        for &ai in &s.0[i] {
            let Some(r) = coord[i][ai] else { continue };
            for j in 0..n {
                if j == i {
                    continue;
                }
                for &aj in &s.0[j] {
                    if let Some(c) = coord[j][aj] {
                        let v = &acc[ai][j][aj] - &acc[ai][j][reference[j]];
                        jac.set(r, c, v);
                    }
                }
            }
        }
    }
    Ok(jac)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub quasi_strict: bool,
    /// Depends on the reference actions; only its nonsingularity is meaningful.
    pub jacobian: RationalMatrix,
    pub jacobian_nonsingular: bool,
    pub regular: bool,
}

/// Regularity with the smallest support action of each agent as reference.
pub fn is_regular(g: &Game, nu: &ProductDist) -> Result<RegularityReport> {
    let quasi_strict = is_quasi_strict(g, nu)?;
    let jacobian = indifference_jacobian(g, nu, &nu.support().reference())?;
    let jacobian_nonsingular = rank(&jacobian) == jacobian.rows();
    Ok(RegularityReport {
        quasi_strict,
        jacobian,
        jacobian_nonsingular,
        regular: quasi_strict && jacobian_nonsingular,
    })
}

/// Regularity test for equilibria with exactly two mixers of equal support size,
/// via linear independence of the payoff-difference vectors of each mixer.
pub fn two_mixer_regularity(g: &Game, nu: &ProductDist) -> Result<bool> {
    let s = nu.support();
    let mixers: Vec<usize> = (0..g.n()).filter(|&i| s.0[i].len() >= 2).collect();
    if mixers.len() != 2 || s.0[mixers[0]].len() != s.0[mixers[1]].len() {
        return Err(Error::Precondition(
            "exactly two mixers with equal support sizes are required".into(),
        ));
    }
    if !is_quasi_strict(g, nu)? {
        return Ok(false);
    }
    let base = g.index(&s.reference())?;
    let family = |i: usize, j: usize| -> Vec<Vec<Rational>> {
        let ref_i = s.0[i][0];
        s.0[i][1..]
            .iter()
            .map(|&ai| {
                s.0[j]
                    .iter()
                    .map(|&aj| {
                        let at = g.with_action(g.with_action(base, j, aj), i, ai);
                        let at_ref = g.with_action(at, i, ref_i);
                        g.utility(i, at) - g.utility(i, at_ref)
                    })
                    .collect()
            })
            .collect()
    };
    let (i, j) = (mixers[0], mixers[1]);
    Ok(independent(&family(i, j)) && independent(&family(j, i)))
}

/// True iff `|S_i| - 1 <= sum_{j != i} (|S_j| - 1)` for every `i`.
pub fn polygon_check(sizes: &[usize]) -> bool {
    let total: usize = sizes.iter().map(|&s| s.saturating_sub(1)).sum();
    sizes.iter().all(|&s| {
        let own = s.saturating_sub(1);
        own <= total - own
    })
}

/// Equilibria of a two-agent game supported exactly on `s`, when the
/// indifference system pins one down uniquely.
pub fn two_player_support_solve(g: &Game, s: &Support) -> Result<Vec<ProductDist>> {
    if g.n() != 2 {
        return Err(Error::Precondition("two agents required".into()));
    }
    let counts = g.action_counts();
    s.0.iter()
        .zip(counts)
        .try_for_each(|(set, &c)| {
            if set.is_empty() || set.iter().any(|&a| a >= c) {
                Err(Error::Invalid("support out of range".into()))
            } else {
                Ok(())
            }
        })?;
    // Agent `who` is made indifferent by the mix of `other`.
    let mix_for = |who: usize| -> Result<Option<Vec<Rational>>> {
        let other = 1 - who;
        let k = s.0[other].len();
        let mut a = RationalMatrix::zeros(0, k + 1);
        let mut b = Vec::new();
        for &x in &s.0[who] {
            let mut row = Vec::with_capacity(k + 1);
            for &y in &s.0[other] {
                let prof = if who == 0 { [x, y] } else { [y, x] };
                row.push(g.utility(who, g.index(&prof)?).clone());
            }
            row.push(-Rational::one());
            a.push_row(&row)?;
            b.push(Rational::zero());
        }
        let mut norm = vec![Rational::one(); k];
        norm.push(Rational::zero());
        a.push_row(&norm)?;
        b.push(Rational::one());
        let Some((x, kernel)) = solve(&a, &b)? else {
            return Ok(None);
        };
        if kernel.dim() > 0 || x[..k].iter().any(|w| !w.is_positive()) {
            return Ok(None);
        }
        let mut w = vec![Rational::zero(); counts[other]];
        for (p, &y) in x.into_iter().zip(&s.0[other]) {
            w[y] = p;
        }
        Ok(Some(w))
    };
    let (Some(w2), Some(w1)) = (mix_for(0)?, mix_for(1)?) else {
        return Ok(Vec::new());
    };
    let nu = ProductDist(vec![w1, w2]);
    Ok(if verify_nash(g, &nu)? { vec![nu] } else { Vec::new() })
}

/// A game in which `nu` is a quasi-strict Nash equilibrium with support `s`.
///
/// Payoffs start as seeded integers in `[-10, 10]`; a constant is then
/// subtracted per own action so that supported actions earn exactly 0 and
/// unsupported ones exactly -1 against `nu_{-i}`.
pub fn fit_utilities(s: &Support, nu: &ProductDist, seed: u64, action_counts: &[usize]) -> Result<Game> {
    nu.check_shape(action_counts)?;
    if nu.support() != *s {
        return Err(Error::Invalid("nu is not supported exactly on S".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = action_counts.len();
    let total: usize = action_counts.iter().product();
    let utilities: Vec<Vec<Rational>> = (0..n)
        .map(|_| (0..total).map(|_| Rational::from(rng.gen_range(-10i64..=10))).collect())
        .collect();
    let raw = Game::new(action_counts.to_vec(), utilities)?;
    let mut fixed = Vec::with_capacity(n);
    for i in 0..n {
        let pay = action_payoffs(&raw, nu, i);
        let shift: Vec<Rational> = pay
            .into_iter()
            .enumerate()
            .map(|(a, p)| if s.contains(i, a) { p } else { p + Rational::one() })
            .collect();
        fixed.push(
            (0..total)
                .map(|idx| raw.utility(i, idx) - &shift[raw.action_of(idx, i)])
                .collect(),
        );
    }
    let g = Game::new(action_counts.to_vec(), fixed)?;
    if !is_quasi_strict(&g, nu)? {
        return Err(Error::Certificate("fitted game is not quasi-strict".into()));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{aumann_game, matching_pennies, parity_cycle_game};
    use crate::linalg::q;

    #[test]
    fn aumann_equilibria() {
        let g = aumann_game();
        let u = ProductDist::uniform(&[2, 2]);
        assert!(verify_nash(&g, &u).unwrap());
        assert!(is_quasi_strict(&g, &u).unwrap());
        assert!(!verify_nash(&g, &ProductDist::pure(&[0, 0], &[2, 2])).unwrap());
        let rep = is_regular(&g, &u).unwrap();
        assert!(rep.regular);
        assert_eq!(rep.jacobian.rows(), 2);
        assert!(rep.jacobian.get(0, 0).is_zero() && rep.jacobian.get(1, 1).is_zero());
        assert!(two_mixer_regularity(&g, &u).unwrap());
    }

    #[test]
    fn support_solving() {
        let g = aumann_game();
        let full = Support::full(&[2, 2]);
        assert_eq!(two_player_support_solve(&g, &full).unwrap(), vec![ProductDist::uniform(&[2, 2])]);
        let tr = Support(vec![vec![0], vec![1]]);
        let sol = two_player_support_solve(&g, &tr).unwrap();
        assert_eq!(sol, vec![ProductDist::pure(&[0, 1], &[2, 2])]);
        let j = sol[0].to_joint();
        assert_eq!(crate::game::pair(&g, 0, &j.0), q(4, 1));
        assert_eq!(crate::game::pair(&g, 1, &j.0), q(1, 1));
        let mp = matching_pennies();
        assert_eq!(two_player_support_solve(&mp, &full).unwrap(), vec![ProductDist::uniform(&[2, 2])]);
        assert!(two_player_support_solve(&mp, &tr).unwrap().is_empty());
    }

    #[test]
    fn duplicated_action_is_not_quasi_strict() {
        // Agent 0's third action copies the second one.
        let base = aumann_game();
        let g = Game::from_fn(vec![3, 2], |i, a| {
            let a0 = a[0].min(1);
            base.utility(i, base.index(&[a0, a[1]]).unwrap()).clone()
        })
        .unwrap();
        let nu = ProductDist(vec![vec![q(1, 2), q(1, 2), q(0, 1)], vec![q(1, 2), q(1, 2)]]);
        assert!(verify_nash(&g, &nu).unwrap());
        assert!(!is_quasi_strict(&g, &nu).unwrap());
        let rep = is_regular(&g, &nu).unwrap();
        assert!(!rep.regular);
        assert!(!two_mixer_regularity(&g, &nu).unwrap());
    }

    #[test]
    fn identical_rows_break_two_mixer_regularity() {
        // Both agents are indifferent everywhere: payoff vectors vanish.
        let g = Game::from_fn(vec![2, 2], |_, _| q(1, 1)).unwrap();
        let u = ProductDist::uniform(&[2, 2]);
        assert!(!two_mixer_regularity(&g, &u).unwrap());
        assert!(!is_regular(&g, &u).unwrap().regular);
    }

    #[test]
    fn parity_game_jacobian() {
        let g = parity_cycle_game();
        let u = ProductDist::uniform(&[2, 2, 2]);
        let rep = is_regular(&g, &u).unwrap();
        assert_eq!(rep.jacobian.rows(), 3);
        assert!(rep.regular);
    }

    #[test]
    fn pure_strict_is_regular() {
        let g = aumann_game();
        let nu = ProductDist::pure(&[0, 1], &[2, 2]);
        let rep = is_regular(&g, &nu).unwrap();
        assert_eq!(rep.jacobian.rows(), 0);
        assert!(rep.regular);
    }

    #[test]
    fn polygon() {
        assert!(!polygon_check(&[4, 2, 2]));
        assert!(polygon_check(&[2, 2]));
        assert!(!polygon_check(&[3, 1]));
        assert!(polygon_check(&[1, 1, 1]));
    }

    #[test]
    fn fitted_games() {
        for seed in 0..20 {
            let counts = [3, 2, 3];
            let s = Support::new(vec![vec![0, 2], vec![0, 1], vec![1]], &counts).unwrap();
            let nu = ProductDist(vec![
                vec![q(1, 3), q(0, 1), q(2, 3)],
                vec![q(1, 4), q(3, 4)],
                vec![q(0, 1), q(1, 1), q(0, 1)],
            ]);
            let g = fit_utilities(&s, &nu, seed, &counts).unwrap();
            assert!(verify_nash(&g, &nu).unwrap());
            assert!(is_quasi_strict(&g, &nu).unwrap());
            assert_eq!(fit_utilities(&s, &nu, seed, &counts).unwrap(), g);
            assert_eq!(
                two_mixer_regularity(&g, &nu).unwrap(),
                is_regular(&g, &nu).unwrap().regular
            );
        }
    }
}
