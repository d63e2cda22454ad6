//! Finite normal-form games, distributions over profiles, and symmetry.
//!
//! Profiles are indexed with agent 0 varying fastest:
//! `index = a_0 + |A_0| * (a_1 + |A_1| * (...))`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{q, Rational};
use crate::symmetric::enumerate_compositions;

/// Index of a profile; agent 0 is the fastest-varying coordinate.
pub fn profile_index(a: &[usize], counts: &[usize]) -> Result<usize> {
    if a.len() != counts.len() {
        return Err(Error::Dimension(format!(
            "profile has {} actions for {} agents",
            a.len(),
            counts.len()
        )));
    }
    let mut idx = 0usize;
    for i in (0..a.len()).rev() {
        if a[i] >= counts[i] {
            return Err(Error::Invalid(format!(
                "action {} of agent {i} is out of range 0..{}",
                a[i], counts[i]
            )));
        }
        idx = idx * counts[i] + a[i];
    }
    Ok(idx)
}

/// Inverse of [`profile_index`].
pub fn profile_unindex(mut idx: usize, counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .map(|&c| {
            let a = idx % c;
            idx /= c;
            a
        })
        .collect()
}

/// Calls `f(index, profile)` for every profile in index order.
pub fn for_each_profile(counts: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = counts.iter().product();
    let mut a = vec![0usize; counts.len()];
    for idx in 0..total {
        f(idx, &a);
        for (x, &c) in a.iter_mut().zip(counts) {
            *x += 1;
            if *x < c {
                break;
            }
            *x = 0;
        }
    }
}

/// Action counts of everyone except agent `i`, in agent order.
pub fn opponent_counts(counts: &[usize], i: usize) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &c)| c)
        .collect()
}

/// Index of `a_{-i}` within the opponent profile space of agent `i`.
pub fn opponent_index(a: &[usize], counts: &[usize], i: usize) -> usize {
    let mut idx = 0usize;
    for j in (0..a.len()).rev() {
        if j != i {
            idx = idx * counts[j] + a[j];
        }
    }
    idx
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Game {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    utilities: Vec<Vec<Rational>>,
}

impl Game {
    pub fn new(action_counts: Vec<usize>, utilities: Vec<Vec<Rational>>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::Invalid("a game needs at least one agent".into()));
        }
        if let Some(i) = action_counts.iter().position(|&c| c == 0) {
            return Err(Error::Invalid(format!("agent {i} has no actions")));
        }
        let total = action_counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .ok_or_else(|| Error::Invalid("profile space too large".into()))?;
        if utilities.len() != action_counts.len() {
            return Err(Error::Dimension(format!(
                "{} utility tables for {} agents",
                utilities.len(),
                action_counts.len()
            )));
        }
        for (i, u) in utilities.iter().enumerate() {
            if u.len() != total {
                return Err(Error::Dimension(format!(
                    "agent {i} has {} utilities, expected {total}",
                    u.len()
                )));
            }
        }
        let mut strides = Vec::with_capacity(action_counts.len());
        let mut s = 1;
        for &c in &action_counts {
            strides.push(s);
            s *= c;
        }
        Ok(Self {
            action_counts,
            strides,
            utilities,
        })
    }

    /// Builds a game from a payoff function of `(agent, profile)`.
    pub fn from_fn(action_counts: Vec<usize>, f: impl Fn(usize, &[usize]) -> Rational) -> Result<Self> {
        let n = action_counts.len();
        let mut utilities = vec![Vec::new(); n];
        for_each_profile(&action_counts, |_, a| {
            for (i, u) in utilities.iter_mut().enumerate() {
                u.push(f(i, a));
            }
        });
        Self::new(action_counts, utilities)
    }

    pub fn n(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.utilities[0].len()
    }

    /// Index stride of agent `i`: changing `a_i` by one moves the index by this much.
    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    /// Agent `i`'s action in the profile with the given index.
    pub fn action_of(&self, idx: usize, i: usize) -> usize {
        (idx / self.strides[i]) % self.action_counts[i]
    }

    /// Index of the profile obtained by replacing agent `i`'s action.
    pub fn with_action(&self, idx: usize, i: usize, b: usize) -> usize {
        let a = self.action_of(idx, i);
        idx - a * self.strides[i] + b * self.strides[i]
    }

    pub fn utilities(&self, i: usize) -> &[Rational] {
        &self.utilities[i]
    }

    pub fn utility(&self, i: usize, idx: usize) -> &Rational {
        &self.utilities[i][idx]
    }

    pub fn index(&self, a: &[usize]) -> Result<usize> {
        profile_index(a, &self.action_counts)
    }

    pub fn unindex(&self, idx: usize) -> Vec<usize> {
        profile_unindex(idx, &self.action_counts)
    }

    /// Per-profile sum of all agents' utilities.
    pub fn welfare_vector(&self) -> Vec<Rational> {
        (0..self.num_profiles())
            .map(|k| self.utilities.iter().map(|u| &u[k]).sum())
            .collect()
    }

    /// Returns the game with `u_i(a) + delta_i(a_{-i})`, where `deltas[i]` is
    /// indexed by [`opponent_index`].
    pub fn strategic_shift(&self, deltas: &[Vec<Rational>]) -> Result<Game> {
        if deltas.len() != self.n() {
            return Err(Error::Dimension(format!(
                "{} delta tables for {} agents",
                deltas.len(),
                self.n()
            )));
        }
        for (i, d) in deltas.iter().enumerate() {
            let want = self.num_profiles() / self.action_counts[i];
            if d.len() != want {
                return Err(Error::Dimension(format!(
                    "delta for agent {i} has {} entries, expected {want}",
                    d.len()
                )));
            }
        }
        let counts = &self.action_counts;
        let mut utilities = self.utilities.clone();
        for_each_profile(counts, |idx, a| {
            for (i, u) in utilities.iter_mut().enumerate() {
                let d = &deltas[i][opponent_index(a, counts, i)];
                if !d.is_zero() {
                    u[idx] += d;
                }
            }
        });
        Game::new(counts.clone(), utilities)
    }

    /// Anonymous payoff table if the game is invariant under all permutations of agents.
    pub fn detect_symmetry(&self) -> Option<AnonymousForm> {
        let n = self.n();
        let m = self.action_counts[0];
        if self.action_counts.iter().any(|&c| c != m) {
            return None;
        }
        // Adjacent transpositions generate all permutations.
        for t in 0..n.saturating_sub(1) {
            for idx in 0..self.num_profiles() {
                let (x, y) = (self.action_of(idx, t), self.action_of(idx, t + 1));
                let sw = self.with_action(self.with_action(idx, t, y), t + 1, x);
                for j in 0..n {
                    let pj = if j == t {
                        t + 1
                    } else if j == t + 1 {
                        t
                    } else {
                        j
                    };
                    if self.utilities[j][idx] != self.utilities[pj][sw] {
                        return None;
                    }
                }
            }
        }
        Some(AnonymousForm::from_fn(n, m, |a, opp| {
            let mut profile = vec![a];
            for (b, &k) in opp.iter().enumerate() {
                profile.extend(std::iter::repeat_n(b, k));
            }
            self.utilities[0][self.index(&profile).expect("valid profile")].clone()
        }))
    }
}

/// Payoff `g(a; c)` of an agent playing `a` when the other `n - 1` agents
/// have action counts `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnonymousForm {
    n: usize,
    m: usize,
    compositions: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    table: Vec<Vec<Rational>>,
}

impl AnonymousForm {
    pub fn from_fn(n: usize, m: usize, g: impl Fn(usize, &[usize]) -> Rational) -> Self {
        let compositions = enumerate_compositions(n - 1, m);
        let lookup = compositions
            .iter()
            .enumerate()
            .map(|(k, c)| (c.clone(), k))
            .collect();
        let table = (0..m)
            .map(|a| compositions.iter().map(|c| g(a, c)).collect())
            .collect();
        Self {
            n,
            m,
            compositions,
            lookup,
            table,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Opponent compositions, in the order used by [`AnonymousForm::table`].
    pub fn compositions(&self) -> &[Vec<usize>] {
        &self.compositions
    }

    /// `table()[a][k]` is the payoff of `a` against `compositions()[k]`.
    pub fn table(&self) -> &[Vec<Rational>] {
        &self.table
    }

    pub fn payoff(&self, a: usize, opponents: &[usize]) -> Option<&Rational> {
        self.lookup.get(opponents).map(|&k| &self.table[a][k])
    }

    /// Expands back to a full game with `n` agents.
    pub fn to_game(&self) -> Result<Game> {
        let m = self.m;
        Game::from_fn(vec![m; self.n], |i, a| {
            let mut c = vec![0usize; m];
            for (j, &x) in a.iter().enumerate() {
                if j != i {
                    c[x] += 1;
                }
            }
            self.payoff(a[i], &c).expect("composition").clone()
        })
    }
}

/// Supports `S_i`, sorted, one nonempty list per agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support(pub Vec<Vec<usize>>);

impl Support {
    pub fn new(sets: Vec<Vec<usize>>, counts: &[usize]) -> Result<Self> {
        if sets.len() != counts.len() {
            return Err(Error::Dimension("support per agent".into()));
        }
        let mut out = Vec::with_capacity(sets.len());
        for (i, mut s) in sets.into_iter().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() || s.iter().any(|&a| a >= counts[i]) {
                return Err(Error::Invalid(format!("bad support for agent {i}")));
            }
            out.push(s);
        }
        Ok(Support(out))
    }

    /// The full action set of every agent.
    pub fn full(counts: &[usize]) -> Self {
        Support(counts.iter().map(|&c| (0..c).collect()).collect())
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    /// Number of agents with at least two actions in their support.
    pub fn mixers(&self) -> usize {
        self.0.iter().filter(|s| s.len() >= 2).count()
    }

    pub fn contains(&self, i: usize, a: usize) -> bool {
        self.0[i].binary_search(&a).is_ok()
    }

    pub fn contains_profile(&self, a: &[usize]) -> bool {
        a.iter().enumerate().all(|(i, &x)| self.contains(i, x))
    }

    /// Smallest action in each support.
    pub fn reference(&self) -> Vec<usize> {
        self.0.iter().map(|s| s[0]).collect()
    }

    /// Indices of the profiles in `S_1 x ... x S_n`, ascending.
    pub fn profile_indices(&self, counts: &[usize]) -> Vec<usize> {
        let sizes = self.sizes();
        let mut out = Vec::with_capacity(sizes.iter().product());
        for_each_profile(&sizes, |_, pos| {
            let a: Vec<usize> = pos.iter().enumerate().map(|(i, &p)| self.0[i][p]).collect();
            out.push(profile_index(&a, counts).expect("support in range"));
        });
        out.sort_unstable();
        out
    }
}

/// One distribution per agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductDist(pub Vec<Vec<Rational>>);

impl ProductDist {
    pub fn new(weights: Vec<Vec<Rational>>) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            if w.iter().any(Rational::is_negative) {
                return Err(Error::Invalid(format!("negative weight for agent {i}")));
            }
            if w.iter().sum::<Rational>() != Rational::one() {
                return Err(Error::Invalid(format!("weights of agent {i} do not sum to 1")));
            }
        }
        Ok(Self(weights))
    }

    pub fn uniform(counts: &[usize]) -> Self {
        Self(
            counts
                .iter()
                .map(|&c| vec![q(1, c as i64); c])
                .collect(),
        )
    }

    /// Uniform on each agent's support set.
    pub fn uniform_on(support: &Support, counts: &[usize]) -> Self {
        Self(
            support
                .0
                .iter()
                .zip(counts)
                .map(|(s, &c)| {
                    let mut w = vec![Rational::zero(); c];
                    for &a in s {
                        w[a] = q(1, s.len() as i64);
                    }
                    w
                })
                .collect(),
        )
    }

    pub fn pure(profile: &[usize], counts: &[usize]) -> Self {
        Self(
            profile
                .iter()
                .zip(counts)
                .map(|(&a, &c)| {
                    let mut w = vec![Rational::zero(); c];
                    w[a] = Rational::one();
                    w
                })
                .collect(),
        )
    }

    pub fn check_shape(&self, counts: &[usize]) -> Result<()> {
        let ok = self.0.len() == counts.len() && self.0.iter().zip(counts).all(|(w, &c)| w.len() == c);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("product distribution does not match the game".into()))
        }
    }

    pub fn support(&self) -> Support {
        Support(
            self.0
                .iter()
                .map(|w| (0..w.len()).filter(|&a| !w[a].is_zero()).collect())
                .collect(),
        )
    }

    pub fn to_joint(&self) -> JointDist {
        let counts: Vec<usize> = self.0.iter().map(Vec::len).collect();
        let mut weights = Vec::with_capacity(counts.iter().product());
        for_each_profile(&counts, |_, a| {
            let mut p = Rational::one();
            for (i, &x) in a.iter().enumerate() {
                if p.is_zero() {
                    break;
                }
                p = &p * &self.0[i][x];
            }
            weights.push(p);
        });
        JointDist(weights)
    }
}

/// Weight per profile index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointDist(pub Vec<Rational>);

impl JointDist {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.iter().any(Rational::is_negative) {
            return Err(Error::Invalid("negative weight".into()));
        }
        if weights.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::Invalid("weights do not sum to 1".into()));
        }
        Ok(Self(weights))
    }

    pub fn point_mass(idx: usize, total: usize) -> Self {
        let mut w = vec![Rational::zero(); total];
        w[idx] = Rational::one();
        Self(w)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&k| !self.0[k].is_zero()).collect()
    }
}

/// Either form of distribution accepted by [`expected_utility`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distribution {
    Joint(JointDist),
    Product(ProductDist),
}

impl Distribution {
    pub fn to_joint(&self) -> JointDist {
        match self {
            Distribution::Joint(j) => j.clone(),
            Distribution::Product(p) => p.to_joint(),
        }
    }
}

/// `sum_a u_i(a) w(a)` for any signed weight vector.
pub fn pair(g: &Game, i: usize, w: &[Rational]) -> Rational {
    crate::linalg::matrix::dot(w, g.utilities(i))
}

pub fn expected_utility(g: &Game, d: &Distribution, i: usize) -> Result<Rational> {
    let j = d.to_joint();
    if j.0.len() != g.num_profiles() {
        return Err(Error::Dimension("distribution does not match the game".into()));
    }
    Ok(pair(g, i, &j.0))
}

pub fn expected_welfare(g: &Game, w: &[Rational]) -> Rational {
    (0..g.n()).map(|i| pair(g, i, w)).sum()
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    players: usize,
    actions: Vec<usize>,
    utilities: Vec<Vec<Rational>>,
}

impl Serialize for Game {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GameFile {
            players: self.n(),
            actions: self.action_counts.clone(),
            utilities: self.utilities.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Game {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = GameFile::deserialize(d)?;
        if f.players != f.actions.len() {
            return Err(serde::de::Error::custom(format!(
                "players = {} but {} action counts given",
                f.players,
                f.actions.len()
            )));
        }
        Game::new(f.actions, f.utilities).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum DistFile {
    Joint { weights: Vec<Rational> },
    Product { weights: Vec<Vec<Rational>> },
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Distribution::Joint(j) => DistFile::Joint {
                weights: j.0.clone(),
            },
            Distribution::Product(p) => DistFile::Product {
                weights: p.0.clone(),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match DistFile::deserialize(d)? {
            DistFile::Joint { weights } => JointDist::new(weights)
                .map(Distribution::Joint)
                .map_err(serde::de::Error::custom),
            DistFile::Product { weights } => ProductDist::new(weights)
                .map(Distribution::Product)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Aumann's 2x2 game of chicken: actions (top, bottom) x (left, right).
pub fn aumann_game() -> Game {
    let ints = |v: [i64; 4]| v.iter().map(|&x| Rational::from(x)).collect();
    Game::new(vec![2, 2], vec![ints([0, 1, 4, 3]), ints([0, 4, 1, 3])]).expect("valid game")
}

/// Three agents with binary actions, where agent `i` is paid `(-1)^(a_i + a_{i+1})` cyclically.
pub fn parity_cycle_game() -> Game {
    Game::from_fn(vec![2, 2, 2], |i, a| {
        let s = a[i] + a[(i + 1) % 3];
        Rational::from(if s % 2 == 0 { 1 } else { -1 })
    })
    .expect("valid game")
}

/// Matching pennies: agent 0 wins on a match.
pub fn matching_pennies() -> Game {
    Game::from_fn(vec![2, 2], |i, a| {
        let m = if a[0] == a[1] { 1 } else { -1 };
        Rational::from(if i == 0 { m } else { -m })
    })
    .expect("valid game")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn indexing() {
        assert_eq!(profile_index(&[0, 0], &[2, 2]).unwrap(), 0);
        assert_eq!(profile_index(&[1, 0], &[2, 2]).unwrap(), 1);
        assert_eq!(profile_index(&[1, 1, 1], &[2, 2, 2]).unwrap(), 7);
        assert!(profile_index(&[2, 0], &[2, 2]).is_err());
    }

    #[test]
    fn aumann_values() {
        let g = aumann_game();
        let u = Distribution::Product(ProductDist::uniform(&[2, 2]));
        assert_eq!(expected_utility(&g, &u, 0).unwrap(), q(2, 1));
        assert_eq!(expected_welfare(&g, &u.to_joint().0), q(4, 1));
        let third = q(1, 3);
        let mu = JointDist::new(vec![Rational::zero(), third.clone(), third.clone(), third]).unwrap();
        assert_eq!(expected_welfare(&g, &mu.0), q(16, 3));
        for k in 0..4 {
            let pm = Distribution::Joint(JointDist::point_mass(k, 4));
            assert_eq!(&expected_utility(&g, &pm, 1).unwrap(), g.utility(1, k));
        }
    }

    #[test]
    fn symmetry_detection() {
        assert!(aumann_game().detect_symmetry().is_some());
        let asym = Game::new(vec![2, 2], vec![
            vec![q(0, 1), q(1, 1), q(4, 1), q(3, 1)],
            vec![q(0, 1), q(1, 1), q(4, 1), q(3, 1)],
        ])
        .unwrap();
        assert!(asym.detect_symmetry().is_none());
        let single = Game::new(vec![3], vec![vec![q(1, 1), q(2, 1), q(3, 1)]]).unwrap();
        let af = single.detect_symmetry().unwrap();
        assert_eq!(af.payoff(2, &[0, 0, 0]), Some(&q(3, 1)));
        assert!(parity_cycle_game().detect_symmetry().is_none());
    }

    #[test]
    fn anonymous_round_trip() {
        let af = AnonymousForm::from_fn(3, 2, |a, c| Rational::from((a * 10 + c[1]) as i64));
        let g = af.to_game().unwrap();
        assert_eq!(g.detect_symmetry().unwrap(), af);
    }

    #[test]
    fn shift_keeps_differences() {
        let g = aumann_game();
        let d = vec![vec![q(1, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]];
        let h = g.strategic_shift(&d).unwrap();
        for k in 0..4 {
            assert_eq!(h.utility(0, k), &(g.utility(0, k) + q(1, 1)));
        }
        let zero = vec![vec![Rational::zero(); 2]; 2];
        assert_eq!(g.strategic_shift(&zero).unwrap(), g);
    }

    #[test]
    fn file_round_trip() {
        let g = aumann_game();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"players":2,"actions":[2,2],"utilities":[["0","1","4","3"],["0","4","1","3"]]}"#);
        let back: Game = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        let d: Distribution =
            serde_json::from_str(r#"{"type":"product","weights":[["1/2","1/2"],[0,1]]}"#).unwrap();
        assert!(matches!(d, Distribution::Product(_)));
        assert!(serde_json::from_str::<Distribution>(r#"{"type":"joint","weights":["1/2"]}"#).is_err());
    }

    proptest! {
        #[test]
        fn index_bijection(counts in proptest::collection::vec(1usize..4, 1..5)) {
            let total: usize = counts.iter().product();
            for idx in 0..total {
                let a = profile_unindex(idx, &counts);
                prop_assert_eq!(profile_index(&a, &counts).unwrap(), idx);
            }
        }

        #[test]
        fn symmetric_games_are_anonymous(n in 1usize..5, m in 1usize..4, seed in 0i64..1000) {
            let af = AnonymousForm::from_fn(n, m, |a, c| {
                let mut h = seed + a as i64 * 7;
                for (j, &k) in c.iter().enumerate() {
                    h = h.wrapping_mul(31).wrapping_add((j * 13 + k) as i64);
                }
                Rational::from(h % 17)
            });
            let g = af.to_game().unwrap();
            prop_assert!(g.detect_symmetry().is_some());
            for idx in 0..g.num_profiles() {
                let a = g.unindex(idx);
                for i in 0..n {
                    let mut c = vec![0; m];
                    for (j, &x) in a.iter().enumerate() {
                        if j != i { c[x] += 1; }
                    }
                    prop_assert_eq!(g.utility(i, idx), af.payoff(a[i], &c).unwrap());
                }
            }
        }
    }
}
