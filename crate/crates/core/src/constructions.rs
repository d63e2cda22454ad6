//! Disjoint cylinder packings and the prediction game built on them.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, ProductDist};
use crate::improve::{all_utilities, multi_improve_lp, payoff_face_dimension};
use crate::linalg::{NullSpace, Rational};
use crate::nash::verify_nash;
use crate::polytope::{tangent_dim, tangent_system};

/// Packing of disjoint `i`-cylinders `S_i x B_-i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderPacking {
    pub sizes: Vec<usize>,
    /// Number of separation coordinates; these are the first `kc` agents.
    pub kc: usize,
    pub codewords: Vec<Vec<u8>>,
    /// `boxes[i][j]` lists the actions of agent `j` allowed in cylinder `i`; `boxes[i][i]` is all of `S_i`.
    pub boxes: Vec<Vec<Vec<usize>>>,
}

impl CylinderPacking {
    pub fn cylinder_size(&self, i: usize) -> BigUint {
        self.boxes[i].iter().map(|s| BigUint::from(s.len())).product()
    }

    /// `|B_-i|`.
    pub fn opponent_box_size(&self, i: usize) -> BigUint {
        self.boxes[i]
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, s)| BigUint::from(s.len()))
            .product()
    }

    pub fn contains(&self, i: usize, a: &[usize]) -> bool {
        a.iter().zip(&self.boxes[i]).all(|(x, s)| s.contains(x))
    }
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn codewords(n: usize, kc: usize) -> Vec<Vec<u8>> {
    let unit = |j: usize| -> Vec<u8> { (0..kc).map(|t| u8::from(t == j)).collect() };
    let mut words: Vec<Vec<u8>> = (0..kc)
        .map(|i| (0..kc).map(|t| u8::from(t == i || t == (i + 1) % kc)).collect())
        .collect();
    let mut excluded: Vec<Vec<u8>> = (0..kc).map(unit).collect();
    excluded.extend(words.iter().cloned());
    // Words in lexicographic order, first coordinate most significant.
    let rest = (0u64..1 << kc)
        .map(|x| (0..kc).map(|t| ((x >> (kc - 1 - t)) & 1) as u8).collect::<Vec<u8>>())
        .filter(|w| !excluded.contains(w));
    words.extend(rest.take(n - kc));
    words
}

/// Packing with `ceil(log2 n) + 1` separation coordinates, each split into a lower and an upper half.
pub fn cylinder_pack(sizes: &[usize]) -> Result<CylinderPacking> {
    let n = sizes.len();
    if n < 3 {
        return Err(Error::Precondition(format!("cylinder packing needs at least 3 agents, got {n}")));
    }
    if let Some(i) = sizes.iter().position(|&m| m < 2) {
        return Err(Error::Precondition(format!("agent {i} has fewer than 2 actions")));
    }
    let kc = ceil_log2(n) + 1;
    let codewords = codewords(n, kc);
    if codewords.len() != n {
        return Err(Error::Invalid("ran out of codewords".into()));
    }
    let boxes = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j == i || j >= kc {
                        (0..sizes[j]).collect()
                    } else if codewords[i][j] == 0 {
                        (0..sizes[j] / 2).collect()
                    } else {
                        (sizes[j] / 2..sizes[j]).collect()
                    }
                })
                .collect()
        })
        .collect();
    Ok(CylinderPacking {
        sizes: sizes.to_vec(),
        kc,
        codewords,
        boxes,
    })
}

/// Every pair of codewords differs on a separation coordinate other than the two agents.
pub fn separation_holds(p: &CylinderPacking) -> bool {
    let n = p.codewords.len();
    (0..n).all(|i| {
        (i + 1..n).all(|i2| (0..p.kc).any(|j| j != i && j != i2 && p.codewords[i][j] != p.codewords[i2][j]))
    })
}

/// Pairwise disjointness (some coordinate with disjoint allowed sets), the
/// `|C_i| 3^kc >= prod |S_j|` volume bound and the separation property.
pub fn verify_packing(p: &CylinderPacking) -> bool {
    let n = p.sizes.len();
    if p.boxes.len() != n || p.boxes.iter().any(|b| b.len() != n) {
        return false;
    }
    for i in 0..n {
        if p.boxes[i][i].len() != p.sizes[i] {
            return false;
        }
        for i2 in i + 1..n {
            let disjoint = (0..n).any(|j| p.boxes[i][j].iter().all(|x| !p.boxes[i2][j].contains(x)));
            if !disjoint {
                return false;
            }
        }
    }
    let total: BigUint = p.sizes.iter().map(|&m| BigUint::from(m)).product();
    let scale = BigUint::from(3u8).pow(p.kc as u32);
    if (0..n).any(|i| p.cylinder_size(i) * &scale < total) {
        return false;
    }
    separation_holds(p)
}

/// Prediction game: agent `i` earns 1 when the others play `f_i(a_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalGame {
    pub game: Game,
    /// Agents with at least two actions, in order.
    pub strategic: Vec<usize>,
    pub packing: CylinderPacking,
    /// `predictions[s][a]` is the full profile `(a, f_i(a))` for the `s`-th strategic agent `i`.
    pub predictions: Vec<Vec<Vec<usize>>>,
    /// `sum |S_i| + prod |S_i| - sum |S_i|^2 - 1` over strategic agents.
    pub expected_q: i128,
}

/// First `count` profiles of the box in lexicographic order, lowest agent most significant.
fn first_profiles(sets: &[Vec<usize>], count: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    let mut pos = vec![0usize; sets.len()];
    while out.len() < count {
        out.push(pos.iter().zip(sets).map(|(&p, s)| s[p]).collect());
        let mut j = sets.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            pos[j] += 1;
            if pos[j] < sets[j].len() {
                break;
            }
            pos[j] = 0;
        }
    }
    out
}

pub fn canonical_game(sizes: &[usize]) -> Result<CanonicalGame> {
    if sizes.contains(&0) {
        return Err(Error::Invalid("action sets must be nonempty".into()));
    }
    let strategic: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] >= 2).collect();
    let ssizes: Vec<usize> = strategic.iter().map(|&i| sizes[i]).collect();
    let packing = cylinder_pack(&ssizes)?;
    let mut predictions = Vec::with_capacity(strategic.len());
    for (s, &i) in strategic.iter().enumerate() {
        if packing.opponent_box_size(s) < BigUint::from(ssizes[s]) {
            return Err(Error::Precondition(format!(
                "cylinder for agent {i} has {} opponent profiles, fewer than its {} actions",
                packing.opponent_box_size(s),
                ssizes[s]
            )));
        }
        // Box over all agents with agent i pinned to 0, then overwrite agent i's action.
        let mut sets: Vec<Vec<usize>> = vec![vec![0]; sizes.len()];
        for (t, &j) in strategic.iter().enumerate() {
            if t != s {
                sets[j] = packing.boxes[s][t].clone();
            }
        }
        let mut targets = first_profiles(&sets, ssizes[s]);
        for (a, prof) in targets.iter_mut().enumerate() {
            prof[i] = a;
        }
        predictions.push(targets);
    }
    let mut utilities = vec![vec![Rational::zero(); sizes.iter().product()]; sizes.len()];
    let probe = Game::from_fn(sizes.to_vec(), |_, _| Rational::zero())?;
    for (s, &i) in strategic.iter().enumerate() {
        for prof in &predictions[s] {
            utilities[i][probe.index(prof)?] = Rational::one();
        }
    }
    let mut game = Game::new(sizes.to_vec(), utilities)?;
    let dummies: Vec<usize> = (0..sizes.len()).filter(|&i| sizes[i] == 1).collect();
    if !dummies.is_empty() {
        game = assign_dummy_utilities(game, &dummies)?;
    }
    let sum: i128 = ssizes.iter().map(|&m| m as i128).sum();
    let sq: i128 = ssizes.iter().map(|&m| (m * m) as i128).sum();
    let prod: i128 = ssizes.iter().map(|&m| m as i128).product();
    Ok(CanonicalGame {
        game,
        strategic,
        packing,
        predictions,
        expected_q: sum + prod - sq - 1,
    })
}

/// Gives each dummy the indicator of a profile on which some kernel vector of
/// the payoff map is nonzero, so each one shrinks the kernel by one.
fn assign_dummy_utilities(game: Game, dummies: &[usize]) -> Result<Game> {
    let counts = game.action_counts().to_vec();
    let support = ProductDist::uniform(&counts).support();
    let columns: Vec<usize> = (0..game.num_profiles()).collect();
    let mut rows = tangent_system(&game, &support, &columns);
    for i in 0..game.n() {
        if !dummies.contains(&i) {
            rows.push(game.utilities(i).to_vec());
        }
    }
    let mut utilities: Vec<Vec<Rational>> = (0..game.n()).map(|i| game.utilities(i).to_vec()).collect();
    for &d in dummies {
        let kernel = NullSpace::of_rows(rows.clone(), columns.len());
        let Some(&c) = kernel.free_columns().first() else {
            break;
        };
        let mut row = vec![Rational::zero(); columns.len()];
        row[c] = Rational::one();
        utilities[d] = row.clone();
        rows.push(row);
    }
    Game::new(counts, utilities)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalCertificate {
    pub nash: bool,
    pub dim_t: usize,
    pub q: i128,
    pub image_dim: usize,
    pub expected_image_dim: usize,
    pub t_star: Option<Rational>,
}

/// Checks that the uniform profile is Nash, `dim T = Q`, the payoff image has
/// dimension `min(n, Q)` and, when `Q >= n`, a strict Pareto improvement exists.
pub fn certify_canonical(cg: &CanonicalGame) -> Result<CanonicalCertificate> {
    let g = &cg.game;
    let nu = ProductDist::uniform(g.action_counts());
    let fail = |what: String| Err(Error::Certificate(what));
    if !verify_nash(g, &nu)? {
        return fail("uniform profile is not a Nash equilibrium".into());
    }
    let dim_t = tangent_dim(g, &nu)?;
    if dim_t as i128 != cg.expected_q {
        return fail(format!("tangent dimension {dim_t}, expected {}", cg.expected_q));
    }
    let face = payoff_face_dimension(g, &nu)?;
    let expected_image_dim = (g.n() as i128).min(cg.expected_q).max(0) as usize;
    if face.image_dim != expected_image_dim {
        return fail(format!("payoff image dimension {}, expected {expected_image_dim}", face.image_dim));
    }
    let t_star = if cg.expected_q >= g.n() as i128 {
        let m = multi_improve_lp(g, &nu, &all_utilities(g))?;
        if !m.t_star.is_positive() {
            return fail(format!("smallest utility gain t* = {} is not positive", m.t_star));
        }
        Some(m.t_star)
    } else {
        None
    };
    Ok(CanonicalCertificate {
        nash: true,
        dim_t,
        q: cg.expected_q,
        image_dim: face.image_dim,
        expected_image_dim,
        t_star,
    })
}
