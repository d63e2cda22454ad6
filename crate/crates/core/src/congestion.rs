//! Binary-action congestion games `u_i = f(share of ones)` for action 1, `0` for action 0.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AnonymousForm, Game};
use crate::linalg::{lp_solve, LpProblem, LpStatus, Rational};
use crate::poly::{pow2_inv, Poly, RootBracket};
use crate::symmetric::{symmetric_ce_lp_anonymous, urn_per_capita_welfare, UrnMixture};

/// Bits of precision for root isolation (`2^-42 < 10^-12`).
const ROOT_BITS: u32 = 42;
/// Bits of precision for the two-point optimizer.
const OPT_BITS: u32 = 52;

/// Payoff of action 1 as a function of the share of agents choosing it; `f(1) < 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CongestionFn(Poly);

impl CongestionFn {
    pub fn new(p: Poly) -> Result<Self> {
        if !p.eval(&Rational::one()).is_negative() {
            return Err(Error::Invalid("the payoff at full participation f(1) must be negative".into()));
        }
        Ok(Self(p))
    }

    pub fn poly(&self) -> &Poly {
        &self.0
    }

    pub fn eval(&self, theta: &Rational) -> Rational {
        self.0.eval(theta)
    }

    /// `sum_j |j c_j|`, an upper bound on `|f'|` over `[0, 1]`.
    pub fn lipschitz_bound(&self) -> Rational {
        self.0
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| (c * &Rational::from(j)).abs())
            .sum()
    }
}

fn share(k: usize, n: usize) -> Rational {
    Rational::new(k as i64, n as i64)
}

pub fn build_binary_game(f: &CongestionFn, n: usize) -> Result<Game> {
    if n == 0 {
        return Err(Error::Invalid("at least one agent is required".into()));
    }
    let table: Vec<Rational> = (0..=n).map(|k| f.eval(&share(k, n))).collect();
    Game::from_fn(vec![2; n], |i, a| {
        if a[i] == 1 {
            table[a.iter().sum::<usize>()].clone()
        } else {
            Rational::zero()
        }
    })
}

/// The anonymous table `g(1; c) = f((c_1 + 1) / n)`, `g(0; c) = 0`, without building the game.
pub fn binary_anonymous(f: &CongestionFn, n: usize) -> AnonymousForm {
    AnonymousForm::from_fn(n, 2, |a, c| {
        if a == 1 {
            f.eval(&share(c[1] + 1, n))
        } else {
            Rational::zero()
        }
    })
}

/// Stirling numbers of the second kind `S(e, r)` for `e, r <= d`.
fn stirling2(d: usize) -> Vec<Vec<Rational>> {
    let mut s = vec![vec![Rational::zero(); d + 1]; d + 1];
    s[0][0] = Rational::one();
    for e in 1..=d {
        for r in 1..=e {
            s[e][r] = &s[e - 1][r - 1] + &(&Rational::from(r) * &s[e - 1][r]);
        }
    }
    s
}

/// `h(p) = E[f((K + 1) / n)]` for `K ~ Binomial(n - 1, p)`, as a polynomial in `p`.
///
/// Uses `E[K^e] = sum_r S(e, r) (n-1)_r p^r`, so the degree never exceeds `deg f`.
pub fn indifference_poly(f: &CongestionFn, n: usize) -> Poly {
    let c = f.poly().coeffs();
    let d = c.len().saturating_sub(1);
    let st = stirling2(d);
    let big_n = n as i64 - 1;
    let falling: Vec<Rational> = (0..=d)
        .scan(Rational::one(), |acc, r| {
            let out = acc.clone();
            *acc = &*acc * &Rational::from(big_n - r as i64);
            Some(out)
        })
        .collect();
    // moments[e] = E[K^e] as a polynomial in p.
    let moments: Vec<Poly> = (0..=d)
        .map(|e| {
            let mut coeffs = vec![Rational::zero(); e + 1];
            for r in 0..=e {
                coeffs[r] = &st[e][r] * &falling[r];
            }
            Poly::new(coeffs)
        })
        .collect();
    let nr = Rational::from(n);
    let mut h = Poly::zero();
    for (deg, cd) in c.iter().enumerate() {
        if cd.is_zero() {
            continue;
        }
        // (K + 1)^deg = sum_e C(deg, e) K^e.
        let mut binom = Rational::one();
        let scale = cd / &nr.pow(deg as u32);
        for (e, mom) in moments.iter().enumerate().take(deg + 1) {
            h = h.add(&mom.scale(&(&scale * &binom)));
            binom = &binom * &Rational::new((deg - e) as i64, (e + 1) as i64);
        }
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedEquilibrium {
    /// Bracket on the probability of action 1.
    pub p: RootBracket,
    pub p_approx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryEquilibria {
    /// Numbers of agents playing 1 at the pure equilibria.
    pub pure: Vec<usize>,
    pub mixed: Vec<MixedEquilibrium>,
}

/// Pure equilibria (by count of ones) and symmetric mixed equilibria.
pub fn enumerate_binary_nash(f: &CongestionFn, n: usize) -> BinaryEquilibria {
    let pure = (0..=n)
        .filter(|&k| {
            let stay_in = k == 0 || !f.eval(&share(k, n)).is_negative();
            let stay_out = k == n || !f.eval(&share(k + 1, n)).is_positive();
            stay_in && stay_out
        })
        .collect();
    let h = indifference_poly(f, n);
    let mixed = if n >= 1 && !h.is_zero() {
        h.real_roots(&Rational::zero(), &Rational::one(), &pow2_inv(ROOT_BITS))
            .into_iter()
            .map(|p| MixedEquilibrium {
                p_approx: p.approx(),
                p,
            })
            .collect()
    } else {
        Vec::new()
    };
    BinaryEquilibria { pure, mixed }
}

/// Every pure equilibrium pays each agent within `[0, L / n]`; mixed ones pay exactly 0.
pub fn nash_payoff_bound_check(f: &CongestionFn, n: usize, lipschitz: &Rational) -> bool {
    let eq = enumerate_binary_nash(f, n);
    let cap = lipschitz / &Rational::from(n);
    eq.pure.iter().all(|&k| {
        if k == 0 {
            return true;
        }
        let pay = f.eval(&share(k, n));
        !pay.is_negative() && pay <= cap
    })
}

/// Per-capita welfare `k f(k/n) / n` of the pure equilibrium with `k` ones.
pub fn pure_per_capita_welfare(f: &CongestionFn, k: usize, n: usize) -> Rational {
    share(k, n) * f.eval(&share(k, n))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiPoint {
    pub theta: Rational,
    #[serde(rename = "W")]
    pub w: Rational,
    #[serde(rename = "IC")]
    pub ic: Rational,
}

/// `(theta f(theta), (1 - theta) f(theta))` at `theta = 0, 1/G, ..., 1`.
pub fn phi_curve(f: &CongestionFn, grid: usize) -> Result<Vec<PhiPoint>> {
    if grid < 2 {
        return Err(Error::Invalid("grid must be at least 2".into()));
    }
    Ok((0..=grid)
        .map(|t| {
            let theta = share(t, grid);
            let v = f.eval(&theta);
            PhiPoint {
                w: &theta * &v,
                ic: &(Rational::one() - &theta) * &v,
                theta,
            }
        })
        .collect())
}

pub fn phi_csv(points: &[PhiPoint]) -> String {
    let mut s = String::from("theta,W,IC\n");
    for p in points {
        writeln!(s, "{:.12},{:.12},{:.12}", p.theta.to_f64(), p.w.to_f64(), p.ic.to_f64()).expect("string write");
    }
    s
}

fn convex_hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Static plot of the curve, its convex hull and an optional marked point `(W, IC)`.
pub fn phi_svg(points: &[PhiPoint], optimum: Option<(f64, f64)>) -> String {
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.w.to_f64(), p.ic.to_f64())).collect();
    let mut all = xy.clone();
    all.push((0.0, 0.0));
    if let Some(o) = optimum {
        all.push(o);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (w, h, pad) = (640.0, 480.0, 40.0);
    let sx = (w - 2.0 * pad) / (x1 - x0).max(1e-12);
    let sy = (h - 2.0 * pad) / (y1 - y0).max(1e-12);
    let map = |(x, y): (f64, f64)| (pad + (x - x0) * sx, h - pad - (y - y0) * sy);
    let path = |ps: &[(f64, f64)]| {
        ps.iter()
            .map(|&p| {
                let (a, b) = map(p);
                format!("{a:.3},{b:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    let (ax, ay) = map((0.0, 0.0));
    writeln!(s, r#"<line x1="{pad}" y1="{ay:.3}" x2="{:.3}" y2="{ay:.3}" stroke="gray"/>"#, w - pad).unwrap();
    writeln!(s, r#"<line x1="{ax:.3}" y1="{pad}" x2="{ax:.3}" y2="{:.3}" stroke="gray"/>"#, h - pad).unwrap();
    writeln!(s, r#"<polygon points="{}" fill="lightblue" fill-opacity="0.4" stroke="steelblue"/>"#, path(&convex_hull(xy.clone()))).unwrap();
    writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, path(&xy)).unwrap();
    if let Some(o) = optimum {
        let (a, b) = map(o);
        writeln!(s, r#"<circle cx="{a:.3}" cy="{b:.3}" r="4" fill="red"/>"#).unwrap();
    }
    writeln!(s, r#"<text x="{:.3}" y="{:.3}" font-size="12">W</text>"#, w - pad + 5.0, ay).unwrap();
    writeln!(s, r#"<text x="{ax:.3}" y="{:.3}" font-size="12">IC</text>"#, pad - 8.0).unwrap();
    s.push_str("</svg>\n");
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub theta: Rational,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitOptimum {
    pub value: Rational,
    pub atoms: Vec<Atom>,
}

/// Best distribution over grid shares: maximize `E[theta f]` subject to `E[(1 - theta) f] <= 0`.
pub fn limit_ce_lp(f: &CongestionFn, grid: usize) -> Result<LimitOptimum> {
    let pts = phi_curve(f, grid)?;
    let mut p = LpProblem::new(pts.iter().map(|x| x.w.clone()).collect());
    p.add_eq(&vec![Rational::one(); pts.len()], Rational::one())?;
    p.add_le(&pts.iter().map(|x| x.ic.clone()).collect::<Vec<_>>(), Rational::zero())?;
    let sol = lp_solve(&p)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("ended with status {:?}", sol.status)));
    }
    let atoms = pts
        .into_iter()
        .zip(sol.point)
        .filter(|(_, w)| !w.is_zero())
        .map(|(x, weight)| Atom { theta: x.theta, weight })
        .collect();
    Ok(LimitOptimum {
        value: sol.value,
        atoms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPoint {
    pub theta_star: Rational,
    pub p_star: Rational,
    pub w_star: Rational,
    pub first_best_theta: Rational,
    pub theta_star_approx: f64,
    pub p_star_approx: f64,
    pub w_star_approx: f64,
    pub first_best_theta_approx: f64,
}

fn best_root(
    target: &Poly,
    lo: &Rational,
    hi: &Rational,
    value: impl Fn(&Rational) -> Rational,
) -> Option<Rational> {
    target
        .real_roots(lo, hi, &pow2_inv(OPT_BITS))
        .into_iter()
        .map(|r| r.midpoint())
        .max_by(|a, b| value(a).cmp(&value(b)))
}

/// Optimal two-atom design on `{0, theta}` when `f(0) < 0`, `f(1) < 0`
/// and `f` is positive on a single interval inside `(0, 1)`.
pub fn two_point_solve(f: &CongestionFn) -> Result<TwoPoint> {
    let fp = f.poly();
    let (zero, one) = (Rational::zero(), Rational::one());
    let f0 = fp.eval(&zero);
    let bad = || {
        Error::Precondition(
            "two-point design needs f(0) < 0, f(1) < 0 and exactly two sign changes on [0,1]; use limit_ce_lp instead".into(),
        )
    };
    if !f0.is_negative() {
        return Err(bad());
    }
    let roots = fp.real_roots(&zero, &one, &pow2_inv(OPT_BITS));
    if roots.len() != 2 || !fp.eval(&Rational::midpoint(&roots[0].hi, &roots[1].lo)).is_positive() {
        return Err(bad());
    }
    let c = -f0;
    let theta_f = Poly::x().mul(fp);
    let payoff = |t: &Rational| -> (Rational, Rational) {
        let v = fp.eval(t);
        let p = &c / &(&(&(&one - t) * &v) + &c);
        let w = &p * &(t * &v);
        (p, w)
    };
    // d/dtheta of the achieved welfare has the sign of f^2 + c (f + theta f').
    let stationary = fp.mul(fp).add(&theta_f.derivative().scale(&c));
    let (lo, hi) = (roots[0].hi.clone(), roots[1].lo.clone());
    let theta_star = best_root(&stationary, &lo, &hi, |t| payoff(t).1).ok_or_else(bad)?;
    let (p_star, w_star) = payoff(&theta_star);
    let first_best_theta = best_root(&theta_f.derivative(), &zero, &one, |t| theta_f.eval(t))
        .filter(|t| theta_f.eval(t) >= theta_f.eval(&one).max(zero.clone()))
        .ok_or_else(bad)?;
    Ok(TwoPoint {
        theta_star_approx: theta_star.to_f64(),
        p_star_approx: p_star.to_f64(),
        w_star_approx: w_star.to_f64(),
        first_best_theta_approx: first_best_theta.to_f64(),
        theta_star,
        p_star,
        w_star,
        first_best_theta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteOptimum {
    pub n: usize,
    /// Best per-capita welfare over exchangeable correlated equilibria.
    pub w_n: Rational,
    pub mixture: UrnMixture,
}

/// Finite-population design problem solved in urn coordinates.
pub fn finite_n_ce(f: &CongestionFn, n: usize) -> Result<FiniteOptimum> {
    if n == 0 {
        return Err(Error::Invalid("at least one agent is required".into()));
    }
    let af = binary_anonymous(f, n);
    let opt = symmetric_ce_lp_anonymous(&af, &urn_per_capita_welfare(&af))?;
    Ok(FiniteOptimum {
        n,
        w_n: opt.value,
        mixture: opt.mixture,
    })
}

/// `8 theta (1 - theta) - 1`.
pub fn example_fn() -> CongestionFn {
    CongestionFn::new(Poly::from_i64(&[-1, 8, -8])).expect("f(1) = -1")
}
