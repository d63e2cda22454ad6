//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use correq::congestion::{
    enumerate_binary_nash, example_fn, finite_n_ce, indifference_poly, limit_ce_lp, nash_payoff_bound_check,
    pure_per_capita_welfare, two_point_solve, CongestionFn,
};
use correq::constructions::{canonical_game, certify_canonical, cylinder_pack, separation_holds, verify_packing};
use correq::game::{aumann_game, expected_welfare, for_each_profile, matching_pennies, parity_cycle_game};
use correq::improve::{improving_direction, max_step, optimize_objective, strategic_perturbation, ObjectiveWeights, Step};
use correq::nash::{fit_utilities, is_regular, polygon_check, verify_nash};
use correq::polytope::{
    count_bound, first_nonzero_marginal, incentive_matrix, is_ce, is_extreme, mixer_bound, tangent_dim,
    tangent_space, zero_marginal_space,
};
use correq::symmetric::{
    composition_count, definetti_tv, enumerate_compositions, exchangeable_decompose, iid_mixture,
    symmetric_ce_lp_anonymous, symmetric_is_extreme, urn_dist, urn_per_capita_welfare,
};
use correq::{q, AnonymousForm, Error, Game, JointDist, Poly, ProductDist, Rational, Support};

type Outcome = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn lib<T>(r: correq::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn aumann() -> Outcome {
    let g = aumann_game();
    let opt = lib(optimize_objective(&g, &ObjectiveWeights::welfare(&g)))?;
    ensure!(opt.value == q(16, 3), "welfare optimum {}", opt.value);
    let third = q(1, 3);
    // Payoff pairs (1,4), (4,1), (3,3) sit at profile indices 1, 2, 3.
    ensure!(
        opt.mu.0 == vec![q(0, 1), third.clone(), third.clone(), third],
        "optimal distribution {:?}",
        opt.mu.0
    );
    let nu = ProductDist::uniform(g.action_counts());
    ensure!(lib(verify_nash(&g, &nu))?, "uniform profile is not Nash");
    ensure!(lib(is_extreme(&g, &nu.to_joint()))?, "uniform profile is not extreme");
    let w = expected_welfare(&g, &nu.to_joint().0);
    ensure!(w == q(4, 1), "uniform welfare {w}");
    Ok("welfare 16/3 on three profiles; uniform NE extreme with welfare 4".into())
}

struct Fixture {
    k: usize,
    sizes: Vec<usize>,
    game: Game,
    nu: ProductDist,
}

fn regular_fixture(rng: &mut ChaCha8Rng, k: usize, seed: u64) -> std::result::Result<Fixture, String> {
    let n = rng.gen_range(k.max(2)..=5);
    let mut agents: Vec<usize> = (0..n).collect();
    agents.shuffle(rng);
    let mixers = &agents[..k];
    let mut sizes = vec![1; n];
    loop {
        let common = rng.gen_range(2..=3);
        for &i in mixers {
            sizes[i] = if k == 2 { common } else { rng.gen_range(2..=3) };
        }
        if polygon_check(&sizes) {
            break;
        }
    }
    let counts: Vec<usize> = sizes.iter().map(|&s| s + usize::from(rng.gen_bool(0.4))).collect();
    let sets: Vec<Vec<usize>> = counts
        .iter()
        .zip(&sizes)
        .map(|(&c, &s)| {
            let mut all: Vec<usize> = (0..c).collect();
            all.shuffle(rng);
            all.truncate(s);
            all
        })
        .collect();
    let support = lib(Support::new(sets, &counts))?;
    let weights: Vec<Vec<Rational>> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let raw: Vec<i64> = (0..c)
                .map(|a| if support.contains(i, a) { rng.gen_range(1..=5) } else { 0 })
                .collect();
            let total: i64 = raw.iter().sum();
            raw.iter().map(|&x| q(x, total)).collect()
        })
        .collect();
    let nu = lib(ProductDist::new(weights))?;
    let game = lib(fit_utilities(&support, &nu, seed, &counts))?;
    Ok(Fixture {
        k,
        sizes: support.sizes(),
        game,
        nu,
    })
}

fn regularity_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut regular_by_k = [0usize; 6];
    for (t, &k) in [0usize, 2, 3, 4, 5].iter().cycle().take(100).enumerate() {
        let fx = regular_fixture(&mut rng, k, 1000 + t as u64)?;
        ensure!(fx.k == fx.sizes.iter().filter(|&&s| s >= 2).count(), "fixture {t} has wrong mixer count");
        ensure!(lib(verify_nash(&fx.game, &fx.nu))?, "fixture {t} is not Nash");
        let report = lib(is_regular(&fx.game, &fx.nu))?;
        if !report.regular {
            continue;
        }
        regular_by_k[k] += 1;
        let extreme = lib(is_extreme(&fx.game, &fx.nu.to_joint()))?;
        ensure!(extreme == (k <= 2), "fixture {t} (k={k}, sizes {:?}) extreme={extreme}", fx.sizes);
        if k >= 3 {
            let dim = lib(tangent_dim(&fx.game, &fx.nu))? as i128;
            let cb = count_bound(&fx.sizes);
            let mb = mixer_bound(&fx.sizes).ok_or("mixer bound missing")?;
            ensure!(dim >= cb && dim >= mb, "fixture {t}: dim {dim} below bounds {cb}, {mb}");
        }
    }
    for k in [0, 2, 3, 4, 5] {
        ensure!(regular_by_k[k] > 0, "no regular fixture with k={k}");
    }
    let regular: usize = regular_by_k.iter().sum();
    Ok(format!("{regular}/100 fixtures regular, all consistent"))
}

fn four_mixer_pennies() -> std::result::Result<Game, String> {
    let mp = matching_pennies();
    lib(Game::from_fn(vec![2; 4], |i, a| {
        let (pair, me) = (i / 2, i % 2);
        let idx = a[2 * pair] + 2 * a[2 * pair + 1];
        mp.utility(me, idx).clone()
    }))
}

fn footnote() -> Outcome {
    let g = parity_cycle_game();
    let counts = g.action_counts().to_vec();
    let nu = ProductDist::uniform(&counts);
    let parity = common::parity_vector(3);
    let ts = lib(tangent_space(&g, &nu))?;
    ensure!(ts.dim() == 1, "tangent dimension {}", ts.dim());
    let tau = ts.vector(0);
    ensure!(common::proportional(&tau, &parity), "tangent basis not proportional to parity");
    let zm = zero_marginal_space(&Support::full(&counts), &counts);
    ensure!(zm.len() == 1, "zero-marginal dimension {}", zm.len());
    ensure!(common::proportional(&zm[0], &tau), "zero-marginal space differs from tangent space");
    let imp = lib(improving_direction(&g, &nu, &ObjectiveWeights::welfare(&g)))?;
    ensure!(imp.direction.is_none(), "welfare direction unexpectedly present");
    match strategic_perturbation(&g, &nu, &tau) {
        Err(e @ Error::ZeroMarginal) => ensure!(e.to_string().contains("no strategically equivalent"), "message {e}"),
        other => return Err(format!("strategic_perturbation returned {other:?}")),
    }
    let scaled: Vec<Rational> = parity.iter().map(|x| x * &q(1, 8)).collect();
    ensure!(lib(max_step(&g, &nu, &scaled))? == Step::Finite(q(1, 1)), "step along parity/8 is not 1");

    // Four mixers: two independent matching-pennies pairs, welfare identically zero.
    let g4 = four_mixer_pennies()?;
    let nu4 = ProductDist::uniform(g4.action_counts());
    ensure!(lib(verify_nash(&g4, &nu4))?, "pennies product: uniform not Nash");
    let welfare = ObjectiveWeights::welfare(&g4);
    ensure!(lib(improving_direction(&g4, &nu4, &welfare))?.direction.is_none(), "zero-sum game improved");
    let ts4 = lib(tangent_space(&g4, &nu4))?;
    let tau4 = (0..ts4.dim())
        .map(|k| ts4.vector(k))
        .find(|t| first_nonzero_marginal(t, g4.action_counts()).is_some())
        .ok_or("every tangent vector has zero marginals")?;
    let deltas = lib(strategic_perturbation(&g4, &nu4, &tau4))?;
    let shifted = lib(g4.strategic_shift(&deltas))?;
    ensure!(incentive_matrix(&shifted) == incentive_matrix(&g4), "shift changed incentives");
    let gain: Vec<Rational> = shifted
        .welfare_vector()
        .iter()
        .zip(g4.welfare_vector())
        .map(|(a, b)| a - &b)
        .collect();
    ensure!(common::dot(&gain, &tau4) == q(1, 1), "shift does not pair to 1");
    let imp = lib(improving_direction(&shifted, &nu4, &ObjectiveWeights::welfare(&shifted)))?;
    let (Some(plus), Some(minus)) = (imp.improved.as_ref(), imp.worsened.as_ref()) else {
        return Err("no welfare direction after the shift".into());
    };
    ensure!(lib(is_ce(&shifted, plus))? && lib(is_ce(&shifted, minus))?, "endpoints not CE");
    ensure!(imp.improved_value.as_ref().is_some_and(|v| *v > imp.base_value), "welfare did not rise");
    Ok(format!("dim T = 1 = dim T0; pennies product dim T = {} improved after shift", ts4.dim()))
}

fn integer_sweep() -> Outcome {
    let mut checked = 0usize;
    for n in 3..=6u32 {
        for code in 0..5usize.pow(n) {
            let sizes: Vec<usize> = (0..n as usize).map(|t| code / 5usize.pow(t as u32) % 5 + 1).collect();
            let mixers: Vec<i128> = sizes.iter().filter(|&&m| m >= 2).map(|&m| m as i128).collect();
            let k = mixers.len() as u32;
            let polygon = sizes
                .iter()
                .all(|&m| m - 1 <= sizes.iter().map(|&x| x - 1).sum::<usize>() - (m - 1));
            if k < 3 || !polygon {
                continue;
            }
            let prod: i128 = mixers.iter().product();
            let eq5 = prod - 1 - mixers.iter().map(|m| m * (m - 1)).sum::<i128>();
            let mut eq7 = 2i128.pow(k) - 2 * k as i128 - 1;
            if k >= 4 {
                eq7 += mixers.iter().map(|m| m - 1).product::<i128>() - 1;
            }
            ensure!(count_bound(&sizes) == eq5, "count bound mismatch at {sizes:?}");
            ensure!(mixer_bound(&sizes) == Some(eq7), "mixer bound mismatch at {sizes:?}");
            ensure!(eq5 >= eq7, "inequality fails at {sizes:?}: {eq5} < {eq7}");
            checked += 1;
        }
    }
    Ok(format!("{checked} size vectors"))
}

fn closed_forms() -> Outcome {
    let f = example_fn();
    let tp = lib(two_point_solve(&f))?;
    let s2 = 2f64.sqrt();
    let want = [
        (tp.theta_star_approx, 1.0 - s2 / 4.0, "theta*"),
        (tp.p_star_approx, (4.0 + s2) / 7.0, "p*"),
        (tp.w_star_approx, s2 - 1.0, "W*"),
        (tp.first_best_theta_approx, (4.0 + 10f64.sqrt()) / 12.0, "first best"),
    ];
    for (got, exp, name) in want {
        ensure!((got - exp).abs() < 1e-9, "{name}: {got} vs {exp}");
    }
    ensure!(tp.theta_star > tp.first_best_theta, "theta* not above the first best");
    let lim = lib(limit_ce_lp(&f, 2000))?;
    let v = lim.value.to_f64();
    ensure!((v - (s2 - 1.0)).abs() < 1e-3, "grid optimum {v}");
    Ok(format!("W* = {:.12}; grid optimum {v:.6} with {} atoms", tp.w_star_approx, lim.atoms.len()))
}

fn finite_convergence() -> Outcome {
    let f = example_fn();
    let target = 2f64.sqrt() - 1.0;
    let lip = f.lipschitz_bound();
    let mut prev: Option<f64> = None;
    let mut values = Vec::new();
    for n in [25usize, 50, 100, 200, 400] {
        let w = lib(finite_n_ce(&f, n))?.w_n;
        let wf = w.to_f64();
        if let Some(p) = prev {
            ensure!(wf >= p - 1e-6, "W_{n} = {wf} dropped from {p}");
        }
        prev = Some(wf);
        values.push(format!("{wf:.5}"));
        let eq = enumerate_binary_nash(&f, n);
        for &k in &eq.pure {
            let pc = pure_per_capita_welfare(&f, k, n);
            ensure!(w >= pc, "W_{n} below pure NE welfare at k={k}");
        }
        ensure!(!w.is_negative(), "W_{n} below the mixed NE welfare 0");
        let h = indifference_poly(&f, n);
        for m in &eq.mixed {
            let (a, b) = (h.eval(&m.p.lo), h.eval(&m.p.hi));
            ensure!(
                m.p.is_exact() && a.is_zero() || a.signum() * b.signum() < 0,
                "mixed NE bracket at n={n} does not straddle a root"
            );
        }
        ensure!(nash_payoff_bound_check(&f, n, &lip), "pure NE payoff above L/n at n={n}");
        ensure!(nash_payoff_bound_check(&f, n, &q(8, 1)), "pure NE payoff above 8/n at n={n}");
    }
    let last = prev.unwrap_or(0.0);
    ensure!((last - target).abs() < 0.05, "W_400 = {last}");
    Ok(format!("W_n = [{}]", values.join(", ")))
}

fn canonical() -> Outcome {
    let cg = lib(canonical_game(&[2; 12]))?;
    let g = &cg.game;
    let im = incentive_matrix(g);
    ensure!(im.len() == 24, "{} incentive rows", im.len());
    let mut rows: Vec<Vec<Rational>> = (0..im.len()).map(|k| im.row(k).to_vec()).collect();
    rows.push(vec![Rational::one(); g.num_profiles()]);
    let r = correq::linalg::rank_of_rows(rows, g.num_profiles());
    ensure!(r == 25, "incentive rank {r}");
    let cert = lib(certify_canonical(&cg))?;
    ensure!(cert.nash, "uniform not Nash");
    ensure!(cert.dim_t == 4071 && cert.q == 4071, "dim T {} vs Q {}", cert.dim_t, cert.q);
    ensure!(cert.image_dim == 12, "payoff image dimension {}", cert.image_dim);
    let t = cert.t_star.ok_or("no t*")?;
    ensure!(t.is_positive(), "t* = {t}");
    Ok(format!("dim T = 4071, image 12, t* = {t}"))
}

fn profile_disjoint(p: &correq::constructions::CylinderPacking) -> bool {
    let mut ok = true;
    for_each_profile(&p.sizes, |_, a| {
        if (0..p.sizes.len()).filter(|&i| p.contains(i, a)).count() > 1 {
            ok = false;
        }
    });
    ok
}

fn packing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cases: Vec<Vec<usize>> = (3..=16).map(|n| vec![2; n]).collect();
    for _ in 0..200 {
        let n = rng.gen_range(3..=16);
        cases.push((0..n).map(|_| rng.gen_range(2..=5)).collect());
    }
    let mut enumerated = 0;
    for sizes in &cases {
        let p = lib(cylinder_pack(sizes))?;
        ensure!(p.kc == (sizes.len() as f64).log2().ceil() as usize + 1, "kc for {sizes:?}");
        ensure!(verify_packing(&p), "packing fails for {sizes:?}");
        ensure!(separation_holds(&p), "separation fails for {sizes:?}");
        if sizes.iter().product::<usize>() <= 10_000 {
            ensure!(profile_disjoint(&p), "profile overlap for {sizes:?}");
            enumerated += 1;
        }
    }
    Ok(format!("{} packings, {enumerated} checked profile by profile", cases.len()))
}

fn exchangeable() -> Outcome {
    let comps = enumerate_compositions(3, 2);
    ensure!(comps == vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]], "compositions {comps:?}");
    let uni = ProductDist::uniform(&[2, 2, 2]).to_joint();
    let mix = lib(exchangeable_decompose(&uni, 3, 2))?;
    let w: Vec<Rational> = lib(mix.dense())?;
    ensure!(w == vec![q(1, 8), q(3, 8), q(3, 8), q(1, 8)], "decomposition {w:?}");
    ensure!(urn_dist(&[2, 1]).0.iter().filter(|x| **x == q(1, 3)).count() == 3, "urn (2,1) law");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lps = 0;
    for _ in 0..40 {
        let n = rng.gen_range(3..=5);
        let m = rng.gen_range(2..=3);
        let cell = std::cell::RefCell::new(&mut rng);
        let af = AnonymousForm::from_fn(n, m, |_, _| Rational::from(cell.borrow_mut().gen_range(-6i64..=6)));
        let obj: Vec<Rational> = (0..composition_count(n, m))
            .map(|_| Rational::from(rng.gen_range(-4i64..=4)))
            .collect();
        let opt = lib(symmetric_ce_lp_anonymous(&af, &obj))?;
        ensure!(opt.mixture.positive_urns() <= m * (m - 1) + 1, "vertex with {} urns", opt.mixture.positive_urns());
        ensure!(lib(symmetric_is_extreme(&af, &opt.mixture))?, "LP vertex reported non-extreme");
        lps += 1;
    }
    for n in 3..=20usize {
        for m in 2..=6usize {
            ensure!(composition_count(n, m) > (m * (m - 1) + 1) as u128, "urn count at n={n}, m={m}");
        }
    }
    let mut tv_checked = 0;
    for n in 1..=10usize {
        for m in 1..=3usize {
            for k in enumerate_compositions(n, m) {
                for j in 1..=n {
                    let tv = lib(definetti_tv(&k, j))?;
                    ensure!(tv <= q((2 * m * j) as i64, n as i64), "tv bound fails at {k:?}, j={j}");
                    tv_checked += 1;
                }
            }
        }
    }
    // f = g - E[g((K + 1) / n)] with K ~ Bin(n - 1, 1/2) makes p = 1/2 an exact mixed equilibrium.
    for n in 3..=5usize {
        let g = Poly::from_i64(&[0, 8, -8]);
        let base = indifference_poly(&lib(CongestionFn::new(g.sub(&Poly::from_i64(&[1]))))?, n).eval(&q(1, 2)) + q(1, 1);
        let f = lib(CongestionFn::new(g.sub(&Poly::constant(base))))?;
        ensure!(indifference_poly(&f, n).eval(&q(1, 2)).is_zero(), "p = 1/2 not indifferent at n={n}");
        let af = correq::congestion::binary_anonymous(&f, n);
        let mix = lib(iid_mixture(n, &[q(1, 2), q(1, 2)]))?;
        ensure!(!lib(symmetric_is_extreme(&af, &mix))?, "mixed NE extreme at n={n}");
        let opt = lib(symmetric_ce_lp_anonymous(&af, &urn_per_capita_welfare(&af)))?;
        ensure!(!opt.value.is_negative(), "negative welfare optimum");
    }
    Ok(format!("{lps} symmetric LPs, {tv_checked} total-variation bounds"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shapes: [&[usize]; 5] = [&[2, 2], &[2, 3], &[3, 2], &[2, 2, 2], &[2, 4]];
    let mut vertices_seen = 0;
    for t in 0..50 {
        let counts = shapes[t % shapes.len()].to_vec();
        let total: usize = counts.iter().product();
        let utilities = (0..counts.len())
            .map(|_| (0..total).map(|_| Rational::from(rng.gen_range(-5i64..=5))).collect())
            .collect();
        let g = lib(Game::new(counts.clone(), utilities))?;
        let verts = common::ce_vertices(&g);
        ensure!(!verts.is_empty(), "game {t} has no vertices");
        let rows = common::incentive_rows(&g);
        let m = *counts.iter().max().unwrap();
        for v in &verts {
            let mu = lib(JointDist::new(v.clone()))?;
            ensure!(lib(is_extreme(&g, &mu))?, "game {t}: oracle vertex not extreme");
            let supp = v.iter().filter(|x| x.is_positive()).count();
            ensure!(supp <= rows.len() + 1 && supp <= counts.len() * m * (m - 1) + 1, "support {supp} too large");
        }
        for a in 0..verts.len() {
            for b in a + 1..verts.len() {
                let mid: Vec<Rational> = verts[a].iter().zip(&verts[b]).map(|(x, y)| (x + y) * q(1, 2)).collect();
                ensure!(!lib(is_extreme(&g, &JointDist(mid)))?, "game {t}: midpoint reported extreme");
            }
        }
        for _ in 0..3 {
            let c: Vec<Rational> = (0..g.num_profiles()).map(|_| Rational::from(rng.gen_range(-5i64..=5))).collect();
            let opt = lib(optimize_objective(&g, &ObjectiveWeights::Profile(c.clone())))?;
            let best = verts.iter().map(|v| common::dot(&c, v)).max().unwrap();
            ensure!(opt.value == best, "game {t}: LP value {} vs oracle {best}", opt.value);
            ensure!(verts.contains(&opt.mu.0), "game {t}: LP point is not an oracle vertex");
        }
        vertices_seen += verts.len();
    }
    Ok(format!("50 games, {vertices_seen} vertices"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("aumann game exactness", aumann, 1),
        ("extremality of regular equilibria", regularity_suite, 120),
        ("parity game and strategic shift", footnote, 10),
        ("bound inequality sweep", integer_sweep, 60),
        ("limit design closed forms", closed_forms, 30),
        ("finite population convergence", finite_convergence, 120),
        ("prediction game certificate", canonical, 300),
        ("cylinder packings", packing, 60),
        ("exchangeable distributions", exchangeable, 120),
        ("vertex oracle agreement", oracle_equivalence, 120),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*budget);
        match out {
            Ok(detail) if !over => println!("PASS {:>2} {name} ({:.2}s): {detail}", k + 1, took.as_secs_f64()),
            Ok(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {:.2}s exceeds {budget}s ({detail})", k + 1, took.as_secs_f64());
            }
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({:.2}s): {msg}", k + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
