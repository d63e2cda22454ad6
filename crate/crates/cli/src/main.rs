//! `correq` command-line tool. Every subcommand prints one JSON report on stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use correq::congestion::{
    enumerate_binary_nash, finite_n_ce, limit_ce_lp, nash_payoff_bound_check, phi_csv, phi_curve, phi_svg,
    pure_per_capita_welfare, two_point_solve, CongestionFn,
};
use correq::constructions::{canonical_game, certify_canonical, cylinder_pack, verify_packing, CylinderPacking};
use correq::improve::{
    all_utilities, improving_direction, multi_improve_lp, optimize_objective, payoff_face_dimension,
    ObjectiveWeights,
};
use correq::nash::{is_quasi_strict, is_regular, polygon_check, verify_nash};
use correq::polytope::{dimension_report, is_ce, is_extreme};
use correq::symmetric::{symmetric_ce_lp, symmetric_is_extreme};
use correq::{Distribution, Error, Game, JointDist, Poly, Rational};

#[derive(Parser)]
#[command(name = "correq", version, about = "Exact analysis of correlated equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nash, regularity and extremality report for a distribution.
    Analyze(AnalyzeArgs),
    /// Maximize a linear objective over the correlated equilibria.
    Optimize(OptimizeArgs),
    /// Improve on a Nash equilibrium along its face of the polytope.
    Improve(ImproveArgs),
    /// Optimize over exchangeable equilibria of a symmetric game.
    Symmetric(SymmetricArgs),
    /// Binary-action congestion design problems.
    Binary(BinaryArgs),
    /// Cylinder packings and the prediction games built from them.
    Construct(ConstructArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    game: PathBuf,
    #[arg(long)]
    equilibrium: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    game: PathBuf,
    /// `welfare` or a path to an objective file.
    #[arg(long, default_value = "welfare")]
    objective: String,
    /// Write the optimal distribution here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").args(["pareto", "objectives"])))]
struct ImproveArgs {
    game: PathBuf,
    #[arg(long)]
    equilibrium: PathBuf,
    /// Objective for a single improving direction: `welfare` or a file.
    #[arg(long, default_value = "welfare")]
    objective: String,
    /// Raise every agent's payoff at once.
    #[arg(long)]
    pareto: bool,
    /// File with a JSON array of objectives to raise at once.
    #[arg(long)]
    objectives: Option<PathBuf>,
    /// Write the improved distribution here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
struct SymmetricArgs {
    game: PathBuf,
    #[arg(long, default_value = "welfare")]
    objective: String,
    /// Write the urn mixture here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["n", "limit", "two_point"])))]
struct BinaryArgs {
    /// Coefficients of f, constant term first.
    #[arg(long = "f", allow_hyphen_values = true)]
    f: String,
    /// Finite population size.
    #[arg(long)]
    n: Option<usize>,
    /// Continuum limit on a grid of shares.
    #[arg(long)]
    limit: bool,
    #[arg(long)]
    grid: Option<usize>,
    /// Closed-form two-atom design.
    #[arg(long)]
    two_point: bool,
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    #[arg(long)]
    emit_svg: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    /// Action counts, comma separated.
    #[arg(long)]
    sizes: String,
    /// Only build and check the packing.
    #[arg(long)]
    pack_only: bool,
    /// Write the game here.
    #[arg(long)]
    emit: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CORREQ_LOG", "error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Optimize(a) => optimize(a),
        Command::Improve(a) => improve(a),
        Command::Symmetric(a) => symmetric(a),
        Command::Binary(a) => binary(a),
        Command::Construct(a) => construct(a),
    };
    match result {
        Ok(report) => {
            println!("{}", pretty(&report));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write_text(path, &(pretty(v) + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_objective(spec: &str, g: &Game) -> Result<ObjectiveWeights> {
    if spec == "welfare" {
        Ok(ObjectiveWeights::welfare(g))
    } else {
        read_json(Path::new(spec))
    }
}

fn approx(x: &Rational) -> f64 {
    x.to_f64()
}

fn joint_file(mu: &JointDist) -> Value {
    serde_json::to_value(Distribution::Joint(mu.clone())).expect("distributions serialize")
}

fn support_profiles(g: &Game, mu: &JointDist) -> Vec<Vec<usize>> {
    mu.support().into_iter().map(|idx| g.unindex(idx)).collect()
}

fn payoffs(g: &Game, mu: &JointDist) -> Vec<Rational> {
    (0..g.n()).map(|i| correq::game::pair(g, i, &mu.0)).collect()
}

fn analyze(a: AnalyzeArgs) -> Result<Value> {
    let g: Game = read_json(&a.game)?;
    let dist: Distribution = read_json(&a.equilibrium)?;
    let mu = dist.to_joint();
    if mu.0.len() != g.num_profiles() {
        bail!("distribution has {} weights, game has {} profiles", mu.0.len(), g.num_profiles());
    }
    let ce = is_ce(&g, &mu)?;
    let extreme = if ce { Some(is_extreme(&g, &mu)?) } else { None };
    let pay = payoffs(&g, &mu);
    let welfare: Rational = pay.iter().cloned().sum();
    let mut report = json!({
        "players": g.n(),
        "actions": g.action_counts(),
        "ce": ce,
        "extreme": extreme,
        "payoffs": pay,
        "welfare": welfare,
        "welfare_approx": approx(&welfare),
    });
    let Distribution::Product(nu) = dist else {
        report["distribution_type"] = json!("joint");
        return Ok(report);
    };
    nu.check_shape(g.action_counts())?;
    report["distribution_type"] = json!("product");
    let sizes = nu.support().sizes();
    report["support_sizes"] = json!(sizes);
    report["k"] = json!(sizes.iter().filter(|&&m| m >= 2).count());
    report["polygon_ok"] = json!(polygon_check(&sizes));
    let nash = verify_nash(&g, &nu)?;
    report["nash"] = json!(nash);
    if !nash {
        return Ok(report);
    }
    let qs = is_quasi_strict(&g, &nu)?;
    report["quasi_strict"] = json!(qs);
    if !qs {
        log::info!("equilibrium is not quasi-strict; tangent-space report skipped");
        return Ok(report);
    }
    let reg = is_regular(&g, &nu)?;
    report["jacobian_nonsingular"] = json!(reg.jacobian_nonsingular);
    report["regular"] = json!(reg.regular);
    let dims = dimension_report(&g, &nu)?;
    report["dim_t"] = json!(dims.dim_t);
    report["dimension_report"] = json!(dims);
    report["payoff_face"] = json!(payoff_face_dimension(&g, &nu)?);
    Ok(report)
}

fn optimize(a: OptimizeArgs) -> Result<Value> {
    let g: Game = read_json(&a.game)?;
    let w = load_objective(&a.objective, &g)?;
    let opt = optimize_objective(&g, &w)?;
    if let Some(path) = &a.emit {
        write_json(path, &Distribution::Joint(opt.mu.clone()))?;
    }
    Ok(json!({
        "value": opt.value,
        "value_approx": approx(&opt.value),
        "support": support_profiles(&g, &opt.mu),
        "payoffs": payoffs(&g, &opt.mu),
        "distribution": joint_file(&opt.mu),
    }))
}

fn improve(a: ImproveArgs) -> Result<Value> {
    let g: Game = read_json(&a.game)?;
    let Distribution::Product(nu) = read_json(&a.equilibrium)? else {
        bail!("improve needs a product distribution");
    };
    let objectives = if a.pareto {
        Some(all_utilities(&g))
    } else if let Some(path) = &a.objectives {
        Some(read_json::<Vec<ObjectiveWeights>>(path)?)
    } else {
        None
    };
    let Some(objectives) = objectives else {
        let w = load_objective(&a.objective, &g)?;
        let r = improving_direction(&g, &nu, &w)?;
        if let (Some(path), Some(mu)) = (&a.emit, &r.improved) {
            write_json(path, &Distribution::Joint(mu.clone()))?;
        }
        return Ok(json!({
            "mode": "direction",
            "base_value": r.base_value,
            "direction": r.direction,
            "epsilon": r.epsilon,
            "improved_distribution": r.improved.as_ref().map(joint_file),
            "improved_value": r.improved_value,
            "improved_value_approx": r.improved_value.as_ref().map(approx),
            "worsened_value": r.worsened_value,
        }));
    };
    let m = multi_improve_lp(&g, &nu, &objectives)?;
    if let Some(path) = &a.emit {
        write_json(path, &Distribution::Joint(m.mu.clone()))?;
    }
    let base = nu.to_joint();
    let gains = objectives
        .iter()
        .map(|w| {
            let c = w.to_profile(&g)?;
            let dot = |x: &[Rational]| c.iter().zip(x).map(|(p, q)| p * q).sum::<Rational>();
            Ok(dot(&m.mu.0) - dot(&base.0))
        })
        .collect::<correq::Result<Vec<Rational>>>()?;
    Ok(json!({
        "mode": if a.pareto { "pareto" } else { "objectives" },
        "t_star": m.t_star,
        "t_star_approx": approx(&m.t_star),
        "improved": m.t_star.is_positive(),
        "gains": gains,
        "improved_distribution": joint_file(&m.mu),
    }))
}

fn symmetric(a: SymmetricArgs) -> Result<Value> {
    let g: Game = read_json(&a.game)?;
    let af = g.detect_symmetry().ok_or(Error::NotSymmetric)?;
    let w = load_objective(&a.objective, &g)?;
    let opt = symmetric_ce_lp(&g, &w)?;
    if let Some(path) = &a.emit {
        write_json(path, &opt.mixture)?;
    }
    Ok(json!({
        "value": opt.value,
        "value_approx": approx(&opt.value),
        "positive_urns": opt.mixture.positive_urns(),
        "urn_bound": af.m() * (af.m() - 1) + 1,
        "extreme": symmetric_is_extreme(&af, &opt.mixture)?,
        "mixture": opt.mixture,
    }))
}

fn parse_poly(s: &str) -> Result<Poly> {
    let coeffs = s
        .split(',')
        .map(|c| c.trim().parse::<Rational>().map_err(|e| anyhow::anyhow!("coefficient {c:?}: {e}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Poly::new(coeffs))
}

const DEFAULT_LIMIT_GRID: usize = 2000;
const DEFAULT_PLOT_GRID: usize = 200;

fn binary(a: BinaryArgs) -> Result<Value> {
    let f = CongestionFn::new(parse_poly(&a.f)?)?;
    let mut marker = None;
    let report = if let Some(n) = a.n {
        let eq = enumerate_binary_nash(&f, n);
        let opt = finite_n_ce(&f, n)?;
        let best_pure = eq
            .pure
            .iter()
            .map(|&k| pure_per_capita_welfare(&f, k, n))
            .max();
        let l = f.lipschitz_bound();
        json!({
            "mode": "finite",
            "n": n,
            "w_n": opt.w_n,
            "w_n_approx": approx(&opt.w_n),
            "mixture": opt.mixture,
            "equilibria": eq,
            "best_pure_per_capita": best_pure,
            "lipschitz_bound": l,
            "nash_payoff_bound_ok": nash_payoff_bound_check(&f, n, &l),
        })
    } else if a.limit {
        let grid = a.grid.unwrap_or(DEFAULT_LIMIT_GRID);
        let opt = limit_ce_lp(&f, grid)?;
        let ic: Rational = opt
            .atoms
            .iter()
            .map(|x| &x.weight * &(&(Rational::one() - &x.theta) * &f.eval(&x.theta)))
            .sum();
        marker = Some((approx(&opt.value), approx(&ic)));
        json!({
            "mode": "limit",
            "grid": grid,
            "value": opt.value,
            "value_approx": approx(&opt.value),
            "atoms": opt.atoms,
        })
    } else {
        let tp = two_point_solve(&f)?;
        marker = Some((tp.w_star_approx, 0.0));
        let mut v = json!(tp);
        v["mode"] = json!("two-point");
        v
    };
    if a.emit_csv.is_some() || a.emit_svg.is_some() {
        let pts = phi_curve(&f, a.grid.unwrap_or(DEFAULT_PLOT_GRID))?;
        if let Some(path) = &a.emit_csv {
            write_text(path, &phi_csv(&pts))?;
        }
        if let Some(path) = &a.emit_svg {
            write_text(path, &phi_svg(&pts, marker))?;
        }
    }
    Ok(report)
}

fn packing_report(p: &CylinderPacking) -> Value {
    let total: num_bigint::BigUint = p.sizes.iter().map(|&m| num_bigint::BigUint::from(m)).product();
    let three = num_bigint::BigUint::from(3u32).pow(p.kc as u32);
    let margins: Vec<String> = (0..p.sizes.len())
        .map(|i| {
            let lhs = p.cylinder_size(i) * &three;
            if lhs >= total {
                (lhs - &total).to_string()
            } else {
                format!("-{}", &total - lhs)
            }
        })
        .collect();
    json!({
        "sizes": p.sizes,
        "kc": p.kc,
        "codewords": p.codewords,
        "boxes": p.boxes,
        "cylinder_sizes": (0..p.sizes.len()).map(|i| p.cylinder_size(i).to_string()).collect::<Vec<_>>(),
        "profiles": total.to_string(),
        "bound_margins": margins,
        "verified": verify_packing(p),
    })
}

fn construct(a: ConstructArgs) -> Result<Value> {
    let sizes = a
        .sizes
        .split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("size {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    if a.pack_only {
        return Ok(json!({ "packing": packing_report(&cylinder_pack(&sizes)?) }));
    }
    let cg = canonical_game(&sizes)?;
    if let Some(path) = &a.emit {
        write_json(path, &cg.game)?;
    }
    let certificate = match certify_canonical(&cg) {
        Ok(c) => json!(c),
        Err(Error::Certificate(msg)) => json!({ "failed": msg }),
        Err(e) => return Err(e.into()),
    };
    Ok(json!({
        "packing": packing_report(&cg.packing),
        "strategic": cg.strategic,
        "predictions": cg.predictions,
        "expected_q": cg.expected_q,
        "certificate": certificate,
    }))
}
