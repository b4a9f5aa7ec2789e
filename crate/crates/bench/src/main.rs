//! Benchmark CLI: grid basin studies, stress protocols, performance
//! profiles, run audits, and derivative checks.

use std::path::PathBuf;

use almton::baselines::BaselineConfig;
use almton::diagnostics::{audit_run, estimate_bounds};
use almton::problems::{self, Objective};
use almton::tensor::fd_check;
use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use almton_bench::config::{self, ConfigMap};
use almton_bench::emit;
use almton_bench::grid::{run_grid, GridSpec};
use almton_bench::profile::performance_profile;
use almton_bench::solvers::{default_ids, SolverSpec};
use almton_bench::stress::stress_protocol;

#[derive(Parser)]
#[command(name = "almton-bench", about = "Benchmark harness for the cubic third-order solver")]
struct Cli {
    /// Plain-text key=value configuration file; CLI flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run solvers from a dense grid of starting points over a 2-D problem.
    Grid {
        /// Problem name, or `classic` for the whole 2-D suite.
        #[arg(long)]
        problem: Option<String>,
        /// Comma-separated solver ids.
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Output CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rosenbrock stress protocol: standard start plus perturbed seeds.
    Stress {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        solvers: Option<String>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        perturbed: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute performance profiles from a records CSV.
    Profile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        out_svg: Option<PathBuf>,
    },
    /// Run the adaptive solver and check the estimated theoretical bounds.
    Audit {
        #[arg(long)]
        problem: Option<String>,
        /// `almton-simple` or `almton-heuristic`.
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Records CSV; audit rows are appended as comments.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify analytic derivatives against central differences.
    CheckDerivs {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn pick<T: Clone + std::str::FromStr>(
    flag: Option<T>,
    map: &ConfigMap,
    key: &str,
    default: T,
) -> anyhow::Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match config::get_parsed::<T>(map, key) {
        Ok(Some(v)) => Ok(v),
        Ok(None) => Ok(default),
        Err(e) => bail!("{e}"),
    }
}

fn resolve_solvers(
    flag: Option<String>,
    map: &ConfigMap,
    default: &str,
) -> anyhow::Result<Vec<SolverSpec>> {
    let list = flag
        .or_else(|| map.get("solvers").cloned())
        .unwrap_or_else(|| default.to_string());
    let almton_base = config::almton_from_config(map)?;
    let baseline_base = BaselineConfig::default();
    Ok(SolverSpec::parse_list(&list, &almton_base, &baseline_base)?)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let map = match &cli.config {
        Some(path) => config::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ConfigMap::new(),
    };

    match cli.command {
        Command::Grid {
            problem,
            solvers,
            nx,
            ny,
            eps,
            budget,
            out,
        } => {
            let problem = pick(problem, &map, "problem", "classic".to_string())?;
            let solvers = resolve_solvers(solvers, &map, &default_ids().join(","))?;
            let spec_base = GridSpec {
                counts: [
                    pick(nx, &map, "nx", 30usize)?,
                    pick(ny, &map, "ny", 30usize)?,
                ],
                budget: pick(budget, &map, "budget", 100usize)?,
                epsilon: pick(eps, &map, "eps", 1e-8)?,
                ..GridSpec::default()
            };
            let names: Vec<String> = if problem == "classic" {
                problems::classic_2d_suite()
                    .iter()
                    .map(|p| p.name().to_string())
                    .collect()
            } else {
                problem.split(',').map(|s| s.trim().to_string()).collect()
            };
            let mut records = Vec::new();
            for name in names {
                let spec = GridSpec {
                    problem: name.clone(),
                    ..spec_base.clone()
                };
                let mut rs = run_grid(&spec, &solvers)?;
                eprintln!(
                    "{name}: {} trials, {} successes",
                    rs.len(),
                    rs.iter().filter(|r| r.success).count()
                );
                records.append(&mut rs);
            }
            let out = pick(out, &map, "out", PathBuf::from("grid.csv"))?;
            emit::write_records_csv(&out, &records)?;
            println!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Stress {
            n,
            solvers,
            eps,
            budget,
            perturbed,
            out,
        } => {
            let n = pick(n, &map, "n", 5usize)?;
            let solvers = resolve_solvers(solvers, &map, "newton-cg,lbfgs,almton-simple")?;
            let eps = pick(eps, &map, "eps", 1e-6)?;
            let budget = pick(budget, &map, "budget", 3000usize)?;
            let perturbed = pick(perturbed, &map, "perturbed", 10usize)?;
            let (records, rows) = stress_protocol(n, &solvers, perturbed, budget, eps)?;
            for row in &rows {
                println!("{row}");
            }
            if let Some(out) = out.or_else(|| map.get("out").map(PathBuf::from)) {
                emit::write_records_csv(&out, &records)?;
                println!("wrote {} records to {}", records.len(), out.display());
            }
        }
        Command::Profile {
            input,
            out_csv,
            out_svg,
        } => {
            let records = emit::read_records_csv(&input)?;
            let curves = performance_profile(&records)?;
            for c in &curves {
                println!(
                    "{:<20} success {:>6.1}%  rho(1) = {:.3}",
                    c.solver,
                    100.0 * c.success_fraction(),
                    c.rho.first().copied().unwrap_or(0.0)
                );
            }
            if let Some(path) = out_csv.or_else(|| map.get("out_csv").map(PathBuf::from)) {
                emit::write_profiles_csv(&path, &curves)?;
                println!("wrote profile table to {}", path.display());
            }
            if let Some(path) = out_svg.or_else(|| map.get("out_svg").map(PathBuf::from)) {
                emit::write_profiles_svg(&path, &curves)?;
                println!("wrote profile chart to {}", path.display());
            }
        }
        Command::Audit {
            problem,
            solver,
            starts,
            seed,
            eps,
            budget,
            out,
        } => {
            let name = pick(problem, &map, "problem", "rosenbrock2".to_string())?;
            let solver_id = pick(solver, &map, "solver", "almton-simple".to_string())?;
            if !solver_id.starts_with("almton-") {
                bail!("audit applies to the adaptive solver; got `{solver_id}`");
            }
            let starts = pick(starts, &map, "starts", 3usize)?;
            let seed = pick(seed, &map, "seed", 0u64)?;
            let eps = pick(eps, &map, "eps", 1e-8)?;
            let budget = pick(budget, &map, "budget", 100usize)?;
            let problem =
                problems::by_name(&name).ok_or(almton_bench::BenchError::UnknownProblem(name))?;
            let mut cfg = config::almton_from_config(&map)?;
            cfg.epsilon = eps;
            cfg.max_iter = budget;
            cfg.strategy = if solver_id == "almton-heuristic" {
                almton::solver::Strategy::Heuristic
            } else {
                almton::solver::Strategy::Simple
            };
            let solver = SolverSpec::from_id_with(&solver_id, &cfg, &BaselineConfig::default())?;

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut records = Vec::new();
            let mut reports = Vec::new();
            for trial in 0..starts {
                let unit: Vec<f64> = (0..problem.dim()).map(|_| rng.random()).collect();
                let x0 = problem.sample_interior(&unit);
                let res = almton::solver::run(&problem, &x0, &cfg)?;
                let bounds = estimate_bounds(&res, &problem, &cfg);
                let report = audit_run(&res, &bounds, &cfg);
                println!("start {trial} at {:?}: status {}", x0.as_slice(), res.status);
                println!("{report}");
                records.push(almton_bench::grid::run_trial(
                    &problem, &solver, &x0, eps, budget, seed,
                ));
                reports.push(report);
            }
            if let Some(path) = out.or_else(|| map.get("out").map(PathBuf::from)) {
                emit::write_records_csv(&path, &records)?;
                for report in &reports {
                    emit::append_audit_rows(&path, report)?;
                }
                println!("wrote run records and audit rows to {}", path.display());
            }
            println!(
                "audit summary: {}",
                if reports.iter().all(|r| r.passed()) {
                    "all checks passed"
                } else {
                    "violations found"
                }
            );
        }
        Command::CheckDerivs {
            problem,
            points,
            h,
            seed,
        } => {
            let name = pick(problem, &map, "problem", "classic".to_string())?;
            let points = pick(points, &map, "points", 20usize)?;
            let h = pick(h, &map, "h", 1e-5)?;
            let seed = pick(seed, &map, "seed", 0u64)?;
            let problems: Vec<_> = if name == "classic" {
                problems::classic_2d_suite()
            } else {
                vec![problems::by_name(&name)
                    .ok_or(almton_bench::BenchError::UnknownProblem(name))?]
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in problems {
                let mut worst = [0.0f64; 3];
                for _ in 0..points {
                    let unit: Vec<f64> = (0..p.dim()).map(|_| rng.random()).collect();
                    let x = p.sample_interior(&unit);
                    let bundle = p.bundle(&x);
                    let f = |q: &DVector<f64>| p.value(q);
                    let rep = fd_check(&bundle, &f, h)?;
                    for (w, e) in worst.iter_mut().zip(rep.max_errs()) {
                        *w = w.max(e);
                    }
                }
                let ok = worst[0] <= 1e-6 && worst[1] <= 1e-5 && worst[2] <= 1e-4;
                println!(
                    "{:<18} grad {:.2e}  hess {:.2e}  tensor {:.2e}  [{}]",
                    p.name(),
                    worst[0],
                    worst[1],
                    worst[2],
                    if ok { "ok" } else { "EXCEEDS TOLERANCE" }
                );
            }
        }
    }
    Ok(())
}
