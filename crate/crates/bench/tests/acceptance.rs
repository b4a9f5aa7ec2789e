//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers (run with `--nocapture` to see them all).
//!
//! The shared batch covers the four classic 2-D problems from a 3x3 grid of
//! interior starts with both solver strategies at the standard tolerance and
//! budget.

use std::sync::OnceLock;
use std::time::Instant;

use almton::cubic::CubicPoly;
use almton::diagnostics::{audit_run, estimate_bounds};
use almton::problems::{self, Objective, Problem};
use almton::sdp::{solve_cubic, SdpStatus};
use almton::solver::{run, AlmtonConfig, RunStatus, Strategy};
use almton::tensor::{fd_check, SymMatrix, ThirdTensor};
use almton_bench::grid::{run_grid, GridSpec};
use almton_bench::profile::performance_profile;
use almton_bench::solvers::SolverSpec;
use almton_bench::stress::stress_protocol;
use almton_bench::TrialRecord;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

struct BatchRun {
    problem: Problem,
    cfg: AlmtonConfig,
    result: almton::solver::RunResult,
}

fn batch() -> &'static Vec<BatchRun> {
    static BATCH: OnceLock<Vec<BatchRun>> = OnceLock::new();
    BATCH.get_or_init(|| {
        let mut runs = Vec::new();
        for problem in problems::classic_2d_suite() {
            for strategy in [Strategy::Simple, Strategy::Heuristic] {
                let cfg = AlmtonConfig {
                    epsilon: 1e-8,
                    max_iter: 100,
                    ..AlmtonConfig::default().with_strategy(strategy)
                };
                for i in 0..3 {
                    for j in 0..3 {
                        let unit = [0.15 + 0.35 * i as f64, 0.15 + 0.35 * j as f64];
                        let x0 = problem.sample_interior(&unit);
                        let result = run(&problem, &x0, &cfg).expect("run completes");
                        runs.push(BatchRun {
                            problem: problem.clone(),
                            cfg: cfg.clone(),
                            result,
                        });
                    }
                }
            }
        }
        runs
    })
}

fn random_cubic(n: usize, rng: &mut impl Rng) -> CubicPoly {
    CubicPoly::new(
        rng.random_range(-2.0..2.0),
        DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        SymMatrix::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        ThirdTensor::from_fn(n, |_, _, _| rng.random_range(-2.0..2.0)),
    )
    .expect("consistent dims")
}

/// Multistart Newton classification of a cubic: the strict local minimizer
/// when one exists. Independent of the SDP path it checks. Starts are spread
/// over several radii (strict minimizers of random cubics can sit far out
/// where the cubic and quadratic terms nearly cancel) and each Newton run is
/// guarded by backtracking on the gradient norm.
fn multistart_oracle(p: &CubicPoly, starts: usize, seed: u64) -> Option<DVector<f64>> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..starts {
        let radius = 10f64.powf(rng.random_range(-0.5..1.7));
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = x.norm();
        if norm > 1e-9 {
            x *= radius / norm;
        }
        for _ in 0..300 {
            let g = p.grad(&x).expect("dims");
            if g.norm() <= 1e-11 {
                break;
            }
            let h = p.hessian(&x).expect("dims");
            let Some(d) = h.as_matrix().clone().lu().solve(&(-&g)) else {
                break;
            };
            if !d.iter().all(|v| v.is_finite()) {
                break;
            }
            let mut t = 1.0;
            let base = g.norm();
            let mut stepped = false;
            for _ in 0..30 {
                let cand = &x + &d * t;
                if p.grad(&cand).expect("dims").norm() < base {
                    x = cand;
                    stepped = true;
                    break;
                }
                t *= 0.5;
            }
            if !stepped {
                break;
            }
        }
        if p.grad(&x).expect("dims").norm() <= 1e-9
            && p.hessian(&x).expect("dims").min_eigenvalue().expect("finite") > 1e-7
        {
            return Some(x);
        }
    }
    None
}

#[test]
fn criterion_1_subproblem_oracle_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20241);
    let total = 100;
    let mut agree = 0usize;
    let mut worst_gap = 0.0f64;
    let mut disagreements = Vec::new();
    for trial in 0..total {
        let n = if trial % 2 == 0 { 2 } else { 3 };
        let p = random_cubic(n, &mut rng);
        let oracle = multistart_oracle(&p, 200, 9000 + trial as u64);
        let out = solve_cubic(&p, 1e-6).expect("solve");
        match (&oracle, out.status) {
            (Some(xo), SdpStatus::MinimizerFound) => {
                let gap = (out.xbar.as_ref().expect("present") - xo).norm();
                worst_gap = worst_gap.max(gap);
                if gap <= 1e-4 {
                    agree += 1;
                } else {
                    disagreements.push(format!("trial {trial}: position gap {gap:.2e}"));
                }
            }
            (None, SdpStatus::NoLocalMin) => agree += 1,
            (o, s) => disagreements.push(format!(
                "trial {trial}: oracle {:?} vs sdp {s:?}",
                o.as_ref().map(|_| "minimizer")
            )),
        }
    }
    let elapsed = t0.elapsed();
    println!(
        "ACCEPTANCE 1 (subproblem oracle equivalence): {} — {agree}/{total} agree, worst position gap {worst_gap:.2e}, {elapsed:.1?}",
        if agree * 100 >= total * 98 && elapsed.as_secs() <= 120 { "PASS" } else { "FAIL" },
    );
    assert!(
        agree * 100 >= total * 98,
        "agreement {agree}/{total}; disagreements: {disagreements:?}"
    );
    assert!(elapsed.as_secs() <= 120, "runtime {elapsed:?} exceeds 2 min");
}

#[test]
fn criterion_2_unregularized_decrease_identity() {
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for run in batch() {
        for rec in &run.result.ledger {
            if let (Some(direct), Some(ident)) =
                (rec.model_decrease_direct, rec.model_decrease_identity)
            {
                let gap = (direct - ident).abs();
                let tol = 1e-8 * (1.0 + direct.abs());
                worst = worst.max(gap / tol);
                assert!(
                    gap <= tol,
                    "identity gap {gap:.2e} beyond tolerance {tol:.2e} on {}",
                    run.problem.name()
                );
                checked += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE 2 (exact decrease identity): PASS — {checked} unregularized accepted steps, worst gap at {worst:.2e} of tolerance"
    );
    assert!(checked >= 30, "batch produced only {checked} unregularized accepted steps");
}

#[test]
fn criterion_3_monotonicity_and_reset() {
    let mut steps = 0usize;
    for run in batch() {
        let ledger = &run.result.ledger;
        for w in ledger.windows(2) {
            assert!(
                w[1].f <= w[0].f + 1e-12,
                "{}: f increased {} -> {}",
                run.problem.name(),
                w[0].f,
                w[1].f
            );
            if w[0].success {
                assert_eq!(w[1].sigma, 0.0, "sigma not reset after success");
            }
            steps += 1;
        }
        if let Some(last) = ledger.last() {
            assert!(run.result.f <= last.f + 1e-12);
        }
    }
    println!(
        "ACCEPTANCE 3 (monotonicity + reset): PASS — zero violations over {steps} ledger transitions in {} runs",
        batch().len()
    );
}

#[test]
fn criterion_4_quadratic_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..10 {
        let n = rng.random_range(2..=10);
        // SPD matrix with eigenvalues in [0.5, ~10].
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = SymMatrix::new(&m * m.transpose() + DMatrix::identity(n, n) * 0.5)
            .expect("square");
        let b = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let p = problems::quadratic(format!("qp{trial}"), a.clone(), b.clone(), 0.0).unwrap();
        let x0 = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let g0 = a.mul_vec(&x0).unwrap() + &b;
        let newton = a.as_matrix().clone().lu().solve(&(-&g0)).expect("SPD");
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig::default().with_strategy(strategy);
            let res = run(&p, &x0, &cfg).unwrap();
            assert_eq!(res.status, RunStatus::Converged, "trial {trial} {strategy:?}");
            assert_eq!(
                res.counts.successful, 1,
                "trial {trial} {strategy:?}: {} successes",
                res.counts.successful
            );
            assert_eq!(res.counts.iterations, 1);
            let step = &res.x - &x0;
            assert!(
                (&step - &newton).norm() <= 1e-8,
                "trial {trial} {strategy:?}: step differs from Newton step by {:.2e}",
                (&step - &newton).norm()
            );
        }
    }
    println!(
        "ACCEPTANCE 4 (quadratic one-step): PASS — 10 random SPD quadratics, both strategies, Newton-step match at 1e-8"
    );
}

/// Convergence and final-position clauses plus the iteration-count clause as
/// stated. The iteration clause fails: the unregularized cubic model of this
/// objective admits a strict local minimizer only within ~1e-2 of the
/// solution, so nearly every batch pays the computable-threshold
/// regularization and the measured counts are ~985 (Simple) and ~494
/// (Heuristic).
#[test]
fn criterion_5_rosenbrock_convergence() {
    let p = problems::rosenbrock(2).unwrap();
    let x0 = DVector::from_column_slice(&[-1.2, 1.0]);
    let mut iter_counts = Vec::new();
    for strategy in [Strategy::Simple, Strategy::Heuristic] {
        let cfg = AlmtonConfig {
            epsilon: 1e-8,
            max_iter: 2000,
            ..AlmtonConfig::default().with_strategy(strategy)
        };
        let res = run(&p, &x0, &cfg).unwrap();
        let dist = ((res.x[0] - 1.0).powi(2) + (res.x[1] - 1.0).powi(2)).sqrt();
        println!(
            "  {strategy:?}: status {}, iterations {}, |x - (1,1)| = {dist:.2e}, |grad| = {:.2e}",
            res.status, res.counts.iterations, res.grad_norm
        );
        assert_eq!(res.status, RunStatus::Converged, "{strategy:?}");
        assert!(res.grad_norm <= 1e-8, "{strategy:?}: grad {}", res.grad_norm);
        assert!(dist <= 1e-6, "{strategy:?}: final distance {dist:.2e}");
        iter_counts.push((strategy, res.counts.iterations));
    }
    let within_budget = iter_counts.iter().all(|(_, k)| *k <= 100);
    println!(
        "ACCEPTANCE 5a (rosenbrock n=2 convergence): {} — converged to (1,1) at 1e-8 for both strategies; iterations {:?} vs <= 100 bound",
        if within_budget { "PASS" } else { "FAIL" },
        iter_counts
    );
    for (strategy, k) in iter_counts {
        assert!(
            k <= 100,
            "{strategy:?} needs {k} iterations (> 100): the unregularized model lacks a strict \
             local minimizer along the valley, so every batch pays the full computable \
             regularization threshold; see the run ledger for the sigma trace"
        );
    }
}

/// Table-style stress report for the adaptive solver at n = 5; reported, not
/// asserted (subproblem-backend sensitive), but the protocol must complete
/// within 30 minutes.
#[test]
fn criterion_5_stress_protocol_report() {
    let t0 = Instant::now();
    let solver = SolverSpec::from_id("almton-simple").unwrap();
    let (_, rows) = stress_protocol(5, &[solver], 10, 3000, 1e-6).unwrap();
    let elapsed = t0.elapsed();
    for row in &rows {
        println!("  REPORT {row}");
    }
    println!(
        "ACCEPTANCE 5b (n=5 stress protocol): {} — 11 trials in {elapsed:.1?} (limit 30 min)",
        if elapsed.as_secs() <= 1800 { "PASS" } else { "FAIL" }
    );
    assert!(elapsed.as_secs() <= 1800, "protocol took {elapsed:?}");
}

#[test]
fn criterion_6_baseline_sanity() {
    for id in ["newton-cg", "lbfgs"] {
        let solver = SolverSpec::from_id(id).unwrap();
        for n in [5usize, 20] {
            let (_, rows) = stress_protocol(n, std::slice::from_ref(&solver), 10, 3000, 1e-6).unwrap();
            let row = &rows[0];
            println!("  {row}");
            assert_eq!(
                row.successes, row.trials,
                "{id} at n={n}: {}/{} succeeded",
                row.successes, row.trials
            );
        }
    }
    println!("ACCEPTANCE 6 (baseline sanity): PASS — newton-cg and lbfgs at 100% success for n=5 and n=20");
}

#[test]
fn criterion_7_bound_audit() {
    let mut audited = 0usize;
    for batch_run in batch() {
        let bounds = estimate_bounds(&batch_run.result, &batch_run.problem, &batch_run.cfg);
        let report = audit_run(&batch_run.result, &bounds, &batch_run.cfg);
        for check in &report.checks {
            if ["step_upper_bound", "sigma_upper_bound", "iteration_batching"]
                .contains(&check.name)
            {
                assert_eq!(
                    check.violations, 0,
                    "{} on {}: {}",
                    check.name,
                    batch_run.problem.name(),
                    check.detail
                );
            }
        }
        audited += 1;
    }
    println!(
        "ACCEPTANCE 7 (bound audit): PASS — zero violations of checks (a), (c), (d) across {audited} runs"
    );
}

#[test]
fn criterion_8_performance_profile_correctness() {
    // Hand-worked 3 problems x 3 solvers oracle.
    let t = [
        ("p1", [2.0, 4.0, f64::INFINITY]),
        ("p2", [6.0, 3.0, 3.0]),
        ("p3", [10.0, 5.0, 2.0]),
    ];
    let mut records = Vec::new();
    for (problem, row) in &t {
        for (solver, metric) in ["a", "b", "c"].iter().zip(row) {
            records.push(TrialRecord {
                problem: problem.to_string(),
                start: vec![0.0, 0.0],
                solver: solver.to_string(),
                success: metric.is_finite(),
                metric: *metric,
                reason: String::new(),
                grad_norm: 0.0,
                seed: 0,
            });
        }
    }
    let curves = performance_profile(&records).unwrap();
    let taus = &curves[0].taus;
    assert_eq!(taus, &vec![1.0, 2.0, 2.5, 5.0]);
    let by = |id: &str| curves.iter().find(|c| c.solver == id).unwrap();
    let third = 1.0 / 3.0;
    let two_thirds = 2.0 / 3.0;
    assert_eq!(by("a").rho, vec![third, two_thirds, two_thirds, 1.0]);
    assert_eq!(by("b").rho, vec![third, two_thirds, 1.0, 1.0]);
    assert_eq!(by("c").rho, vec![two_thirds, two_thirds, two_thirds, two_thirds]);

    // Invariants on a real batch.
    let solvers: Vec<SolverSpec> = ["damped-newton", "newton-cg", "almton-simple"]
        .iter()
        .map(|id| SolverSpec::from_id(id).unwrap())
        .collect();
    let mut real = Vec::new();
    for name in ["two-well", "himmelblau"] {
        let spec = GridSpec {
            counts: [4, 4],
            ..GridSpec::new(name)
        };
        real.extend(run_grid(&spec, &solvers).unwrap());
    }
    let curves = performance_profile(&real).unwrap();
    for c in &curves {
        for w in c.rho.windows(2) {
            assert!(w[1] >= w[0], "rho not monotone for {}", c.solver);
        }
        assert!(c.rho.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(
            (c.rho.last().unwrap() - c.success_fraction()).abs() < 1e-12,
            "limit of rho differs from success fraction for {}",
            c.solver
        );
    }
    // Each instance with any finite metric awards ratio 1 to its best solvers.
    let mut instances: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for r in &real {
        let key = format!("{}|{:?}|{}", r.problem, r.start, r.seed);
        instances.entry(key).or_default().push(r.metric);
    }
    for (key, metrics) in instances {
        let best = metrics.iter().copied().fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            assert!(metrics.contains(&best), "no best ratio on {key}");
        }
    }
    println!(
        "ACCEPTANCE 8 (profile correctness): PASS — hand-worked 3x3 oracle exact; monotonicity and limit invariants hold on {} real records",
        real.len()
    );
}

#[test]
fn criterion_9_derivative_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut checked = 0usize;
    let mut worst = [0.0f64; 3];
    for p in problems::registry() {
        if p.has_approx_derivatives() {
            continue;
        }
        for _ in 0..20 {
            let unit: Vec<f64> = (0..p.dim()).map(|_| rng.random()).collect();
            let x = p.sample_interior(&unit);
            let bundle = p.bundle(&x);
            let f = |q: &DVector<f64>| p.value(q);
            let rep = fd_check(&bundle, &f, 1e-5).unwrap();
            let errs = rep.max_errs();
            for (w, e) in worst.iter_mut().zip(errs) {
                *w = w.max(e);
            }
            assert!(
                errs[0] <= 1e-6 && errs[1] <= 1e-5 && errs[2] <= 1e-4,
                "{} at {x:?}: errs {errs:?}",
                p.name()
            );
            checked += 1;
        }
    }
    println!(
        "ACCEPTANCE 9 (derivative correctness): PASS — {checked} points, worst errors [{:.2e}, {:.2e}, {:.2e}] vs 1e-6/1e-5/1e-4",
        worst[0], worst[1], worst[2]
    );
}
