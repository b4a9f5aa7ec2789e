//! End-to-end pipeline checks through the public API: run the adaptive
//! solver on registry problems, then feed the ledger through the
//! diagnostics estimators and audits.

use almton::diagnostics::{audit_run, estimate_bounds};
use almton::problems;
use almton::solver::{run, AlmtonConfig, RunStatus, Strategy};
use nalgebra::DVector;

#[test]
fn classic_problems_converge_from_moderate_starts() {
    // One representative interior start per problem, both strategies.
    let cases = [
        ("himmelblau", [0.5, -1.0]),
        ("three-hump-camel", [1.2, 0.8]),
        ("styblinski-tang2", [-1.0, -1.5]),
        ("two-well", [0.7, 1.1]),
    ];
    for (name, start) in cases {
        let problem = problems::by_name(name).unwrap();
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig {
                max_iter: 200,
                ..AlmtonConfig::default().with_strategy(strategy)
            };
            let res = run(&problem, &DVector::from_column_slice(&start), &cfg).unwrap();
            assert_eq!(res.status, RunStatus::Converged, "{name} {strategy:?}");
            // Converged runs end at one of the problem's stationary points;
            // with the curvature floor, specifically near a minimizer.
            let nearest = problem
                .known_minimizers()
                .iter()
                .map(|m| (m - &res.x).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= 1e-5,
                "{name} {strategy:?}: ended {nearest:.2e} from the nearest known minimizer"
            );
        }
    }
}

#[test]
fn run_ledger_supports_the_diagnostics_pipeline() {
    let problem = problems::rosenbrock(2).unwrap();
    let cfg = AlmtonConfig {
        max_iter: 1200,
        ..Default::default()
    };
    let res = run(&problem, &DVector::from_column_slice(&[-1.2, 1.0]), &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);

    let bounds = estimate_bounds(&res, &problem, &cfg);
    assert!(bounds.l_hat.is_some());
    assert!(bounds.lambda.iter().all(|v| *v >= 0.0));
    assert!(bounds.sigma_max.unwrap() >= bounds.alpha_max);

    let report = audit_run(&res, &bounds, &cfg);
    assert!(report.passed(), "{report}");

    // Counts reconcile with the ledger.
    assert_eq!(res.counts.iterations, res.ledger.len());
    assert_eq!(
        res.counts.iterations,
        res.counts.successful + res.counts.unsuccessful_sigma0 + res.counts.unsuccessful_sigmapos
    );
    let successes = res.ledger.iter().filter(|r| r.success).count();
    assert_eq!(successes, res.counts.successful);
}

#[test]
fn finite_difference_wrapper_is_solvable() {
    // Wrap a plain evaluator and drive the solver through the differenced
    // derivatives; accuracy targets must stay loose enough for the noise.
    let wrapped = problems::fd_problem_wrapper(
        "fd-two-well",
        |x: &DVector<f64>| (x[0] * x[0] - 1.0).powi(2) + x[1] * x[1],
        2,
        vec![(-2.0, 2.0); 2],
    )
    .unwrap();
    assert!(wrapped.has_approx_derivatives());
    let cfg = AlmtonConfig {
        epsilon: 1e-5,
        max_iter: 100,
        ..Default::default()
    };
    let res = run(&wrapped, &DVector::from_column_slice(&[0.6, 0.9]), &cfg).unwrap();
    assert_eq!(res.status, RunStatus::Converged);
    assert!((res.x[0].abs() - 1.0).abs() <= 1e-3 && res.x[1].abs() <= 1e-3);
}
