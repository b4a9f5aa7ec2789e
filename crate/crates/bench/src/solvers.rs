//! Solver registry: maps CLI identifiers to runnable solver closures sharing
//! one calling convention (problem, start, tolerance, iteration budget).

use std::sync::Arc;

use almton::baselines::{
    cubic_regularized_newton, damped_newton, gradient_descent, lbfgs, newton_cg,
    unregularized_third_order, BaselineConfig,
};
use almton::problems::Problem;
use almton::solver::{run, AlmtonConfig, RunResult, Strategy};
use nalgebra::DVector;

use crate::{BenchError, Result};

type Runner =
    dyn Fn(&Problem, &DVector<f64>, f64, usize) -> almton::Result<RunResult> + Send + Sync;

/// A named solver with a uniform run signature.
#[derive(Clone)]
pub struct SolverSpec {
    id: String,
    runner: Arc<Runner>,
}

impl std::fmt::Debug for SolverSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SolverSpec({})", self.id)
    }
}

impl SolverSpec {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn run(
        &self,
        problem: &Problem,
        x0: &DVector<f64>,
        epsilon: f64,
        budget: usize,
    ) -> almton::Result<RunResult> {
        (self.runner)(problem, x0, epsilon, budget)
    }

    /// Wrap an arbitrary runner; used by tests to inject stub solvers.
    pub fn custom(
        id: impl Into<String>,
        runner: impl Fn(&Problem, &DVector<f64>, f64, usize) -> almton::Result<RunResult>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            runner: Arc::new(runner),
        }
    }

    /// Resolve a solver identifier with explicit base configurations for the
    /// adaptive method and the baselines.
    pub fn from_id_with(
        id: &str,
        almton_base: &AlmtonConfig,
        baseline_base: &BaselineConfig,
    ) -> Result<Self> {
        let almton_base = almton_base.clone();
        let baseline_base = baseline_base.clone();
        let make_almton = |strategy: Strategy| {
            let base = almton_base.clone();
            move |p: &Problem, x0: &DVector<f64>, eps: f64, budget: usize| {
                let cfg = AlmtonConfig {
                    epsilon: eps,
                    max_iter: budget,
                    strategy,
                    ..base.clone()
                };
                run(p, x0, &cfg)
            }
        };
        let make_baseline = move |eps: f64, budget: usize| BaselineConfig {
            epsilon: eps,
            max_iter: budget,
            ..baseline_base.clone()
        };

        let runner: Arc<Runner> = match id {
            "almton-simple" => Arc::new(make_almton(Strategy::Simple)),
            "almton-heuristic" => Arc::new(make_almton(Strategy::Heuristic)),
            "damped-newton" => Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                damped_newton(p, x0, &make_baseline(eps, budget))
            }),
            "newton-cg" => Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                newton_cg(p, x0, &make_baseline(eps, budget))
            }),
            "third-order-newton" => Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                unregularized_third_order(p, x0, &make_baseline(eps, budget))
            }),
            "cubic-reg-newton" => Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                cubic_regularized_newton(p, x0, &make_baseline(eps, budget))
            }),
            "lbfgs" => Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                lbfgs(p, x0, &make_baseline(eps, budget))
            }),
            other => {
                if let Some(alpha) = other.strip_prefix("gd-") {
                    let alpha: f64 = alpha
                        .parse()
                        .map_err(|_| BenchError::UnknownSolver(other.to_string()))?;
                    Arc::new(move |p: &Problem, x0: &DVector<f64>, eps, budget| {
                        let cfg = BaselineConfig {
                            gd_alpha: alpha,
                            ..make_baseline(eps, budget)
                        };
                        gradient_descent(p, x0, &cfg)
                    })
                } else {
                    return Err(BenchError::UnknownSolver(other.to_string()));
                }
            }
        };
        Ok(Self {
            id: id.to_string(),
            runner,
        })
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::from_id_with(id, &AlmtonConfig::default(), &BaselineConfig::default())
    }

    /// Parse a comma-separated identifier list.
    pub fn parse_list(
        list: &str,
        almton_base: &AlmtonConfig,
        baseline_base: &BaselineConfig,
    ) -> Result<Vec<Self>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|id| Self::from_id_with(id, almton_base, baseline_base))
            .collect()
    }
}

/// The full comparator set used by default in grid studies.
pub fn default_ids() -> &'static [&'static str] {
    &[
        "gd-0.01",
        "gd-0.05",
        "damped-newton",
        "newton-cg",
        "lbfgs",
        "third-order-newton",
        "cubic-reg-newton",
        "almton-simple",
        "almton-heuristic",
    ]
}
