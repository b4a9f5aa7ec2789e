//! Dense grid basin studies: one trial per (starting point, solver).

use almton::problems;
use nalgebra::DVector;
use rayon::prelude::*;

use crate::solvers::SolverSpec;
use crate::{BenchError, Result, TrialRecord};

/// Grid study specification over a 2-D problem's domain box.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub problem: String,
    /// Grid point counts per axis.
    pub counts: [usize; 2],
    /// Outer-iteration budget per run.
    pub budget: usize,
    /// Gradient-norm success tolerance.
    pub epsilon: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            problem: String::new(),
            counts: [30, 30],
            budget: 100,
            epsilon: 1e-8,
        }
    }
}

impl GridSpec {
    pub fn new(problem: impl Into<String>) -> Self {
        Self {
            problem: problem.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.iter().any(|&c| c < 2) {
            return Err(BenchError::Config(format!(
                "grid counts must be >= 2, got {:?}",
                self.counts
            )));
        }
        Ok(())
    }
}

/// Run every solver from every grid start. A trial is successful when the
/// run converged to the gradient tolerance within the budget; failed trials
/// carry an infinite metric. Trials execute on the rayon pool and records are
/// sorted deterministically afterwards.
pub fn run_grid(spec: &GridSpec, solvers: &[SolverSpec]) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    let problem = problems::by_name(&spec.problem)
        .ok_or_else(|| BenchError::UnknownProblem(spec.problem.clone()))?;
    if problem.dim() != 2 {
        return Err(BenchError::Config(format!(
            "grid studies need a 2-D problem; `{}` has dimension {}",
            problem.name(),
            problem.dim()
        )));
    }

    let (nx, ny) = (spec.counts[0], spec.counts[1]);
    let (xlo, xhi) = problem.domain()[0];
    let (ylo, yhi) = problem.domain()[1];
    let mut work = Vec::with_capacity(nx * ny * solvers.len());
    for i in 0..nx {
        for j in 0..ny {
            let x = xlo + (xhi - xlo) * i as f64 / (nx - 1) as f64;
            let y = ylo + (yhi - ylo) * j as f64 / (ny - 1) as f64;
            for (s_idx, _) in solvers.iter().enumerate() {
                work.push((i * ny + j, s_idx, DVector::from_column_slice(&[x, y])));
            }
        }
    }

    let mut indexed: Vec<(usize, usize, TrialRecord)> = work
        .into_par_iter()
        .map(|(cell, s_idx, start)| {
            let solver = &solvers[s_idx];
            let record = run_trial(&problem, solver, &start, spec.epsilon, spec.budget, 0);
            (cell, s_idx, record)
        })
        .collect();
    indexed.sort_by_key(|(cell, s_idx, _)| (*cell, *s_idx));
    Ok(indexed.into_iter().map(|(_, _, r)| r).collect())
}

/// Run one trial and convert the outcome into a record. Solver errors are
/// recorded as failed trials, not propagated: a grid study tolerates
/// individual failures.
pub fn run_trial(
    problem: &problems::Problem,
    solver: &SolverSpec,
    start: &DVector<f64>,
    epsilon: f64,
    budget: usize,
    seed: u64,
) -> TrialRecord {
    match solver.run(problem, start, epsilon, budget) {
        Ok(res) => {
            let success = res.converged();
            TrialRecord {
                problem: problem.name().to_string(),
                start: start.iter().copied().collect(),
                solver: solver.id().to_string(),
                success,
                metric: if success {
                    res.counts.iterations as f64
                } else {
                    f64::INFINITY
                },
                reason: res.status.tag().to_string(),
                grad_norm: res.grad_norm,
                seed,
            }
        }
        Err(e) => TrialRecord {
            problem: problem.name().to_string(),
            start: start.iter().copied().collect(),
            solver: solver.id().to_string(),
            success: false,
            metric: f64::INFINITY,
            reason: format!("error:{e}"),
            grad_norm: f64::NAN,
            seed,
        },
    }
}
