//! High-dimension stress protocol: one standard initialization plus randomly
//! perturbed seeds, with medians reported over successful runs only.

use almton::problems;
use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::solvers::SolverSpec;
use crate::{Result, TrialRecord};

/// Summary row for one solver at one dimension.
#[derive(Debug, Clone)]
pub struct StressRow {
    pub solver: String,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    /// Medians over successful runs; absent when nothing succeeded.
    pub median_iters: Option<f64>,
    pub median_fevals: Option<f64>,
    pub median_time_s: Option<f64>,
}

impl StressRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

impl std::fmt::Display for StressRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt_opt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.3}"),
            None => "-".to_string(),
        };
        write!(
            f,
            "{:<20} n={:<3} success {:>3.0}% ({}/{})  iters {}  fevals {}  time(s) {}",
            self.solver,
            self.n,
            100.0 * self.success_rate(),
            self.successes,
            self.trials,
            fmt_opt(self.median_iters),
            fmt_opt(self.median_fevals),
            fmt_opt(self.median_time_s),
        )
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metric"));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Starting points for the protocol: the conventional start plus
/// `n_perturbed` uniform perturbations in `[-0.5, 0.5]^n`, seeds `1..`.
pub fn stress_starts(n: usize, n_perturbed: usize) -> Vec<(u64, DVector<f64>)> {
    let standard = DVector::from_element(n, -1.0);
    let mut starts = vec![(0u64, standard.clone())];
    for seed in 1..=n_perturbed as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
        starts.push((seed, &standard + p));
    }
    starts
}

/// Run the protocol on the generalized Rosenbrock function of dimension `n`.
/// Returns the raw trial records and one summary row per solver.
pub fn stress_protocol(
    n: usize,
    solvers: &[SolverSpec],
    n_perturbed: usize,
    budget: usize,
    epsilon: f64,
) -> Result<(Vec<TrialRecord>, Vec<StressRow>)> {
    let problem = problems::rosenbrock(n)?;
    let starts = stress_starts(n, n_perturbed);

    let mut work = Vec::new();
    for (s_idx, _) in solvers.iter().enumerate() {
        for (seed, start) in &starts {
            work.push((s_idx, *seed, start.clone()));
        }
    }
    struct Trial {
        s_idx: usize,
        seed: u64,
        record: TrialRecord,
        fevals: f64,
        seconds: f64,
    }
    let mut trials: Vec<Trial> = work
        .into_par_iter()
        .map(|(s_idx, seed, start)| {
            let solver = &solvers[s_idx];
            let t0 = std::time::Instant::now();
            let result = solver.run(&problem, &start, epsilon, budget);
            let seconds = t0.elapsed().as_secs_f64();
            let fevals = result
                .as_ref()
                .map(|r| (r.counts.f_evals + r.counts.derivative_evals) as f64)
                .unwrap_or(f64::NAN);
            let record = match result {
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
            };
            Trial {
                s_idx,
                seed,
                record,
                fevals,
                seconds,
            }
        })
        .collect();
    trials.sort_by_key(|t| (t.s_idx, t.seed));

    let mut rows = Vec::new();
    for (s_idx, solver) in solvers.iter().enumerate() {
        let mine: Vec<&Trial> = trials.iter().filter(|t| t.s_idx == s_idx).collect();
        let succ: Vec<&&Trial> = mine.iter().filter(|t| t.record.success).collect();
        rows.push(StressRow {
            solver: solver.id().to_string(),
            n,
            trials: mine.len(),
            successes: succ.len(),
            median_iters: median(succ.iter().map(|t| t.record.metric).collect()),
            median_fevals: median(succ.iter().map(|t| t.fevals).collect()),
            median_time_s: median(succ.iter().map(|t| t.seconds).collect()),
        });
    }
    let records = trials.into_iter().map(|t| t.record).collect();
    Ok((records, rows))
}
