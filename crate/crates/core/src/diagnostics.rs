//! Estimated theoretical constants along a run and empirical bound checks.
//!
//! The estimates use realized trajectory maxima: derivative-norm bounds from
//! the visited iterates, a Lipschitz estimate from consecutive tensor
//! differences, and the regularization/step-size/iteration-count bounds those
//! imply. The order-3 norms come from the unfolding bound, which can only
//! over-estimate, so the derived caps are conservative.

use nalgebra::DVector;

use crate::problems::Objective;
use crate::solver::{AlmtonConfig, RunResult};

/// Constants estimated along one run's trajectory.
#[derive(Debug, Clone)]
pub struct TheoryBounds {
    /// Lipschitz estimate for the third derivative along consecutive distinct
    /// iterates; absent when fewer than two distinct points were visited.
    pub l_hat: Option<f64>,
    /// `[max |grad|, max |hess|_2, max |tensor| bound]` along the iterates.
    pub lambda: [f64; 3],
    /// Trajectory bound on the regularization threshold:
    /// `sqrt(3 L1 sqrt(n) L3) + L2`.
    pub alpha_max: f64,
    /// Uniform cap on the phase regularization implied by the estimates.
    pub sigma_max: Option<f64>,
    /// Constant of the squared-tolerance evaluation bound.
    pub kappa_s: Option<f64>,
    pub n: usize,
}

/// Estimate [`TheoryBounds`] from a completed run, re-evaluating derivative
/// bundles at the recorded iterates (and the final point).
pub fn estimate_bounds(
    result: &RunResult,
    problem: &dyn Objective,
    cfg: &AlmtonConfig,
) -> TheoryBounds {
    let n = problem.dim();
    let mut points: Vec<DVector<f64>> = Vec::new();
    for rec in &result.ledger {
        if points.last().map(|p| p != &rec.x).unwrap_or(true) {
            points.push(rec.x.clone());
        }
    }
    if points.last().map(|p| p != &result.x).unwrap_or(true) {
        points.push(result.x.clone());
    }

    let bundles: Vec<_> = points.iter().map(|p| problem.bundle(p)).collect();
    let mut lambda = [0.0f64; 3];
    for b in &bundles {
        lambda[0] = lambda[0].max(b.g.norm());
        lambda[1] = lambda[1].max(b.h.spectral_norm());
        lambda[2] = lambda[2].max(b.t.operator_norm_bound());
    }

    // Third-derivative Lipschitz constant in the convention
    // |T(x) - T(y)| <= (p-1)! L |x - y| with (p-1)! = 2.
    let mut l_hat: Option<f64> = None;
    for w in bundles.windows(2) {
        let dist = (&w[1].x - &w[0].x).norm();
        if dist <= 1e-14 {
            continue;
        }
        let diff = w[1].t.sub(&w[0].t).expect("same dimension").operator_norm_bound();
        let est = diff / (2.0 * dist);
        l_hat = Some(l_hat.map_or(est, |cur: f64| cur.max(est)));
    }

    let alpha_max = (3.0 * lambda[0] * (n as f64).sqrt() * lambda[2]).sqrt() + lambda[1];
    let sigma_max = l_hat.map(|l| {
        alpha_max.max(16.0 * l * lambda[0] * lambda[0] / (cfg.c * cfg.c) / (3.0 * (1.0 - cfg.eta)))
    });
    let kappa_s =
        sigma_max.map(|sm| (2.0 * sm + l_hat.unwrap_or(0.0)).powi(2) / (cfg.eta * cfg.l));

    TheoryBounds {
        l_hat,
        lambda,
        alpha_max,
        sigma_max,
        kappa_s,
        n,
    }
}

/// One audited condition.
#[derive(Debug, Clone)]
pub struct AuditCheck {
    pub name: &'static str,
    pub violations: usize,
    /// Iterations examined; zero means the check was skipped for lack of data.
    pub examined: usize,
    pub detail: String,
}

/// Audit report over one run ledger.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    /// Machine-readable rows, one per check, suitable for appending to a run
    /// CSV as comment lines.
    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("#audit,{},{},{},{}", c.name, c.violations, c.examined, c.detail))
            .collect()
    }
}

impl std::fmt::Display for AuditReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "bound audit ({} checks)", self.checks.len())?;
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {} - {} violation(s) over {} iteration(s); {}",
                if c.violations == 0 { "ok" } else { "FAIL" },
                c.name,
                c.violations,
                c.examined,
                c.detail
            )?;
        }
        write!(
            f,
            "result: {}",
            if self.passed() { "all checks passed" } else { "violations found" }
        )
    }
}

/// Check the realized trajectory against the estimated bounds:
///
/// - (a) step-size cap `|s_k| <= 4 L1 / c` on every nonzero step;
/// - (b) step-size floor `|s_k| >= min(1, |grad f(x_k + s_k)| / (2 sigma_max + L))`
///   on successes, up to `1e-9` slack;
/// - (c) regularization cap `sigma_tilde <= sigma_max`;
/// - (d) the batched iteration-count bound tying total iterations to the
///   number of successes;
/// - (e) the batch structure `|U1| <= |S| + 1`.
pub fn audit_run(result: &RunResult, bounds: &TheoryBounds, cfg: &AlmtonConfig) -> AuditReport {
    let mut checks = Vec::new();
    let ledger = &result.ledger;

    // (a) step-size upper bound
    {
        let cap = 4.0 * bounds.lambda[0] / cfg.c;
        let mut violations = 0;
        let mut examined = 0;
        for rec in ledger {
            if rec.step_norm > 0.0 {
                examined += 1;
                if rec.step_norm > cap * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
        checks.push(AuditCheck {
            name: "step_upper_bound",
            violations,
            examined,
            detail: format!("cap 4*L1/c = {cap:.6e}"),
        });
    }

    // (b) step-size lower bound on successes
    {
        let mut violations = 0;
        let mut examined = 0;
        if let Some(sigma_max) = bounds.sigma_max {
            let denom = 2.0 * sigma_max + bounds.l_hat.unwrap_or(0.0);
            for (i, rec) in ledger.iter().enumerate() {
                if !rec.success {
                    continue;
                }
                let grad_next = ledger
                    .get(i + 1)
                    .map(|r| r.grad_norm)
                    .unwrap_or(result.grad_norm);
                examined += 1;
                let floor = if denom > 0.0 {
                    (grad_next / denom).min(1.0)
                } else {
                    0.0
                };
                if rec.step_norm < floor - 1e-9 {
                    violations += 1;
                }
            }
            checks.push(AuditCheck {
                name: "step_lower_bound",
                violations,
                examined,
                detail: format!("denominator 2*sigma_max + L = {denom:.6e}"),
            });
        } else {
            checks.push(AuditCheck {
                name: "step_lower_bound",
                violations: 0,
                examined: 0,
                detail: "skipped: Lipschitz estimate unavailable".into(),
            });
        }
    }

    // (c) regularization cap
    {
        if let Some(sigma_max) = bounds.sigma_max {
            let mut violations = 0;
            for rec in ledger {
                if rec.sigma_tilde > sigma_max * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
            checks.push(AuditCheck {
                name: "sigma_upper_bound",
                violations,
                examined: ledger.len(),
                detail: format!("sigma_max = {sigma_max:.6e}"),
            });
        } else {
            checks.push(AuditCheck {
                name: "sigma_upper_bound",
                violations: 0,
                examined: 0,
                detail: "skipped: Lipschitz estimate unavailable".into(),
            });
        }
    }

    // (d) batched iteration-count bound
    {
        if let Some(sigma_max) = bounds.sigma_max {
            let successes = result.counts.successful;
            let ratio = if cfg.gamma > 1.0 && sigma_max > 1.0 {
                (sigma_max.ln() / cfg.gamma.ln()).ceil().max(0.0) as usize
            } else {
                0
            };
            let cap = (2 + ratio) * successes + 1 + ratio;
            let violations = usize::from(ledger.len() > cap);
            checks.push(AuditCheck {
                name: "iteration_batching",
                violations,
                examined: ledger.len(),
                detail: format!("iterations {} vs cap {cap}", ledger.len()),
            });
        } else {
            checks.push(AuditCheck {
                name: "iteration_batching",
                violations: 0,
                examined: 0,
                detail: "skipped: Lipschitz estimate unavailable".into(),
            });
        }
    }

    // (e) at most one sigma = 0 failure per success batch
    {
        let violations = usize::from(
            result.counts.unsuccessful_sigma0 > result.counts.successful + 1,
        );
        checks.push(AuditCheck {
            name: "sigma_zero_failures",
            violations,
            examined: ledger.len(),
            detail: format!(
                "|U1| = {} vs |S| + 1 = {}",
                result.counts.unsuccessful_sigma0,
                result.counts.successful + 1
            ),
        });
    }

    AuditReport { checks }
}
