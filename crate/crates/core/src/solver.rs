//! The adaptive third-order Newton outer loop.
//!
//! Each iteration builds the cubic Taylor model at the current point, asks a
//! strategy (Simple or Heuristic) for a trial step and its phase-closing
//! regularization `sigma_tilde`, accepts or rejects through the mixed ratio
//! test, and updates the outer regularization: reset to zero on success,
//! strategy-specific growth on failure.

use nalgebra::DVector;

use crate::cubic::{alpha_lm, decrease_identity, CubicPoly, RegularizedModel};
use crate::problems::Objective;
use crate::sdp::{self, SdpStatus};
use crate::tensor::DerivativeBundle;
use crate::{Error, Result};

/// Step-calculation strategy for the model phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// One subproblem solve per iteration; regularization growth is delegated
    /// entirely to the outer update.
    Simple,
    /// Inner correction loop that escalates `sigma_tilde` until the model is
    /// well posed, curvature clears the floor, and the model value does not
    /// exceed the current objective value.
    Heuristic,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Strategy::Simple),
            "heuristic" => Ok(Strategy::Heuristic),
            other => Err(Error::InvalidParameter {
                name: "strategy",
                reason: format!("unknown strategy `{other}`"),
            }),
        }
    }
}

/// Solver hyperparameters.
///
/// Defaults: `c = 1e-2`, `l = c/10`, `eta = 0.1`, `gamma = 3`, 100 iterations,
/// `sigma_cap = 1e10`, `inner_cap = 60`.
#[derive(Debug, Clone)]
pub struct AlmtonConfig {
    /// Gradient-norm termination tolerance.
    pub epsilon: f64,
    /// Curvature floor required of the shifted Hessian at the trial point.
    pub c: f64,
    /// Predictor coefficient in the unregularized ratio; must lie in (0, c/6].
    pub l: f64,
    /// Acceptance threshold in (0, 1).
    pub eta: f64,
    /// Regularization growth factor, > 1.
    pub gamma: f64,
    pub max_iter: usize,
    /// Practical divergence guard on the regularization.
    pub sigma_cap: f64,
    pub strategy: Strategy,
    /// Guard on the heuristic inner loop.
    pub inner_cap: usize,
}

impl Default for AlmtonConfig {
    fn default() -> Self {
        let c = 1e-2;
        Self {
            epsilon: 1e-8,
            c,
            l: c / 10.0,
            eta: 0.1,
            gamma: 3.0,
            max_iter: 100,
            sigma_cap: 1e10,
            strategy: Strategy::Simple,
            inner_cap: 60,
        }
    }
}

impl AlmtonConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Error::InvalidParameter { name, reason };
        if !(self.epsilon > 0.0) {
            return Err(bad("epsilon", format!("must be > 0, got {}", self.epsilon)));
        }
        if !(self.c > 0.0) {
            return Err(bad("c", format!("must be > 0, got {}", self.c)));
        }
        if !(self.l > 0.0 && self.l <= self.c / 6.0) {
            return Err(bad("l", format!("must lie in (0, c/6], got {}", self.l)));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(bad("eta", format!("must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.gamma > 1.0) {
            return Err(bad("gamma", format!("must be > 1, got {}", self.gamma)));
        }
        if !(self.sigma_cap > 0.0) {
            return Err(bad("sigma_cap", format!("must be > 0, got {}", self.sigma_cap)));
        }
        Ok(())
    }

    /// Subproblem tolerance schedule: coarse while far from stationarity,
    /// tight once the gradient is small.
    pub fn subproblem_tol(&self, grad_norm: f64) -> f64 {
        if grad_norm > 1e-3 {
            1e-3
        } else {
            1e-6
        }
    }
}

/// Terminal classification of a run. Shared by every solver in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIterationsExceeded,
    SigmaExceeded,
    SubsolverError,
    /// Iterates left the finite range (fixed-step methods).
    Diverged,
    /// The unregularized cubic had no strict local minimizer (third-order
    /// Newton without a fallback).
    SdpFail,
}

impl RunStatus {
    /// Short failure-reason tag used in records and CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIterationsExceeded => "max_iter",
            RunStatus::SigmaExceeded => "sigma_exc",
            RunStatus::SubsolverError => "subsolver_error",
            RunStatus::Diverged => "diverged",
            RunStatus::SdpFail => "sdp_fail",
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Subproblem-solve classification recorded per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsolverTag {
    Found,
    NoLocalMin,
    Failure,
    /// No subproblem was attempted this iteration.
    NotInvoked,
}

/// One ledger row: the state at the start of iteration `k` plus everything
/// the model phase and ratio test produced.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub f: f64,
    pub grad_norm: f64,
    /// Outer regularization at iteration start.
    pub sigma: f64,
    /// Phase-closing regularization the step was computed with.
    pub sigma_tilde: f64,
    pub step_norm: f64,
    /// Smallest eigenvalue of the shifted Hessian at the trial point.
    pub lambda_bar: Option<f64>,
    pub success: bool,
    /// Acceptance ratio. Tie acceptances (predicted decrease below the
    /// rounding resolution of f, with a non-increasing trial value) record
    /// `success = true` with `rho` below the threshold.
    pub rho: f64,
    pub subsolver: SubsolverTag,
    pub inner_loops: usize,
    /// Regularized model value at the trial step.
    pub model_value: Option<f64>,
    /// Unregularized model decrease, measured directly (accepted steps with
    /// `sigma_tilde = 0` only).
    pub model_decrease_direct: Option<f64>,
    /// Same decrease through the closed-form Hessian identity.
    pub model_decrease_identity: Option<f64>,
    /// Smallest eigenvalue of the model Hessian at the step.
    pub min_eig_model_step: Option<f64>,
    /// Smallest eigenvalue of the objective Hessian at the iterate.
    pub min_eig_center: f64,
}

/// Evaluation and iteration counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunCounts {
    pub iterations: usize,
    pub successful: usize,
    /// Rejected iterations that started from `sigma = 0`.
    pub unsuccessful_sigma0: usize,
    /// Rejected iterations that started from `sigma > 0`.
    pub unsuccessful_sigmapos: usize,
    /// Objective-only evaluations (ratio tests, line searches).
    pub f_evals: usize,
    /// Derivative evaluations: full bundles plus Hessian-only calls.
    pub derivative_evals: usize,
    pub sdp_solves: usize,
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub x: DVector<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub counts: RunCounts,
    pub ledger: Vec<IterationRecord>,
}

impl RunResult {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// What a model phase hands back to the outer loop.
#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    /// Trial step in step coordinates; `None` means the phase failed and the
    /// ratio is forced to negative infinity.
    pub step: Option<DVector<f64>>,
    pub sigma_tilde: f64,
    pub lambda_bar: Option<f64>,
    /// `m(xbar; sigma_tilde)` when a step exists.
    pub model_value: Option<f64>,
    pub inner_loops: usize,
    pub sdp_solves: usize,
    pub hessian_evals: usize,
    pub subsolver: SubsolverTag,
    /// The heuristic loop hit its inner cap or the regularization cap.
    pub sigma_exceeded: bool,
}

impl PhaseOutcome {
    fn invalid(sigma_tilde: f64, subsolver: SubsolverTag) -> Self {
        Self {
            step: None,
            sigma_tilde,
            lambda_bar: None,
            model_value: None,
            inner_loops: 0,
            sdp_solves: 0,
            hessian_evals: 0,
            subsolver,
            sigma_exceeded: false,
        }
    }
}

/// Simple model phase: one solve at `sigma_tilde = sigma_k`, valid only when
/// the minimizer exists and the shifted Hessian at the trial point clears the
/// curvature floor. Invalid phases return no step, which forces rejection.
pub fn step_simple(
    obj: &dyn Objective,
    bundle: &DerivativeBundle,
    sigma_k: f64,
    cfg: &AlmtonConfig,
) -> Result<PhaseOutcome> {
    let sigma_tilde = sigma_k;
    let model = RegularizedModel::new(bundle, sigma_tilde)?;
    let tol = cfg.subproblem_tol(bundle.g.norm());
    let out = sdp::solve_cubic(&model.poly()?, tol)?;
    let mut phase = match out.status {
        SdpStatus::SolverFailure => PhaseOutcome::invalid(sigma_tilde, SubsolverTag::Failure),
        SdpStatus::NoLocalMin => PhaseOutcome::invalid(sigma_tilde, SubsolverTag::NoLocalMin),
        SdpStatus::MinimizerFound => {
            let s = out.xbar.expect("minimizer present");
            let xbar = &bundle.x + &s;
            let shifted = obj.hessian(&xbar).shifted(2.0 * sigma_tilde);
            let lambda_bar = shifted.min_eigenvalue()?;
            let model_value = model.value(&s)?;
            let mut p = if lambda_bar >= cfg.c {
                PhaseOutcome {
                    step: Some(s),
                    sigma_tilde,
                    lambda_bar: Some(lambda_bar),
                    model_value: Some(model_value),
                    inner_loops: 0,
                    sdp_solves: 0,
                    hessian_evals: 0,
                    subsolver: SubsolverTag::Found,
                    sigma_exceeded: false,
                }
            } else {
                let mut p = PhaseOutcome::invalid(sigma_tilde, SubsolverTag::Found);
                p.lambda_bar = Some(lambda_bar);
                p
            };
            p.hessian_evals = 1;
            p
        }
    };
    phase.inner_loops = 1;
    phase.sdp_solves = 1;
    Ok(phase)
}

/// Heuristic model phase: retry with escalating `sigma_tilde` until the model
/// admits a minimizer with adequate curvature whose model value does not
/// exceed the current objective value.
pub fn step_heuristic(
    obj: &dyn Objective,
    bundle: &DerivativeBundle,
    sigma_k: f64,
    cfg: &AlmtonConfig,
) -> Result<PhaseOutcome> {
    let alpha = alpha_lm(bundle)?;
    let f_k = bundle.f;
    let tol = cfg.subproblem_tol(bundle.g.norm());

    let mut sigma_tilde = sigma_k;
    let mut inner = 0usize;
    let mut solves = 0usize;
    let mut hessians = 0usize;
    loop {
        if inner >= cfg.inner_cap || sigma_tilde > cfg.sigma_cap {
            let mut p = PhaseOutcome::invalid(sigma_tilde, SubsolverTag::NoLocalMin);
            p.inner_loops = inner;
            p.sdp_solves = solves;
            p.hessian_evals = hessians;
            p.sigma_exceeded = true;
            return Ok(p);
        }
        inner += 1;
        let model = RegularizedModel::new(bundle, sigma_tilde)?;
        let out = sdp::solve_cubic(&model.poly()?, tol)?;
        solves += 1;
        let mut correction = 0.0;
        match out.status {
            SdpStatus::SolverFailure => {
                let mut p = PhaseOutcome::invalid(sigma_tilde, SubsolverTag::Failure);
                p.inner_loops = inner;
                p.sdp_solves = solves;
                p.hessian_evals = hessians;
                return Ok(p);
            }
            SdpStatus::MinimizerFound => {
                let s = out.xbar.expect("minimizer present");
                let xbar = &bundle.x + &s;
                let shifted = obj.hessian(&xbar).shifted(2.0 * sigma_tilde);
                hessians += 1;
                let lambda_bar = shifted.min_eigenvalue()?;
                let model_value = model.value(&s)?;
                if lambda_bar >= cfg.c && model_value <= f_k {
                    return Ok(PhaseOutcome {
                        step: Some(s),
                        sigma_tilde,
                        lambda_bar: Some(lambda_bar),
                        model_value: Some(model_value),
                        inner_loops: inner,
                        sdp_solves: solves,
                        hessian_evals: hessians,
                        subsolver: SubsolverTag::Found,
                        sigma_exceeded: false,
                    });
                }
                correction = (cfg.c - lambda_bar).max(0.0);
            }
            SdpStatus::NoLocalMin => {}
        }
        sigma_tilde = alpha
            .max(cfg.gamma * sigma_tilde.max(1.0))
            .max(sigma_tilde + correction);
    }
}

/// Mixed acceptance ratio: actual decrease over `l |s|^2` in the
/// unregularized regime, actual over predicted model decrease otherwise.
/// Degenerate denominators return negative infinity, which fails every
/// acceptance test.
pub fn acceptance_ratio(
    f_k: f64,
    f_bar: f64,
    step_norm: f64,
    sigma_tilde: f64,
    model_value: f64,
    l: f64,
) -> f64 {
    if step_norm <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if sigma_tilde == 0.0 {
        let denom = l * step_norm * step_norm;
        if denom <= 0.0 || !denom.is_finite() {
            return f64::NEG_INFINITY;
        }
        (f_k - f_bar) / denom
    } else {
        // Positive by the model-phase invariants in exact arithmetic; floating
        // point needs a floor.
        let denom = f_k - model_value;
        if denom <= 1e-14 || !denom.is_finite() {
            return f64::NEG_INFINITY;
        }
        (f_k - f_bar) / denom
    }
}

/// Failure-branch regularization update. The success branch always resets the
/// outer regularization to zero.
pub fn sigma_update(
    strategy: Strategy,
    sigma_k: f64,
    sigma_tilde_k: f64,
    alpha_lm_k: f64,
    gamma: f64,
) -> f64 {
    match strategy {
        Strategy::Simple => {
            if sigma_k == 0.0 {
                alpha_lm_k.max(1.0)
            } else {
                gamma * sigma_k
            }
        }
        Strategy::Heuristic => alpha_lm_k.max(gamma * sigma_tilde_k.max(1.0)),
    }
}

/// Run the adaptive third-order method from `x0`.
pub fn run(obj: &dyn Objective, x0: &DVector<f64>, cfg: &AlmtonConfig) -> Result<RunResult> {
    cfg.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }

    let mut counts = RunCounts::default();
    let mut ledger: Vec<IterationRecord> = Vec::new();
    let mut x = x0.clone();
    let mut sigma = 0.0f64;
    let mut bundle = obj.bundle(&x);
    counts.derivative_evals += 1;

    let status = loop {
        if !bundle.is_finite() {
            break RunStatus::Diverged;
        }
        let grad_norm = bundle.g.norm();
        if grad_norm <= cfg.epsilon {
            break RunStatus::Converged;
        }
        if ledger.len() >= cfg.max_iter {
            break RunStatus::MaxIterationsExceeded;
        }

        let psi = CubicPoly::from_bundle(&bundle);
        let alpha = alpha_lm(&bundle)?;
        let phase = match cfg.strategy {
            Strategy::Simple => step_simple(obj, &bundle, sigma, cfg)?,
            Strategy::Heuristic => step_heuristic(obj, &bundle, sigma, cfg)?,
        };
        counts.sdp_solves += phase.sdp_solves;
        counts.derivative_evals += phase.hessian_evals;

        let f_k = bundle.f;
        let min_eig_center = bundle.h.min_eigenvalue()?;

        let (rho, f_bar) = match &phase.step {
            None => (f64::NEG_INFINITY, None),
            Some(s) => {
                let xbar = &x + s;
                let fb = obj.value(&xbar);
                counts.f_evals += 1;
                let rho = acceptance_ratio(
                    f_k,
                    fb,
                    s.norm(),
                    phase.sigma_tilde,
                    phase.model_value.unwrap_or(f64::INFINITY),
                    cfg.l,
                );
                (rho, Some(fb))
            }
        };
        let mut success = rho >= cfg.eta;

        // Sub-resolution tie rule: once the predicted decrease drops below
        // the rounding resolution of f, the ratio numerator is a difference
        // of equal floats and the test would reject forever even though the
        // model decrease is real. A trial point that does not increase f is
        // accepted in that regime, mirroring how line searches treat ties.
        if !success {
            if let (Some(s), Some(fb)) = (&phase.step, f_bar) {
                let resolution = 16.0 * f64::EPSILON * (1.0 + f_k.abs());
                // In the regularized regime the floored denominator already
                // declares the ratio unevaluable, so the tie rule covers the
                // whole floor band.
                let (predicted, threshold) = if phase.sigma_tilde == 0.0 {
                    (cfg.l * s.norm_squared(), resolution)
                } else {
                    (
                        f_k - phase.model_value.unwrap_or(f64::INFINITY),
                        resolution.max(1e-14),
                    )
                };
                if fb <= f_k && predicted <= threshold {
                    success = true;
                }
            }
        }

        // Re-verify the exact decrease identity on every unregularized
        // accepted step.
        let (dec_direct, dec_identity, min_eig_step) = if success && phase.sigma_tilde == 0.0 {
            let s = phase.step.as_ref().expect("accepted step");
            let h_bar = psi.hessian(s)?;
            let direct = f_k - psi.eval(s)?;
            let ident = decrease_identity(s, psi.quadratic(), &h_bar)?;
            (Some(direct), Some(ident), Some(h_bar.min_eigenvalue()?))
        } else {
            (None, None, None)
        };

        ledger.push(IterationRecord {
            k: ledger.len(),
            x: x.clone(),
            f: f_k,
            grad_norm,
            sigma,
            sigma_tilde: phase.sigma_tilde,
            step_norm: phase.step.as_ref().map(|s| s.norm()).unwrap_or(0.0),
            lambda_bar: phase.lambda_bar,
            success,
            rho,
            subsolver: phase.subsolver,
            inner_loops: phase.inner_loops,
            model_value: phase.model_value,
            model_decrease_direct: dec_direct,
            model_decrease_identity: dec_identity,
            min_eig_model_step: min_eig_step,
            min_eig_center,
        });

        if phase.subsolver == SubsolverTag::Failure {
            break RunStatus::SubsolverError;
        }
        if phase.sigma_exceeded {
            break RunStatus::SigmaExceeded;
        }

        if success {
            counts.successful += 1;
            x += phase.step.as_ref().expect("accepted step");
            sigma = 0.0;
            bundle = obj.bundle(&x);
            counts.derivative_evals += 1;
        } else {
            if sigma == 0.0 {
                counts.unsuccessful_sigma0 += 1;
            } else {
                counts.unsuccessful_sigmapos += 1;
            }
            sigma = sigma_update(cfg.strategy, sigma, phase.sigma_tilde, alpha, cfg.gamma);
            if sigma > cfg.sigma_cap {
                break RunStatus::SigmaExceeded;
            }
        }
    };

    counts.iterations = ledger.len();
    Ok(RunResult {
        status,
        x,
        f: bundle.f,
        grad_norm: bundle.g.norm(),
        counts,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{self, Objective, Problem};
    use crate::tensor::SymMatrix;

    fn dvec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn sphere(n: usize) -> Problem {
        problems::quadratic("sphere", SymMatrix::identity(n), DVector::zeros(n), 0.0).unwrap()
    }

    #[test]
    fn quadratic_converges_in_one_successful_iteration() {
        let p = sphere(2);
        let x0 = dvec(&[3.0, 4.0]);
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig::default().with_strategy(strategy);
            let res = run(&p, &x0, &cfg).unwrap();
            assert_eq!(res.status, RunStatus::Converged);
            assert_eq!(res.counts.successful, 1, "{strategy:?}");
            assert_eq!(res.counts.iterations, 1);
            assert!((res.x[0]).abs() < 1e-8 && (res.x[1]).abs() < 1e-8);
            // Step equals the Newton step: origin minus start.
            let rec = &res.ledger[0];
            assert!((rec.step_norm - 5.0).abs() < 1e-8);
            assert_eq!(rec.sigma_tilde, 0.0);
        }
    }

    #[test]
    fn already_stationary_start_terminates_without_iterations() {
        let p = sphere(3);
        let cfg = AlmtonConfig::default();
        let res = run(&p, &DVector::zeros(3), &cfg).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        assert_eq!(res.counts.iterations, 0);
        assert_eq!(res.counts.sdp_solves, 0);
    }

    // The flat valley keeps the unregularized cubic from admitting a strict
    // local minimizer until very near the solution, so nearly every batch
    // pays the computable-threshold regularization and steps stay short:
    // roughly a thousand iterations for Simple and half that for Heuristic.
    #[test]
    fn rosenbrock_converges_with_both_strategies() {
        let p = problems::rosenbrock(2).unwrap();
        let x0 = dvec(&[-1.2, 1.0]);
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig {
                max_iter: 1500,
                ..AlmtonConfig::default().with_strategy(strategy)
            };
            let res = run(&p, &x0, &cfg).unwrap();
            assert_eq!(res.status, RunStatus::Converged, "{strategy:?}");
            assert!(res.grad_norm <= 1e-8);
            assert!((res.x[0] - 1.0).abs() <= 1e-6 && (res.x[1] - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn simple_phase_takes_newton_step_on_quadratic() {
        let p = sphere(2);
        let bundle = p.bundle(&dvec(&[3.0, 4.0]));
        let cfg = AlmtonConfig::default();
        let phase = step_simple(&p, &bundle, 0.0, &cfg).unwrap();
        let s = phase.step.expect("valid phase");
        assert!((s[0] + 3.0).abs() < 1e-8 && (s[1] + 4.0).abs() < 1e-8);
        assert_eq!(phase.sigma_tilde, 0.0);
        assert_eq!(phase.sdp_solves, 1);
    }

    #[test]
    fn simple_phase_invalid_when_model_lacks_minimizer() {
        // f(x) = x^3 at the origin-shifted point: cubic model s^3 + eps
        // gradient has no strict minimizer.
        struct PureCubic;
        impl Objective for PureCubic {
            fn dim(&self) -> usize {
                1
            }
            fn value(&self, x: &DVector<f64>) -> f64 {
                x[0].powi(3) + 0.5 * x[0]
            }
            fn bundle(&self, x: &DVector<f64>) -> crate::tensor::DerivativeBundle {
                crate::tensor::DerivativeBundle::new(
                    x.clone(),
                    self.value(x),
                    dvec(&[3.0 * x[0] * x[0] + 0.5]),
                    SymMatrix::from_fn(1, |_, _| 6.0 * x[0]),
                    crate::tensor::ThirdTensor::from_fn(1, |_, _, _| 6.0),
                )
                .unwrap()
            }
        }
        let obj = PureCubic;
        let bundle = obj.bundle(&DVector::zeros(1));
        let cfg = AlmtonConfig::default();
        let phase = step_simple(&obj, &bundle, 0.0, &cfg).unwrap();
        assert!(phase.step.is_none());
        assert_eq!(phase.subsolver, SubsolverTag::NoLocalMin);
        // Forced rejection from sigma = 0 escalates to max(1, alpha_lm).
        let alpha = alpha_lm(&bundle).unwrap();
        let next = sigma_update(Strategy::Simple, 0.0, phase.sigma_tilde, alpha, cfg.gamma);
        assert_eq!(next, alpha.max(1.0));
    }

    #[test]
    fn heuristic_phase_exits_first_pass_when_well_posed() {
        let p = sphere(2);
        let bundle = p.bundle(&dvec(&[3.0, 4.0]));
        let cfg = AlmtonConfig::default().with_strategy(Strategy::Heuristic);
        let phase = step_heuristic(&p, &bundle, 0.0, &cfg).unwrap();
        assert_eq!(phase.inner_loops, 1);
        assert_eq!(phase.sigma_tilde, 0.0);
        assert!(phase.step.is_some());
    }

    #[test]
    fn heuristic_phase_escalates_on_weak_curvature() {
        // 1-D quadratic with curvature c/2: the first pass fails the
        // curvature floor, the retry regularizes to gamma * max(1, 0) = 3.
        let a = SymMatrix::from_fn(1, |_, _| 0.005);
        let p = problems::quadratic("weak", a, dvec(&[1.0]), 0.0).unwrap();
        let bundle = p.bundle(&dvec(&[2.0]));
        let cfg = AlmtonConfig::default().with_strategy(Strategy::Heuristic);
        let phase = step_heuristic(&p, &bundle, 0.0, &cfg).unwrap();
        assert_eq!(phase.inner_loops, 2);
        assert!((phase.sigma_tilde - 3.0).abs() < 1e-12);
        assert!(phase.lambda_bar.unwrap() >= cfg.c);
        assert!(phase.step.is_some());
    }

    #[test]
    fn ratio_unit_cases() {
        // Actual equals predicted with sigma_tilde > 0.
        assert_eq!(acceptance_ratio(5.0, 4.0, 1.0, 2.0, 4.0, 1e-3), 1.0);
        // No decrease in the unregularized regime.
        assert_eq!(acceptance_ratio(5.0, 5.0, 1.0, 0.0, f64::NAN, 0.1), 0.0);
        // f_k = 5, f_bar = 4, |s| = 2, l = 0.1 -> 1 / 0.4 = 2.5.
        let rho = acceptance_ratio(5.0, 4.0, 2.0, 0.0, f64::NAN, 0.1);
        assert!((rho - 2.5).abs() < 1e-14);
        // Degenerate denominator.
        assert_eq!(
            acceptance_ratio(5.0, 4.0, 1.0, 2.0, 5.0, 1e-3),
            f64::NEG_INFINITY
        );
        assert_eq!(
            acceptance_ratio(5.0, 4.0, 0.0, 0.0, f64::NAN, 1e-3),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn sigma_update_unit_cases() {
        assert_eq!(sigma_update(Strategy::Simple, 0.0, 0.0, 0.3, 3.0), 1.0);
        assert_eq!(sigma_update(Strategy::Simple, 2.0, 2.0, 0.3, 3.0), 6.0);
        assert_eq!(sigma_update(Strategy::Heuristic, 0.0, 0.5, 10.0, 3.0), 10.0);
    }

    #[test]
    fn ledger_is_monotone_and_resets_after_success() {
        let p = problems::rosenbrock(2).unwrap();
        let x0 = dvec(&[-1.2, 1.0]);
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig::default().with_strategy(strategy);
            let res = run(&p, &x0, &cfg).unwrap();
            for w in res.ledger.windows(2) {
                assert!(w[1].f <= w[0].f + 1e-12, "monotonicity violated");
                if w[0].success {
                    assert_eq!(w[1].sigma, 0.0, "sigma not reset after success");
                }
            }
            // Strict decrease on successes, by at least the ratio guarantee.
            for w in res.ledger.windows(2) {
                if w[0].success {
                    let promised = if w[0].sigma_tilde == 0.0 {
                        cfg.eta * cfg.l * w[0].step_norm * w[0].step_norm
                    } else {
                        cfg.eta * (w[0].f - w[0].model_value.unwrap())
                    };
                    assert!(w[0].f - w[1].f >= promised - 1e-12);
                }
            }
        }
    }

    #[test]
    fn batch_structure_bounds_sigma_zero_failures() {
        let p = problems::rosenbrock(2).unwrap();
        for strategy in [Strategy::Simple, Strategy::Heuristic] {
            let cfg = AlmtonConfig::default().with_strategy(strategy);
            let res = run(&p, &dvec(&[-1.2, 1.0]), &cfg).unwrap();
            assert!(res.counts.unsuccessful_sigma0 <= res.counts.successful + 1);
            assert_eq!(
                res.counts.iterations,
                res.counts.successful
                    + res.counts.unsuccessful_sigma0
                    + res.counts.unsuccessful_sigmapos
            );
        }
    }

    #[test]
    fn curvature_calibrated_lower_bound_holds_on_traces() {
        // Whenever an unregularized accepted step has model curvature at
        // least c at the step and center curvature at least -c/2, the
        // recorded model decrease clears (c/6) |s|^2.
        let mut checked = 0;
        for problem in [problems::rosenbrock(2).unwrap(), problems::two_well()] {
            for strategy in [Strategy::Simple, Strategy::Heuristic] {
                let cfg = AlmtonConfig {
                    max_iter: 1500,
                    ..AlmtonConfig::default().with_strategy(strategy)
                };
                let res = run(&problem, &dvec(&[-1.2, 1.0]), &cfg).unwrap();
                for rec in &res.ledger {
                    let (Some(direct), Some(min_eig_step)) =
                        (rec.model_decrease_direct, rec.min_eig_model_step)
                    else {
                        continue;
                    };
                    if min_eig_step >= cfg.c && rec.min_eig_center >= -cfg.c / 2.0 {
                        let floor = cfg.c / 6.0 * rec.step_norm * rec.step_norm;
                        assert!(
                            direct >= floor - 1e-9,
                            "{}: decrease {direct} below calibrated floor {floor}",
                            problem.name()
                        );
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0, "no qualifying unregularized steps in the traces");
    }

    #[test]
    fn simple_strategy_solves_once_per_iteration() {
        let p = problems::rosenbrock(2).unwrap();
        let cfg = AlmtonConfig::default();
        let res = run(&p, &dvec(&[-1.2, 1.0]), &cfg).unwrap();
        assert_eq!(res.counts.sdp_solves, res.counts.iterations);
    }

    #[test]
    fn heuristic_phase_exits_satisfy_model_invariants() {
        let p = problems::rosenbrock(2).unwrap();
        let cfg = AlmtonConfig {
            max_iter: 1000,
            ..AlmtonConfig::default().with_strategy(Strategy::Heuristic)
        };
        let res = run(&p, &dvec(&[-1.2, 1.0]), &cfg).unwrap();
        assert_eq!(res.status, RunStatus::Converged);
        for rec in &res.ledger {
            if rec.step_norm == 0.0 {
                continue;
            }
            // (ii) curvature floor at the trial point
            assert!(rec.lambda_bar.unwrap() >= cfg.c - 1e-9);
            // (iii) model value does not exceed the objective value
            assert!(rec.model_value.unwrap() <= rec.f + 1e-9);
        }
        // (i) stationarity of the regularized model at accepted steps,
        // reconstructed from consecutive iterates.
        for w in res.ledger.windows(2) {
            if w[0].success {
                let s = &w[1].x - &w[0].x;
                let bundle = p.bundle(&w[0].x);
                let psi = CubicPoly::from_bundle(&bundle);
                let reg = psi.regularize(w[0].sigma_tilde).unwrap();
                assert!(reg.grad(&s).unwrap().norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_parameters() {
        let mut cfg = AlmtonConfig::default();
        cfg.l = cfg.c; // violates l <= c/6
        assert!(cfg.validate().is_err());
        let cfg = AlmtonConfig {
            eta: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = AlmtonConfig {
            gamma: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
