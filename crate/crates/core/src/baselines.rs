//! Comparator optimizers sharing the run/ledger schema of the main solver:
//! fixed-step gradient descent, damped Newton, truncated Newton-CG, L-BFGS,
//! unregularized third-order Newton, and a cubic-regularized Newton method.

use nalgebra::DVector;

use crate::cubic::CubicPoly;
use crate::problems::Objective;
use crate::sdp::{self, SdpStatus};
use crate::solver::{IterationRecord, RunCounts, RunResult, RunStatus, SubsolverTag};
use crate::tensor::SymMatrix;
use crate::{Error, Result};

/// Shared configuration for the comparator methods. Fields irrelevant to a
/// given method are ignored by it.
#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Fixed step size for gradient descent.
    pub gd_alpha: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c1: f64,
    /// Backtracking contraction factor in (0, 1).
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Cap on CG iterations per Newton-CG step; defaults to `10 n`.
    pub cg_max: Option<usize>,
    /// Initial regularization for the cubic-regularized method.
    pub sigma0: f64,
    /// Growth/shrink factor for its regularization.
    pub sigma_growth: f64,
    /// Its acceptance threshold.
    pub accept_eta: f64,
    /// L-BFGS memory length.
    pub lbfgs_memory: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iter: 100,
            gd_alpha: 0.01,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 50,
            cg_max: None,
            sigma0: 1.0,
            sigma_growth: 2.0,
            accept_eta: 0.1,
            lbfgs_memory: 10,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gd_alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gd_alpha",
                reason: format!("must be > 0, got {}", self.gd_alpha),
            });
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter {
                name: "backtrack",
                reason: format!("must lie in (0, 1), got {}", self.backtrack),
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be > 0, got {}", self.epsilon),
            });
        }
        Ok(())
    }
}

fn record(
    k: usize,
    x: DVector<f64>,
    f: f64,
    grad_norm: f64,
    step_norm: f64,
    success: bool,
    inner_loops: usize,
) -> IterationRecord {
    IterationRecord {
        k,
        x,
        f,
        grad_norm,
        sigma: 0.0,
        sigma_tilde: 0.0,
        step_norm,
        lambda_bar: None,
        success,
        rho: f64::NAN,
        subsolver: SubsolverTag::NotInvoked,
        inner_loops,
        model_value: None,
        model_decrease_direct: None,
        model_decrease_identity: None,
        min_eig_model_step: None,
        min_eig_center: f64::NAN,
    }
}

fn finish(
    status: RunStatus,
    x: DVector<f64>,
    f: f64,
    grad_norm: f64,
    mut counts: RunCounts,
    ledger: Vec<IterationRecord>,
) -> RunResult {
    counts.iterations = ledger.len();
    RunResult {
        status,
        x,
        f,
        grad_norm,
        counts,
        ledger,
    }
}

/// Armijo backtracking along `d`. Returns `(t, x_new, f_new)` or `None` when
/// the budget is exhausted without sufficient decrease.
fn armijo(
    obj: &dyn Objective,
    x: &DVector<f64>,
    f0: f64,
    slope: f64,
    d: &DVector<f64>,
    cfg: &BaselineConfig,
    f_evals: &mut usize,
) -> Option<(f64, DVector<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..=cfg.max_backtracks {
        let cand = x + d * t;
        let f_new = obj.value(&cand);
        *f_evals += 1;
        if f_new.is_finite() && f_new <= f0 + cfg.armijo_c1 * t * slope {
            return Some((t, cand, f_new));
        }
        t *= cfg.backtrack;
    }
    None
}

/// Fixed-step gradient descent: `x <- x - alpha g`.
pub fn gradient_descent(
    obj: &dyn Objective,
    x0: &DVector<f64>,
    cfg: &BaselineConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
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
        let step = -&bundle.g * cfg.gd_alpha;
        ledger.push(record(
            ledger.len(),
            x.clone(),
            bundle.f,
            grad_norm,
            step.norm(),
            true,
            0,
        ));
        x += step;
        bundle = obj.bundle(&x);
        counts.derivative_evals += 1;
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}

/// Newton direction with a spectral-shift fallback when the Hessian solve
/// fails or does not produce a descent direction. Returns the direction and
/// the number of fallback escalations.
fn damped_newton_direction(h: &SymMatrix, g: &DVector<f64>) -> Result<(DVector<f64>, usize)> {
    let descent = |d: &DVector<f64>| d.dot(g) < -1e-12 * d.norm() * g.norm();
    if let Some(d) = h.as_matrix().clone().lu().solve(&(-g)) {
        if d.iter().all(|v| v.is_finite()) && descent(&d) {
            return Ok((d, 0));
        }
    }
    let min_eig = h.min_eigenvalue()?;
    let mut lam = (1.1 * (-min_eig).max(0.0)).max(1e-6);
    for fallback in 1..=20 {
        if let Some(d) = h.shifted(lam).as_matrix().clone().lu().solve(&(-g)) {
            if d.iter().all(|v| v.is_finite()) && descent(&d) {
                return Ok((d, fallback));
            }
        }
        lam *= 10.0;
    }
    Ok((-g.clone(), 21))
}

/// Damped Newton: Hessian solve with shift fallback, Armijo backtracking.
pub fn damped_newton(
    obj: &dyn Objective,
    x0: &DVector<f64>,
    cfg: &BaselineConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
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
        let (d, fallbacks) = damped_newton_direction(&bundle.h, &bundle.g)?;
        let slope = d.dot(&bundle.g);
        let Some((_, x_new, _)) = armijo(obj, &x, bundle.f, slope, &d, cfg, &mut counts.f_evals)
        else {
            break RunStatus::MaxIterationsExceeded;
        };
        ledger.push(record(
            ledger.len(),
            x.clone(),
            bundle.f,
            grad_norm,
            (&x_new - &x).norm(),
            true,
            fallbacks,
        ));
        x = x_new;
        bundle = obj.bundle(&x);
        counts.derivative_evals += 1;
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}

/// Truncated conjugate-gradient solve of `H d = -g` with a negative-curvature
/// exit; the first-iteration exit returns the steepest-descent direction.
pub fn cg_direction(h: &SymMatrix, g: &DVector<f64>, max_cg: usize) -> Result<DVector<f64>> {
    let n = g.len();
    let gnorm = g.norm();
    let tol = gnorm * gnorm.sqrt().min(0.5);
    let mut d = DVector::zeros(n);
    let mut r = g.clone();
    let mut p = -g.clone();
    let mut rr = r.norm_squared();
    for j in 0..max_cg {
        let hp = h.mul_vec(&p)?;
        let curv = p.dot(&hp);
        if curv <= 1e-12 * p.norm_squared() {
            if j == 0 {
                return Ok(-g.clone());
            }
            break;
        }
        let alpha = rr / curv;
        d += &p * alpha;
        r += hp * alpha;
        let rr_new = r.norm_squared();
        if rr_new.sqrt() <= tol {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        p = -&r + &p * beta;
    }
    if d.norm() == 0.0 {
        Ok(-g.clone())
    } else {
        Ok(d)
    }
}

/// Newton-CG: truncated CG directions with Armijo backtracking.
pub fn newton_cg(obj: &dyn Objective, x0: &DVector<f64>, cfg: &BaselineConfig) -> Result<RunResult> {
    cfg.validate()?;
    let max_cg = cfg.cg_max.unwrap_or(10 * obj.dim());
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
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
        let d = cg_direction(&bundle.h, &bundle.g, max_cg)?;
        let slope = d.dot(&bundle.g);
        let Some((_, x_new, _)) = armijo(obj, &x, bundle.f, slope, &d, cfg, &mut counts.f_evals)
        else {
            break RunStatus::MaxIterationsExceeded;
        };
        ledger.push(record(
            ledger.len(),
            x.clone(),
            bundle.f,
            grad_norm,
            (&x_new - &x).norm(),
            true,
            0,
        ));
        x = x_new;
        bundle = obj.bundle(&x);
        counts.derivative_evals += 1;
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}

/// Unregularized third-order Newton: each iterate jumps to the strict local
/// minimizer of the cubic Taylor model, with no globalization. Terminates
/// with `SdpFail` the first time the model has no such minimizer.
pub fn unregularized_third_order(
    obj: &dyn Objective,
    x0: &DVector<f64>,
    cfg: &BaselineConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
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
        let tol = if grad_norm > 1e-3 { 1e-3 } else { 1e-6 };
        let out = sdp::solve_cubic(&psi, tol)?;
        counts.sdp_solves += 1;
        match out.status {
            SdpStatus::MinimizerFound => {
                let s = out.xbar.expect("minimizer present");
                let mut rec = record(
                    ledger.len(),
                    x.clone(),
                    bundle.f,
                    grad_norm,
                    s.norm(),
                    true,
                    0,
                );
                rec.subsolver = SubsolverTag::Found;
                ledger.push(rec);
                x += s;
                bundle = obj.bundle(&x);
                counts.derivative_evals += 1;
            }
            SdpStatus::NoLocalMin => {
                let mut rec = record(ledger.len(), x.clone(), bundle.f, grad_norm, 0.0, false, 0);
                rec.subsolver = SubsolverTag::NoLocalMin;
                ledger.push(rec);
                break RunStatus::SdpFail;
            }
            SdpStatus::SolverFailure => {
                let mut rec = record(ledger.len(), x.clone(), bundle.f, grad_norm, 0.0, false, 0);
                rec.subsolver = SubsolverTag::Failure;
                ledger.push(rec);
                break RunStatus::SubsolverError;
            }
        }
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}

/// Global minimizer of `g's + 1/2 s'Hs + (sigma/3) |s|^3` through the shifted
/// eigensystem: the minimizer satisfies `(H + lam I) s = -g` with
/// `lam = sigma |s|`, a one-dimensional secular equation in `lam`.
pub fn cubic_reg_step(h: &SymMatrix, g: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be > 0, got {sigma}"),
        });
    }
    let n = g.len();
    let eig = h.as_matrix().clone().symmetric_eigen();
    let d = eig.eigenvalues.clone();
    let ghat = eig.eigenvectors.transpose() * g;
    let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let lam_low = (-d_min).max(0.0);

    let step_hat = |lam: f64| -> DVector<f64> {
        DVector::from_fn(n, |i, _| {
            let denom = d[i] + lam;
            if denom.abs() > 1e-14 {
                -ghat[i] / denom
            } else {
                0.0
            }
        })
    };
    let phi = |lam: f64| sigma * step_hat(lam).norm() - lam;

    let mut lo = lam_low + 1e-12 * (1.0 + lam_low);
    let lam = if phi(lo) <= 0.0 {
        if lam_low <= 0.0 {
            // Positive semidefinite Hessian with a negligible step: Newton-like.
            0.0
        } else {
            // Hard case: the gradient is orthogonal to the bottom eigenspace.
            // Complete the boundary step along the bottom eigenvector.
            let s0 = step_hat(lam_low + 1e-12);
            let target = lam_low / sigma;
            let tau_sq = (target * target - s0.norm_squared()).max(0.0);
            let idx = (0..n)
                .min_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap())
                .expect("nonempty");
            let mut s = s0;
            s[idx] += tau_sq.sqrt();
            return Ok(&eig.eigenvectors * s);
        }
    } else {
        let mut hi = (lam_low + 1.0).max(2.0 * lam_low);
        while phi(hi) > 0.0 && hi < 1e16 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-14 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(&eig.eigenvectors * step_hat(lam))
}

/// Cubic-regularized Newton: second-order model plus `(sigma/3) |s|^3`,
/// ratio-tested steps, multiplicative regularization adaptation. A simplified
/// comparator standing in for interpolation-based adaptive-regularization
/// implementations.
pub fn cubic_regularized_newton(
    obj: &dyn Objective,
    x0: &DVector<f64>,
    cfg: &BaselineConfig,
) -> Result<RunResult> {
    cfg.validate()?;
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
    let mut sigma = cfg.sigma0;
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
        let s = cubic_reg_step(&bundle.h, &bundle.g, sigma)?;
        let model_dec = -(bundle.g.dot(&s)
            + 0.5 * bundle.h.quadratic_form(&s)?
            + sigma / 3.0 * s.norm().powi(3));
        let f_new = obj.value(&(&x + &s));
        counts.f_evals += 1;
        // Once the predicted decrease reaches rounding level the ratio is
        // meaningless; take any non-increasing step instead of rejecting
        // forever.
        let noise = 1e-14 * (1.0 + bundle.f.abs());
        let rho = if model_dec > noise {
            (bundle.f - f_new) / model_dec
        } else if f_new <= bundle.f {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        let success = rho >= cfg.accept_eta;
        let mut rec = record(
            ledger.len(),
            x.clone(),
            bundle.f,
            grad_norm,
            if success { s.norm() } else { 0.0 },
            success,
            0,
        );
        rec.rho = rho;
        rec.sigma = sigma;
        rec.sigma_tilde = sigma;
        ledger.push(rec);
        if success {
            counts.successful += 1;
            x += &s;
            bundle = obj.bundle(&x);
            counts.derivative_evals += 1;
            sigma = (sigma / cfg.sigma_growth).max(1e-8);
        } else {
            counts.unsuccessful_sigmapos += 1;
            sigma *= cfg.sigma_growth;
            if sigma > 1e14 {
                break RunStatus::SigmaExceeded;
            }
        }
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}

/// L-BFGS with the textbook two-loop recursion, scaling `gamma = s'y / y'y`,
/// and Armijo backtracking.
pub fn lbfgs(obj: &dyn Objective, x0: &DVector<f64>, cfg: &BaselineConfig) -> Result<RunResult> {
    cfg.validate()?;
    let m = cfg.lbfgs_memory.max(1);
    let mut counts = RunCounts::default();
    let mut ledger = Vec::new();
    let mut x = x0.clone();
    let mut bundle = obj.bundle(&x);
    counts.derivative_evals += 1;
    let mut pairs: Vec<(DVector<f64>, DVector<f64>, f64)> = Vec::new(); // (s, y, 1/s'y)

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

        // Two-loop recursion.
        let mut q = bundle.g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q -= y * a;
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.last() {
            q *= s.dot(y) / y.dot(y);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q += s * (a - b);
        }
        let mut d = -q;
        let mut slope = d.dot(&bundle.g);
        if !(slope < 0.0) {
            pairs.clear();
            d = -bundle.g.clone();
            slope = d.dot(&bundle.g);
        }

        let Some((_, x_new, _)) = armijo(obj, &x, bundle.f, slope, &d, cfg, &mut counts.f_evals)
        else {
            break RunStatus::MaxIterationsExceeded;
        };
        let bundle_new = obj.bundle(&x_new);
        counts.derivative_evals += 1;
        let s = &x_new - &x;
        let y = &bundle_new.g - &bundle.g;
        let sy = s.dot(&y);
        if sy > 1e-10 * s.norm() * y.norm() {
            if pairs.len() == m {
                pairs.remove(0);
            }
            pairs.push((s.clone(), y, 1.0 / sy));
        }
        ledger.push(record(
            ledger.len(),
            x.clone(),
            bundle.f,
            grad_norm,
            s.norm(),
            true,
            0,
        ));
        x = x_new;
        bundle = bundle_new;
    };
    let (f, g) = (bundle.f, bundle.g.norm());
    Ok(finish(status, x, f, g, counts, ledger))
}
