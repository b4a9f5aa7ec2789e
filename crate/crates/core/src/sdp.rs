//! Cubic minimization as a semidefinite program.
//!
//! A multivariate cubic has either no local minimizer, exactly one strict
//! local minimizer, or infinitely many non-strict ones. When the strict
//! minimizer exists it is recovered from the SDP
//!
//! ```text
//! inf   1/2 Tr(QX) + b'x + 1/2 y
//! s.t.  1/2 Tr(H_i X) + e_i'Qx + b_i = 0,   i = 1..n
//!       v = sum_i Tr(H_i X) e_i + Qx
//!       [ sum_i x_i H_i + Q   v ]            [ X   x ]
//!       [ v'                  y ]  psd,      [ x'  1 ]  psd
//! ```
//!
//! over `X` symmetric `n x n`, `x` in `R^n`, `y` scalar, and the auxiliary
//! vector `v`. The program is handed to an interior-point conic backend
//! behind the [`ConicBackend`] adapter; the extracted point is then Newton
//! polished and certified against the cubic's own KKT conditions.

use nalgebra::{DMatrix, DVector};

use crate::cubic::CubicPoly;
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Gradient-norm ceiling for certifying an extracted point as a minimizer.
const CERT_GRAD_TOL: f64 = 1e-6;
/// Relative strictness floor on the smallest Hessian eigenvalue; an extracted
/// stationary point whose curvature sits below the floor is classified as
/// "no strict local minimizer" (degenerate or non-strict case).
const STRICT_EIG_FLOOR: f64 = 1e-8;

/// Cone blocks understood by the backend, in constraint-row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    /// Equality rows (`A z = b`).
    Zero(usize),
    /// A `d x d` symmetric PSD block in scaled-triangle (svec) form.
    PsdTriangle(usize),
}

impl ConeBlock {
    pub fn rows(&self) -> usize {
        match *self {
            ConeBlock::Zero(m) => m,
            ConeBlock::PsdTriangle(d) => tri(d),
        }
    }
}

/// Assembled conic data: minimize `objective . z` subject to
/// `A z + s = rhs`, `s` in the product of `cones`.
///
/// Variable layout: `[svec(X) | x | y | v]`, which is
/// `n(n+1)/2 + n + 1 + n` scalars. Rows are the `2n` equalities
/// (stationarity then the definition of `v`) followed by the two PSD blocks.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    pub n: usize,
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Constraint matrix triplets `(row, col, value)`.
    pub a_triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub cones: Vec<ConeBlock>,
}

impl ConicProgram {
    pub fn num_rows(&self) -> usize {
        self.cones.iter().map(ConeBlock::rows).sum()
    }

    pub fn num_equalities(&self) -> usize {
        self.cones
            .iter()
            .filter_map(|c| match c {
                ConeBlock::Zero(m) => Some(*m),
                _ => None,
            })
            .sum()
    }

    pub fn psd_block_dims(&self) -> Vec<usize> {
        self.cones
            .iter()
            .filter_map(|c| match c {
                ConeBlock::PsdTriangle(d) => Some(*d),
                _ => None,
            })
            .collect()
    }

    /// Residuals of the stationarity rows at the rank-one substitution
    /// `X = x x'`; these equal the entries of the cubic's gradient at `x`.
    pub fn stationarity_residuals(&self, p: &CubicPoly, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let mut r = DVector::zeros(n);
        for i in 0..n {
            r[i] = 0.5 * p.cubic().slice(i).quadratic_form(x)?
                + p.quadratic().mul_vec(x)?[i]
                + p.linear()[i];
        }
        Ok(r)
    }
}

fn tri(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Index of entry `(r, c)` with `r <= c` in column-major upper-triangle svec.
fn svec_index(r: usize, c: usize) -> usize {
    tri(c) + r
}

fn svec_scale(r: usize, c: usize) -> f64 {
    if r == c {
        1.0
    } else {
        SQRT_2
    }
}

/// Encode the cubic-minimization SDP for `p`.
pub fn build_sdp(p: &CubicPoly) -> Result<ConicProgram> {
    if !p.is_finite() {
        return Err(Error::NonFinite("cubic polynomial data"));
    }
    let n = p.dim();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: "zero-dimensional cubic".into(),
        });
    }
    let nx = tri(n); // svec(X)
    let num_vars = nx + 2 * n + 1;
    let col_x = |r: usize, c: usize| svec_index(r, c);
    let col_xvec = |i: usize| nx + i;
    let col_y = nx + n;
    let col_v = |i: usize| nx + n + 1 + i;

    let q = p.quadratic();
    let b = p.linear();

    let mut objective = vec![0.0; num_vars];
    for c in 0..n {
        for r in 0..=c {
            objective[col_x(r, c)] = 0.5 * svec_scale(r, c) * q.get(r, c);
        }
    }
    for i in 0..n {
        objective[col_xvec(i)] = b[i];
    }
    objective[col_y] = 0.5;

    let mut a = Vec::new();
    let mut rhs = Vec::new();
    let mut row = 0;

    // Stationarity rows: 1/2 Tr(H_i X) + e_i'Qx = -b_i.
    for i in 0..n {
        let h_i = p.cubic().slice(i);
        for c in 0..n {
            for r in 0..=c {
                let coeff = 0.5 * svec_scale(r, c) * h_i.get(r, c);
                if coeff != 0.0 {
                    a.push((row, col_x(r, c), coeff));
                }
            }
            if q.get(i, c) != 0.0 {
                a.push((row, col_xvec(c), q.get(i, c)));
            }
        }
        rhs.push(-b[i]);
        row += 1;
    }

    // Definition of v: Tr(H_i X) + e_i'Qx - v_i = 0.
    for i in 0..n {
        let h_i = p.cubic().slice(i);
        for c in 0..n {
            for r in 0..=c {
                let coeff = svec_scale(r, c) * h_i.get(r, c);
                if coeff != 0.0 {
                    a.push((row, col_x(r, c), coeff));
                }
            }
            if q.get(i, c) != 0.0 {
                a.push((row, col_xvec(c), q.get(i, c)));
            }
        }
        a.push((row, col_v(i), -1.0));
        rhs.push(0.0);
        row += 1;
    }

    // Curvature block: [ sum_i x_i H_i + Q, v; v', y ] psd.
    // Slack rows satisfy s = rhs - A z = svec(block).
    for c in 0..=n {
        for r in 0..=c {
            let scale = svec_scale(r, c);
            if c < n {
                rhs.push(scale * q.get(r, c));
                for i in 0..n {
                    let hv = p.cubic().slice(i).get(r, c);
                    if hv != 0.0 {
                        a.push((row, col_xvec(i), -scale * hv));
                    }
                }
            } else if r < n {
                rhs.push(0.0);
                a.push((row, col_v(r), -scale));
            } else {
                rhs.push(0.0);
                a.push((row, col_y, -1.0));
            }
            row += 1;
        }
    }

    // Moment block: [ X, x; x', 1 ] psd.
    for c in 0..=n {
        for r in 0..=c {
            if c < n {
                rhs.push(0.0);
                a.push((row, col_x(r, c), -1.0));
            } else if r < n {
                rhs.push(0.0);
                a.push((row, col_xvec(r), -svec_scale(r, c)));
            } else {
                rhs.push(1.0);
            }
            row += 1;
        }
    }

    Ok(ConicProgram {
        n,
        num_vars,
        objective,
        a_triplets: a,
        rhs,
        cones: vec![
            ConeBlock::Zero(2 * n),
            ConeBlock::PsdTriangle(n + 1),
            ConeBlock::PsdTriangle(n + 1),
        ],
    })
}

/// Outcome classes reported by the backend adapter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendStatus {
    /// A solution meeting (possibly reduced) tolerances was returned.
    Optimal,
    /// Primal infeasibility certificate.
    Infeasible,
    /// Dual infeasibility certificate (primal unbounded).
    Unbounded,
    /// Ran but failed to meet tolerances (iteration cap, numerical trouble).
    Inaccurate,
    /// The backend itself faulted.
    Failed(String),
}

/// Raw backend answer: primal variable block plus residual diagnostics.
#[derive(Debug, Clone)]
pub struct BackendSolution {
    pub status: BackendStatus,
    pub primal: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Interior-point conic backend contract: equality rows plus PSD blocks in,
/// primal blocks and a status out.
pub trait ConicBackend {
    fn solve(&self, program: &ConicProgram, tol: f64) -> BackendSolution;
}

/// Default backend: the Clarabel interior-point solver.
#[derive(Debug, Clone, Default)]
pub struct ClarabelBackend;

impl ConicBackend for ClarabelBackend {
    fn solve(&self, program: &ConicProgram, tol: f64) -> BackendSolution {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        let nrows = program.num_rows();
        let ncols = program.num_vars;
        let (colptr, rowval, nzval) = triplets_to_csc(nrows, ncols, &program.a_triplets);
        let a = CscMatrix::new(nrows, ncols, colptr, rowval, nzval);
        let p = CscMatrix::zeros((ncols, ncols));

        let cones: Vec<SupportedConeT<f64>> = program
            .cones
            .iter()
            .map(|c| match *c {
                ConeBlock::Zero(m) => SupportedConeT::ZeroConeT(m),
                ConeBlock::PsdTriangle(d) => SupportedConeT::PSDTriangleConeT(d),
            })
            .collect();

        let settings = DefaultSettings {
            verbose: false,
            max_iter: 200,
            tol_gap_abs: tol,
            tol_gap_rel: tol,
            tol_feas: tol,
            ..DefaultSettings::default()
        };

        let mut solver =
            match DefaultSolver::new(&p, &program.objective, &a, &program.rhs, &cones, settings) {
                Ok(s) => s,
                Err(e) => {
                    return BackendSolution {
                        status: BackendStatus::Failed(format!("setup: {e:?}")),
                        primal: Vec::new(),
                        primal_residual: f64::INFINITY,
                        dual_residual: f64::INFINITY,
                    }
                }
            };
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => BackendStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                BackendStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                BackendStatus::Unbounded
            }
            SolverStatus::MaxIterations
            | SolverStatus::MaxTime
            | SolverStatus::NumericalError
            | SolverStatus::InsufficientProgress => BackendStatus::Inaccurate,
            SolverStatus::Unsolved | SolverStatus::CallbackTerminated => {
                BackendStatus::Failed(format!("{:?}", sol.status))
            }
        };
        BackendSolution {
            status,
            primal: sol.x.clone(),
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
        }
    }
}

fn triplets_to_csc(
    nrows: usize,
    ncols: usize,
    triplets: &[(usize, usize, f64)],
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    debug_assert!(triplets.iter().all(|&(r, c, _)| r < nrows && c < ncols));
    let mut sorted: Vec<_> = triplets.to_vec();
    sorted.sort_by_key(|t| (t.1, t.0));
    let mut colptr = vec![0usize; ncols + 1];
    let mut rowval = Vec::with_capacity(sorted.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut idx = 0;
    for (col, ptr) in colptr.iter_mut().enumerate().take(ncols) {
        *ptr = rowval.len();
        while idx < sorted.len() && sorted[idx].1 == col {
            let (r, _, mut v) = sorted[idx];
            idx += 1;
            while idx < sorted.len() && sorted[idx].1 == col && sorted[idx].0 == r {
                v += sorted[idx].2;
                idx += 1;
            }
            rowval.push(r);
            nzval.push(v);
        }
    }
    colptr[ncols] = rowval.len();
    (colptr, rowval, nzval)
}

/// Classification of a cubic subproblem solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    MinimizerFound,
    NoLocalMin,
    SolverFailure,
}

/// Result of one cubic subproblem solve with its KKT certificates.
#[derive(Debug, Clone)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    /// The certified strict local minimizer, present iff `MinimizerFound`.
    pub xbar: Option<DVector<f64>>,
    /// `|grad psi(xbar)|` at the extracted (polished) point.
    pub kkt_grad_norm: f64,
    /// `lambda_min(hess psi(xbar))` at the extracted point.
    pub kkt_min_eig: f64,
    /// Eigenvalue ratio `lambda_2 / lambda_1` of the moment block
    /// `[X x; x' 1]`; near zero when the relaxation is essentially rank one.
    pub rank_gap: f64,
}

impl SdpOutcome {
    fn failure() -> Self {
        Self {
            status: SdpStatus::SolverFailure,
            xbar: None,
            kkt_grad_norm: f64::INFINITY,
            kkt_min_eig: f64::NEG_INFINITY,
            rank_gap: f64::INFINITY,
        }
    }

    fn no_local_min() -> Self {
        Self {
            status: SdpStatus::NoLocalMin,
            xbar: None,
            kkt_grad_norm: f64::INFINITY,
            kkt_min_eig: f64::NEG_INFINITY,
            rank_gap: f64::INFINITY,
        }
    }
}

/// Newton cleanup on `grad psi = 0`: at most 20 iterations from `x0`, keeping
/// the input point whenever the iteration diverges or the Hessian solve fails.
pub fn polish(p: &CubicPoly, x0: &DVector<f64>) -> DVector<f64> {
    let target = 1e-10;
    let mut x = x0.clone();
    for _ in 0..20 {
        let g = match p.grad(&x) {
            Ok(g) => g,
            Err(_) => return x0.clone(),
        };
        if g.norm() <= target {
            return x;
        }
        let h = match p.hessian(&x) {
            Ok(h) => h,
            Err(_) => return x0.clone(),
        };
        let delta = match h.as_matrix().clone().lu().solve(&(-&g)) {
            Some(d) => d,
            None => return x0.clone(),
        };
        if !delta.iter().all(|v| v.is_finite()) {
            return x0.clone();
        }
        x += delta;
        if x.norm() > 1e8 {
            return x0.clone();
        }
    }
    match p.grad(&x) {
        Ok(g) if g.norm() <= target => x,
        _ => x0.clone(),
    }
}

/// Fixed-length Newton descent on the gradient, returning the best iterate by
/// gradient norm. Running a fixed number of steps (rather than exiting at a
/// tolerance) lets a flat direction contract geometrically toward zero
/// curvature, which is what separates a degenerate stationary point from a
/// strict minimizer during certification.
fn newton_deep(p: &CubicPoly, x0: &DVector<f64>, iters: usize) -> DVector<f64> {
    let mut x = x0.clone();
    let mut best = x.clone();
    let mut best_g = match p.grad(&x) {
        Ok(g) => g.norm(),
        Err(_) => return best,
    };
    for _ in 0..iters {
        let Ok(h) = p.hessian(&x) else { break };
        let Ok(g) = p.grad(&x) else { break };
        let Some(delta) = h.as_matrix().clone().lu().solve(&(-&g)) else {
            break;
        };
        if !delta.iter().all(|v| v.is_finite()) {
            break;
        }
        x += delta;
        if x.norm() > 1e8 {
            break;
        }
        match p.grad(&x) {
            Ok(g) => {
                let gn = g.norm();
                if gn <= best_g {
                    best_g = gn;
                    best = x.clone();
                }
            }
            Err(_) => break,
        }
    }
    best
}

/// Solve for the strict local minimizer of `p` with the default backend.
///
/// Backend infeasibility, unboundedness, and tolerance failures all map to
/// `NoLocalMin`: the caller treats them as "no acceptable local minimizer"
/// and escalates the regularization. `SolverFailure` is reserved for faults
/// in the backend itself.
pub fn solve_cubic(p: &CubicPoly, tol: f64) -> Result<SdpOutcome> {
    solve_cubic_with(&ClarabelBackend, p, tol)
}

/// Same as [`solve_cubic`] with an explicit backend.
pub fn solve_cubic_with(
    backend: &dyn ConicBackend,
    p: &CubicPoly,
    tol: f64,
) -> Result<SdpOutcome> {
    if !p.is_finite() {
        return Err(Error::NonFinite("cubic polynomial data"));
    }
    if !(1e-9..=1e-2).contains(&tol) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must lie in [1e-9, 1e-2], got {tol}"),
        });
    }
    let program = build_sdp(p)?;
    let sol = backend.solve(&program, tol);
    match sol.status {
        BackendStatus::Failed(msg) => {
            let _ = msg;
            Ok(SdpOutcome::failure())
        }
        BackendStatus::Infeasible | BackendStatus::Unbounded | BackendStatus::Inaccurate => {
            Ok(SdpOutcome::no_local_min())
        }
        BackendStatus::Optimal => Ok(extract_and_certify(p, &program, &sol.primal)),
    }
}

fn extract_and_certify(p: &CubicPoly, program: &ConicProgram, z: &[f64]) -> SdpOutcome {
    let n = program.n;
    let nx = tri(n);
    if z.len() < program.num_vars {
        return SdpOutcome::failure();
    }

    // Moment block [X x; x' 1] from the primal variables.
    let mut moment = DMatrix::zeros(n + 1, n + 1);
    for c in 0..n {
        for r in 0..=c {
            let v = z[svec_index(r, c)] / svec_scale(r, c);
            moment[(r, c)] = v;
            moment[(c, r)] = v;
        }
    }
    for i in 0..n {
        moment[(i, n)] = z[nx + i];
        moment[(n, i)] = z[nx + i];
    }
    moment[(n, n)] = 1.0;

    let eig = moment.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lam1 = eig.eigenvalues[order[0]];
    let lam2 = if n >= 1 { eig.eigenvalues[order[1]] } else { 0.0 };
    let rank_gap = if lam1.abs() > 0.0 { (lam2 / lam1).max(0.0) } else { f64::INFINITY };

    // Leading-eigenvector extraction, falling back to the x block when the
    // homogenizing coordinate is too small to normalize by.
    let w = eig.eigenvectors.column(order[0]);
    let x_raw = if w[n].abs() > 1e-6 {
        DVector::from_fn(n, |i, _| w[i] / w[n])
    } else {
        DVector::from_fn(n, |i, _| z[nx + i])
    };

    let xbar = newton_deep(p, &polish(p, &x_raw), 60);
    let (grad_norm, min_eig, hess_scale) = match (p.grad(&xbar), p.hessian(&xbar)) {
        (Ok(g), Ok(h)) => (
            g.norm(),
            h.min_eigenvalue().unwrap_or(f64::NEG_INFINITY),
            h.spectral_norm(),
        ),
        _ => return SdpOutcome::failure(),
    };

    let strict_floor = STRICT_EIG_FLOOR * hess_scale.max(1.0);
    if grad_norm <= CERT_GRAD_TOL && min_eig >= strict_floor {
        SdpOutcome {
            status: SdpStatus::MinimizerFound,
            xbar: Some(xbar),
            kkt_grad_norm: grad_norm,
            kkt_min_eig: min_eig,
            rank_gap,
        }
    } else {
        SdpOutcome {
            status: SdpStatus::NoLocalMin,
            xbar: None,
            kkt_grad_norm: grad_norm,
            kkt_min_eig: min_eig,
            rank_gap,
        }
    }
}
