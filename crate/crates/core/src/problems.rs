//! Test problems with analytic derivatives through order three.
//!
//! Every problem carries a rectangular domain box for grid experiments, the
//! list of its known local minimizers, and a finite lower bound on the
//! objective. Problems whose derivatives come from finite differences are
//! flagged as approximate in their metadata.

use std::sync::Arc;

use nalgebra::DVector;

use crate::tensor::{DerivativeBundle, SymMatrix, ThirdTensor};
use crate::{Error, Result};

/// A smooth objective with derivatives through order three.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle;
    /// Hessian only; the default goes through the full bundle.
    fn hessian(&self, x: &DVector<f64>) -> SymMatrix {
        self.bundle(x).h
    }
}

/// A named objective plus the metadata the harness needs: domain box, known
/// minimizers, lower bound, and whether derivatives are exact or differenced.
#[derive(Clone)]
pub struct Problem {
    name: String,
    objective: Arc<dyn Objective>,
    domain: Vec<(f64, f64)>,
    minimizers: Vec<DVector<f64>>,
    f_low: f64,
    approx_derivatives: bool,
    standard_start: Option<DVector<f64>>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("f_low", &self.f_low)
            .field("approx_derivatives", &self.approx_derivatives)
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        objective: Arc<dyn Objective>,
        domain: Vec<(f64, f64)>,
        minimizers: Vec<DVector<f64>>,
        f_low: f64,
    ) -> Result<Self> {
        let name = name.into();
        if domain.len() != objective.dim() {
            return Err(Error::DimensionMismatch {
                expected: objective.dim(),
                got: domain.len(),
            });
        }
        if domain.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidParameter {
                name: "domain",
                reason: format!("degenerate box for problem `{name}`"),
            });
        }
        Ok(Self {
            name,
            objective,
            domain,
            minimizers,
            f_low,
            approx_derivatives: false,
            standard_start: None,
        })
    }

    pub fn with_standard_start(mut self, x0: DVector<f64>) -> Self {
        self.standard_start = Some(x0);
        self
    }

    fn mark_approximate(mut self) -> Self {
        self.approx_derivatives = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn known_minimizers(&self) -> &[DVector<f64>] {
        &self.minimizers
    }

    pub fn f_low(&self) -> f64 {
        self.f_low
    }

    pub fn has_approx_derivatives(&self) -> bool {
        self.approx_derivatives
    }

    /// Conventional starting point for stress runs, when one exists.
    pub fn standard_start(&self) -> Option<&DVector<f64>> {
        self.standard_start.as_ref()
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    /// Uniform sample from the interior of the domain box.
    pub fn sample_interior(&self, unit: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            let (lo, hi) = self.domain[i];
            let pad = 0.05 * (hi - lo);
            lo + pad + unit[i].clamp(0.0, 1.0) * (hi - lo - 2.0 * pad)
        })
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.objective.value(x)
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        self.objective.bundle(x)
    }

    fn hessian(&self, x: &DVector<f64>) -> SymMatrix {
        self.objective.hessian(x)
    }
}

/// Newton refinement of a seed against the analytic gradient; used to pin
/// listed minimizers to machine precision.
fn refine_minimizer(obj: &dyn Objective, seed: &[f64]) -> DVector<f64> {
    let mut x = DVector::from_column_slice(seed);
    for _ in 0..50 {
        let b = obj.bundle(&x);
        if b.g.norm() <= 1e-13 {
            break;
        }
        match b.h.as_matrix().clone().lu().solve(&(-&b.g)) {
            Some(d) if d.iter().all(|v| v.is_finite()) => x += d,
            _ => break,
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Generalized Rosenbrock
// ---------------------------------------------------------------------------

struct Rosenbrock {
    n: usize,
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut f = 0.0;
        for i in 0..self.n - 1 {
            f += 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2);
        }
        f
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        let n = self.n;
        let mut g = DVector::zeros(n);
        for j in 0..n {
            if j < n - 1 {
                g[j] += -400.0 * x[j] * (x[j + 1] - x[j] * x[j]) - 2.0 * (1.0 - x[j]);
            }
            if j > 0 {
                g[j] += 200.0 * (x[j] - x[j - 1] * x[j - 1]);
            }
        }
        let h = SymMatrix::from_fn(n, |i, j| {
            if i == j {
                let mut v = 0.0;
                if j < n - 1 {
                    v += 1200.0 * x[j] * x[j] - 400.0 * x[j + 1] + 2.0;
                }
                if j > 0 {
                    v += 200.0;
                }
                v
            } else if j == i + 1 {
                -400.0 * x[i]
            } else {
                0.0
            }
        });
        let t = ThirdTensor::from_fn(n, |a, b, c| {
            if a == b && b == c && a < n - 1 {
                2400.0 * x[a]
            } else if a == b && c == a + 1 && a < n - 1 {
                -400.0
            } else {
                0.0
            }
        });
        DerivativeBundle::new(x.clone(), self.value(x), g, h, t).expect("consistent dims")
    }
}

/// Generalized Rosenbrock in dimension `n >= 2`, with the conventional stress
/// start `(-1, ..., -1)`.
pub fn rosenbrock(n: usize) -> Result<Problem> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("rosenbrock needs n >= 2, got {n}"),
        });
    }
    let p = Problem::new(
        format!("rosenbrock{n}"),
        Arc::new(Rosenbrock { n }),
        vec![(-2.0, 2.0); n],
        vec![DVector::from_element(n, 1.0)],
        0.0,
    )?;
    Ok(p.with_standard_start(DVector::from_element(n, -1.0)))
}

// ---------------------------------------------------------------------------
// Classic 2-D suite
// ---------------------------------------------------------------------------

/// A 2-D objective specified by analytic closures.
struct Analytic2d {
    f: fn(f64, f64) -> f64,
    g: fn(f64, f64) -> [f64; 2],
    h: fn(f64, f64) -> [f64; 3],
    /// `[T_xxx, T_xxy, T_xyy, T_yyy]`
    t: fn(f64, f64) -> [f64; 4],
}

impl Objective for Analytic2d {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x[0], x[1])
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        let (a, b) = (x[0], x[1]);
        let g = (self.g)(a, b);
        let h = (self.h)(a, b);
        let t = (self.t)(a, b);
        let hm = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => h[0],
            (0, 1) => h[1],
            (1, 1) => h[2],
            _ => unreachable!(),
        });
        let tm = ThirdTensor::from_fn(2, |i, j, k| match (i, j, k) {
            (0, 0, 0) => t[0],
            (0, 0, 1) => t[1],
            (0, 1, 1) => t[2],
            (1, 1, 1) => t[3],
            _ => unreachable!(),
        });
        DerivativeBundle::new(
            x.clone(),
            (self.f)(a, b),
            DVector::from_column_slice(&g),
            hm,
            tm,
        )
        .expect("consistent dims")
    }
}

fn analytic_problem(
    name: &str,
    obj: Analytic2d,
    domain: [(f64, f64); 2],
    minimizer_seeds: &[[f64; 2]],
    f_low: f64,
) -> Problem {
    let obj = Arc::new(obj);
    let minimizers = minimizer_seeds
        .iter()
        .map(|s| refine_minimizer(obj.as_ref(), s))
        .collect();
    Problem::new(name, obj, domain.to_vec(), minimizers, f_low).expect("valid problem data")
}

/// Himmelblau: four global minima with value zero.
pub fn himmelblau() -> Problem {
    analytic_problem(
        "himmelblau",
        Analytic2d {
            f: |x, y| (x * x + y - 11.0).powi(2) + (x + y * y - 7.0).powi(2),
            g: |x, y| {
                let (u, v) = (x * x + y - 11.0, x + y * y - 7.0);
                [4.0 * x * u + 2.0 * v, 2.0 * u + 4.0 * y * v]
            },
            h: |x, y| {
                [
                    12.0 * x * x + 4.0 * y - 42.0,
                    4.0 * x + 4.0 * y,
                    12.0 * y * y + 4.0 * x - 26.0,
                ]
            },
            t: |x, y| [24.0 * x, 4.0, 4.0, 24.0 * y],
        },
        [(-5.0, 5.0), (-5.0, 5.0)],
        &[
            [3.0, 2.0],
            [-2.805118, 3.131312],
            [-3.779310, -3.283186],
            [3.584428, -1.848127],
        ],
        0.0,
    )
}

/// Three-hump camel: global minimum at the origin plus two shallow side wells.
pub fn three_hump_camel() -> Problem {
    analytic_problem(
        "three-hump-camel",
        Analytic2d {
            f: |x, y| 2.0 * x * x - 1.05 * x.powi(4) + x.powi(6) / 6.0 + x * y + y * y,
            g: |x, y| {
                [
                    4.0 * x - 4.2 * x.powi(3) + x.powi(5) + y,
                    x + 2.0 * y,
                ]
            },
            h: |x, _| [4.0 - 12.6 * x * x + 5.0 * x.powi(4), 1.0, 2.0],
            t: |x, _| [-25.2 * x + 20.0 * x.powi(3), 0.0, 0.0, 0.0],
        },
        [(-2.0, 2.0), (-2.0, 2.0)],
        &[
            [0.0, 0.0],
            [1.74755, -0.873776],
            [-1.74755, 0.873776],
        ],
        0.0,
    )
}

/// Styblinski-Tang restricted to two dimensions; separable quartic with four
/// local minima.
pub fn styblinski_tang2() -> Problem {
    const R_LO: f64 = -2.9035340;
    const R_HI: f64 = 2.7468027;
    analytic_problem(
        "styblinski-tang2",
        Analytic2d {
            f: |x, y| {
                0.5 * (x.powi(4) - 16.0 * x * x + 5.0 * x + y.powi(4) - 16.0 * y * y + 5.0 * y)
            },
            g: |x, y| {
                [
                    2.0 * x.powi(3) - 16.0 * x + 2.5,
                    2.0 * y.powi(3) - 16.0 * y + 2.5,
                ]
            },
            h: |x, y| [6.0 * x * x - 16.0, 0.0, 6.0 * y * y - 16.0],
            t: |x, y| [12.0 * x, 0.0, 0.0, 12.0 * y],
        },
        [(-5.0, 5.0), (-5.0, 5.0)],
        &[
            [R_LO, R_LO],
            [R_LO, R_HI],
            [R_HI, R_LO],
            [R_HI, R_HI],
        ],
        -78.34,
    )
}

/// Symmetric quartic double well `(x^2 - 1)^2 + y^2`: two minima separated by
/// a saddle at the origin.
pub fn two_well() -> Problem {
    analytic_problem(
        "two-well",
        Analytic2d {
            f: |x, y| (x * x - 1.0).powi(2) + y * y,
            g: |x, y| [4.0 * x * (x * x - 1.0), 2.0 * y],
            h: |x, _| [12.0 * x * x - 4.0, 0.0, 2.0],
            t: |x, _| [24.0 * x, 0.0, 0.0, 0.0],
        },
        [(-2.0, 2.0), (-2.0, 2.0)],
        &[[1.0, 0.0], [-1.0, 0.0]],
        0.0,
    )
}

/// Four documented 2-D nonconvex functions with multiple stationary points:
/// Himmelblau, three-hump camel, 2-D Styblinski-Tang, and a quartic two-well.
pub fn classic_2d_suite() -> Vec<Problem> {
    vec![himmelblau(), three_hump_camel(), styblinski_tang2(), two_well()]
}

// ---------------------------------------------------------------------------
// Hairpin barrier and surrogate
// ---------------------------------------------------------------------------

/// One-sided quartic barrier: `(x - xmin)^4` below the window, zero inside,
/// `(x - xmax)^4` above. Quartic walls make it three-times continuously
/// differentiable at the knots.
///
/// Returns `(value, d1, d2, d3)`.
pub fn hairpin_barrier(x: f64, xmin: f64, xmax: f64) -> Result<(f64, f64, f64, f64)> {
    if !(xmin < xmax) {
        return Err(Error::InvalidParameter {
            name: "xmin/xmax",
            reason: format!("need xmin < xmax, got [{xmin}, {xmax}]"),
        });
    }
    let d = if x <= xmin {
        x - xmin
    } else if x >= xmax {
        x - xmax
    } else {
        return Ok((0.0, 0.0, 0.0, 0.0));
    };
    Ok((d.powi(4), 4.0 * d.powi(3), 12.0 * d * d, 24.0 * d))
}

/// Value/derivative stack for `tanh(b (y - y0))` up to order three.
fn tanh_stack(b: f64, y0: f64, y: f64) -> (f64, f64, f64, f64) {
    let u = (b * (y - y0)).tanh();
    let sech2 = 1.0 - u * u;
    let d1 = b * sech2;
    let d2 = -2.0 * b * b * u * sech2;
    let d3 = b * b * b * sech2 * (6.0 * u * u - 2.0);
    (u, d1, d2, d3)
}

struct HairpinSurrogate;

impl HairpinSurrogate {
    const W: f64 = 2.0;
    const AMP: f64 = 0.35;
    const SHARP: f64 = 2.5;
    const BEND_Y: f64 = 2.5;
    const SLOPE: f64 = 3e-4;
    const WALL: f64 = 50.0;
    const X_WIN: (f64, f64) = (-0.4, 0.5);
    const Y_WIN: (f64, f64) = (0.0, 5.0);
}

impl Objective for HairpinSurrogate {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let (p, _, _, _) = tanh_stack(Self::SHARP, Self::BEND_Y, x[1]);
        let d = x[0] - Self::AMP * p;
        let bx = hairpin_barrier(x[0], Self::X_WIN.0, Self::X_WIN.1).unwrap().0;
        let by = hairpin_barrier(x[1], Self::Y_WIN.0, Self::Y_WIN.1).unwrap().0;
        Self::W * d * d + Self::SLOPE * x[1] + Self::WALL * (bx + by)
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        let w = Self::W;
        let (p0, p1, p2, p3) = {
            let (u, d1, d2, d3) = tanh_stack(Self::SHARP, Self::BEND_Y, x[1]);
            (
                Self::AMP * u,
                Self::AMP * d1,
                Self::AMP * d2,
                Self::AMP * d3,
            )
        };
        let d = x[0] - p0;
        let (bx, bx1, bx2, bx3) = hairpin_barrier(x[0], Self::X_WIN.0, Self::X_WIN.1).unwrap();
        let (by, by1, by2, by3) = hairpin_barrier(x[1], Self::Y_WIN.0, Self::Y_WIN.1).unwrap();

        let f = w * d * d + Self::SLOPE * x[1] + Self::WALL * (bx + by);
        let g = DVector::from_column_slice(&[
            2.0 * w * d + Self::WALL * bx1,
            -2.0 * w * d * p1 + Self::SLOPE + Self::WALL * by1,
        ]);
        let h = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => 2.0 * w + Self::WALL * bx2,
            (0, 1) => -2.0 * w * p1,
            (1, 1) => 2.0 * w * p1 * p1 - 2.0 * w * d * p2 + Self::WALL * by2,
            _ => unreachable!(),
        });
        let t = ThirdTensor::from_fn(2, |a, b, c| match (a, b, c) {
            (0, 0, 0) => Self::WALL * bx3,
            (0, 0, 1) => 0.0,
            (0, 1, 1) => -2.0 * w * p2,
            (1, 1, 1) => 6.0 * w * p1 * p2 - 2.0 * w * d * p3 + Self::WALL * by3,
            _ => unreachable!(),
        });
        DerivativeBundle::new(x.clone(), f, g, h, t).expect("consistent dims")
    }
}

/// Surrogate for a hairpin-turn landscape: a quadratic valley whose floor
/// swings sharply to the other side of the box partway up, quartic walls, and
/// a tiny slope that pins a unique minimizer near the low end of the turn.
///
/// The geometry is qualitative: a sharp C^3 bend between barrier walls. It is
/// not a reconstruction of any externally defined hairpin objective.
pub fn hairpin_surrogate() -> Problem {
    let obj = Arc::new(HairpinSurrogate);
    let minimizer = refine_minimizer(obj.as_ref(), &[-0.349, -0.011]);
    Problem::new(
        "hairpin",
        obj,
        vec![(-0.6, 0.7), (-1.0, 6.0)],
        vec![minimizer],
        -0.01,
    )
    .expect("valid problem data")
    .with_standard_start(DVector::from_column_slice(&[0.4, 4.5]))
}

// ---------------------------------------------------------------------------
// Finite-difference wrapper
// ---------------------------------------------------------------------------

type ScalarEvaluator = Box<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

struct FdObjective {
    f: ScalarEvaluator,
    n: usize,
    h_grad: f64,
    h_tensor: f64,
}

impl FdObjective {
    fn eval(&self, x: &DVector<f64>, deltas: &[(usize, f64)]) -> f64 {
        let mut p = x.clone();
        for &(i, d) in deltas {
            p[i] += d;
        }
        (self.f)(&p)
    }
}

impl Objective for FdObjective {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        let n = self.n;
        let h = self.h_grad;
        let ht = self.h_tensor;
        let f0 = (self.f)(x);

        let g = DVector::from_fn(n, |i, _| {
            (self.eval(x, &[(i, h)]) - self.eval(x, &[(i, -h)])) / (2.0 * h)
        });

        let hess = SymMatrix::from_fn(n, |i, j| {
            if i == j {
                (self.eval(x, &[(i, h)]) - 2.0 * f0 + self.eval(x, &[(i, -h)])) / (h * h)
            } else {
                (self.eval(x, &[(i, h), (j, h)]) - self.eval(x, &[(i, h), (j, -h)])
                    - self.eval(x, &[(i, -h), (j, h)])
                    + self.eval(x, &[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            }
        });

        let signs = [-1.0, 1.0];
        let t = ThirdTensor::from_fn(n, |a, b, c| {
            let mut acc = 0.0;
            for &s1 in &signs {
                for &s2 in &signs {
                    for &s3 in &signs {
                        let mut p = x.clone();
                        p[a] += s1 * ht;
                        p[b] += s2 * ht;
                        p[c] += s3 * ht;
                        acc += s1 * s2 * s3 * (self.f)(&p);
                    }
                }
            }
            acc / (8.0 * ht * ht * ht)
        });

        DerivativeBundle::new(x.clone(), f0, g, hess, t).expect("consistent dims")
    }
}

/// Wrap a scalar evaluator into a Problem whose derivatives are central
/// differences (step 1e-5 for the gradient and Hessian, 1e-4 for the tensor).
/// The result is marked approximate in its metadata.
pub fn fd_problem_wrapper(
    name: impl Into<String>,
    f: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    n: usize,
    domain: Vec<(f64, f64)>,
) -> Result<Problem> {
    let obj = Arc::new(FdObjective {
        f: Box::new(f),
        n,
        h_grad: 1e-5,
        h_tensor: 1e-4,
    });
    Ok(Problem::new(name, obj, domain, Vec::new(), f64::NEG_INFINITY)?.mark_approximate())
}

// ---------------------------------------------------------------------------
// Quadratic helper and registry
// ---------------------------------------------------------------------------

struct Quadratic {
    a: SymMatrix,
    b: DVector<f64>,
    c: f64,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * self.a.quadratic_form(x).unwrap() + self.b.dot(x) + self.c
    }

    fn bundle(&self, x: &DVector<f64>) -> DerivativeBundle {
        let g = self.a.mul_vec(x).unwrap() + &self.b;
        DerivativeBundle::new(
            x.clone(),
            self.value(x),
            g,
            self.a.clone(),
            ThirdTensor::zeros(self.b.len()),
        )
        .expect("consistent dims")
    }
}

/// Quadratic `1/2 x'Ax + b'x + c` as a Problem; useful for exactness tests.
/// When `A` is positive definite the unique minimizer is recorded.
pub fn quadratic(name: impl Into<String>, a: SymMatrix, b: DVector<f64>, c: f64) -> Result<Problem> {
    let n = b.len();
    let minimizers = a
        .as_matrix()
        .clone()
        .cholesky()
        .map(|ch| vec![ch.solve(&(-&b))])
        .unwrap_or_default();
    let f_low = minimizers
        .first()
        .map(|m| 0.5 * a.quadratic_form(m).unwrap() + b.dot(m) + c)
        .unwrap_or(f64::NEG_INFINITY);
    Problem::new(name, Arc::new(Quadratic { a, b, c }), vec![(-10.0, 10.0); n], minimizers, f_low)
}

/// All named problems addressable from the CLI. `rosenbrock<k>` is parsed
/// dynamically for any `k >= 2`.
pub fn registry() -> Vec<Problem> {
    let mut v = classic_2d_suite();
    v.push(rosenbrock(2).unwrap());
    v.push(rosenbrock(5).unwrap());
    v.push(rosenbrock(20).unwrap());
    v.push(hairpin_surrogate());
    v
}

/// Look up a problem by name.
pub fn by_name(name: &str) -> Option<Problem> {
    if let Some(rest) = name.strip_prefix("rosenbrock") {
        if let Ok(n) = rest.parse::<usize>() {
            return rosenbrock(n).ok();
        }
    }
    registry().into_iter().find(|p| p.name() == name)
}
