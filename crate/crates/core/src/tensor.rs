//! Dense symmetric matrices and third-order tensors.
//!
//! Everything the cubic machinery needs from multilinear algebra lives here:
//! exactly-symmetric storage, contractions against a vector, eigenvalue
//! utilities, operator-norm bounds, and central-difference verification of
//! derivative bundles.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Dense symmetric `n x n` matrix.
///
/// Symmetry is enforced on construction: each off-diagonal pair is written
/// from a single canonical value, so `a[(i, j)] == a[(j, i)]` holds bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrize an arbitrary square matrix as `(A + A')/2`.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = a[(j, j)];
            for i in 0..j {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { m })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Build from a function evaluated on the upper triangle (`i <= j`) and
    /// mirrored, so the result is symmetric by construction.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }

    /// `self + t * I`.
    pub fn shifted(&self, t: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += t;
        }
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(Self {
            m: &self.m + &other.m,
        })
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(&self.m * v)
    }

    /// `s' A s`.
    pub fn quadratic_form(&self, s: &DVector<f64>) -> Result<f64> {
        Ok(self.mul_vec(s)?.dot(s))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev = self.m.clone().symmetric_eigen().eigenvalues;
        ev.as_mut_slice()
            .sort_by(|a, b| a.partial_cmp(b).expect("non-finite eigenvalue"));
        ev
    }

    /// Smallest eigenvalue of the matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        if !self.is_finite() {
            return Err(Error::NonFinite("min_eigenvalue input"));
        }
        Ok(self
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }

    /// Spectral norm: largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Dense symmetric third-order tensor, stored as `n` matrix slices with slice
/// `i` holding the entries `T[i, ., .]`.
///
/// Construction fully symmetrizes: for each index triple the same canonical
/// value is written to all six permuted positions, so permuted reads agree
/// bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdTensor {
    n: usize,
    slices: Vec<SymMatrix>,
}

impl ThirdTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            slices: (0..n).map(|_| SymMatrix::zeros(n)).collect(),
        }
    }

    /// Symmetrize arbitrary slice data: the canonical value for a sorted
    /// triple is the mean of its six permuted reads.
    pub fn from_slices(raw: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = raw.len();
        for s in &raw {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: s.nrows().max(s.ncols()),
                });
            }
        }
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    let v = (raw[a][(b, c)]
                        + raw[a][(c, b)]
                        + raw[b][(a, c)]
                        + raw[b][(c, a)]
                        + raw[c][(a, b)]
                        + raw[c][(b, a)])
                        / 6.0;
                    out.set_symmetric(a, b, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Build from a function of index triples; `f` is evaluated once per
    /// sorted triple `(a <= b <= c)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(n);
        for a in 0..n {
            for b in a..n {
                for c in b..n {
                    out.set_symmetric(a, b, c, f(a, b, c));
                }
            }
        }
        out
    }

    fn set_symmetric(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.slices[a].m[(b, c)] = v;
        self.slices[a].m[(c, b)] = v;
        self.slices[b].m[(a, c)] = v;
        self.slices[b].m[(c, a)] = v;
        self.slices[c].m[(a, b)] = v;
        self.slices[c].m[(b, a)] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn slice(&self, i: usize) -> &SymMatrix {
        &self.slices[i]
    }

    pub fn slices(&self) -> &[SymMatrix] {
        &self.slices
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.slices[i].get(j, k)
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().all(|s| s.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.m.iter().all(|v| *v == 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| SymMatrix {
                m: &a.m - &b.m,
            })
            .collect();
        Ok(Self { n: self.n, slices })
    }

    fn check_dim(&self, s: &DVector<f64>) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        Ok(())
    }

    /// Contract once: `T[s] = sum_i s_i H_i`, a symmetric matrix.
    pub fn contract1(&self, s: &DVector<f64>) -> Result<SymMatrix> {
        self.check_dim(s)?;
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, slice) in self.slices.iter().enumerate() {
            m += &slice.m * s[i];
        }
        Ok(SymMatrix { m })
    }

    /// Contract twice: `T[s, s]`, the vector with entries `s' H_i s`.
    pub fn contract2(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(s)?;
        let mut v = DVector::zeros(self.n);
        for (i, slice) in self.slices.iter().enumerate() {
            v[i] = slice.quadratic_form(s)?;
        }
        Ok(v)
    }

    /// Contract three times: the cubic form `T[s, s, s] = sum_i s_i s' H_i s`.
    pub fn contract3(&self, s: &DVector<f64>) -> Result<f64> {
        Ok(self.contract2(s)?.dot(s))
    }

    /// Certified upper bound on the order-3 operator norm
    /// `max_{|u|=|v|=|w|=1} |T[u,v,w]|`: the smallest spectral norm among the
    /// mode unfoldings. Exact maximization is intractable in general; the
    /// returned value is always `>=` the true norm.
    pub fn operator_norm_bound(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        // For a fully symmetric tensor all three unfoldings share their
        // singular values, so one mode suffices: M is n x n^2 with
        // M[i, j*n + k] = T[i, j, k], and |M|_2 = sqrt(lambda_max(M M')).
        let mut gram = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in i..self.n {
                let mut acc = 0.0;
                for a in 0..self.n {
                    for b in 0..self.n {
                        acc += self.get(i, a, b) * self.get(j, a, b);
                    }
                }
                gram[(i, j)] = acc;
                gram[(j, i)] = acc;
            }
        }
        let lam_max = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(0.0, f64::max);
        lam_max.max(0.0).sqrt()
    }
}

/// Value, gradient, Hessian, and third-order tensor of `f` at a point.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub x: DVector<f64>,
    pub f: f64,
    pub g: DVector<f64>,
    pub h: SymMatrix,
    pub t: ThirdTensor,
}

impl DerivativeBundle {
    pub fn new(x: DVector<f64>, f: f64, g: DVector<f64>, h: SymMatrix, t: ThirdTensor) -> Result<Self> {
        let n = x.len();
        if g.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.len() });
        }
        if h.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.dim() });
        }
        if t.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: t.dim() });
        }
        Ok(Self { x, f, g, h, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
            && self.f.is_finite()
            && self.g.iter().all(|v| v.is_finite())
            && self.h.is_finite()
            && self.t.is_finite()
    }
}

/// Central-difference verification report; one scale-relative error per
/// derivative order, `max |fd - exact| / (1 + max |exact|)` over the entries
/// of that order.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub grad_err: f64,
    pub hess_err: f64,
    pub tensor_err: f64,
    /// Steps actually used per order.
    pub steps: [f64; 3],
}

impl FdReport {
    pub fn max_errs(&self) -> [f64; 3] {
        [self.grad_err, self.hess_err, self.tensor_err]
    }
}

/// Check a derivative bundle against central differences of `f_eval`.
///
/// `h` is the base step, used directly for the gradient. The Hessian and
/// tensor stencils floor their steps at `(eps*(1+|f|))^(1/4)` and
/// `(eps*(1+|f|))^(1/5)` respectively: below those scales the higher-order
/// stencils are dominated by cancellation noise rather than truncation.
pub fn fd_check(
    bundle: &DerivativeBundle,
    f_eval: &dyn Fn(&DVector<f64>) -> f64,
    h: f64,
) -> Result<FdReport> {
    if h <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: format!("step must be positive, got {h}"),
        });
    }
    let n = bundle.dim();
    let x = &bundle.x;
    let f0 = f_eval(x);
    let scale = f64::EPSILON * (1.0 + f0.abs());
    let h1 = h;
    let h2 = h.max(scale.powf(0.25));
    let h3 = h.max(scale.powf(0.2));

    let at = |deltas: &[(usize, f64)]| {
        let mut p = x.clone();
        for &(i, d) in deltas {
            p[i] += d;
        }
        f_eval(&p)
    };

    // Order 1: two-point central differences.
    let mut g_fd = DVector::zeros(n);
    for i in 0..n {
        g_fd[i] = (at(&[(i, h1)]) - at(&[(i, -h1)])) / (2.0 * h1);
    }

    // Order 2: diagonal three-point, off-diagonal four-point cross.
    let mut h_fd = DMatrix::zeros(n, n);
    for i in 0..n {
        h_fd[(i, i)] = (at(&[(i, h2)]) - 2.0 * f0 + at(&[(i, -h2)])) / (h2 * h2);
        for j in (i + 1)..n {
            let v = (at(&[(i, h2), (j, h2)]) - at(&[(i, h2), (j, -h2)])
                - at(&[(i, -h2), (j, h2)])
                + at(&[(i, -h2), (j, -h2)]))
                / (4.0 * h2 * h2);
            h_fd[(i, j)] = v;
            h_fd[(j, i)] = v;
        }
    }

    // Order 3: eight-point product stencil on each sorted triple.
    let mut t_fd = ThirdTensor::zeros(n);
    let signs = [-1.0, 1.0];
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                let mut acc = 0.0;
                for &s1 in &signs {
                    for &s2 in &signs {
                        for &s3 in &signs {
                            let mut p = x.clone();
                            p[a] += s1 * h3;
                            p[b] += s2 * h3;
                            p[c] += s3 * h3;
                            acc += s1 * s2 * s3 * f_eval(&p);
                        }
                    }
                }
                t_fd.set_symmetric(a, b, c, acc / (8.0 * h3 * h3 * h3));
            }
        }
    }

    let rel = |err_max: f64, exact_max: f64| err_max / (1.0 + exact_max);

    let mut g_err: f64 = 0.0;
    let mut g_max: f64 = 0.0;
    for i in 0..n {
        g_err = g_err.max((g_fd[i] - bundle.g[i]).abs());
        g_max = g_max.max(bundle.g[i].abs());
    }

    let mut h_err: f64 = 0.0;
    let mut h_max: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            h_err = h_err.max((h_fd[(i, j)] - bundle.h.get(i, j)).abs());
            h_max = h_max.max(bundle.h.get(i, j).abs());
        }
    }

    let mut t_err: f64 = 0.0;
    let mut t_max: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                t_err = t_err.max((t_fd.get(a, b, c) - bundle.t.get(a, b, c)).abs());
                t_max = t_max.max(bundle.t.get(a, b, c).abs());
            }
        }
    }

    Ok(FdReport {
        grad_err: rel(g_err, g_max),
        hess_err: rel(h_err, h_max),
        tensor_err: rel(t_err, t_max),
        steps: [h1, h2, h3],
    })
}
