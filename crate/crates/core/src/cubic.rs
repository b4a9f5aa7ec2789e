//! Multivariate cubic polynomials and cubic Taylor models.
//!
//! A cubic in the form
//!
//! ```text
//! psi(x) = 1/6 sum_i x_i x'H_i x + 1/2 x'Qx + b'x + c
//! ```
//!
//! is the universal subproblem currency: the third-order Taylor model of the
//! objective is one (in step coordinates), and adding the Levenberg-Marquardt
//! term `sigma |s|^2` keeps it one, shifting `Q` by `2 sigma I`.

use nalgebra::DVector;

use crate::tensor::{DerivativeBundle, SymMatrix, ThirdTensor};
use crate::{Error, Result};

/// Coefficients `(c, b, Q, {H_i})` of a multivariate cubic.
#[derive(Debug, Clone)]
pub struct CubicPoly {
    c: f64,
    b: DVector<f64>,
    q: SymMatrix,
    h: ThirdTensor,
}

impl CubicPoly {
    pub fn new(c: f64, b: DVector<f64>, q: SymMatrix, h: ThirdTensor) -> Result<Self> {
        let n = b.len();
        if q.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.dim() });
        }
        if h.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.dim() });
        }
        Ok(Self { c, b, q, h })
    }

    /// Third-order Taylor model of `f` at `bundle.x`, expressed in step
    /// coordinates `s = x - x_k`: `psi(s) = f + g's + 1/2 s'Hs + 1/6 T[s]^3`,
    /// so `psi(0) = f(x_k)`, `grad psi(0) = g`, `hess psi(0) = H` exactly.
    pub fn from_bundle(bundle: &DerivativeBundle) -> Self {
        Self {
            c: bundle.f,
            b: bundle.g.clone(),
            q: bundle.h.clone(),
            h: bundle.t.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn quadratic(&self) -> &SymMatrix {
        &self.q
    }

    pub fn cubic(&self) -> &ThirdTensor {
        &self.h
    }

    pub fn is_finite(&self) -> bool {
        self.c.is_finite()
            && self.b.iter().all(|v| v.is_finite())
            && self.q.is_finite()
            && self.h.is_finite()
    }

    fn check_dim(&self, s: &DVector<f64>) -> Result<()> {
        if s.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: s.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, s: &DVector<f64>) -> Result<f64> {
        self.check_dim(s)?;
        Ok(self.h.contract3(s)? / 6.0 + 0.5 * self.q.quadratic_form(s)? + self.b.dot(s) + self.c)
    }

    /// `grad psi(s) = 1/2 sum_i s_i H_i s + Qs + b`.
    pub fn grad(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(s)?;
        let cubic_part = self.h.contract1(s)?.mul_vec(s)?;
        Ok(cubic_part * 0.5 + self.q.mul_vec(s)? + &self.b)
    }

    /// `hess psi(s) = sum_i s_i H_i + Q`.
    pub fn hessian(&self, s: &DVector<f64>) -> Result<SymMatrix> {
        self.check_dim(s)?;
        self.h.contract1(s)?.add(&self.q)
    }

    /// Add the LM term `sigma |s|^2`: replaces `Q` by `Q + 2 sigma I` and
    /// leaves `c`, `b`, and the tensor untouched.
    pub fn regularize(&self, sigma: f64) -> Result<CubicPoly> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and >= 0, got {sigma}"),
            });
        }
        Ok(Self {
            c: self.c,
            b: self.b.clone(),
            q: self.q.shifted(2.0 * sigma),
            h: self.h.clone(),
        })
    }
}

/// Cubic Taylor model of `f` at `center` plus the LM term `sigma |x - center|^2`.
///
/// `base` is the unregularized model in step coordinates, so the model value
/// at `s = 0` is `f(center)` by construction.
#[derive(Debug, Clone)]
pub struct RegularizedModel {
    base: CubicPoly,
    sigma: f64,
    center: DVector<f64>,
}

impl RegularizedModel {
    pub fn new(bundle: &DerivativeBundle, sigma: f64) -> Result<Self> {
        if sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and >= 0, got {sigma}"),
            });
        }
        Ok(Self {
            base: CubicPoly::from_bundle(bundle),
            sigma,
            center: bundle.x.clone(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn base(&self) -> &CubicPoly {
        &self.base
    }

    /// Value at the center: `f(x_k)` exactly.
    pub fn value_at_center(&self) -> f64 {
        self.base.constant()
    }

    /// Model value in step coordinates.
    pub fn value(&self, s: &DVector<f64>) -> Result<f64> {
        Ok(self.base.eval(s)? + self.sigma * s.norm_squared())
    }

    /// The regularized cubic itself, `Q` shifted by `2 sigma I`.
    pub fn poly(&self) -> Result<CubicPoly> {
        self.base.regularize(self.sigma)
    }
}

/// Computable regularization threshold: with `g` the entrywise absolute
/// gradient and `h` the vector of per-slice spectral norms of the third
/// derivative,
///
/// ```text
/// alpha_lm = sqrt(3/2 (|g||h| + g'h)) - min(0, lambda_min(hess))
/// ```
///
/// Any `sigma >= alpha_lm` guarantees the LM-regularized cubic model admits a
/// strict local minimizer.
pub fn alpha_lm(bundle: &DerivativeBundle) -> Result<f64> {
    let n = bundle.dim();
    let mut g = DVector::zeros(n);
    let mut h = DVector::zeros(n);
    for i in 0..n {
        g[i] = bundle.g[i].abs();
        h[i] = bundle.t.slice(i).spectral_norm();
    }
    let inner = 1.5 * (g.norm() * h.norm() + g.dot(&h));
    let lam_min = bundle.h.min_eigenvalue()?;
    Ok(inner.max(0.0).sqrt() - lam_min.min(0.0))
}

/// Exact identity for the unregularized model decrease: when `s_k` steps to a
/// strict local minimizer of the cubic, the drop `psi(0) - psi(s_k)` equals
///
/// ```text
/// s_k' (H_center/6 + H_minimizer/3) s_k
/// ```
///
/// with the cubic's own Hessians at the center and at the minimizer. The
/// solver re-verifies this on every unregularized accepted step; it is the
/// strongest cheap correctness oracle available for the subproblem path.
pub fn decrease_identity(
    s_k: &DVector<f64>,
    h_center: &SymMatrix,
    h_minimizer: &SymMatrix,
) -> Result<f64> {
    let a = h_center.quadratic_form(s_k)?;
    let b = h_minimizer.quadratic_form(s_k)?;
    Ok(a / 6.0 + b / 3.0)
}
