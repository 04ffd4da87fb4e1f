//! Closed-form ridge and minimum-norm solvers for the model `y ≈ Ā·x̄`.
//!
//! Ridge factors whichever Gram matrix is smaller: the dual form
//! `Āᵀ(ĀĀᵀ + λIₙ)⁻¹y` when `n ≤ p̄`, the primal form `(ĀᵀĀ + λI)⁻¹Āᵀy`
//! otherwise. Both are algebraically equal. The minimum-norm solution uses a
//! thin SVD pseudoinverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SVD};

use crate::error::{Error, Result};
use crate::model::Estimate;

/// Full singular value decomposition `Ā = U·S·Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// Orthogonal, `n × n`.
    pub u: DMatrix<f64>,
    /// Non-increasing, length `min(n, p̄)`.
    pub singular_values: DVector<f64>,
    /// Orthogonal, `p̄ × p̄`.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn s_max(&self) -> f64 {
        self.singular_values.iter().copied().next().unwrap_or(0.0)
    }

    pub fn s_min(&self) -> f64 {
        self.singular_values.iter().copied().last().unwrap_or(0.0)
    }

    /// `U·S·Vᵀ` with the rectangular `S`.
    pub fn recompose(&self) -> DMatrix<f64> {
        let (n, p) = (self.u.nrows(), self.v.nrows());
        let r = self.singular_values.len();
        let mut us = self.u.columns(0, r).into_owned();
        for (mut col, &s) in us.column_iter_mut().zip(self.singular_values.iter()) {
            col *= s;
        }
        let out = us * self.v.columns(0, r).transpose();
        debug_assert_eq!(out.shape(), (n, p));
        out
    }
}

fn max_iterations(a: &DMatrix<f64>) -> usize {
    1000.max(30 * a.nrows().min(a.ncols()))
}

fn thin_svd(a: &DMatrix<f64>, vectors: bool) -> Result<SVD<f64, Dyn, Dyn>> {
    SVD::try_new(a.clone(), vectors, vectors, f64::EPSILON, max_iterations(a))
        .ok_or(Error::Convergence)
}

/// Completes the orthonormal columns of `basis` (`m × r`) to an `m × m`
/// orthogonal matrix.
fn complete_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, r) = basis.shape();
    if r == m {
        return basis.clone();
    }
    let mut stacked = DMatrix::zeros(m, r + m);
    stacked.columns_mut(0, r).copy_from(basis);
    stacked.columns_mut(r, m).fill_with_identity();
    let mut q = stacked.qr().q();
    q.columns_mut(0, r).copy_from(basis);
    q
}

/// Non-increasing singular values of `a` (length `min(rows, cols)`).
pub fn singular_values(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    if a.is_empty() {
        return Ok(DVector::zeros(0));
    }
    Ok(thin_svd(a, false)?.singular_values)
}

/// Thin left singular vectors (`n × min(n, p̄)`) and singular values.
pub fn left_singular(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if a.is_empty() {
        return Ok((DMatrix::zeros(a.nrows(), 0), DVector::zeros(0)));
    }
    let svd = SVD::try_new(a.clone(), true, false, f64::EPSILON, max_iterations(a))
        .ok_or(Error::Convergence)?;
    let u = svd.u.ok_or(Error::Convergence)?;
    Ok((u, svd.singular_values))
}

/// Full SVD with square orthogonal factors.
pub fn svd_factor(a: &DMatrix<f64>) -> Result<SvdFactors> {
    let (n, p) = a.shape();
    if a.is_empty() {
        return Ok(SvdFactors {
            u: DMatrix::identity(n, n),
            singular_values: DVector::zeros(0),
            v: DMatrix::identity(p, p),
        });
    }
    let svd = thin_svd(a, true)?;
    let u = svd.u.as_ref().ok_or(Error::Convergence)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::Convergence)?;
    Ok(SvdFactors {
        u: complete_basis(u),
        singular_values: svd.singular_values.clone(),
        v: complete_basis(&v_t.transpose()),
    })
}

/// `ĀĀᵀ`, the `n × n` Gram matrix of the model features.
pub fn gram(a_bar: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a_bar.nrows();
    let mut g = DMatrix::zeros(n, n);
    g.gemm(1.0, a_bar, &a_bar.transpose(), 0.0);
    g
}

/// The smaller of `ĀĀᵀ` and `ĀᵀĀ`.
pub fn compact_gram(a_bar: &DMatrix<f64>) -> DMatrix<f64> {
    if a_bar.nrows() <= a_bar.ncols() {
        gram(a_bar)
    } else {
        a_bar.tr_mul(a_bar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RidgeForm {
    /// `Āᵀ(ĀĀᵀ + λIₙ)⁻¹y`.
    Dual,
    /// `(ĀᵀĀ + λI)⁻¹Āᵀy`.
    Primal,
}

/// A Cholesky factor of a shifted Gram matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct RidgeFactor {
    factor: Cholesky<f64, Dyn>,
    lambda: f64,
    form: RidgeForm,
}

impl RidgeFactor {
    /// Factors `gram + λI`; `gram` is `ĀĀᵀ` for [`RidgeForm::Dual`] and
    /// `ĀᵀĀ` for [`RidgeForm::Primal`].
    pub fn from_gram(gram: &DMatrix<f64>, lambda: f64, form: RidgeForm) -> Result<Self> {
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::LambdaZero(lambda));
        }
        if !gram.is_square() {
            return Err(Error::Dimension(format!("Gram matrix is {:?}", gram.shape())));
        }
        let mut shifted = gram.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += lambda;
        }
        if shifted.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solve("shifted Gram matrix has non-finite entries".into()));
        }
        let factor = Cholesky::new(shifted).ok_or_else(|| {
            Error::Solve(format!("shifted Gram matrix is not positive definite (lambda = {lambda})"))
        })?;
        Ok(RidgeFactor { factor, lambda, form })
    }

    /// Factors the smaller Gram matrix of `a_bar`.
    pub fn new(a_bar: &DMatrix<f64>, lambda: f64) -> Result<Self> {
        Self::from_gram(&compact_gram(a_bar), lambda, Self::preferred_form(a_bar))
    }

    pub fn preferred_form(a_bar: &DMatrix<f64>) -> RidgeForm {
        if a_bar.nrows() <= a_bar.ncols() {
            RidgeForm::Dual
        } else {
            RidgeForm::Primal
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn form(&self) -> RidgeForm {
        self.form
    }

    /// Ridge estimate for `y`; `a_bar` must be the matrix the factor was built from.
    pub fn solve(&self, a_bar: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_rhs(a_bar, y)?;
        let expected = match self.form {
            RidgeForm::Dual => a_bar.nrows(),
            RidgeForm::Primal => a_bar.ncols(),
        };
        if self.factor.l_dirty().nrows() != expected {
            return Err(Error::Dimension(format!(
                "factor has order {} but the features need {expected}",
                self.factor.l_dirty().nrows()
            )));
        }
        let x = match self.form {
            RidgeForm::Dual => a_bar.tr_mul(&self.factor.solve(y)),
            RidgeForm::Primal => self.factor.solve(&a_bar.tr_mul(y)),
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solve("ridge solve produced non-finite values".into()));
        }
        Ok(x)
    }
}

fn check_rhs(a_bar: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if a_bar.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "feature matrix has {} rows but response has length {}",
            a_bar.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Truncated pseudoinverse `Ā⁺`, stored in factored form.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    u: DMatrix<f64>,
    inv_s: DVector<f64>,
    v: DMatrix<f64>,
    cols: usize,
}

impl PseudoInverse {
    /// Singular values below `max(n, p̄)·ε·s_max` are treated as zero.
    pub fn new(a_bar: &DMatrix<f64>) -> Result<Self> {
        let (n, p) = a_bar.shape();
        if a_bar.is_empty() {
            return Ok(PseudoInverse {
                u: DMatrix::zeros(n, 0),
                inv_s: DVector::zeros(0),
                v: DMatrix::zeros(p, 0),
                cols: p,
            });
        }
        let svd = thin_svd(a_bar, true)?;
        let s_max = svd.singular_values.max();
        let cutoff = n.max(p) as f64 * f64::EPSILON * s_max;
        let rank = svd.singular_values.iter().take_while(|&&s| s > cutoff).count();
        let u = svd.u.as_ref().ok_or(Error::Convergence)?.columns(0, rank).into_owned();
        let v = svd
            .v_t
            .as_ref()
            .ok_or(Error::Convergence)?
            .rows(0, rank)
            .transpose();
        let inv_s = svd.singular_values.rows(0, rank).map(|s| 1.0 / s);
        Ok(PseudoInverse { u, inv_s, v, cols: p })
    }

    pub fn rank(&self) -> usize {
        self.inv_s.len()
    }

    pub fn apply(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if self.u.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "pseudoinverse expects length {}, got {}",
                self.u.nrows(),
                y.len()
            )));
        }
        if self.rank() == 0 {
            return Ok(DVector::zeros(self.cols));
        }
        let coeffs = self.u.tr_mul(y).component_mul(&self.inv_s);
        Ok(&self.v * coeffs)
    }
}

/// Ridge estimate `(ĀᵀĀ + λI)⁻¹Āᵀy` for `λ > 0`.
pub fn ridge_solve(a_bar: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_rhs(a_bar, y)?;
    RidgeFactor::new(a_bar, lambda)?.solve(a_bar, y)
}

/// Minimum ℓ₂-norm least-squares solution `Ā⁺y`.
pub fn min_norm_solve(a_bar: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_rhs(a_bar, y)?;
    PseudoInverse::new(a_bar)?.apply(y)
}

/// Minimum-norm solution when `λ = 0`, ridge otherwise.
pub fn solve(a_bar: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    check_rhs(a_bar, y)?;
    if a_bar.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::NegativeParameter { field: "lambda", value: lambda });
    }
    if lambda == 0.0 {
        min_norm_solve(a_bar, y)
    } else {
        ridge_solve(a_bar, y, lambda)
    }
}

/// Splits `x̄̂ = [x̂_F; x̂_S]` and appends a zero missing block.
pub fn extend_estimate(
    x_bar: &DVector<f64>,
    p_fake: usize,
    p_included: usize,
    p_missing: usize,
) -> Result<Estimate> {
    if x_bar.len() != p_fake + p_included {
        return Err(Error::Dimension(format!(
            "estimate has length {} but p_fake + p_included = {}",
            x_bar.len(),
            p_fake + p_included
        )));
    }
    Ok(Estimate {
        x_fake: x_bar.rows(0, p_fake).into_owned(),
        x_included: x_bar.rows(p_fake, p_included).into_owned(),
        x_missing: DVector::zeros(p_missing),
    })
}

/// `A_F·x̂_F + A_S·x̂_S`.
pub fn predict(a_fake: &DMatrix<f64>, a_included: &DMatrix<f64>, est: &Estimate) -> Result<DVector<f64>> {
    if a_fake.nrows() != a_included.nrows() {
        return Err(Error::Dimension(format!(
            "fake block has {} rows, included block has {}",
            a_fake.nrows(),
            a_included.nrows()
        )));
    }
    if a_fake.ncols() != est.x_fake.len() || a_included.ncols() != est.x_included.len() {
        return Err(Error::Dimension(format!(
            "feature widths ({}, {}) do not match estimate lengths ({}, {})",
            a_fake.ncols(),
            a_included.ncols(),
            est.x_fake.len(),
            est.x_included.len()
        )));
    }
    let mut y_hat = DVector::zeros(a_fake.nrows());
    y_hat.gemv(1.0, a_fake, &est.x_fake, 0.0);
    y_hat.gemv(1.0, a_included, &est.x_included, 1.0);
    Ok(y_hat)
}
