//! Delta-method covariance of the optimum and the confidence sets built on it.
//!
//! With column-stacked `vec(B̂)`, `Cov(vec B̂) = Σ ⊗ (X'X)⁻¹`. The √N-scaled
//! coefficient covariance is `Θ = N·Σ ⊗ (X'X)⁻¹`, and the optimum satisfies
//! `√N(x̂* − x*) → 𝒩(0, Ξ)` with `Ξ = J Θ J'`.

use alloc::vec::Vec;

use crate::linalg::{
    commutation_permutation, kron, permute_columns, permute_symmetric, symmetrize, VecOrdering,
};
use crate::model::FitResult;
use crate::sensitivity::SensitivityJacobian;
use crate::special::{chi_squared_quantile, normal_quantile};
// Unused whenever std is linked; its inherent float methods take precedence.
use crate::{Error, Matrix, Result, Vector};
#[allow(unused_imports)]
use num_traits::Float;

/// `Θ̂`, tagged with the stacking it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientCovariance {
    pub theta: Matrix,
    pub runs: usize,
    pub terms: usize,
    pub responses: usize,
    pub ordering: VecOrdering,
}

impl CoefficientCovariance {
    /// `N · (Σ ⊗ (X'X)⁻¹)` from known parts.
    pub fn from_parts(sigma: &Matrix, xtx_inv: &Matrix, runs: usize) -> Result<Self> {
        if !sigma.is_square() || !xtx_inv.is_square() {
            return Err(Error::InvalidArgument("covariance factors must be square"));
        }
        if runs == 0 {
            return Err(Error::InvalidArgument("sample size must be positive"));
        }
        let theta = symmetrize(&(kron(sigma, xtx_inv) * runs as f64));
        Ok(Self {
            theta,
            runs,
            terms: xtx_inv.nrows(),
            responses: sigma.nrows(),
            ordering: VecOrdering::ColumnStacked,
        })
    }

    /// `Cov(vec B̂) = Θ / N`.
    pub fn coefficient_cov(&self) -> Matrix {
        &self.theta / self.runs as f64
    }

    /// The same covariance expressed in the other stacking.
    pub fn reordered(&self, ordering: VecOrdering) -> Self {
        if ordering == self.ordering {
            return self.clone();
        }
        let perm = stacking_permutation(self.terms, self.responses, self.ordering);
        Self {
            theta: permute_symmetric(&self.theta, &perm),
            ordering,
            ..self.clone()
        }
    }
}

// Source index (in `from` order) of each target position in the other order.
fn stacking_permutation(terms: usize, responses: usize, from: VecOrdering) -> Vec<usize> {
    match from {
        VecOrdering::ColumnStacked => commutation_permutation(terms, responses),
        VecOrdering::RowStacked => commutation_permutation(responses, terms),
    }
}

impl SensitivityJacobian {
    /// The same Jacobian with its columns expressed in the other stacking.
    pub fn reordered(&self, ordering: VecOrdering) -> Self {
        if ordering == self.ordering {
            return self.clone();
        }
        let perm = stacking_permutation(self.terms, self.responses, self.ordering);
        let jl = Matrix::from_column_slice(1, self.jlambda.len(), self.jlambda.as_slice());
        Self {
            jx: permute_columns(&self.jx, &perm),
            jlambda: permute_columns(&jl, &perm).row(0).transpose(),
            ordering,
            ..self.clone()
        }
    }
}

/// `Θ̂ = N · (Σ̂ ⊗ (X'X)⁻¹)`.
pub fn coefficient_covariance(fit: &FitResult, runs: usize) -> Result<CoefficientCovariance> {
    let sigma = fit.sigma_hat()?;
    if runs != fit.runs {
        return Err(Error::DimensionMismatch {
            what: "sample size",
            expected: fit.runs,
            found: runs,
        });
    }
    CoefficientCovariance::from_parts(sigma, &fit.xtx_inv, runs)
}

/// Asymptotic covariance of the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    /// `Ξ = JΘ̂J'`, the covariance of `√N(x̂* − x*)`.
    pub xi: Matrix,
    /// `Ξ / N`, the approximate covariance of `x̂*` itself.
    pub cov_xstar: Matrix,
    pub runs: usize,
}

/// `Ξ = J Θ̂ J'`.
pub fn critical_point_covariance(
    jac: &SensitivityJacobian,
    theta: &CoefficientCovariance,
) -> Result<AsymptoticReport> {
    if jac.ordering != theta.ordering {
        return Err(Error::OrderingMismatch);
    }
    if jac.jx.ncols() != theta.theta.nrows() {
        return Err(Error::DimensionMismatch {
            what: "Jacobian columns",
            expected: theta.theta.nrows(),
            found: jac.jx.ncols(),
        });
    }
    let xi = symmetrize(&(&jac.jx * &theta.theta * jac.jx.transpose()));
    let cov_xstar = &xi / theta.runs as f64;
    Ok(AsymptoticReport {
        xi,
        cov_xstar,
        runs: theta.runs,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// `x*ᵢ ± z_{1−α/2} √(Ξᵢᵢ/N)` for every coordinate.
pub fn confidence_intervals(
    x_star: &Vector,
    report: &AsymptoticReport,
    alpha: f64,
) -> Result<Vec<(f64, f64)>> {
    check_alpha(alpha)?;
    let n = x_star.len();
    if report.cov_xstar.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "covariance of the optimum",
            expected: n,
            found: report.cov_xstar.nrows(),
        });
    }
    let z = normal_quantile(1.0 - 0.5 * alpha)?;
    Ok((0..n)
        .map(|i| {
            let half = z * report.cov_xstar[(i, i)].max(0.0).sqrt();
            (x_star[i] - half, x_star[i] + half)
        })
        .collect())
}

/// `Ξ` counts as singular when its smallest eigenvalue is below this fraction of the largest.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// Wald region `{x : N(x − x*)'Ξ⁻¹(x − x*) ≤ χ²ₙ(1 − α)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceEllipsoid {
    pub center: Vector,
    /// `N Ξ⁻¹`.
    pub precision: Matrix,
    pub threshold: f64,
}

impl ConfidenceEllipsoid {
    pub fn distance(&self, x: &Vector) -> f64 {
        let d = x - &self.center;
        d.dot(&(&self.precision * &d))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.distance(x) <= self.threshold
    }

    /// Semi-axis lengths, with the matching unit directions as columns.
    pub fn axes(&self) -> (Vector, Matrix) {
        let eig = self.precision.clone().symmetric_eigen();
        let lengths = eig.eigenvalues.map(|v| (self.threshold / v).sqrt());
        (lengths, eig.eigenvectors)
    }
}

pub fn confidence_ellipsoid(
    x_star: &Vector,
    report: &AsymptoticReport,
    alpha: f64,
) -> Result<ConfidenceEllipsoid> {
    check_alpha(alpha)?;
    let n = x_star.len();
    if report.xi.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "covariance of the optimum",
            expected: n,
            found: report.xi.nrows(),
        });
    }
    let eig = report.xi.symmetric_eigenvalues();
    if eig.min().is_nan() || eig.min() <= SINGULAR_RATIO * eig.amax() {
        return Err(Error::SingularCovariance);
    }
    let xi_inv = report
        .xi
        .clone()
        .cholesky()
        .ok_or(Error::SingularCovariance)?
        .inverse();
    Ok(ConfidenceEllipsoid {
        center: x_star.clone(),
        precision: symmetrize(&(xi_inv * report.runs as f64)),
        threshold: chi_squared_quantile(1.0 - alpha, n)?,
    })
}
