//! Second-order basis, designs and the multivariate least-squares fit.
//!
//! The basis is ordered `(1; x₁…xₙ; x₁²…xₙ²; x₁x₂, x₁x₃, …, xₙ₋₁xₙ)` and every
//! coefficient vector in the crate follows that order.

use alloc::vec::Vec;

use crate::linalg::{all_finite, symmetrize};
use crate::{Error, Matrix, Result, Vector};

/// Smallest admissible ratio of extreme singular values of the design matrix.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Number of coefficients `p = 1 + n + n(n+1)/2` of a full quadratic in `n` factors.
pub const fn n_terms(factors: usize) -> usize {
    1 + factors + factors * (factors + 1) / 2
}

/// Inverse of [`n_terms`], if `terms` is the size of some full quadratic basis.
pub fn n_factors(terms: usize) -> Option<usize> {
    (1..=terms).find(|&n| n_terms(n) == terms)
}

/// Iterates the cross-term pairs `(i, j)`, `i < j`, in basis order.
pub fn cross_pairs(factors: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..factors).flat_map(move |i| ((i + 1)..factors).map(move |j| (i, j)))
}

/// `z(x)`.
pub fn basis_vector(x: &[f64]) -> Vector {
    let n = x.len();
    let mut z = Vector::zeros(n_terms(n));
    z[0] = 1.0;
    for i in 0..n {
        z[1 + i] = x[i];
        z[1 + n + i] = x[i] * x[i];
    }
    for (t, (i, j)) in cross_pairs(n).enumerate() {
        z[1 + 2 * n + t] = x[i] * x[j];
    }
    z
}

/// `M(x) = ∂z(x)'/∂x`, an `n × p` matrix laid out as
/// `(0 | Iₙ | 2 diag(x) | C₁ | … | Cₙ₋₁)`.
///
/// Block `Cᵢ` holds the derivatives of `xᵢxⱼ`, `j > i`: row `i` carries `xⱼ`
/// and row `j` carries `xᵢ`.
pub fn basis_jacobian(x: &[f64]) -> Matrix {
    let n = x.len();
    let mut m = Matrix::zeros(n, n_terms(n));
    for i in 0..n {
        m[(i, 1 + i)] = 1.0;
        m[(i, 1 + n + i)] = 2.0 * x[i];
    }
    for (t, (i, j)) in cross_pairs(n).enumerate() {
        let col = 1 + 2 * n + t;
        m[(i, col)] = x[j];
        m[(j, col)] = x[i];
    }
    m
}

/// Central composite design: `2ⁿ` factorial corners at `±1`, `2n` axial points
/// at `±axial` and `n_center` center runs, in that order.
///
/// Factorial runs are enumerated in standard order (factor 1 alternates fastest).
pub fn ccd_design(factors: usize, axial: f64, n_center: usize) -> Result<Vec<Vec<f64>>> {
    if factors == 0 {
        return Err(Error::InvalidArgument("a design needs at least one factor"));
    }
    if factors > 20 {
        return Err(Error::Overflow { factors });
    }
    if !(axial.is_finite() && axial > 0.0) {
        return Err(Error::InvalidArgument(
            "axial distance must be positive and finite",
        ));
    }
    let corners = 1usize << factors;
    let mut points = Vec::with_capacity(corners + 2 * factors + n_center);
    for code in 0..corners {
        points.push(
            (0..factors)
                .map(|i| if code >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect(),
        );
    }
    for i in 0..factors {
        for sign in [-1.0, 1.0] {
            let mut p = alloc::vec![0.0; factors];
            p[i] = sign * axial;
            points.push(p);
        }
    }
    for _ in 0..n_center {
        points.push(alloc::vec![0.0; factors]);
    }
    Ok(points)
}

/// A full-rank second-order design matrix together with its least-squares
/// factorization.
#[derive(Debug, Clone)]
pub struct Design {
    points: Vec<Vec<f64>>,
    matrix: Matrix,
    factors: usize,
    /// `R⁻¹Q'` from the thin QR factorization of `X` (a `p × N` left inverse).
    left_inverse: Matrix,
    xtx_inv: Matrix,
    rank_ratio: f64,
}

/// Builds `X` with rows `z(xᵢ)'` and verifies it identifies all `p` coefficients.
pub fn build_design(points: &[Vec<f64>]) -> Result<Design> {
    let first = points.first().ok_or(Error::EmptyInput)?;
    let factors = first.len();
    if factors == 0 {
        return Err(Error::InvalidArgument(
            "design points need at least one factor",
        ));
    }
    for p in points {
        if p.len() != factors {
            return Err(Error::DimensionMismatch {
                what: "design point",
                expected: factors,
                found: p.len(),
            });
        }
        if !all_finite(p) {
            return Err(Error::NonFinite("design point"));
        }
    }
    let runs = points.len();
    let terms = n_terms(factors);
    if runs < terms {
        return Err(Error::RankDeficient {
            rows: runs,
            cols: terms,
            ratio: 0.0,
        });
    }
    let mut matrix = Matrix::zeros(runs, terms);
    for (i, p) in points.iter().enumerate() {
        matrix.row_mut(i).copy_from(&basis_vector(p).transpose());
    }

    let singular = matrix.clone().singular_values();
    let smax = singular.max();
    let smin = singular.min();
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if ratio.is_nan() || ratio <= RANK_TOLERANCE {
        return Err(Error::RankDeficient {
            rows: runs,
            cols: terms,
            ratio,
        });
    }

    let qr = matrix.clone().qr();
    let r = qr.r();
    let r_inv = r
        .solve_upper_triangular(&Matrix::identity(terms, terms))
        .ok_or(Error::NumericalFailure(
            "triangular factor of the design is singular",
        ))?;
    let left_inverse = &r_inv * qr.q().transpose();
    let xtx_inv = symmetrize(&(&r_inv * r_inv.transpose()));

    Ok(Design {
        points: points.to_vec(),
        matrix,
        factors,
        left_inverse,
        xtx_inv,
        rank_ratio: ratio,
    })
}

impl Design {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// The `N × p` regression matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn runs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn terms(&self) -> usize {
        self.matrix.ncols()
    }

    /// `(X'X)⁻¹`.
    pub fn xtx_inv(&self) -> &Matrix {
        &self.xtx_inv
    }

    /// Smallest over largest singular value of `X`.
    pub fn rank_ratio(&self) -> f64 {
        self.rank_ratio
    }

    /// Stacks the design vertically `times` times, keeping `X'X / N` fixed.
    pub fn replicate(&self, times: usize) -> Result<Design> {
        if times == 0 {
            return Err(Error::InvalidArgument("replication count must be positive"));
        }
        let mut points = Vec::with_capacity(self.points.len() * times);
        for _ in 0..times {
            points.extend(self.points.iter().cloned());
        }
        build_design(&points)
    }
}

/// Intercept, linear vector and symmetric quadratic matrix of one response,
/// so that `Ŷ(x) = β₀ + β₁'x + x'Bx`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCoefficients {
    pub intercept: f64,
    pub linear: Vector,
    pub quadratic: Matrix,
}

impl ResponseCoefficients {
    /// Reassembles the coefficient column in basis order.
    pub fn to_column(&self) -> Vector {
        let n = self.linear.len();
        let mut col = Vector::zeros(n_terms(n));
        col[0] = self.intercept;
        for i in 0..n {
            col[1 + i] = self.linear[i];
            col[1 + n + i] = self.quadratic[(i, i)];
        }
        for (t, (i, j)) in cross_pairs(n).enumerate() {
            col[1 + 2 * n + t] = 2.0 * self.quadratic[(i, j)];
        }
        col
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let x = Vector::from_column_slice(x);
        self.intercept + self.linear.dot(&x) + x.dot(&(&self.quadratic * &x))
    }
}

/// The `p × r` coefficient matrix `B` (or its estimate), one column per response.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    matrix: Matrix,
    factors: usize,
}

impl CoefficientMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        let factors = n_factors(matrix.nrows()).ok_or(Error::InvalidArgument(
            "coefficient rows must equal 1 + n + n(n+1)/2 for some n ≥ 1",
        ))?;
        if matrix.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if !all_finite(matrix.iter()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        Ok(Self { matrix, factors })
    }

    /// Builds `B` from per-response decompositions.
    pub fn from_responses(responses: &[ResponseCoefficients]) -> Result<Self> {
        let first = responses.first().ok_or(Error::EmptyInput)?;
        let n = first.linear.len();
        let mut matrix = Matrix::zeros(n_terms(n), responses.len());
        for (k, resp) in responses.iter().enumerate() {
            if resp.linear.len() != n || resp.quadratic.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    what: "response coefficients",
                    expected: n,
                    found: resp.linear.len(),
                });
            }
            matrix.set_column(k, &resp.to_column());
        }
        Self::new(matrix)
    }

    /// Inverse of [`CoefficientMatrix::vec`].
    pub fn from_vec(values: &Vector, terms: usize) -> Result<Self> {
        if terms == 0 || !values.len().is_multiple_of(terms) {
            return Err(Error::DimensionMismatch {
                what: "vec(B) length",
                expected: terms,
                found: values.len(),
            });
        }
        Self::new(Matrix::from_column_slice(
            terms,
            values.len() / terms,
            values.as_slice(),
        ))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn terms(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn responses(&self) -> usize {
        self.matrix.ncols()
    }

    /// Column-stacked `vec(B)`.
    pub fn vec(&self) -> Vector {
        Vector::from_column_slice(self.matrix.as_slice())
    }

    /// Shorthand for [`split_coefficients`].
    pub fn response(&self, k: usize) -> Result<ResponseCoefficients> {
        split_coefficients(self, k)
    }
}

/// Decomposes column `k` (zero-based) into `(β₀ₖ, β₁ₖ, Bₖ)` with
/// `Bₖ[i][i] = βᵢᵢₖ` and `Bₖ[i][j] = βᵢⱼₖ / 2`.
pub fn split_coefficients(b: &CoefficientMatrix, k: usize) -> Result<ResponseCoefficients> {
    if k >= b.responses() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: b.responses(),
        });
    }
    let n = b.factors();
    let col = b.matrix.column(k);
    let linear = Vector::from_fn(n, |i, _| col[1 + i]);
    let mut quadratic = Matrix::zeros(n, n);
    for i in 0..n {
        quadratic[(i, i)] = col[1 + n + i];
    }
    for (t, (i, j)) in cross_pairs(n).enumerate() {
        let half = 0.5 * col[1 + 2 * n + t];
        quadratic[(i, j)] = half;
        quadratic[(j, i)] = half;
    }
    Ok(ResponseCoefficients {
        intercept: col[0],
        linear,
        quadratic,
    })
}

/// `Ŷ(x) = B'z(x)`.
pub fn predict(b: &CoefficientMatrix, x: &[f64]) -> Result<Vector> {
    if x.len() != b.factors() {
        return Err(Error::DimensionMismatch {
            what: "factor vector",
            expected: b.factors(),
            found: x.len(),
        });
    }
    Ok(b.matrix.tr_mul(&basis_vector(x)))
}

/// Output of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub coefficients: CoefficientMatrix,
    /// `Σ̂ = Y'(I − H)Y/(N − p)`; absent for saturated designs.
    pub sigma_hat: Option<Matrix>,
    pub xtx_inv: Matrix,
    pub dof: usize,
    pub runs: usize,
}

impl FitResult {
    pub fn sigma_hat(&self) -> Result<&Matrix> {
        self.sigma_hat.as_ref().ok_or(Error::InsufficientDof {
            runs: self.runs,
            coefficients: self.coefficients.terms(),
        })
    }
}

/// Least-squares fit `B̂ = (X'X)⁻¹X'Y` through the design's QR factorization.
pub fn fit(design: &Design, y: &Matrix) -> Result<FitResult> {
    if y.nrows() != design.runs() {
        return Err(Error::DimensionMismatch {
            what: "response rows",
            expected: design.runs(),
            found: y.nrows(),
        });
    }
    if y.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    if !all_finite(y.iter()) {
        return Err(Error::NonFinite("response data"));
    }
    let b_hat = &design.left_inverse * y;
    let dof = design.runs() - design.terms();
    let sigma_hat = if dof > 0 {
        let resid = y - design.matrix() * &b_hat;
        Some(symmetrize(&(resid.tr_mul(&resid) / dof as f64)))
    } else {
        None
    };
    Ok(FitResult {
        coefficients: CoefficientMatrix::new(b_hat)?,
        sigma_hat,
        xtx_inv: design.xtx_inv.clone(),
        dof,
        runs: design.runs(),
    })
}

/// `Ĉov(Ŷ(x)) = z'(x)(X'X)⁻¹z(x) · Σ̂`.
pub fn predict_covariance(x: &[f64], fit: &FitResult) -> Result<Matrix> {
    let sigma = fit.sigma_hat()?;
    if x.len() != fit.coefficients.factors() {
        return Err(Error::DimensionMismatch {
            what: "factor vector",
            expected: fit.coefficients.factors(),
            found: x.len(),
        });
    }
    let z = basis_vector(x);
    let leverage = z.dot(&(&fit.xtx_inv * &z));
    Ok(sigma * leverage)
}
