//! Scalarization of the multiresponse program and Pareto filtering.
//!
//! The built-in functional is the weighted sum `f(Ŷ(x)) = Σ wₖ Ŷₖ(x)`. Other
//! functionals can plug into the sensitivity machinery through [`Functional`].

use alloc::vec::Vec;

use crate::linalg::all_finite;
use crate::model::{basis_jacobian, cross_pairs, split_coefficients, CoefficientMatrix};
use crate::{Error, Matrix, Result, Vector};

/// Tolerance on `Σ wₖ = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Nonnegative response weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vector);

impl WeightVector {
    pub fn new(weights: Vector) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no weights given"));
        }
        if !all_finite(weights.iter()) {
            return Err(Error::InvalidWeights("weights must be finite"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidWeights("weights must be nonnegative"));
        }
        if (weights.sum() - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights("weights must sum to 1"));
        }
        Ok(Self(weights))
    }

    pub fn from_slice(weights: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(weights))
    }

    /// Selects response `k` out of `r`.
    pub fn unit(k: usize, r: usize) -> Result<Self> {
        if k >= r {
            return Err(Error::IndexOutOfRange { index: k, len: r });
        }
        let mut w = Vector::zeros(r);
        w[k] = 1.0;
        Ok(Self(w))
    }

    pub fn uniform(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidWeights("no weights given"));
        }
        Self::new(Vector::from_element(r, 1.0 / r as f64))
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `f(x) = β̄₀ + β̄₁'x + x'B̄x` with symmetric `B̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    pub beta0: f64,
    pub beta1: Vector,
    pub quadratic: Matrix,
}

impl QuadraticObjective {
    pub fn new(beta0: f64, beta1: Vector, quadratic: Matrix) -> Result<Self> {
        let n = beta1.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if quadratic.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                what: "quadratic term",
                expected: n,
                found: quadratic.nrows(),
            });
        }
        if !(beta0.is_finite() && all_finite(beta1.iter()) && all_finite(quadratic.iter())) {
            return Err(Error::NonFinite("objective coefficients"));
        }
        let quadratic = crate::linalg::symmetrize(&quadratic);
        Ok(Self {
            beta0,
            beta1,
            quadratic,
        })
    }

    pub fn factors(&self) -> usize {
        self.beta1.len()
    }

    /// Shorthand for [`evaluate_functional`].
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        evaluate_functional(self, x)
    }

    /// `β̄₁ + 2B̄x`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.beta1 + (&self.quadratic * x) * 2.0
    }
}

/// `β̄₀ = Σ wₖβ₀ₖ`, `β̄₁ = Σ wₖβ₁ₖ`, `B̄ = Σ wₖBₖ`.
pub fn weighted_objective(w: &WeightVector, b: &CoefficientMatrix) -> Result<QuadraticObjective> {
    if w.len() != b.responses() {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: b.responses(),
            found: w.len(),
        });
    }
    let n = b.factors();
    let mut beta0 = 0.0;
    let mut beta1 = Vector::zeros(n);
    let mut quadratic = Matrix::zeros(n, n);
    for (k, &wk) in w.as_vector().iter().enumerate() {
        let resp = split_coefficients(b, k)?;
        beta0 += wk * resp.intercept;
        beta1 += resp.linear * wk;
        quadratic += resp.quadratic * wk;
    }
    Ok(QuadraticObjective {
        beta0,
        beta1,
        quadratic,
    })
}

/// `β̄₀ + β̄₁'x + x'B̄x`.
pub fn evaluate_functional(obj: &QuadraticObjective, x: &[f64]) -> Result<f64> {
    if x.len() != obj.factors() {
        return Err(Error::DimensionMismatch {
            what: "factor vector",
            expected: obj.factors(),
            found: x.len(),
        });
    }
    let x = Vector::from_column_slice(x);
    Ok(obj.beta0 + obj.beta1.dot(&x) + x.dot(&(&obj.quadratic * &x)))
}

/// A scalarizing functional `f(Ŷ(x); B)` with the derivatives the KKT
/// sensitivity needs.
pub trait Functional {
    fn value(&self, b: &CoefficientMatrix, x: &[f64]) -> f64;

    /// `∇ₓ f`, length `n`.
    fn gradient(&self, b: &CoefficientMatrix, x: &[f64]) -> Vector;

    /// `∇²ₓ f`, `n × n`.
    fn hessian(&self, b: &CoefficientMatrix, x: &[f64]) -> Matrix;

    /// `∂(∇ₓ f)/∂vec'(B)`, `n × p·r` with column-stacked `vec(B)`.
    fn coefficient_gradient(&self, b: &CoefficientMatrix, x: &[f64]) -> Matrix;
}

/// The weighted-sum functional `Σ wₖŶₖ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSum(pub WeightVector);

impl Functional for WeightedSum {
    fn value(&self, b: &CoefficientMatrix, x: &[f64]) -> f64 {
        let z = crate::model::basis_vector(x);
        (b.matrix().tr_mul(&z)).dot(self.0.as_vector())
    }

    // Gradient as M(x) Σ wₖβₖ.
    fn gradient(&self, b: &CoefficientMatrix, x: &[f64]) -> Vector {
        basis_jacobian(x) * (b.matrix() * self.0.as_vector())
    }

    // Second derivatives read straight off the coefficient columns:
    // ∂²/∂xᵢ² = 2βᵢᵢ, ∂²/∂xᵢ∂xⱼ = βᵢⱼ.
    fn hessian(&self, b: &CoefficientMatrix, _x: &[f64]) -> Matrix {
        let n = b.factors();
        let beta = b.matrix() * self.0.as_vector();
        let mut h = Matrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = 2.0 * beta[1 + n + i];
        }
        for (t, (i, j)) in cross_pairs(n).enumerate() {
            h[(i, j)] = beta[1 + 2 * n + t];
            h[(j, i)] = beta[1 + 2 * n + t];
        }
        h
    }

    fn coefficient_gradient(&self, b: &CoefficientMatrix, x: &[f64]) -> Matrix {
        let m = basis_jacobian(x);
        let p = b.terms();
        let mut g = Matrix::zeros(m.nrows(), p * b.responses());
        for (k, &wk) in self.0.as_vector().iter().enumerate() {
            g.view_mut((0, k * p), (m.nrows(), p)).copy_from(&(&m * wk));
        }
        g
    }
}

/// `a` dominates `b` when `a ≤ b` componentwise and `a ≠ b`.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a != b
}

/// Indices of the non-dominated candidates, ascending. Exact duplicates never
/// dominate each other, so all copies of a non-dominated vector are kept.
pub fn pareto_filter(candidates: &[Vec<f64>]) -> Result<Vec<usize>> {
    let first = candidates.first().ok_or(Error::EmptyInput)?;
    let r = first.len();
    for c in candidates {
        if c.len() != r {
            return Err(Error::DimensionMismatch {
                what: "candidate response vector",
                expected: r,
                found: c.len(),
            });
        }
        if !all_finite(c) {
            return Err(Error::NonFinite("candidate response vector"));
        }
    }
    // Sorting lexicographically puts every dominator before what it dominates,
    // so each candidate only needs checking against the current front.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[a]
            .iter()
            .zip(&candidates[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        if !front
            .iter()
            .any(|&j| dominates(&candidates[j], &candidates[i]))
        {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front)
}
