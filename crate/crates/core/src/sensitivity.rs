//! Derivative of the constrained optimum with respect to the coefficients.
//!
//! Differentiating the active KKT system
//!
//! ```text
//! ∇ₓf(x; B) + 2λx = 0,    ‖x‖² − c² = 0
//! ```
//!
//! with respect to `vec(B)` gives the bordered system
//! `[[P, Q], [Q', 0]] [∂x; ∂λ] = −[G; 0]` with `P = ∂²L/∂x∂x'`, `Q = 2x*` and
//! `G = ∂²L/∂x∂vec'(B)`. When the constraint is inactive the border drops out
//! and `∂x = −P⁻¹G`.

use crate::linalg::{kron, VecOrdering};
use crate::model::{basis_jacobian, n_terms, CoefficientMatrix};
use crate::scalarize::{weighted_objective, Functional, QuadraticObjective, WeightVector};
use crate::solver::{solve_sphere, KktPoint, SphereRegion};
use crate::{Error, Matrix, Result, Vector};

/// Relative strict-complementarity margin required before differentiating.
pub const COMPLEMENTARITY_GUARD: f64 = 1e-8;

/// Second derivatives of the Lagrangian at a KKT point.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianBlocks {
    /// `∂²L/∂x∂x'`, `n × n`.
    pub p: Matrix,
    /// `∂²L/∂λ∂x = 2x*`.
    pub q: Vector,
    /// `∂²L/∂x∂vec'(B)`, `n × p·r`, column-stacked.
    pub g: Matrix,
    pub active: bool,
    pub strict_margin: f64,
    pub region: SphereRegion,
    pub responses: usize,
}

/// `∂x*/∂vec(B)` and `∂λ*/∂vec(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityJacobian {
    /// `n × p·r`.
    pub jx: Matrix,
    /// Gradient of `λ*`, length `p·r`; zero when the constraint is inactive.
    pub jlambda: Vector,
    pub active: bool,
    pub terms: usize,
    pub responses: usize,
    pub ordering: VecOrdering,
}

impl SensitivityJacobian {
    /// `x*'J_x`, which vanishes on the sphere.
    pub fn tangency(&self, x_star: &Vector) -> Vector {
        self.jx.tr_mul(x_star)
    }
}

fn require_positive_definite(p: &Matrix) -> Result<()> {
    p.clone()
        .cholesky()
        .map(|_| ())
        .ok_or(Error::NotPositiveDefinite("Hessian of the Lagrangian"))
}

/// Closed-form blocks for the weighted-sum functional:
/// `P = 2B̄ + 2λ*I`, `Q = 2x*`, `G = w' ⊗ M(x*)`.
pub fn lagrangian_blocks(
    obj: &QuadraticObjective,
    w: &WeightVector,
    point: &KktPoint,
    region: &SphereRegion,
) -> Result<LagrangianBlocks> {
    let n = obj.factors();
    if point.x_star.len() != n {
        return Err(Error::DimensionMismatch {
            what: "KKT point",
            expected: n,
            found: point.x_star.len(),
        });
    }
    let p = &obj.quadratic * 2.0 + Matrix::identity(n, n) * (2.0 * point.lambda_star);
    require_positive_definite(&p)?;
    let weights = Matrix::from_row_slice(1, w.len(), w.as_vector().as_slice());
    let g = kron(&weights, &basis_jacobian(point.x_star.as_slice()));
    Ok(LagrangianBlocks {
        p,
        q: &point.x_star * 2.0,
        g,
        active: point.active,
        strict_margin: point.residuals.strict_margin,
        region: *region,
        responses: w.len(),
    })
}

/// Blocks assembled from a functional's own derivatives.
pub fn lagrangian_blocks_generic<F: Functional + ?Sized>(
    functional: &F,
    coefficients: &CoefficientMatrix,
    point: &KktPoint,
    region: &SphereRegion,
) -> Result<LagrangianBlocks> {
    let n = coefficients.factors();
    if point.x_star.len() != n {
        return Err(Error::DimensionMismatch {
            what: "KKT point",
            expected: n,
            found: point.x_star.len(),
        });
    }
    let x = point.x_star.as_slice();
    let p =
        functional.hessian(coefficients, x) + Matrix::identity(n, n) * (2.0 * point.lambda_star);
    require_positive_definite(&p)?;
    Ok(LagrangianBlocks {
        p,
        q: &point.x_star * 2.0,
        g: functional.coefficient_gradient(coefficients, x),
        active: point.active,
        strict_margin: point.residuals.strict_margin,
        region: *region,
        responses: coefficients.responses(),
    })
}

/// Block inverse of `[[P, Q], [Q', 0]]` for symmetric positive definite `P`:
///
/// ```text
/// [ (I − P⁻¹Q s⁻¹Q')P⁻¹   P⁻¹Q s⁻¹ ]
/// [ s⁻¹Q'P⁻¹              −s⁻¹     ],   s = Q'P⁻¹Q
/// ```
pub fn bordered_inverse(p: &Matrix, q: &Vector) -> Result<Matrix> {
    let n = q.len();
    if p.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "bordered matrix block",
            expected: n,
            found: p.nrows(),
        });
    }
    let chol = p.clone().cholesky().ok_or(Error::NotPositiveDefinite(
        "leading block of the bordered matrix",
    ))?;
    if q.iter().all(|&v| v == 0.0) {
        return Err(Error::SingularBorder);
    }
    let p_inv = chol.inverse();
    let p_inv_q = &p_inv * q;
    let s = q.dot(&p_inv_q);
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::SingularBorder);
    }
    let top_left = (Matrix::identity(n, n) - &p_inv_q * q.transpose() / s) * &p_inv;
    let mut out = Matrix::zeros(n + 1, n + 1);
    out.view_mut((0, 0), (n, n)).copy_from(&top_left);
    for i in 0..n {
        out[(i, n)] = p_inv_q[i] / s;
        out[(n, i)] = p_inv_q[i] / s;
    }
    out[(n, n)] = -1.0 / s;
    Ok(out)
}

fn check_margin(blocks: &LagrangianBlocks) -> Result<()> {
    let c2 = blocks.region.radius() * blocks.region.radius();
    let threshold = COMPLEMENTARITY_GUARD * c2.max(1.0);
    if blocks.strict_margin.is_nan() || blocks.strict_margin <= threshold {
        return Err(Error::DegenerateComplementarity {
            margin: blocks.strict_margin,
        });
    }
    Ok(())
}

fn jacobian_shape(blocks: &LagrangianBlocks) -> (usize, usize) {
    let n = blocks.q.len();
    (n_terms(n), blocks.responses)
}

/// `∂x*/∂vec(B)` from the block-inverse formula
/// `−[I − P⁻¹Q(Q'P⁻¹Q)⁻¹Q']P⁻¹G` on the boundary and `−P⁻¹G` inside.
pub fn solution_jacobian(blocks: &LagrangianBlocks) -> Result<SensitivityJacobian> {
    check_margin(blocks)?;
    let n = blocks.q.len();
    let (terms, responses) = jacobian_shape(blocks);
    let (jx, jlambda) = if blocks.active {
        let inv = bordered_inverse(&blocks.p, &blocks.q)?;
        let top_left = inv.view((0, 0), (n, n));
        let bottom_left = inv.view((n, 0), (1, n));
        let jx = -(top_left * &blocks.g);
        let jlambda: Vector = -(bottom_left * &blocks.g).transpose().column(0).into_owned();
        (jx, jlambda)
    } else {
        let chol = blocks
            .p
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite("Hessian of the Lagrangian"))?;
        (-chol.solve(&blocks.g), Vector::zeros(blocks.g.ncols()))
    };
    Ok(SensitivityJacobian {
        jx,
        jlambda,
        active: blocks.active,
        terms,
        responses,
        ordering: VecOrdering::ColumnStacked,
    })
}

/// The same derivative obtained by LU-solving the bordered linear system with
/// all `p·r` right-hand sides at once.
pub fn bordered_system_jacobian(blocks: &LagrangianBlocks) -> Result<SensitivityJacobian> {
    check_margin(blocks)?;
    let n = blocks.q.len();
    let (terms, responses) = jacobian_shape(blocks);
    let cols = blocks.g.ncols();
    let (jx, jlambda) = if blocks.active {
        let mut k = Matrix::zeros(n + 1, n + 1);
        k.view_mut((0, 0), (n, n)).copy_from(&blocks.p);
        for i in 0..n {
            k[(i, n)] = blocks.q[i];
            k[(n, i)] = blocks.q[i];
        }
        let mut rhs = Matrix::zeros(n + 1, cols);
        rhs.view_mut((0, 0), (n, cols)).copy_from(&(-&blocks.g));
        let sol = k.lu().solve(&rhs).ok_or(Error::SingularBorder)?;
        (
            sol.view((0, 0), (n, cols)).into_owned(),
            sol.row(n).transpose(),
        )
    } else {
        let sol = blocks
            .p
            .clone()
            .lu()
            .solve(&(-&blocks.g))
            .ok_or(Error::NotPositiveDefinite("Hessian of the Lagrangian"))?;
        (sol, Vector::zeros(cols))
    };
    Ok(SensitivityJacobian {
        jx,
        jlambda,
        active: blocks.active,
        terms,
        responses,
        ordering: VecOrdering::ColumnStacked,
    })
}

/// Weighted-sum closed form `S⁻¹(x*x*'S⁻¹ / x*'S⁻¹x* − I)(w' ⊗ M(x*))` with
/// `S = 2B̄ + 2λ*I`; `−S⁻¹(w' ⊗ M(x*))` when the constraint is inactive.
pub fn weighted_sum_jacobian(
    obj: &QuadraticObjective,
    w: &WeightVector,
    point: &KktPoint,
) -> Result<Matrix> {
    let n = obj.factors();
    let s = &obj.quadratic * 2.0 + Matrix::identity(n, n) * (2.0 * point.lambda_star);
    let s_inv = s
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("Hessian of the Lagrangian"))?
        .inverse();
    let weights = Matrix::from_row_slice(1, w.len(), w.as_vector().as_slice());
    let g = kron(&weights, &basis_jacobian(point.x_star.as_slice()));
    if !point.active {
        return Ok(-(&s_inv * g));
    }
    let x = &point.x_star;
    let s_inv_x = &s_inv * x;
    let denom = x.dot(&s_inv_x);
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::SingularBorder);
    }
    let inner = x * s_inv_x.transpose() / denom - Matrix::identity(n, n);
    Ok(&s_inv * inner * g)
}

/// Central-difference Jacobian: perturb each entry of `vec(B)` by `±h`,
/// rebuild the weighted objective and re-solve.
pub fn fd_solution_jacobian(
    coefficients: &CoefficientMatrix,
    w: &WeightVector,
    region: &SphereRegion,
    h: f64,
) -> Result<SensitivityJacobian> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be positive",
        ));
    }
    let base = solve_sphere(&weighted_objective(w, coefficients)?, region)?;
    let c2 = region.radius() * region.radius();
    let margin = base.residuals.strict_margin;
    if margin.is_nan() || margin <= COMPLEMENTARITY_GUARD * c2.max(1.0) {
        return Err(Error::DegenerateComplementarity {
            margin: base.residuals.strict_margin,
        });
    }
    let terms = coefficients.terms();
    let vec_b = coefficients.vec();
    let n = coefficients.factors();
    let mut jx = Matrix::zeros(n, vec_b.len());
    let mut jlambda = Vector::zeros(vec_b.len());
    for idx in 0..vec_b.len() {
        let plus_value = vec_b[idx] + h;
        let minus_value = vec_b[idx] - h;
        let span = plus_value - minus_value;
        if span == 0.0 || !span.is_finite() {
            return Err(Error::StepTooSmall);
        }
        let mut plus = vec_b.clone();
        plus[idx] = plus_value;
        let mut minus = vec_b.clone();
        minus[idx] = minus_value;
        let sp = solve_sphere(
            &weighted_objective(w, &CoefficientMatrix::from_vec(&plus, terms)?)?,
            region,
        )?;
        let sm = solve_sphere(
            &weighted_objective(w, &CoefficientMatrix::from_vec(&minus, terms)?)?,
            region,
        )?;
        if sp.active != base.active || sm.active != base.active {
            return Err(Error::ActivityChanged);
        }
        jx.set_column(idx, &((&sp.x_star - &sm.x_star) / span));
        jlambda[idx] = (sp.lambda_star - sm.lambda_star) / span;
    }
    Ok(SensitivityJacobian {
        jx,
        jlambda,
        active: base.active,
        terms,
        responses: coefficients.responses(),
        ordering: VecOrdering::ColumnStacked,
    })
}

/// Solve, assemble the closed-form blocks and differentiate in one call.
pub fn optimum_jacobian(
    coefficients: &CoefficientMatrix,
    w: &WeightVector,
    region: &SphereRegion,
) -> Result<(KktPoint, SensitivityJacobian)> {
    let obj = weighted_objective(w, coefficients)?;
    let point = solve_sphere(&obj, region)?;
    let blocks = lagrangian_blocks(&obj, w, &point, region)?;
    let jac = solution_jacobian(&blocks)?;
    Ok((point, jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_factor(b0: f64, b1: f64, b11: f64) -> CoefficientMatrix {
        CoefficientMatrix::new(Matrix::from_column_slice(3, 1, &[b0, b1, b11])).unwrap()
    }

    #[test]
    fn bordered_inverse_example() {
        let inv = bordered_inverse(
            &Matrix::identity(2, 2),
            &Vector::from_column_slice(&[1.0, 0.0]),
        )
        .unwrap();
        let expected =
            Matrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0]);
        assert_abs_diff_eq!(inv, expected, epsilon = 1e-15);
    }

    #[test]
    fn bordered_inverse_errors() {
        assert_eq!(
            bordered_inverse(&Matrix::identity(2, 2), &Vector::zeros(2)),
            Err(Error::SingularBorder)
        );
        assert!(matches!(
            bordered_inverse(&-Matrix::identity(2, 2), &Vector::from_element(2, 1.0)),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn interior_one_factor_closed_form() {
        // x* = −β₁/(2β₁₁) = 1 at (0, −2, 1).
        let b = one_factor(0.0, -2.0, 1.0);
        let w = WeightVector::uniform(1).unwrap();
        let region = SphereRegion::new(2.0).unwrap();
        let (point, jac) = optimum_jacobian(&b, &w, &region).unwrap();
        assert!(!point.active);
        assert_abs_diff_eq!(jac.jx[(0, 0)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jac.jx[(0, 1)], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(jac.jx[(0, 2)], -1.0, epsilon = 1e-12);
        assert_eq!(jac.jlambda, Vector::zeros(3));

        let fd = fd_solution_jacobian(&b, &w, &region, 1e-6).unwrap();
        assert_abs_diff_eq!(fd.jx, jac.jx, epsilon = 1e-7);
    }

    #[test]
    fn lambda_gradient_on_the_boundary() {
        // x² − 2x on |x| ≤ 0.5: λ = −(β₁ + 2β₁₁c)/(2c), so ∂λ/∂β₁ = −1/(2c)
        // and ∂λ/∂β₁₁ = −1.
        let b = one_factor(0.0, -2.0, 1.0);
        let w = WeightVector::uniform(1).unwrap();
        let region = SphereRegion::new(0.5).unwrap();
        let (point, jac) = optimum_jacobian(&b, &w, &region).unwrap();
        assert!(point.active);
        assert_abs_diff_eq!(jac.jx, Matrix::zeros(1, 3), epsilon = 1e-14);
        assert_abs_diff_eq!(jac.jlambda[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(jac.jlambda[2], -1.0, epsilon = 1e-12);
        let fd = fd_solution_jacobian(&b, &w, &region, 1e-6).unwrap();
        assert_abs_diff_eq!(fd.jlambda, jac.jlambda, epsilon = 1e-7);
    }

    #[test]
    fn zero_g_gives_zero_jacobian() {
        let blocks = LagrangianBlocks {
            p: Matrix::identity(2, 2) * 3.0,
            q: Vector::from_column_slice(&[2.0, 0.0]),
            g: Matrix::zeros(2, 12),
            active: true,
            strict_margin: 1.0,
            region: SphereRegion::new(1.0).unwrap(),
            responses: 2,
        };
        let jac = solution_jacobian(&blocks).unwrap();
        assert_eq!(jac.jx, Matrix::zeros(2, 12));
        assert_eq!(jac.jlambda, Vector::zeros(12));
    }

    #[test]
    fn unit_weight_selects_first_block() {
        let b = CoefficientMatrix::new(Matrix::from_fn(6, 2, |i, k| {
            0.1 * (i as f64 + 1.0) - 0.3 * k as f64 + if i == 3 || i == 4 { 1.0 } else { 0.0 }
        }))
        .unwrap();
        let w = WeightVector::unit(0, 2).unwrap();
        let obj = weighted_objective(&w, &b).unwrap();
        let region = SphereRegion::new(1.0).unwrap();
        let point = solve_sphere(&obj, &region).unwrap();
        let blocks = lagrangian_blocks(&obj, &w, &point, &region).unwrap();
        let m = basis_jacobian(point.x_star.as_slice());
        assert_eq!(blocks.g.columns(0, 6), m);
        assert_eq!(blocks.g.columns(6, 6), Matrix::zeros(2, 6));
    }

    #[test]
    fn inactive_blocks_drop_the_multiplier() {
        let b = one_factor(0.0, -2.0, 1.5);
        let w = WeightVector::uniform(1).unwrap();
        let obj = weighted_objective(&w, &b).unwrap();
        let region = SphereRegion::new(5.0).unwrap();
        let point = solve_sphere(&obj, &region).unwrap();
        let blocks = lagrangian_blocks(&obj, &w, &point, &region).unwrap();
        assert_eq!(blocks.p, &obj.quadratic * 2.0);
    }

    #[test]
    fn degenerate_complementarity_is_rejected() {
        // Unconstrained minimum exactly on the sphere: λ* = 0 and the slack is 0.
        let b = one_factor(0.0, -2.0, 1.0);
        let w = WeightVector::uniform(1).unwrap();
        let region = SphereRegion::new(1.0).unwrap();
        assert!(matches!(
            optimum_jacobian(&b, &w, &region),
            Err(Error::DegenerateComplementarity { .. })
        ));
        assert!(matches!(
            fd_solution_jacobian(&b, &w, &region, 1e-6),
            Err(Error::DegenerateComplementarity { .. })
        ));
    }

    #[test]
    fn fd_step_validation() {
        let b = one_factor(0.0, -2.0, 1.0);
        let w = WeightVector::uniform(1).unwrap();
        let region = SphereRegion::new(2.0).unwrap();
        assert!(matches!(
            fd_solution_jacobian(&b, &w, &region, 0.0),
            Err(Error::InvalidArgument(_))
        ));
        let big = one_factor(1e300, -2.0, 1.0);
        assert_eq!(
            fd_solution_jacobian(&big, &w, &region, 1e-300),
            Err(Error::StepTooSmall)
        );
    }
}
