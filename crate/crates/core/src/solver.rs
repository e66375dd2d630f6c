//! Exact minimization of a quadratic objective over the ball `‖x‖ ≤ c`.
//!
//! This is the trust-region subproblem. With `B̄ = VΛV'` and `a = V'β̄₁/2`, the
//! stationary points on the sphere are `x(λ) = −V(Λ + λI)⁻¹a` where `λ` solves
//! the secular equation `‖x(λ)‖ = c` on `λ > max(0, −λ_min)`. The root is found
//! by Newton steps on `1/c − 1/‖x(λ)‖` inside a bisection bracket.

use crate::linalg::all_finite;
use crate::scalarize::QuadraticObjective;
// Unused whenever std is linked; its inherent float methods take precedence.
use crate::{Error, Matrix, Result, Vector};
#[allow(unused_imports)]
use num_traits::Float;

/// Multipliers below this are reported as zero.
pub const LAMBDA_SNAP: f64 = 1e-10;
/// `|‖x(λ)‖ − c| ≤ SECULAR_TOLERANCE · c` ends the root search.
pub const SECULAR_TOLERANCE: f64 = 1e-12;
pub const MAX_SECULAR_ITERATIONS: usize = 200;
/// Relative size below which the linear term counts as orthogonal to the
/// lowest eigenspace.
pub const HARD_CASE_TOLERANCE: f64 = 1e-12;

/// The experimental region `{x : x'x ≤ c²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereRegion {
    radius: f64,
}

impl SphereRegion {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(
                "sphere radius must be positive and finite",
            ));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Distance from the boundary below which the constraint counts as active.
    pub fn activity_tolerance(&self) -> f64 {
        1e-8 * self.radius * self.radius
    }

    /// `c² − ‖x‖²`.
    pub fn slack(&self, x: &Vector) -> f64 {
        self.radius * self.radius - x.norm_squared()
    }
}

/// First-order condition residuals at a candidate `(x, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖∇f + 2λx‖∞`.
    pub stationarity: f64,
    /// `max(0, ‖x‖² − c²)`.
    pub feasibility: f64,
    /// `|λ(‖x‖² − c²)|`.
    pub complementarity: f64,
    /// How far `(λ, c² − ‖x‖²)` is from having both parts zero: `λ` on the
    /// boundary, the slack in the interior. Strict complementarity needs it
    /// bounded away from zero.
    pub strict_margin: f64,
}

/// A certified KKT point of the sphere-constrained program.
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub x_star: Vector,
    pub lambda_star: f64,
    pub active: bool,
    pub residuals: KktResiduals,
}

/// Residuals of the KKT system for `(point.x_star, point.lambda_star)`.
pub fn kkt_residuals(
    point: &KktPoint,
    obj: &QuadraticObjective,
    region: &SphereRegion,
) -> KktResiduals {
    residuals_at(&point.x_star, point.lambda_star, obj, region)
}

pub fn residuals_at(
    x: &Vector,
    lambda: f64,
    obj: &QuadraticObjective,
    region: &SphereRegion,
) -> KktResiduals {
    let grad = obj.gradient(x) + x * (2.0 * lambda);
    let stationarity = grad.amax();
    let gap = x.norm_squared() - region.radius * region.radius;
    let active = gap.abs() <= region.activity_tolerance();
    let strict_margin = if active { lambda } else { -gap };
    KktResiduals {
        stationarity,
        feasibility: gap.max(0.0),
        complementarity: (lambda * gap).abs(),
        strict_margin,
    }
}

/// Global minimizer of `β̄₁'x + x'B̄x` over `‖x‖ ≤ c` and its multiplier.
///
/// The minimizer is unique unless the problem falls in the hard case, which is
/// reported as [`Error::NonUniqueMinimizer`].
pub fn solve_sphere(obj: &QuadraticObjective, region: &SphereRegion) -> Result<KktPoint> {
    let n = obj.factors();
    if obj.quadratic.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            what: "quadratic term",
            expected: n,
            found: obj.quadratic.nrows(),
        });
    }
    if !(all_finite(obj.beta1.iter()) && all_finite(obj.quadratic.iter())) {
        return Err(Error::NonFinite("objective coefficients"));
    }
    let c = region.radius;

    let eig = obj.quadratic.clone().symmetric_eigen();
    let values = eig.eigenvalues;
    let vectors = eig.eigenvectors;
    let a = vectors.tr_mul(&obj.beta1) * 0.5;
    let lambda_min = values.min();
    let scale = values.amax();

    let (x, lambda) = if lambda_min > 0.0 && interior_norm(&values, &a) <= c {
        (-(&vectors * a.component_div(&values)), 0.0)
    } else {
        boundary_solution(&values, &vectors, &a, lambda_min, scale, c)?
    };

    let lambda = if lambda < LAMBDA_SNAP { 0.0 } else { lambda };
    let residuals = residuals_at(&x, lambda, obj, region);
    let active = (x.norm_squared() - c * c).abs() <= region.activity_tolerance();
    Ok(KktPoint {
        x_star: x,
        lambda_star: lambda,
        active,
        residuals,
    })
}

fn interior_norm(values: &Vector, a: &Vector) -> f64 {
    a.component_div(values).norm()
}

fn boundary_solution(
    values: &Vector,
    vectors: &Matrix,
    a: &Vector,
    lambda_min: f64,
    scale: f64,
    c: f64,
) -> Result<(Vector, f64)> {
    // Work with shifted eigenvalues d = Λ − λ_min ≥ 0 and μ = λ + λ_min, so the
    // denominators dᵢ + μ never cancel catastrophically near μ = 0.
    let eig_tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let shifted = values.map(|v| (v - lambda_min).max(0.0));
    let in_low_space = |i: usize| shifted[i] <= eig_tol;
    let a_norm = a.norm();
    let low_norm = (0..a.len())
        .filter(|&i| in_low_space(i))
        .map(|i| a[i] * a[i])
        .sum::<f64>()
        .sqrt();
    let mu_floor = lambda_min.max(0.0);

    let norm_at = |mu: f64, skip_low: bool| -> f64 {
        (0..a.len())
            .filter(|&i| !(skip_low && in_low_space(i)))
            .map(|i| {
                let q = a[i] / (shifted[i] + mu);
                q * q
            })
            .sum::<f64>()
            .sqrt()
    };

    if lambda_min <= eig_tol && low_norm <= HARD_CASE_TOLERANCE * a_norm {
        // β̄₁ has no weight on the lowest eigenspace. If the remaining
        // components already fit inside the ball at λ = −λ_min, every
        // completion along that eigenspace is a global minimizer.
        if norm_at(mu_floor, true) <= c * (1.0 + SECULAR_TOLERANCE) {
            return Err(Error::NonUniqueMinimizer);
        }
    }

    // Bracket μ between the pole (or zero) and a point where ‖x‖ ≤ c.
    let mut lo = mu_floor;
    let mut hi = mu_floor + a_norm / c + scale.max(1.0);
    while norm_at(hi, false) > c {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NumericalFailure("secular equation bracket diverged"));
        }
    }

    let mut mu = if lo > 0.0 && norm_at(lo, false).is_finite() {
        lo
    } else {
        0.5 * (lo + hi)
    };
    let mut converged = false;
    for _ in 0..MAX_SECULAR_ITERATIONS {
        let norm = norm_at(mu, false);
        let err = norm - c;
        if err.abs() <= SECULAR_TOLERANCE * c {
            converged = true;
            break;
        }
        if err > 0.0 {
            lo = lo.max(mu);
        } else {
            hi = hi.min(mu);
        }
        // ψ(μ) = 1/c − 1/‖x‖, ψ'(μ) = −(Σ qᵢ²/(dᵢ+μ)) / ‖x‖³.
        let mut dnorm2 = 0.0;
        for i in 0..a.len() {
            let d = shifted[i] + mu;
            let q = a[i] / d;
            dnorm2 += q * q / d;
        }
        let psi = 1.0 / c - 1.0 / norm;
        let dpsi = -dnorm2 / (norm * norm * norm);
        let newton = mu - psi / dpsi;
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs() && !(mu > lo && mu < hi) {
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure("secular equation did not converge"));
    }

    let coeffs = Vector::from_fn(a.len(), |i, _| -a[i] / (shifted[i] + mu));
    let mut x = vectors * coeffs;
    let norm = x.norm();
    if norm > 0.0 {
        x *= c / norm;
    }
    Ok((x, (mu - lambda_min).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn obj1(b1: f64, b11: f64) -> QuadraticObjective {
        QuadraticObjective::new(
            0.0,
            Vector::from_element(1, b1),
            Matrix::from_element(1, 1, b11),
        )
        .unwrap()
    }

    #[test]
    fn interior_one_factor() {
        let p = solve_sphere(&obj1(-2.0, 1.0), &SphereRegion::new(2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x_star[0], 1.0, epsilon = 1e-14);
        assert_eq!(p.lambda_star, 0.0);
        assert!(!p.active);
    }

    #[test]
    fn boundary_one_factor() {
        // x² − 2x on |x| ≤ 0.5: x* = 0.5 and 2x + 2λx = 2 gives λ = 1.
        let p = solve_sphere(&obj1(-2.0, 1.0), &SphereRegion::new(0.5).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x_star[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.lambda_star, 1.0, epsilon = 1e-10);
        assert!(p.active);
        // Grid oracle.
        let mut best = (f64::INFINITY, 0.0);
        let mut x = -0.5;
        while x <= 0.5 + 1e-12 {
            let f = x * x - 2.0 * x;
            if f < best.0 {
                best = (f, x);
            }
            x += 1e-4;
        }
        assert_abs_diff_eq!(best.1, 0.5, epsilon = 1e-4);
    }

    #[test]
    fn hard_case_is_reported() {
        let obj = QuadraticObjective::new(
            0.0,
            Vector::zeros(2),
            Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0])),
        )
        .unwrap();
        assert_eq!(
            solve_sphere(&obj, &SphereRegion::new(1.0).unwrap()),
            Err(Error::NonUniqueMinimizer)
        );
    }

    #[test]
    fn concave_with_tilt_is_unique() {
        // −x² + 0.1x: minimum at the end of the ball opposite to the tilt.
        let p = solve_sphere(&obj1(0.1, -1.0), &SphereRegion::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x_star[0], -1.0, epsilon = 1e-12);
        // 0.1 − 2x + 2λx = 0 at x = −1 gives λ = 1.05.
        assert_abs_diff_eq!(p.lambda_star, 1.05, epsilon = 1e-10);
    }

    #[test]
    fn flat_direction_without_tilt_is_non_unique() {
        let obj = QuadraticObjective::new(
            0.0,
            Vector::from_column_slice(&[0.2, 0.0]),
            Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 0.0])),
        )
        .unwrap();
        assert_eq!(
            solve_sphere(&obj, &SphereRegion::new(1.0).unwrap()),
            Err(Error::NonUniqueMinimizer)
        );
    }

    #[test]
    fn hard_case_with_large_tail_is_unique() {
        // Linear term orthogonal to the negative eigenvector but too large for
        // the ball: the minimizer is on the boundary with λ > −λ_min.
        let obj = QuadraticObjective::new(
            0.0,
            Vector::from_column_slice(&[6.0, 0.0]),
            Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, -1.0])),
        )
        .unwrap();
        let p = solve_sphere(&obj, &SphereRegion::new(1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(p.x_star[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x_star[1], 0.0, epsilon = 1e-12);
        assert!(p.lambda_star > 1.0);
    }

    #[test]
    fn residual_examples() {
        let obj = QuadraticObjective::new(
            0.0,
            Vector::from_column_slice(&[0.3, -0.7]),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let region = SphereRegion::new(1.0).unwrap();
        let zero = KktPoint {
            x_star: Vector::zeros(2),
            lambda_star: 0.0,
            active: false,
            residuals: residuals_at(&Vector::zeros(2), 0.0, &obj, &region),
        };
        let r = kkt_residuals(&zero, &obj, &region);
        assert_eq!(r.stationarity, 0.7);
        assert_eq!(r.strict_margin, 1.0);

        let p = solve_sphere(&obj, &region).unwrap();
        let r = kkt_residuals(&p, &obj, &region);
        assert!(r.stationarity <= 1e-10 && r.feasibility <= 1e-10 && r.complementarity <= 1e-10);

        let mut moved = p.clone();
        moved.x_star[0] += 1e-4;
        let r = kkt_residuals(&moved, &obj, &region);
        // ∇f changes by 2B̄δ = 2e-4 in the first coordinate.
        assert_abs_diff_eq!(r.stationarity, 2e-4, epsilon = 1e-10);
    }

    #[test]
    fn invalid_region() {
        assert!(SphereRegion::new(0.0).is_err());
        assert!(SphereRegion::new(f64::NAN).is_err());
    }
}
