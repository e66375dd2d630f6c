#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsm_core::model::{n_terms, CoefficientMatrix};
use rsm_core::scalarize::WeightVector;
use rsm_core::{Matrix, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_coefficients(rng: &mut impl Rng, n: usize, r: usize) -> CoefficientMatrix {
    CoefficientMatrix::new(uniform_matrix(rng, n_terms(n), r)).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, r: usize) -> WeightVector {
    let raw: Vec<f64> = (0..r).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = w[..r - 1].iter().sum();
    w[r - 1] = 1.0 - head;
    WeightVector::from_slice(&w).unwrap()
}

pub fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix {
    let a = uniform_matrix(rng, n, n);
    &a * a.transpose() + Matrix::identity(n, n) * 0.5
}

/// Gauss–Jordan elimination with partial pivoting on plain rows.
pub fn gauss_jordan_inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| m[(i, j)]).collect();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        a[i][j] -= f * a[col][j];
                    }
                }
            }
        }
    }
    Some(Matrix::from_fn(n, n, |i, j| a[i][n + j]))
}

/// Least squares by modified Gram–Schmidt and back substitution.
pub fn mgs_least_squares(x: &Matrix, y: &Matrix) -> Matrix {
    let (rows, cols) = x.shape();
    let mut q: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| x[(i, j)]).collect())
        .collect();
    let mut r = vec![vec![0.0; cols]; cols];
    for j in 0..cols {
        for i in 0..j {
            let dot: f64 = (0..rows).map(|t| q[i][t] * q[j][t]).sum();
            r[i][j] = dot;
            for t in 0..rows {
                q[j][t] -= dot * q[i][t];
            }
        }
        let norm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        r[j][j] = norm;
        for v in q[j].iter_mut() {
            *v /= norm;
        }
    }
    let mut out = Matrix::zeros(cols, y.ncols());
    for k in 0..y.ncols() {
        let qty: Vec<f64> = (0..cols)
            .map(|j| (0..rows).map(|t| q[j][t] * y[(t, k)]).sum())
            .collect();
        for j in (0..cols).rev() {
            let mut s = qty[j];
            for i in (j + 1)..cols {
                s -= r[j][i] * out[(i, k)];
            }
            out[(j, k)] = s / r[j][j];
        }
    }
    out
}

/// `β̄₁'x + x'B̄x` with `B̄` rebuilt directly from the coefficient columns.
pub fn weighted_value(b: &CoefficientMatrix, w: &WeightVector, x: &[f64]) -> f64 {
    let n = x.len();
    let beta = b.matrix() * w.as_vector();
    let mut f = beta[0];
    for i in 0..n {
        f += beta[1 + i] * x[i] + beta[1 + n + i] * x[i] * x[i];
    }
    let mut t = 1 + 2 * n;
    for i in 0..n {
        for j in (i + 1)..n {
            f += beta[t] * x[i] * x[j];
            t += 1;
        }
    }
    f
}

/// Minimum of `f` over grid points of `[−c, c]ⁿ` inside the ball, `n ≤ 2`.
pub fn grid_minimum(f: impl Fn(&[f64]) -> f64, n: usize, c: f64, step: f64) -> f64 {
    let k = (c / step).floor() as i64;
    let mut best = f64::INFINITY;
    let inside = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() <= c * c;
    match n {
        1 => {
            for i in -k..=k {
                let x = [i as f64 * step];
                best = best.min(f(&x));
            }
        }
        2 => {
            for i in -k..=k {
                for j in -k..=k {
                    let x = [i as f64 * step, j as f64 * step];
                    if inside(&x) {
                        best = best.min(f(&x));
                    }
                }
            }
        }
        _ => panic!("grid oracle supports n ≤ 2"),
    }
    best
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// A random weighted-sum instance whose optimum is strictly complementary with
/// margin at least `margin`. Even `index` favours a convex interior optimum,
/// odd `index` an optimum on the sphere.
pub fn strictly_complementary_instance(
    rng: &mut impl Rng,
    index: usize,
    margin: f64,
) -> (
    CoefficientMatrix,
    WeightVector,
    rsm_core::solver::SphereRegion,
) {
    use rsm_core::sensitivity::optimum_jacobian;
    use rsm_core::solver::SphereRegion;
    loop {
        let n = rng.random_range(1..=4);
        let r = rng.random_range(1..=3);
        let mut m = uniform_matrix(rng, n_terms(n), r);
        let c = if index.is_multiple_of(2) {
            for k in 0..r {
                for i in 0..n {
                    m[(1 + n + i, k)] += 2.0;
                }
            }
            2.0
        } else {
            0.5
        };
        let b = CoefficientMatrix::new(m).unwrap();
        let w = random_weights(rng, r);
        let region = SphereRegion::new(c).unwrap();
        if let Ok((point, _)) = optimum_jacobian(&b, &w, &region) {
            let p = rsm_core::scalarize::weighted_objective(&w, &b)
                .unwrap()
                .quadratic
                * 2.0
                + Matrix::identity(n, n) * (2.0 * point.lambda_star);
            if point.residuals.strict_margin > margin && p.symmetric_eigenvalues().min() > 0.1 {
                return (b, w, region);
            }
        }
    }
}
