//! Small dense helpers shared by the modules: Kronecker products, the vec
//! commutation permutation and symmetry utilities.

use alloc::vec::Vec;

use crate::Matrix;

/// Stacking convention of a flattened `p × r` coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecOrdering {
    /// `vec(B)`: columns (responses) one after another; entry `(j, k)` at `k·p + j`.
    ColumnStacked,
    /// `vec(B')`: rows (terms) one after another; entry `(j, k)` at `j·r + k`.
    RowStacked,
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == 0.0 {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
        }
    }
    out
}

/// Permutation between the two stackings of a `rows × cols` matrix `A`.
///
/// Entry `t` of the returned table is the column-stacked (`vec A`) index of the
/// element that sits at position `t` of the row-stacked vector (`vec A'`).
pub fn commutation_permutation(rows: usize, cols: usize) -> Vec<usize> {
    let mut perm = Vec::with_capacity(rows * cols);
    for j in 0..rows {
        for k in 0..cols {
            perm.push(k * rows + j);
        }
    }
    perm
}

/// Reorders the columns of `m` so that new column `t` is old column `perm[t]`.
pub fn permute_columns(m: &Matrix, perm: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), perm.len(), |i, t| m[(i, perm[t])])
}

/// Symmetric reordering `m[perm, perm]`.
pub fn permute_symmetric(m: &Matrix, perm: &[usize]) -> Matrix {
    Matrix::from_fn(perm.len(), perm.len(), |a, b| m[(perm[a], perm[b])])
}

/// `(m + m') / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `m - m'`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub(crate) fn all_finite<'a>(values: impl IntoIterator<Item = &'a f64>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identity_blocks() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = Matrix::identity(2, 2);
        let k = kron(&a, &b);
        assert_eq!(k.shape(), (4, 4));
        assert_eq!(k[(0, 2)], 2.0);
        assert_eq!(k[(3, 1)], 3.0);
        assert_eq!(k[(1, 0)], 0.0);
    }

    #[test]
    fn commutation_maps_vec_to_vec_transpose() {
        let a = Matrix::from_fn(3, 2, |i, j| (10 * i + j) as f64);
        let vec_a: Vec<f64> = a.iter().copied().collect();
        let vec_at: Vec<f64> = a.transpose().iter().copied().collect();
        let perm = commutation_permutation(3, 2);
        let mapped: Vec<f64> = perm.iter().map(|&i| vec_a[i]).collect();
        assert_eq!(mapped, vec_at);
    }
}
