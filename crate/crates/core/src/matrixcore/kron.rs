use super::{require_square, DenseMatrix};
use crate::error::{Error, Result};

/// Largest `m * n` for which vectorized Sylvester operators are formed.
pub const KRON_SIZE_LIMIT: usize = 20_000;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DenseMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Stacks the columns of `x` into one vector.
pub fn vec_columns(x: &DenseMatrix) -> Vec<f64> {
    let (m, n) = x.shape();
    let mut v = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            v.push(x[(i, j)]);
        }
    }
    v
}

/// Inverse of [`vec_columns`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            op: "unvec",
            expected: format!("{} entries", rows * cols),
            found: format!("{} entries", v.len()),
        });
    }
    DenseMatrix::from_fn(rows, cols, |i, j| v[j * rows + i])
}

/// The matrix `K = I_n ⊗ A + B^T ⊗ I_m`, so that
/// `K * vec(X) == vec(A X + X B)` for every `m x n` matrix `X`.
pub fn kron_vec_operator(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let m = require_square("kron_vec_operator", a)?;
    let n = require_square("kron_vec_operator", b)?;
    let size = m * n;
    if size > KRON_SIZE_LIMIT {
        return Err(Error::TooLarge { op: "kron_vec_operator", size, limit: KRON_SIZE_LIMIT });
    }
    let mut k = DenseMatrix::zeros(size, size);
    for blk in 0..n {
        for i in 0..m {
            for j in 0..m {
                k[(blk * m + i, blk * m + j)] += a[(i, j)];
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            let bqp = b[(q, p)];
            if bqp == 0.0 {
                continue;
            }
            for i in 0..m {
                k[(p * m + i, q * m + i)] += bqp;
            }
        }
    }
    Ok(k)
}
