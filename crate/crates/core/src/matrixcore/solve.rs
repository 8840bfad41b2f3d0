use super::{frobenius_norm, require_square, DenseMatrix};
use crate::error::{Error, Result};

/// In-place LU with partial pivoting. Returns the row permutation and the
/// sign of the permutation, or the failing column when a pivot falls to or
/// below `threshold`.
fn lu_in_place(a: &mut DenseMatrix, threshold: f64) -> std::result::Result<(Vec<usize>, f64), usize> {
    let n = a.rows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let (p, pmax) = (k..n).fold((k, -1.0), |(bi, bv), i| {
            let v = a[(i, k)].abs();
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        });
        if pmax <= threshold {
            return Err(k);
        }
        if p != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = tmp;
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let pivot = a[(k, k)];
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            a[(i, k)] = f;
            for j in k + 1..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
            }
        }
    }
    Ok((perm, sign))
}

/// Solves `a * x = b` for square `a` by Gaussian elimination with partial
/// pivoting; `b` may have several columns.
pub fn gauss_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = require_square("gauss_solve", a)?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            op: "gauss_solve",
            expected: format!("right-hand side with {n} rows"),
            found: format!("{}x{}", b.rows(), b.cols()),
        });
    }
    let threshold = 1e-13 * frobenius_norm(a);
    let mut lu = a.clone();
    let (perm, _) = lu_in_place(&mut lu, threshold)
        .map_err(|k| Error::Singular(format!("gauss_solve: pivot in column {k} below 1e-13 * ||A||_F")))?;
    let k = b.cols();
    let mut x = DenseMatrix::zeros(n, k);
    for c in 0..k {
        let mut y: Vec<f64> = perm.iter().map(|&p| b[(p, c)]).collect();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= lu[(i, j)] * y[j];
            }
            y[i] = s / lu[(i, i)];
        }
        for i in 0..n {
            x[(i, c)] = y[i];
        }
    }
    if !x.is_finite() {
        return Err(Error::Singular("gauss_solve: solution overflowed".into()));
    }
    Ok(x)
}

/// Determinant via partially pivoted LU. Exactly singular matrices give 0.
pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    let n = require_square("determinant", a)?;
    let mut lu = a.clone();
    match lu_in_place(&mut lu, 0.0) {
        Ok((_, sign)) => Ok((0..n).fold(sign, |d, i| d * lu[(i, i)])),
        Err(_) => Ok(0.0),
    }
}

/// Thomas algorithm for a tridiagonal system. `sub[i]` multiplies `x[i]`
/// in row `i + 1`; `sup[i]` multiplies `x[i + 1]` in row `i`.
pub fn tridiag_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || sub.len() + 1 != n.max(1) || sup.len() + 1 != n.max(1) {
        return Err(Error::DimensionMismatch {
            op: "tridiag_solve",
            expected: format!("diag/rhs of length {n}, sub/super of length {}", n.saturating_sub(1)),
            found: format!("sub {}, diag {}, super {}, rhs {}", sub.len(), diag.len(), sup.len(), rhs.len()),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::Singular("tridiag_solve: zero pivot in row 0".into()));
    }
    if n > 1 {
        c[0] = sup[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::Singular(format!("tridiag_solve: zero pivot in row {i}")));
        }
        if i + 1 < n {
            c[i] = sup[i] / pivot;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("tridiag_solve: solution overflowed".into()));
    }
    Ok(d)
}
