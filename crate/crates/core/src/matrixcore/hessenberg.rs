use super::{norm2, require_square, DenseMatrix};
use crate::error::Result;

/// Elementary reflector `I - tau * v * v^T` with `v[0] == 1`.
#[derive(Debug, Clone)]
pub(crate) struct Reflector {
    pub v: Vec<f64>,
    pub tau: f64,
    pub beta: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto `beta * e1`. Returns the identity
    /// (`tau == 0`) when the tail of `x` is already zero.
    pub fn new(x: &[f64]) -> Reflector {
        let alpha = x[0];
        let xnorm = norm2(&x[1..]);
        let mut v = vec![0.0; x.len()];
        v[0] = 1.0;
        if xnorm == 0.0 {
            return Reflector { v, tau: 0.0, beta: alpha };
        }
        let beta = -alpha.signum() * alpha.hypot(xnorm);
        let tau = (beta - alpha) / beta;
        let denom = alpha - beta;
        for (vi, xi) in v[1..].iter_mut().zip(&x[1..]) {
            *vi = xi / denom;
        }
        Reflector { v, tau, beta }
    }

    pub fn is_identity(&self) -> bool {
        self.tau == 0.0
    }

    /// Applies the reflector from the left to rows `r0..r0+len`, columns `cols`.
    pub fn apply_left(&self, m: &mut DenseMatrix, r0: usize, cols: std::ops::Range<usize>) {
        if self.is_identity() || cols.is_empty() {
            return;
        }
        // Row-wise passes keep the row-major storage contiguous.
        let mut w = vec![0.0; cols.len()];
        for (k, vk) in self.v.iter().enumerate() {
            let row = &m.row(r0 + k)[cols.clone()];
            for (wc, x) in w.iter_mut().zip(row) {
                *wc += vk * x;
            }
        }
        for (k, vk) in self.v.iter().enumerate() {
            let f = self.tau * vk;
            let row = &mut m.row_mut(r0 + k)[cols.clone()];
            for (x, wc) in row.iter_mut().zip(&w) {
                *x -= f * wc;
            }
        }
    }

    /// Applies the reflector from the right to columns `c0..c0+len`, rows `rows`.
    pub fn apply_right(&self, m: &mut DenseMatrix, c0: usize, rows: std::ops::Range<usize>) {
        if self.is_identity() {
            return;
        }
        for r in rows {
            let mut w = 0.0;
            for (k, vk) in self.v.iter().enumerate() {
                w += vk * m[(r, c0 + k)];
            }
            w *= self.tau;
            for (k, vk) in self.v.iter().enumerate() {
                m[(r, c0 + k)] -= vk * w;
            }
        }
    }
}

/// Reduces the diagonal window `lo..=hi` of `h` to upper Hessenberg form in
/// place, updating the whole matrix and accumulating into `q` so that
/// `q * h * q^T` is preserved.
pub(crate) fn reduce_window(h: &mut DenseMatrix, q: &mut DenseMatrix, lo: usize, hi: usize) {
    let n = h.rows();
    if hi < lo + 2 {
        return;
    }
    for j in lo..hi - 1 {
        let x: Vec<f64> = (j + 1..=hi).map(|i| h[(i, j)]).collect();
        let refl = Reflector::new(&x);
        if refl.is_identity() {
            continue;
        }
        refl.apply_left(h, j + 1, j..n);
        h[(j + 1, j)] = refl.beta;
        for i in j + 2..=hi {
            h[(i, j)] = 0.0;
        }
        refl.apply_right(h, j + 1, 0..n);
        refl.apply_right(q, j + 1, 0..n);
    }
}

/// Householder reduction to upper Hessenberg form: returns `(q, h)` with
/// `q` orthogonal and `a = q * h * q^T`.
pub fn hessenberg(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = require_square("hessenberg", a)?;
    let mut h = a.clone();
    let mut q = DenseMatrix::identity(n);
    if n > 0 {
        reduce_window(&mut h, &mut q, 0, n - 1);
    }
    Ok((q, h))
}
