use num_complex::Complex64;

use super::hessenberg::{reduce_window, Reflector};
use super::{frobenius_norm, norm2, require_square, DenseMatrix};
use crate::error::{Error, Result};

/// Real Schur factorization `a = q * t * q^T`.
///
/// `t` is upper quasi-triangular: 1x1 diagonal blocks carry real
/// eigenvalues, 2x2 blocks carry complex-conjugate pairs. Every 2x2 block is
/// in standard form `[[r, b], [c, r]]` with `b * c < 0`, so its eigenvalues
/// are `r ± i sqrt(-b c)`. For a rotation-like block (`b == -c`) this is
/// exactly the `[[Re, Im], [-Im, Re]]` pattern.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: DenseMatrix,
    pub t: DenseMatrix,
    pub eigenvalues: Vec<Complex64>,
}

impl SchurForm {
    /// Start indices and sizes (1 or 2) of the diagonal blocks of `t`.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        diagonal_blocks(&self.t)
    }
}

pub(crate) fn diagonal_blocks(t: &DenseMatrix) -> Vec<(usize, usize)> {
    let n = t.rows();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            out.push((i, 2));
            i += 2;
        } else {
            out.push((i, 1));
            i += 1;
        }
    }
    out
}

pub const DEFAULT_SCHUR_TOL: f64 = f64::EPSILON;

pub fn default_max_sweeps(n: usize) -> usize {
    40 * n.max(1)
}

/// Real Schur decomposition by Francis double-shift implicit QR.
///
/// Rows and columns that already isolate an eigenvalue are first permuted
/// out of the way (so triangular inputs, including lower triangular ones,
/// come back with their diagonal as exact eigenvalues). The remaining window
/// is reduced to Hessenberg form and iterated. A subdiagonal entry is set to
/// zero once `|h(i+1,i)| <= tol * (|h(i,i)| + |h(i+1,i+1)|)`.
pub fn schur_decompose(a: &DenseMatrix, max_sweeps: usize, tol: f64) -> Result<SchurForm> {
    let n = require_square("schur_decompose", a)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("schur tolerance must be positive, got {tol}")));
    }
    let mut t = a.clone();
    let mut q = DenseMatrix::identity(n);
    if n == 0 {
        return Ok(SchurForm { q, t, eigenvalues: Vec::new() });
    }
    let (lo, hi) = isolate(&mut t, &mut q);
    reduce_window(&mut t, &mut q, lo, hi);
    francis_qr(&mut t, &mut q, lo, hi, max_sweeps, tol)?;
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            t[(i, j)] = 0.0;
        }
    }
    let eigenvalues = block_eigenvalues(&t);
    Ok(SchurForm { q, t, eigenvalues })
}

/// Eigenvalues (with multiplicity) of a square matrix: the matrix is
/// balanced, then read off its real Schur form.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    let n = require_square("eigenvalues", a)?;
    let b = balance(a)?;
    Ok(schur_decompose(&b.matrix, default_max_sweeps(n), DEFAULT_SCHUR_TOL)?.eigenvalues)
}

fn block_eigenvalues(t: &DenseMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(t.rows());
    for (i, size) in diagonal_blocks(t) {
        if size == 1 {
            out.push(Complex64::new(t[(i, i)], 0.0));
        } else {
            let re = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let im = t[(i, i + 1)].abs().sqrt() * t[(i + 1, i)].abs().sqrt();
            out.push(Complex64::new(re, im));
            out.push(Complex64::new(re, -im));
        }
    }
    out
}

fn swap_rows_cols(h: &mut DenseMatrix, q: &mut DenseMatrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = h.rows();
    for c in 0..n {
        let tmp = h[(i, c)];
        h[(i, c)] = h[(j, c)];
        h[(j, c)] = tmp;
    }
    for r in 0..n {
        let tmp = h[(r, i)];
        h[(r, i)] = h[(r, j)];
        h[(r, j)] = tmp;
        let tmp = q[(r, i)];
        q[(r, i)] = q[(r, j)];
        q[(r, j)] = tmp;
    }
}

/// Symmetric permutation isolating eigenvalues: rows with no off-diagonal
/// entries in the active window go to the bottom, such columns to the left.
/// Returns the remaining active window `lo..=hi`.
fn isolate(h: &mut DenseMatrix, q: &mut DenseMatrix) -> (usize, usize) {
    let n = h.rows();
    let mut hi = n - 1;
    loop {
        let found = (0..=hi).rev().find(|&j| (0..=hi).all(|c| c == j || h[(j, c)] == 0.0));
        match found {
            Some(j) => {
                swap_rows_cols(h, q, j, hi);
                if hi == 0 {
                    return (0, 0);
                }
                hi -= 1;
            }
            None => break,
        }
    }
    let mut lo = 0;
    while lo < hi {
        let found = (lo..=hi).find(|&j| (lo..=hi).all(|r| r == j || h[(r, j)] == 0.0));
        match found {
            Some(j) => {
                swap_rows_cols(h, q, j, lo);
                lo += 1;
            }
            None => break,
        }
    }
    (lo, hi)
}

/// Result of [`balance`]: `matrix = D^-1 P^T A P D` for a permutation `P`
/// and a diagonal `D` of powers of two. Only eigenvalues are preserved; the
/// transform is not orthogonal.
#[derive(Debug, Clone)]
pub struct Balanced {
    pub matrix: DenseMatrix,
    pub lo: usize,
    pub hi: usize,
    pub scale: Vec<f64>,
}

/// Permutes and scales a matrix to bring row and column norms of the
/// active window close to each other, which sharpens computed eigenvalues of
/// badly scaled matrices.
pub fn balance(a: &DenseMatrix) -> Result<Balanced> {
    let n = require_square("balance", a)?;
    let mut m = a.clone();
    let mut scale = vec![1.0; n];
    if n == 0 {
        return Ok(Balanced { matrix: m, lo: 0, hi: 0, scale });
    }
    let mut dummy = DenseMatrix::identity(n);
    let (lo, hi) = isolate(&mut m, &mut dummy);

    let sfmin1 = f64::MIN_POSITIVE / f64::EPSILON;
    let sfmax1 = 1.0 / sfmin1;
    let sfmin2 = 2.0 * sfmin1;
    let sfmax2 = 1.0 / sfmin2;

    let mut noconv = true;
    while noconv {
        noconv = false;
        for i in lo..=hi {
            let colv: Vec<f64> = (lo..=hi).map(|r| m[(r, i)]).collect();
            let rowv: Vec<f64> = (lo..=hi).map(|c| m[(i, c)]).collect();
            let mut c = norm2(&colv);
            let mut r = norm2(&rowv);
            let mut ca = (0..=hi).fold(0.0f64, |acc, k| acc.max(m[(k, i)].abs()));
            let mut ra = (lo..n).fold(0.0f64, |acc, k| acc.max(m[(i, k)].abs()));
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / 2.0;
            let mut f: f64 = 1.0;
            let s = c + r;
            while c < g && f.max(c).max(ca) < sfmax2 && r.min(g).min(ra) > sfmin2 {
                f *= 2.0;
                c *= 2.0;
                ca *= 2.0;
                r /= 2.0;
                g /= 2.0;
                ra /= 2.0;
            }
            g = c / 2.0;
            while g >= r && r.max(ra) < sfmax2 && f.min(c).min(g).min(ca) > sfmin2 {
                f /= 2.0;
                c /= 2.0;
                g /= 2.0;
                ca /= 2.0;
                r *= 2.0;
                ra *= 2.0;
            }
            if c + r >= 0.95 * s {
                continue;
            }
            if f < 1.0 && scale[i] < 1.0 && f * scale[i] <= sfmin1 {
                continue;
            }
            if f > 1.0 && scale[i] > 1.0 && scale[i] >= sfmax1 / f {
                continue;
            }
            scale[i] *= f;
            noconv = true;
            let ginv = 1.0 / f;
            for k in lo..n {
                m[(i, k)] *= ginv;
            }
            for k in 0..=hi {
                m[(k, i)] *= f;
            }
        }
    }
    Ok(Balanced { matrix: m, lo, hi, scale })
}

fn francis_qr(
    h: &mut DenseMatrix,
    q: &mut DenseMatrix,
    lo: usize,
    hi_start: usize,
    max_sweeps: usize,
    tol: f64,
) -> Result<()> {
    let n = h.rows();
    let window_norm = {
        let mut s = 0.0f64;
        for i in lo..=hi_start {
            for j in i.saturating_sub(1).max(lo)..=hi_start {
                s = s.hypot(h[(i, j)]);
            }
        }
        s
    };
    let mut sweeps = 0usize;
    let mut its = 0usize;
    let mut hi = hi_start;
    loop {
        // Deflation search from the bottom of the active block.
        let mut l = hi;
        while l > lo {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = window_norm;
            }
            let sub = h[(l, l - 1)].abs();
            if sub <= tol * s || sub < f64::MIN_POSITIVE {
                h[(l, l - 1)] = 0.0;
                break;
            }
            l -= 1;
        }

        if l == hi {
            its = 0;
            if hi <= lo {
                return Ok(());
            }
            hi -= 1;
            continue;
        }
        if l + 1 == hi {
            standardize_block(h, q, l);
            its = 0;
            if l == lo {
                return Ok(());
            }
            hi = l - 1;
            continue;
        }

        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence { op: "schur_decompose", iterations: sweeps });
        }
        sweeps += 1;
        its += 1;

        let (sum, prod) = if its.is_multiple_of(10) {
            // Exceptional shift to break cycles.
            let s = if (its / 10) % 2 == 1 {
                h[(l + 1, l)].abs() + h[(l + 2, l + 1)].abs()
            } else {
                h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs()
            };
            let base = if (its / 10) % 2 == 1 { h[(l, l)] } else { h[(hi, hi)] };
            let a = 0.75 * s + base;
            (2.0 * a, a * a + 0.4375 * s * s)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            (a + d, a * d - b * c)
        };
        francis_step(h, q, l, hi, sum, prod, n);
    }
}

/// One implicit double-shift QR sweep on the unreduced block `l..=hi`.
fn francis_step(h: &mut DenseMatrix, q: &mut DenseMatrix, l: usize, hi: usize, sum: f64, prod: f64, n: usize) {
    let mut x = h[(l, l)] * h[(l, l)] + h[(l, l + 1)] * h[(l + 1, l)] - sum * h[(l, l)] + prod;
    let mut y = h[(l + 1, l)] * (h[(l, l)] + h[(l + 1, l + 1)] - sum);
    let mut z = h[(l + 1, l)] * h[(l + 2, l + 1)];
    for k in l..=hi - 2 {
        let refl = Reflector::new(&[x, y, z]);
        if !refl.is_identity() {
            let col_start = if k > l { k - 1 } else { l };
            refl.apply_left(h, k, col_start..n);
            if k > l {
                h[(k, k - 1)] = refl.beta;
                h[(k + 1, k - 1)] = 0.0;
                h[(k + 2, k - 1)] = 0.0;
            }
            let row_end = (k + 3).min(hi) + 1;
            refl.apply_right(h, k, 0..row_end);
            refl.apply_right(q, k, 0..n);
        }
        x = h[(k + 1, k)];
        y = h[(k + 2, k)];
        if k + 3 <= hi {
            z = h[(k + 3, k)];
        }
    }
    let refl = Reflector::new(&[x, y]);
    if !refl.is_identity() {
        refl.apply_left(h, hi - 1, (hi - 2)..n);
        h[(hi - 1, hi - 2)] = refl.beta;
        h[(hi, hi - 2)] = 0.0;
        refl.apply_right(h, hi - 1, 0..hi + 1);
        refl.apply_right(q, hi - 1, 0..n);
    }
}

/// Brings the 2x2 diagonal block at `k` to standard form, splitting it into
/// two 1x1 blocks when its eigenvalues are real.
fn standardize_block(h: &mut DenseMatrix, q: &mut DenseMatrix, k: usize) {
    let n = h.rows();
    let (a, b, c, d, cs, sn) = lanv2(h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
    h[(k, k)] = a;
    h[(k, k + 1)] = b;
    h[(k + 1, k)] = c;
    h[(k + 1, k + 1)] = d;
    if cs == 1.0 && sn == 0.0 {
        return;
    }
    for j in k + 2..n {
        let (x, y) = (h[(k, j)], h[(k + 1, j)]);
        h[(k, j)] = cs * x + sn * y;
        h[(k + 1, j)] = cs * y - sn * x;
    }
    for i in 0..k {
        let (x, y) = (h[(i, k)], h[(i, k + 1)]);
        h[(i, k)] = cs * x + sn * y;
        h[(i, k + 1)] = cs * y - sn * x;
    }
    for i in 0..n {
        let (x, y) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = cs * x + sn * y;
        q[(i, k + 1)] = cs * y - sn * x;
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Schur factorization of a real 2x2 matrix in standardized form
/// (LAPACK `dlanv2`). Returns the new block and the rotation `(cs, sn)` with
/// `[[a,b],[c,d]]_old = R [[a,b],[c,d]]_new R^T`, `R = [[cs,-sn],[sn,cs]]`.
fn lanv2(mut a: f64, mut b: f64, mut c: f64, mut d: f64) -> (f64, f64, f64, f64, f64, f64) {
    let eps = f64::EPSILON;
    let mut cs = 1.0;
    let mut sn = 0.0;
    if c == 0.0 {
    } else if b == 0.0 {
        cs = 0.0;
        sn = 1.0;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = 0.0;
    } else if a - d == 0.0 && b.signum() != c.signum() {
    } else {
        let temp = a - d;
        let mut p = 0.5 * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * b.signum() * c.signum();
        let scale = p.abs().max(bcmax);
        let mut z = p / scale * p + bcmax / scale * bcmis;
        if z >= 4.0 * eps {
            // Real eigenvalues.
            z = p + sign(scale.sqrt() * z.sqrt(), p);
            a = d + z;
            d -= bcmax / z * bcmis;
            let tau = c.hypot(z);
            cs = z / tau;
            sn = c / tau;
            b -= c;
            c = 0.0;
        } else {
            // Complex or nearly equal real eigenvalues: equalize the diagonal.
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            cs = (0.5 * (1.0 + sigma.abs() / tau)).sqrt();
            sn = -(p / (tau * cs)) * sign(1.0, sigma);

            let aa = a * cs + b * sn;
            let bb = -a * sn + b * cs;
            let cc = c * cs + d * sn;
            let dd = -c * sn + d * cs;

            a = aa * cs + cc * sn;
            b = bb * cs + dd * sn;
            c = -aa * sn + cc * cs;
            d = -bb * sn + dd * cs;

            let temp = 0.5 * (a + d);
            a = temp;
            d = temp;

            if c != 0.0 {
                if b != 0.0 {
                    if b.signum() == c.signum() {
                        // Real eigenvalues after all: triangularize.
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = sign(sab * sac, c);
                        let tau = 1.0 / (b + c).abs().sqrt();
                        a = temp + p;
                        d = temp - p;
                        b -= c;
                        c = 0.0;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs * cs1 - sn * sn1;
                        sn = cs * sn1 + sn * cs1;
                        cs = t;
                    }
                } else {
                    b = -c;
                    c = 0.0;
                    let t = cs;
                    cs = -sn;
                    sn = t;
                }
            }
        }
    }
    (a, b, c, d, cs, sn)
}

/// `‖Q T Q^T - A‖_F` and `‖Q^T Q - I‖_F` for a computed factorization.
pub fn schur_residuals(a: &DenseMatrix, s: &SchurForm) -> (f64, f64) {
    use super::matmul;
    let n = a.rows();
    let rec = matmul(&matmul(&s.q, &s.t).expect("shape"), &s.q.transpose()).expect("shape");
    let qtq = matmul(&s.q.transpose(), &s.q).expect("shape");
    (frobenius_norm(&rec.sub(a).expect("shape")), frobenius_norm(&qtq.sub(&DenseMatrix::identity(n)).expect("shape")))
}
