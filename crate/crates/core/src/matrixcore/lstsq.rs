use super::hessenberg::Reflector;
use super::DenseMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_RANK_RTOL: f64 = 1e-11;

/// Complete orthogonal decomposition `A P = Q [T 0; 0 0] W^T`.
///
/// Built from Householder QR with column pivoting followed by an RZ
/// reduction of the leading `rank` rows. `T` is `rank x rank` upper
/// triangular. The last `n - rank` columns of `P W` span the numerical null
/// space of `A`.
#[derive(Debug, Clone)]
pub struct CompleteOrthogonalDecomposition {
    m: usize,
    n: usize,
    rank: usize,
    perm: Vec<usize>,
    q_reflectors: Vec<Reflector>,
    z_reflectors: Vec<(usize, Reflector)>,
    t: DenseMatrix,
    diag: Vec<f64>,
}

impl CompleteOrthogonalDecomposition {
    /// Factorizes `a`; the numerical rank counts pivots with
    /// `|r_kk| > rtol * |r_00|`.
    pub fn new(a: &DenseMatrix, rtol: f64) -> Result<Self> {
        if rtol.is_nan() || rtol < 0.0 {
            return Err(Error::InvalidParameter(format!("rank tolerance must be non-negative, got {rtol}")));
        }
        let (m, n) = a.shape();
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let kmax = m.min(n);
        let mut q_reflectors = Vec::with_capacity(kmax);
        let mut diag = Vec::with_capacity(kmax);

        for k in 0..kmax {
            // Pivot on the largest remaining column norm.
            let mut sq = vec![0.0; n - k];
            for i in k..m {
                for (s, x) in sq.iter_mut().zip(&w.row(i)[k..]) {
                    *s += x * x;
                }
            }
            let mut best = k;
            let mut best_norm = -1.0;
            for (j, &s) in sq.iter().enumerate() {
                if s > best_norm {
                    best_norm = s;
                    best = k + j;
                }
            }
            if best != k {
                for i in 0..m {
                    let tmp = w[(i, k)];
                    w[(i, k)] = w[(i, best)];
                    w[(i, best)] = tmp;
                }
                perm.swap(k, best);
            }
            let x: Vec<f64> = (k..m).map(|i| w[(i, k)]).collect();
            let refl = Reflector::new(&x);
            refl.apply_left(&mut w, k, k + 1..n);
            w[(k, k)] = refl.beta;
            for i in k + 1..m {
                w[(i, k)] = 0.0;
            }
            diag.push(refl.beta);
            q_reflectors.push(refl);
        }

        let lead = diag.first().map_or(0.0, |d| d.abs());
        let rank = if lead == 0.0 { 0 } else { diag.iter().take_while(|d| d.abs() > rtol * lead).count() };

        // RZ step: annihilate R[0..rank, rank..n] from the right, bottom row first.
        let mut z_reflectors = Vec::new();
        if rank < n {
            for i in (0..rank).rev() {
                let mut x = Vec::with_capacity(1 + n - rank);
                x.push(w[(i, i)]);
                x.extend((rank..n).map(|j| w[(i, j)]));
                let refl = Reflector::new(&x);
                if !refl.is_identity() {
                    for r in 0..=i {
                        let mut s = w[(r, i)];
                        for (t, j) in (rank..n).enumerate() {
                            s += refl.v[t + 1] * w[(r, j)];
                        }
                        s *= refl.tau;
                        w[(r, i)] -= s;
                        for (t, j) in (rank..n).enumerate() {
                            w[(r, j)] -= refl.v[t + 1] * s;
                        }
                    }
                    w[(i, i)] = refl.beta;
                    for j in rank..n {
                        w[(i, j)] = 0.0;
                    }
                }
                z_reflectors.push((i, refl));
            }
        }

        let mut t = DenseMatrix::zeros(rank, rank);
        for i in 0..rank {
            for j in i..rank {
                t[(i, j)] = w[(i, j)];
            }
        }
        Ok(CompleteOrthogonalDecomposition { m, n, rank, perm, q_reflectors, z_reflectors, t, diag })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Diagonal of the pivoted QR factor, in pivot order.
    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }

    /// `P W y` for `y` of length `n`.
    fn apply_pw(&self, mut y: Vec<f64>) -> Vec<f64> {
        // z_reflectors are stored in creation order (row rank-1 first); the
        // product W applies the last-created reflector first.
        for (i, refl) in self.z_reflectors.iter().rev() {
            if refl.is_identity() {
                continue;
            }
            let mut s = y[*i];
            for (t, j) in (self.rank..self.n).enumerate() {
                s += refl.v[t + 1] * y[j];
            }
            s *= refl.tau;
            y[*i] -= s;
            for (t, j) in (self.rank..self.n).enumerate() {
                y[j] -= refl.v[t + 1] * s;
            }
        }
        let mut x = vec![0.0; self.n];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = y[j];
        }
        x
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.m {
            return Err(Error::DimensionMismatch {
                op: "min_norm_lstsq",
                expected: format!("right-hand side of length {}", self.m),
                found: format!("length {}", b.len()),
            });
        }
        let mut c = b.to_vec();
        for (k, refl) in self.q_reflectors.iter().enumerate() {
            if refl.is_identity() {
                continue;
            }
            let mut s = 0.0;
            for (t, vt) in refl.v.iter().enumerate() {
                s += vt * c[k + t];
            }
            s *= refl.tau;
            for (t, vt) in refl.v.iter().enumerate() {
                c[k + t] -= vt * s;
            }
        }
        let r = self.rank;
        let mut y = vec![0.0; self.n];
        for i in (0..r).rev() {
            let mut s = c[i];
            for j in i + 1..r {
                s -= self.t[(i, j)] * y[j];
            }
            y[i] = s / self.t[(i, i)];
        }
        Ok(self.apply_pw(y))
    }

    /// Orthonormal basis of the numerical null space, one vector per column.
    pub fn null_space(&self) -> DenseMatrix {
        let k = self.n - self.rank;
        let mut out = DenseMatrix::zeros(self.n, k);
        for c in 0..k {
            let mut e = vec![0.0; self.n];
            e[self.rank + c] = 1.0;
            let x = self.apply_pw(e);
            for i in 0..self.n {
                out[(i, c)] = x[i];
            }
        }
        out
    }
}

/// Minimum-norm least-squares solution with the default rank tolerance.
pub fn min_norm_lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    CompleteOrthogonalDecomposition::new(a, DEFAULT_RANK_RTOL)?.solve(b)
}
