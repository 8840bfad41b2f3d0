//! Matricial form of a stencil over the unknown block `U`.
//!
//! `U` is `(nx-1) x nt`: row `r` holds node `i = r + 1`, column `k` holds
//! level `n = k + 1`. Known nodes (`i = 0`, `i = nx`, `n = 0`, and level 1
//! for three-level schemes in the causal variant) are folded into `M0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrixcore::{kron, matmul, vec_columns, DenseMatrix, KRON_SIZE_LIMIT};
use crate::schemes::{Discretization, SchemeCoefficients};

/// Source of boundary and initial values `u(l h, m tau)`.
pub trait KnownValueProvider {
    fn value(&self, l: usize, m: usize) -> Option<f64>;
}

impl<F: Fn(usize, usize) -> Option<f64>> KnownValueProvider for F {
    fn value(&self, l: usize, m: usize) -> Option<f64> {
        self(l, m)
    }
}

fn known_value(known: &dyn KnownValueProvider, l: usize, m: usize) -> Result<f64> {
    match known.value(l, m) {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(Error::InvalidParameter(format!("known value at (i={l}, n={m}) is not finite"))),
        None => Err(Error::MissingNode { i: l, n: m }),
    }
}

/// How the equations of the global system are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureVariant {
    /// Column `k` is the stencil centred at level `k + 1`; taps beyond level
    /// `nt` are dropped.
    Paper,
    /// Column `k` is the stencil producing level `k + 1`. Three-level
    /// schemes take level 1 as data.
    Causal,
}

impl ClosureVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClosureVariant::Paper => "paper",
            ClosureVariant::Causal => "causal",
        }
    }
}

impl fmt::Display for ClosureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClosureVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" => Ok(ClosureVariant::Paper),
            "causal" => Ok(ClosureVariant::Causal),
            _ => Err(Error::Usage(format!("unknown variant '{s}', valid: paper, causal"))),
        }
    }
}

/// Level of the stencil centre for equation column `k`, or `None` when the
/// column is an identity row carrying known level-1 data.
pub fn equation_center(s: &SchemeCoefficients, variant: ClosureVariant, k: usize) -> Option<i64> {
    match variant {
        ClosureVariant::Paper => Some(k as i64 + 1),
        ClosureVariant::Causal if s.is_three_level() && k == 0 => None,
        ClosureVariant::Causal => Some(k as i64),
    }
}

/// Whether node `(l, m)` is supplied by the provider rather than solved for.
pub fn is_known_node(s: &SchemeCoefficients, disc: &Discretization, variant: ClosureVariant, l: i64, m: i64) -> bool {
    l <= 0 || l >= disc.nx() as i64 || m <= 0 || (variant == ClosureVariant::Causal && s.is_three_level() && m == 1)
}

/// Tridiagonal `center I + plus Xp + minus Xm` of order `n`, where
/// `(Xp U)(r, :) = U(r + 1, :)`.
fn spatial_block(n: usize, center: f64, plus: f64, minus: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for r in 0..n {
        m[(r, r)] = center;
        if r + 1 < n {
            m[(r, r + 1)] = plus;
            m[(r + 1, r)] = minus;
        }
    }
    m
}

/// `M1`: diagonal `beta`, superdiagonal `delta`, subdiagonal `epsilon`.
pub fn build_m1(s: &SchemeCoefficients, disc: &Discretization) -> DenseMatrix {
    spatial_block(disc.interior(), s.beta, s.delta, s.epsilon)
}

/// `M2`: zero diagonal, superdiagonal `gamma`, subdiagonal `alpha`.
pub fn build_m2(s: &SchemeCoefficients, disc: &Discretization) -> DenseMatrix {
    let n = disc.nt();
    let mut m = DenseMatrix::zeros(n, n);
    for k in 0..n - 1 {
        m[(k, k + 1)] = s.gamma;
        m[(k + 1, k)] = s.alpha;
    }
    m
}

/// Zero-padded shift: `out(r, k) = u(r + dr, k + dk)`.
fn shifted(u: &DenseMatrix, dr: i64, dk: i64) -> DenseMatrix {
    let (rows, cols) = u.shape();
    let mut out = DenseMatrix::zeros(rows, cols);
    for r in 0..rows {
        let rr = r as i64 + dr;
        if rr < 0 || rr >= rows as i64 {
            continue;
        }
        for k in 0..cols {
            let kk = k as i64 + dk;
            if kk >= 0 && kk < cols as i64 {
                out[(r, k)] = u[(rr as usize, kk as usize)];
            }
        }
    }
    out
}

fn accumulate(out: &mut DenseMatrix, w: f64, u: &DenseMatrix, dr: i64, dk: i64) {
    if w == 0.0 {
        return;
    }
    let (rows, cols) = u.shape();
    for r in 0..rows {
        let rr = r as i64 + dr;
        if rr < 0 || rr >= rows as i64 {
            continue;
        }
        for k in 0..cols {
            let kk = k as i64 + dk;
            if kk >= 0 && kk < cols as i64 {
                out[(r, k)] += w * u[(rr as usize, kk as usize)];
            }
        }
    }
}

/// `L(U) = zeta Xp U Tp + eta Xm U Tm + theta Xm U Tp + vartheta Xp U Tm`.
pub fn apply_l(s: &SchemeCoefficients, u: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(u.rows(), u.cols());
    accumulate(&mut out, s.zeta, u, 1, 1);
    accumulate(&mut out, s.eta, u, -1, -1);
    accumulate(&mut out, s.theta, u, -1, 1);
    accumulate(&mut out, s.vartheta, u, 1, -1);
    out
}

/// Collects every known-node term of every equation, negated.
pub fn build_m0(
    s: &SchemeCoefficients,
    disc: &Discretization,
    known: &dyn KnownValueProvider,
    variant: ClosureVariant,
) -> Result<DenseMatrix> {
    let (rows, nt) = (disc.interior(), disc.nt());
    let mut m0 = DenseMatrix::zeros(rows, nt);
    for k in 0..nt {
        let center = equation_center(s, variant, k);
        for r in 0..rows {
            let i = r as i64 + 1;
            let Some(n) = center else {
                m0[(r, k)] = known_value(known, r + 1, 1)?;
                continue;
            };
            let mut acc = 0.0;
            for (di, dn, w) in s.taps() {
                let (l, m) = (i + di, n + dn);
                if w == 0.0 || m > nt as i64 || !is_known_node(s, disc, variant, l, m) {
                    continue;
                }
                acc -= w * known_value(known, l as usize, m as usize)?;
            }
            m0[(r, k)] = acc;
        }
    }
    Ok(m0)
}

/// Matrices of one closure variant, ready for residuals and solves.
#[derive(Debug, Clone)]
pub struct AssembledProblem {
    pub m1: DenseMatrix,
    pub m2: DenseMatrix,
    pub m0: DenseMatrix,
    pub scheme: SchemeCoefficients,
    pub disc: Discretization,
    pub variant: ClosureVariant,
    /// Weight of the causal identity rows; tracks normalization.
    pub scale: f64,
}

impl AssembledProblem {
    pub fn new(
        s: &SchemeCoefficients,
        disc: &Discretization,
        known: &dyn KnownValueProvider,
        variant: ClosureVariant,
    ) -> Result<Self> {
        s.validate()?;
        Ok(AssembledProblem {
            m1: build_m1(s, disc),
            m2: build_m2(s, disc),
            m0: build_m0(s, disc, known, variant)?,
            scheme: *s,
            disc: *disc,
            variant,
            scale: 1.0,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.disc.interior(), self.disc.nt())
    }

    fn check_shape(&self, u: &DenseMatrix) -> Result<()> {
        if u.shape() != self.shape() {
            return Err(Error::DimensionMismatch {
                op: "assembled operator",
                expected: format!("{}x{}", self.shape().0, self.shape().1),
                found: format!("{}x{}", u.rows(), u.cols()),
            });
        }
        Ok(())
    }

    /// The causal variant zeroes column 0 before stencil application when it
    /// is an identity row.
    fn has_identity_column(&self) -> bool {
        self.variant == ClosureVariant::Causal && self.scheme.is_three_level()
    }

    /// Linear part of the equations, without `M0`.
    pub fn apply(&self, u: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(u)?;
        let s = &self.scheme;
        match self.variant {
            ClosureVariant::Paper => matmul(&self.m1, u)?.add(&matmul(u, &self.m2)?)?.add(&apply_l(s, u)),
            ClosureVariant::Causal => {
                let n = self.disc.interior();
                let mut v = u.clone();
                if self.has_identity_column() {
                    for r in 0..n {
                        v[(r, 0)] = 0.0;
                    }
                }
                let nf = spatial_block(n, s.alpha, s.zeta, s.theta);
                let nb = spatial_block(n, s.gamma, s.vartheta, s.eta);
                let mut out = matmul(&nf, &v)?
                    .add(&matmul(&self.m1, &shifted(&v, 0, -1))?)?
                    .add(&matmul(&nb, &shifted(&v, 0, -2))?)?;
                if self.has_identity_column() {
                    for r in 0..n {
                        out[(r, 0)] = self.scale * u[(r, 0)];
                    }
                }
                Ok(out)
            }
        }
    }

    /// `apply(u) - M0`.
    pub fn residual(&self, u: &DenseMatrix) -> Result<DenseMatrix> {
        self.apply(u)?.sub(&self.m0)
    }

    /// Multiplies every equation by `tau` (`= h sigma / c`).
    pub fn normalize(&self) -> AssembledProblem {
        let k = self.disc.h() * self.disc.sigma() / self.disc.c();
        AssembledProblem {
            m1: self.m1.scale(k),
            m2: self.m2.scale(k),
            m0: self.m0.scale(k),
            scheme: self.scheme.scaled(k),
            disc: self.disc,
            variant: self.variant,
            scale: self.scale * k,
        }
    }

    /// The vectorized operator `G` with `G vec(U) = vec(apply(U))`.
    pub fn global_operator(&self) -> Result<DenseMatrix> {
        let (m, n) = self.shape();
        let size = m * n;
        if size > KRON_SIZE_LIMIT {
            return Err(Error::TooLarge { op: "global_operator", size, limit: KRON_SIZE_LIMIT });
        }
        // vec(L U R) = (R^T kron L) vec(U)
        let s = &self.scheme;
        let ident_m = DenseMatrix::identity(m);
        let tp = time_shift(n, 1);
        let tm = time_shift(n, -1);
        let xp = spatial_block(m, 0.0, 1.0, 0.0);
        let xm = spatial_block(m, 0.0, 0.0, 1.0);
        let terms: Vec<(DenseMatrix, DenseMatrix)> = match self.variant {
            ClosureVariant::Paper => vec![
                (self.m1.clone(), DenseMatrix::identity(n)),
                (ident_m, self.m2.clone()),
                (xp.scale(s.zeta), tp.clone()),
                (xm.scale(s.eta), tm.clone()),
                (xm.scale(s.theta), tp),
                (xp.scale(s.vartheta), tm),
            ],
            ClosureVariant::Causal => {
                let mut p = DenseMatrix::identity(n);
                let mut rest = DenseMatrix::zeros(n, n);
                if self.has_identity_column() {
                    p[(0, 0)] = 0.0;
                    rest[(0, 0)] = self.scale;
                }
                let ptm = matmul(&p, &tm)?;
                let ptm2 = matmul(&ptm, &tm)?;
                vec![
                    (spatial_block(m, s.alpha, s.zeta, s.theta), p),
                    (self.m1.clone(), ptm),
                    (spatial_block(m, s.gamma, s.vartheta, s.eta), ptm2),
                    (ident_m, rest),
                ]
            }
        };
        let mut g = DenseMatrix::zeros(size, size);
        for (left, right) in terms {
            if left.max_abs() == 0.0 || right.max_abs() == 0.0 {
                continue;
            }
            let block = kron(&right.transpose(), &left);
            for (dst, src) in g.as_mut_slice().iter_mut().zip(block.as_slice()) {
                *dst += src;
            }
        }
        Ok(g)
    }

    /// `vec(M0)` as a right-hand side for the vectorized operator.
    pub fn vec_m0(&self) -> Vec<f64> {
        vec_columns(&self.m0)
    }
}

/// `(U T)(:, k) = U(:, k + dk)` for `dk = +1` (subdiagonal ones) or `-1`
/// (superdiagonal ones).
fn time_shift(n: usize, dk: i64) -> DenseMatrix {
    let mut t = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let src = k as i64 + dk;
        if src >= 0 && src < n as i64 {
            t[(src as usize, k)] = 1.0;
        }
    }
    t
}

/// Convenience wrapper for [`AssembledProblem::global_operator`].
pub fn global_operator(s: &SchemeCoefficients, disc: &Discretization, variant: ClosureVariant) -> Result<DenseMatrix> {
    let zero = |_: usize, _: usize| Some(0.0);
    AssembledProblem::new(s, disc, &zero, variant)?.global_operator()
}

/// `M1 U + U M2 + L(U) - M0` (or its causal counterpart).
pub fn residual(prob: &AssembledProblem, u: &DenseMatrix) -> Result<DenseMatrix> {
    prob.residual(u)
}

pub fn normalize(prob: &AssembledProblem) -> AssembledProblem {
    prob.normalize()
}
