//! Solvers for `A X + X B = C` and for the error equation of a scheme.

use std::fmt;
use std::str::FromStr;

use crate::advect::{sample_exact, ExactProvider, FieldMatrix};
use crate::assembly::{AssembledProblem, ClosureVariant};
use crate::error::{Error, Result};
use crate::matrixcore::{
    default_max_sweeps, eigenvalues, gauss_solve, kron_vec_operator, matmul, schur_decompose, singular_values, unvec,
    vec_columns, CompleteOrthogonalDecomposition, Complex64, DenseMatrix, DEFAULT_RANK_RTOL, DEFAULT_SCHUR_TOL,
    KRON_SIZE_LIMIT,
};
use crate::schemes::{Discretization, SchemeCoefficients, SignalSpec};

pub const DEFAULT_SEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SylvesterProblem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

impl SylvesterProblem {
    pub fn new(a: DenseMatrix, b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare { op: "sylvester", rows: a.rows(), cols: a.cols() });
        }
        if !b.is_square() {
            return Err(Error::NotSquare { op: "sylvester", rows: b.rows(), cols: b.cols() });
        }
        if c.shape() != (a.rows(), b.rows()) {
            return Err(Error::DimensionMismatch {
                op: "sylvester",
                expected: format!("C of shape {}x{}", a.rows(), b.rows()),
                found: format!("{}x{}", c.rows(), c.cols()),
            });
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::NonFinite("sylvester"));
        }
        Ok(SylvesterProblem { a, b, c })
    }

    /// `A X + X B`.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(&self.a, x)?.add(&matmul(x, &self.b)?)
    }

    fn operator_scale(&self) -> f64 {
        self.a.frobenius_norm() + self.b.frobenius_norm()
    }

    fn finish(&self, x: DenseMatrix, rank: usize) -> Result<SylvesterSolution> {
        let residual_norm = self.apply(&x)?.sub(&self.c)?.frobenius_norm();
        let cn = self.c.frobenius_norm();
        let kappa = if cn > 0.0 { (self.operator_scale() * x.frobenius_norm() / cn).max(1.0) } else { 1.0 };
        Ok(SylvesterSolution { x, residual_norm, rank, kappa })
    }
}

/// A solution together with what the solver achieved.
#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub x: DenseMatrix,
    /// `||A X + X B - C||_F` as evaluated after the solve.
    pub residual_norm: f64,
    /// Numerical rank of the vectorized operator (full for exact solvers).
    pub rank: usize,
    /// `max(1, (||A|| + ||B||) ||X|| / ||C||)`.
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct SolvabilityReport {
    pub spectrum_a: Vec<Complex64>,
    pub spectrum_neg_b: Vec<Complex64>,
    pub min_separation: f64,
    pub unique: bool,
    pub sep_tol: f64,
    /// `max(1, ||A||_F + ||B||_F)`.
    pub scale: f64,
    pub notes: Vec<String>,
}

fn min_separation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for x in a {
        for y in b {
            best = best.min((x - y).norm());
        }
    }
    best
}

fn report(
    spectrum_a: Vec<Complex64>,
    spectrum_neg_b: Vec<Complex64>,
    norm_sum: f64,
    sep_tol: f64,
) -> SolvabilityReport {
    let min_sep = min_separation(&spectrum_a, &spectrum_neg_b);
    let scale = norm_sum.max(1.0);
    SolvabilityReport {
        spectrum_a,
        spectrum_neg_b,
        min_separation: min_sep,
        unique: min_sep > sep_tol * scale,
        sep_tol,
        scale,
        notes: Vec::new(),
    }
}

fn check_sep_tol(sep_tol: f64) -> Result<()> {
    if !(sep_tol > 0.0 && sep_tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("sep_tol must be positive, got {sep_tol}")));
    }
    Ok(())
}

/// Unique solvability holds iff the spectra of `A` and `-B` are disjoint.
pub fn diagnose(p: &SylvesterProblem, sep_tol: f64) -> Result<SolvabilityReport> {
    check_sep_tol(sep_tol)?;
    let sa = eigenvalues(&p.a)?;
    let snb = eigenvalues(&p.b)?.into_iter().map(|z| -z).collect();
    Ok(report(sa, snb, p.operator_scale(), sep_tol))
}

/// Solves `T Y + Y W = R` for a block of at most 2x2 unknowns, using
/// Gaussian elimination with complete pivoting on the vectorized system.
fn solve_small_block(
    t: &[[f64; 2]; 2],
    p: usize,
    w: &[[f64; 2]; 2],
    q: usize,
    r: &[[f64; 2]; 2],
) -> Result<[[f64; 2]; 2]> {
    let n = p * q;
    let mut m = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    // Unknown y(i, j) sits at index i + p * j.
    for j in 0..q {
        for i in 0..p {
            let row = i + p * j;
            rhs[row] = r[i][j];
            for ii in 0..p {
                m[row][ii + p * j] += t[i][ii];
            }
            for jj in 0..q {
                m[row][i + p * jj] += w[jj][j];
            }
        }
    }
    let big = m.iter().take(n).flat_map(|row| row[..n].iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    let smin = (f64::EPSILON * big).max(f64::MIN_POSITIVE);
    let mut col_of: [usize; 4] = [0, 1, 2, 3];
    for k in 0..n {
        let (mut pr, mut pc, mut pv) = (k, k, 0.0);
        for (i, row) in m.iter().enumerate().take(n).skip(k) {
            for (j, v) in row.iter().enumerate().take(n).skip(k) {
                if v.abs() > pv {
                    (pr, pc, pv) = (i, j, v.abs());
                }
            }
        }
        if pv <= smin {
            return Err(Error::Numerical(format!(
                "Bartels-Stewart block pivot {pv:e} below {smin:e}: A and -B nearly share an eigenvalue"
            )));
        }
        m.swap(k, pr);
        rhs.swap(k, pr);
        for row in m.iter_mut() {
            row.swap(k, pc);
        }
        col_of.swap(k, pc);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut z = [0.0f64; 4];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= m[k][j] * z[j];
        }
        z[k] = s / m[k][k];
    }
    let mut y = [[0.0f64; 2]; 2];
    for k in 0..n {
        let idx = col_of[k];
        y[idx % p][idx / p] = z[k];
    }
    Ok(y)
}

/// Bartels-Stewart: real Schur forms `A = Q T Q^T` and `B^T = V S V^T`, so
/// with `W = S^T` (lower quasi-triangular) the transformed equation
/// `T Y + Y W = Q^T C V` is solved by block back-substitution and
/// `X = Q Y V^T`.
pub fn solve_bartels_stewart(p: &SylvesterProblem) -> Result<SylvesterSolution> {
    let (m, n) = (p.a.rows(), p.b.rows());
    let sa = schur_decompose(&p.a, default_max_sweeps(m), DEFAULT_SCHUR_TOL)?;
    let sb = schur_decompose(&p.b.transpose(), default_max_sweeps(n), DEFAULT_SCHUR_TOL)?;
    let neg_b: Vec<Complex64> = sb.eigenvalues.iter().map(|z| -z).collect();
    let rep = report(sa.eigenvalues.clone(), neg_b, p.operator_scale(), DEFAULT_SEP_TOL);
    if !rep.unique {
        return Err(Error::Singular(format!(
            "A and -B share an eigenvalue (min separation {:e}); use the min-norm solver",
            rep.min_separation
        )));
    }
    let t = &sa.t;
    let w = sb.t.transpose();
    let d = matmul(&matmul(&sa.q.transpose(), &p.c)?, &sb.q)?;
    let mut y = DenseMatrix::zeros(m, n);
    let rows = sa.blocks();
    let cols = sb.blocks();
    for &(j0, q) in cols.iter().rev() {
        for &(i0, pp) in rows.iter().rev() {
            let mut r = [[0.0f64; 2]; 2];
            for (di, ri) in r.iter_mut().enumerate().take(pp) {
                let i = i0 + di;
                for (dj, rij) in ri.iter_mut().enumerate().take(q) {
                    let j = j0 + dj;
                    let mut s = d[(i, j)];
                    for l in i0 + pp..m {
                        s -= t[(i, l)] * y[(l, j)];
                    }
                    for k in j0 + q..n {
                        s -= y[(i, k)] * w[(k, j)];
                    }
                    *rij = s;
                }
            }
            let mut tb = [[0.0f64; 2]; 2];
            let mut wb = [[0.0f64; 2]; 2];
            for a in 0..pp {
                for b in 0..pp {
                    tb[a][b] = t[(i0 + a, i0 + b)];
                }
            }
            for a in 0..q {
                for b in 0..q {
                    wb[a][b] = w[(j0 + a, j0 + b)];
                }
            }
            let blk = solve_small_block(&tb, pp, &wb, q, &r)?;
            for a in 0..pp {
                for b in 0..q {
                    y[(i0 + a, j0 + b)] = blk[a][b];
                }
            }
        }
    }
    let x = matmul(&matmul(&sa.q, &y)?, &sb.q.transpose())?;
    if !x.is_finite() {
        return Err(Error::Numerical("Bartels-Stewart produced non-finite values".into()));
    }
    p.finish(x, m * n)
}

fn check_vectorized_size(op: &'static str, size: usize) -> Result<()> {
    if size > KRON_SIZE_LIMIT {
        return Err(Error::TooLarge { op, size, limit: KRON_SIZE_LIMIT });
    }
    Ok(())
}

/// Dense elimination on `(I kron A + B^T kron I) vec(X) = vec(C)`.
pub fn solve_kron_oracle(p: &SylvesterProblem) -> Result<SylvesterSolution> {
    let (m, n) = (p.a.rows(), p.b.rows());
    check_vectorized_size("solve_kron_oracle", m * n)?;
    let k = kron_vec_operator(&p.a, &p.b)?;
    let v = gauss_solve(&k, &DenseMatrix::column(&vec_columns(&p.c))?)?;
    p.finish(unvec(&v.col(0), m, n)?, m * n)
}

/// Minimum-Frobenius-norm least-squares solution.
pub fn solve_min_norm(p: &SylvesterProblem) -> Result<SylvesterSolution> {
    let (m, n) = (p.a.rows(), p.b.rows());
    check_vectorized_size("solve_min_norm", m * n)?;
    let k = kron_vec_operator(&p.a, &p.b)?;
    let cod = CompleteOrthogonalDecomposition::new(&k, DEFAULT_RANK_RTOL)?;
    let x = unvec(&cod.solve(&vec_columns(&p.c))?, m, n)?;
    p.finish(x, cod.rank())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    BartelsStewart,
    Kron,
    MinNorm,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::BartelsStewart => "bartels-stewart",
            SolveMethod::Kron => "kron",
            SolveMethod::MinNorm => "min-norm",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bartels-stewart" => Ok(SolveMethod::BartelsStewart),
            "kron" => Ok(SolveMethod::Kron),
            "min-norm" => Ok(SolveMethod::MinNorm),
            _ => Err(Error::Usage(format!("unknown method '{s}', valid: bartels-stewart, kron, min-norm"))),
        }
    }
}

/// Structural remarks on the paper-variant system of a scheme.
pub fn paper_variant_notes(s: &SchemeCoefficients) -> Vec<String> {
    let mut notes = Vec::new();
    if !s.is_three_level() {
        notes.push("two-level scheme: the initial level u_i^0 does not enter the paper-variant system".to_string());
    }
    notes.push("final column n = nt is a truncated stencil: its level nt+1 taps are dropped".to_string());
    if s.has_shift_operator() {
        notes.push("L != 0: the verdict refers to the full vectorized operator, compared against B = 0".to_string());
    }
    notes
}

/// Solvability of an assembled system.
///
/// * paper variant with `L = 0`: the Sylvester pair `(M1, M2)`;
/// * paper variant with `L != 0`: the spectrum of the vectorized operator
///   against `B = 0`;
/// * causal variant: the operator is block lower triangular in time, so its
///   spectrum is that of the future-level block (and the identity rows).
pub fn diagnose_assembled(prob: &AssembledProblem, sep_tol: f64) -> Result<SolvabilityReport> {
    check_sep_tol(sep_tol)?;
    let s = &prob.scheme;
    let zero = vec![Complex64::new(0.0, 0.0)];
    let mut rep = match prob.variant {
        ClosureVariant::Paper if !s.has_shift_operator() => {
            let sa = eigenvalues(&prob.m1)?;
            let snb = eigenvalues(&prob.m2)?.into_iter().map(|z| -z).collect();
            report(sa, snb, prob.m1.frobenius_norm() + prob.m2.frobenius_norm(), sep_tol)
        }
        ClosureVariant::Paper => {
            let g = prob.global_operator()?;
            let sg = eigenvalues(&g)?;
            report(sg, zero, g.frobenius_norm(), sep_tol)
        }
        ClosureVariant::Causal => {
            let n = prob.disc.interior();
            let mut nf = DenseMatrix::zeros(n, n);
            for r in 0..n {
                nf[(r, r)] = s.alpha;
                if r + 1 < n {
                    nf[(r, r + 1)] = s.zeta;
                    nf[(r + 1, r)] = s.theta;
                }
            }
            let mut sa = eigenvalues(&nf)?;
            if s.is_three_level() {
                sa.push(Complex64::new(prob.scale, 0.0));
            }
            report(sa, zero, nf.frobenius_norm(), sep_tol)
        }
    };
    match prob.variant {
        ClosureVariant::Paper => rep.notes = paper_variant_notes(s),
        ClosureVariant::Causal => rep.notes.push(
            "causal operator is block lower triangular in time; spectrum of its future-level block shown against B = 0"
                .to_string(),
        ),
    }
    Ok(rep)
}

/// Smallest singular value of the vectorized operator.
pub fn smallest_singular_value(prob: &AssembledProblem) -> Result<f64> {
    let sv = singular_values(&prob.global_operator()?)?;
    Ok(sv.last().copied().unwrap_or(0.0))
}

/// Result of solving the error equation of a scheme.
#[derive(Debug, Clone)]
pub struct ErrorSolution {
    /// `E = U - U_exact`.
    pub e: FieldMatrix,
    pub report: SolvabilityReport,
    /// Residual of the normalized system after the solve.
    pub residual_norm: f64,
    pub rank: usize,
}

/// Solves for `E = U - U_exact` without time stepping.
///
/// `F = A(U_exact) - M0` is the truncation residual; since `A(U) = M0` for
/// the scheme's field, `A(E) = -F`. The solve is carried out on the
/// normalized (`tau`-scaled) system.
pub fn solve_error_equation(
    s: &SchemeCoefficients,
    disc: &Discretization,
    signal: &SignalSpec,
    variant: ClosureVariant,
    method: SolveMethod,
) -> Result<ErrorSolution> {
    let prob = AssembledProblem::new(s, disc, &ExactProvider::new(disc, signal), variant)?.normalize();
    let rep = diagnose_assembled(&prob, DEFAULT_SEP_TOL)?;
    solve_error_with_report(&prob, disc, signal, method, rep)
}

/// As [`solve_error_equation`] for an already normalized problem and a
/// precomputed report (the report does not depend on the signal).
pub fn solve_error_with_report(
    prob: &AssembledProblem,
    disc: &Discretization,
    signal: &SignalSpec,
    method: SolveMethod,
    rep: SolvabilityReport,
) -> Result<ErrorSolution> {
    let exact = sample_exact(disc, signal);
    let neg_f = prob.residual(exact.values())?.scale(-1.0);
    let (rows, cols) = prob.shape();

    if method != SolveMethod::MinNorm && !rep.unique {
        return Err(Error::Singular(format!(
            "the {} operator is not uniquely solvable (min separation {:e}); use --method min-norm",
            prob.variant, rep.min_separation
        )));
    }
    let (x, rank) = match method {
        SolveMethod::BartelsStewart => {
            if prob.variant != ClosureVariant::Paper {
                return Err(Error::Usage(
                    "bartels-stewart applies to the paper variant only; the causal operator is not of Sylvester form"
                        .into(),
                ));
            }
            if prob.scheme.has_shift_operator() {
                return Err(Error::Usage(
                    "bartels-stewart requires L = 0 (zeta = eta = theta = vartheta = 0); use kron or min-norm".into(),
                ));
            }
            let sp = SylvesterProblem::new(prob.m1.clone(), prob.m2.clone(), neg_f.clone())?;
            let sol = solve_bartels_stewart(&sp)?;
            (sol.x, sol.rank)
        }
        SolveMethod::Kron => {
            let g = prob.global_operator()?;
            let v = gauss_solve(&g, &DenseMatrix::column(&vec_columns(&neg_f))?)?;
            (unvec(&v.col(0), rows, cols)?, rows * cols)
        }
        SolveMethod::MinNorm => {
            let g = prob.global_operator()?;
            let cod = CompleteOrthogonalDecomposition::new(&g, DEFAULT_RANK_RTOL)?;
            (unvec(&cod.solve(&vec_columns(&neg_f))?, rows, cols)?, cod.rank())
        }
    };
    let residual_norm = prob.apply(&x)?.sub(&neg_f)?.frobenius_norm();
    Ok(ErrorSolution { e: FieldMatrix::new(x, disc)?, report: rep, residual_norm, rank })
}
