use std::f64::consts::PI;

use crate::assembly::{AssembledProblem, ClosureVariant, KnownValueProvider};
use crate::error::{Error, Result};
use crate::matrixcore::{tridiag_solve, DenseMatrix};
use crate::schemes::{Discretization, SchemeCoefficients, SignalSpec};

/// The advected cosine `cos(2 pi / lambda (x - c t))`.
pub fn exact_solution(x: f64, t: f64, c: f64, lambda: f64) -> f64 {
    (2.0 * PI / lambda * (x - c * t)).cos()
}

/// Known values sampled from the exact solution.
#[derive(Debug, Clone, Copy)]
pub struct ExactProvider {
    pub disc: Discretization,
    pub signal: SignalSpec,
}

impl ExactProvider {
    pub fn new(disc: &Discretization, signal: &SignalSpec) -> Self {
        ExactProvider { disc: *disc, signal: *signal }
    }
}

impl KnownValueProvider for ExactProvider {
    fn value(&self, l: usize, m: usize) -> Option<f64> {
        Some(exact_solution(l as f64 * self.disc.h(), m as f64 * self.disc.tau(), self.disc.c(), self.signal.lambda()))
    }
}

/// A `(nx-1) x nt` field over nodes `i = 1..nx-1`, levels `n = 1..nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMatrix {
    values: DenseMatrix,
    disc: Discretization,
}

impl FieldMatrix {
    pub fn new(values: DenseMatrix, disc: &Discretization) -> Result<Self> {
        if values.shape() != (disc.interior(), disc.nt()) {
            return Err(Error::DimensionMismatch {
                op: "FieldMatrix::new",
                expected: format!("{}x{}", disc.interior(), disc.nt()),
                found: format!("{}x{}", values.rows(), values.cols()),
            });
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("FieldMatrix::new"));
        }
        Ok(FieldMatrix { values, disc: *disc })
    }

    pub fn values(&self) -> &DenseMatrix {
        &self.values
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.values
    }

    /// Value at node `i` (1-based), level `n` (1-based).
    pub fn at(&self, i: usize, n: usize) -> f64 {
        self.values[(i - 1, n - 1)]
    }
}

pub fn sample_exact(disc: &Discretization, signal: &SignalSpec) -> FieldMatrix {
    let p = ExactProvider::new(disc, signal);
    let values = DenseMatrix::from_fn(disc.interior(), disc.nt(), |r, k| p.value(r + 1, k + 1).unwrap_or(0.0))
        .expect("cosine samples are finite");
    FieldMatrix { values, disc: *disc }
}

fn known_at(known: &dyn KnownValueProvider, l: usize, m: usize) -> Result<f64> {
    match known.value(l, m) {
        Some(v) if v.is_finite() => Ok(v),
        Some(_) => Err(Error::InvalidParameter(format!("known value at (i={l}, n={m}) is not finite"))),
        None => Err(Error::MissingNode { i: l, n: m }),
    }
}

fn known_level(known: &dyn KnownValueProvider, nx: usize, m: usize) -> Result<Vec<f64>> {
    (0..=nx).map(|l| known_at(known, l, m)).collect()
}

/// Marches the stencil level by level. Level 0, the boundaries and, for
/// three-level schemes, level 1 come from `known`.
pub fn time_step_simulate(
    s: &SchemeCoefficients,
    disc: &Discretization,
    known: &dyn KnownValueProvider,
) -> Result<FieldMatrix> {
    s.validate()?;
    let (nx, nt) = (disc.nx(), disc.nt());
    let interior = nx - 1;
    let implicit = s.is_implicit();
    if !implicit && s.alpha.abs() <= 1e-14 * s.max_abs() {
        return Err(Error::InvalidScheme(format!("degenerate scheme: alpha = {} with zeta = theta = 0", s.alpha)));
    }

    let mut out = DenseMatrix::zeros(interior, nt);
    // Full rows l = 0..=nx for levels n-1 and n.
    let mut older = vec![0.0; nx + 1];
    let mut current = known_level(known, nx, 0)?;
    let mut first = 0;
    if s.is_three_level() {
        older = current;
        current = known_level(known, nx, 1)?;
        for r in 0..interior {
            out[(r, 0)] = current[r + 1];
        }
        first = 1;
    }

    let mut rhs = vec![0.0; interior];
    for n in first..nt {
        let left = known_at(known, 0, n + 1)?;
        let right = known_at(known, nx, n + 1)?;
        for (r, slot) in rhs.iter_mut().enumerate() {
            let i = r + 1;
            *slot = -(s.beta * current[i]
                + s.delta * current[i + 1]
                + s.epsilon * current[i - 1]
                + s.gamma * older[i]
                + s.eta * older[i - 1]
                + s.vartheta * older[i + 1]);
        }
        rhs[0] -= s.theta * left;
        rhs[interior - 1] -= s.zeta * right;

        let next: Vec<f64> = if implicit {
            let sub = vec![s.theta; interior - 1];
            let diag = vec![s.alpha; interior];
            let sup = vec![s.zeta; interior - 1];
            tridiag_solve(&sub, &diag, &sup, &rhs).map_err(|e| match e {
                Error::Singular(msg) => Error::Numerical(format!("implicit step {n}: {msg}")),
                other => other,
            })?
        } else {
            rhs.iter().map(|v| v / s.alpha).collect()
        };

        let mut level = Vec::with_capacity(nx + 1);
        level.push(left);
        level.extend_from_slice(&next);
        level.push(right);
        for (r, v) in next.iter().enumerate() {
            out[(r, n)] = *v;
        }
        older = std::mem::replace(&mut current, level);
    }
    if !out.is_finite() {
        return Err(Error::Numerical("time stepping overflowed".into()));
    }
    FieldMatrix::new(out, disc)
}

/// `E = U - U_exact`.
pub fn error_matrix(u: &FieldMatrix, u_exact: &FieldMatrix) -> Result<FieldMatrix> {
    if u.disc != u_exact.disc {
        return Err(Error::Usage("error_matrix: fields live on different grids".into()));
    }
    FieldMatrix::new(u.values.sub(&u_exact.values)?, &u.disc)
}

/// Truncation residual of the scheme against the sampled exact solution.
pub fn compute_f(
    s: &SchemeCoefficients,
    disc: &Discretization,
    signal: &SignalSpec,
    variant: ClosureVariant,
) -> Result<DenseMatrix> {
    let prob = AssembledProblem::new(s, disc, &ExactProvider::new(disc, signal), variant)?;
    prob.residual(sample_exact(disc, signal).values())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub frob: f64,
    /// `sqrt(h tau) * frob`.
    pub grid_l2: f64,
    pub grid_l2_squared: f64,
    pub max_abs: f64,
}

pub fn error_summary(e: &FieldMatrix) -> ErrorSummary {
    let frob = e.values.frobenius_norm();
    let grid_l2 = (e.disc.h() * e.disc.tau()).sqrt() * frob;
    ErrorSummary { frob, grid_l2, grid_l2_squared: grid_l2 * grid_l2, max_abs: e.values.max_abs() }
}

/// Simulates with exact boundary and initial data, returning `(U, E)`.
pub fn simulate_against_exact(
    s: &SchemeCoefficients,
    disc: &Discretization,
    signal: &SignalSpec,
) -> Result<(FieldMatrix, FieldMatrix)> {
    let u = time_step_simulate(s, disc, &ExactProvider::new(disc, signal))?;
    let e = error_matrix(&u, &sample_exact(disc, signal))?;
    Ok((u, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{builtin_scheme, custom_scheme, SchemeName};
    use proptest::prelude::*;

    fn setup(sigma: f64, n: usize, nl: f64) -> (Discretization, SignalSpec) {
        let d = Discretization::from_cfl(n, n, 1.0, sigma, 1.0).unwrap();
        let sig = SignalSpec::from_cells_per_wavelength(nl, &d).unwrap();
        (d, sig)
    }

    #[test]
    fn exact_solution_values() {
        assert_eq!(exact_solution(2.0, 0.0, 1.0, 4.0), -1.0);
        for t in [0.0, 0.3, 7.5] {
            assert_eq!(exact_solution(1.7 * t, t, 1.7, 3.0), 1.0);
        }
    }

    proptest! {
        #[test]
        fn translation_invariance(x in -10.0f64..10.0, t in -5.0f64..5.0, s in -5.0f64..5.0, c in -2.0f64..2.0, l in 0.5f64..20.0) {
            let a = exact_solution(x, t, c, l);
            let b = exact_solution(x - c * s, t - s, c, l);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn summary_homogeneity(vals in prop::collection::vec(-5.0f64..5.0, 12), k in -4.0f64..4.0) {
            let d = Discretization::new(4, 4, 0.7, 0.3, 1.0).unwrap();
            let e = FieldMatrix::new(DenseMatrix::from_vec(3, 4, vals).unwrap(), &d).unwrap();
            let ek = FieldMatrix::new(e.values().scale(k), &d).unwrap();
            let (a, b) = (error_summary(&e), error_summary(&ek));
            let tol = 1e-12 * (1.0 + a.frob * k.abs());
            prop_assert!((b.frob - k.abs() * a.frob).abs() <= tol);
            prop_assert!((b.grid_l2 - k.abs() * a.grid_l2).abs() <= tol);
            prop_assert!((b.max_abs - k.abs() * a.max_abs).abs() <= tol);
            prop_assert!((b.grid_l2_squared - k * k * a.grid_l2_squared).abs() <= tol * (1.0 + k.abs() * a.frob));
        }
    }

    #[test]
    fn sample_exact_small_grid() {
        let d = Discretization::new(3, 2, 1.0, 1.0, 1.0).unwrap();
        let sig = SignalSpec::from_wavelength(4.0, &d).unwrap();
        let f = sample_exact(&d, &sig);
        assert_eq!(f.at(1, 1), 1.0);
        assert_eq!(f.values().shape(), (2, 2));
    }

    #[test]
    fn sample_exact_pointwise() {
        let (d, sig) = setup(0.8, 20, 9.8);
        let f = sample_exact(&d, &sig);
        for i in 1..20 {
            for n in 1..=20 {
                let v = exact_solution(i as f64 * d.h(), n as f64 * d.tau(), d.c(), sig.lambda());
                assert_eq!(f.at(i, n), v);
                assert!(v.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn shift_exact_schemes_at_unit_cfl() {
        let (d, sig) = setup(1.0, 20, 10.0);
        for name in [SchemeName::Lax, SchemeName::LaxWendroff] {
            let s = builtin_scheme(name, &d);
            let (_, e) = simulate_against_exact(&s, &d, &sig).unwrap();
            assert!(e.values().max_abs() <= 1e-12, "{name}");
            assert!(error_summary(&e).frob <= 1e-11);
        }
    }

    #[test]
    fn lax_simulation_solves_causal_system() {
        let (d, sig) = setup(0.5, 20, 10.0);
        let s = builtin_scheme(SchemeName::Lax, &d);
        let known = ExactProvider::new(&d, &sig);
        let u = time_step_simulate(&s, &d, &known).unwrap();
        let prob = AssembledProblem::new(&s, &d, &known, ClosureVariant::Causal).unwrap();
        let r = prob.residual(u.values()).unwrap();
        assert!(r.max_abs() <= 1e-12 * s.max_abs());
    }

    #[test]
    fn lax_first_order_refinement() {
        let run = |n: usize, h: f64| {
            let d = Discretization::from_cfl(n, n, h, 0.5, 1.0).unwrap();
            let sig = SignalSpec::from_wavelength(10.0, &d).unwrap();
            let s = builtin_scheme(SchemeName::Lax, &d);
            error_summary(&simulate_against_exact(&s, &d, &sig).unwrap().1).grid_l2
        };
        let (e1, e2, e3) = (run(20, 1.0), run(40, 0.5), run(80, 0.25));
        assert!(e2 / e1 < 0.75, "{e1} {e2}");
        assert!(e3 / e2 < 0.75, "{e2} {e3}");
    }

    #[test]
    fn implicit_scheme_uses_tridiagonal_solve() {
        let (d, sig) = setup(0.8, 12, 10.0);
        // Backward-in-time centred scheme: alpha u^{n+1} + zeta/theta neighbours.
        let a = 1.0 / d.tau();
        let k = d.c() / (2.0 * d.h());
        let s = custom_scheme([a, -a, 0.0, 0.0, 0.0, k, 0.0, -k, 0.0]).unwrap();
        let known = ExactProvider::new(&d, &sig);
        let u = time_step_simulate(&s, &d, &known).unwrap();
        let prob = AssembledProblem::new(&s, &d, &known, ClosureVariant::Causal).unwrap();
        assert!(prob.residual(u.values()).unwrap().max_abs() <= 1e-12 * s.max_abs());
    }

    #[test]
    fn three_level_cold_start() {
        let (d, sig) = setup(0.8, 10, 10.0);
        let s = builtin_scheme(SchemeName::Leapfrog, &d);
        let u = time_step_simulate(&s, &d, &ExactProvider::new(&d, &sig)).unwrap();
        let exact = sample_exact(&d, &sig);
        for i in 1..10 {
            assert_eq!(u.at(i, 1), exact.at(i, 1));
        }
    }

    #[test]
    fn degenerate_and_singular_steps() {
        let (d, sig) = setup(0.8, 6, 10.0);
        let known = ExactProvider::new(&d, &sig);
        let tiny = SchemeCoefficients::from_array([1e-20, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(time_step_simulate(&tiny, &d, &known), Err(Error::InvalidScheme(_))));
        let singular = custom_scheme([0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let err = time_step_simulate(&singular, &d, &known).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err:?}");
    }

    #[test]
    fn error_matrix_properties() {
        let (d, sig) = setup(0.8, 8, 10.0);
        let s = builtin_scheme(SchemeName::Lax, &d);
        let u = time_step_simulate(&s, &d, &ExactProvider::new(&d, &sig)).unwrap();
        let ex = sample_exact(&d, &sig);
        assert_eq!(error_matrix(&ex, &ex).unwrap().values().max_abs(), 0.0);
        let ab = error_matrix(&u, &ex).unwrap();
        let ba = error_matrix(&ex, &u).unwrap();
        assert_eq!(ab.values(), &ba.values().scale(-1.0));
        let (d2, sig2) = setup(0.5, 8, 10.0);
        assert!(error_matrix(&u, &sample_exact(&d2, &sig2)).is_err());
    }

    #[test]
    fn f_vanishes_for_exact_scheme() {
        let (d, sig) = setup(1.0, 20, 10.0);
        let s = builtin_scheme(SchemeName::Lax, &d);
        assert!(compute_f(&s, &d, &sig, ClosureVariant::Causal).unwrap().max_abs() <= 1e-11);
    }

    #[test]
    fn f_equals_residual_of_exact_field() {
        let (d, sig) = setup(0.8, 10, 9.0);
        for name in SchemeName::ALL {
            let s = builtin_scheme(name, &d);
            for variant in [ClosureVariant::Paper, ClosureVariant::Causal] {
                let prob = AssembledProblem::new(&s, &d, &ExactProvider::new(&d, &sig), variant).unwrap();
                let r = prob.residual(sample_exact(&d, &sig).values()).unwrap();
                assert_eq!(compute_f(&s, &d, &sig, variant).unwrap(), r);
            }
        }
    }

    #[test]
    fn f_is_linear_in_the_sampled_field() {
        let (d, sig1) = setup(0.8, 10, 9.0);
        let sig2 = SignalSpec::from_cells_per_wavelength(5.0, &d).unwrap();
        let s = builtin_scheme(SchemeName::LaxWendroff, &d);
        let (p1, p2) = (ExactProvider::new(&d, &sig1), ExactProvider::new(&d, &sig2));
        let (a, b) = (2.0, -0.5);
        let mix = move |l: usize, m: usize| Some(a * p1.value(l, m)? + b * p2.value(l, m)?);
        let f = |known: &dyn KnownValueProvider, u: &DenseMatrix| {
            AssembledProblem::new(&s, &d, known, ClosureVariant::Paper).unwrap().residual(u).unwrap()
        };
        let (u1, u2) = (sample_exact(&d, &sig1), sample_exact(&d, &sig2));
        let um = u1.values().scale(a).add(&u2.values().scale(b)).unwrap();
        let lhs = f(&mix, &um);
        let rhs = f(&p1, u1.values()).scale(a).add(&f(&p2, u2.values()).scale(b)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * s.max_abs());
    }

    #[test]
    fn summary_examples() {
        let d = Discretization::new(4, 4, 1.0, 1.0, 1.0).unwrap();
        let z = FieldMatrix::new(DenseMatrix::zeros(3, 4), &d).unwrap();
        let s = error_summary(&z);
        assert_eq!((s.frob, s.grid_l2, s.grid_l2_squared, s.max_abs), (0.0, 0.0, 0.0, 0.0));
        let mut v = DenseMatrix::zeros(3, 4);
        v[(0, 0)] = 2.0;
        let s = error_summary(&FieldMatrix::new(v, &d).unwrap());
        assert_eq!((s.frob, s.grid_l2, s.grid_l2_squared, s.max_abs), (2.0, 2.0, 4.0, 2.0));
    }

    #[test]
    fn consistent_schemes_stay_bounded() {
        for sigma in [0.5, 0.8, 1.0] {
            let (d, sig) = setup(sigma, 20, 10.0);
            for name in [SchemeName::Leapfrog, SchemeName::Lax, SchemeName::LaxWendroff] {
                let s = builtin_scheme(name, &d);
                let (u, _) = simulate_against_exact(&s, &d, &sig).unwrap();
                assert!(u.values().max_abs() <= 10.0, "{name} sigma={sigma}");
            }
        }
    }
}
