//! Nine-point stencils for `u_t + c u_x = 0` and the grid they live on.
//!
//! A scheme is the linear relation
//!
//! ```text
//! alpha u_i^{n+1} + beta u_i^n + gamma u_i^{n-1}
//!   + delta u_{i+1}^n + epsilon u_{i-1}^n
//!   + zeta u_{i+1}^{n+1} + eta u_{i-1}^{n-1}
//!   + theta u_{i-1}^{n+1} + vartheta u_{i+1}^{n-1} = 0
//! ```
//!
//! on the nodes `u_l^m = u(l h, m tau)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The nine stencil weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
    pub eta: f64,
    pub theta: f64,
    pub vartheta: f64,
}

impl SchemeCoefficients {
    /// Coefficients in the order `alpha, beta, gamma, delta, epsilon, zeta,
    /// eta, theta, vartheta`.
    pub fn as_array(&self) -> [f64; 9] {
        [self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.zeta, self.eta, self.theta, self.vartheta]
    }

    /// Unvalidated constructor; see [`custom_scheme`] for the checked one.
    pub fn from_array(c: [f64; 9]) -> Self {
        SchemeCoefficients {
            alpha: c[0],
            beta: c[1],
            gamma: c[2],
            delta: c[3],
            epsilon: c[4],
            zeta: c[5],
            eta: c[6],
            theta: c[7],
            vartheta: c[8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScheme("coefficients must be finite".into()));
        }
        if self.alpha == 0.0 && self.zeta == 0.0 && self.theta == 0.0 {
            return Err(Error::InvalidScheme(
                "alpha, zeta and theta are all zero: the stencil has no n+1 level".into(),
            ));
        }
        Ok(())
    }

    /// True when the stencil reaches back to level `n - 1`.
    pub fn is_three_level(&self) -> bool {
        self.gamma != 0.0 || self.eta != 0.0 || self.vartheta != 0.0
    }

    /// True when the future level couples neighbouring cells.
    pub fn is_implicit(&self) -> bool {
        self.zeta != 0.0 || self.theta != 0.0
    }

    /// True when the diagonal shift operator `L` is nonzero.
    pub fn has_shift_operator(&self) -> bool {
        self.zeta != 0.0 || self.eta != 0.0 || self.theta != 0.0 || self.vartheta != 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_array(self.as_array().map(|v| v * k))
    }

    /// Stencil taps as `(di, dn, weight)`: the weight multiplies
    /// `u_{i+di}^{n+dn}`.
    pub fn taps(&self) -> [(i64, i64, f64); 9] {
        [
            (0, 1, self.alpha),
            (0, 0, self.beta),
            (0, -1, self.gamma),
            (1, 0, self.delta),
            (-1, 0, self.epsilon),
            (1, 1, self.zeta),
            (-1, -1, self.eta),
            (-1, 1, self.theta),
            (1, -1, self.vartheta),
        ]
    }
}

/// The built-in schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeName {
    Leapfrog,
    Lax,
    LaxWendroff,
    CrankNicolson,
}

impl SchemeName {
    pub const ALL: [SchemeName; 4] =
        [SchemeName::Leapfrog, SchemeName::Lax, SchemeName::LaxWendroff, SchemeName::CrankNicolson];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeName::Leapfrog => "leapfrog",
            SchemeName::Lax => "lax",
            SchemeName::LaxWendroff => "lax-wendroff",
            SchemeName::CrankNicolson => "crank-nicolson",
        }
    }
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        SchemeName::ALL.into_iter().find(|n| n.as_str() == lower).ok_or(Error::UnknownScheme { name: s.to_string() })
    }
}

/// Grid geometry. `sigma` is always `c * tau / h` of the stored fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    nx: usize,
    nt: usize,
    h: f64,
    tau: f64,
    c: f64,
    sigma: f64,
}

impl Discretization {
    pub fn new(nx: usize, nt: usize, h: f64, tau: f64, c: f64) -> Result<Self> {
        if nx < 3 {
            return Err(Error::InvalidParameter(format!("nx must be at least 3, got {nx}")));
        }
        if nt < 2 {
            return Err(Error::InvalidParameter(format!("nt must be at least 2, got {nt}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if c == 0.0 || !c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must be finite and nonzero, got {c}")));
        }
        Ok(Discretization { nx, nt, h, tau, c, sigma: c * tau / h })
    }

    /// Builds the grid from a CFL number: `tau = sigma * h / c`.
    pub fn from_cfl(nx: usize, nt: usize, h: f64, sigma: f64, c: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || c == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and c nonzero, got sigma={sigma}, c={c}"
            )));
        }
        Self::new(nx, nt, h, sigma * h / c, c)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of unknown rows, `nx - 1`.
    pub fn interior(&self) -> usize {
        self.nx - 1
    }
}

/// Wavelength of the advected cosine, with `lambda = n_lambda * h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    lambda: f64,
    n_lambda: f64,
}

impl SignalSpec {
    pub fn from_cells_per_wavelength(n_lambda: f64, disc: &Discretization) -> Result<Self> {
        if !(n_lambda > 0.0 && n_lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("n_lambda must be positive, got {n_lambda}")));
        }
        Ok(SignalSpec { lambda: n_lambda * disc.h(), n_lambda })
    }

    pub fn from_wavelength(lambda: f64, disc: &Discretization) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(SignalSpec { lambda, n_lambda: lambda / disc.h() })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_lambda(&self) -> f64 {
        self.n_lambda
    }
}

/// Coefficients of a built-in scheme on the given grid.
///
/// The Crank-Nicolson row uses `c / h^2` weights exactly as catalogued.
/// Those weights do not sum to zero (a constant field leaves the residual
/// `-2 c / h^2`), so this row is not a consistent transport discretization;
/// pass corrected weights through [`custom_scheme`] if needed.
pub fn builtin_scheme(name: SchemeName, disc: &Discretization) -> SchemeCoefficients {
    let (c, h, tau, sigma) = (disc.c(), disc.h(), disc.tau(), disc.sigma());
    let mut k = [0.0; 9];
    match name {
        SchemeName::Leapfrog => {
            k[0] = 1.0 / (2.0 * tau);
            k[2] = -1.0 / (2.0 * tau);
            k[3] = c / (2.0 * h);
            k[4] = -c / (2.0 * h);
        }
        SchemeName::Lax => {
            k[0] = 1.0 / tau;
            k[3] = -1.0 / (2.0 * tau) + c / (2.0 * h);
            k[4] = -1.0 / (2.0 * tau) - c / (2.0 * h);
        }
        SchemeName::LaxWendroff => {
            k[0] = 1.0 / tau;
            k[1] = -1.0 / tau + c * c * tau / (h * h);
            k[3] = (1.0 - sigma) * c / (2.0 * h);
            k[4] = -(1.0 + sigma) * c / (2.0 * h);
        }
        SchemeName::CrankNicolson => {
            let w = c / (h * h);
            k[0] = 1.0 / tau + w;
            k[1] = -1.0 / tau + w;
            k[3] = -w;
            k[4] = -w;
            k[6] = -w;
            k[7] = -w;
        }
    }
    SchemeCoefficients::from_array(k)
}

/// Looks a scheme up by (case-insensitive) name.
pub fn builtin_scheme_by_name(name: &str, disc: &Discretization) -> Result<SchemeCoefficients> {
    Ok(builtin_scheme(name.parse()?, disc))
}

/// User-supplied coefficients, in the order `alpha, beta, gamma, delta,
/// epsilon, zeta, eta, theta, vartheta`.
pub fn custom_scheme(raw: [f64; 9]) -> Result<SchemeCoefficients> {
    let s = SchemeCoefficients::from_array(raw);
    s.validate()?;
    Ok(s)
}

/// Left-hand side of the stencil centred at `(i, n)`. `u(l, m)` must be
/// defined on all nine nodes `l ∈ {i-1, i, i+1}`, `m ∈ {n-1, n, n+1}`.
pub fn stencil_residual_at(s: &SchemeCoefficients, u: impl Fn(i64, i64) -> f64, i: i64, n: i64) -> f64 {
    s.taps().iter().filter(|(_, _, w)| *w != 0.0).map(|&(di, dn, w)| w * u(i + di, n + dn)).sum()
}
