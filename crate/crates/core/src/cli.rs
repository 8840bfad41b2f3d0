//! Command-line front end.
//!
//! Flags override an optional `key=value` config file whose keys are the
//! long flag names without the leading dashes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use rayon::prelude::*;

use crate::advect::{error_summary, sample_exact, simulate_against_exact, ErrorSummary, ExactProvider, FieldMatrix};
use crate::assembly::{AssembledProblem, ClosureVariant};
use crate::error::{Error, ErrorKind, Result};
use crate::matrixcore::{Complex64, DenseMatrix};
use crate::schemes::{builtin_scheme, custom_scheme, Discretization, SchemeCoefficients, SchemeName, SignalSpec};
use crate::sylvester::{
    diagnose, diagnose_assembled, smallest_singular_value, solve_error_with_report, SolvabilityReport, SolveMethod,
    SylvesterProblem, DEFAULT_SEP_TOL,
};

#[derive(Debug, Parser)]
#[command(name = "advsylv", version, about = "Finite-difference advection schemes as Sylvester equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// March a scheme in time and report its error against the exact signal.
    Simulate(RunArgs),
    /// Solve the matricial error equation directly.
    SolveError(RunArgs),
    /// Sweep cells per wavelength and compare both error paths.
    Sweep(RunArgs),
    /// Spectral solvability diagnostics of the normalized system.
    Diagnose(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::SolveError(_) => "solve-error",
            Command::Sweep(_) => "sweep",
            Command::Diagnose(_) => "diagnose",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Simulate(a) | Command::SolveError(a) | Command::Sweep(a) | Command::Diagnose(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// leapfrog, lax, lax-wendroff, crank-nicolson or custom
    #[arg(long)]
    pub scheme: Option<String>,
    /// Nine comma-separated coefficients alpha,beta,gamma,delta,epsilon,zeta,eta,theta,vartheta
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    /// Spatial intervals; interior unknowns are nx - 1 [default: 20]
    #[arg(long)]
    pub nx: Option<usize>,
    /// Time levels solved for [default: 20]
    #[arg(long)]
    pub nt: Option<usize>,
    /// Grid spacing [default: 1]
    #[arg(long)]
    pub h: Option<f64>,
    /// Courant number c tau / h [default: 0.8]
    #[arg(long, conflicts_with = "tau")]
    pub sigma: Option<f64>,
    /// Time step, instead of --sigma
    #[arg(long)]
    pub tau: Option<f64>,
    /// Advection speed [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Cells per wavelength [default: 10]
    #[arg(long = "n-lambda", conflicts_with = "lambda")]
    pub n_lambda: Option<f64>,
    /// Wavelength, instead of --n-lambda
    #[arg(long)]
    pub lambda: Option<f64>,
    /// paper or causal [default: causal]
    #[arg(long)]
    pub variant: Option<String>,
    /// bartels-stewart, kron or min-norm [default: min-norm]
    #[arg(long)]
    pub method: Option<String>,
    /// Sweep start [default: 4]
    #[arg(long = "nl-min")]
    pub nl_min: Option<f64>,
    /// Sweep end, inclusive [default: 20]
    #[arg(long = "nl-max")]
    pub nl_max: Option<f64>,
    /// Sweep increment [default: 0.2]
    #[arg(long = "nl-step")]
    pub nl_step: Option<f64>,
    /// CSV output path (simulate, solve-error, sweep)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sweep only: SVG plot of both error curves
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Sweep only: per-level spatial L2 error grid as CSV
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// key = value file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sweep only: evaluate points on one thread
    #[arg(long)]
    pub serial: bool,
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str, line: usize) -> Result<T> {
    raw.parse().map_err(|_| Error::Usage(format!("config line {line}: invalid value '{raw}' for '{key}'")))
}

impl RunArgs {
    /// Reads a config file into a `RunArgs`.
    pub fn from_config_text(text: &str) -> Result<RunArgs> {
        let mut a = RunArgs::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(Error::Usage(format!("config line {line}: expected key=value")));
            };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "scheme" => a.scheme = Some(v.to_string()),
                "coeffs" => a.coeffs = Some(v.to_string()),
                "nx" => a.nx = Some(parse_value(k, v, line)?),
                "nt" => a.nt = Some(parse_value(k, v, line)?),
                "h" => a.h = Some(parse_value(k, v, line)?),
                "sigma" => a.sigma = Some(parse_value(k, v, line)?),
                "tau" => a.tau = Some(parse_value(k, v, line)?),
                "c" => a.c = Some(parse_value(k, v, line)?),
                "n-lambda" => a.n_lambda = Some(parse_value(k, v, line)?),
                "lambda" => a.lambda = Some(parse_value(k, v, line)?),
                "variant" => a.variant = Some(v.to_string()),
                "method" => a.method = Some(v.to_string()),
                "nl-min" => a.nl_min = Some(parse_value(k, v, line)?),
                "nl-max" => a.nl_max = Some(parse_value(k, v, line)?),
                "nl-step" => a.nl_step = Some(parse_value(k, v, line)?),
                "out" => a.out = Some(PathBuf::from(v)),
                "svg" => a.svg = Some(PathBuf::from(v)),
                "grid" => a.grid = Some(PathBuf::from(v)),
                "serial" => a.serial = parse_value(k, v, line)?,
                _ => return Err(Error::Usage(format!("config line {line}: unknown key '{k}'"))),
            }
        }
        Ok(a)
    }

    /// Field-wise `self` over `base`. The time-step pair and the wavelength
    /// pair are each taken as a unit.
    pub fn overlay(self, base: RunArgs) -> RunArgs {
        let (sigma, tau) =
            if self.sigma.is_some() || self.tau.is_some() { (self.sigma, self.tau) } else { (base.sigma, base.tau) };
        let (n_lambda, lambda) = if self.n_lambda.is_some() || self.lambda.is_some() {
            (self.n_lambda, self.lambda)
        } else {
            (base.n_lambda, base.lambda)
        };
        RunArgs {
            scheme: self.scheme.or(base.scheme),
            coeffs: self.coeffs.or(base.coeffs),
            nx: self.nx.or(base.nx),
            nt: self.nt.or(base.nt),
            h: self.h.or(base.h),
            sigma,
            tau,
            c: self.c.or(base.c),
            n_lambda,
            lambda,
            variant: self.variant.or(base.variant),
            method: self.method.or(base.method),
            nl_min: self.nl_min.or(base.nl_min),
            nl_max: self.nl_max.or(base.nl_max),
            nl_step: self.nl_step.or(base.nl_step),
            out: self.out.or(base.out),
            svg: self.svg.or(base.svg),
            grid: self.grid.or(base.grid),
            config: self.config,
            serial: self.serial || base.serial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Sigma(f64),
    Tau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Wave {
    CellsPerWavelength(f64),
    Wavelength(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeChoice {
    Builtin(SchemeName),
    Custom([f64; 9]),
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeChoice,
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    pub c: f64,
    pub step: TimeStep,
    pub wave: Wave,
    pub variant: ClosureVariant,
    pub method: SolveMethod,
    pub nl_min: f64,
    pub nl_max: f64,
    pub nl_step: f64,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub serial: bool,
}

fn parse_coeffs(raw: &str) -> Result<[f64; 9]> {
    let vals: Vec<f64> = raw
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("--coeffs: cannot parse '{raw}' as numbers")))?;
    vals.try_into().map_err(|v: Vec<f64>| Error::Usage(format!("--coeffs needs 9 values, got {}", v.len())))
}

impl RunConfig {
    pub fn resolve(args: RunArgs) -> Result<RunConfig> {
        let scheme = match (args.scheme.as_deref(), args.coeffs.as_deref()) {
            (None, None) => return Err(Error::Usage("a scheme is required: --scheme NAME or --coeffs".into())),
            (Some(name), None) if name.trim().eq_ignore_ascii_case("custom") => {
                return Err(Error::Usage("--scheme custom requires --coeffs".into()))
            }
            (Some(name), None) => SchemeChoice::Builtin(name.parse()?),
            (Some(name), Some(raw)) if name.trim().eq_ignore_ascii_case("custom") => {
                SchemeChoice::Custom(parse_coeffs(raw)?)
            }
            (None, Some(raw)) => SchemeChoice::Custom(parse_coeffs(raw)?),
            (Some(_), Some(_)) => {
                return Err(Error::Usage("--coeffs can only be combined with --scheme custom".into()))
            }
        };
        let step = match (args.sigma, args.tau) {
            (Some(_), Some(_)) => return Err(Error::Usage("give only one of --sigma and --tau".into())),
            (_, Some(t)) => TimeStep::Tau(t),
            (s, None) => TimeStep::Sigma(s.unwrap_or(0.8)),
        };
        let wave = match (args.n_lambda, args.lambda) {
            (Some(_), Some(_)) => return Err(Error::Usage("give only one of --n-lambda and --lambda".into())),
            (_, Some(l)) => Wave::Wavelength(l),
            (n, None) => Wave::CellsPerWavelength(n.unwrap_or(10.0)),
        };
        let cfg = RunConfig {
            scheme,
            nx: args.nx.unwrap_or(20),
            nt: args.nt.unwrap_or(20),
            h: args.h.unwrap_or(1.0),
            c: args.c.unwrap_or(1.0),
            step,
            wave,
            variant: args.variant.as_deref().unwrap_or("causal").parse()?,
            method: args.method.as_deref().unwrap_or("min-norm").parse()?,
            nl_min: args.nl_min.unwrap_or(4.0),
            nl_max: args.nl_max.unwrap_or(20.0),
            nl_step: args.nl_step.unwrap_or(0.2),
            out: args.out,
            svg: args.svg,
            grid: args.grid,
            serial: args.serial,
        };
        cfg.discretization()?;
        Ok(cfg)
    }

    pub fn discretization(&self) -> Result<Discretization> {
        match self.step {
            TimeStep::Sigma(s) => Discretization::from_cfl(self.nx, self.nt, self.h, s, self.c),
            TimeStep::Tau(t) => Discretization::new(self.nx, self.nt, self.h, t, self.c),
        }
    }

    pub fn scheme(&self, disc: &Discretization) -> Result<SchemeCoefficients> {
        match &self.scheme {
            SchemeChoice::Builtin(name) => Ok(builtin_scheme(*name, disc)),
            SchemeChoice::Custom(raw) => custom_scheme(*raw),
        }
    }

    pub fn scheme_label(&self) -> String {
        match &self.scheme {
            SchemeChoice::Builtin(name) => name.to_string(),
            SchemeChoice::Custom(_) => "custom".to_string(),
        }
    }

    pub fn signal(&self, disc: &Discretization) -> Result<SignalSpec> {
        match self.wave {
            Wave::CellsPerWavelength(n) => SignalSpec::from_cells_per_wavelength(n, disc),
            Wave::Wavelength(l) => SignalSpec::from_wavelength(l, disc),
        }
    }

    /// `nl_min + k nl_step` up to `nl_max`, rounded to nine decimals so that
    /// decimal steps land on decimal values.
    pub fn sweep_values(&self) -> Result<Vec<f64>> {
        let (lo, hi, step) = (self.nl_min, self.nl_max, self.nl_step);
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || lo <= 0.0 {
            return Err(Error::Usage("sweep bounds must be finite and --nl-min positive".into()));
        }
        if lo > hi {
            return Err(Error::Usage(format!("--nl-min {lo} exceeds --nl-max {hi}")));
        }
        if step <= 0.0 {
            return Err(Error::Usage(format!("--nl-step must be positive, got {step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::Usage(format!("sweep of {count} points is too large")));
        }
        Ok((0..count).map(|k| ((lo + k as f64 * step) * 1e9).round() / 1e9).collect())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        // Signed zero prints as 0.
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_complex(z: &Complex64) -> String {
    if z.im == 0.0 {
        fmt_f64(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_f64(z.re), fmt_f64(-z.im))
    } else {
        format!("{}+{}i", fmt_f64(z.re), fmt_f64(z.im))
    }
}

fn fmt_spectrum(s: &[Complex64]) -> String {
    s.iter().map(fmt_complex).collect::<Vec<_>>().join(" ")
}

/// One point of the cells-per-wavelength sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub n_lambda: f64,
    pub err_sim_frob: f64,
    pub err_sim_grid_l2: f64,
    pub err_sim_grid_l2_squared: f64,
    pub err_mtx_frob: f64,
    pub err_mtx_grid_l2: f64,
    pub err_mtx_grid_l2_squared: f64,
    pub unique: bool,
    pub min_separation: f64,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "n_lambda",
    "err_sim_frob",
    "err_sim_grid_l2",
    "err_sim_grid_l2_squared",
    "err_mtx_frob",
    "err_mtx_grid_l2",
    "err_mtx_grid_l2_squared",
    "unique",
    "min_separation",
];

impl SweepRecord {
    fn fields(&self) -> [String; 9] {
        [
            fmt_f64(self.n_lambda),
            fmt_f64(self.err_sim_frob),
            fmt_f64(self.err_sim_grid_l2),
            fmt_f64(self.err_sim_grid_l2_squared),
            fmt_f64(self.err_mtx_frob),
            fmt_f64(self.err_mtx_grid_l2),
            fmt_f64(self.err_mtx_grid_l2_squared),
            self.unique.to_string(),
            fmt_f64(self.min_separation),
        ]
    }
}

/// A sweep point with the per-level spatial errors `sqrt(h) ||E(:, n)||`.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub record: SweepRecord,
    pub sim_levels: Vec<f64>,
    pub mtx_levels: Vec<f64>,
}

fn level_norms(e: &FieldMatrix) -> Vec<f64> {
    let h = e.disc().h();
    let v = e.values();
    (0..v.cols()).map(|k| (h * (0..v.rows()).map(|r| v[(r, k)] * v[(r, k)]).sum::<f64>()).sqrt()).collect()
}

/// Runs the sweep; rows come back ordered by `n_lambda`.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    let values = cfg.sweep_values()?;
    let disc = cfg.discretization()?;
    let s = cfg.scheme(&disc)?;
    // The operator, hence its solvability, does not depend on the signal.
    let zero = |_: usize, _: usize| Some(0.0);
    let base = AssembledProblem::new(&s, &disc, &zero, cfg.variant)?.normalize();
    let report = diagnose_assembled(&base, DEFAULT_SEP_TOL)?;
    let point = |nl: f64| -> Result<SweepPoint> {
        let signal = SignalSpec::from_cells_per_wavelength(nl, &disc)?;
        let (_, e_sim) = simulate_against_exact(&s, &disc, &signal)?;
        let prob = AssembledProblem::new(&s, &disc, &ExactProvider::new(&disc, &signal), cfg.variant)?.normalize();
        let sol = solve_error_with_report(&prob, &disc, &signal, cfg.method, report.clone())?;
        let (a, b) = (error_summary(&e_sim), error_summary(&sol.e));
        Ok(SweepPoint {
            record: SweepRecord {
                n_lambda: nl,
                err_sim_frob: a.frob,
                err_sim_grid_l2: a.grid_l2,
                err_sim_grid_l2_squared: a.grid_l2_squared,
                err_mtx_frob: b.frob,
                err_mtx_grid_l2: b.grid_l2,
                err_mtx_grid_l2_squared: b.grid_l2_squared,
                unique: report.unique,
                min_separation: report.min_separation,
            },
            sim_levels: level_norms(&e_sim),
            mtx_levels: level_norms(&sol.e),
        })
    };
    if cfg.serial {
        values.into_iter().map(point).collect()
    } else {
        values.into_par_iter().map(point).collect()
    }
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_HEADER)?;
    for p in points {
        wr.write_record(p.record.fields())?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_grid_csv<W: Write>(points: &[SweepPoint], tau: f64, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["n_lambda", "n", "t", "err_sim_l2", "err_mtx_l2"])?;
    for p in points {
        for (k, (a, b)) in p.sim_levels.iter().zip(&p.mtx_levels).enumerate() {
            let n = k + 1;
            wr.write_record([
                fmt_f64(p.record.n_lambda),
                n.to_string(),
                fmt_f64(n as f64 * tau),
                fmt_f64(*a),
                fmt_f64(*b),
            ])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Long-format field table: one row per node, time-major.
pub fn write_field_csv<W: Write>(u: Option<&FieldMatrix>, exact: &FieldMatrix, e: &FieldMatrix, w: W) -> Result<()> {
    let disc = exact.disc();
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["i", "n", "x", "t"];
    if u.is_some() {
        header.extend(["u", "u_exact"]);
    }
    header.push("error");
    wr.write_record(&header)?;
    for n in 1..=disc.nt() {
        for i in 1..disc.nx() {
            let mut row =
                vec![i.to_string(), n.to_string(), fmt_f64(i as f64 * disc.h()), fmt_f64(n as f64 * disc.tau())];
            if let Some(u) = u {
                row.push(fmt_f64(u.at(i, n)));
                row.push(fmt_f64(exact.at(i, n)));
            }
            row.push(fmt_f64(e.at(i, n)));
            wr.write_record(&row)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Two-curve line chart of `grid_l2_squared` against `n_lambda`.
pub fn sweep_svg(points: &[SweepPoint]) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 440.0, 80.0, 20.0, 30.0, 50.0);
    let xs: Vec<f64> = points.iter().map(|p| p.record.n_lambda).collect();
    let sim: Vec<f64> = points.iter().map(|p| p.record.err_sim_grid_l2_squared).collect();
    let mtx: Vec<f64> = points.iter().map(|p| p.record.err_mtx_grid_l2_squared).collect();
    let (x0, x1) = (xs.first().copied().unwrap_or(0.0), xs.last().copied().unwrap_or(1.0));
    let y1 = sim.iter().chain(&mtx).fold(0.0f64, |m, v| if v.is_finite() { m.max(*v) } else { m });
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let y1 = if y1 > 0.0 { y1 } else { 1.0 };
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - y.min(y1) / y1 * (h - mt - mb);
    let polyline = |ys: &[f64], color: &str, dash: &str| {
        let pts: Vec<String> = xs.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash} points=\"{}\"/>\n", pts.join(" "))
    };
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    s.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
    s.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    s.push_str(&format!("<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n", h - mb));
    for k in 0..=4 {
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let yv = y1 * k as f64 / 4.0;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            px(xv),
            h - mb + 18.0,
            fmt_tick(xv)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            ml - 6.0,
            py(yv) + 4.0,
            fmt_tick(yv)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">cells per wavelength</text>\n",
        (ml + w - mr) / 2.0,
        h - 10.0
    ));
    s.push_str(&format!(
        "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">squared grid L2 error</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));
    s.push_str(&polyline(&sim, "#1f77b4", ""));
    s.push_str(&polyline(&mtx, "#d62728", " stroke-dasharray=\"6 4\""));
    let lx = w - mr - 170.0;
    s.push_str(&format!(
        "<line x1=\"{lx}\" y1=\"{mt}\" x2=\"{}\" y2=\"{mt}\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n<text x=\"{}\" y=\"{}\">time stepping</text>\n",
        lx + 30.0,
        lx + 36.0,
        mt + 4.0
    ));
    s.push_str(&format!(
        "<line x1=\"{lx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6 4\"/>\n<text x=\"{}\" y=\"{}\">matrix solve</text>\n",
        mt + 18.0,
        lx + 30.0,
        mt + 18.0,
        lx + 36.0,
        mt + 22.0
    ));
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn open_out(path: &Path) -> Result<fs::File> {
    Ok(fs::File::create(path)?)
}

fn print_summary(out: &mut dyn Write, prefix: &str, s: &ErrorSummary) -> io::Result<()> {
    writeln!(out, "{prefix}frob: {}", fmt_f64(s.frob))?;
    writeln!(out, "{prefix}grid_l2: {}", fmt_f64(s.grid_l2))?;
    writeln!(out, "{prefix}grid_l2_squared: {}", fmt_f64(s.grid_l2_squared))?;
    writeln!(out, "{prefix}max_abs: {}", fmt_f64(s.max_abs))
}

fn print_header(out: &mut dyn Write, cfg: &RunConfig, disc: &Discretization) -> io::Result<()> {
    writeln!(out, "scheme: {}", cfg.scheme_label())?;
    writeln!(out, "nx: {}", disc.nx())?;
    writeln!(out, "nt: {}", disc.nt())?;
    writeln!(out, "h: {}", fmt_f64(disc.h()))?;
    writeln!(out, "tau: {}", fmt_f64(disc.tau()))?;
    writeln!(out, "c: {}", fmt_f64(disc.c()))?;
    writeln!(out, "sigma: {}", fmt_f64(disc.sigma()))
}

fn print_report(out: &mut dyn Write, prefix: &str, r: &SolvabilityReport) -> io::Result<()> {
    writeln!(out, "{prefix}unique: {}", r.unique)?;
    writeln!(out, "{prefix}min_separation: {}", fmt_f64(r.min_separation))?;
    writeln!(out, "{prefix}sep_tol: {}", fmt_f64(r.sep_tol))?;
    writeln!(out, "{prefix}scale: {}", fmt_f64(r.scale))?;
    for n in &r.notes {
        writeln!(out, "{prefix}note: {n}")?;
    }
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let disc = cfg.discretization()?;
    let s = cfg.scheme(&disc)?;
    let signal = cfg.signal(&disc)?;
    let (u, e) = simulate_against_exact(&s, &disc, &signal)?;
    if let Some(path) = &cfg.out {
        write_field_csv(Some(&u), &sample_exact(&disc, &signal), &e, open_out(path)?)?;
    }
    print_header(out, cfg, &disc)?;
    writeln!(out, "n_lambda: {}", fmt_f64(signal.n_lambda()))?;
    print_summary(out, "", &error_summary(&e))?;
    Ok(())
}

pub fn cmd_solve_error(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let disc = cfg.discretization()?;
    let s = cfg.scheme(&disc)?;
    let signal = cfg.signal(&disc)?;
    let prob = AssembledProblem::new(&s, &disc, &ExactProvider::new(&disc, &signal), cfg.variant)?.normalize();
    let report = diagnose_assembled(&prob, DEFAULT_SEP_TOL)?;
    print_header(out, cfg, &disc)?;
    writeln!(out, "n_lambda: {}", fmt_f64(signal.n_lambda()))?;
    writeln!(out, "variant: {}", cfg.variant)?;
    writeln!(out, "method: {}", cfg.method)?;
    print_report(out, "", &report)?;
    let sol = solve_error_with_report(&prob, &disc, &signal, cfg.method, report)?;
    if let Some(path) = &cfg.out {
        write_field_csv(None, &sample_exact(&disc, &signal), &sol.e, open_out(path)?)?;
    }
    writeln!(out, "residual: {}", fmt_f64(sol.residual_norm))?;
    writeln!(out, "rank: {}", sol.rank)?;
    print_summary(out, "", &error_summary(&sol.e))?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let points = run_sweep(cfg)?;
    match &cfg.out {
        Some(path) => write_sweep_csv(&points, open_out(path)?)?,
        None => write_sweep_csv(&points, &mut *out)?,
    }
    if let Some(path) = &cfg.grid {
        write_grid_csv(&points, cfg.discretization()?.tau(), open_out(path)?)?;
    }
    if let Some(path) = &cfg.svg {
        fs::write(path, sweep_svg(&points))?;
    }
    Ok(())
}

pub fn cmd_diagnose(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let disc = cfg.discretization()?;
    let s = cfg.scheme(&disc)?;
    let zero = |_: usize, _: usize| Some(0.0);
    let paper = AssembledProblem::new(&s, &disc, &zero, ClosureVariant::Paper)?.normalize();
    let pair =
        SylvesterProblem::new(paper.m1.clone(), paper.m2.clone(), DenseMatrix::zeros(disc.interior(), disc.nt()))?;
    let mut report = diagnose(&pair, DEFAULT_SEP_TOL)?;
    report.notes = crate::sylvester::paper_variant_notes(&s);
    print_header(out, cfg, &disc)?;
    writeln!(out, "spectrum_m1: {}", fmt_spectrum(&report.spectrum_a))?;
    writeln!(out, "spectrum_neg_m2: {}", fmt_spectrum(&report.spectrum_neg_b))?;
    print_report(out, "", &report)?;
    if s.has_shift_operator() {
        let full = diagnose_assembled(&paper, DEFAULT_SEP_TOL)?;
        writeln!(out, "operator_unique: {}", full.unique)?;
        writeln!(out, "operator_min_separation: {}", fmt_f64(full.min_separation))?;
        writeln!(out, "operator_sigma_min: {}", fmt_f64(smallest_singular_value(&paper)?))?;
    }
    let causal = AssembledProblem::new(&s, &disc, &zero, ClosureVariant::Causal)?.normalize();
    let cr = diagnose_assembled(&causal, DEFAULT_SEP_TOL)?;
    writeln!(out, "causal_unique: {}", cr.unique)?;
    writeln!(out, "causal_min_separation: {}", fmt_f64(cr.min_separation))?;
    Ok(())
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Numerical => 2,
        ErrorKind::Singular => 3,
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<()> {
    let flags = command.args().clone();
    let base = match &flags.config {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Error::Usage(format!("cannot read config {}: {e}", p.display())))?;
            RunArgs::from_config_text(&text)?
        }
        None => RunArgs::default(),
    };
    let cfg = RunConfig::resolve(flags.overlay(base))?;
    match command {
        Command::Simulate(_) => cmd_simulate(&cfg, out),
        Command::SolveError(_) => cmd_solve_error(&cfg, out),
        Command::Sweep(_) => cmd_sweep(&cfg, out),
        Command::Diagnose(_) => cmd_diagnose(&cfg, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let name = cli.command.name();
    let result = execute(&cli.command, out);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.kind() == ErrorKind::Usage {
                if let Some(sub) = Cli::command().find_subcommand_mut(name) {
                    let _ = writeln!(err, "{}", sub.render_usage());
                }
            }
            exit_code(e.kind())
        }
    }
}
