//! Command-line driver. Exit status: 0 on success, 2 when an asserted property fails
//! beyond tolerance, 1 on usage, config or hypothesis errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, MaximizerChoice};
use crate::error::Result;
use crate::fields::check_field;
use crate::hardy::verify;
use crate::probes::{beta_grid, maximizer_check, prop1_probe, sharpness_scan};
use crate::quadrature::QuadratureRule;
use crate::report::{write_csv, write_json, BetaRow, Envelope, LadderRow, QuotientRow};
use crate::suite::run_suite;

#[derive(Debug, Parser)]
#[command(
    name = "hardy-lab",
    version,
    about = "Numerical checks of boundary-term-free Hardy inequalities"
)]
pub struct Cli {
    /// Experiment config (TOML); defaults apply to everything left out.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed, overriding the config's `seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one inequality for the configured function, domain and exponent.
    Verify,
    /// Check the configured radial field against its boundary value problem.
    FieldCheck,
    /// Check equality for a closed-form maximizer on the configured ellipsoid.
    Maximizer {
        /// Overrides `[maximizer] kind`.
        #[arg(value_enum)]
        kind: Option<MaximizerChoice>,
    },
    /// Scan the beta family and compare with the closed-form quotient.
    Sharpness,
    /// Divergence probe for the point-singular counterexample family.
    Counterexample,
    /// Both inequalities over the function catalog and the standard domains.
    Suite,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::FieldCheck => "field-check",
            Command::Maximizer { .. } => "maximizer",
            Command::Sharpness => "sharpness",
            Command::Counterexample => "counterexample",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn emit<T: Serialize>(cmd: &str, cfg: &ExperimentConfig, passed: bool, result: &T) -> Result<PathBuf> {
    let name = format!("{}.json", cmd.replace('-', "_"));
    write_json(&cfg.output.dir, &name, &Envelope::new(cmd, cfg, passed, result))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let raw = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cfg = raw.resolve(cli.seed, cli.out.clone())?;
    let cmd = cli.command.name();
    let dir = cfg.output.dir.clone();
    let mut files = Vec::new();
    let (passed, summary) = match &cli.command {
        Command::Verify => {
            let d = cfg.build_domain()?;
            let f = cfg.build_field(&d)?;
            let u = cfg.build_function(&d)?;
            let e = cfg.exponents()?;
            let rule = QuadratureRule::new(cfg.dim(), cfg.resolution())?;
            let r = verify(u.as_ref(), &f, f.domain(), e, cfg.mode(), &rule)?;
            let tol = cfg
                .verify
                .tolerance
                .unwrap_or(if e.is_critical() { 1e-4 } else { 1e-6 });
            let passed = r.holds(tol);
            files.push(emit(cmd, &cfg, passed, &r)?);
            if cfg.output.csv {
                let row = QuotientRow {
                    n: r.n,
                    p: r.p,
                    q: r.q,
                    q_err: r.q_error,
                    mode: serde_json::to_value(r.mode)?.as_str().unwrap_or_default().to_string(),
                    domain: r.domain.clone(),
                    function: r.function.clone(),
                };
                files.push(write_csv(&dir, "verify.csv", &[row])?);
            }
            (
                passed,
                format!(
                    "Q = {:.12} +- {:.1e} (lhs {:.6e}, rhs {:.6e})",
                    r.q, r.q_error, r.lhs, r.rhs
                ),
            )
        }
        Command::FieldCheck => {
            let d = cfg.build_domain()?;
            let f = cfg.build_field(&d)?;
            let r = check_field(&f, cfg.field_check.samples, cfg.seed);
            let passed = r.passes(cfg.field_check.tolerance);
            files.push(emit(cmd, &cfg, passed, &r)?);
            (
                passed,
                format!("{} field on {}: max error {:.3e}", r.field, r.domain, r.max_error()),
            )
        }
        Command::Maximizer { kind } => {
            let choice = kind.unwrap_or(cfg.maximizer.kind);
            let mk = cfg.maximizer_kind(choice)?;
            let rule = QuadratureRule::new(cfg.dim(), cfg.resolution())?;
            let r = maximizer_check(&mk, &rule)?;
            let tol = cfg.maximizer.tolerance.unwrap_or(match choice {
                MaximizerChoice::Xi => 1e-6,
                MaximizerChoice::Eta => 1e-4,
            });
            let passed = (r.report.q - 1.0).abs() <= tol && r.i_relative_gap <= cfg.maximizer.gap_tolerance;
            files.push(emit(cmd, &cfg, passed, &r)?);
            (
                passed,
                format!(
                    "Q = {:.12} +- {:.1e}, I = {:.12} (sphere form gap {:.1e})",
                    r.report.q, r.report.q_error, r.i_volume, r.i_relative_gap
                ),
            )
        }
        Command::Sharpness => {
            let d = cfg.build_domain()?;
            let f = cfg.build_field(&d)?;
            let e = cfg.exponents()?;
            let s = &cfg.sharpness;
            let grid = if s.betas.is_empty() {
                beta_grid(e.kappa(), s.max_factor, s.points)
            } else {
                s.betas.clone()
            };
            let rule = QuadratureRule::new(cfg.dim(), cfg.resolution())?;
            let scan = sharpness_scan(f.domain().clone(), &f, cfg.psi(s.psi_index)?, e.p, e.n, &grid, &rule)?;
            let lowest = grid.iter().copied().fold(f64::INFINITY, f64::min);
            let passed = scan.closed_form_residual <= s.tolerance && scan.argmax_beta == lowest;
            files.push(emit(cmd, &cfg, passed, &scan)?);
            if cfg.output.csv {
                let rows: Vec<BetaRow> = scan
                    .beta_grid
                    .iter()
                    .zip(&scan.q_values)
                    .zip(&scan.q_closed_form)
                    .map(|((&beta, &q), &c)| BetaRow {
                        beta,
                        q,
                        q_closed_form: c,
                    })
                    .collect();
                files.push(write_csv(&dir, "sharpness.csv", &rows)?);
            }
            (
                passed,
                format!(
                    "argmax beta = {} with Q = {:.12}; closed-form residual {:.1e}",
                    scan.argmax_beta, scan.q_at_argmax, scan.closed_form_residual
                ),
            )
        }
        Command::Counterexample => {
            let c = &cfg.counterexample;
            let probe = prop1_probe(cfg.dim(), cfg.p(), c.alpha, &cfg.counterexample_x0(), &c.ladder)?;
            let passed = probe.consistent(c.tolerance);
            files.push(emit(cmd, &cfg, passed, &probe)?);
            if cfg.output.csv {
                for (name, fit) in [("sphere", &probe.sphere), ("gradient", &probe.gradient)] {
                    let rows: Vec<LadderRow> = fit
                        .ladder
                        .iter()
                        .map(|&(delta, value)| LadderRow { delta, value })
                        .collect();
                    files.push(write_csv(&dir, &format!("counterexample_{name}.csv"), &rows)?);
                }
            }
            (
                passed,
                format!(
                    "sphere: {:?} (slope {:.4}, predicted {}); gradient: {:?} (slope {:.4}, predicted {})",
                    probe.sphere.growth,
                    probe.sphere.fitted_exponent,
                    probe.predicted_sphere_exponent,
                    probe.gradient.growth,
                    probe.gradient.fitted_exponent,
                    probe.predicted_gradient_exponent
                ),
            )
        }
        Command::Suite => {
            let r = run_suite(&cfg.suite, cfg.seed)?;
            files.push(emit(cmd, &cfg, r.passed, &r)?);
            if cfg.output.csv {
                let rows: Vec<QuotientRow> = r
                    .entries
                    .iter()
                    .map(|e| QuotientRow {
                        n: e.n,
                        p: e.p,
                        q: e.q,
                        q_err: e.q_error,
                        mode: if e.mode.is_critical() {
                            "critical"
                        } else {
                            "subcritical"
                        }
                        .into(),
                        domain: e.domain.clone(),
                        function: e.function.clone(),
                    })
                    .collect();
                files.push(write_csv(&dir, "suite.csv", &rows)?);
            }
            (
                r.passed,
                format!(
                    "{} subcritical cases (max Q {:.9}, max error {:.1e}), {} critical cases (max Q {:.9}); {} failures",
                    r.subcritical.cases,
                    r.subcritical.max_q,
                    r.subcritical.max_q_error,
                    r.critical.cases,
                    r.critical.max_q,
                    r.subcritical.failures + r.critical.failures
                ),
            )
        }
    };
    Ok(Outcome { passed, files, summary })
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(o) => {
            println!("{}: {}", cli.command.name(), o.summary);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.passed {
                0
            } else {
                println!("{}: FAILED", cli.command.name());
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
