//! Batch verification of both inequalities over the function catalog and a fixed set of
//! domains. Everything here is deterministic for a given config and seed.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::fields::RadialField;
use crate::geometry::{pad_axes, StarDomain, StarProfile};
use crate::hardy::{verify_batch, Mode};
use crate::quadrature::{QuadratureRule, Resolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteDomain {
    Ball,
    Ellipsoid,
    Star,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Dimensions for the subcritical runs, `p = 1, ..., n-1` each.
    pub dims: Vec<usize>,
    /// Dimensions for the critical runs (`p = n`).
    pub critical_dims: Vec<usize>,
    pub domains: Vec<SuiteDomain>,
    /// Ellipsoid axis parameters, truncated or padded with the last entry to length `n`.
    pub ellipsoid_axes: Vec<f64>,
    /// Star profile `constant + linear . w`.
    pub star_constant: f64,
    pub star_linear: Vec<f64>,
    /// Catalog names; empty means the whole catalog.
    pub functions: Vec<String>,
    /// Rule for subcritical runs. The integrands are smooth in `r` up to `r^(n-1-p)`,
    /// so a shallow radial mesh suffices.
    pub rule: Resolution,
    /// Rule for critical runs; needs deep grading for the logarithmic weight.
    pub critical_rule: Resolution,
    pub tolerance: f64,
    pub critical_tolerance: f64,
    /// Bound on the two-grid error bar of each subcritical quotient.
    pub error_tolerance: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dims: vec![3, 4, 5],
            critical_dims: vec![2, 3],
            domains: vec![SuiteDomain::Ball, SuiteDomain::Ellipsoid, SuiteDomain::Star],
            ellipsoid_axes: vec![1.0, 2.0, 2.0],
            star_constant: 1.0,
            star_linear: vec![0.3],
            functions: Vec::new(),
            rule: Resolution::default()
                .with_angular_order(8)
                .with_pole_levels(2)
                .with_radial(1, 8),
            critical_rule: Resolution::default().with_angular_order(8),
            tolerance: 1e-6,
            critical_tolerance: 1e-4,
            error_tolerance: 1e-6,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() && self.critical_dims.is_empty() {
            return Err(Error::Config("suite: no dimensions selected".into()));
        }
        if let Some(n) = self.dims.iter().find(|&&n| n < 3) {
            return Err(Error::Config(format!("suite: subcritical runs need n >= 3, got {n}")));
        }
        if let Some(n) = self.critical_dims.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("suite: critical runs need n >= 2, got {n}")));
        }
        if self.domains.is_empty() {
            return Err(Error::Config("suite: no domains selected".into()));
        }
        for name in &self.functions {
            if !catalog::NAMES.contains(&name.as_str()) {
                return Err(Error::Config(format!("suite: unknown catalog function {name:?}")));
            }
        }
        self.rule
            .validate()
            .and_then(|_| self.critical_rule.validate())
            .map_err(|e| Error::Config(format!("suite: {e}")))
    }

    pub fn domain(&self, kind: SuiteDomain, n: usize, seed: u64) -> Result<StarDomain> {
        match kind {
            SuiteDomain::Ball => StarDomain::ball(n, 1.0),
            SuiteDomain::Ellipsoid => {
                let k = self.ellipsoid_axes.len().min(n);
                StarDomain::ellipsoid(&pad_axes(&self.ellipsoid_axes[..k], n)?)
            }
            SuiteDomain::Star => StarDomain::star(
                n,
                StarProfile::linear(self.star_constant, self.star_linear.clone()),
                None,
                seed,
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub mode: Mode,
    pub domain: String,
    pub function: String,
    pub n: usize,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "Q_error")]
    pub q_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub cases: usize,
    pub failures: usize,
    #[serde(rename = "max_Q")]
    pub max_q: f64,
    #[serde(rename = "max_Q_error")]
    pub max_q_error: f64,
}

impl SuiteSummary {
    fn absorb(&mut self, e: &SuiteEntry) {
        self.cases += 1;
        self.failures += usize::from(!e.passed);
        self.max_q = self.max_q.max(e.q);
        self.max_q_error = self.max_q_error.max(e.q_error);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
    pub subcritical: SuiteSummary,
    pub critical: SuiteSummary,
    pub passed: bool,
}

fn names(cfg: &SuiteConfig) -> Vec<&str> {
    if cfg.functions.is_empty() {
        catalog::NAMES.to_vec()
    } else {
        cfg.functions.iter().map(String::as_str).collect()
    }
}

pub fn run_suite(cfg: &SuiteConfig, seed: u64) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut entries = Vec::new();
    let mut sub = SuiteSummary::default();
    let mut crit = SuiteSummary::default();
    let runs = cfg
        .dims
        .iter()
        .map(|&n| (n, Mode::Subcritical))
        .chain(cfg.critical_dims.iter().map(|&n| (n, Mode::Critical)));
    for (n, mode) in runs {
        let (res, ps, tol) = if mode == Mode::Critical {
            (&cfg.critical_rule, vec![n as f64], cfg.critical_tolerance)
        } else {
            (&cfg.rule, (1..n).map(|p| p as f64).collect(), cfg.tolerance)
        };
        let mut res = res.clone();
        res.seed = seed;
        let rule = QuadratureRule::new(n, res)?;
        for &kind in &cfg.domains {
            let d = Arc::new(cfg.domain(kind, n, seed)?);
            let f = RadialField::canonical(d.clone());
            for name in names(cfg) {
                let u = catalog::by_name(name, n)?;
                for r in verify_batch(u.as_ref(), Some(&f), &d, &ps, mode, &rule)? {
                    let passed = r.holds(tol) && (mode == Mode::Critical || r.q_error < cfg.error_tolerance);
                    let e = SuiteEntry {
                        mode,
                        domain: r.domain,
                        function: name.to_string(),
                        n,
                        p: r.p,
                        lhs: r.lhs,
                        rhs: r.rhs,
                        constant: r.constant,
                        q: r.q,
                        q_error: r.q_error,
                        passed,
                    };
                    if mode == Mode::Critical {
                        crit.absorb(&e);
                    } else {
                        sub.absorb(&e);
                    }
                    entries.push(e);
                }
            }
        }
    }
    let passed = sub.failures == 0 && crit.failures == 0;
    Ok(SuiteReport {
        entries,
        subcritical: sub,
        critical: crit,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes_and_is_reproducible() {
        let cfg = SuiteConfig {
            dims: vec![3],
            critical_dims: vec![2],
            functions: vec!["x1".into(), "abs2".into()],
            critical_rule: Resolution::default().with_angular_order(8).with_radial(24, 6),
            ..SuiteConfig::default()
        };
        let a = run_suite(&cfg, 3).unwrap();
        let b = run_suite(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert!(
            a.passed,
            "{:#?}",
            a.entries.iter().filter(|e| !e.passed).collect::<Vec<_>>()
        );
        assert_eq!(a.subcritical.cases, 3 * 2 * 2);
        assert_eq!(a.critical.cases, 3 * 2);
        assert!(a.entries.iter().filter(|e| e.n == 2).all(|e| e.constant == 4.0));
    }

    #[test]
    fn rejects_bad_selection() {
        let cfg = SuiteConfig {
            dims: vec![2],
            ..SuiteConfig::default()
        };
        assert!(matches!(run_suite(&cfg, 0), Err(Error::Config(_))));
        let cfg = SuiteConfig {
            functions: vec!["nope".into()],
            ..SuiteConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
