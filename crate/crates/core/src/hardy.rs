//! Both sides of the boundary-term-free Hardy inequalities, the classical baselines
//! and the pointwise modulus estimate `|x . grad|g|| <= |x . grad g|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_field, RadialField};
use crate::funcspace::{fd_step, Exponents, ScalarField};
use crate::geometry::StarDomain;
use crate::quadrature::{integrate_rays, log_ratio, Integral, QuadratureRule, RadialRange, RayIntegrand};
use crate::sampling;
use crate::vecops::{dot, norm, pow_abs};

/// Both sides below this are treated as a degenerate `0 <= 0`.
pub const DEGENERATE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Subcritical,
    Critical,
    ClassicalSubcritical,
    ClassicalCritical,
}

impl Mode {
    pub fn is_classical(self) -> bool {
        matches!(self, Mode::ClassicalSubcritical | Mode::ClassicalCritical)
    }

    pub fn is_critical(self) -> bool {
        matches!(self, Mode::Critical | Mode::ClassicalCritical)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub mode: Mode,
    pub function: String,
    pub domain: String,
    pub n: usize,
    pub p: f64,
    pub lhs: f64,
    pub rhs_integral: f64,
    pub constant: f64,
    pub rhs: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub defect: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    /// `|Q - Q_coarse|`, the two-grid error bar of the quotient.
    #[serde(rename = "Q_error")]
    pub q_error: f64,
    pub nodes: usize,
}

impl InequalityReport {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        mode: Mode,
        u: &dyn ScalarField,
        d: &StarDomain,
        e: Exponents,
        constant: f64,
        lhs: Integral,
        rhs_integral: Integral,
        coarse: (f64, f64),
        nodes: usize,
    ) -> Self {
        let rhs = constant * rhs_integral.value;
        let q = quotient(lhs.value, rhs);
        let q_coarse = quotient(coarse.0, constant * coarse.1);
        let q_error = if q.is_finite() && q_coarse.is_finite() {
            (q - q_coarse).abs()
        } else {
            f64::INFINITY
        };
        InequalityReport {
            mode,
            function: u.name(),
            domain: d.describe(),
            n: e.n,
            p: e.p,
            lhs: lhs.value,
            rhs_integral: rhs_integral.value,
            constant,
            rhs,
            q,
            defect: rhs - lhs.value,
            lhs_error: lhs.error_estimate,
            rhs_error: constant * rhs_integral.error_estimate,
            q_error,
            nodes,
        }
    }

    /// `Q <= 1 + tol`, counting the quotient's own error bar against it.
    pub fn holds(&self, tol: f64) -> bool {
        self.q.is_finite() && self.q <= 1.0 + tol
    }
}

/// `lhs / rhs`, defined as 0 when both sides vanish.
pub fn quotient(lhs: f64, rhs: f64) -> f64 {
    if lhs.abs() < DEGENERATE && rhs.abs() < DEGENERATE {
        0.0
    } else {
        lhs / rhs
    }
}

/// Per-node integrand for a batch of exponents. Components come in pairs
/// `(lhs_k, rhs_integral_k)` for each `p_k`.
struct HardyIntegrand<'a> {
    mode: Mode,
    u: &'a dyn ScalarField,
    field: Option<&'a RadialField>,
    ps: &'a [f64],
    m: f64,
    /// `u(f(x))` on the current ray.
    u_f: f64,
    grad: Vec<f64>,
    probe: Vec<f64>,
    fbuf: Vec<f64>,
}

impl<'a> HardyIntegrand<'a> {
    fn radial_derivative(&mut self, x: &[f64], r: f64) -> f64 {
        if self.u.has_analytic_gradient() {
            self.u.gradient(x, &mut self.grad);
            dot(&self.grad, x) / r
        } else {
            // directional difference along the ray; two evaluations instead of 2n
            let h = fd_step(x);
            let s = (r + h) / r;
            self.probe.iter_mut().zip(x).for_each(|(p, v)| *p = v * s);
            let up = self.u.value(&self.probe);
            let s = (r - h) / r;
            self.probe.iter_mut().zip(x).for_each(|(p, v)| *p = v * s);
            let down = self.u.value(&self.probe);
            (up - down) / (2.0 * h)
        }
    }
}

impl RayIntegrand for HardyIntegrand<'_> {
    fn components(&self) -> usize {
        2 * self.ps.len()
    }

    fn log_singular_origin(&self) -> bool {
        self.mode.is_critical()
    }

    fn enter_ray(&mut self, w: &[f64], boundary_radius: f64) -> Result<()> {
        if let Some(f) = self.field {
            // f is constant on rays, so one evaluation per direction suffices
            self.probe
                .iter_mut()
                .zip(w)
                .for_each(|(p, v)| *p = 0.5 * boundary_radius * v);
            f.apply(&self.probe, &mut self.fbuf)?;
            self.u_f = self.u.boundary_value(&self.fbuf);
            if !self.u_f.is_finite() {
                return Err(Error::NonFinite {
                    point: self.fbuf.clone(),
                    value: self.u_f,
                });
            }
        }
        Ok(())
    }

    fn eval(&mut self, x: &[f64], r: f64, out: &mut [f64]) {
        let v = self.u.value(x);
        let diff = if self.mode.is_classical() { v } else { v - self.u_f };
        let weight_base = if self.mode.is_critical() {
            r * log_ratio(self.m, r)
        } else {
            r
        };
        let deriv = if self.mode == Mode::ClassicalSubcritical {
            self.u.gradient(x, &mut self.grad);
            norm(&self.grad)
        } else {
            self.radial_derivative(x, r)
        };
        for (k, &p) in self.ps.iter().enumerate() {
            out[2 * k] = pow_abs(diff / weight_base, p);
            out[2 * k + 1] = pow_abs(deriv, p);
        }
    }
}

fn check_exponents(mode: Mode, n: usize, p: f64) -> Result<Exponents> {
    match mode {
        Mode::Subcritical => {
            if n < 3 {
                return Err(Error::Hypothesis(format!(
                    "the subcritical inequality requires n >= 3, got n = {n}"
                )));
            }
            Exponents::subcritical(n, p)
        }
        Mode::ClassicalSubcritical => Exponents::subcritical(n, p),
        Mode::Critical | Mode::ClassicalCritical => {
            if p != n as f64 {
                return Err(Error::Hypothesis(format!(
                    "critical mode requires p = n = {n}, got p = {p}"
                )));
            }
            Exponents::critical(n)
        }
    }
}

/// Ray invariance and boundary identity of `f` on a small seeded sample.
fn check_field_hypotheses(f: &RadialField, d: &StarDomain) -> Result<()> {
    if f.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: f.dim(),
        });
    }
    if f.is_closed_form() {
        return Ok(());
    }
    let report = check_field(f, 64, 0xf1e1d);
    let tol = 1e-9 * d.max_radius();
    if report.ray_invariance_error > tol || report.boundary_identity_error > tol {
        return Err(Error::Hypothesis(format!(
            "field {} is not ray-invariant with f(x) = x on the boundary (ray error {:.3e}, boundary error {:.3e})",
            f.kind_name(),
            report.ray_invariance_error,
            report.boundary_identity_error
        )));
    }
    Ok(())
}

/// Evaluates one inequality for several exponents from a single pass of node evaluations.
/// For critical modes `ps` must be `[n]`.
pub fn verify_batch(
    u: &dyn ScalarField,
    f: Option<&RadialField>,
    d: &StarDomain,
    ps: &[f64],
    mode: Mode,
    rule: &QuadratureRule,
) -> Result<Vec<InequalityReport>> {
    let n = d.dim();
    let exps: Vec<Exponents> = ps.iter().map(|&p| check_exponents(mode, n, p)).collect::<Result<_>>()?;
    if ps.is_empty() {
        return Ok(Vec::new());
    }
    let field = if mode.is_classical() {
        None
    } else {
        let f = f.ok_or_else(|| Error::InvalidParameter("boundary-term-free modes need a radial field".into()))?;
        check_field_hypotheses(f, d)?;
        Some(f)
    };
    let mut it = HardyIntegrand {
        mode,
        u,
        field,
        ps,
        m: d.max_radius(),
        u_f: 0.0,
        grad: vec![0.0; n],
        probe: vec![0.0; n],
        fbuf: vec![0.0; n],
    };
    let grid = integrate_rays(d, &mut it, RadialRange::Full, rule)?;
    let nodes = rule.node_count();
    Ok(exps
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            InequalityReport::assemble(
                mode,
                u,
                d,
                e,
                e.constant(),
                grid.component(2 * k),
                grid.component(2 * k + 1),
                (grid.coarse[2 * k], grid.coarse[2 * k + 1]),
                nodes,
            )
        })
        .collect())
}

pub fn verify(
    u: &dyn ScalarField,
    f: &RadialField,
    d: &StarDomain,
    exponents: Exponents,
    mode: Mode,
    rule: &QuadratureRule,
) -> Result<InequalityReport> {
    if exponents.n != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: exponents.n,
        });
    }
    let mut reports = verify_batch(u, Some(f), d, &[exponents.p], mode, rule)?;
    Ok(reports.remove(0))
}

fn single_side(
    u: &dyn ScalarField,
    f: Option<&RadialField>,
    d: &StarDomain,
    p: f64,
    mode: Mode,
    rule: &QuadratureRule,
    side: usize,
) -> Result<Integral> {
    let r = verify_batch(u, f, d, &[p], mode, rule)?.remove(0);
    Ok(if side == 0 {
        Integral {
            value: r.lhs,
            error_estimate: r.lhs_error,
        }
    } else {
        Integral {
            value: r.rhs,
            error_estimate: r.rhs_error,
        }
    })
}

/// `int |u - u o f|^p / |x|^p`
pub fn lhs_subcritical(
    u: &dyn ScalarField,
    f: &RadialField,
    d: &StarDomain,
    p: f64,
    rule: &QuadratureRule,
) -> Result<Integral> {
    single_side(u, Some(f), d, p, Mode::Subcritical, rule, 0)
}

/// `(p/(n-p))^p int |x/|x| . grad u|^p`
pub fn rhs_subcritical(u: &dyn ScalarField, d: &StarDomain, p: f64, rule: &QuadratureRule) -> Result<Integral> {
    let f = RadialField::canonical(std::sync::Arc::new(d.clone()));
    single_side(u, Some(&f), d, p, Mode::Subcritical, rule, 1)
}

/// `int |u - u o f|^n / (|x|^n |log(M/|x|)|^n)`
pub fn lhs_critical(u: &dyn ScalarField, f: &RadialField, d: &StarDomain, rule: &QuadratureRule) -> Result<Integral> {
    single_side(u, Some(f), d, d.dim() as f64, Mode::Critical, rule, 0)
}

/// `(n/(n-1))^n int |x/|x| . grad u|^n`
pub fn rhs_critical(u: &dyn ScalarField, d: &StarDomain, rule: &QuadratureRule) -> Result<Integral> {
    let f = RadialField::canonical(std::sync::Arc::new(d.clone()));
    single_side(u, Some(&f), d, d.dim() as f64, Mode::Critical, rule, 1)
}

/// Classical inequality for a function vanishing on the boundary: the full-gradient
/// form for `p < n`, the log-weighted radial form for `p = n`.
pub fn classical_baseline(
    u: &dyn ScalarField,
    d: &StarDomain,
    p: f64,
    rule: &QuadratureRule,
) -> Result<InequalityReport> {
    let n = d.dim();
    let mut rng = sampling::rng(0xb0d);
    for _ in 0..256 {
        let w = sampling::random_direction(&mut rng, n);
        let b = d.boundary_point(&w)?;
        let v = u.boundary_value(&b);
        if !(v.abs() <= 1e-9) {
            return Err(Error::Hypothesis(format!(
                "{} does not vanish on the boundary: u({b:?}) = {v}",
                u.name()
            )));
        }
    }
    let mode = if p == n as f64 {
        Mode::ClassicalCritical
    } else {
        Mode::ClassicalSubcritical
    };
    Ok(verify_batch(u, None, d, &[p], mode, rule)?.remove(0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub function: String,
    pub samples: usize,
    pub skipped: usize,
    pub seed: u64,
    /// Largest `|x . grad|g|| - |x . grad g|` over the sample.
    pub max_violation: f64,
}

/// Samples the unit ball of `R^n` and compares FD radial derivatives of `|g|` and `g`.
/// Points where `|g| <= 1e-6` or where `g` changes sign across the stencil are skipped.
pub fn lemma2_check(g: &dyn ScalarField, n: usize, samples: usize, seed: u64) -> Lemma2Report {
    let mut rng = sampling::rng(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut skipped = 0;
    let mut taken = 0;
    let mut up = vec![0.0; n];
    let mut down = vec![0.0; n];
    while taken < samples && skipped < 100 * samples.max(1) {
        let w = sampling::random_direction(&mut rng, n);
        let r: f64 = rand::Rng::gen_range(&mut rng, 0.01..1.0);
        let x: Vec<f64> = w.iter().map(|v| v * r).collect();
        let gx = g.value(&x);
        let h = fd_step(&x);
        for i in 0..n {
            up[i] = x[i] + h * w[i];
            down[i] = x[i] - h * w[i];
        }
        let (gu, gd) = (g.value(&up), g.value(&down));
        if gx.abs() <= 1e-6 || gu.signum() != gd.signum() || gu.signum() != gx.signum() {
            skipped += 1;
            continue;
        }
        // x . grad = r * (directional derivative along w)
        let plain = r * (gu - gd) / (2.0 * h);
        let modulus = r * (gu.abs() - gd.abs()) / (2.0 * h);
        worst = worst.max(modulus.abs() - plain.abs());
        taken += 1;
    }
    Lemma2Report {
        function: g.name(),
        samples: taken,
        skipped,
        seed,
        max_violation: if taken == 0 { 0.0 } else { worst.max(0.0) },
    }
}
