//! Experiments beyond single evaluations: divergence-rate fits for the singular
//! counterexample, the exponent scan of the extremal family, and maximizer attainment.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::RadialField;
use crate::funcspace::{
    beta_family, maximizer_eta, maximizer_xi, prop1_function, prop1_memberships, pullback_sphere_gradient, Exponents,
    Prop1Memberships, ScalarField, SharedField,
};
use crate::geometry::StarDomain;
use crate::hardy::{verify, InequalityReport, Mode};
use crate::quadrature::{
    integrate, integrate_log_weighted, integrate_sphere, integrate_sphere_cap_complement, QuadratureRule,
};
use crate::vecops::{norm, pow_abs};

/// Slopes inside this band count as "no power law".
pub const LOG_BAND: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Bounded,
    Logarithmic,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceFit {
    /// `(delta, truncated value)`, delta decreasing.
    pub ladder: Vec<(f64, f64)>,
    /// Slope of `log |I(delta_k) - I(delta_{k-1})|` against `log delta_k` over the last
    /// (up to) four increments; equals `s` when `I(delta) ~ C + A delta^s`.
    pub fitted_exponent: f64,
    pub log_flag: bool,
    pub r_squared: f64,
    pub growth: Growth,
    /// Geometric-series extrapolation of the limit (bounded ladders only).
    pub limit_estimate: Option<f64>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, r^2)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (b, r2)
}

fn check_ladder(deltas: &[f64]) -> Result<()> {
    if deltas.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "delta ladder needs at least 4 points, got {}",
            deltas.len()
        )));
    }
    let ok = deltas.iter().all(|&d| d > 0.0 && d < 1.0) && deltas.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "delta ladder must be strictly decreasing inside (0, 1): {deltas:?}"
        )));
    }
    Ok(())
}

/// Fits the growth of a truncated integral along a decreasing ladder.
pub fn fit_divergence(ladder: Vec<(f64, f64)>) -> Result<DivergenceFit> {
    let deltas: Vec<f64> = ladder.iter().map(|p| p.0).collect();
    check_ladder(&deltas)?;
    if let Some(&(d, v)) = ladder.iter().find(|p| !p.1.is_finite()) {
        return Err(Error::NonFinite {
            point: vec![d],
            value: v,
        });
    }
    let scale = ladder
        .iter()
        .map(|p| p.1.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let start = ladder.len().saturating_sub(5);
    let tail = &ladder[start..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut increments = Vec::new();
    for w in tail.windows(2) {
        let inc = w[1].1 - w[0].1;
        increments.push(inc);
        if inc.abs() > 1e-13 * scale {
            xs.push(w[1].0.ln());
            ys.push(inc.abs().ln());
        }
    }
    let growing = increments.iter().all(|&i| i > 1e-13 * scale);
    if xs.len() < 2 {
        // increments vanish: the ladder has converged
        return Ok(DivergenceFit {
            limit_estimate: ladder.last().map(|p| p.1),
            ladder,
            fitted_exponent: f64::INFINITY,
            log_flag: false,
            r_squared: 1.0,
            growth: Growth::Bounded,
        });
    }
    let (slope, r2) = least_squares(&xs, &ys);
    let growth = if slope <= -LOG_BAND && growing {
        Growth::Power
    } else if slope.abs() < LOG_BAND && growing {
        Growth::Logarithmic
    } else {
        Growth::Bounded
    };
    let limit_estimate = if growth == Growth::Bounded && slope > 0.0 {
        let (d1, v1) = ladder[ladder.len() - 1];
        let d0 = ladder[ladder.len() - 2].0;
        let q = (d1 / d0).powf(slope);
        Some(v1 + increments.last().copied().unwrap_or(0.0) * q / (1.0 - q))
    } else {
        None
    };
    Ok(DivergenceFit {
        ladder,
        fitted_exponent: slope,
        log_flag: growth == Growth::Logarithmic,
        r_squared: r2,
        growth,
        limit_estimate,
    })
}

/// Default ladder `2^-k`, `k = 3..=10`.
pub fn default_ladder() -> Vec<f64> {
    (3..=10).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop1Probe {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub memberships: Prop1Memberships,
    /// `(n-1) - p alpha`
    pub predicted_sphere_exponent: f64,
    /// `(n-1) - p (alpha + 1)`
    pub predicted_gradient_exponent: f64,
    /// `int_{|w - x0| > delta} |u(w)|^p dw`
    pub sphere: DivergenceFit,
    /// `int_{|w - x0| > delta} |grad_T u(w)|^p dw`
    pub gradient: DivergenceFit,
}

/// Whether a fit agrees with the growth implied by the exponent `s` of `I(delta) ~ delta^s`:
/// a power law within relative `tol` for `s < 0`, logarithmic for `s = 0`, bounded otherwise.
pub fn fit_matches(fit: &DivergenceFit, s: f64, tol: f64) -> bool {
    if s < 0.0 {
        fit.growth == Growth::Power && (fit.fitted_exponent - s).abs() <= tol * s.abs()
    } else if s == 0.0 {
        fit.growth == Growth::Logarithmic
    } else {
        fit.growth == Growth::Bounded
    }
}

impl Prop1Probe {
    /// Both fits agree with their predicted exponents, and the predicted exponents agree
    /// with the membership thresholds.
    pub fn consistent(&self, tol: f64) -> bool {
        let m = &self.memberships;
        fit_matches(&self.sphere, self.predicted_sphere_exponent, tol)
            && fit_matches(&self.gradient, self.predicted_gradient_exponent, tol)
            && m.pullback_in_lp == (self.predicted_sphere_exponent > 0.0)
    }
}

/// Gauss order of the cap-complement rule used by the probe.
const CAP_ORDER: usize = 16;

pub fn prop1_probe(n: usize, p: f64, alpha: f64, x0: &[f64], ladder: &[f64]) -> Result<Prop1Probe> {
    Exponents::subcritical(n, p)?;
    check_ladder(ladder)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let u = prop1_function(alpha, x0)?;
    let mut sphere = Vec::with_capacity(ladder.len());
    let mut gradient = Vec::with_capacity(ladder.len());
    for &delta in ladder {
        let s = integrate_sphere_cap_complement(n, |w| pow_abs(u.value(w), p), x0, delta, CAP_ORDER)?;
        let g = integrate_sphere_cap_complement(
            n,
            |w| match pullback_sphere_gradient(&u, w) {
                Ok(grad) => pow_abs(norm(&grad), p),
                Err(_) => f64::NAN,
            },
            x0,
            delta,
            CAP_ORDER,
        )?;
        sphere.push((delta, s));
        gradient.push((delta, g));
    }
    let nf = n as f64;
    Ok(Prop1Probe {
        n,
        p,
        alpha,
        x0: x0.to_vec(),
        memberships: prop1_memberships(n, p, alpha),
        predicted_sphere_exponent: (nf - 1.0) - p * alpha,
        predicted_gradient_exponent: (nf - 1.0) - p * (alpha + 1.0),
        sphere: fit_divergence(sphere)?,
        gradient: fit_divergence(gradient)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpnessScan {
    pub n: usize,
    pub p: f64,
    pub kappa: f64,
    pub psi: String,
    pub domain: String,
    pub beta_grid: Vec<f64>,
    #[serde(rename = "Q_values")]
    pub q_values: Vec<f64>,
    #[serde(rename = "Q_errors")]
    pub q_errors: Vec<f64>,
    /// `(kappa/beta)^p`
    #[serde(rename = "Q_closed_form")]
    pub q_closed_form: Vec<f64>,
    pub argmax_beta: f64,
    #[serde(rename = "Q_at_argmax")]
    pub q_at_argmax: f64,
    pub closed_form_residual: f64,
    pub nonincreasing: bool,
}

/// `n` equally spaced points on `[kappa, factor * kappa]`.
pub fn beta_grid(kappa: f64, factor: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![kappa];
    }
    (0..points)
        .map(|i| kappa + (factor - 1.0) * kappa * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn sharpness_scan(
    d: Arc<StarDomain>,
    f: &RadialField,
    psi: SharedField,
    p: f64,
    n: usize,
    grid: &[f64],
    rule: &QuadratureRule,
) -> Result<SharpnessScan> {
    let e = Exponents::subcritical(n, p)?;
    let kappa = e.kappa();
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty beta grid".into()));
    }
    if let Some(b) = grid.iter().find(|&&b| !(b >= kappa * (1.0 - 1e-14))) {
        return Err(Error::Hypothesis(format!("beta = {b} is below (n-p)/p = {kappa}")));
    }
    let mut q_values = Vec::with_capacity(grid.len());
    let mut q_errors = Vec::with_capacity(grid.len());
    let mut closed = Vec::with_capacity(grid.len());
    for &beta in grid {
        let u = beta_family(d.clone(), psi.clone(), beta, p, n)?;
        let r = verify(&u, f, &d, e, Mode::Subcritical, rule)?;
        q_values.push(r.q);
        q_errors.push(r.q_error);
        closed.push(pow_abs(kappa / beta, p));
    }
    let (imax, qmax) =
        q_values.iter().copied().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, q)| if q > acc.1 { (i, q) } else { acc },
        );
    let residual = q_values
        .iter()
        .zip(&closed)
        .map(|(q, c)| (q - c).abs())
        .fold(0.0, f64::max);
    let slack = q_errors.iter().fold(0.0f64, |a, &b| a.max(b)) + 1e-12;
    let nonincreasing = q_values.windows(2).all(|w| w[1] <= w[0] + slack);
    Ok(SharpnessScan {
        n,
        p,
        kappa,
        psi: psi.name(),
        domain: d.describe(),
        beta_grid: grid.to_vec(),
        q_values,
        q_errors,
        q_closed_form: closed,
        argmax_beta: grid[imax],
        q_at_argmax: qmax,
        closed_form_residual: residual,
        nonincreasing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaximizerKind {
    /// Subcritical maximizer on the ellipsoid `E_a`.
    Xi { axes: Vec<f64>, n: usize, p: f64 },
    /// Critical maximizer on the ellipsoid `E_a` (strict minimal axis, `alpha >= n/2`).
    Eta { axes: Vec<f64>, n: usize, alpha: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximizerReport {
    pub params: MaximizerKind,
    pub report: InequalityReport,
    /// `I` as a volume integral over the domain.
    pub i_volume: f64,
    /// `I` via the reduced integral over the unit sphere.
    pub i_sphere: f64,
    pub i_relative_gap: f64,
}

pub fn maximizer_check(kind: &MaximizerKind, rule: &QuadratureRule) -> Result<MaximizerReport> {
    match kind {
        MaximizerKind::Xi { axes, n, p } => {
            let xi = maximizer_xi(axes, *p, *n)?;
            let d = xi.domain.clone();
            let f = RadialField::ellipsoid(axes)?;
            let report = verify(&xi, &f, &d, Exponents::subcritical(*n, *p)?, Mode::Subcritical, rule)?;
            // I = int |psi|^p |x|^(n-2p): the common value of both sides
            let psi = xi.psi.clone();
            let (nf, pp) = (*n as f64, *p);
            let i_volume = integrate(&d, |x| pow_abs(psi.value(x), pp) * norm(x).powf(nf - 2.0 * pp), rule)?.value;
            let k = 2.0 * nf - 2.0 * pp;
            let i_sphere = integrate_sphere(|w| pow_abs(psi.value(w), pp) * d.radius(w).powf(k) / k, rule)?.value;
            Ok(finish(kind, report, i_volume, i_sphere))
        }
        MaximizerKind::Eta { axes, n, alpha } => {
            let eta = maximizer_eta(axes, *n, *alpha)?;
            let d = eta.domain.clone();
            let f = RadialField::ellipsoid(axes)?;
            let report = verify(&eta, &f, &d, Exponents::critical(*n)?, Mode::Critical, rule)?;
            let m = d.max_radius();
            let nf = *n as f64;
            let i_volume = integrate_log_weighted(
                &d,
                |x| pow_abs(eta.psi(x), nf) / pow_abs(norm(x), nf),
                2.0 * nf - 1.0,
                rule,
            )?
            .value;
            // (1/(2n-2)) int_S (M - r(w))^(n alpha) / log(M/r(w))^(2n-2) dw
            let i_sphere = integrate_sphere(
                |w| {
                    let r = d.radius(w);
                    let gap = (m - r).max(0.0);
                    if gap == 0.0 {
                        return 0.0;
                    }
                    pow_abs(gap, nf * alpha) / (m / r).ln().powf(2.0 * nf - 2.0)
                },
                rule,
            )?
            .value
                / (2.0 * nf - 2.0);
            Ok(finish(kind, report, i_volume, i_sphere))
        }
    }
}

fn finish(kind: &MaximizerKind, report: InequalityReport, i_volume: f64, i_sphere: f64) -> MaximizerReport {
    let scale = i_volume.abs().max(i_sphere.abs()).max(f64::MIN_POSITIVE);
    MaximizerReport {
        params: kind.clone(),
        report,
        i_volume,
        i_sphere,
        i_relative_gap: (i_volume - i_sphere).abs() / scale,
    }
}
