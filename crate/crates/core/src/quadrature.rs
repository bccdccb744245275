//! Product quadrature on star domains in spherical coordinates: an angular rule on
//! the unit sphere times a radial rule on `(0, 1]` graded geometrically toward the
//! origin and mapped onto `(0, r(w))` along each direction.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::geometry::StarDomain;
use crate::sampling;
use crate::vecops::{distance, dot, norm, pairwise_sum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularScheme {
    /// Composite Gauss-Legendre in hyperspherical angles; panel breaks on every
    /// coordinate hyperplane.
    Product,
    /// Equal-weight seeded quasi-Monte Carlo directions.
    Qmc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Resolution {
    /// Gauss points per angular panel (product scheme).
    #[serde(alias = "angular_count")]
    pub angular_order: usize,
    /// Angular panels per quarter turn (product scheme).
    pub angular_panels: usize,
    /// Extra geometric panel levels of the leading angle toward the poles `+-e_1`.
    pub pole_levels: usize,
    /// Number of geometric radial levels `[2^-(k+1), 2^-k]`.
    pub radial_levels: usize,
    /// Gauss points per radial panel.
    pub panel_order: usize,
    /// Geometric levels toward the boundary in log-weighted (critical) integrals, where
    /// `log(M/r)` vanishes at the boundary along the max-radius directions.
    pub outer_levels: usize,
    pub angular_scheme: AngularScheme,
    /// Direction count for the QMC scheme.
    pub qmc_count: usize,
    pub seed: u64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            angular_order: 16,
            angular_panels: 1,
            pole_levels: 3,
            radial_levels: 40,
            panel_order: 8,
            outer_levels: 24,
            angular_scheme: AngularScheme::Product,
            qmc_count: 20_000,
            seed: 0,
        }
    }
}

impl Resolution {
    /// Defaults scaled so that a single evaluation stays within seconds: the product
    /// rule has `O(order^(n-1))` directions.
    pub fn for_dim(n: usize) -> Self {
        let angular_order = match n {
            0..=2 => 16,
            3 => 12,
            4 => 8,
            _ => 6,
        };
        Resolution {
            angular_order,
            ..Resolution::default()
        }
    }

    pub fn with_angular_order(mut self, q: usize) -> Self {
        self.angular_order = q;
        self
    }

    pub fn with_angular_panels(mut self, k: usize) -> Self {
        self.angular_panels = k;
        self
    }

    pub fn with_pole_levels(mut self, k: usize) -> Self {
        self.pole_levels = k;
        self
    }

    pub fn with_radial(mut self, levels: usize, order: usize) -> Self {
        self.radial_levels = levels;
        self.panel_order = order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.angular_order < 1 || self.angular_panels < 1 || self.panel_order < 1 || self.radial_levels < 1 {
            return Err(Error::InvalidParameter(format!(
                "resolution parameters must be positive: {self:?}"
            )));
        }
        if self.angular_scheme == AngularScheme::Qmc && self.qmc_count < 16 {
            return Err(Error::InvalidParameter("qmc_count must be at least 16".into()));
        }
        Ok(())
    }

    /// The next-coarser resolution used for two-grid error estimates.
    pub fn coarser(&self) -> Resolution {
        Resolution {
            angular_order: (self.angular_order * 3 / 4).max(2),
            angular_panels: self.angular_panels,
            pole_levels: self.pole_levels,
            radial_levels: (self.radial_levels * 3 / 4).max(1),
            panel_order: self.panel_order.saturating_sub(2).max(2),
            outer_levels: self.outer_levels * 3 / 4,
            angular_scheme: self.angular_scheme,
            qmc_count: (self.qmc_count / 2).max(8),
            seed: self.seed,
        }
    }
}

fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(NonZeroUsize::new(order.max(1)).expect("nonzero order"));
    gl.iter().map(|(x, w)| (*x, *w)).collect()
}

/// Nodes and weights of `order`-point Gauss on `[a, b]`.
fn gauss_on(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(order)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Panels of `[0, quarters * pi/2]`: `panels` per quarter turn, plus geometric breaks
/// `c +- (pi/2)/panels * 2^-j`, `j = 1..=pole_levels`, around the angles `c = 0, pi` (and
/// `2 pi` for a full turn).
fn angle_panels(quarters: usize, panels: usize, pole_levels: usize) -> Vec<(f64, f64)> {
    let h = PI / 2.0 / panels as f64;
    let end = quarters as f64 * PI / 2.0;
    let mut breaks: Vec<f64> = (0..=quarters * panels).map(|k| k as f64 * h).collect();
    breaks[quarters * panels] = end;
    let poles: Vec<f64> = (0..=quarters / 2).map(|k| k as f64 * PI).collect();
    for c in poles {
        for j in 1..=pole_levels {
            let t = h * 0.5f64.powi(j as i32);
            for b in [c - t, c + t] {
                if b > 0.0 && b < end {
                    breaks.push(b);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Surface measure of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

pub fn ball_volume(n: usize, radius: f64) -> f64 {
    sphere_area(n) * radius.powi(n as i32) / n as f64
}

/// Node/weight set on the unit sphere `S^{m-1}` in `R^m`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// Product rule in hyperspherical coordinates with `panels` Gauss panels per quarter
    /// turn in every angle, so the coordinate hyperplanes lie on panel boundaries. The
    /// leading angle (measured from `e_1`) is further graded geometrically toward the
    /// poles `+-e_1` with `pole_levels` levels.
    pub fn product(dim: usize, order: usize, panels: usize, pole_levels: usize) -> Self {
        match dim {
            0 => panic!("sphere rule needs dimension >= 1"),
            1 => SphereRule {
                dim,
                nodes: vec![1.0, -1.0],
                weights: vec![1.0, 1.0],
            },
            2 => {
                let mut nodes = Vec::new();
                let mut weights = Vec::new();
                for (a, b) in angle_panels(4, panels, pole_levels) {
                    for (phi, w) in gauss_on(order, a, b) {
                        nodes.extend_from_slice(&[phi.cos(), phi.sin()]);
                        weights.push(w);
                    }
                }
                SphereRule { dim, nodes, weights }
            }
            _ => {
                let sub = SphereRule::product(dim - 1, order, panels, 0);
                let polar = angle_panels(2, panels, pole_levels);
                let mut nodes = Vec::with_capacity(dim * sub.len() * polar.len() * order);
                let mut weights = Vec::with_capacity(sub.len() * polar.len() * order);
                for (a, b) in polar {
                    for (theta, w) in gauss_on(order, a, b) {
                        let (s, c) = theta.sin_cos();
                        let wt = w * s.powi(dim as i32 - 2);
                        for j in 0..sub.len() {
                            nodes.push(c);
                            nodes.extend(sub.node(j).iter().map(|v| v * s));
                            weights.push(wt * sub.weights[j]);
                        }
                    }
                }
                SphereRule { dim, nodes, weights }
            }
        }
    }

    pub fn qmc(dim: usize, count: usize, seed: u64) -> Self {
        let dirs = sampling::qmc_directions(dim, count, seed);
        let w = sphere_area(dim) / count as f64;
        SphereRule {
            dim,
            nodes: dirs.into_iter().flatten().collect(),
            weights: vec![w; count],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `sum_i w_i g(node_i)`, with non-finite values reported.
    pub fn apply<G: FnMut(&[f64]) -> f64>(&self, mut g: G) -> Result<f64> {
        let mut terms = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let v = g(self.node(i));
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    point: self.node(i).to_vec(),
                    value: v,
                });
            }
            terms.push(self.weights[i] * v);
        }
        Ok(pairwise_sum(&terms))
    }
}

/// Behavior of the radial rule on the innermost panel `(0, 2^-levels]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Plain Gauss panel; exact for polynomials.
    Gauss,
    /// Gauss in `s` with `log(1/rho) = t_L + b (1/s - 1)`, which turns weights like
    /// `1/(rho log^n(1/rho))` into smooth integrands. `b` is capped so that `rho^-dim`
    /// stays representable at the innermost node. The outermost panel `[1/2, 1]` is
    /// further split geometrically toward 1 with `outer_levels` levels.
    InverseLog { dim: usize, outer_levels: usize },
}

/// Radial rule on `(0, 1]`: Gauss panels on `[2^-(k+1), 2^-k]`, `k < levels`, plus a
/// tail panel on `(0, 2^-levels]`.
#[derive(Clone, Debug)]
pub struct RadialRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    levels: usize,
    order: usize,
    tail: Tail,
}

impl RadialRule {
    pub fn graded(levels: usize, order: usize, tail: Tail) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let tail_end = 0.5f64.powi(levels as i32);
        let gauss = gauss_on(order, 0.0, 1.0);
        match tail {
            Tail::Gauss => {
                for &(s, w) in &gauss {
                    nodes.push(s * tail_end);
                    weights.push(w * tail_end);
                }
            }
            Tail::InverseLog { dim, .. } => {
                let t_l = -tail_end.ln();
                let s_min = gauss.iter().map(|g| g.0).fold(1.0, f64::min);
                // keeps rho^-dim and rho^(dim-1) inside the normal double range
                let t_max = 690.0 / dim.max(1) as f64;
                let b = (t_l / 4.0).min((t_max - t_l) / (1.0 / s_min - 1.0)).max(1.0);
                for &(s, w) in &gauss {
                    let rho = tail_end * (-b * (1.0 / s - 1.0)).exp();
                    nodes.push(rho);
                    weights.push(w * rho * b / (s * s));
                }
            }
        }
        let outer = match tail {
            Tail::InverseLog { outer_levels, .. } => outer_levels,
            Tail::Gauss => 0,
        };
        let mut panels: Vec<(f64, f64)> = (1..levels)
            .rev()
            .map(|k| {
                let b = 0.5f64.powi(k as i32);
                (0.5 * b, b)
            })
            .collect();
        let mut a = 0.5;
        for k in 1..=outer {
            let b = 1.0 - 0.5f64.powi(k as i32 + 1);
            panels.push((a, b));
            a = b;
        }
        if levels > 0 {
            panels.push((a, 1.0));
        }
        for (a, b) in panels {
            for (rho, w) in gauss_on(order, a, b) {
                nodes.push(rho);
                weights.push(w);
            }
        }
        RadialRule {
            nodes,
            weights,
            levels,
            order,
            tail,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }
}

/// One resolution level of the product rule, plus its coarser companion.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    dim: usize,
    resolution: Resolution,
    sphere: SphereRule,
    radial: RadialRule,
    radial_log: RadialRule,
    coarse: Option<Box<QuadratureRule>>,
}

impl QuadratureRule {
    pub fn new(dim: usize, resolution: Resolution) -> Result<Self> {
        resolution.validate()?;
        let coarse = QuadratureRule::single(dim, resolution.coarser())?;
        let mut rule = QuadratureRule::single(dim, resolution)?;
        rule.coarse = Some(Box::new(coarse));
        Ok(rule)
    }

    fn single(dim: usize, resolution: Resolution) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be at least 2, got {dim}"
            )));
        }
        let sphere = match resolution.angular_scheme {
            AngularScheme::Product => SphereRule::product(
                dim,
                resolution.angular_order,
                resolution.angular_panels,
                resolution.pole_levels,
            ),
            AngularScheme::Qmc => SphereRule::qmc(dim, resolution.qmc_count, resolution.seed),
        };
        let radial = RadialRule::graded(resolution.radial_levels, resolution.panel_order, Tail::Gauss);
        let radial_log = RadialRule::graded(
            resolution.radial_levels,
            resolution.panel_order,
            Tail::InverseLog {
                dim,
                outer_levels: resolution.outer_levels,
            },
        );
        Ok(QuadratureRule {
            dim,
            resolution,
            sphere,
            radial,
            radial_log,
            coarse: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> &Resolution {
        &self.resolution
    }

    pub fn sphere(&self) -> &SphereRule {
        &self.sphere
    }

    /// Radial rule for integrands that are algebraic at the origin.
    pub fn radial(&self) -> &RadialRule {
        &self.radial
    }

    /// Radial rule for integrands with `1/(r log^n(1/r))`-type behavior at the origin.
    pub fn radial_log(&self) -> &RadialRule {
        &self.radial_log
    }

    pub fn coarse(&self) -> Option<&QuadratureRule> {
        self.coarse.as_deref()
    }

    /// Total number of volume nodes.
    pub fn node_count(&self) -> usize {
        self.sphere.len() * self.radial.len()
    }

    fn level_pair(&self) -> (&QuadratureRule, &QuadratureRule) {
        (self, self.coarse.as_deref().unwrap_or(self))
    }
}

/// A quadrature value with its two-grid error estimate (not a rigorous bound).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

impl Integral {
    pub fn from_pair(fine: f64, coarse: f64) -> Self {
        Integral {
            value: fine,
            error_estimate: (fine - coarse).abs(),
        }
    }
}

/// Vector-valued integrand visited ray by ray.
pub trait RayIntegrand {
    fn components(&self) -> usize;

    /// Whether the integrand carries an inverse-log weight at the origin.
    fn log_singular_origin(&self) -> bool {
        false
    }

    /// Called once per direction `w` with the boundary radius `r(w)`.
    fn enter_ray(&mut self, _w: &[f64], _boundary_radius: f64) -> Result<()> {
        Ok(())
    }

    /// Integrand components at the interior point `x` with `|x| = r`.
    fn eval(&mut self, x: &[f64], r: f64, out: &mut [f64]);
}

/// Adapter for plain scalar closures.
pub struct PointIntegrand<G>(pub G);

impl<G: FnMut(&[f64]) -> f64> RayIntegrand for PointIntegrand<G> {
    fn components(&self) -> usize {
        1
    }
    fn eval(&mut self, x: &[f64], _r: f64, out: &mut [f64]) {
        out[0] = (self.0)(x);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialRange {
    /// `(0, r(w))`
    Full,
    /// `(eps, r(w))`
    Annulus(f64),
}

/// Directions within 1e-12 of a finite max-radius set are moved by 1e-9.
fn jitter(w: &mut [f64], lambda: &[Vec<f64>]) {
    for l in lambda {
        if distance(w, l) < 1e-12 {
            let k = (0..w.len())
                .min_by(|&a, &b| l[a].abs().total_cmp(&l[b].abs()))
                .unwrap_or(0);
            let mut t = vec![0.0; w.len()];
            t[k] = 1.0;
            let c = dot(&t, l);
            t.iter_mut().zip(l).for_each(|(ti, li)| *ti -= c * li);
            let tl = norm(&t);
            for i in 0..w.len() {
                w[i] += 1e-9 * t[i] / tl;
            }
            let len = norm(w);
            w.iter_mut().for_each(|v| *v /= len);
        }
    }
}

fn integrate_level<I: RayIntegrand>(
    rule: &QuadratureRule,
    d: &StarDomain,
    range: RadialRange,
    integrand: &mut I,
) -> Result<Vec<f64>> {
    let n = d.dim();
    let k = integrand.components();
    let lambda = d.lambda().finite_directions();
    let mut per_direction: Vec<Vec<f64>> = vec![Vec::with_capacity(rule.sphere.len()); k];
    let mut w = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut out = vec![0.0; k];
    let mut acc = vec![0.0; k];
    let radial = if integrand.log_singular_origin() {
        &rule.radial_log
    } else {
        &rule.radial
    };
    for i in 0..rule.sphere.len() {
        w.copy_from_slice(rule.sphere.node(i));
        if let Some(l) = lambda {
            jitter(&mut w, l);
        }
        let big_r = d.radius(&w);
        let (start, span) = match range {
            RadialRange::Full => (0.0, big_r),
            RadialRange::Annulus(eps) => (eps, big_r - eps),
        };
        integrand.enter_ray(&w, big_r)?;
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (rho, wr) in radial.nodes.iter().zip(&radial.weights) {
            let r = start + rho * span;
            for j in 0..n {
                x[j] = r * w[j];
            }
            integrand.eval(&x, r, &mut out);
            let jac = wr * span * r.powi(n as i32 - 1);
            for c in 0..k {
                if !out[c].is_finite() {
                    return Err(Error::NonFinite {
                        point: x.clone(),
                        value: out[c],
                    });
                }
                acc[c] += jac * out[c];
            }
        }
        let aw = rule.sphere.weight(i);
        for c in 0..k {
            per_direction[c].push(aw * acc[c]);
        }
    }
    Ok(per_direction.iter().map(|v| pairwise_sum(v)).collect())
}

/// Fine and coarse component values of a vector integrand.
#[derive(Clone, Debug)]
pub struct TwoGrid {
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
}

impl TwoGrid {
    pub fn component(&self, c: usize) -> Integral {
        Integral::from_pair(self.fine[c], self.coarse[c])
    }
}

pub fn integrate_rays<I: RayIntegrand>(
    d: &StarDomain,
    integrand: &mut I,
    range: RadialRange,
    rule: &QuadratureRule,
) -> Result<TwoGrid> {
    if rule.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: rule.dim(),
        });
    }
    if let RadialRange::Annulus(eps) = range {
        if !(eps > 0.0 && eps < d.min_radius()) {
            return Err(Error::InvalidParameter(format!(
                "annulus cutoff must satisfy 0 < eps < r_min = {}, got {eps}",
                d.min_radius()
            )));
        }
    }
    let (fine_rule, coarse_rule) = rule.level_pair();
    let fine = integrate_level(fine_rule, d, range, integrand)?;
    let coarse = integrate_level(coarse_rule, d, range, integrand)?;
    Ok(TwoGrid { fine, coarse })
}

/// `int_Omega g dx` over the star domain.
pub fn integrate<G: FnMut(&[f64]) -> f64>(d: &StarDomain, g: G, rule: &QuadratureRule) -> Result<Integral> {
    let mut it = PointIntegrand(g);
    Ok(integrate_rays(d, &mut it, RadialRange::Full, rule)?.component(0))
}

/// `int_{Omega \ B(eps)} g dx`.
pub fn integrate_annulus<G: FnMut(&[f64]) -> f64>(
    d: &StarDomain,
    g: G,
    eps: f64,
    rule: &QuadratureRule,
) -> Result<Integral> {
    let mut it = PointIntegrand(g);
    Ok(integrate_rays(d, &mut it, RadialRange::Annulus(eps), rule)?.component(0))
}

/// `|log(M/r)|`, accurate both for `r` close to `M` and for tiny `r`.
#[inline]
pub fn log_ratio(m: f64, r: f64) -> f64 {
    let t = (r - m) / m;
    if t.abs() < 0.5 {
        (-t.ln_1p()).abs()
    } else {
        (m / r).ln().abs()
    }
}

struct LogWeighted<G> {
    g: G,
    m: f64,
    power: f64,
}

impl<G: FnMut(&[f64]) -> f64> RayIntegrand for LogWeighted<G> {
    fn components(&self) -> usize {
        1
    }
    fn log_singular_origin(&self) -> bool {
        true
    }
    fn eval(&mut self, x: &[f64], r: f64, out: &mut [f64]) {
        out[0] = (self.g)(x) / log_ratio(self.m, r).powf(self.power);
    }
}

/// `int_Omega g(x) / |log(M/|x|)|^power dx` with `M = sup |x|`, using the log-graded
/// radial tail.
pub fn integrate_log_weighted<G: FnMut(&[f64]) -> f64>(
    d: &StarDomain,
    g: G,
    power: f64,
    rule: &QuadratureRule,
) -> Result<Integral> {
    let mut it = LogWeighted {
        g,
        m: d.max_radius(),
        power,
    };
    Ok(integrate_rays(d, &mut it, RadialRange::Full, rule)?.component(0))
}

/// `int_{S^{n-1}} g dw` with the rule's angular nodes (two-grid).
pub fn integrate_sphere<G: FnMut(&[f64]) -> f64>(g: G, rule: &QuadratureRule) -> Result<Integral> {
    let mut g = g;
    let (fine_rule, coarse_rule) = rule.level_pair();
    let fine = fine_rule.sphere.apply(&mut g)?;
    let coarse = coarse_rule.sphere.apply(&mut g)?;
    Ok(Integral::from_pair(fine, coarse))
}

/// Householder reflection taking `e_1` to the unit vector `x0`.
fn reflect_to(x0: &[f64], v: &[f64]) -> Vec<f64> {
    let mut h: Vec<f64> = x0.to_vec();
    h[0] -= 1.0;
    h.iter_mut().for_each(|c| *c = -*c);
    // h = e1 - x0
    let hh = dot(&h, &h);
    if hh < 1e-300 {
        return v.to_vec();
    }
    let c = 2.0 * dot(&h, v) / hh;
    v.iter().zip(&h).map(|(vi, hi)| vi - c * hi).collect()
}

/// `int g dw` over `{w in S^{n-1} : |w - x0| > delta}`, in polar coordinates about `x0`
/// with Gauss panels graded geometrically away from the excluded cap.
pub fn integrate_sphere_cap_complement<G: FnMut(&[f64]) -> f64>(
    n: usize,
    mut g: G,
    x0: &[f64],
    delta: f64,
    order: usize,
) -> Result<f64> {
    if n < 2 || x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let len = norm(x0);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm: len });
    }
    if !(delta > 0.0 && delta < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cap radius must lie in (0, 2), got {delta}"
        )));
    }
    let theta0 = 2.0 * (delta / 2.0).asin();
    let sub = SphereRule::product(n - 1, order, 1, 0);
    let mut panels = Vec::new();
    let mut a = theta0;
    while a < PI {
        let b = (2.0 * a).min(PI);
        panels.push((a, b));
        a = b;
    }
    let mut terms = Vec::new();
    let mut local = vec![0.0; n];
    for (a, b) in panels {
        for (theta, w) in gauss_on(order, a, b) {
            let (s, c) = theta.sin_cos();
            let wt = w * s.powi(n as i32 - 2);
            for j in 0..sub.len() {
                local[0] = c;
                for (k, v) in sub.node(j).iter().enumerate() {
                    local[k + 1] = s * v;
                }
                let omega = reflect_to(x0, &local);
                let v = g(&omega);
                if !v.is_finite() {
                    return Err(Error::NonFinite { point: omega, value: v });
                }
                terms.push(wt * sub.weight(j) * v);
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StarProfile;

    fn rule(n: usize) -> QuadratureRule {
        QuadratureRule::new(n, Resolution::default()).unwrap()
    }

    #[test]
    fn angular_weights_sum_to_sphere_area() {
        for n in 2..=5 {
            let q = if n <= 3 { 16 } else { 8 };
            let s = SphereRule::product(n, q, 2, 2);
            let rel = (s.total_weight() - sphere_area(n)).abs() / sphere_area(n);
            assert!(rel < 1e-12, "n={n}: {rel}");
        }
        let s = SphereRule::qmc(4, 4096, 1);
        assert!((s.total_weight() - sphere_area(4)).abs() / sphere_area(4) < 1e-12);
    }

    #[test]
    fn sphere_area_closed_forms() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn radial_nodes_are_strictly_interior() {
        for (tail, panels) in [
            (Tail::Gauss, 41),
            (
                Tail::InverseLog {
                    dim: 3,
                    outer_levels: 12,
                },
                53,
            ),
        ] {
            let r = RadialRule::graded(40, 8, tail);
            assert!(r.nodes().iter().all(|&x| x > 0.0 && x < 1.0));
            assert_eq!(r.len(), panels * 8);
        }
    }

    #[test]
    fn log_tail_integrates_inverse_log_weight() {
        // int_0^{1/2} d rho / (rho log^3(1/rho)) = 1 / (2 log^2 2)
        let r = RadialRule::graded(
            40,
            8,
            Tail::InverseLog {
                dim: 3,
                outer_levels: 12,
            },
        );
        let v: f64 = r
            .nodes()
            .iter()
            .zip(r.weights())
            .filter(|(x, _)| **x < 0.5)
            .map(|(x, w)| w / (x * (1.0 / x).ln().powi(3)))
            .sum();
        let exact = 0.5 / 2f64.ln().powi(2);
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
        let r2 = RadialRule::graded(
            40,
            8,
            Tail::InverseLog {
                dim: 2,
                outer_levels: 0,
            },
        );
        let v: f64 = r2
            .nodes()
            .iter()
            .zip(r2.weights())
            .filter(|(x, _)| **x < 0.5)
            .map(|(x, w)| w / (x * (1.0 / x).ln().powi(2)))
            .sum();
        // int_0^{1/2} d rho / (rho log^2(1/rho)) = 1 / log 2
        assert!((v - 1.0 / 2f64.ln()).abs() < 1e-7, "{v}");
    }

    #[test]
    fn radial_monomials_are_exact() {
        let r = RadialRule::graded(40, 8, Tail::Gauss);
        for k in 0..=15 {
            let v: f64 = r.nodes().iter().zip(r.weights()).map(|(x, w)| w * x.powi(k)).sum();
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}: {v}");
        }
    }

    #[test]
    fn ball_volume_examples() {
        let d3 = StarDomain::ball(3, 1.0).unwrap();
        let v = integrate(&d3, |_| 1.0, &rule(3)).unwrap();
        assert!((v.value - 4.0 * PI / 3.0).abs() < 1e-10);
        let d2 = StarDomain::ball(2, 1.0).unwrap();
        let v = integrate(&d2, |_| 1.0, &rule(2)).unwrap();
        assert!((v.value - PI).abs() < 1e-10);
    }

    #[test]
    fn inverse_square_over_ball() {
        let d = StarDomain::ball(3, 1.0).unwrap();
        let v = integrate(&d, |x| 1.0 / dot(x, x), &rule(3)).unwrap();
        assert!((v.value - 4.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn ellipsoid_volume() {
        let d = StarDomain::ellipsoid(&[1.0, 2.0, 2.0]).unwrap();
        let v = integrate(&d, |_| 1.0, &rule(3)).unwrap();
        assert!((v.value - PI / 3.0).abs() < 1e-8, "{}", v.value);
    }

    #[test]
    fn annulus_examples() {
        let d = StarDomain::ball(3, 1.0).unwrap();
        let r = rule(3);
        let v = integrate_annulus(&d, |x| norm(x).powi(-3), 0.1, &r).unwrap();
        assert!((v.value - 4.0 * PI * 10f64.ln()).abs() < 1e-6);
        let shell = integrate_annulus(&d, |_| 1.0, 0.5, &r).unwrap();
        assert!((shell.value - 4.0 * PI / 3.0 * (1.0 - 0.125)).abs() < 1e-10);
        assert!(integrate_annulus(&d, |_| 1.0, 1.0, &r).is_err());
        let mut last = f64::INFINITY;
        for eps in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let v = integrate_annulus(&d, |x| 1.0 / norm(x), eps, &r).unwrap().value;
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn odd_integrand_vanishes() {
        let d = StarDomain::ellipsoid(&[1.0, 2.0, 2.0]).unwrap();
        let v = integrate(&d, |x| x[0] * (1.0 + x[1] * x[1]), &rule(3)).unwrap();
        assert!(v.value.abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let d = StarDomain::ball(3, 1.0).unwrap();
        let err = integrate(&d, |x| if x[0] > 0.5 { f64::NAN } else { 1.0 }, &rule(3)).unwrap_err();
        match err {
            Error::NonFinite { point, .. } => assert!(point[0] > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cap_complement_with_constant_approaches_area() {
        let x0 = [0.0, 0.0, 1.0];
        let v = integrate_sphere_cap_complement(3, |_| 1.0, &x0, 1e-6, 16).unwrap();
        // cap of chordal radius delta has area pi delta^2
        assert!((v - (4.0 * PI - PI * 1e-12)).abs() < 1e-10);
    }

    #[test]
    fn cap_complement_power_law_increments() {
        // Oracle: on S^2, dA = 2 pi t dt with t = |w - x0|, so
        // int_{t > delta} t^{-s} dA = 2 pi (2^{2-s} - delta^{2-s}) / (2 - s).
        let x0 = [0.6, 0.0, 0.8];
        let s = 2.5;
        for delta in [0.1, 0.01, 0.001] {
            let v = integrate_sphere_cap_complement(3, |w| distance(w, &x0).powf(-s), &x0, delta, 16).unwrap();
            let exact = 2.0 * PI * (2f64.powf(2.0 - s) - delta.powf(2.0 - s)) / (2.0 - s);
            assert!((v - exact).abs() < 1e-9 * exact, "{delta}: {v} vs {exact}");
        }
    }

    #[test]
    fn two_grid_error_is_small_for_smooth_integrand() {
        let d = StarDomain::star(3, StarProfile::linear(1.0, vec![0.3]), None, 0).unwrap();
        let v = integrate(&d, |x| (x[0] + 2.0 * x[1]).exp(), &rule(3)).unwrap();
        assert!(v.error_estimate < 1e-10, "{v:?}");
    }

    #[test]
    fn log_ratio_is_accurate_at_both_ends() {
        assert!((log_ratio(2.0, 1e-150) - (2e150f64).ln()).abs() < 1e-12);
        let r = 2.0 * (1.0 - 1e-12);
        // limited only by the representation of r
        assert!((log_ratio(2.0, r) - 1e-12).abs() < 1e-15);
        assert!((log_ratio(1.0, 0.5) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn jitter_moves_nodes_off_lambda() {
        let mut w = vec![1.0, 0.0, 0.0];
        jitter(&mut w, &[vec![1.0, 0.0, 0.0]]);
        let gap = distance(&w, &[1.0, 0.0, 0.0]);
        assert!(gap > 5e-10 && gap < 2e-9);
        assert!((norm(&w) - 1.0).abs() < 1e-15);
    }
}
