//! Test functions with explicit interior and boundary representatives, the extremal
//! families of the boundary-term-free inequalities, and the singular counterexample.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::RadialField;
use crate::geometry::{weighted_norm, StarDomain};
use crate::sampling;
use crate::vecops::{distance, dot, norm};

/// Regularity class of a test function on the closed domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// Continuously differentiable up to the boundary; the boundary value is the trace.
    C1Closure,
    /// Explicit boundary representative that differs from the interior limit.
    Piecewise,
    /// Has an interior or boundary point singularity.
    Singular,
}

pub trait ScalarField: Send + Sync {
    fn name(&self) -> String;

    /// Value at an interior point `x != 0`.
    fn value(&self, x: &[f64]) -> f64;

    /// Value of the boundary representative at `x` on the boundary.
    fn boundary_value(&self, x: &[f64]) -> f64 {
        self.value(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        central_difference_gradient(&|y: &[f64]| self.value(y), x, out)
    }

    fn has_analytic_gradient(&self) -> bool {
        false
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::C1Closure
    }

    fn singular_point(&self) -> Option<Vec<f64>> {
        None
    }
}

pub type SharedField = Arc<dyn ScalarField>;

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.name())
    }
}

/// FD step used throughout: `1e-6 * max(1, |x|)`.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-6 * norm(x).max(1.0)
}

pub fn central_difference_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let h = fd_step(x);
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let up = f(&y);
        y[i] = x[i] - h;
        let down = f(&y);
        y[i] = x[i];
        out[i] = (up - down) / (2.0 * h);
    }
}

fn nonzero(x: &[f64]) -> Result<f64> {
    let len = norm(x);
    if len == 0.0 || !len.is_finite() {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(len)
}

/// `(x/|x|) . grad u(x)`.
pub fn radial_derivative(u: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    let len = nonzero(x)?;
    let mut g = vec![0.0; x.len()];
    u.gradient(x, &mut g);
    Ok(dot(&g, x) / len)
}

/// `(x/|x|) . grad u(x)` by a central difference along the ray through `x`.
pub fn radial_fd_derivative(u: &dyn ScalarField, x: &[f64]) -> Result<f64> {
    let len = nonzero(x)?;
    let h = fd_step(x);
    let at = |s: f64| -> Vec<f64> { x.iter().map(|v| v * (1.0 + s / len)).collect() };
    Ok((u.value(&at(h)) - u.value(&at(-h))) / (2.0 * h))
}

/// Gradient of `x -> u(x/|x|)`: the tangential part of `(grad u)(x/|x|)` divided by `|x|`.
pub fn pullback_sphere_gradient(u: &dyn ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    let len = nonzero(x)?;
    let w: Vec<f64> = x.iter().map(|v| v / len).collect();
    let mut g = vec![0.0; x.len()];
    u.gradient(&w, &mut g);
    Ok(tangential(&g, &w, len))
}

fn tangential(g: &[f64], w: &[f64], len: f64) -> Vec<f64> {
    let radial = dot(g, w);
    g.iter().zip(w).map(|(gi, wi)| (gi - radial * wi) / len).collect()
}

/// Exponent bookkeeping for `1 <= p < n` (subcritical) or `p = n` (critical).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponents {
    pub n: usize,
    pub p: f64,
}

impl Exponents {
    pub fn subcritical(n: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Hypothesis(format!("dimension must be at least 2, got {n}")));
        }
        if !(p >= 1.0 && p < n as f64) {
            return Err(Error::Hypothesis(format!(
                "subcritical exponent requires 1 <= p < n, got p = {p}, n = {n}"
            )));
        }
        Ok(Exponents { n, p })
    }

    pub fn critical(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Hypothesis(format!("critical case requires n >= 2, got {n}")));
        }
        Ok(Exponents { n, p: n as f64 })
    }

    pub fn is_critical(&self) -> bool {
        self.p == self.n as f64
    }

    /// `(n - p)/p`
    pub fn kappa(&self) -> f64 {
        (self.n as f64 - self.p) / self.p
    }

    /// `p/(n - p)`, the multiplier in the equality condition (the p-th root of the constant).
    pub fn multiplier(&self) -> f64 {
        self.p / (self.n as f64 - self.p)
    }

    /// `(p/(n-p))^p`
    pub fn c_subcritical(&self) -> f64 {
        crate::vecops::pow_abs(self.multiplier(), self.p)
    }

    /// `(n/(n-1))^n`
    pub fn c_critical(&self) -> f64 {
        let n = self.n as f64;
        (n / (n - 1.0)).powi(self.n as i32)
    }

    pub fn constant(&self) -> f64 {
        if self.is_critical() {
            self.c_critical()
        } else {
            self.c_subcritical()
        }
    }
}

// ---------------------------------------------------------------------------
// Elementary fields

#[derive(Clone, Debug)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

/// `scale * |x|^beta`
#[derive(Clone, Debug)]
pub struct RadialPower {
    pub beta: f64,
    pub scale: f64,
}

impl ScalarField for RadialPower {
    fn name(&self) -> String {
        format!("{}*|x|^{}", self.scale, self.beta)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * norm(x).powf(self.beta)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let len = norm(x);
        let c = self.scale * self.beta * len.powf(self.beta - 2.0);
        for i in 0..x.len() {
            out[i] = c * x[i];
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

/// `x_i` (zero-based index).
#[derive(Clone, Debug)]
pub struct Coordinate(pub usize);

impl ScalarField for Coordinate {
    fn name(&self) -> String {
        format!("x{}", self.0 + 1)
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[self.0]
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        out[self.0] = 1.0;
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

/// Sum of monomials `c * prod x_i^{e_i}`.
#[derive(Clone, Debug)]
pub struct Polynomial {
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl ScalarField for Polynomial {
    fn name(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(c, e)| format!("{c}*x^{e:?}")).collect();
        format!("poly({})", parts.join(" + "))
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(x).map(|(k, v)| v.powi(*k as i32)).product::<f64>())
            .sum()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        for (c, e) in &self.terms {
            for i in 0..e.len().min(x.len()) {
                if e[i] == 0 {
                    continue;
                }
                let mut term = c * e[i] as f64;
                for (j, (k, v)) in e.iter().zip(x).enumerate() {
                    let k = if j == i { *k - 1 } else { *k };
                    term *= v.powi(k as i32);
                }
                out[i] += term;
            }
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Closure-backed field; the gradient falls back to central differences.
#[derive(Clone)]
pub struct FnField {
    name: String,
    value: ValueFn,
    gradient: Option<GradFn>,
    smoothness: Smoothness,
}

impl FnField {
    pub fn new<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        FnField {
            name: name.into(),
            value: Arc::new(value),
            gradient: None,
            smoothness: Smoothness::C1Closure,
        }
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_smoothness(mut self, s: Smoothness) -> Self {
        self.smoothness = s;
        self
    }
}

impl ScalarField for FnField {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.gradient {
            Some(g) => g(x, out),
            None => central_difference_gradient(&|y: &[f64]| (self.value)(y), x, out),
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }
    fn smoothness(&self) -> Smoothness {
        self.smoothness
    }
}

/// `c * u`
pub struct Scaled {
    pub inner: SharedField,
    pub factor: f64,
}

impl ScalarField for Scaled {
    fn name(&self) -> String {
        format!("{}*{}", self.factor, self.inner.name())
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.value(x)
    }
    fn boundary_value(&self, x: &[f64]) -> f64 {
        self.factor * self.inner.boundary_value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inner.gradient(x, out);
        out.iter_mut().for_each(|g| *g *= self.factor);
    }
    fn has_analytic_gradient(&self) -> bool {
        self.inner.has_analytic_gradient()
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
    fn singular_point(&self) -> Option<Vec<f64>> {
        self.inner.singular_point()
    }
}

/// `x -> u(x/|x|)`, radially invariant.
pub struct AngularPullback {
    pub inner: SharedField,
}

impl ScalarField for AngularPullback {
    fn name(&self) -> String {
        format!("{}(x/|x|)", self.inner.name())
    }
    fn value(&self, x: &[f64]) -> f64 {
        let len = norm(x);
        let w: Vec<f64> = x.iter().map(|v| v / len).collect();
        self.inner.value(&w)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match pullback_sphere_gradient(self.inner.as_ref(), x) {
            Ok(g) => out.copy_from_slice(&g),
            Err(_) => out.iter_mut().for_each(|g| *g = f64::NAN),
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        self.inner.has_analytic_gradient()
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
}

/// `x_i / |x|_a`, radially invariant; the angular factor of the subcritical
/// maximizer on ellipsoids.
#[derive(Clone, Debug)]
pub struct EllipsoidRatio {
    pub axes: Vec<f64>,
    pub index: usize,
}

impl ScalarField for EllipsoidRatio {
    fn name(&self) -> String {
        format!("x{}/|x|_a", self.index + 1)
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[self.index] / weighted_norm(&self.axes, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let s = weighted_norm(&self.axes, x);
        let xi = x[self.index];
        for j in 0..x.len() {
            out[j] = -xi * self.axes[j] * self.axes[j] * x[j] / (s * s * s);
        }
        out[self.index] += 1.0 / s;
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

/// `x -> u(f(x))`, always reading the boundary representative of `u`.
pub struct Composed {
    pub inner: SharedField,
    pub field: RadialField,
}

impl ScalarField for Composed {
    fn name(&self) -> String {
        format!("{}(f(x))", self.inner.name())
    }
    fn value(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        match self.field.apply(x, &mut y) {
            Ok(()) => self.inner.boundary_value(&y),
            Err(_) => f64::NAN,
        }
    }
    fn smoothness(&self) -> Smoothness {
        self.inner.smoothness()
    }
}

pub fn compose_with_field(u: SharedField, f: &RadialField) -> SharedField {
    Arc::new(Composed {
        inner: u,
        field: f.clone(),
    })
}

// ---------------------------------------------------------------------------
// Counterexample family

/// Radial quintic-smoothstep bump: 0 below `inner.0`, 1 on `[inner.1, outer.0]`,
/// 0 above `outer.1`.
#[derive(Clone, Debug)]
pub struct SmoothCutoff {
    pub inner: (f64, f64),
    pub outer: (f64, f64),
}

fn smoothstep(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let v = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (v, d)
}

impl SmoothCutoff {
    /// Profile value and derivative at radius `r`.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        let (a, b) = self.inner;
        let (c, d) = self.outer;
        if r <= a || r >= d {
            (0.0, 0.0)
        } else if r < b {
            let (v, dv) = smoothstep((r - a) / (b - a));
            (v, dv / (b - a))
        } else if r <= c {
            (1.0, 0.0)
        } else {
            let (v, dv) = smoothstep((d - r) / (d - c));
            (v, -dv / (d - c))
        }
    }
}

impl ScalarField for SmoothCutoff {
    fn name(&self) -> String {
        format!("cutoff({:?}, {:?})", self.inner, self.outer)
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.profile(norm(x)).0
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let (_, d) = self.profile(r);
        for i in 0..x.len() {
            out[i] = if r > 0.0 { d * x[i] / r } else { 0.0 };
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
}

pub fn smooth_cutoff(inner: (f64, f64), outer: (f64, f64)) -> Result<SmoothCutoff> {
    let ok = 0.0 <= inner.0 && inner.0 < inner.1 && inner.1 <= outer.0 && outer.0 < outer.1;
    if !ok {
        return Err(Error::InvalidParameter(format!(
            "cutoff radii must satisfy 0 <= a < b <= c < d, got {inner:?}, {outer:?}"
        )));
    }
    Ok(SmoothCutoff { inner, outer })
}

/// The standard cutoff: 0 for |x| <= 1/2, 1 on (3/4, 5/4), 0 for |x| >= 3/2.
pub fn standard_cutoff() -> SmoothCutoff {
    SmoothCutoff {
        inner: (0.5, 0.75),
        outer: (1.25, 1.5),
    }
}

/// `u(x) = gamma(x) / |x - x0|^alpha` with `|x0| = 1`.
#[derive(Clone, Debug)]
pub struct Prop1Function {
    pub alpha: f64,
    pub x0: Vec<f64>,
    pub cutoff: SmoothCutoff,
}

impl ScalarField for Prop1Function {
    fn name(&self) -> String {
        format!("cutoff/|x-x0|^{}", self.alpha)
    }
    fn value(&self, x: &[f64]) -> f64 {
        let (g, _) = self.cutoff.profile(norm(x));
        if g == 0.0 {
            return 0.0;
        }
        g / distance(x, &self.x0).powf(self.alpha)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = norm(x);
        let (g, dg) = self.cutoff.profile(r);
        let d = distance(x, &self.x0);
        let da = d.powf(self.alpha);
        for i in 0..x.len() {
            let radial = if r > 0.0 { dg * x[i] / r } else { 0.0 };
            out[i] = radial / da - self.alpha * g * (x[i] - self.x0[i]) / (da * d * d);
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Singular
    }
    fn singular_point(&self) -> Option<Vec<f64>> {
        Some(self.x0.clone())
    }
}

pub fn prop1_function(alpha: f64, x0: &[f64]) -> Result<Prop1Function> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let len = norm(x0);
    if (len - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm: len });
    }
    Ok(Prop1Function {
        alpha,
        x0: x0.to_vec(),
        cutoff: standard_cutoff(),
    })
}

/// Membership of the counterexample family, from the analytic integrability thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Prop1Memberships {
    /// `u in L^p(R^n)` iff `alpha < n/p`
    pub u_in_lp: bool,
    /// `u in W^{1,p}(R^n)` iff `alpha < (n-p)/p`
    pub u_in_w1p: bool,
    /// `u(x/|x|) in L^p(B(1))` iff `alpha < (n-1)/p`
    pub pullback_in_lp: bool,
    /// `u(x/|x|) in W^{1,p}(B(1))` iff `alpha < (n-p-1)/p`
    pub pullback_in_w1p: bool,
    /// `v = u - u(x/|x|) in L^p(B(1))`
    pub difference_in_lp: bool,
    /// `v in W^{1,p}(B(1))`
    pub difference_in_w1p: bool,
}

pub fn prop1_memberships(n: usize, p: f64, alpha: f64) -> Prop1Memberships {
    let n = n as f64;
    let pullback_in_lp = alpha < (n - 1.0) / p;
    let pullback_in_w1p = alpha < (n - p - 1.0) / p;
    Prop1Memberships {
        u_in_lp: alpha < n / p,
        u_in_w1p: alpha < (n - p) / p,
        pullback_in_lp,
        pullback_in_w1p,
        difference_in_lp: pullback_in_lp,
        difference_in_w1p: pullback_in_w1p,
    }
}

// ---------------------------------------------------------------------------
// Extremal families

/// `u = |x|^beta psi + |f(x)|^beta psi` inside, `|x|^beta psi` on the boundary, so that
/// `u - u o f = |x|^beta psi`. With `beta = (n-p)/p` this is the subcritical maximizer.
pub struct BetaFamily {
    pub domain: Arc<StarDomain>,
    pub psi: SharedField,
    pub beta: f64,
}

impl ScalarField for BetaFamily {
    fn name(&self) -> String {
        format!("beta_family(beta={}, psi={})", self.beta, self.psi.name())
    }
    fn value(&self, x: &[f64]) -> f64 {
        let psi = self.psi.value(x);
        let rf = self.domain.radius_at(x);
        (norm(x).powf(self.beta) + rf.powf(self.beta)) * psi
    }
    fn boundary_value(&self, x: &[f64]) -> f64 {
        norm(x).powf(self.beta) * self.psi.value(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let len = norm(x);
        let b = self.beta;
        let psi = self.psi.value(x);
        let rf = self.domain.radius_at(x);
        let mut gpsi = vec![0.0; n];
        self.psi.gradient(x, &mut gpsi);
        let mut grf = vec![0.0; n];
        self.domain.radius_gradient(x, &mut grf);
        let radial = b * len.powf(b - 2.0) * psi;
        let weight = len.powf(b) + rf.powf(b);
        let boundary = b * rf.powf(b - 1.0) * psi;
        for i in 0..n {
            out[i] = radial * x[i] + weight * gpsi[i] + boundary * grf[i];
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        self.psi.has_analytic_gradient()
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Piecewise
    }
}

/// Checks `psi(l x) = psi(x)` on a seeded sample of interior points.
fn check_radially_invariant(psi: &dyn ScalarField, d: &StarDomain) -> Result<()> {
    let mut rng = sampling::rng(0x5eed);
    for _ in 0..32 {
        let w = sampling::random_direction(&mut rng, d.dim());
        let x: Vec<f64> = w.iter().map(|v| v * 0.5 * d.radius(&w)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.37).collect();
        let (a, b) = (psi.value(&x), psi.value(&y));
        if (a - b).abs() > 1e-10 * (1.0 + a.abs()) {
            return Err(Error::Hypothesis(format!(
                "psi = {} is not radially invariant ({a} vs {b})",
                psi.name()
            )));
        }
    }
    Ok(())
}

pub fn beta_family(d: Arc<StarDomain>, psi: SharedField, beta: f64, p: f64, n: usize) -> Result<BetaFamily> {
    let e = Exponents::subcritical(n, p)?;
    if d.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d.dim(),
        });
    }
    let kappa = e.kappa();
    if !(beta >= kappa * (1.0 - 1e-14)) {
        return Err(Error::Hypothesis(format!(
            "beta = {beta} is below (n-p)/p = {kappa}; that region is excluded"
        )));
    }
    check_radially_invariant(psi.as_ref(), &d)?;
    Ok(BetaFamily { domain: d, psi, beta })
}

/// The subcritical maximizer on the ellipsoid `E_a`, with `psi = x_1/|x|_a`.
pub fn maximizer_xi(axes: &[f64], p: f64, n: usize) -> Result<BetaFamily> {
    if n < 3 {
        return Err(Error::Hypothesis(format!(
            "subcritical maximizer requires n >= 3, got {n}"
        )));
    }
    let e = Exponents::subcritical(n, p)?;
    if axes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: axes.len(),
        });
    }
    let d = Arc::new(StarDomain::ellipsoid(axes)?);
    let psi: SharedField = Arc::new(EllipsoidRatio {
        axes: axes.to_vec(),
        index: 0,
    });
    beta_family(d, psi, e.kappa(), p, n)
}

/// Critical-case maximizer `(M - r(x/|x|))^alpha (log(M/|x|))^{-(n-1)/n}`, zero on the boundary.
pub struct Eta {
    pub domain: Arc<StarDomain>,
    pub alpha: f64,
}

impl Eta {
    /// Angular factor `(M - r(x/|x|))^alpha`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        (self.domain.max_radius() - self.domain.radius_at(x))
            .max(0.0)
            .powf(self.alpha)
    }

    /// Builds the maximizer on any star domain whose max-radius set has zero measure.
    pub fn on_domain(d: Arc<StarDomain>, alpha: f64) -> Result<Self> {
        let n = d.dim();
        if d.lambda().has_positive_measure(n) {
            return Err(Error::NoMaximizer(format!(
                "the max-radius set of {} has positive measure",
                d.describe()
            )));
        }
        if !(alpha >= n as f64 / 2.0) {
            return Err(Error::Hypothesis(format!(
                "alpha must be at least n/2 = {}, got {alpha}",
                n as f64 / 2.0
            )));
        }
        Ok(Eta { domain: d, alpha })
    }
}

impl ScalarField for Eta {
    fn name(&self) -> String {
        format!("eta(alpha={})", self.alpha)
    }
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let l = (self.domain.max_radius() / norm(x)).ln();
        self.psi(x) * l.powf(-(n - 1.0) / n)
    }
    fn boundary_value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let dim = x.len();
        let n = dim as f64;
        let k = (n - 1.0) / n;
        let len = norm(x);
        let m = self.domain.max_radius();
        let l = (m / len).ln();
        let gap = (m - self.domain.radius_at(x)).max(0.0);
        let psi = gap.powf(self.alpha);
        let dpsi = if self.alpha == 1.0 {
            1.0
        } else {
            self.alpha * gap.powf(self.alpha - 1.0)
        };
        let mut grf = vec![0.0; dim];
        self.domain.radius_gradient(x, &mut grf);
        let lk = l.powf(-k);
        let radial = psi * k * l.powf(-k - 1.0) / (len * len);
        for i in 0..dim {
            out[i] = -dpsi * grf[i] * lk + radial * x[i];
        }
    }
    fn has_analytic_gradient(&self) -> bool {
        true
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::Piecewise
    }
}

pub fn maximizer_eta(axes: &[f64], n: usize, alpha: f64) -> Result<Eta> {
    if axes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: axes.len(),
        });
    }
    let d = StarDomain::ellipsoid(axes)?;
    if axes.iter().all(|&a| a == axes[0]) {
        return Err(Error::NoMaximizer(
            "the ellipsoid is a ball, where the critical inequality admits no maximizers".into(),
        ));
    }
    let a_min = axes.iter().cloned().fold(f64::INFINITY, f64::min);
    if axes.iter().filter(|&&a| a == a_min).count() > 1 {
        return Err(Error::Hypothesis("the minimal axis parameter must be strict".into()));
    }
    Eta::on_domain(Arc::new(d), alpha)
}

// ---------------------------------------------------------------------------
// Consistency checks

/// Largest `|boundary_value(b) - value((1 - 1e-9) b)|` over sampled boundary points.
pub fn boundary_trace_gap(u: &dyn ScalarField, d: &StarDomain, samples: usize, seed: u64) -> f64 {
    let mut rng = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let w = sampling::random_direction(&mut rng, d.dim());
        let b: Vec<f64> = w.iter().map(|v| v * d.radius(&w)).collect();
        let inside: Vec<f64> = b.iter().map(|v| v * (1.0 - 1e-9)).collect();
        worst = worst.max((u.boundary_value(&b) - u.value(&inside)).abs());
    }
    worst
}

/// Largest relative deviation of the analytic gradient from central differences over
/// seeded interior points; points within `1e-3` of a singular point are skipped.
pub fn gradient_fd_deviation(u: &dyn ScalarField, d: &StarDomain, samples: usize, seed: u64) -> f64 {
    let n = d.dim();
    let mut rng = sampling::rng(seed);
    let mut worst: f64 = 0.0;
    let mut g = vec![0.0; n];
    let mut fd = vec![0.0; n];
    let singular = u.singular_point();
    let mut taken = 0;
    while taken < samples {
        let w = sampling::random_direction(&mut rng, n);
        let rho: f64 = rand::Rng::gen_range(&mut rng, 0.05..0.95);
        let x: Vec<f64> = w.iter().map(|v| v * rho * d.radius(&w)).collect();
        if let Some(s) = &singular {
            if distance(&x, s) < 1e-3 {
                continue;
            }
        }
        taken += 1;
        u.gradient(&x, &mut g);
        central_difference_gradient(&|y: &[f64]| u.value(y), &x, &mut fd);
        let scale = norm(&g).max(1.0);
        worst = worst.max(distance(&g, &fd) / scale);
    }
    worst
}
