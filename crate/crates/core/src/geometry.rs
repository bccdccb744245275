//! Bounded domains that are star-shaped with respect to the origin, described by
//! their radial profile `w -> r(w)` on the unit sphere.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling;
use crate::vecops::{distance, dot, norm};

pub type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Radial profile of a generic star domain.
#[derive(Clone)]
pub enum StarProfile {
    /// `r(w) = constant + linear . w + w^T quadratic w`; an empty `quadratic` means none.
    Polynomial {
        constant: f64,
        linear: Vec<f64>,
        quadratic: Vec<Vec<f64>>,
    },
    /// Arbitrary positive function on the sphere. Smoothness is the caller's business.
    Custom(ProfileFn),
}

impl StarProfile {
    pub fn linear(constant: f64, linear: Vec<f64>) -> Self {
        StarProfile::Polynomial {
            constant,
            linear,
            quadratic: Vec::new(),
        }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        StarProfile::Custom(Arc::new(f))
    }

    fn eval(&self, w: &[f64]) -> f64 {
        match self {
            StarProfile::Polynomial {
                constant,
                linear,
                quadratic,
            } => {
                let mut r = *constant + dot(linear, w);
                for (i, row) in quadratic.iter().enumerate() {
                    r += w[i] * dot(row, w);
                }
                r
            }
            StarProfile::Custom(f) => f(w),
        }
    }

    fn is_linear(&self) -> bool {
        match self {
            StarProfile::Polynomial { quadratic, .. } => quadratic.iter().all(|row| row.iter().all(|&q| q == 0.0)),
            StarProfile::Custom(_) => false,
        }
    }
}

#[derive(Clone)]
enum Profile {
    Ball(f64),
    Ellipsoid(Vec<f64>),
    Star(StarProfile),
}

/// The max-radius set `{x on the boundary : |x| = M}`, stored as directions.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSet {
    WholeSphere,
    Points {
        directions: Vec<Vec<f64>>,
    },
    /// Unit sphere of the coordinate subspace spanned by `axes`.
    Subsphere {
        axes: Vec<usize>,
    },
    Sampled {
        directions: Vec<Vec<f64>>,
        positive_measure: bool,
    },
}

impl LambdaSet {
    /// Whether the set plausibly has positive surface measure.
    pub fn has_positive_measure(&self, dim: usize) -> bool {
        match self {
            LambdaSet::WholeSphere => true,
            LambdaSet::Points { .. } => false,
            LambdaSet::Subsphere { axes } => axes.len() == dim,
            LambdaSet::Sampled { positive_measure, .. } => *positive_measure,
        }
    }

    /// Finite list of directions, if the set is (known to be) finite.
    pub fn finite_directions(&self) -> Option<&[Vec<f64>]> {
        match self {
            LambdaSet::Points { directions } => Some(directions),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    Ellipsoid,
    Star,
}

#[derive(Clone)]
pub struct StarDomain {
    dim: usize,
    profile: Profile,
    r_min: f64,
    max_radius: f64,
    max_radius_tolerance: f64,
    lambda: LambdaSet,
}

impl fmt::Debug for StarDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarDomain")
            .field("kind", &self.kind())
            .field("dim", &self.dim)
            .field("r_min", &self.r_min)
            .field("max_radius", &self.max_radius)
            .field("lambda", &self.lambda)
            .finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDomain(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

impl StarDomain {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(StarDomain {
            dim: n,
            profile: Profile::Ball(radius),
            r_min: radius,
            max_radius: radius,
            max_radius_tolerance: 0.0,
            lambda: LambdaSet::WholeSphere,
        })
    }

    /// The ellipsoid `{x : sum a_i^2 x_i^2 < 1}` with semi-axes `1/a_i`.
    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        check_dim(axes.len())?;
        if let Some(a) = axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidDomain(format!(
                "ellipsoid axis parameters must be positive, got {a}"
            )));
        }
        let a_min = axes.iter().cloned().fold(f64::INFINITY, f64::min);
        let a_max = axes.iter().cloned().fold(0.0, f64::max);
        let minimal: Vec<usize> = (0..axes.len()).filter(|&i| axes[i] == a_min).collect();
        let lambda = if minimal.len() == axes.len() {
            LambdaSet::WholeSphere
        } else if minimal.len() == 1 {
            let mut e = vec![0.0; axes.len()];
            e[minimal[0]] = 1.0;
            let minus: Vec<f64> = e.iter().map(|v| -v).collect();
            LambdaSet::Points {
                directions: vec![e, minus],
            }
        } else {
            LambdaSet::Subsphere { axes: minimal }
        };
        Ok(StarDomain {
            dim: axes.len(),
            profile: Profile::Ellipsoid(axes.to_vec()),
            r_min: 1.0 / a_max,
            max_radius: 1.0 / a_min,
            max_radius_tolerance: 0.0,
            lambda,
        })
    }

    /// Generic star domain. Positivity is validated on a dense direction sample; the
    /// maximum radius comes from the sample plus local golden-section refinement
    /// unless the profile is affine in `w`, where it is exact.
    pub fn star(n: usize, profile: StarProfile, r_min_hint: Option<f64>, seed: u64) -> Result<Self> {
        check_dim(n)?;
        if let StarProfile::Polynomial {
            constant,
            linear,
            quadratic,
        } = &profile
        {
            if linear.len() > n || quadratic.len() > n || quadratic.iter().any(|row| row.len() > n) {
                return Err(Error::InvalidDomain(format!(
                    "profile coefficients exceed dimension {n}"
                )));
            }
            let mut lin = linear.clone();
            lin.resize(n, 0.0);
            let quad: Vec<Vec<f64>> = if quadratic.is_empty() {
                Vec::new()
            } else {
                let mut q = quadratic.clone();
                q.resize(n, vec![0.0; n]);
                q.iter_mut().for_each(|row| row.resize(n, 0.0));
                q
            };
            return Self::star_polynomial(n, *constant, lin, quad, r_min_hint, seed);
        }
        Self::star_sampled(n, profile, r_min_hint, seed)
    }

    fn star_polynomial(
        n: usize,
        constant: f64,
        linear: Vec<f64>,
        quadratic: Vec<Vec<f64>>,
        r_min_hint: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        let profile = StarProfile::Polynomial {
            constant,
            linear: linear.clone(),
            quadratic,
        };
        if !profile.is_linear() {
            return Self::star_sampled(n, profile, r_min_hint, seed);
        }
        let slope = norm(&linear);
        let r_min = constant - slope;
        if !(r_min > 0.0) {
            let mut w: Vec<f64> = linear.iter().map(|v| -v / slope.max(f64::MIN_POSITIVE)).collect();
            if slope == 0.0 {
                w = vec![0.0; n];
                w[0] = 1.0;
            }
            return Err(Error::InvalidDomain(format!(
                "profile is not positive: r({w:?}) = {r_min}"
            )));
        }
        let lambda = if slope == 0.0 {
            LambdaSet::WholeSphere
        } else {
            let e: Vec<f64> = linear.iter().map(|v| v / slope).collect();
            LambdaSet::Points { directions: vec![e] }
        };
        let domain = StarDomain {
            dim: n,
            profile: Profile::Star(profile),
            r_min,
            max_radius: constant + slope,
            max_radius_tolerance: 0.0,
            lambda,
        };
        domain.check_hint(r_min_hint)?;
        Ok(domain)
    }

    fn star_sampled(n: usize, profile: StarProfile, r_min_hint: Option<f64>, seed: u64) -> Result<Self> {
        let count = if n <= 3 { 10_000 } else { 20_000 };
        let dirs = sampling::dense_directions(n, count, seed);
        let mut values = Vec::with_capacity(dirs.len());
        for w in &dirs {
            let r = profile.eval(w);
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidDomain(format!("profile is not positive: r({w:?}) = {r}")));
            }
            values.push(r);
        }
        let mut order: Vec<usize> = (0..dirs.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

        let f = |w: &[f64]| profile.eval(w);
        let mut best = values[order[0]];
        let mut tolerance: f64 = 0.0;
        let mut maxima: Vec<(Vec<f64>, f64)> = Vec::new();
        for &i in order.iter().take(8) {
            let (w, r, tol) = refine_extremum(&f, &dirs[i], 1.0);
            tolerance = tolerance.max(tol);
            best = best.max(r);
            maxima.push((w, r));
        }
        let mut r_min = values[order[order.len() - 1]];
        for &i in order.iter().rev().take(4) {
            let (_, r, _) = refine_extremum(&f, &dirs[i], -1.0);
            if !(r > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "profile is not positive near {:?}",
                    dirs[i]
                )));
            }
            r_min = r_min.min(r);
        }

        let near = 1e-9 * best.max(1.0);
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for (w, r) in maxima {
            if r >= best - near && directions.iter().all(|d| distance(d, &w) > 1e-6) {
                directions.push(w);
            }
        }
        let hits = values.iter().filter(|&&v| v >= best - near).count();
        let positive_measure = hits as f64 / values.len() as f64 > 1e-3;
        let domain = StarDomain {
            dim: n,
            profile: Profile::Star(profile),
            r_min,
            max_radius: best,
            max_radius_tolerance: tolerance.max(1e-12),
            lambda: LambdaSet::Sampled {
                directions,
                positive_measure,
            },
        };
        domain.check_hint(r_min_hint)?;
        Ok(domain)
    }

    fn check_hint(&self, hint: Option<f64>) -> Result<()> {
        if let Some(h) = hint {
            if !(h > 0.0) {
                return Err(Error::InvalidDomain(format!("r_min hint must be positive, got {h}")));
            }
            if self.r_min < h * (1.0 - 1e-12) {
                return Err(Error::InvalidDomain(format!(
                    "profile minimum {} is below the declared lower bound {h}",
                    self.r_min
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DomainKind {
        match self.profile {
            Profile::Ball(_) => DomainKind::Ball,
            Profile::Ellipsoid(_) => DomainKind::Ellipsoid,
            Profile::Star(_) => DomainKind::Star,
        }
    }

    /// `M = sup |x|` over the domain.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Achieved tolerance of the `M` estimate (zero when exact).
    pub fn max_radius_tolerance(&self) -> f64 {
        self.max_radius_tolerance
    }

    pub fn min_radius(&self) -> f64 {
        self.r_min
    }

    pub fn lambda(&self) -> &LambdaSet {
        &self.lambda
    }

    pub fn ellipsoid_axes(&self) -> Option<&[f64]> {
        match &self.profile {
            Profile::Ellipsoid(a) => Some(a),
            _ => None,
        }
    }

    /// Profile value `r(w)` for a unit vector `w` (not re-normalized).
    #[inline]
    pub fn radius(&self, w: &[f64]) -> f64 {
        match &self.profile {
            Profile::Ball(r) => *r,
            Profile::Ellipsoid(a) => 1.0 / weighted_norm(a, w),
            Profile::Star(p) => p.eval(w),
        }
    }

    /// `r(x/|x|)` for `x != 0`.
    #[inline]
    pub fn radius_at(&self, x: &[f64]) -> f64 {
        match &self.profile {
            Profile::Ball(r) => *r,
            Profile::Ellipsoid(a) => norm(x) / weighted_norm(a, x),
            Profile::Star(p) => {
                let len = norm(x);
                let w: Vec<f64> = x.iter().map(|v| v / len).collect();
                p.eval(&w)
            }
        }
    }

    /// Gradient of the zero-homogeneous extension `x -> r(x/|x|)`. It is homogeneous of
    /// degree -1, so it is evaluated at `x/|x|` and scaled, which stays finite for tiny `x`.
    pub fn radius_gradient(&self, x: &[f64], out: &mut [f64]) {
        let len = norm(x);
        let w: Vec<f64> = x.iter().map(|v| v / len).collect();
        match &self.profile {
            Profile::Ball(_) => out.iter_mut().for_each(|g| *g = 0.0),
            Profile::Ellipsoid(a) => {
                let wn = weighted_norm(a, &w);
                for i in 0..x.len() {
                    out[i] = w[i] / wn - a[i] * a[i] * w[i] / (wn * wn * wn);
                }
            }
            Profile::Star(StarProfile::Polynomial { linear, quadratic, .. }) => {
                let mut g = vec![0.0; x.len()];
                g[..linear.len()].copy_from_slice(linear);
                for (i, row) in quadratic.iter().enumerate() {
                    for j in 0..row.len() {
                        g[i] += row[j] * w[j];
                        g[j] += row[j] * w[i];
                    }
                }
                let radial = dot(&g, &w);
                for i in 0..x.len() {
                    out[i] = g[i] - radial * w[i];
                }
            }
            Profile::Star(StarProfile::Custom(_)) => {
                let h = 1e-6;
                let mut y = w.clone();
                for i in 0..x.len() {
                    y[i] = w[i] + h;
                    let up = self.radius_at(&y);
                    y[i] = w[i] - h;
                    let down = self.radius_at(&y);
                    y[i] = w[i];
                    out[i] = (up - down) / (2.0 * h);
                }
            }
        }
        out.iter_mut().for_each(|g| *g /= len);
    }

    /// `r(w) w`, the boundary point in direction `w`.
    pub fn boundary_point(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_point_dim(w)?;
        let len = norm(w);
        if (len - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitDirection { norm: len });
        }
        let r = self.radius(w);
        Ok(w.iter().map(|v| v * r).collect())
    }

    /// Open-domain membership; the origin is contained by convention.
    pub fn contains(&self, x: &[f64]) -> bool {
        let len = norm(x);
        if len == 0.0 {
            return true;
        }
        len < self.radius_at(x)
    }

    pub fn check_point_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match &self.profile {
            Profile::Ball(r) => format!("ball(n={}, R={r})", self.dim),
            Profile::Ellipsoid(a) => format!("ellipsoid(a={a:?})"),
            Profile::Star(StarProfile::Polynomial { constant, linear, .. }) => {
                format!("star(n={}, r = {constant} + {linear:?}.w + ...)", self.dim)
            }
            Profile::Star(StarProfile::Custom(_)) => format!("star(n={}, custom profile)", self.dim),
        }
    }
}

/// `|x|_a = (sum a_i^2 x_i^2)^(1/2)`.
#[inline]
pub fn weighted_norm(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(ai, xi)| ai * ai * xi * xi).sum::<f64>().sqrt()
}

/// Extends an axis list to dimension `n` by repeating its last entry; longer lists are
/// rejected.
pub fn pad_axes(axes: &[f64], n: usize) -> Result<Vec<f64>> {
    match axes.last() {
        None => Err(Error::InvalidDomain("empty axis list".into())),
        Some(_) if axes.len() > n => Err(Error::DimensionMismatch {
            expected: n,
            got: axes.len(),
        }),
        Some(&last) => {
            let mut a = axes.to_vec();
            a.resize(n, last);
            Ok(a)
        }
    }
}

fn tangent_basis(w: &[f64]) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let c = dot(&e, w);
        e.iter_mut().zip(w).for_each(|(ei, wi)| *ei -= c * wi);
        for b in &basis {
            let c = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(ei, bi)| *ei -= c * bi);
        }
        let len = norm(&e);
        if len > 1e-8 {
            basis.push(e.into_iter().map(|v| v / len).collect());
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

/// Local coordinate sweeps of golden-section search on the sphere.
/// `sign = 1` maximizes, `sign = -1` minimizes. Returns (direction, value, tolerance).
fn refine_extremum(f: &dyn Fn(&[f64]) -> f64, start: &[f64], sign: f64) -> (Vec<f64>, f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut w = start.to_vec();
    let mut value = f(&w);
    let mut h = 0.05;
    let mut last_gain = f64::INFINITY;
    let moved = |w: &[f64], e: &[f64], t: f64| -> Vec<f64> {
        let v: Vec<f64> = w.iter().zip(e).map(|(a, b)| a + t * b).collect();
        let len = norm(&v);
        v.into_iter().map(|c| c / len).collect()
    };
    while h > 1e-10 {
        let before = value;
        for e in tangent_basis(&w) {
            let phi = |t: f64| sign * f(&moved(&w, &e, t));
            let (mut a, mut b) = (-h, h);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let (mut fc, mut fd) = (phi(c), phi(d));
            while b - a > 1e-13 {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - INV_PHI * (b - a);
                    fc = phi(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + INV_PHI * (b - a);
                    fd = phi(d);
                }
            }
            let t = 0.5 * (a + b);
            let candidate = moved(&w, &e, t);
            let v = f(&candidate);
            if sign * v > sign * value {
                w = candidate;
                value = v;
            }
        }
        last_gain = (value - before).abs();
        h *= 0.5;
    }
    (w, value, last_gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_profile_is_constant() {
        let d = StarDomain::ball(3, 1.0).unwrap();
        assert_eq!(d.max_radius(), 1.0);
        assert_eq!(d.radius(&[0.0, 0.6, 0.8]), 1.0);
        assert_eq!(d.lambda(), &LambdaSet::WholeSphere);
    }

    #[test]
    fn ball_containment() {
        let d = StarDomain::ball(2, 2.0).unwrap();
        assert!(d.contains(&[1.9, 0.0]));
        assert!(!d.contains(&[2.1, 0.0]));
        assert!(d.contains(&[0.0, 0.0]));
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(matches!(StarDomain::ball(3, 0.0), Err(Error::InvalidDomain(_))));
        assert!(matches!(StarDomain::ball(3, -1.0), Err(Error::InvalidDomain(_))));
        assert!(matches!(StarDomain::ball(1, 1.0), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn ellipsoid_examples() {
        let d = StarDomain::ellipsoid(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.max_radius(), 1.0);
        assert_eq!(d.lambda(), &LambdaSet::WholeSphere);

        let d = StarDomain::ellipsoid(&[0.5, 1.0, 1.0]).unwrap();
        assert_eq!(d.max_radius(), 2.0);
        assert_eq!(
            d.lambda(),
            &LambdaSet::Points {
                directions: vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]
            }
        );
        assert_eq!(d.boundary_point(&[1.0, 0.0, 0.0]).unwrap(), vec![2.0, 0.0, 0.0]);

        let d = StarDomain::ellipsoid(&[1.0, 2.0, 2.0]).unwrap();
        assert_eq!(d.max_radius(), 1.0);
        assert_eq!(d.radius(&[0.0, 1.0, 0.0]), 0.5);

        assert!(StarDomain::ellipsoid(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn ellipsoid_with_repeated_minimum_has_subsphere_lambda() {
        let d = StarDomain::ellipsoid(&[0.5, 0.5, 1.0]).unwrap();
        assert_eq!(d.lambda(), &LambdaSet::Subsphere { axes: vec![0, 1] });
        assert!(!d.lambda().has_positive_measure(3));
    }

    #[test]
    fn affine_star_profile_is_exact() {
        let d = StarDomain::star(2, StarProfile::linear(1.0, vec![0.3]), None, 0).unwrap();
        assert!((d.max_radius() - 1.3).abs() < 1e-15);
        assert!((d.min_radius() - 0.7).abs() < 1e-15);
        assert_eq!(
            d.lambda(),
            &LambdaSet::Points {
                directions: vec![vec![1.0, 0.0]]
            }
        );
    }

    #[test]
    fn sampled_star_maximum_matches_circle_oracle() {
        // Oracle: brute-force maximization over 10^6 angles on the circle.
        let oracle = (0..1_000_000)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 1e6;
                1.0 + 0.3 * t.cos()
            })
            .fold(0.0, f64::max);
        let d = StarDomain::star(2, StarProfile::custom(|w| 1.0 + 0.3 * w[0]), None, 1).unwrap();
        assert!((d.max_radius() - oracle).abs() < 1e-10);
        assert!((d.max_radius() - 1.3).abs() < 1e-12);
        match d.lambda() {
            LambdaSet::Sampled {
                directions,
                positive_measure,
            } => {
                assert!(!positive_measure);
                assert!(distance(&directions[0], &[1.0, 0.0]) < 1e-5);
            }
            other => panic!("unexpected lambda {other:?}"),
        }
    }

    #[test]
    fn constant_star_profile_behaves_like_ball() {
        let star = StarDomain::star(3, StarProfile::custom(|_| 1.0), None, 0).unwrap();
        let ball = StarDomain::ball(3, 1.0).unwrap();
        assert_eq!(star.max_radius(), ball.max_radius());
        assert_eq!(star.min_radius(), 1.0);
        assert!(star.lambda().has_positive_measure(3));
        for w in sampling::dense_directions(3, 50, 0) {
            assert_eq!(star.radius(&w), ball.radius(&w));
            assert_eq!(star.contains(&w), ball.contains(&w));
        }
    }

    #[test]
    fn nonpositive_profile_rejected() {
        let affine = StarDomain::star(2, StarProfile::linear(0.5, vec![0.6]), None, 0);
        assert!(matches!(affine, Err(Error::InvalidDomain(_))));
        let custom = StarDomain::star(2, StarProfile::custom(|w| 0.5 + 0.6 * w[0]), None, 0);
        assert!(matches!(custom, Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn r_min_hint_is_checked() {
        assert!(StarDomain::star(2, StarProfile::linear(1.0, vec![0.3]), Some(0.6), 0).is_ok());
        assert!(StarDomain::star(2, StarProfile::linear(1.0, vec![0.3]), Some(0.8), 0).is_err());
    }

    #[test]
    fn non_unit_direction_rejected() {
        let d = StarDomain::ball(3, 1.0).unwrap();
        assert!(matches!(
            d.boundary_point(&[1.0, 1.0, 0.0]),
            Err(Error::NonUnitDirection { .. })
        ));
        assert_eq!(d.boundary_point(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn radius_gradient_is_finite_near_origin_and_with_short_profiles() {
        let e = StarDomain::ellipsoid(&[0.5, 1.0]).unwrap();
        let mut g = vec![0.0; 2];
        e.radius_gradient(&[3e-150, 5e-153], &mut g);
        assert!(g.iter().all(|v| v.is_finite()));
        let s = StarDomain::star(3, StarProfile::linear(1.0, vec![0.3]), None, 0).unwrap();
        let mut g = vec![0.0; 3];
        s.radius_gradient(&[0.0, 0.6, 0.8], &mut g);
        // tangential part of (0.3, 0, 0) at w = (0, 0.6, 0.8)
        assert!((g[0] - 0.3).abs() < 1e-15 && g[1].abs() < 1e-15 && g[2].abs() < 1e-15);
    }

    #[test]
    fn radius_gradient_matches_finite_differences() {
        let domains = [
            StarDomain::ellipsoid(&[1.0, 2.0, 2.0]).unwrap(),
            StarDomain::star(3, StarProfile::linear(1.0, vec![0.3, -0.1]), None, 0).unwrap(),
            StarDomain::star(
                3,
                StarProfile::Polynomial {
                    constant: 1.0,
                    linear: vec![0.1],
                    quadratic: vec![vec![0.0, 0.2], vec![0.0, 0.1]],
                },
                None,
                0,
            )
            .unwrap(),
        ];
        let x = [0.3, -0.2, 0.5];
        for d in &domains {
            let mut g = [0.0; 3];
            d.radius_gradient(&x, &mut g);
            for i in 0..3 {
                let h = 1e-6;
                let mut up = x;
                let mut down = x;
                up[i] += h;
                down[i] -= h;
                let fd = (d.radius_at(&up) - d.radius_at(&down)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "{d:?} {i} {fd} {}", g[i]);
            }
        }
    }
}
