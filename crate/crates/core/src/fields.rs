//! Radially invariant vector fields `f` with `(x . grad) f = 0` away from the origin
//! and `f(x) = x` on the boundary.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{weighted_norm, StarDomain};
use crate::sampling;
#[cfg(test)]
use crate::vecops::max_abs_diff;
use crate::vecops::{distance, norm};

pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum FieldKind {
    /// `f(x) = r(x/|x|) x/|x|`
    Canonical,
    /// `f_a(x) = x / |x|_a`
    Ellipsoid(Vec<f64>),
    Custom(VectorFn),
}

#[derive(Clone)]
pub struct RadialField {
    domain: Arc<StarDomain>,
    kind: FieldKind,
}

impl fmt::Debug for RadialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialField")
            .field("kind", &self.kind_name())
            .field("domain", &self.domain)
            .finish()
    }
}

impl RadialField {
    pub fn canonical(domain: Arc<StarDomain>) -> Self {
        RadialField {
            domain,
            kind: FieldKind::Canonical,
        }
    }

    /// The ellipsoid field `x/|x|_a` together with its ellipsoid.
    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        let domain = Arc::new(StarDomain::ellipsoid(axes)?);
        Ok(RadialField {
            domain,
            kind: FieldKind::Ellipsoid(axes.to_vec()),
        })
    }

    /// An arbitrary map, e.g. a deliberately perturbed field for checker tests.
    pub fn custom<F>(domain: Arc<StarDomain>, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        RadialField {
            domain,
            kind: FieldKind::Custom(Arc::new(f)),
        }
    }

    pub fn domain(&self) -> &Arc<StarDomain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FieldKind::Canonical => "canonical",
            FieldKind::Ellipsoid(_) => "ellipsoid",
            FieldKind::Custom(_) => "custom",
        }
    }

    /// Closed-form fields built from the domain's own profile.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self.kind, FieldKind::Custom(_))
    }

    /// Writes `f(x)` into `out`. `x = 0` is outside the domain of definition.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.domain.check_point_dim(x)?;
        let len = norm(x);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        self.apply_unchecked(x, len, out);
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_unchecked(&self, x: &[f64], len: f64, out: &mut [f64]) {
        match &self.kind {
            FieldKind::Canonical => {
                let r = self.domain.radius_at(x);
                for i in 0..x.len() {
                    out[i] = r * x[i] / len;
                }
            }
            FieldKind::Ellipsoid(a) => {
                let s = weighted_norm(a, x);
                for i in 0..x.len() {
                    out[i] = x[i] / s;
                }
            }
            FieldKind::Custom(f) => f(x, out),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.apply(x, &mut out)?;
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldReport {
    pub field: String,
    pub domain: String,
    pub samples: usize,
    pub seed: u64,
    pub ray_invariance_error: f64,
    pub boundary_identity_error: f64,
    pub idempotence_error: f64,
    /// Largest excess of `|f(x)|` over `M`.
    pub bound_excess: f64,
}

impl FieldReport {
    pub fn max_error(&self) -> f64 {
        self.ray_invariance_error
            .max(self.boundary_identity_error)
            .max(self.idempotence_error)
            .max(self.bound_excess)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_error() <= tol
    }
}

const RAY_SCALES: [f64; 3] = [0.5, 2.0, 10.0];

/// Samples seeded interior and boundary points and measures how far `f` is from
/// solving the boundary value problem. Ray invariance is compared exactly at a few
/// dilations rather than differentiated.
pub fn check_field(f: &RadialField, samples: usize, seed: u64) -> FieldReport {
    let d = f.domain();
    let n = d.dim();
    let m = d.max_radius();
    let mut rng = sampling::rng(seed);
    let mut report = FieldReport {
        field: f.kind_name().to_string(),
        domain: d.describe(),
        samples: samples.max(1),
        seed,
        ray_invariance_error: 0.0,
        boundary_identity_error: 0.0,
        idempotence_error: 0.0,
        bound_excess: 0.0,
    };
    let mut fx = vec![0.0; n];
    let mut fy = vec![0.0; n];
    for _ in 0..report.samples {
        let w = sampling::random_direction(&mut rng, n);
        let rho: f64 = rand::Rng::gen_range(&mut rng, 1e-3..1.0);
        let b: Vec<f64> = w.iter().map(|v| v * d.radius(&w)).collect();
        let x: Vec<f64> = b.iter().map(|v| v * rho).collect();

        f.apply_unchecked(&x, norm(&x), &mut fx);
        for s in RAY_SCALES {
            let y: Vec<f64> = x.iter().map(|v| v * s).collect();
            f.apply_unchecked(&y, norm(&y), &mut fy);
            report.ray_invariance_error = report.ray_invariance_error.max(distance(&fx, &fy));
        }

        f.apply_unchecked(&b, norm(&b), &mut fy);
        report.boundary_identity_error = report.boundary_identity_error.max(distance(&fy, &b));

        let fx_len = norm(&fx);
        f.apply_unchecked(&fx.clone(), fx_len, &mut fy);
        report.idempotence_error = report.idempotence_error.max(distance(&fy, &fx));
        report.bound_excess = report.bound_excess.max(fx_len - m);
    }
    report
}
