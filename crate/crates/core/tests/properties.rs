use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use hardy_lab::catalog;
use hardy_lab::fields::{check_field, RadialField};
use hardy_lab::funcspace::{pullback_sphere_gradient, Exponents, FnField, Scaled};
use hardy_lab::geometry::{pad_axes, StarDomain, StarProfile};
use hardy_lab::hardy::{verify, Mode};
use hardy_lab::probes::{fit_divergence, Growth};
use hardy_lab::quadrature::{integrate, QuadratureRule, Resolution};
use hardy_lab::vecops::{dot, norm};

fn rule3() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| {
        QuadratureRule::new(
            3,
            Resolution::default()
                .with_angular_order(6)
                .with_pole_levels(2)
                .with_radial(2, 8),
        )
        .unwrap()
    })
}

fn star(c1: f64, c2: f64) -> Arc<StarDomain> {
    Arc::new(StarDomain::star(3, StarProfile::linear(1.0, vec![c1, c2]), None, 0).unwrap())
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    /// Both sides are p-homogeneous in u, so Q does not see a scale factor.
    #[test]
    fn quotient_is_scale_invariant(
        k in 0usize..catalog::NAMES.len(),
        c in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
        p in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
    ) {
        let d = Arc::new(StarDomain::ball(3, 1.0).unwrap());
        let f = RadialField::canonical(d.clone());
        let u = catalog::by_name(catalog::NAMES[k], 3).unwrap();
        let e = Exponents::subcritical(3, p).unwrap();
        let a = verify(u.as_ref(), &f, &d, e, Mode::Subcritical, rule3()).unwrap();
        let cu = Scaled { inner: u.clone(), factor: c };
        let b = verify(&cu, &f, &d, e, Mode::Subcritical, rule3()).unwrap();
        let s = c.abs().powf(p);
        prop_assert!((b.lhs - s * a.lhs).abs() <= 1e-12 * (1.0 + s * a.lhs.abs()));
        prop_assert!((b.rhs - s * a.rhs).abs() <= 1e-12 * (1.0 + s * a.rhs.abs()));
        prop_assert!((b.q - a.q).abs() <= 1e-12);
    }

    /// Adding a constant changes neither `u - u o f` nor the gradient.
    #[test]
    fn quotient_ignores_additive_constants(k in 0usize..catalog::NAMES.len(), c in -10.0..10.0f64, c1 in -0.3..0.3f64) {
        let d = star(c1, 0.1);
        let f = RadialField::canonical(d.clone());
        let u = catalog::by_name(catalog::NAMES[k], 3).unwrap();
        let inner = u.clone();
        let shifted = FnField::new("u+c", move |x: &[f64]| inner.value(x) + c);
        let e = Exponents::subcritical(3, 2.0).unwrap();
        let a = verify(u.as_ref(), &f, &d, e, Mode::Subcritical, rule3()).unwrap();
        let b = verify(&shifted, &f, &d, e, Mode::Subcritical, rule3()).unwrap();
        prop_assert!((a.q - b.q).abs() <= 1e-6 * (1.0 + a.q), "{} vs {}", a.q, b.q);
    }

    /// The subcritical inequality holds on random star domains.
    #[test]
    fn inequality_holds_on_random_stars(
        k in 0usize..catalog::NAMES.len(),
        c1 in -0.4..0.4f64,
        c2 in -0.4..0.4f64,
        p in prop_oneof![Just(1.0), Just(2.0)],
    ) {
        let d = star(c1, c2);
        let f = RadialField::canonical(d.clone());
        let u = catalog::by_name(catalog::NAMES[k], 3).unwrap();
        let r = verify(u.as_ref(), &f, &d, Exponents::subcritical(3, p).unwrap(), Mode::Subcritical, rule3()).unwrap();
        prop_assert!(r.q <= 1.0 + 1e-6 + 10.0 * r.q_error, "Q = {} +- {}", r.q, r.q_error);
    }

    /// Canonical fields solve their boundary value problem on every star domain.
    #[test]
    fn canonical_fields_are_ray_invariant(c1 in -0.5..0.5f64, c2 in -0.3..0.3f64, seed in 0u64..1000) {
        let f = RadialField::canonical(star(c1, c2));
        let r = check_field(&f, 50, seed);
        prop_assert!(r.passes(1e-12), "{r:?}");
    }

    /// Ellipsoid fields agree with the canonical field of their ellipsoid.
    #[test]
    fn ellipsoid_field_matches_canonical(a in prop::collection::vec(0.3..3.0f64, 3), x in prop::collection::vec(-1.0..1.0f64, 3)) {
        prop_assume!(norm(&x) > 1e-3);
        let fe = RadialField::ellipsoid(&a).unwrap();
        let fc = RadialField::canonical(Arc::new(StarDomain::ellipsoid(&a).unwrap()));
        let (ye, yc) = (fe.eval(&x).unwrap(), fc.eval(&x).unwrap());
        for i in 0..3 {
            prop_assert!((ye[i] - yc[i]).abs() <= 1e-12 * (1.0 + yc[i].abs()));
        }
    }

    /// The pullback gradient is tangential and scales like `1/|x|` along rays.
    #[test]
    fn pullback_gradient_is_tangential(k in 0usize..catalog::NAMES.len(), x in prop::collection::vec(-1.0..1.0f64, 3), l in 0.1..10.0f64) {
        prop_assume!(norm(&x) > 1e-2);
        let u = catalog::by_name(catalog::NAMES[k], 3).unwrap();
        let g = pullback_sphere_gradient(u.as_ref(), &x).unwrap();
        prop_assert!(dot(&g, &x).abs() <= 1e-12 * (1.0 + norm(&g)));
        let y: Vec<f64> = x.iter().map(|v| v * l).collect();
        let h = pullback_sphere_gradient(u.as_ref(), &y).unwrap();
        for i in 0..3 {
            prop_assert!((h[i] * l - g[i]).abs() <= 1e-10 * (1.0 + g[i].abs()));
        }
    }

    /// Odd integrands vanish on domains symmetric under `x1 -> -x1`.
    #[test]
    fn odd_integrands_vanish(a in prop::collection::vec(0.5..2.0f64, 3), s in 0.1..2.0f64) {
        let d = StarDomain::ellipsoid(&a).unwrap();
        let v = integrate(&d, |x| x[0] * (s * x[1]).cos() * (1.0 + x[2] * x[2]), rule3()).unwrap();
        prop_assert!(v.value.abs() <= 1e-10, "{}", v.value);
    }

    /// A synthetic `C + A delta^s` ladder is fitted back to its exponent.
    #[test]
    fn divergence_fit_recovers_exponent(s in -3.0..-0.2f64, a in 0.1..10.0f64, c in -5.0..5.0f64) {
        let ladder: Vec<(f64, f64)> = (3..=10).map(|k| {
            let d = 0.5f64.powi(k);
            (d, c + a * d.powf(s))
        }).collect();
        let fit = fit_divergence(ladder).unwrap();
        prop_assert_eq!(fit.growth, Growth::Power);
        prop_assert!((fit.fitted_exponent - s).abs() <= 1e-9);
    }

    /// Padding keeps the given axes and repeats the last one.
    #[test]
    fn pad_axes_extends_with_last_entry(axes in prop::collection::vec(0.1..5.0f64, 1..4), extra in 0usize..4) {
        let n = axes.len() + extra;
        let padded = pad_axes(&axes, n).unwrap();
        prop_assert_eq!(padded.len(), n);
        prop_assert_eq!(&padded[..axes.len()], &axes[..]);
        prop_assert!(padded[axes.len()..].iter().all(|v| v == axes.last().unwrap()));
    }
}
