//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use hardy_lab::catalog::{self, lemma2_functions};
use hardy_lab::error::Error;
use hardy_lab::fields::{check_field, RadialField};
use hardy_lab::funcspace::{
    central_difference_gradient, compose_with_field, pullback_sphere_gradient, radial_fd_derivative, EllipsoidRatio,
};
use hardy_lab::geometry::{pad_axes, StarDomain, StarProfile};
use hardy_lab::hardy::{lemma2_check, Mode};
use hardy_lab::probes::{
    beta_grid, default_ladder, maximizer_check, prop1_probe, sharpness_scan, Growth, MaximizerKind,
};
use hardy_lab::quadrature::{ball_volume, integrate, QuadratureRule, Resolution};
use hardy_lab::report::without_timestamp;
use hardy_lab::sampling;
use hardy_lab::suite::{run_suite, SuiteConfig};
use hardy_lab::vecops::{dot, norm};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, log: &mut String, line: String) -> bool {
    let _ = writeln!(log, "      {} {line}", if ok { "ok  " } else { "FAIL" });
    ok
}

fn e<T: std::fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

fn domains(n: usize) -> Vec<StarDomain> {
    vec![
        StarDomain::ball(n, 1.0).unwrap(),
        StarDomain::ellipsoid(&pad_axes(&[1.0, 2.0, 2.0], n).unwrap()).unwrap(),
        StarDomain::star(n, StarProfile::linear(1.0, vec![0.3]), None, 0).unwrap(),
    ]
}

/// 1. Subcritical inequality over the catalog, three domains, n = 3, 4, 5, all p.
fn criterion1() -> Outcome {
    let cfg = SuiteConfig {
        critical_dims: vec![],
        ..SuiteConfig::default()
    };
    let t = Instant::now();
    let r = run_suite(&cfg, 0).map_err(e)?;
    let secs = t.elapsed().as_secs_f64();
    let mut log = String::new();
    let mut ok = check(
        catalog::NAMES.len() >= 10,
        &mut log,
        format!("catalog size {}", catalog::NAMES.len()),
    );
    let worst_q = r.entries.iter().map(|x| x.q).fold(f64::NEG_INFINITY, f64::max);
    let worst_err = r.entries.iter().map(|x| x.q_error).fold(0.0, f64::max);
    ok &= check(
        worst_q <= 1.0 + 1e-6,
        &mut log,
        format!("max Q = {worst_q:.12} over {} cases", r.entries.len()),
    );
    ok &= check(
        worst_err < 1e-6,
        &mut log,
        format!("max two-grid error bar of Q = {worst_err:.2e}"),
    );
    ok &= check(secs <= 120.0, &mut log, format!("runtime {secs:.1} s"));
    ok &= check(
        r.entries.len() == 13 * 3 * (2 + 3 + 4),
        &mut log,
        "every (function, domain, n, p) case ran".into(),
    );
    for x in r.entries.iter().filter(|x| !x.passed) {
        let _ = writeln!(
            log,
            "      failing: {} {} n={} p={} Q={} err={:.1e}",
            x.domain, x.function, x.n, x.p, x.q, x.q_error
        );
    }
    Ok((ok, log))
}

/// 2. Critical inequality, p = n in {2, 3}.
fn criterion2() -> Outcome {
    let cfg = SuiteConfig {
        dims: vec![],
        ..SuiteConfig::default()
    };
    let r = run_suite(&cfg, 0).map_err(e)?;
    let mut log = String::new();
    let worst_q = r.entries.iter().map(|x| x.q).fold(f64::NEG_INFINITY, f64::max);
    let mut ok = check(
        worst_q <= 1.0 + 1e-4,
        &mut log,
        format!("max Q = {worst_q:.9} over {} cases", r.entries.len()),
    );
    let c2: Vec<f64> = r.entries.iter().filter(|x| x.n == 2).map(|x| x.constant).collect();
    ok &= check(
        !c2.is_empty() && c2.iter().all(|&c| c == 4.0),
        &mut log,
        "n = 2 constant is exactly 4".into(),
    );
    let c3 = r
        .entries
        .iter()
        .find(|x| x.n == 3)
        .map(|x| x.constant)
        .unwrap_or(f64::NAN);
    ok &= check((c3 - 3.375).abs() < 1e-15, &mut log, format!("n = 3 constant = {c3}"));
    ok &= check(
        r.entries.iter().all(|x| x.mode == Mode::Critical),
        &mut log,
        "all runs critical".into(),
    );
    Ok((ok, log))
}

/// 3. Equality for the closed-form maximizers; no critical maximizer on a ball.
fn criterion3() -> Outcome {
    let mut log = String::new();
    let mut ok = true;
    for (n, p) in [(3, 1.0), (3, 2.0), (4, 2.0)] {
        let rule = QuadratureRule::new(n, Resolution::for_dim(n)).map_err(e)?;
        for axes in [vec![1.0; n], pad_axes(&[1.0, 2.0, 2.0], n).map_err(e)?] {
            let r = maximizer_check(
                &MaximizerKind::Xi {
                    axes: axes.clone(),
                    n,
                    p,
                },
                &rule,
            )
            .map_err(e)?;
            let q = r.report.q;
            ok &= check(
                (q - 1.0).abs() <= 1e-6,
                &mut log,
                format!("xi a={axes:?} n={n} p={p}: Q = {q:.15}"),
            );
            if n == 3 && p == 2.0 && axes[1] == 1.0 {
                let target = 2.0 * PI / 3.0;
                let (l, rhs) = (r.report.lhs, r.report.rhs);
                ok &= check(
                    (l - target).abs() <= 1e-6 && (rhs - target).abs() <= 1e-6,
                    &mut log,
                    format!("ball n=3 p=2: lhs = {l:.12}, rhs = {rhs:.12}, 2pi/3 = {target:.12}"),
                );
            }
        }
    }
    let rule = QuadratureRule::new(3, Resolution::for_dim(3)).map_err(e)?;
    let eta = MaximizerKind::Eta {
        axes: vec![0.5, 1.0, 1.0],
        n: 3,
        alpha: 2.0,
    };
    let r = maximizer_check(&eta, &rule).map_err(e)?;
    ok &= check(
        (r.report.q - 1.0).abs() <= 1e-4,
        &mut log,
        format!(
            "eta a=(0.5,1,1) alpha=2: Q = {:.12} (+- {:.1e})",
            r.report.q, r.report.q_error
        ),
    );
    let ball = MaximizerKind::Eta {
        axes: vec![1.0; 3],
        n: 3,
        alpha: 2.0,
    };
    let rejected = matches!(maximizer_check(&ball, &rule), Err(Error::NoMaximizer(_)));
    ok &= check(
        rejected,
        &mut log,
        "eta on a ball rejected with the no-maximizer error".into(),
    );
    Ok((ok, log))
}

/// 4. Sharpness scan on [kappa, 3 kappa].
fn criterion4() -> Outcome {
    let mut log = String::new();
    let mut ok = true;
    let rule = QuadratureRule::new(3, Resolution::for_dim(3)).map_err(e)?;
    for axes in [vec![1.0; 3], vec![1.0, 2.0, 2.0]] {
        let d = Arc::new(StarDomain::ellipsoid(&axes).map_err(e)?);
        let f = RadialField::canonical(d.clone());
        let psi = Arc::new(EllipsoidRatio {
            axes: axes.clone(),
            index: 0,
        });
        for p in [1.0, 2.0] {
            let kappa = (3.0 - p) / p;
            let grid = beta_grid(kappa, 3.0, 9);
            let s = sharpness_scan(d.clone(), &f, psi.clone(), p, 3, &grid, &rule).map_err(e)?;
            let good = s.closed_form_residual <= 1e-4 && s.argmax_beta == kappa && (s.q_at_argmax - 1.0).abs() <= 1e-6;
            ok &= check(
                good,
                &mut log,
                format!(
                    "a={axes:?} p={p}: residual {:.1e}, argmax beta {} (kappa {kappa}), Q there {:.12}",
                    s.closed_form_residual, s.argmax_beta, s.q_at_argmax
                ),
            );
        }
    }
    Ok((ok, log))
}

/// 5. Point-singular counterexample: memberships and fitted divergence exponents.
fn criterion5() -> Outcome {
    let mut log = String::new();
    let x0 = [0.0, 0.0, 1.0];
    let pr = prop1_probe(3, 2.0, 1.25, &x0, &default_ladder()).map_err(e)?;
    let m = &pr.memberships;
    let mut ok = check(
        m.u_in_lp && !m.pullback_in_lp,
        &mut log,
        format!("u in L2: {}, u(x/|x|) in L2: {}", m.u_in_lp, m.pullback_in_lp),
    );
    let s = pr.sphere.fitted_exponent;
    let g = pr.gradient.fitted_exponent;
    ok &= check(
        (s + 0.5).abs() <= 0.05 * 0.5,
        &mut log,
        format!("sphere integral exponent {s:.5} (expected -0.5)"),
    );
    ok &= check(
        (g + 2.5).abs() <= 0.05 * 2.5,
        &mut log,
        format!("gradient integral exponent {g:.5} (expected -2.5)"),
    );
    let edge = prop1_probe(3, 2.0, 1.0, &x0, &default_ladder()).map_err(e)?;
    ok &= check(
        edge.sphere.growth == Growth::Logarithmic && edge.sphere.log_flag,
        &mut log,
        format!(
            "alpha = 1: {:?} (slope {:.4})",
            edge.sphere.growth, edge.sphere.fitted_exponent
        ),
    );
    Ok((ok, log))
}

/// 6. Gradient identities and the modulus lemma.
fn criterion6() -> Outcome {
    let mut log = String::new();
    let n = 3;
    let mut rng = sampling::rng(6);
    let funcs = catalog::catalog(n).map_err(e)?;
    let mut worst_rel: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut fd = vec![0.0; n];
    for k in 0..1000 {
        let (_, u) = &funcs[k % funcs.len()];
        let w = sampling::random_direction(&mut rng, n);
        let r: f64 = rand::Rng::gen_range(&mut rng, 0.2..1.0);
        let x: Vec<f64> = w.iter().map(|v| v * r).collect();
        let g = pullback_sphere_gradient(u.as_ref(), &x).map_err(e)?;
        let v = |y: &[f64]| {
            let l = norm(y);
            u.value(&y.iter().map(|t| t / l).collect::<Vec<_>>())
        };
        central_difference_gradient(&v, &x, &mut fd);
        let diff = norm(&g.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
        let scale = norm(&g);
        if scale > 1e-8 {
            worst_rel = worst_rel.max(diff / scale);
        }
        worst_orth = worst_orth.max(dot(&g, &x).abs());
    }
    let mut ok = check(
        worst_rel <= 1e-5,
        &mut log,
        format!("pullback gradient vs FD: max relative deviation {worst_rel:.2e}"),
    );
    ok &= check(
        worst_orth <= 1e-12,
        &mut log,
        format!("max |grad . x| = {worst_orth:.2e}"),
    );

    let mut worst_radial: f64 = 0.0;
    let mut rng = sampling::rng(7);
    for (di, d) in domains(n).into_iter().enumerate() {
        let d = Arc::new(d);
        let f = RadialField::canonical(d.clone());
        for k in 0..334 {
            let (_, u) = &funcs[(k + di) % funcs.len()];
            let v = compose_with_field(u.clone(), &f);
            let w = sampling::random_direction(&mut rng, n);
            let rho: f64 = rand::Rng::gen_range(&mut rng, 0.05..0.95);
            let x: Vec<f64> = w.iter().map(|t| t * rho * d.radius(&w)).collect();
            worst_radial = worst_radial.max(radial_fd_derivative(v.as_ref(), &x).map_err(e)?.abs());
        }
    }
    ok &= check(
        worst_radial <= 1e-8,
        &mut log,
        format!("max |radial FD derivative of u o f| = {worst_radial:.2e}"),
    );

    for g in lemma2_functions() {
        let r = lemma2_check(g.as_ref(), n, 1000, 2);
        ok &= check(
            r.max_violation <= 1e-10 && r.samples == 1000,
            &mut log,
            format!(
                "modulus lemma for {}: violation {:.2e} ({} skipped)",
                r.function, r.max_violation, r.skipped
            ),
        );
    }
    Ok((ok, log))
}

/// 7. Canonical fields on the three domain kinds.
fn criterion7() -> Outcome {
    let mut log = String::new();
    let mut ok = true;
    for d in domains(3) {
        let f = RadialField::canonical(Arc::new(d));
        let r = check_field(&f, 1000, 7);
        ok &= check(
            r.passes(1e-12),
            &mut log,
            format!(
                "{}: ray {:.1e}, boundary {:.1e}, idempotence {:.1e}",
                r.domain, r.ray_invariance_error, r.boundary_identity_error, r.idempotence_error
            ),
        );
    }
    Ok((ok, log))
}

/// 8. Quadrature self-tests.
fn criterion8() -> Outcome {
    let mut log = String::new();
    let mut ok = true;
    for n in [2, 3] {
        let rule = QuadratureRule::new(n, Resolution::for_dim(n)).map_err(e)?;
        let d = StarDomain::ball(n, 1.0).map_err(e)?;
        let v = integrate(&d, |_| 1.0, &rule).map_err(e)?.value;
        ok &= check(
            (v - ball_volume(n, 1.0)).abs() <= 1e-10,
            &mut log,
            format!("|B(1)| in R^{n}: {v:.15}"),
        );
    }
    let rule = QuadratureRule::new(3, Resolution::for_dim(3)).map_err(e)?;
    let ball = StarDomain::ball(3, 1.0).map_err(e)?;
    let v = integrate(&ball, |x| 1.0 / dot(x, x), &rule).map_err(e)?.value;
    ok &= check(
        (v - 4.0 * PI).abs() <= 1e-8,
        &mut log,
        format!("int |x|^-2 over B(1): {v:.15} (4pi = {:.15})", 4.0 * PI),
    );
    let ell = StarDomain::ellipsoid(&[1.0, 2.0, 2.0]).map_err(e)?;
    let v = integrate(&ell, |_| 1.0, &rule).map_err(e)?.value;
    ok &= check(
        (v - PI / 3.0).abs() <= 1e-8,
        &mut log,
        format!("|E_(1,2,2)| = {v:.15} (pi/3 = {:.15})", PI / 3.0),
    );
    for d in [&ball, &ell] {
        let v = integrate(d, |x| x[0] * (x[1] + 2.0 * x[2]).exp(), &rule)
            .map_err(e)?
            .value;
        ok &= check(
            v.abs() <= 1e-10,
            &mut log,
            format!("odd integrand over {}: {v:.2e}", d.describe()),
        );
    }
    Ok((ok, log))
}

/// 9. Two `suite` runs with the same seed give the same JSON apart from the timestamp.
fn criterion9() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = dir.path().join("suite.toml");
    std::fs::write(
        &cfg,
        "seed = 11\n[suite]\ndims = [3, 4]\ncritical_dims = [2]\nfunctions = [\"x1\", \"abs2\", \"x1x2\", \"bump\"]\n",
    )
    .map_err(e)?;
    let out = dir.path().join("out");
    let mut texts = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_hardy-lab"))
            .args(["suite", "--seed", "11", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(e)?;
        if !status.status.success() {
            return Err(format!(
                "suite exited with {}: {}",
                status.status,
                String::from_utf8_lossy(&status.stderr)
            ));
        }
        texts.push(std::fs::read_to_string(out.join("suite.json")).map_err(e)?);
    }
    let mut log = String::new();
    let strip = |t: &str| {
        t.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut ok = check(
        strip(&texts[0]) == strip(&texts[1]),
        &mut log,
        "byte-identical apart from the timestamp line".into(),
    );
    let (a, b) = (
        without_timestamp(&texts[0]).map_err(e)?,
        without_timestamp(&texts[1]).map_err(e)?,
    );
    ok &= check(a == b, &mut log, "equal as JSON values without timestamp".into());
    ok &= check(
        a["seed"] == 11 && a["config"]["seed"] == 11,
        &mut log,
        "seed recorded in the report and the config echo".into(),
    );
    Ok((ok, log))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("subcritical inequality suite", criterion1),
        ("critical inequality suite", criterion2),
        ("maximizer attainment", criterion3),
        ("sharpness scan", criterion4),
        ("counterexample probe", criterion5),
        ("gradient identities", criterion6),
        ("radial field checks", criterion7),
        ("quadrature self-tests", criterion8),
        ("determinism", criterion9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, log) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("      error: {msg}\n")),
        };
        println!(
            "{} criterion {} ({name}) [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64()
        );
        print!("{log}");
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
