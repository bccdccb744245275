//! Fixed catalog of functions that are C^1 up to the boundary, used by the inequality
//! suites. Along every ray `u - u o f` and the radial derivative change sign only on
//! coordinate hyperplanes, which the product angular rule puts on panel boundaries.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::{Constant, Coordinate, FnField, Polynomial, RadialPower, SharedField};
use crate::vecops::dot;

pub const NAMES: [&str; 13] = [
    "x1",
    "x2",
    "abs",
    "abs2",
    "abs3",
    "x1x2",
    "x1sq",
    "exp_x1",
    "x1_cubic",
    "x1sq_exp",
    "bump",
    "x1_gauss",
    "x12_gauss",
];

fn monomial(c: f64, n: usize, exps: &[(usize, u32)]) -> (f64, Vec<u32>) {
    let mut e = vec![0; n];
    for &(i, k) in exps {
        e[i] = k;
    }
    (c, e)
}

/// Looks up a catalog entry (or `constant`) by key for dimension `n`.
pub fn by_name(name: &str, n: usize) -> Result<SharedField> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "catalog functions need n >= 2, got {n}"
        )));
    }
    let u: SharedField = match name {
        "constant" => Arc::new(Constant(1.0)),
        "x1" => Arc::new(Coordinate(0)),
        "x2" => Arc::new(Coordinate(1)),
        "abs" => Arc::new(RadialPower { beta: 1.0, scale: 1.0 }),
        "abs2" => Arc::new(RadialPower { beta: 2.0, scale: 1.0 }),
        "abs3" => Arc::new(RadialPower { beta: 3.0, scale: 1.0 }),
        "x1x2" => Arc::new(Polynomial {
            terms: vec![monomial(1.0, n, &[(0, 1), (1, 1)])],
        }),
        "x1sq" => Arc::new(Polynomial {
            terms: vec![monomial(1.0, n, &[(0, 2)])],
        }),
        "exp_x1" => Arc::new(FnField::new("exp(x1)", |x: &[f64]| x[0].exp()).with_gradient(
            |x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|g| *g = 0.0);
                out[0] = x[0].exp();
            },
        )),
        "x1_cubic" => Arc::new(
            FnField::new("x1(1+|x|^2)", |x: &[f64]| x[0] * (1.0 + dot(x, x))).with_gradient(
                |x: &[f64], out: &mut [f64]| {
                    let s = 1.0 + dot(x, x);
                    for i in 0..x.len() {
                        out[i] = 2.0 * x[0] * x[i];
                    }
                    out[0] += s;
                },
            ),
        ),
        "x1sq_exp" => Arc::new(
            FnField::new("(1+x1^2)exp(|x|^2)", |x: &[f64]| (1.0 + x[0] * x[0]) * dot(x, x).exp()).with_gradient(
                |x: &[f64], out: &mut [f64]| {
                    let e = dot(x, x).exp();
                    let a = 1.0 + x[0] * x[0];
                    for i in 0..x.len() {
                        out[i] = 2.0 * a * x[i] * e;
                    }
                    out[0] += 2.0 * x[0] * e;
                },
            ),
        ),
        "bump" => Arc::new(FnField::new("1-|x|^2", |x: &[f64]| 1.0 - dot(x, x)).with_gradient(
            |x: &[f64], out: &mut [f64]| {
                for i in 0..x.len() {
                    out[i] = -2.0 * x[i];
                }
            },
        )),
        "x1_gauss" => Arc::new(
            FnField::new("x1 exp(-|x|^2/4)", |x: &[f64]| x[0] * (-dot(x, x) / 4.0).exp()).with_gradient(
                |x: &[f64], out: &mut [f64]| {
                    let e = (-dot(x, x) / 4.0).exp();
                    for i in 0..x.len() {
                        out[i] = -0.5 * x[0] * x[i] * e;
                    }
                    out[0] += e;
                },
            ),
        ),
        "x12_gauss" => Arc::new(
            FnField::new("(x1^2+x2^2) exp(-|x|^2/4)", |x: &[f64]| {
                (x[0] * x[0] + x[1] * x[1]) * (-dot(x, x) / 4.0).exp()
            })
            .with_gradient(|x: &[f64], out: &mut [f64]| {
                let e = (-dot(x, x) / 4.0).exp();
                let q = x[0] * x[0] + x[1] * x[1];
                for i in 0..x.len() {
                    out[i] = -0.5 * q * x[i] * e;
                }
                out[0] += 2.0 * x[0] * e;
                out[1] += 2.0 * x[1] * e;
            }),
        ),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown catalog function '{other}' (known: constant, {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(u)
}

/// All non-degenerate catalog functions for dimension `n`.
pub fn catalog(n: usize) -> Result<Vec<(&'static str, SharedField)>> {
    NAMES.iter().map(|&k| Ok((k, by_name(k, n)?))).collect()
}

/// Functions with sign changes inside the domain, for the modulus estimate.
pub fn lemma2_functions() -> Vec<SharedField> {
    vec![
        Arc::new(Coordinate(0)),
        Arc::new(FnField::new("sin(4|x|^2)", |x: &[f64]| (4.0 * dot(x, x)).sin())),
        Arc::new(FnField::new("x1x2 - 0.1", |x: &[f64]| x[0] * x[1] - 0.1)),
    ]
}
