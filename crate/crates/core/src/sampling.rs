//! Seeded direction and point generators shared by the checkers and the QMC sphere rule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::vecops::norm;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the unit sphere in `n` dimensions.
pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&v);
        if r > 1e-8 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// Randomly shifted Halton points pushed through the normal quantile and normalized.
pub fn qmc_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        n <= PRIMES.len(),
        "QMC directions support at most {} dimensions",
        PRIMES.len()
    );
    let mut r = rng(seed);
    let shift: Vec<f64> = (0..n).map(|_| r.gen::<f64>()).collect();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count {
        let v: Vec<f64> = (0..n)
            .map(|k| {
                let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                normal.inverse_cdf(u.clamp(1e-15, 1.0 - 1e-15))
            })
            .collect();
        i += 1;
        let len = norm(&v);
        if len > 1e-10 {
            out.push(v.into_iter().map(|c| c / len).collect());
        }
    }
    out
}

/// Deterministic dense direction sample: uniform circle (n = 2), Fibonacci lattice
/// (n = 3), seeded QMC otherwise.
pub fn dense_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let s = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    vec![z, s * phi.cos(), s * phi.sin()]
                })
                .collect()
        }
        _ => qmc_directions(n, count, seed),
    }
}
