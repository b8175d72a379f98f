//! Seeded random probing: lower bounds for basis constants and operator norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::seq::{lp_norm_f64, AmbientSpace, Seq};

/// Default number of random probes.
pub const DEFAULT_TRIALS: usize = 200;

/// Deterministic generator for `(seed, stream)`; distinct streams give
/// independent sequences from one master seed.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Coefficients drawn uniformly from `[-1, 1]`.
pub fn uniform_coeffs(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub(crate) fn norm_f64(xs: &[f64], space: &AmbientSpace) -> f64 {
    match space {
        AmbientSpace::Lp(p) => lp_norm_f64(xs.iter().copied(), *p),
        AmbientSpace::LInfty | AmbientSpace::C0 => xs.iter().fold(0.0f64, |m, x| m.max(x.abs())),
    }
}

/// `max_{n <= m} |Σ_{k<=n} a_k f_k| / |Σ_{k<=m} a_k f_k|` for one coefficient
/// vector.
fn partial_sum_ratio(f: &[Vec<f64>], a: &[f64], space: &AmbientSpace) -> f64 {
    let len = f.first().map_or(0, Vec::len);
    let mut s = vec![0.0; len];
    let mut best_prefix = 0.0f64;
    let mut ratio = 0.0f64;
    for (fk, &ak) in f.iter().zip(a) {
        for (x, y) in s.iter_mut().zip(fk) {
            *x += ak * y;
        }
        let n = norm_f64(&s, space);
        best_prefix = best_prefix.max(n);
        if n > 0.0 {
            ratio = ratio.max(best_prefix / n);
        }
    }
    ratio
}

/// Lower bound on the basis constant of `f`: the largest ratio
/// `|Σ_{k<=n} a_k f_k| / |Σ_{k<=m} a_k f_k|` (n <= m) found by random
/// sampling followed by coordinate-wise refinement of the best sample.
pub fn basis_constant_lower_bound<S: Scalar>(f: &[Seq<S>], space: &AmbientSpace, trials: usize, seed: u64) -> f64 {
    if f.is_empty() {
        return 1.0;
    }
    let rows: Vec<Vec<f64>> = f
        .iter()
        .map(|x| x.coords().iter().map(Scalar::to_f64).collect())
        .collect();
    let k = rows.len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    candidates.push(vec![1.0; k]);
    candidates.push((0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    let mut r = rng(seed, 0);
    candidates.extend((0..trials).map(|_| uniform_coeffs(&mut r, k)));
    let (mut best_a, mut best) = candidates
        .into_iter()
        .map(|a| {
            let v = partial_sum_ratio(&rows, &a, space);
            (a, v)
        })
        .fold(
            (vec![1.0; k], 1.0f64),
            |acc, (a, v)| if v > acc.1 { (a, v) } else { acc },
        );
    let mut step = 0.5;
    for _ in 0..12 {
        let mut improved = false;
        for i in 0..k {
            for dir in [step, -step] {
                let mut a = best_a.clone();
                a[i] += dir;
                let v = partial_sum_ratio(&rows, &a, space);
                if v > best {
                    best = v;
                    best_a = a;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    best.max(1.0)
}

/// Lower bound on `sup |A x| / |x|` from the given probes plus `trials`
/// random vectors.
pub fn operator_norm_lower_bound(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    len: usize,
    probes: &[Vec<f64>],
    space: &AmbientSpace,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed, 1);
    let random = (0..trials).map(|i| {
        let mut x = uniform_coeffs(&mut r, len);
        // Alternate dense probes with probes concentrated near a random point.
        if i % 2 == 1 && len > 0 {
            let centre = r.random_range(0..len);
            for (j, v) in x.iter_mut().enumerate() {
                *v /= 1.0 + (j as f64 - centre as f64).abs();
            }
        }
        x
    });
    probes
        .iter()
        .cloned()
        .chain(random)
        .map(|x| {
            let d = norm_f64(&x, space);
            if d == 0.0 {
                0.0
            } else {
                norm_f64(&apply(&x), space) / d
            }
        })
        .fold(0.0, f64::max)
}
