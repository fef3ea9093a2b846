//! Daubechies scaling filters by spectral factorization.
//!
//! The squared magnitude response of the order-`p` Daubechies filter is
//! `cos^{2p}(w/2) * P(sin^2(w/2))` with `P(y) = sum_k C(p-1+k, k) y^k`.
//! Each root of `P` maps to a reciprocal pair of roots in `z`; keeping the
//! member inside the unit circle yields the minimum-phase factor.

use std::sync::OnceLock;

use num_complex::Complex64;

pub const MAX_ORDER: usize = 10;

static CACHE: [OnceLock<Vec<f64>>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];

/// Low-pass decomposition filter of the order-`order` Daubechies wavelet
/// (`2 * order` taps, unit energy, sum `sqrt(2)`).
///
/// Panics if `order` is outside `1..=MAX_ORDER`; callers validate first.
pub fn daubechies_lowpass(order: usize) -> &'static [f64] {
    assert!(
        (1..=MAX_ORDER).contains(&order),
        "Daubechies order {order} outside 1..={MAX_ORDER}"
    );
    CACHE[order - 1].get_or_init(|| compute_lowpass(order))
}

/// Quadrature-mirror high-pass partner: `g[j] = (-1)^j h[L-1-j]`.
pub fn quadrature_mirror(lowpass: &[f64]) -> Vec<f64> {
    let len = lowpass.len();
    (0..len)
        .map(|j| {
            let v = lowpass[len - 1 - j];
            if j % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn compute_lowpass(order: usize) -> Vec<f64> {
    let p = order;
    // P(y) in ascending powers.
    let poly: Vec<f64> = (0..p).map(|k| binomial(p - 1 + k, k)).collect();
    let y_roots = polynomial_roots(&poly);

    // Build H(z) = (1 + z)^p * prod (z - z_k), ascending powers of z.
    let mut h: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..p {
        h = poly_mul_linear(&h, Complex64::new(1.0, 0.0));
    }
    for y in y_roots {
        // y = (2 - z - 1/z) / 4  =>  z^2 - (2 - 4y) z + 1 = 0
        let b = Complex64::new(2.0, 0.0) - 4.0 * y;
        let disc = (b * b - 4.0).sqrt();
        let z1 = (b + disc) / 2.0;
        let z2 = (b - disc) / 2.0;
        let inside = if z1.norm() < z2.norm() { z1 } else { z2 };
        h = poly_mul_linear(&h, -inside);
    }

    let mut taps: Vec<f64> = h.iter().map(|c| c.re).collect();
    let sum: f64 = taps.iter().sum();
    let scale = std::f64::consts::SQRT_2 / sum;
    taps.iter_mut().for_each(|t| *t *= scale);
    // Ascending powers of z already give the decomposition ordering
    // (smallest taps first) used by common tables.
    taps
}

/// Multiply a polynomial (ascending powers) by `(c + z)`.
fn poly_mul_linear(poly: &[Complex64], c: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (i, &a) in poly.iter().enumerate() {
        out[i] += a * c;
        out[i + 1] += a;
    }
    out
}

fn eval(poly: &[Complex64], z: Complex64) -> Complex64 {
    poly.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Roots of a real polynomial given in ascending powers (Durand-Kerner
/// followed by Newton polishing).
fn polynomial_roots(ascending: &[f64]) -> Vec<Complex64> {
    let degree = ascending.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = ascending[degree];
    let monic: Vec<Complex64> = ascending
        .iter()
        .map(|&c| Complex64::new(c / lead, 0.0))
        .collect();

    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..degree).map(|k| seed.powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let num = eval(&monic, roots[i]);
            let den = (0..degree)
                .filter(|&j| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, j| {
                    acc * (roots[i] - roots[j])
                });
            let step = num / den;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-15 {
            break;
        }
    }

    let deriv: Vec<Complex64> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = eval(&deriv, *r);
            if d.norm() == 0.0 {
                break;
            }
            *r -= eval(&monic, *r) / d;
        }
    }
    roots
}
