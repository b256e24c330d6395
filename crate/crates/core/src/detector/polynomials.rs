//! Laguerre, Hermite-function and `D^m_n` polynomial families.

use crate::C64;

/// Largest mode index accepted where factorials appear.
pub const MAX_MODE: usize = 20;

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)` by the three-term recurrence.
pub fn gen_laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

pub fn laguerre(m: usize, x: f64) -> f64 {
    gen_laguerre(m, 0.0, x)
}

/// `L'_m(x) = −L_{m−1}^{(1)}(x)`.
pub fn laguerre_prime(m: usize, x: f64) -> f64 {
    if m == 0 {
        0.0
    } else {
        -gen_laguerre(m - 1, 1.0, x)
    }
}

/// Power-series coefficients of `L_m`, lowest order first, built with the
/// same recurrence as [`laguerre`].
pub fn laguerre_coefficients(m: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if m == 0 {
        return prev;
    }
    let mut cur = vec![1.0, -1.0];
    for k in 1..m {
        let kf = k as f64;
        let mut next = vec![0.0; k + 2];
        for (i, &c) in cur.iter().enumerate() {
            next[i] += (2.0 * kf + 1.0) * c;
            next[i + 1] -= c;
        }
        for (i, &c) in prev.iter().enumerate() {
            next[i] -= kf * c;
        }
        for c in &mut next {
            *c /= kf + 1.0;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of the derivative of a power series.
pub fn derivative_coefficients(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `m! n! / ((m−k)! (n−k)! k!) = C(m,k) C(n,k) k!`.
fn dmn_weight(m: usize, n: usize, k: usize) -> f64 {
    binomial(m, k) * binomial(n, k) * (1..=k).map(|v| v as f64).product::<f64>()
}

/// `D^m_n(x) = Σ_k m! n! (−1)^{m−k} x^{m+n−2k} / ((m−k)! (n−k)! k!)`.
pub fn dmn_polynomial(m: usize, n: usize, x: C64) -> C64 {
    (0..=m.min(n))
        .map(|k| {
            let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            x.powu((m + n - 2 * k) as u32) * (sign * dmn_weight(m, n, k))
        })
        .sum()
}

/// The same sum with `x^{m+n−2k}` split as `w^{m−k} w̄^{n−k}`.
///
/// With `w = r e^{iφ}` this equals `e^{i(m−n)φ} D^m_n(r)` without ever
/// forming the angle.
pub fn dmn_split(m: usize, n: usize, w: C64) -> C64 {
    let wb = w.conj();
    (0..=m.min(n))
        .map(|k| {
            let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            w.powu((m - k) as u32) * wb.powu((n - k) as u32) * (sign * dmn_weight(m, n, k))
        })
        .sum()
}

/// Displacement matrix element `⟨n|D(α)|m⟩` for real `α`:
/// `e^{−α²/2} D^m_n(α) / √(m! n!)`.
pub fn displacement_element(n: usize, m: usize, alpha: f64) -> f64 {
    let norm = (-0.5 * (ln_factorial(m) + ln_factorial(n))).exp();
    (-0.5 * alpha * alpha).exp() * dmn_polynomial(m, n, C64::new(alpha, 0.0)).re * norm
}

/// Normalized Hermite functions `φ_0..=φ_{max}` at `xi`, where
/// `φ_n(ξ) = H_n(ξ) e^{−ξ²/2} / √(2^n n! √π)`.
pub fn hermite_functions(max: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max + 1);
    let phi0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    out.push(phi0);
    if max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * xi * phi0);
    for n in 1..max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}
