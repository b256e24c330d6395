//! Wigner distributions on the grid and in closed form.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use super::polynomials::{dmn_split, laguerre, ln_factorial};
use super::{DetectorKind, DetectorState};
use crate::{Error, Result, C64};

/// `W(x_i, p_j)` sampled on grid positions and the Wigner momentum lattice
/// `p_j = j·πħ/(N·dx)`, `j = −N/2..N/2` (ascending).
#[derive(Clone, Debug)]
pub struct WignerTable {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row-major: `values[r * ps.len() + j]` is `W(xs[r], ps[j])`.
    pub values: Vec<f64>,
}

impl WignerTable {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ps.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.ps.len();
        &self.values[row * n..(row + 1) * n]
    }
}

/// Full grid Wigner transform, `N×N` values.
pub fn wigner(state: &DetectorState) -> Result<WignerTable> {
    let rows: Vec<usize> = (0..state.grid().n_points()).collect();
    wigner_rows(state, &rows)
}

/// Grid Wigner transform at selected position indices.
///
/// `W(x, p) = (1/2πħ) ∫ dy ⟨x − y/2|ρ|x + y/2⟩ e^{ipy/ħ}` with `y = 2k·dx`.
pub fn wigner_rows(state: &DetectorState, rows: &[usize]) -> Result<WignerTable> {
    let grid = state.grid();
    let n = grid.n_points();
    if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad,
        });
    }
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let half = n as isize / 2;
    let members = match state.kind() {
        DetectorKind::DensityMatrix(_) => Vec::new(),
        _ => state.ensemble(),
    };
    let prefactor = 2.0 * grid.dx() / (2.0 * PI * grid.hbar());
    let mut values = Vec::with_capacity(rows.len() * n);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for &i in rows {
        for k in -half..half {
            let (a, b) = (i as isize - k, i as isize + k);
            let slot = k.rem_euclid(n as isize) as usize;
            buf[slot] = if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                C64::new(0.0, 0.0)
            } else {
                let (a, b) = (a as usize, b as usize);
                match state.kind() {
                    DetectorKind::DensityMatrix(rho) => rho[(a, b)],
                    _ => members.iter().map(|(w, psi)| psi[a] * psi[b].conj() * *w).sum(),
                }
            };
        }
        ifft.process(&mut buf);
        // reorder j = −N/2..N/2 ascending
        for j in -half..half {
            values.push(buf[j.rem_euclid(n as isize) as usize].re * prefactor);
        }
    }
    let dp = PI * grid.hbar() / (n as f64 * grid.dx());
    Ok(WignerTable {
        xs: rows.iter().map(|&i| grid.position(i)).collect(),
        ps: (-half..half).map(|j| j as f64 * dp).collect(),
        values,
    })
}

/// Momentum probability density `|ψ̃(p)|²` of a state at arbitrary `p`, by direct summation.
pub fn momentum_density(state: &DetectorState, p: f64) -> f64 {
    let grid = state.grid();
    let hbar = grid.hbar();
    let norm = grid.dx() / (2.0 * PI * hbar).sqrt();
    match state.kind() {
        DetectorKind::DensityMatrix(rho) => {
            let n = grid.n_points();
            let phases: Vec<C64> = (0..n)
                .map(|i| C64::from_polar(1.0, -p * grid.position(i) / hbar))
                .collect();
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    acc += phases[a] * rho[(a, b)] * phases[b].conj();
                }
            }
            acc.re * norm * norm
        }
        _ => state
            .ensemble()
            .iter()
            .map(|(w, psi)| {
                let amp: C64 = psi
                    .iter()
                    .enumerate()
                    .map(|(i, z)| z * C64::from_polar(1.0, -p * grid.position(i) / hbar))
                    .sum();
                w * (amp * norm).norm_sqr()
            })
            .sum(),
    }
}

fn g_function(sigma: f64, hbar: f64, x: f64, p: f64) -> f64 {
    x * x / (2.0 * sigma * sigma) + 2.0 * sigma * sigma * p * p / (hbar * hbar)
}

/// `W_m(x, p) = ((−1)^m/πħ) L_m[2G] e^{−G}`, `G = x²/2σ² + 2σ²p²/ħ²`.
pub fn hg_wigner_closed(mode: usize, sigma: f64, hbar: f64, x: f64, p: f64) -> f64 {
    let g = g_function(sigma, hbar, x, p);
    let sign = if mode.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / (PI * hbar) * laguerre(mode, 2.0 * g) * (-g).exp()
}

/// Wigner function of `Σ_m c_m |h_m⟩`.
///
/// Each term `e^{i(m−n)φ} D^m_n[√(2G)]` is evaluated as a polynomial in
/// `w = √(2G) e^{iφ} = x/σ − 2iσp/ħ`, which is regular at the origin.
pub fn superposition_wigner_closed(coeffs: &[C64], sigma: f64, hbar: f64, x: f64, p: f64) -> f64 {
    let g = g_function(sigma, hbar, x, p);
    let w = C64::new(x / sigma, -2.0 * sigma * p / hbar);
    let mut acc = C64::new(0.0, 0.0);
    for (m, cm) in coeffs.iter().enumerate() {
        if cm.norm_sqr() == 0.0 {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for (n, cn) in coeffs.iter().enumerate() {
            if cn.norm_sqr() == 0.0 {
                continue;
            }
            let norm = (-0.5 * (ln_factorial(m) + ln_factorial(n))).exp();
            acc += cm * cn.conj() * dmn_split(m, n, w) * (sign * norm);
        }
    }
    acc.re * (-g).exp() / (PI * hbar)
}
