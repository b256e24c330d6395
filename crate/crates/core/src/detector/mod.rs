//! One-dimensional detector (pointer) phase space.
//!
//! Positions live on a periodic grid `x_i = x_min + i·dx`, `i = 0..N`, with
//! `dx = (x_max − x_min)/N`. The conjugate momenta are `p_k = 2πħ k/(N·dx)`
//! in FFT order. Wavefunctions are normalized so that `Σ|ψ(x_i)|² dx = 1`.

mod kernel;
pub mod polynomials;
mod wigner;

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::hilbert::eigh;
use crate::{CMatrix, Error, Result, C64};

pub use kernel::{decoherence_kernel, kernel_accuracy_warning, DecoherenceKernel, KernelProvenance};
pub use polynomials::{
    dmn_polynomial, gen_laguerre, laguerre, laguerre_coefficients, laguerre_prime, MAX_MODE,
};
pub use wigner::{
    hg_wigner_closed, momentum_density, superposition_wigner_closed, wigner, wigner_rows,
    WignerTable,
};

/// Smallest grid accepted for quantitative work.
pub const MIN_GRID_POINTS: usize = 256;

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Boundary probability density above which a prepared state counts as truncated.
pub const TRUNCATION_DENSITY: f64 = 1e-16;

const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorGrid {
    n_points: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    hbar: f64,
}

impl DetectorGrid {
    pub fn new(n_points: usize, x_min: f64, x_max: f64, hbar: f64) -> Result<Self> {
        if !n_points.is_power_of_two() || n_points < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!(
                "point count {n_points} must be a power of two ≥ {MIN_GRID_POINTS}"
            )));
        }
        if x_max <= x_min || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "empty or non-finite range [{x_min}, {x_max}]"
            )));
        }
        if hbar <= 0.0 || !hbar.is_finite() {
            return Err(Error::InvalidGrid(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self {
            n_points,
            x_min,
            x_max,
            dx: (x_max - x_min) / n_points as f64,
            hbar,
        })
    }

    /// Grid on `[−half_width, half_width)`.
    pub fn symmetric(n_points: usize, half_width: f64, hbar: f64) -> Result<Self> {
        Self::new(n_points, -half_width, half_width, hbar)
    }

    /// Grid wide enough that a width-`sigma` pointer translated by up to
    /// `|g|·max_shift` stays at least `12σ` from the boundary.
    pub fn for_coupling(n_points: usize, sigma: f64, g: f64, max_shift: f64, hbar: f64) -> Result<Self> {
        Self::symmetric(n_points, 12.0 * sigma + g.abs() * max_shift, hbar)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn position(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.position(i)).collect()
    }

    /// Momentum of FFT bin `k`; bins from `N/2` upwards are negative.
    pub fn momentum(&self, k: usize) -> f64 {
        let n = self.n_points as i64;
        let signed = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        2.0 * PI * self.hbar * signed as f64 / (n as f64 * self.dx)
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.momentum(k)).collect()
    }

    pub(crate) fn spectral(&self) -> Spectral {
        Spectral::new(self)
    }
}

/// Forward/inverse FFT pair bound to one grid.
pub(crate) struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    momenta: Vec<f64>,
    hbar: f64,
    scale: f64,
}

impl Spectral {
    fn new(grid: &DetectorGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(grid.n_points),
            inv: planner.plan_fft_inverse(grid.n_points),
            momenta: grid.momenta(),
            hbar: grid.hbar,
            scale: (grid.dx / grid.n_points as f64).sqrt(),
        }
    }

    /// Momentum amplitudes with `Σ|φ_k|² = Σ|ψ_i|² dx`.
    pub(crate) fn to_momentum(&self, psi: &[C64]) -> Vec<C64> {
        let mut buf = psi.to_vec();
        self.fwd.process(&mut buf);
        for z in &mut buf {
            *z *= self.scale;
        }
        buf
    }

    /// Inverse of [`Spectral::to_momentum`].
    pub(crate) fn to_position(&self, phi: &[C64]) -> Vec<C64> {
        let mut buf = phi.to_vec();
        self.inv.process(&mut buf);
        let n = buf.len() as f64;
        let s = 1.0 / (self.scale * n);
        for z in &mut buf {
            *z *= s;
        }
        buf
    }

    /// Multiplies `psi` by `f(p)` in the momentum basis.
    pub(crate) fn momentum_multiply(&self, psi: &[C64], f: impl Fn(f64) -> C64) -> Vec<C64> {
        let mut phi = self.to_momentum(psi);
        for (z, &p) in phi.iter_mut().zip(&self.momenta) {
            *z *= f(p);
        }
        self.to_position(&phi)
    }

    /// `ψ(x) → ψ(x − shift)`, exact for band-limited periodic data.
    pub(crate) fn translate(&self, psi: &[C64], shift: f64) -> Vec<C64> {
        if shift == 0.0 {
            return psi.to_vec();
        }
        let hbar = self.hbar;
        self.momentum_multiply(psi, |p| C64::from_polar(1.0, -p * shift / hbar))
    }

    pub(crate) fn momenta(&self) -> &[f64] {
        &self.momenta
    }
}

/// Largest probability density among the outermost four samples at each edge.
pub(crate) fn boundary_density(psi: &[C64]) -> f64 {
    let n = psi.len();
    let edge = 4.min(n / 2);
    psi[..edge]
        .iter()
        .chain(&psi[n - edge..])
        .map(|z| z.norm_sqr())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DetectorKind {
    /// Samples `ψ(x_i)` on the grid.
    Wavefunction(Vec<C64>),
    /// Kernel `ρ(x_i, x_j)` on the grid, with `Σ ρ(x_i, x_i) dx = 1`.
    DensityMatrix(CMatrix),
    /// Hermite-Gauss mode `|h_m⟩` of width `σ`.
    HermiteGauss { sigma: f64, mode: usize },
    /// `Σ_m c_m |h_m⟩`.
    Superposition { sigma: f64, coeffs: Vec<C64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorState {
    kind: DetectorKind,
    grid: DetectorGrid,
}

impl DetectorState {
    /// Pure state from grid samples; renormalized after validation.
    pub fn wavefunction(grid: &DetectorGrid, mut samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.n_points {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points,
                found: samples.len(),
            });
        }
        let norm: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx;
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(
                "detector.wavefunction",
                format!("Σ|ψ|²dx = {norm}, expected 1"),
            ));
        }
        let s = norm.sqrt().recip();
        for z in &mut samples {
            *z *= s;
        }
        Ok(Self {
            kind: DetectorKind::Wavefunction(samples),
            grid: grid.clone(),
        })
    }

    /// Mixed state from its position-basis kernel.
    pub fn density_matrix(grid: &DetectorGrid, rho: CMatrix) -> Result<Self> {
        let n = grid.n_points;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rho.nrows(),
            });
        }
        let weighted = &rho * C64::new(grid.dx, 0.0);
        let tr = weighted.diagonal().iter().sum::<C64>();
        let herm = crate::hilbert::hermitian_deviation(&weighted);
        if (tr - 1.0).norm() > NORM_TOL || herm > NORM_TOL {
            return Err(Error::validation(
                "detector.density_matrix",
                format!("weighted trace {tr}, Hermitian deviation {herm:.3e}"),
            ));
        }
        let (vals, _) = eigh(&weighted);
        if vals[0] < -NORM_TOL {
            return Err(Error::validation(
                "detector.density_matrix",
                format!("negative eigenvalue {:.3e}", vals[0]),
            ));
        }
        Ok(Self {
            kind: DetectorKind::DensityMatrix(rho / tr),
            grid: grid.clone(),
        })
    }

    pub fn hermite_gauss(grid: &DetectorGrid, sigma: f64, mode: usize) -> Result<Self> {
        check_sigma(sigma)?;
        if mode > MAX_MODE {
            return Err(Error::validation(
                "detector.mode",
                format!("mode {mode} exceeds the supported maximum {MAX_MODE}"),
            ));
        }
        let state = Self {
            kind: DetectorKind::HermiteGauss { sigma, mode },
            grid: grid.clone(),
        };
        state.check_truncation()?;
        Ok(state)
    }

    pub fn superposition(grid: &DetectorGrid, sigma: f64, coeffs: Vec<C64>) -> Result<Self> {
        check_sigma(sigma)?;
        if coeffs.is_empty() || coeffs.len() > MAX_MODE + 1 {
            return Err(Error::validation(
                "detector.coefficients",
                format!("between 1 and {} coefficients required", MAX_MODE + 1),
            ));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::validation(
                "detector.coefficients",
                format!("Σ|c_m|² = {norm}, expected 1"),
            ));
        }
        let state = Self {
            kind: DetectorKind::Superposition { sigma, coeffs },
            grid: grid.clone(),
        };
        state.check_truncation()?;
        Ok(state)
    }

    fn check_truncation(&self) -> Result<()> {
        let n = self.grid.n_points;
        let ends = [self.grid.x_min, self.grid.position(n - 1)];
        for x in ends {
            let density = self.amplitude_at(x).map(|z| z.norm_sqr()).unwrap_or(0.0);
            if density >= TRUNCATION_DENSITY {
                return Err(Error::GridTruncation { density });
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &DetectorKind {
        &self.kind
    }

    pub fn grid(&self) -> &DetectorGrid {
        &self.grid
    }

    /// Width parameter for Hermite-Gauss kinds.
    pub fn sigma(&self) -> Option<f64> {
        match &self.kind {
            DetectorKind::HermiteGauss { sigma, .. } | DetectorKind::Superposition { sigma, .. } => {
                Some(*sigma)
            }
            _ => None,
        }
    }

    /// Closed-form amplitude at an arbitrary position, for mode-based kinds.
    fn amplitude_at(&self, x: f64) -> Option<C64> {
        match &self.kind {
            DetectorKind::HermiteGauss { sigma, mode } => {
                Some(C64::new(hg_amplitudes(*mode, *sigma, x)[*mode], 0.0))
            }
            DetectorKind::Superposition { sigma, coeffs } => {
                let phis = hg_amplitudes(coeffs.len() - 1, *sigma, x);
                Some(coeffs.iter().zip(&phis).map(|(c, &h)| c * h).sum())
            }
            _ => None,
        }
    }

    /// Grid samples of a pure state; `None` for density matrices.
    pub fn samples(&self) -> Option<Vec<C64>> {
        match &self.kind {
            DetectorKind::Wavefunction(psi) => Some(psi.clone()),
            DetectorKind::DensityMatrix(_) => None,
            _ => Some(
                (0..self.grid.n_points)
                    .map(|i| self.amplitude_at(self.grid.position(i)).unwrap())
                    .collect(),
            ),
        }
    }

    /// Ensemble `ρ_D = Σ w |ψ⟩⟨ψ|` of normalized grid wavefunctions.
    pub fn ensemble(&self) -> Vec<(f64, Vec<C64>)> {
        match &self.kind {
            DetectorKind::DensityMatrix(rho) => {
                let dx = self.grid.dx;
                let (vals, vecs) = eigh(&(rho * C64::new(dx, 0.0)));
                let s = dx.sqrt().recip();
                vals.iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 1e-15)
                    .map(|(k, &w)| (w, vecs.column(k).iter().map(|z| z * s).collect()))
                    .collect()
            }
            _ => vec![(1.0, self.samples().unwrap())],
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::validation("detector.sigma", format!("must be positive, got {sigma}")));
    }
    Ok(())
}

/// Hermite-Gauss amplitudes `h_0(x)..=h_max(x)` for width `σ`:
/// `h_m(x) ∝ H_m(x/(σ√2)) exp(−x²/4σ²)`, unit-normalized, with `⟨x²⟩ = σ²` for `m = 0`.
pub fn hg_amplitudes(max: usize, sigma: f64, x: f64) -> Vec<f64> {
    let s = sigma * std::f64::consts::SQRT_2;
    let norm = s.sqrt().recip();
    polynomials::hermite_functions(max, x / s)
        .into_iter()
        .map(|v| v * norm)
        .collect()
}

/// Sampled Hermite-Gauss mode `m` as a pure grid state.
pub fn hg_wavefunction(mode: usize, sigma: f64, grid: &DetectorGrid) -> Result<DetectorState> {
    let hg = DetectorState::hermite_gauss(grid, sigma, mode)?;
    Ok(DetectorState {
        kind: DetectorKind::Wavefunction(hg.samples().unwrap()),
        grid: grid.clone(),
    })
}

/// Four-point Lagrange weights and base index for interpolating at `x`.
fn cubic_stencil(grid: &DetectorGrid, x: f64) -> Result<(usize, [f64; 4])> {
    let n = grid.n_points;
    let last = grid.position(n - 1);
    if x < grid.x_min - 1e-12 * grid.dx || x > last + 1e-12 * grid.dx {
        return Err(Error::OutOfGrid { position: x });
    }
    let t = (x - grid.x_min) / grid.dx;
    let base = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = t - base as f64;
    let mut w = [0.0; 4];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut prod = 1.0;
        for k in 0..4 {
            if k != j {
                prod *= (u - k as f64) / (j as f64 - k as f64);
            }
        }
        *wj = prod;
    }
    Ok((base, w))
}

/// `W̃_D(x, y) = ⟨x − y/2|ρ_D|x + y/2⟩`.
///
/// Mode-based states are evaluated in closed form; grid states use cubic
/// interpolation between samples.
pub fn fourier_wigner(state: &DetectorState, x: f64, y: f64) -> Result<C64> {
    let (u, v) = (x - 0.5 * y, x + 0.5 * y);
    let (bu, wu) = cubic_stencil(&state.grid, u)?;
    let (bv, wv) = cubic_stencil(&state.grid, v)?;
    match &state.kind {
        DetectorKind::Wavefunction(psi) => {
            let interp = |b: usize, w: &[f64; 4]| -> C64 {
                (0..4).map(|k| psi[b + k] * w[k]).sum()
            };
            Ok(interp(bu, &wu) * interp(bv, &wv).conj())
        }
        DetectorKind::DensityMatrix(rho) => {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    acc += rho[(bu + a, bv + b)] * (wu[a] * wv[b]);
                }
            }
            Ok(acc)
        }
        _ => {
            let left = state.amplitude_at(u).unwrap();
            let right = state.amplitude_at(v).unwrap();
            Ok(left * right.conj())
        }
    }
}
