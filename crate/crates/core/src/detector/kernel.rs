//! Decoherence kernels of a detector state.
//!
//! For `W̃_D(x, y) = ⟨x − y/2|ρ_D|x + y/2⟩` the kernel functions are
//!
//! * `γ(y)  = ∫ dx W̃_D(x, y) = Tr[ρ_D e^{−iyp/ħ}]`,
//! * `ξ(y)  = ∫ dx x W̃_D(x, y)`,
//! * `γ′(y) = dγ/dy`.
//!
//! A coherence `|j⟩⟨k|` of the system picks up `γ(g(a_j − a_k))` in the
//! interaction; `ξ` and `γ′` give the position and momentum operations.

use super::polynomials::{displacement_element, laguerre, laguerre_prime};
use super::{DetectorGrid, DetectorKind, DetectorState};
use crate::{Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelProvenance {
    ClosedFormHg,
    ClosedFormSuperposition,
    GridNumeric,
}

#[derive(Clone, Debug)]
enum Source {
    HermiteGauss { sigma: f64, mode: usize },
    Superposition { sigma: f64, coeffs: Vec<C64> },
    Grid(GridKernel),
}

#[derive(Clone, Debug)]
struct GridKernel {
    grid: DetectorGrid,
    members: Vec<(f64, Vec<C64>)>,
    /// Ensemble momentum distribution in FFT order.
    power: Vec<f64>,
    momenta: Vec<f64>,
    step: f64,
}

#[derive(Clone, Debug)]
pub struct DecoherenceKernel {
    source: Source,
    hbar: f64,
}

/// Builds the kernel of a detector state; mode-based states get closed forms.
pub fn decoherence_kernel(state: &DetectorState) -> Result<DecoherenceKernel> {
    let source = match state.kind() {
        DetectorKind::HermiteGauss { sigma, mode } => Source::HermiteGauss {
            sigma: *sigma,
            mode: *mode,
        },
        DetectorKind::Superposition { sigma, coeffs } => Source::Superposition {
            sigma: *sigma,
            coeffs: coeffs.clone(),
        },
        _ => Source::Grid(GridKernel::new(state)),
    };
    Ok(DecoherenceKernel {
        source,
        hbar: state.grid().hbar(),
    })
}

/// Compares the grid kernel of a mode-based state with its closed form and
/// reports the largest discrepancy if it exceeds `1e-6`.
pub fn kernel_accuracy_warning(state: &DetectorState, gaps: &[f64]) -> Option<String> {
    let sigma = state.sigma()?;
    let closed = decoherence_kernel(state).ok()?;
    let numeric = DecoherenceKernel {
        source: Source::Grid(GridKernel::new(state)),
        hbar: state.grid().hbar(),
    };
    let mut worst = 0.0f64;
    for &y in gaps.iter().chain(&[0.5 * sigma, sigma, 2.0 * sigma]) {
        worst = worst
            .max((closed.gamma(y) - numeric.gamma(y)).norm())
            .max((closed.xi(y) - numeric.xi(y)).norm())
            .max(sigma * (closed.gamma_prime(y) - numeric.gamma_prime(y)).norm());
    }
    (worst > 1e-6).then(|| {
        format!("grid kernel deviates from closed form by {worst:.3e}; refine the detector grid")
    })
}

impl GridKernel {
    fn new(state: &DetectorState) -> Self {
        let grid = state.grid().clone();
        let spectral = grid.spectral();
        let members = state.ensemble();
        let mut power = vec![0.0; grid.n_points()];
        let xs = grid.positions();
        let mut mean = 0.0;
        let mut second = 0.0;
        for (w, psi) in &members {
            for (acc, z) in power.iter_mut().zip(spectral.to_momentum(psi)) {
                *acc += w * z.norm_sqr();
            }
            for (z, &x) in psi.iter().zip(&xs) {
                let d = w * z.norm_sqr() * grid.dx();
                mean += d * x;
                second += d * x * x;
            }
        }
        let width = (second - mean * mean).max(grid.dx() * grid.dx()).sqrt();
        Self {
            momenta: spectral.momenta().to_vec(),
            grid,
            members,
            power,
            step: 1e-4 * width,
        }
    }

    fn gamma(&self, y: f64) -> C64 {
        let hbar = self.grid.hbar();
        self.power
            .iter()
            .zip(&self.momenta)
            .map(|(&w, &p)| C64::from_polar(w, -p * y / hbar))
            .sum()
    }

    fn xi(&self, y: f64) -> C64 {
        let spectral = self.grid.spectral();
        let xs = self.grid.positions();
        let mut acc = C64::new(0.0, 0.0);
        for (w, psi) in &self.members {
            let left = spectral.translate(psi, 0.5 * y);
            let right = spectral.translate(psi, -0.5 * y);
            let s: C64 = left
                .iter()
                .zip(&right)
                .zip(&xs)
                .map(|((a, b), &x)| a * b.conj() * x)
                .sum();
            acc += s * (w * self.grid.dx());
        }
        acc
    }

    fn gamma_prime(&self, y: f64) -> C64 {
        let h = self.step;
        (self.gamma(y - 2.0 * h) - self.gamma(y - h) * 8.0 + self.gamma(y + h) * 8.0
            - self.gamma(y + 2.0 * h))
            / (12.0 * h)
    }
}

/// `Σ_{n,m} c̄_n c_m ⟨n + shift|D(α)|m⟩ · factor(n)`, skipping negative rows.
fn displaced_sum(coeffs: &[C64], alpha: f64, shift: isize, factor: impl Fn(usize) -> f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (n, cn) in coeffs.iter().enumerate() {
        let row = n as isize + shift;
        if row < 0 {
            continue;
        }
        let f = factor(n);
        if f == 0.0 {
            continue;
        }
        for (m, cm) in coeffs.iter().enumerate() {
            acc += cn.conj() * cm * (f * displacement_element(row as usize, m, alpha));
        }
    }
    acc
}

impl DecoherenceKernel {
    pub fn provenance(&self) -> KernelProvenance {
        match self.source {
            Source::HermiteGauss { .. } => KernelProvenance::ClosedFormHg,
            Source::Superposition { .. } => KernelProvenance::ClosedFormSuperposition,
            Source::Grid(_) => KernelProvenance::GridNumeric,
        }
    }

    /// Reduced Planck constant of the detector the kernel was built from.
    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn gamma(&self, y: f64) -> C64 {
        match &self.source {
            Source::HermiteGauss { sigma, mode } => {
                let u = y * y / (4.0 * sigma * sigma);
                C64::new(laguerre(*mode, u) * (-0.5 * u).exp(), 0.0)
            }
            Source::Superposition { sigma, coeffs } => {
                displaced_sum(coeffs, y / (2.0 * sigma), 0, |_| 1.0)
            }
            Source::Grid(k) => k.gamma(y),
        }
    }

    pub fn xi(&self, y: f64) -> C64 {
        match &self.source {
            Source::HermiteGauss { .. } => C64::new(0.0, 0.0),
            Source::Superposition { sigma, coeffs } => {
                // ⟨ψ|x D(α)|ψ⟩ − (y/2)γ(y), with x = σ(a + a†)
                let alpha = y / (2.0 * sigma);
                let up = displaced_sum(coeffs, alpha, 1, |n| ((n + 1) as f64).sqrt());
                let down = displaced_sum(coeffs, alpha, -1, |n| (n as f64).sqrt());
                (up + down) * *sigma - self.gamma(y) * (0.5 * y)
            }
            Source::Grid(k) => k.xi(y),
        }
    }

    pub fn gamma_prime(&self, y: f64) -> C64 {
        match &self.source {
            Source::HermiteGauss { sigma, mode } => {
                let s2 = sigma * sigma;
                let u = y * y / (4.0 * s2);
                let val = y / (4.0 * s2)
                    * (2.0 * laguerre_prime(*mode, u) - laguerre(*mode, u))
                    * (-0.5 * u).exp();
                C64::new(val, 0.0)
            }
            Source::Superposition { sigma, coeffs } => {
                // ⟨ψ|(a† − a) D(α)|ψ⟩ / 2σ
                let alpha = y / (2.0 * sigma);
                let down = displaced_sum(coeffs, alpha, -1, |n| (n as f64).sqrt());
                let up = displaced_sum(coeffs, alpha, 1, |n| ((n + 1) as f64).sqrt());
                (down - up) / (2.0 * sigma)
            }
            Source::Grid(k) => k.gamma_prime(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{hg_wavefunction, DetectorGrid};
    use approx::assert_abs_diff_eq;

    fn grid() -> DetectorGrid {
        DetectorGrid::symmetric(2048, 30.0, 1.0).unwrap()
    }

    fn integrated_fourier_wigner(state: &DetectorState, y: f64) -> C64 {
        // quadrature oracle over ∫dx ψ(x − y/2) ψ*(x + y/2), y chosen on the sample lattice
        let g = state.grid();
        let psi = state.samples().unwrap();
        let k = (y / g.dx()).round() as isize;
        assert!(((k as f64) * g.dx() - y).abs() < 1e-12);
        let n = psi.len() as isize;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let j = i + k;
            if (0..n).contains(&j) {
                acc += psi[i as usize] * psi[j as usize].conj();
            }
        }
        acc * g.dx()
    }

    #[test]
    fn gaussian_kernel_matches_overlap_integral() {
        let g = grid();
        let state = hg_wavefunction(0, 2.0, &g).unwrap();
        let k = decoherence_kernel(&state).unwrap();
        assert_eq!(k.provenance(), KernelProvenance::GridNumeric);
        for steps in [0, 40, 111, 260] {
            let y = steps as f64 * g.dx();
            let expected = (-y * y / 32.0).exp();
            assert_abs_diff_eq!(integrated_fourier_wigner(&state, y).re, expected, epsilon = 1e-12);
            assert!((k.gamma(y) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn hg_closed_forms_match_grid() {
        let g = grid();
        for m in 0..=3 {
            let closed = decoherence_kernel(&DetectorState::hermite_gauss(&g, 2.0, m).unwrap()).unwrap();
            let numeric = decoherence_kernel(&hg_wavefunction(m, 2.0, &g).unwrap()).unwrap();
            for &y in &[0.0, 0.37, 1.9, 4.0, 7.3] {
                assert!((closed.gamma(y) - numeric.gamma(y)).norm() < 1e-12);
                assert!((closed.xi(y) - numeric.xi(y)).norm() < 1e-12);
                assert!((closed.gamma_prime(y) - numeric.gamma_prime(y)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn coherence_factor_at_qubit_gap() {
        let g = grid();
        let sigma = 2.0;
        for m in 0..=3 {
            let k = decoherence_kernel(&DetectorState::hermite_gauss(&g, sigma, m).unwrap()).unwrap();
            for &coupling in &[0.1, 1.0, 2.0, 5.0] {
                let r = coupling / sigma;
                let expected = laguerre(m, r * r) * (-r * r / 2.0).exp();
                assert_abs_diff_eq!(k.gamma(2.0 * coupling).re, expected, epsilon = 1e-15);
            }
        }
        // m = 1 decoheres completely at y² = 4σ²
        let k1 = decoherence_kernel(&DetectorState::hermite_gauss(&g, sigma, 1).unwrap()).unwrap();
        assert!(k1.gamma(2.0 * sigma).norm() < 1e-15);
    }

    #[test]
    fn kernel_symmetries() {
        let g = grid();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let sup = DetectorState::superposition(
            &g,
            2.0,
            vec![C64::new(s, 0.0), C64::new(0.0, s)],
        )
        .unwrap();
        for state in [
            DetectorState::hermite_gauss(&g, 2.0, 2).unwrap(),
            sup.clone(),
            hg_wavefunction(1, 2.0, &g).unwrap(),
        ] {
            let k = decoherence_kernel(&state).unwrap();
            assert!((k.gamma(0.0) - 1.0).norm() < 1e-12);
            for &y in &[0.3, 1.7, 5.0] {
                assert!((k.gamma(-y) - k.gamma(y).conj()).norm() < 1e-12);
                assert!(k.gamma(y).norm() <= 1.0 + 1e-12);
            }
        }
        let k = decoherence_kernel(&DetectorState::hermite_gauss(&g, 2.0, 2).unwrap()).unwrap();
        assert_eq!(k.gamma_prime(0.0), C64::new(0.0, 0.0));
        assert_abs_diff_eq!(k.gamma_prime(-1.3).re, -k.gamma_prime(1.3).re, epsilon = 1e-15);
    }

    #[test]
    fn superposition_closed_forms_match_grid() {
        let g = grid();
        let coeffs = [
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.48),
            C64::new(-0.64, 0.0),
        ];
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let coeffs: Vec<C64> = coeffs.iter().map(|c| c / norm).collect();
        let state = DetectorState::superposition(&g, 1.5, coeffs).unwrap();
        let closed = decoherence_kernel(&state).unwrap();
        let numeric = decoherence_kernel(&DetectorState::wavefunction(&g, state.samples().unwrap()).unwrap()).unwrap();
        for &y in &[0.0, 0.4, 1.3, 3.1, -2.2] {
            assert!((closed.gamma(y) - numeric.gamma(y)).norm() < 1e-12, "γ at {y}");
            assert!((closed.xi(y) - numeric.xi(y)).norm() < 1e-11, "ξ at {y}");
            assert!((closed.gamma_prime(y) - numeric.gamma_prime(y)).norm() < 1e-8, "γ′ at {y}");
        }
        assert!(kernel_accuracy_warning(&state, &[1.0]).is_none());
    }

    #[test]
    fn hg_xi_vanishes() {
        let g = grid();
        for m in 0..=4 {
            let numeric = decoherence_kernel(&hg_wavefunction(m, 2.0, &g).unwrap()).unwrap();
            for &y in &[0.5, 2.0, 6.0] {
                assert!(numeric.xi(y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn coarse_grid_triggers_warning() {
        let coarse = DetectorGrid::symmetric(256, 200.0, 1.0).unwrap();
        let state = DetectorState::hermite_gauss(&coarse, 0.5, 3).unwrap();
        assert!(kernel_accuracy_warning(&state, &[1.0]).is_some());
    }
}
