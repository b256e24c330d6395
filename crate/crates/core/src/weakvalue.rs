//! Generalized weak values and the closed-form conditioned averages.
//!
//! Three routes lead to the same conditioned detector statistics:
//!
//! * joint weak values on system ⊗ detector with the Heisenberg-evolved
//!   post-selection `U_g† (P_f ⊗ 1) U_g`, assembled by
//!   [`conditioned_averages_from_weak_values`];
//! * reduced-system expressions driven by a [`DecoherenceKernel`]
//!   ([`reduced_state`], [`xp_operations`], [`kernel_averages`]);
//! * Hermite-Gauss closed forms in terms of the Lindblad operation
//!   `L[A] = −ad[A]²/2` and `ε = (g/2σ)²` ([`hg_closed_forms`]).

use nalgebra::DVector;

use crate::detector::polynomials::{dmn_polynomial, gen_laguerre, ln_factorial};
use crate::detector::{laguerre, laguerre_prime, DecoherenceKernel, DetectorState, MAX_MODE};
use crate::hilbert::{
    self, adjoint_action, apply_superop_function, apply_superop_function_dense, lindblad_action,
    Superoperator, SystemOperator, SystemState,
};
use crate::vonneumann::{
    check_postselection, couple_components, product_ensemble, sandwich, ConditionedResult,
    CouplingConfig, PROB_FLOOR,
};
use crate::{CMatrix, Error, Result, C64};

/// Weak-value denominators below this are rejected.
pub const DENOMINATOR_FLOOR: f64 = PROB_FLOOR;

/// A weak value together with the two traces it is the ratio of.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeakValueResult {
    pub value: C64,
    pub numerator: C64,
    pub denominator: f64,
}

impl WeakValueResult {
    fn from_parts(numerator: C64, denominator: f64) -> Result<Self> {
        if denominator.is_nan() || denominator < DENOMINATOR_FLOOR {
            return Err(Error::PostSelectionImpossible {
                probability: denominator,
            });
        }
        Ok(Self {
            value: numerator / denominator,
            numerator,
            denominator,
        })
    }
}

fn check_square(op: &CMatrix, dim: usize) -> Result<()> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: op.nrows(),
        });
    }
    Ok(())
}

fn weak_value_of(p_f: &CMatrix, a: &CMatrix, rho: &CMatrix) -> Result<WeakValueResult> {
    check_square(p_f, rho.nrows())?;
    check_square(a, rho.nrows())?;
    let numerator = hilbert::trace(&(p_f * a * rho));
    let denominator = hilbert::trace(&(p_f * rho)).re;
    WeakValueResult::from_parts(numerator, denominator)
}

/// `⟨A⟩^w = Tr[P_f A ρ] / Tr[P_f ρ]`.
pub fn generalized_weak_value(
    p_f: &SystemOperator,
    a: &SystemOperator,
    rho: &SystemState,
) -> Result<WeakValueResult> {
    weak_value_of(p_f.matrix(), a.matrix(), rho.matrix())
}

/// The same ratio with the post-interaction reduced state as pre-selection.
pub fn system_weak_value(
    p_f: &SystemOperator,
    a: &SystemOperator,
    reduced: &SystemState,
) -> Result<WeakValueResult> {
    generalized_weak_value(p_f, a, reduced)
}

/// The seven joint weak values that fix the first two conditioned moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointWeakValues {
    pub a_w: C64,
    pub x_w: C64,
    pub p_w: C64,
    pub x2_w: C64,
    pub ax_w: C64,
    pub a2_w: C64,
    pub p2_w: C64,
    /// Common denominator `Tr[P′_SD ρ_SD]`.
    pub prob_f: f64,
}

/// Joint weak values `Tr[P′_SD O ρ_SD] / Tr[P′_SD ρ_SD]` for a product input.
///
/// Each observable `O` is applied to the initial joint state, which is then
/// evolved forward; the numerator is `⟨U Ψ|(P_f ⊗ 1)|U O Ψ⟩` summed over
/// the pure-state ensemble.
pub fn joint_weak_values(
    rho_s: &SystemState,
    rho_d: &DetectorState,
    cfg: &CouplingConfig,
    p_f: &SystemOperator,
) -> Result<JointWeakValues> {
    check_postselection(p_f, rho_s.dim())?;
    let grid = rho_d.grid();
    let spectral = grid.spectral();
    let xs = grid.positions();
    let eig = cfg.eigenvalues();
    let post = hilbert::to_basis(p_f.matrix(), cfg.eigenbasis());
    let dx = grid.dx();

    let on_detector = |comps: &[Vec<C64>], f: &dyn Fn(usize, f64) -> f64| -> Vec<Vec<C64>> {
        comps
            .iter()
            .enumerate()
            .map(|(k, c)| c.iter().zip(&xs).map(|(z, &x)| z * f(k, x)).collect())
            .collect()
    };
    let on_momentum = |comps: &[Vec<C64>], power: i32| -> Vec<Vec<C64>> {
        comps
            .iter()
            .map(|c| spectral.momentum_multiply(c, |p| C64::new(p.powi(power), 0.0)))
            .collect()
    };

    let mut sums = [C64::new(0.0, 0.0); 8];
    for (weight, joint) in product_ensemble(rho_s, rho_d, cfg)? {
        let psi = joint.amplitudes();
        let evolved = couple_components(psi, cfg, &spectral)?;
        let inputs = [
            psi.to_vec(),
            on_detector(psi, &|k, _| eig[k]),
            on_detector(psi, &|_, x| x),
            on_momentum(psi, 1),
            on_detector(psi, &|_, x| x * x),
            on_detector(psi, &|k, x| eig[k] * x),
            on_detector(psi, &|k, _| eig[k] * eig[k]),
            on_momentum(psi, 2),
        ];
        for (slot, input) in inputs.iter().enumerate() {
            let ket = if slot == 0 {
                evolved.clone()
            } else {
                couple_components(input, cfg, &spectral)?
            };
            sums[slot] += sandwich(&post, &evolved, &ket, |_| 1.0) * (weight * dx);
        }
    }
    let prob_f = sums[0].re;
    if prob_f < DENOMINATOR_FLOOR {
        return Err(Error::PostSelectionImpossible { probability: prob_f });
    }
    let r = |i: usize| sums[i] / prob_f;
    Ok(JointWeakValues {
        a_w: r(1),
        x_w: r(2),
        p_w: r(3),
        x2_w: r(4),
        ax_w: r(5),
        a2_w: r(6),
        p2_w: r(7),
        prob_f,
    })
}

/// First and second conditioned moments from real parts of joint weak values:
/// `f⟨x⟩ = Re x_w + g Re A_w`, `f⟨p⟩ = Re p_w`,
/// `f⟨x²⟩ = Re x²_w + 2g Re (Ax)_w + g² Re A²_w`, `f⟨p²⟩ = Re p²_w`.
pub fn conditioned_averages_from_weak_values(jwv: &JointWeakValues, g: f64) -> ConditionedResult {
    let mean_x = jwv.x_w.re + g * jwv.a_w.re;
    let mean_p = jwv.p_w.re;
    let x2 = jwv.x2_w.re + 2.0 * g * jwv.ax_w.re + g * g * jwv.a2_w.re;
    ConditionedResult {
        prob_f: jwv.prob_f,
        mean_x,
        mean_p,
        moments_x: vec![mean_x, x2],
        moments_p: vec![mean_p, jwv.p2_w.re],
    }
}

/// Elementwise kernel map in the eigenbasis of `A`: `ρ_jk ↦ f(g(a_j − a_k)) ρ_jk`.
fn kernel_map(
    rho: &CMatrix,
    a: &SystemOperator,
    g: f64,
    f: impl Fn(f64) -> C64,
) -> Result<CMatrix> {
    check_square(rho, a.dim())?;
    let ad = adjoint_action(a)?;
    apply_superop_function(|z| f(g * z.re), &ad, rho)
}

/// Post-interaction system state `ρ′_jk = γ(g(a_j − a_k)) ρ_jk`.
pub fn reduced_state(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    kernel: &DecoherenceKernel,
) -> Result<SystemState> {
    SystemState::new(kernel_map(rho_s.matrix(), a, g, |y| kernel.gamma(y))?)
}

/// The position and momentum operations
/// `X(ρ)_jk = ξ(y_jk) ρ_jk` and `P(ρ)_jk = iħ γ′(y_jk) ρ_jk`, `y_jk = g(a_j − a_k)`.
pub fn xp_operations(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    kernel: &DecoherenceKernel,
) -> Result<(CMatrix, CMatrix)> {
    let ihbar = C64::new(0.0, kernel.hbar());
    let x = kernel_map(rho_s.matrix(), a, g, |y| kernel.xi(y))?;
    let p = kernel_map(rho_s.matrix(), a, g, |y| kernel.gamma_prime(y) * ihbar)?;
    Ok((x, p))
}

/// Conditioned first moments assembled on the system from a decoherence kernel.
#[derive(Clone, Debug)]
pub struct KernelAverages {
    pub reduced: SystemState,
    pub a_w: WeakValueResult,
    /// `Re⟨x⟩^w = Tr[P_f X(ρ)] / Tr[P_f ρ′]`.
    pub re_x_w: f64,
    /// `Re⟨p⟩^w = Tr[P_f P(ρ)] / Tr[P_f ρ′]`.
    pub re_p_w: f64,
    pub mean_x: f64,
    pub mean_p: f64,
}

pub fn kernel_averages(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    kernel: &DecoherenceKernel,
    p_f: &SystemOperator,
) -> Result<KernelAverages> {
    check_postselection(p_f, rho_s.dim())?;
    let reduced = reduced_state(rho_s, a, g, kernel)?;
    let a_w = system_weak_value(p_f, a, &reduced)?;
    let (x_op, p_op) = xp_operations(rho_s, a, g, kernel)?;
    let re_x_w = hilbert::trace(&(p_f.matrix() * x_op)).re / a_w.denominator;
    let re_p_w = hilbert::trace(&(p_f.matrix() * p_op)).re / a_w.denominator;
    Ok(KernelAverages {
        mean_x: re_x_w + g * a_w.value.re,
        mean_p: re_p_w,
        reduced,
        a_w,
        re_x_w,
        re_p_w,
    })
}

/// How functions of `L[A]` are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SuperopEvaluation {
    /// Elementwise over eigenvalue gaps of `A`.
    #[default]
    Eigenbasis,
    /// Full diagonalization of the `d²×d²` matrix.
    Dense,
}

fn superop_fn(
    eval: SuperopEvaluation,
    s: &Superoperator,
    rho: &CMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<CMatrix> {
    let wrapped = |z: C64| C64::new(f(z.re), 0.0);
    match eval {
        SuperopEvaluation::Eigenbasis => apply_superop_function(wrapped, s, rho),
        SuperopEvaluation::Dense => apply_superop_function_dense(wrapped, s, rho),
    }
}

fn check_mode(sigma: f64, mode: usize) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::validation("detector.sigma", format!("must be positive, got {sigma}")));
    }
    if mode > MAX_MODE {
        return Err(Error::validation(
            "detector.mode",
            format!("supported modes are 0..={MAX_MODE}, got {mode}"),
        ));
    }
    Ok(())
}

/// Closed-form results for a Hermite-Gauss detector of order `m`.
#[derive(Clone, Debug)]
pub struct HgClosedForms {
    /// `ρ′_{S,m} = L_m[−2εL[A]] e^{εL[A]}(ρ_S)`.
    pub reduced: SystemState,
    /// `M_m(ρ_S) = −2 L′_m[−2εL[A]] e^{εL[A]}(ρ_S)`.
    pub correction: CMatrix,
    pub a_w: WeakValueResult,
    /// `Δ_m = Tr[P_f A M_m(ρ_S)] / Tr[P_f ρ′_{S,m}]`.
    pub delta: C64,
    /// `g Re⟨A⟩^w`.
    pub mean_x: f64,
    /// `g (ħ/4σ²) 2 Im(⟨A⟩^w + Δ_m)`.
    pub mean_p: f64,
    pub prob_f: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn hg_closed_forms(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    sigma: f64,
    mode: usize,
    p_f: &SystemOperator,
    hbar: f64,
) -> Result<HgClosedForms> {
    hg_closed_forms_with(rho_s, a, g, sigma, mode, p_f, hbar, SuperopEvaluation::Eigenbasis)
}

#[allow(clippy::too_many_arguments)]
pub fn hg_closed_forms_with(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    sigma: f64,
    mode: usize,
    p_f: &SystemOperator,
    hbar: f64,
    eval: SuperopEvaluation,
) -> Result<HgClosedForms> {
    check_mode(sigma, mode)?;
    check_postselection(p_f, rho_s.dim())?;
    let eps = (g / (2.0 * sigma)).powi(2);
    let lind = lindblad_action(a)?;
    let rho = rho_s.matrix();
    let reduced = superop_fn(eval, &lind, rho, |z| laguerre(mode, -2.0 * eps * z) * (eps * z).exp())?;
    let correction = superop_fn(eval, &lind, rho, |z| {
        -2.0 * laguerre_prime(mode, -2.0 * eps * z) * (eps * z).exp()
    })?;
    let reduced = SystemState::new(reduced)?;
    let a_w = system_weak_value(p_f, a, &reduced)?;
    let delta = hilbert::trace(&(p_f.matrix() * a.matrix() * &correction)) / a_w.denominator;
    let mean_x = g * a_w.value.re;
    let mean_p = g * hbar / (4.0 * sigma * sigma) * 2.0 * (a_w.value + delta).im;
    Ok(HgClosedForms {
        prob_f: a_w.denominator,
        reduced,
        correction,
        a_w,
        delta,
        mean_x,
        mean_p,
    })
}

/// Second conditioned moments `(f⟨x²⟩, f⟨p²⟩)` for a Hermite-Gauss detector.
///
/// In the eigenbasis of `A`, with `y = g(a_j − a_k)`, `s = (a_j + a_k)/2`,
/// `u = y²/4σ²` and `h(u) = L_m(u) e^{−u/2}`:
///
/// * `f⟨x²⟩ ∝ Σ P_kj ρ_jk [g² s² h(u) − 2σ² h′(u)]`,
/// * `f⟨p²⟩ ∝ −ħ² Σ P_kj ρ_jk γ″(y)` with `γ(y) = h(y²/4σ²)`,
///
/// both normalized by `Tr[P_f ρ′]`.
#[allow(clippy::too_many_arguments)]
pub fn second_moment_closed_form(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    sigma: f64,
    mode: usize,
    p_f: &SystemOperator,
    hbar: f64,
) -> Result<(f64, f64)> {
    check_mode(sigma, mode)?;
    check_postselection(p_f, rho_s.dim())?;
    let (vals, vecs) = hilbert::eig_hermitian(a)?;
    let rho = hilbert::to_basis(rho_s.matrix(), &vecs);
    let post = hilbert::to_basis(p_f.matrix(), &vecs);
    let s2 = sigma * sigma;
    let second = |u: f64| {
        if mode < 2 {
            0.0
        } else {
            gen_laguerre(mode - 2, 2.0, u)
        }
    };
    let mut den = C64::new(0.0, 0.0);
    let mut x2 = C64::new(0.0, 0.0);
    let mut p2 = C64::new(0.0, 0.0);
    for (j, &aj) in vals.iter().enumerate() {
        for (k, &ak) in vals.iter().enumerate() {
            let w = post[(k, j)] * rho[(j, k)];
            let y = g * (aj - ak);
            let s = 0.5 * (aj + ak);
            let u = y * y / (4.0 * s2);
            let (l0, l1, l2) = (laguerre(mode, u), laguerre_prime(mode, u), second(u));
            let decay = (-0.5 * u).exp();
            let h = l0 * decay;
            let h1 = (l1 - 0.5 * l0) * decay;
            let h2 = (l2 - l1 + 0.25 * l0) * decay;
            let gamma2 = h2 * (y / (2.0 * s2)).powi(2) + h1 / (2.0 * s2);
            den += w * h;
            x2 += w * (g * g * s * s * h - 2.0 * s2 * h1);
            p2 += w * (-hbar * hbar * gamma2);
        }
    }
    if den.re < DENOMINATOR_FLOOR {
        return Err(Error::PostSelectionImpossible { probability: den.re });
    }
    Ok((x2.re / den.re, p2.re / den.re))
}

/// Reduced state for the pointer `Σ_m c_m |h_m⟩`:
/// `Σ_{m,n} c_m c̄_n D^m_n(α) e^{−α²/2} / √(m! n!)` applied at `α = g(a_j − a_k)/2σ`.
///
/// `α` carries the sign of `g`; for `g ≥ 0` it is `√ε` times the eigenvalues of `ad[A]`.
pub fn superposition_reduced_state(
    rho_s: &SystemState,
    a: &SystemOperator,
    g: f64,
    sigma: f64,
    coeffs: &[C64],
) -> Result<SystemState> {
    check_mode(sigma, coeffs.len().saturating_sub(1))?;
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::validation(
            "detector.coefficients",
            format!("must have unit norm, got Σ|c|² = {norm}"),
        ));
    }
    let kernel = |y: f64| {
        let alpha = y / (2.0 * sigma);
        let x = C64::new(alpha, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for (m, cm) in coeffs.iter().enumerate() {
            for (n, cn) in coeffs.iter().enumerate() {
                if cm.norm_sqr() == 0.0 || cn.norm_sqr() == 0.0 {
                    continue;
                }
                let scale = (-0.5 * (ln_factorial(m) + ln_factorial(n))).exp();
                acc += cm * cn.conj() * dmn_polynomial(m, n, x) * scale;
            }
        }
        acc * (-0.5 * alpha * alpha).exp()
    };
    SystemState::new(kernel_map(rho_s.matrix(), a, g, kernel)?)
}

/// `|ψ⟩⟨ψ|` for a unit vector given by real parts.
pub fn real_projector(v: &[f64]) -> Result<SystemOperator> {
    let v = DVector::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)));
    SystemOperator::projector(&v)
}
