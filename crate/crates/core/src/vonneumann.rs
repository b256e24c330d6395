//! Brute-force conditioned von Neumann measurement on the detector grid.
//!
//! The joint state is kept as one detector wavefunction per eigenvector of
//! the observable `A`. The interaction `U_g = exp(−i g A ⊗ p/ħ)` then shifts
//! the component attached to eigenvalue `a_k` by `g·a_k`, applied exactly as
//! a phase `exp(−i g a_k p/ħ)` in the momentum basis. Mixed system and
//! detector states are split into eigen-ensembles and evolved member by
//! member.
//!
//! Conditioned statistics follow directly from the evolved joint state:
//! `f⟨xⁿ⟩ = Tr[(P_f ⊗ xⁿ) ρ′_SD] / Tr[(P_f ⊗ 1) ρ′_SD]`.

use nalgebra::DVector;

use crate::detector::{boundary_density, DetectorGrid, DetectorState, Spectral};
use crate::hilbert::{self, eig_hermitian, JointInput, SystemOperator, SystemState};
use crate::{CMatrix, Error, Result, C64};

/// Post-selection probabilities below this are rejected.
pub const PROB_FLOOR: f64 = 1e-12;

/// Boundary probability density tolerated after translation.
pub const WRAPAROUND_DENSITY: f64 = 1e-12;

/// Highest moment order evaluated by the grid oracle.
pub const MAX_MOMENT_ORDER: usize = 4;

/// Tolerance on the eigenvalues of `P_f` outside `[0, 1]`.
pub const EFFECT_TOL: f64 = 1e-10;

/// Coupling strength and measured observable.
#[derive(Clone, Debug)]
pub struct CouplingConfig {
    g: f64,
    observable: SystemOperator,
    eigenvalues: Vec<f64>,
    eigenbasis: CMatrix,
}

impl CouplingConfig {
    pub fn new(g: f64, observable: SystemOperator) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::validation("coupling.g", format!("must be finite, got {g}")));
        }
        let (eigenvalues, eigenbasis) = eig_hermitian(&observable)?;
        Ok(Self {
            g,
            observable,
            eigenvalues,
            eigenbasis,
        })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn observable(&self) -> &SystemOperator {
        &self.observable
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    /// Largest `|a_k|`, the farthest any component is translated per unit `g`.
    pub fn max_shift(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// Pure joint state `Σ_k |v_k⟩ ⊗ |ψ_k⟩` for a system basis `{v_k}`.
#[derive(Clone, Debug)]
pub struct JointPureState {
    grid: DetectorGrid,
    basis: CMatrix,
    amplitudes: Vec<Vec<C64>>,
}

impl JointPureState {
    /// `|s⟩ ⊗ |ψ⟩` expanded in the columns of `basis`.
    pub fn product(
        system: &DVector<C64>,
        detector: &[C64],
        grid: &DetectorGrid,
        basis: &CMatrix,
    ) -> Result<Self> {
        if detector.len() != grid.n_points() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points(),
                found: detector.len(),
            });
        }
        if system.len() != basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: basis.nrows(),
                found: system.len(),
            });
        }
        let coeffs = basis.adjoint() * system;
        let amplitudes = coeffs
            .iter()
            .map(|c| detector.iter().map(|z| z * c).collect())
            .collect();
        Ok(Self {
            grid: grid.clone(),
            basis: basis.clone(),
            amplitudes,
        })
    }

    pub fn grid(&self) -> &DetectorGrid {
        &self.grid
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[Vec<C64>] {
        &self.amplitudes
    }

    pub fn sys_dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes
            .iter()
            .flat_map(|c| c.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            * self.grid.dx()
    }

    /// Re-expands the state in the columns of `basis`.
    pub fn in_basis(&self, basis: &CMatrix) -> Self {
        let overlap = basis.adjoint() * &self.basis;
        let n = self.grid.n_points();
        let d = self.sys_dim();
        let amplitudes = (0..d)
            .map(|l| {
                let mut out = vec![C64::new(0.0, 0.0); n];
                for k in 0..d {
                    let c = overlap[(l, k)];
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    for (o, z) in out.iter_mut().zip(&self.amplitudes[k]) {
                        *o += c * z;
                    }
                }
                out
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            basis: basis.clone(),
            amplitudes,
        }
    }

    /// Reduced system density matrix in the standard basis.
    pub fn reduced_state(&self) -> Result<SystemState> {
        let d = self.sys_dim();
        let standard = self.in_basis(&CMatrix::identity(d, d));
        let s = self.grid.dx().sqrt();
        let flat: Vec<C64> = standard
            .amplitudes
            .iter()
            .flat_map(|c| c.iter().map(move |z| z * s))
            .collect();
        hilbert::partial_trace_detector(JointInput::Pure(&flat), d, self.grid.n_points())
    }
}

fn same_basis(a: &CMatrix, b: &CMatrix) -> bool {
    a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() <= 1e-12)
}

/// Translates each eigen-component `k` by `g·a_k`; components must be in
/// the eigenbasis of the observable.
pub(crate) fn couple_components(
    components: &[Vec<C64>],
    cfg: &CouplingConfig,
    spectral: &Spectral,
) -> Result<Vec<Vec<C64>>> {
    components
        .iter()
        .zip(cfg.eigenvalues())
        .map(|(psi, &a)| {
            let shifted = spectral.translate(psi, cfg.g * a);
            let density = boundary_density(&shifted);
            if density > WRAPAROUND_DENSITY {
                return Err(Error::Wraparound { density });
            }
            Ok(shifted)
        })
        .collect()
}

/// Applies `U_g`, rotating into the eigenbasis of `A` first if necessary.
pub fn apply_coupling(state: &JointPureState, cfg: &CouplingConfig) -> Result<JointPureState> {
    if state.sys_dim() != cfg.eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.eigenvalues.len(),
            found: state.sys_dim(),
        });
    }
    let local = if same_basis(&state.basis, &cfg.eigenbasis) {
        state.clone()
    } else {
        state.in_basis(&cfg.eigenbasis)
    };
    let spectral = local.grid.spectral();
    let amplitudes = couple_components(&local.amplitudes, cfg, &spectral)?;
    Ok(JointPureState { amplitudes, ..local })
}

/// Product ensemble `ρ_S ⊗ ρ_D = Σ w |Ψ⟩⟨Ψ|`, expanded in the eigenbasis of `A`.
pub(crate) fn product_ensemble(
    rho_s: &SystemState,
    rho_d: &DetectorState,
    cfg: &CouplingConfig,
) -> Result<Vec<(f64, JointPureState)>> {
    if rho_s.dim() != cfg.eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: cfg.eigenvalues.len(),
            found: rho_s.dim(),
        });
    }
    let grid = rho_d.grid();
    let det = rho_d.ensemble();
    let mut out = Vec::with_capacity(rho_s.dim() * det.len());
    for (ws, s) in rho_s.ensemble() {
        for (wd, psi) in &det {
            out.push((ws * wd, JointPureState::product(&s, psi, grid, &cfg.eigenbasis)?));
        }
    }
    Ok(out)
}

pub(crate) fn check_postselection(p_f: &SystemOperator, dim: usize) -> Result<()> {
    if p_f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p_f.dim(),
        });
    }
    p_f.check_effect(EFFECT_TOL)
}

/// `Σ_jk P_jk Σ_i conj(bra_j[i]) f(i) ket_k[i]`.
pub(crate) fn sandwich(
    post: &CMatrix,
    bra: &[Vec<C64>],
    ket: &[Vec<C64>],
    f: impl Fn(usize) -> f64,
) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, bj) in bra.iter().enumerate() {
        for (k, kk) in ket.iter().enumerate() {
            let pjk = post[(j, k)];
            if pjk.norm_sqr() == 0.0 {
                continue;
            }
            let inner: C64 = bj
                .iter()
                .zip(kk)
                .enumerate()
                .map(|(i, (a, b))| a.conj() * b * f(i))
                .sum();
            acc += pjk * inner;
        }
    }
    acc
}

/// Which detector quadrature is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Position,
    Momentum,
}

struct EvolvedMember {
    weight: f64,
    position: Vec<Vec<C64>>,
    momentum: Vec<Vec<C64>>,
}

/// Evolved joint ensemble with the post-selection attached.
pub struct GridOracle {
    grid: DetectorGrid,
    basis: CMatrix,
    post: CMatrix,
    members: Vec<EvolvedMember>,
    prob_f: f64,
}

impl GridOracle {
    pub fn new(
        rho_s: &SystemState,
        rho_d: &DetectorState,
        cfg: &CouplingConfig,
        p_f: &SystemOperator,
    ) -> Result<Self> {
        check_postselection(p_f, rho_s.dim())?;
        let grid = rho_d.grid().clone();
        let spectral = grid.spectral();
        let post = hilbert::to_basis(p_f.matrix(), cfg.eigenbasis());
        let mut members = Vec::new();
        for (weight, joint) in product_ensemble(rho_s, rho_d, cfg)? {
            let position = couple_components(joint.amplitudes(), cfg, &spectral)?;
            let momentum = position.iter().map(|c| spectral.to_momentum(c)).collect();
            members.push(EvolvedMember {
                weight,
                position,
                momentum,
            });
        }
        let mut oracle = Self {
            grid,
            basis: cfg.eigenbasis().clone(),
            post,
            members,
            prob_f: 0.0,
        };
        oracle.prob_f = oracle.numerator(Quadrature::Position, |_| C64::new(1.0, 0.0)).re;
        Ok(oracle)
    }

    /// `Tr[(P_f ⊗ 1) ρ′_SD]`.
    pub fn prob_f(&self) -> f64 {
        self.prob_f
    }

    fn require_postselection(&self) -> Result<f64> {
        if self.prob_f < PROB_FLOOR {
            return Err(Error::PostSelectionImpossible {
                probability: self.prob_f,
            });
        }
        Ok(self.prob_f)
    }

    /// `Tr[(P_f ⊗ f(q)) ρ′_SD]` for a function diagonal in the chosen quadrature.
    fn numerator(&self, which: Quadrature, f: impl Fn(f64) -> C64) -> C64 {
        let (values, scale) = match which {
            Quadrature::Position => (self.grid.positions(), self.grid.dx()),
            Quadrature::Momentum => (self.grid.momenta(), 1.0),
        };
        let weights: Vec<C64> = values.iter().map(|&q| f(q) * scale).collect();
        let mut acc = C64::new(0.0, 0.0);
        for m in &self.members {
            let amps = match which {
                Quadrature::Position => &m.position,
                Quadrature::Momentum => &m.momentum,
            };
            let mut member = C64::new(0.0, 0.0);
            for (j, bj) in amps.iter().enumerate() {
                for (k, kk) in amps.iter().enumerate() {
                    let pjk = self.post[(j, k)];
                    if pjk.norm_sqr() == 0.0 {
                        continue;
                    }
                    let inner: C64 = bj
                        .iter()
                        .zip(kk)
                        .zip(&weights)
                        .map(|((a, b), w)| a.conj() * b * w)
                        .sum();
                    member += pjk * inner;
                }
            }
            acc += member * m.weight;
        }
        acc
    }

    /// Conditioned moment `f⟨qⁿ⟩` by direct expectation.
    pub fn moment(&self, n: usize, which: Quadrature) -> Result<f64> {
        if n == 0 || n > MAX_MOMENT_ORDER {
            return Err(Error::validation(
                "moment order",
                format!("supported orders are 1..={MAX_MOMENT_ORDER}, got {n}"),
            ));
        }
        let prob = self.require_postselection()?;
        Ok(self.numerator(which, |q| C64::new(q.powi(n as i32), 0.0)).re / prob)
    }

    /// Conditioned characteristic function `f⟨e^{iλq}⟩`.
    pub fn characteristic(&self, lambda: f64, which: Quadrature) -> Result<C64> {
        let prob = self.require_postselection()?;
        Ok(self.numerator(which, |q| C64::from_polar(1.0, lambda * q)) / prob)
    }

    /// Unconditioned post-interaction system state `Tr_D ρ′_SD`.
    pub fn reduced_state(&self) -> Result<SystemState> {
        let d = self.basis.nrows();
        let mut acc = CMatrix::zeros(d, d);
        for m in &self.members {
            let joint = JointPureState {
                grid: self.grid.clone(),
                basis: self.basis.clone(),
                amplitudes: m.position.clone(),
            };
            acc += joint.reduced_state()?.matrix() * C64::new(m.weight, 0.0);
        }
        SystemState::new(acc)
    }

    /// Conditioned position density `P(x | f)` on the grid, normalized with `dx`.
    pub fn conditioned_position_density(&self) -> Result<Vec<f64>> {
        let prob = self.require_postselection()?;
        let (vals, vecs) = hilbert::eigh(&self.post);
        let n = self.grid.n_points();
        let mut out = vec![0.0; n];
        for m in &self.members {
            for (l, &mu) in vals.iter().enumerate() {
                if mu <= 0.0 {
                    continue;
                }
                let u = vecs.column(l);
                for (i, o) in out.iter_mut().enumerate() {
                    let amp: C64 = m
                        .position
                        .iter()
                        .enumerate()
                        .map(|(k, c)| u[k].conj() * c[i])
                        .sum();
                    *o += m.weight * mu * amp.norm_sqr();
                }
            }
        }
        for o in &mut out {
            *o /= prob;
        }
        Ok(out)
    }
}

/// Conditioned detector statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedResult {
    pub prob_f: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    /// `moments_x[n − 1] = f⟨xⁿ⟩`.
    pub moments_x: Vec<f64>,
    pub moments_p: Vec<f64>,
}

/// Conditioned averages and moments up to `max_order` from the evolved joint state.
pub fn conditioned_averages_grid(
    rho_s: &SystemState,
    rho_d: &DetectorState,
    cfg: &CouplingConfig,
    p_f: &SystemOperator,
    max_order: usize,
) -> Result<ConditionedResult> {
    let oracle = GridOracle::new(rho_s, rho_d, cfg, p_f)?;
    conditioned_result(&oracle, max_order.max(1))
}

pub(crate) fn conditioned_result(oracle: &GridOracle, max_order: usize) -> Result<ConditionedResult> {
    let moments_x = (1..=max_order)
        .map(|n| oracle.moment(n, Quadrature::Position))
        .collect::<Result<Vec<_>>>()?;
    let moments_p = (1..=max_order)
        .map(|n| oracle.moment(n, Quadrature::Momentum))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConditionedResult {
        prob_f: oracle.prob_f(),
        mean_x: moments_x[0],
        mean_p: moments_p[0],
        moments_x,
        moments_p,
    })
}

pub fn characteristic_function(
    lambda: f64,
    which: Quadrature,
    rho_s: &SystemState,
    rho_d: &DetectorState,
    cfg: &CouplingConfig,
    p_f: &SystemOperator,
) -> Result<C64> {
    GridOracle::new(rho_s, rho_d, cfg, p_f)?.characteristic(lambda, which)
}

pub fn conditioned_moment(
    n: usize,
    which: Quadrature,
    rho_s: &SystemState,
    rho_d: &DetectorState,
    cfg: &CouplingConfig,
    p_f: &SystemOperator,
) -> Result<f64> {
    GridOracle::new(rho_s, rho_d, cfg, p_f)?.moment(n, which)
}
