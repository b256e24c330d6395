//! Declarative scenario files (TOML).
//!
//! ```toml
//! [system]
//! observable = "pauli3"                 # or a matrix of [re, im] pairs
//! state = { vector = [[-0.9238795325112867, 0.0], [0.3826834323650898, 0.0]] }
//! postselect = { vector = [[1.0, 0.0], [1.0, 0.0]] }   # or { matrix = … } or "none"
//!
//! [detector]
//! sigma = 2.0
//! profile = { hermite_gauss = { modes = [0, 1, 2] } }
//!
//! [coupling]
//! g = 2.0                               # or sweep = { min, max, count, spacing }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. States may also be given as
//! `{ bloch = [r1, r2, r3] }` or `{ density = … }`; projector vectors are
//! normalized on load.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::detector::{DetectorGrid, DetectorState, DEFAULT_GRID_POINTS, MAX_MODE};
use crate::hilbert::{SystemOperator, SystemState, MAX_SYSTEM_DIM};
use crate::{CMatrix, Error, Result, C64};

pub type Complex = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub system: SystemSpec,
    pub detector: DetectorSpec,
    pub coupling: CouplingSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub observable: ObservableSpec,
    pub state: StateSpec,
    #[serde(default = "PostSelectSpec::none")]
    pub postselect: PostSelectSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Preset(Preset),
    Matrix(Vec<Vec<Complex>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Pauli1,
    Pauli2,
    Pauli3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Vector(Vec<Complex>),
    Density(Vec<Vec<Complex>>),
    Bloch([f64; 3]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PostSelectSpec {
    None,
    Vector(Vec<Complex>),
    Matrix(Vec<Vec<Complex>>),
}

impl PostSelectSpec {
    fn none() -> Self {
        Self::None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    /// Width parameter; required for mode-based profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Fixed half-width of the symmetric grid instead of the automatic
    /// `12σ + |g|·max|a|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub profile: ProfileSpec,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    HermiteGauss { modes: Vec<usize> },
    Superposition { coefficients: Vec<Complex> },
    /// Samples on the symmetric grid of `half_width`; the count sets the grid size.
    Wavefunction { samples: Vec<Complex> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// Prepend `g = 0` (useful with logarithmic spacing).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub include_zero: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Paths {
    Grid,
    Closed,
    #[default]
    Both,
}

impl Paths {
    pub fn grid(self) -> bool {
        self != Paths::Closed
    }

    pub fn closed(self) -> bool {
        self != Paths::Grid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub paths: Paths,
    /// Highest grid moment reported (1..=4).
    #[serde(default = "default_max_order")]
    pub max_order: usize,
    /// Relative tolerance for path agreement.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

fn default_max_order() -> usize {
    2
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            max_order: default_max_order(),
            tolerance: default_tolerance(),
            report: None,
            csv: None,
        }
    }
}

fn complex(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn to_vector(field: &str, v: &[Complex]) -> Result<DVector<C64>> {
    let out = DVector::from_iterator(v.len(), v.iter().map(complex));
    if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::validation(field, "entries must be finite"));
    }
    if out.norm() == 0.0 {
        return Err(Error::validation(field, "vector must be nonzero"));
    }
    Ok(out)
}

fn to_matrix(field: &str, rows: &[Vec<Complex>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation(field, "matrix must be square and nonempty"));
    }
    let m = CMatrix::from_fn(n, n, |i, j| complex(&rows[i][j]));
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::validation(field, "entries must be finite"));
    }
    Ok(m)
}

fn to_complex_list(v: &[Complex]) -> Vec<C64> {
    v.iter().map(complex).collect()
}

fn from_complex(z: C64) -> Complex {
    [z.re, z.im]
}

/// Attributes an engine error to a scenario field.
fn relabel(field: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Validation { field: inner, message } if field.rsplit('.').next() == Some(inner.as_str()) => {
            Error::validation(field, message)
        }
        Error::Validation { field: inner, message } if inner.starts_with(&format!("{field}.")) => {
            Error::Validation { field: inner, message }
        }
        Error::Validation { field: inner, message } => Error::validation(format!("{field}.{inner}"), message),
        other => Error::validation(field, other.to_string()),
    }
}

/// Which detector state a sweep point is evaluated with.
#[derive(Clone, Debug, PartialEq)]
pub enum DetectorVariant {
    Mode(usize),
    Superposition(Vec<C64>),
    Wavefunction(Vec<C64>),
}

impl DetectorVariant {
    /// Label used in reports and the `m` CSV column.
    pub fn label(&self) -> String {
        match self {
            DetectorVariant::Mode(m) => m.to_string(),
            DetectorVariant::Superposition(_) => "superposition".into(),
            DetectorVariant::Wavefunction(_) => "wavefunction".into(),
        }
    }
}

/// A scenario with every field validated and converted to engine types.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub rho_s: SystemState,
    pub observable: SystemOperator,
    pub postselect: SystemOperator,
    pub sigma: Option<f64>,
    pub hbar: f64,
    pub grid_points: usize,
    pub half_width: Option<f64>,
    pub variants: Vec<DetectorVariant>,
    pub couplings: Vec<f64>,
    pub is_sweep: bool,
    pub outputs: OutputSpec,
}

impl Resolved {
    /// Detector state for one variant, on a grid wide enough for coupling `g`.
    pub fn detector_state(&self, variant: &DetectorVariant, g: f64, max_shift: f64) -> Result<DetectorState> {
        if let DetectorVariant::Wavefunction(samples) = variant {
            let half = self.half_width.expect("validated");
            let grid = DetectorGrid::symmetric(samples.len(), half, self.hbar)?;
            // Hand-written samples are only normalized up to a constant.
            let norm = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::validation("detector.profile.wavefunction", "samples must be finite and nonzero"));
            }
            return DetectorState::wavefunction(&grid, samples.iter().map(|z| z / norm).collect());
        }
        let sigma = self.sigma.expect("validated");
        let grid = match self.half_width {
            Some(h) => DetectorGrid::symmetric(self.grid_points, h, self.hbar)?,
            None => DetectorGrid::for_coupling(self.grid_points, sigma, g, max_shift, self.hbar)?,
        };
        match variant {
            DetectorVariant::Mode(m) => DetectorState::hermite_gauss(&grid, sigma, *m),
            DetectorVariant::Superposition(c) => DetectorState::superposition(&grid, sigma, c.clone()),
            DetectorVariant::Wavefunction(_) => unreachable!(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io_at(path))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// The built-in polarization scenario: `ψ_i = (cos 7π/8, sin 7π/8)`,
    /// `ψ_f = (1, 1)/√2`, `A = σ₃`, Hermite-Gauss modes 0–2 with `σ = 2`.
    pub fn fig2_preset(g: f64) -> Self {
        let t = 7.0 * std::f64::consts::PI / 8.0;
        Scenario {
            system: SystemSpec {
                dim: Some(2),
                observable: ObservableSpec::Preset(Preset::Pauli3),
                state: StateSpec::Vector(vec![[t.cos(), 0.0], [t.sin(), 0.0]]),
                postselect: PostSelectSpec::Vector(vec![[1.0, 0.0], [1.0, 0.0]]),
            },
            detector: DetectorSpec {
                sigma: Some(2.0),
                hbar: 1.0,
                grid_points: None,
                half_width: None,
                profile: ProfileSpec::HermiteGauss { modes: vec![0, 1, 2] },
            },
            coupling: CouplingSpec {
                g: Some(g),
                sweep: None,
            },
            outputs: OutputSpec::default(),
        }
    }

    /// The same system swept over `g/σ ∈ {0} ∪ [10⁻³, 10]` (log-spaced).
    pub fn fig1_preset(count: usize) -> Self {
        let mut s = Self::fig2_preset(0.0);
        s.coupling = CouplingSpec {
            g: None,
            sweep: Some(SweepSpec {
                min: 2e-3,
                max: 20.0,
                count,
                spacing: Spacing::Log,
                include_zero: true,
            }),
        };
        s
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let observable = match &self.system.observable {
            ObservableSpec::Preset(Preset::Pauli1) => SystemOperator::pauli_x(),
            ObservableSpec::Preset(Preset::Pauli2) => SystemOperator::pauli_y(),
            ObservableSpec::Preset(Preset::Pauli3) => SystemOperator::pauli_z(),
            ObservableSpec::Matrix(rows) => {
                SystemOperator::hermitian(to_matrix("system.observable", rows)?)
                    .map_err(relabel("system.observable"))?
            }
        };
        let d = observable.dim();
        if let Some(dim) = self.system.dim {
            if dim != d {
                return Err(Error::validation(
                    "system.dim",
                    format!("observable is {d}×{d} but dim = {dim}"),
                ));
            }
        }
        if !(2..=MAX_SYSTEM_DIM).contains(&d) {
            return Err(Error::validation(
                "system.dim",
                format!("must lie in 2..={MAX_SYSTEM_DIM}, got {d}"),
            ));
        }

        let rho_s = match &self.system.state {
            StateSpec::Vector(v) => {
                let v = to_vector("system.state.vector", v)?;
                SystemState::pure(&(&v / C64::new(v.norm(), 0.0)))
            }
            StateSpec::Density(rows) => SystemState::new(to_matrix("system.state.density", rows)?),
            StateSpec::Bloch(r) => {
                if d != 2 {
                    return Err(Error::validation("system.state.bloch", "requires dim = 2"));
                }
                SystemState::from_bloch(*r)
            }
        }
        .map_err(relabel("system.state"))?;
        if rho_s.dim() != d {
            return Err(Error::validation(
                "system.state",
                format!("dimension {} does not match observable dimension {d}", rho_s.dim()),
            ));
        }

        let postselect = match &self.system.postselect {
            PostSelectSpec::None => SystemOperator::identity(d),
            PostSelectSpec::Vector(v) => SystemOperator::projector(&to_vector("system.postselect.vector", v)?)
                .map_err(relabel("system.postselect"))?,
            PostSelectSpec::Matrix(rows) => SystemOperator::hermitian(to_matrix("system.postselect.matrix", rows)?)
                .map_err(relabel("system.postselect"))?,
        };
        if postselect.dim() != d {
            return Err(Error::validation(
                "system.postselect",
                format!("dimension {} does not match observable dimension {d}", postselect.dim()),
            ));
        }
        postselect
            .check_effect(crate::vonneumann::EFFECT_TOL)
            .map_err(relabel("system.postselect"))?;

        let det = &self.detector;
        if !(det.hbar.is_finite() && det.hbar > 0.0) {
            return Err(Error::validation("detector.hbar", "must be positive"));
        }
        if let Some(h) = det.half_width {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::validation("detector.half_width", "must be positive"));
            }
        }
        let grid_points = det.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
        let needs_sigma = !matches!(det.profile, ProfileSpec::Wavefunction { .. });
        match det.sigma {
            Some(s) if !(s.is_finite() && s > 0.0) => {
                return Err(Error::validation("detector.sigma", "must be positive"))
            }
            None if needs_sigma => {
                return Err(Error::validation("detector.sigma", "required for this profile"))
            }
            _ => {}
        }
        let variants = match &det.profile {
            ProfileSpec::HermiteGauss { modes } => {
                if modes.is_empty() {
                    return Err(Error::validation("detector.profile.hermite_gauss.modes", "must not be empty"));
                }
                if let Some(m) = modes.iter().find(|&&m| m > MAX_MODE) {
                    return Err(Error::validation(
                        "detector.profile.hermite_gauss.modes",
                        format!("mode {m} exceeds {MAX_MODE}"),
                    ));
                }
                modes.iter().map(|&m| DetectorVariant::Mode(m)).collect()
            }
            ProfileSpec::Superposition { coefficients } => {
                let c = to_complex_list(coefficients);
                let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
                if c.is_empty() || c.len() > MAX_MODE + 1 || (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::validation(
                        "detector.profile.superposition.coefficients",
                        format!("need 1..={} coefficients with unit norm (Σ|c|² = {norm})", MAX_MODE + 1),
                    ));
                }
                vec![DetectorVariant::Superposition(c)]
            }
            ProfileSpec::Wavefunction { samples } => {
                if det.half_width.is_none() {
                    return Err(Error::validation(
                        "detector.half_width",
                        "required with wavefunction samples",
                    ));
                }
                vec![DetectorVariant::Wavefunction(to_complex_list(samples))]
            }
        };

        let (couplings, is_sweep) = match (&self.coupling.g, &self.coupling.sweep) {
            (Some(g), None) => {
                if !g.is_finite() {
                    return Err(Error::validation("coupling.g", "must be finite"));
                }
                (vec![*g], false)
            }
            (None, Some(s)) => (sweep_values(s)?, true),
            _ => {
                return Err(Error::validation("coupling", "give exactly one of `g` or `sweep`"));
            }
        };

        let outputs = self.outputs.clone();
        if !(1..=crate::vonneumann::MAX_MOMENT_ORDER).contains(&outputs.max_order) {
            return Err(Error::validation(
                "outputs.max_order",
                format!("must lie in 1..={}", crate::vonneumann::MAX_MOMENT_ORDER),
            ));
        }
        if !(outputs.tolerance.is_finite() && outputs.tolerance > 0.0) {
            return Err(Error::validation("outputs.tolerance", "must be positive"));
        }

        let resolved = Resolved {
            rho_s,
            observable,
            postselect,
            sigma: det.sigma,
            hbar: det.hbar,
            grid_points,
            half_width: det.half_width,
            variants,
            couplings,
            is_sweep,
            outputs,
        };
        // Surface grid problems (size, truncation) at load time.
        for v in &resolved.variants {
            resolved
                .detector_state(v, 0.0, 0.0)
                .map_err(relabel("detector"))?;
        }
        Ok(resolved)
    }
}

/// Coupling values of a sweep, in ascending order of generation.
pub fn sweep_values(s: &SweepSpec) -> Result<Vec<f64>> {
    if s.count < 2 {
        return Err(Error::validation("coupling.sweep.count", format!("must be ≥ 2, got {}", s.count)));
    }
    if !(s.min.is_finite() && s.max.is_finite()) {
        return Err(Error::validation("coupling.sweep", "bounds must be finite"));
    }
    let n = s.count;
    let t = |i: usize| i as f64 / (n - 1) as f64;
    let mut out: Vec<f64> = match s.spacing {
        Spacing::Linear => (0..n).map(|i| s.min + (s.max - s.min) * t(i)).collect(),
        Spacing::Log => {
            if !(s.min > 0.0 && s.max > 0.0) {
                return Err(Error::validation("coupling.sweep", "log spacing needs positive bounds"));
            }
            let (a, b) = (s.min.ln(), s.max.ln());
            (0..n).map(|i| (a + (b - a) * t(i)).exp()).collect()
        }
    };
    if s.include_zero {
        out.insert(0, 0.0);
    }
    Ok(out)
}

/// Serializes a state as `[re, im]` rows, for echoing.
pub fn matrix_spec(m: &CMatrix) -> Vec<Vec<Complex>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| from_complex(m[(i, j)])).collect())
        .collect()
}
