//! Finite-dimensional operator algebra and superoperator calculus.
//!
//! Superoperators act on column-stacked density matrices: for a `d×d`
//! matrix `X`, `vec(X)` lists the columns of `X` one after the other, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. With this convention
//! `ad[A] = 1 ⊗ A − Aᵀ ⊗ 1`.
//!
//! A superoperator built from a Hermitian observable remembers the
//! eigenbasis of that observable. Its eigenvectors are the matrix units
//! `|j⟩⟨k|` of the eigenbasis, so any function of it is applied by an
//! elementwise product in that basis.

use nalgebra::DVector;

use crate::{CMatrix, Error, Result, C64};

/// Largest system dimension accepted for operators and states.
pub const MAX_SYSTEM_DIM: usize = 16;

/// Upper bound on the number of entries of a dense tensor product.
pub const MAX_TENSOR_ENTRIES: usize = 1 << 24;

/// Relative tolerance for the Hermitian flag on operators.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

/// Trace and Hermiticity tolerance for density matrices.
pub const STATE_TOL: f64 = 1e-12;

/// Most negative eigenvalue tolerated in a density matrix.
pub const PSD_FLOOR: f64 = -1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entry of `|m − m†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Column-stacking vectorization.
pub fn vectorize(m: &CMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in ascending order. Each eigenvector is rephased so
/// that its first component with modulus above `1e-12` is real and positive.
/// Only the Hermitian part of `m` is used.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let phase = v
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(ONE);
        for row in 0..n {
            vectors[(row, col)] = v[row] * phase;
        }
    }
    (values, vectors)
}

/// An operator on the system Hilbert space (observable, POVM element, …).
#[derive(Clone, Debug, PartialEq)]
pub struct SystemOperator {
    matrix: CMatrix,
    hermitian: bool,
}

impl SystemOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = check_square(&matrix)?;
        if dim == 0 || dim > MAX_SYSTEM_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: MAX_SYSTEM_DIM,
            });
        }
        let scale = max_abs(&matrix);
        let hermitian = hermitian_deviation(&matrix) <= HERMITIAN_REL_TOL * scale;
        Ok(Self { matrix, hermitian })
    }

    /// Like [`SystemOperator::new`] but rejects non-Hermitian input.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let op = Self::new(matrix)?;
        if !op.hermitian {
            return Err(Error::NotHermitian {
                deviation: hermitian_deviation(&op.matrix),
            });
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
            hermitian: true,
        }
    }

    pub fn pauli_x() -> Self {
        Self::from_entries([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::from_entries([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_entries([[ONE, ZERO], [ZERO, -ONE]])
    }

    fn from_entries(rows: [[C64; 2]; 2]) -> Self {
        Self {
            matrix: CMatrix::from_fn(2, 2, |i, j| rows[i][j]),
            hermitian: true,
        }
    }

    /// Rank-one projector onto the normalized direction of `v`.
    pub fn projector(v: &DVector<C64>) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::validation("projector", "zero vector"));
        }
        let u = v / C64::new(norm, 0.0);
        Self::new(&u * u.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Checks `0 ≤ P ≤ 1` within `tol`, as required of a post-selection.
    pub fn check_effect(&self, tol: f64) -> Result<()> {
        if !self.hermitian {
            return Err(Error::NotHermitian {
                deviation: hermitian_deviation(&self.matrix),
            });
        }
        let (vals, _) = eigh(&self.matrix);
        let lo = vals[0];
        let hi = vals[vals.len() - 1];
        if lo < -tol || hi > 1.0 + tol {
            return Err(Error::validation(
                "postselect",
                format!("eigenvalues must lie in [0, 1], found [{lo:.3e}, {hi:.3e}]"),
            ));
        }
        Ok(())
    }
}

/// Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian operator.
pub fn eig_hermitian(a: &SystemOperator) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_hermitian() {
        return Err(Error::NotHermitian {
            deviation: hermitian_deviation(a.matrix()),
        });
    }
    Ok(eigh(a.matrix()))
}

/// Measured departures of a matrix from being a density matrix.
#[derive(Clone, Copy, Debug)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermitian_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn of(m: &CMatrix) -> Self {
        let (vals, _) = eigh(m);
        Self {
            trace_error: (trace(m) - ONE).norm(),
            hermitian_error: hermitian_deviation(m),
            min_eigenvalue: vals.first().copied().unwrap_or(0.0),
        }
    }

    pub fn passes(&self, trace_tol: f64, hermitian_tol: f64, psd_floor: f64) -> bool {
        self.trace_error <= trace_tol
            && self.hermitian_error <= hermitian_tol
            && self.min_eigenvalue >= psd_floor
    }
}

/// A density matrix on the system.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    matrix: CMatrix,
}

impl SystemState {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = check_square(&matrix)?;
        if dim == 0 || dim > MAX_SYSTEM_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                limit: MAX_SYSTEM_DIM,
            });
        }
        let diag = StateDiagnostics::of(&matrix);
        if diag.trace_error > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "trace deviates from 1 by {:.3e}",
                diag.trace_error
            )));
        }
        if diag.hermitian_error > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                diag.hermitian_error
            )));
        }
        if diag.min_eigenvalue < PSD_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                diag.min_eigenvalue
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for the normalized direction of `psi`.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let u = psi / C64::new(norm, 0.0);
        Self::new(&u * u.adjoint())
    }

    /// Qubit state `(1 + r·σ)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1.0 + 1e-12 {
            return Err(Error::validation(
                "bloch",
                format!("Bloch vector length {len} exceeds 1"),
            ));
        }
        let m = CMatrix::identity(2, 2) * C64::new(0.5, 0.0)
            + SystemOperator::pauli_x().matrix * C64::new(r[0] / 2.0, 0.0)
            + SystemOperator::pauli_y().matrix * C64::new(r[1] / 2.0, 0.0)
            + SystemOperator::pauli_z().matrix * C64::new(r[2] / 2.0, 0.0);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Bloch components `r_i = Tr[ρ σ_i]`; `None` unless the state is a qubit.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let comp = |op: SystemOperator| trace(&(op.matrix * &self.matrix)).re;
        Some([
            comp(SystemOperator::pauli_x()),
            comp(SystemOperator::pauli_y()),
            comp(SystemOperator::pauli_z()),
        ])
    }

    /// Ensemble decomposition `ρ = Σ w |v⟩⟨v|`, dropping weights below `1e-15`.
    pub fn ensemble(&self) -> Vec<(f64, DVector<C64>)> {
        let (vals, vecs) = eigh(&self.matrix);
        vals.iter()
            .enumerate()
            .filter(|(_, &w)| w > 1e-15)
            .map(|(i, &w)| (w, vecs.column(i).into_owned()))
            .collect()
    }
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let d1 = check_square(a)?;
    let d2 = check_square(b)?;
    let dim = d1 * d2;
    if dim.saturating_mul(dim) > MAX_TENSOR_ENTRIES {
        return Err(Error::DimensionTooLarge {
            dim,
            limit: (MAX_TENSOR_ENTRIES as f64).sqrt() as usize,
        });
    }
    Ok(a.kronecker(b))
}

/// A joint system⊗detector state, indexed system-major (`s * det_dim + x`).
#[derive(Clone, Copy, Debug)]
pub enum JointInput<'a> {
    Density(&'a CMatrix),
    Pure(&'a [C64]),
}

/// Traces out the detector factor of a joint state.
pub fn partial_trace_detector(
    joint: JointInput<'_>,
    sys_dim: usize,
    det_dim: usize,
) -> Result<SystemState> {
    let total = sys_dim * det_dim;
    let mut out = CMatrix::zeros(sys_dim, sys_dim);
    match joint {
        JointInput::Density(rho) => {
            let n = check_square(rho)?;
            if n != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    found: n,
                });
            }
            for s in 0..sys_dim {
                for t in 0..sys_dim {
                    out[(s, t)] = (0..det_dim)
                        .map(|x| rho[(s * det_dim + x, t * det_dim + x)])
                        .sum();
                }
            }
        }
        JointInput::Pure(psi) => {
            if psi.len() != total {
                return Err(Error::DimensionMismatch {
                    expected: total,
                    found: psi.len(),
                });
            }
            for s in 0..sys_dim {
                let row_s = &psi[s * det_dim..(s + 1) * det_dim];
                for t in 0..sys_dim {
                    let row_t = &psi[t * det_dim..(t + 1) * det_dim];
                    out[(s, t)] = row_s.iter().zip(row_t).map(|(a, b)| a * b.conj()).sum();
                }
            }
        }
    }
    SystemState::new(out)
}

/// One eigenpair of a superoperator generated by a Hermitian observable:
/// the matrix unit `|v_row⟩⟨v_col|` with eigenvalue `eigenvalue`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPair {
    pub row: usize,
    pub col: usize,
    pub row_value: f64,
    pub col_value: f64,
    pub eigenvalue: C64,
}

impl SpectralPair {
    pub fn gap(&self) -> f64 {
        self.row_value - self.col_value
    }
}

/// A linear map on `d×d` matrices, stored as a `d²×d²` matrix.
#[derive(Clone, Debug)]
pub struct Superoperator {
    sys_dim: usize,
    matrix: CMatrix,
    basis: Option<CMatrix>,
    pairs: Vec<SpectralPair>,
}

impl Superoperator {
    /// Wraps an arbitrary `d²×d²` matrix; functions of it go through the dense path.
    pub fn from_matrix(sys_dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = check_square(&matrix)?;
        if n != sys_dim * sys_dim {
            return Err(Error::DimensionMismatch {
                expected: sys_dim * sys_dim,
                found: n,
            });
        }
        Ok(Self {
            sys_dim,
            matrix,
            basis: None,
            pairs: Vec::new(),
        })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Eigenbasis of the generating observable, if any.
    pub fn basis(&self) -> Option<&CMatrix> {
        self.basis.as_ref()
    }

    pub fn spectral_pairs(&self) -> &[SpectralPair] {
        &self.pairs
    }

    /// `(a_j, a_k, a_j − a_k)` for every ordered eigenvalue pair of the generator.
    pub fn eigen_gaps(&self) -> Vec<(f64, f64, f64)> {
        self.pairs
            .iter()
            .map(|p| (p.row_value, p.col_value, p.gap()))
            .collect()
    }

    pub fn spectrum(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.eigenvalue).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let f = C64::new(factor, 0.0);
        Self {
            sys_dim: self.sys_dim,
            matrix: &self.matrix * f,
            basis: self.basis.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|p| SpectralPair {
                    eigenvalue: p.eigenvalue * f,
                    ..*p
                })
                .collect(),
        }
    }

    /// Applies the superoperator matrix to `x`.
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.sys_dim || x.ncols() != self.sys_dim {
            return Err(Error::DimensionMismatch {
                expected: self.sys_dim,
                found: x.nrows(),
            });
        }
        Ok(unvectorize(&(&self.matrix * vectorize(x)), self.sys_dim))
    }
}

fn spectral_superop(
    a: &SystemOperator,
    matrix: CMatrix,
    eigenvalue: impl Fn(f64) -> f64,
) -> Result<Superoperator> {
    let (vals, vecs) = eig_hermitian(a)?;
    let d = vals.len();
    let mut pairs = Vec::with_capacity(d * d);
    for col in 0..d {
        for row in 0..d {
            pairs.push(SpectralPair {
                row,
                col,
                row_value: vals[row],
                col_value: vals[col],
                eigenvalue: C64::new(eigenvalue(vals[row] - vals[col]), 0.0),
            });
        }
    }
    Ok(Superoperator {
        sys_dim: d,
        matrix,
        basis: Some(vecs),
        pairs,
    })
}

fn ad_matrix(a: &CMatrix) -> CMatrix {
    let d = a.nrows();
    let id = CMatrix::identity(d, d);
    id.kronecker(a) - a.transpose().kronecker(&id)
}

/// `ad[A](B) = AB − BA`.
pub fn adjoint_action(a: &SystemOperator) -> Result<Superoperator> {
    spectral_superop(a, ad_matrix(a.matrix()), |gap| gap)
}

/// `L[A] = −ad[A]²/2`.
pub fn lindblad_action(a: &SystemOperator) -> Result<Superoperator> {
    let ad = ad_matrix(a.matrix());
    let matrix = (&ad * &ad) * C64::new(-0.5, 0.0);
    spectral_superop(a, matrix, |gap| -0.5 * gap * gap)
}

/// Evaluates `f(S)(ρ)`.
///
/// Superoperators generated by an observable are handled in its eigenbasis;
/// anything else falls back to [`apply_superop_function_dense`].
pub fn apply_superop_function<F>(f: F, s: &Superoperator, rho: &CMatrix) -> Result<CMatrix>
where
    F: Fn(C64) -> C64,
{
    let Some(v) = s.basis.as_ref() else {
        return apply_superop_function_dense(f, s, rho);
    };
    if rho.nrows() != s.sys_dim || rho.ncols() != s.sys_dim {
        return Err(Error::DimensionMismatch {
            expected: s.sys_dim,
            found: rho.nrows(),
        });
    }
    let mut local = v.adjoint() * rho * v;
    for p in &s.pairs {
        let w = f(p.eigenvalue);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::Domain {
                eigenvalue: p.eigenvalue,
            });
        }
        local[(p.row, p.col)] *= w;
    }
    Ok(v * local * v.adjoint())
}

/// Evaluates `f(S)(ρ)` by diagonalizing the full `d²×d²` matrix.
///
/// Requires a Hermitian superoperator matrix, which covers `ad[A]`, `L[A]`
/// and their real multiples for Hermitian `A`.
pub fn apply_superop_function_dense<F>(f: F, s: &Superoperator, rho: &CMatrix) -> Result<CMatrix>
where
    F: Fn(C64) -> C64,
{
    let scale = max_abs(&s.matrix).max(1.0);
    let dev = hermitian_deviation(&s.matrix);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian { deviation: dev });
    }
    if rho.nrows() != s.sys_dim || rho.ncols() != s.sys_dim {
        return Err(Error::DimensionMismatch {
            expected: s.sys_dim,
            found: rho.nrows(),
        });
    }
    let (vals, vecs) = eigh(&s.matrix);
    let mut coeffs = vecs.adjoint() * vectorize(rho);
    for (c, &lam) in coeffs.iter_mut().zip(&vals) {
        let z = C64::new(lam, 0.0);
        let w = f(z);
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::Domain { eigenvalue: z });
        }
        *c *= w;
    }
    Ok(unvectorize(&(vecs * coeffs), s.sys_dim))
}

/// Expresses `m` in the eigenbasis `v`: `v† m v`.
pub fn to_basis(m: &CMatrix, v: &CMatrix) -> CMatrix {
    v.adjoint() * m * v
}

/// Inverse of [`to_basis`].
pub fn from_basis(m: &CMatrix, v: &CMatrix) -> CMatrix {
    v * m * v.adjoint()
}
