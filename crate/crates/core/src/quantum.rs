//! States, operators and the control generator.
//!
//! Density matrices in Liouville space are stored column-major vectorized:
//! `vec(ρ)[i + j·d] = ρ[i, j]`. With that convention `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`,
//! which is what [`superop`] builds on.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{KrotovError, Result};
use crate::linalg::{conj_transpose, is_finite, vector_norm, CMatrix, CVector};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The vector space a state lives in. `d` is the Hilbert space dimension in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Hilbert(usize),
    Liouville(usize),
}

impl Space {
    pub fn hilbert_dim(&self) -> usize {
        match *self {
            Space::Hilbert(d) | Space::Liouville(d) => d,
        }
    }

    /// Length of the state vector (`d` or `d²`).
    pub fn vector_len(&self) -> usize {
        match *self {
            Space::Hilbert(d) => d,
            Space::Liouville(d) => d * d,
        }
    }

    pub fn is_liouville(&self) -> bool {
        matches!(self, Space::Liouville(_))
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Hilbert(d) => write!(f, "Hilbert({d})"),
            Space::Liouville(d) => write!(f, "Liouville({d})"),
        }
    }
}

/// A Hilbert space state or a vectorized density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    data: CVector,
    space: Space,
}

impl QuantumState {
    pub fn new(data: CVector, space: Space) -> Result<Self> {
        if data.len() != space.vector_len() {
            return Err(KrotovError::DimensionMismatch(format!(
                "state of length {} in {space} (expected {})",
                data.len(),
                space.vector_len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(KrotovError::NonFinite("state has non-finite amplitudes".into()));
        }
        Ok(Self { data, space })
    }

    pub fn hilbert(amplitudes: Vec<Complex64>) -> Result<Self> {
        let d = amplitudes.len();
        Self::new(CVector::from(amplitudes), Space::Hilbert(d))
    }

    /// Unit vector `e_index` in a `d`-dimensional Hilbert space.
    pub fn basis(d: usize, index: usize) -> Result<Self> {
        if index >= d {
            return Err(KrotovError::InvalidArgument(format!(
                "basis index {index} out of range for dimension {d}"
            )));
        }
        let mut data = CVector::zeros(d);
        data[index] = Complex64::new(1.0, 0.0);
        Ok(Self { data, space: Space::Hilbert(d) })
    }

    /// Vectorize a `d×d` density matrix column-major.
    pub fn from_density_matrix(rho: &CMatrix) -> Result<Self> {
        let d = rho.nrows();
        if rho.ncols() != d {
            return Err(KrotovError::DimensionMismatch(format!(
                "density matrix is {}x{}",
                d,
                rho.ncols()
            )));
        }
        let data: CVector = rho.t().iter().copied().collect();
        Self::new(data, Space::Liouville(d))
    }

    /// `|ψ⟩⟨ψ|` as a Liouville-space state.
    pub fn pure_density(psi: &QuantumState) -> Result<Self> {
        let v = &psi.data;
        let d = v.len();
        let rho = Array2::from_shape_fn((d, d), |(i, j)| v[i] * v[j].conj());
        Self::from_density_matrix(&rho)
    }

    /// Un-vectorize a Liouville-space state.
    pub fn density_matrix(&self) -> Option<CMatrix> {
        match self.space {
            Space::Liouville(d) => Some(Array2::from_shape_fn((d, d), |(i, j)| self.data[i + j * d])),
            Space::Hilbert(_) => None,
        }
    }

    pub(crate) fn from_parts_unchecked(data: CVector, space: Space) -> Self {
        debug_assert_eq!(data.len(), space.vector_len());
        Self { data, space }
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn norm(&self) -> f64 {
        vector_norm(&self.data)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { data: self.data.mapv(|z| z * factor), space: self.space }
    }

    pub fn zeros_like(&self) -> Self {
        Self { data: CVector::zeros(self.data.len()), space: self.space }
    }

    /// Diagonal of the density matrix, or `|ψ_i|²` for Hilbert states.
    pub fn populations(&self) -> Vec<f64> {
        match self.space {
            Space::Hilbert(_) => self.data.iter().map(|z| z.norm_sqr()).collect(),
            Space::Liouville(d) => (0..d).map(|i| self.data[i + i * d].re).collect(),
        }
    }

    /// Trace of the density matrix; `None` for Hilbert states.
    pub fn trace(&self) -> Option<Complex64> {
        match self.space {
            Space::Liouville(d) => Some((0..d).map(|i| self.data[i + i * d]).sum()),
            Space::Hilbert(_) => None,
        }
    }

    pub fn sub(&self, other: &QuantumState) -> Result<QuantumState> {
        check_same_space(self, other)?;
        Ok(Self { data: &self.data - &other.data, space: self.space })
    }

    pub fn add(&self, other: &QuantumState) -> Result<QuantumState> {
        check_same_space(self, other)?;
        Ok(Self { data: &self.data + &other.data, space: self.space })
    }
}

fn check_same_space(a: &QuantumState, b: &QuantumState) -> Result<()> {
    if a.space != b.space {
        return Err(KrotovError::SpaceMismatch(format!("{} vs {}", a.space, b.space)));
    }
    Ok(())
}

/// `⟨a|b⟩`, conjugate-linear in `a`. On vectorized density matrices this is `tr(A† B)`.
pub fn inner(a: &QuantumState, b: &QuantumState) -> Result<Complex64> {
    check_same_space(a, b)?;
    Ok(a.data.iter().zip(b.data.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Dense complex square matrix acting on a state space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
}

impl Operator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(KrotovError::DimensionMismatch(format!(
                "operator is {}x{}, must be square",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_finite(&matrix) {
            return Err(KrotovError::NonFinite("operator has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    /// Build from rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(KrotovError::DimensionMismatch(format!(
                "row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
    }

    pub fn real(rows: &[&[f64]]) -> Result<Self> {
        let converted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&converted)
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: crate::linalg::identity(n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: CMatrix::zeros((n, n)) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Operator {
        Operator { matrix: conj_transpose(&self.matrix) }
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator { matrix: self.matrix.mapv(|z| z * factor) }
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(KrotovError::DimensionMismatch(format!(
                "adding {}x{0} and {}x{1} operators",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Operator { matrix: &self.matrix + &other.matrix })
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.dim() != other.dim() {
            return Err(KrotovError::DimensionMismatch(format!(
                "multiplying {}x{0} and {}x{1} operators",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Operator { matrix: self.matrix.dot(&other.matrix) })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - &conj_transpose(&self.matrix)).iter().all(|z| z.norm() <= tol)
    }

    pub fn apply(&self, s: &QuantumState) -> Result<QuantumState> {
        apply(self, s)
    }
}

/// Matrix-vector product `op · s`.
pub fn apply(op: &Operator, s: &QuantumState) -> Result<QuantumState> {
    if op.dim() != s.data.len() {
        return Err(KrotovError::DimensionMismatch(format!(
            "{}x{0} operator applied to state of length {}",
            op.dim(),
            s.data.len()
        )));
    }
    Ok(QuantumState { data: op.matrix.dot(&s.data), space: s.space })
}

pub fn adjoint(op: &Operator) -> Operator {
    op.adjoint()
}

/// Rewrite `ε* â + ε â†` as `ε_re (â + â†) + ε_im (i â† − i â)`.
///
/// Returns the two operators that couple to the independent real controls
/// `Re ε` and `Im ε`.
pub fn split_complex_control(coupling: &Operator) -> (Operator, Operator) {
    let a = coupling.matrix();
    let a_dag = conj_transpose(a);
    let re_part = a + &a_dag;
    let im_part = (&a_dag - a).mapv(|z| z * I);
    (Operator { matrix: re_part }, Operator { matrix: im_part })
}

/// A term `ε_l(t) · coupling` of a generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTerm {
    pub coupling: Operator,
    pub control_index: usize,
}

/// Drift plus linear control terms.
///
/// For [`Space::Hilbert`] the operators form the Hamiltonian. For
/// [`Space::Liouville`] they form the Liouvillian `L` of `∂ρ/∂t = L ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    drift: Operator,
    controls: Vec<ControlTerm>,
    space: Space,
}

impl Generator {
    pub fn new(drift: Operator, controls: Vec<ControlTerm>, space: Space) -> Result<Self> {
        let n = space.vector_len();
        if drift.dim() != n {
            return Err(KrotovError::DimensionMismatch(format!(
                "drift is {}x{0}, {space} needs {n}x{n}",
                drift.dim()
            )));
        }
        for (i, term) in controls.iter().enumerate() {
            if term.coupling.dim() != n {
                return Err(KrotovError::DimensionMismatch(format!(
                    "control term {i} is {}x{0}, {space} needs {n}x{n}",
                    term.coupling.dim()
                )));
            }
        }
        Ok(Self { drift, controls, space })
    }

    pub fn hilbert(drift: Operator, controls: Vec<(Operator, usize)>) -> Result<Self> {
        let d = drift.dim();
        let controls = controls
            .into_iter()
            .map(|(coupling, control_index)| ControlTerm { coupling, control_index })
            .collect();
        Self::new(drift, controls, Space::Hilbert(d))
    }

    pub fn drift(&self) -> &Operator {
        &self.drift
    }

    pub fn controls(&self) -> &[ControlTerm] {
        &self.controls
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Number of control values the generator needs (one past the largest index).
    pub fn required_controls(&self) -> usize {
        self.controls.iter().map(|t| t.control_index + 1).max().unwrap_or(0)
    }

    /// Sorted, de-duplicated control indices referenced by this generator.
    pub fn control_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.controls.iter().map(|t| t.control_index).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// `drift + Σ_l eps[l] · coupling_l`.
    pub fn evaluate(&self, eps: &[f64]) -> Result<Operator> {
        let mut m = self.drift.matrix.clone();
        for term in &self.controls {
            let value = *eps.get(term.control_index).ok_or(KrotovError::MissingControl {
                index: term.control_index,
                available: eps.len(),
            })?;
            if value != 0.0 {
                m.zip_mut_with(&term.coupling.matrix, |a, &b| *a += b * value);
            }
        }
        Ok(Operator { matrix: m })
    }

    /// The operator `H` of the equation of motion written as `i φ̇ = H φ`.
    ///
    /// That is the Hamiltonian itself in Hilbert space and `i·L` in Liouville space.
    pub fn eom_operator(&self, eps: &[f64]) -> Result<Operator> {
        let g = self.evaluate(eps)?;
        Ok(match self.space {
            Space::Hilbert(_) => g,
            Space::Liouville(_) => g.scale(I),
        })
    }

    /// `∂H/∂ε_l` in the `i φ̇ = H φ` form, summed over all terms with this control index.
    ///
    /// Returns `None` when the generator does not depend on control `l`.
    pub fn eom_derivative(&self, control: usize) -> Option<Operator> {
        let mut acc: Option<CMatrix> = None;
        for term in self.controls.iter().filter(|t| t.control_index == control) {
            match acc.as_mut() {
                Some(m) => *m += &term.coupling.matrix,
                None => acc = Some(term.coupling.matrix.clone()),
            }
        }
        acc.map(|m| {
            let op = Operator { matrix: m };
            match self.space {
                Space::Hilbert(_) => op,
                Space::Liouville(_) => op.scale(I),
            }
        })
    }

    /// Same generator with every control index remapped through `f`.
    pub fn with_control_indices(&self, f: impl Fn(usize) -> usize) -> Self {
        let controls = self
            .controls
            .iter()
            .map(|t| ControlTerm { coupling: t.coupling.clone(), control_index: f(t.control_index) })
            .collect();
        Self { drift: self.drift.clone(), controls, space: self.space }
    }
}

/// Free function form of [`Generator::evaluate`].
pub fn evaluate_generator(g: &Generator, eps: &[f64]) -> Result<Operator> {
    g.evaluate(eps)
}

/// Superoperator builders for the column-major vectorization convention.
pub mod superop {
    use super::*;

    pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ar, ac) = a.dim();
        let (br, bc) = b.dim();
        Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
    }

    /// Superoperator of `ρ ↦ A ρ`.
    pub fn left(a: &Operator) -> Operator {
        let d = a.dim();
        Operator { matrix: kron(&crate::linalg::identity(d), a.matrix()) }
    }

    /// Superoperator of `ρ ↦ ρ B`.
    pub fn right(b: &Operator) -> Operator {
        let d = b.dim();
        Operator { matrix: kron(&b.matrix().t().to_owned(), &crate::linalg::identity(d)) }
    }

    /// `ρ ↦ −i [H, ρ]`, the closed-system Liouvillian.
    pub fn commutator_liouvillian(h: &Operator) -> Operator {
        let m = &left(h).matrix - &right(h).matrix;
        Operator { matrix: m.mapv(|z| z * -I) }
    }

    /// `ρ ↦ L ρ L† − ½ {L†L, ρ}`.
    pub fn dissipator(l: &Operator) -> Operator {
        let ldl = l.adjoint().matmul(l).expect("same dimension");
        let jump = kron(&l.matrix().mapv(|z| z.conj()), l.matrix());
        let m = jump - (&left(&ldl).matrix + &right(&ldl).matrix).mapv(|z| z * 0.5);
        Operator { matrix: m }
    }

    /// Lindblad-form Liouvillian `−i[H, ·] + Σ_j D[L_j]`.
    pub fn lindblad(h: &Operator, jump_ops: &[Operator]) -> Result<Operator> {
        let mut l = commutator_liouvillian(h);
        for op in jump_ops {
            if op.dim() != h.dim() {
                return Err(KrotovError::DimensionMismatch(format!(
                    "jump operator is {}x{0}, Hamiltonian is {}x{1}",
                    op.dim(),
                    h.dim()
                )));
            }
            l = l.add(&dissipator(op))?;
        }
        Ok(l)
    }
}
