//! Small dense unitaries.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{argument, Result, SimError};
use crate::state::StateVector;

/// Tolerance used when a matrix is admitted as unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// A dense unitary matrix acting on one qubit (2x2) or a full register
/// (2^L x 2^L). Row and column indices follow the register's basis order.
#[derive(Clone, Debug, PartialEq)]
pub struct GateMatrix {
    m: DMatrix<Complex64>,
}

impl GateMatrix {
    /// Admit `m` after checking that it is square and unitary within
    /// [`UNITARITY_TOL`].
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerance(m, UNITARITY_TOL)
    }

    pub fn with_tolerance(m: DMatrix<Complex64>, tol: f64) -> Result<Self> {
        if !m.is_square() || !m.nrows().is_power_of_two() {
            return Err(argument(format!(
                "gate must be square with power-of-two size, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let max_deviation = unitarity_deviation(&m);
        if max_deviation > tol {
            return Err(SimError::NotUnitary { max_deviation });
        }
        Ok(Self { m })
    }

    /// Build from row-major entries.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(argument(format!(
                "expected {} entries for a {dim}x{dim} gate, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            entries,
        )))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    /// Matrix product `self * rhs`: `rhs` acts first.
    pub fn compose(&self, rhs: &GateMatrix) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(argument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.dim(),
                self.dim(),
                rhs.dim(),
                rhs.dim()
            )));
        }
        Ok(Self {
            m: &self.m * &rhs.m,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            m: &self.m * factor,
        }
    }

    /// Tensor product `high ⊗ self`, i.e. `self` acts on the low-order
    /// qubits of the result.
    pub fn kron_under(&self, high: &GateMatrix) -> Self {
        Self {
            m: high.m.kronecker(&self.m),
        }
    }

    /// Embed a single-qubit gate on qubit `target` of an `l`-qubit register.
    pub fn embed(&self, target: usize, l: usize) -> Result<Self> {
        if self.dim() != 2 {
            return Err(argument("only 2x2 gates can be embedded"));
        }
        if target >= l {
            return Err(argument(format!("qubit {target} out of range for L={l}")));
        }
        let mut out = GateMatrix::identity(1);
        for q in 0..l {
            let factor = if q == target {
                self.clone()
            } else {
                GateMatrix::identity(2)
            };
            out = out.kron_under(&factor);
        }
        Ok(out)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.m)
    }

    /// `tr(self^dag other) / dim`. Modulus 1 iff the two unitaries agree up
    /// to a global phase; the argument is that phase.
    pub fn overlap(&self, other: &GateMatrix) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "overlap of gates of different size");
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..d {
            for r in 0..d {
                acc += self.m[(r, c)].conj() * other.m[(r, c)];
            }
        }
        acc / d as f64
    }

    /// Global-phase-insensitive agreement, `|tr(A^dag B)| / dim`.
    pub fn phase_fidelity(&self, other: &GateMatrix) -> f64 {
        self.overlap(other).norm()
    }

    /// Smallest per-column fidelity `|<a_c|b_c>|`, i.e. the worst basis
    /// input.
    pub fn min_column_fidelity(&self, other: &GateMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        (0..self.dim())
            .map(|c| {
                self.m
                    .column(c)
                    .iter()
                    .zip(other.m.column(c).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &GateMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Matrix-vector product on a register of matching dimension.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(argument(format!(
                "gate of size {} applied to state of dimension {}",
                self.dim(),
                state.dim()
            )));
        }
        let d = self.dim();
        let input = state.amplitudes();
        let out: Vec<Complex64> = (0..d)
            .map(|r| (0..d).map(|c| self.m[(r, c)] * input[c]).sum())
            .collect();
        Ok(StateVector::from_amplitudes_unchecked(state.num_qubits(), out))
    }

    /// Column `c` as a state, i.e. the image of basis state `c`.
    pub fn column_state(&self, c: usize) -> StateVector {
        let col: Vec<Complex64> = self.m.column(c).iter().copied().collect();
        StateVector::from_amplitudes_unchecked(self.num_qubits(), col)
    }

    /// Row-major entries of a 2x2 gate, the layout used by the kernels.
    pub(crate) fn as_2x2(&self) -> [Complex64; 4] {
        debug_assert_eq!(self.dim(), 2);
        [
            self.m[(0, 0)],
            self.m[(0, 1)],
            self.m[(1, 0)],
            self.m[(1, 1)],
        ]
    }
}

fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst = 0.0f64;
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}
