//! Density operators, bipartite states, partial traces and entropies.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Tolerance for unit trace and for the PSD check on the minimum eigenvalue.
pub const STATE_TOL: f64 = 1e-9;

/// Eigenvalues below this contribute nothing to entropies.
pub const ENTROPY_CUTOFF: f64 = 1e-12;

/// Which factor of `ℋ^A ⊗ ℋ^B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::A => f.write_str("A"),
            Subsystem::B => f.write_str("B"),
        }
    }
}

/// A positive semidefinite, unit-trace operator.
///
/// Construction validates the matrix. Inputs within tolerance of the PSD cone
/// are projected onto it and renormalized, so every value of this type is a
/// state up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
}

impl DensityOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("zero-dimensional state".into()));
        }
        let scale = matrix.norm().max(1.0);
        let defect = linalg::hermitian_defect(&matrix);
        if !(defect <= linalg::HERMITIAN_TOL * scale) {
            return Err(Error::NotHermitian { defect });
        }
        let trace = linalg::trace_re(&matrix);
        if !((trace - 1.0).abs() <= STATE_TOL) {
            return Err(Error::NotUnitTrace { trace });
        }
        let hermitian = linalg::hermitian_part(&matrix);
        let min_eigenvalue = linalg::min_eigenvalue(&hermitian);
        if min_eigenvalue < -STATE_TOL {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        let matrix = if min_eigenvalue < 0.0 {
            let clipped = linalg::hermitian_map(&hermitian, |x| x.max(0.0));
            let t = linalg::trace_re(&clipped);
            clipped / c(t, 0.0)
        } else {
            hermitian
        };
        Ok(Self { matrix })
    }

    /// Normalizes the trace first; useful for unnormalized PSD operators.
    pub fn from_unnormalized(matrix: CMat) -> Result<Self> {
        let t = linalg::trace_re(&matrix);
        if !(t > 0.0) {
            return Err(Error::NotUnitTrace { trace: t });
        }
        Self::new(matrix / c(t, 0.0))
    }

    pub fn pure(vector: &CVec) -> Result<Self> {
        let norm = vector.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        Self::new(linalg::outer(&(vector / c(norm, 0.0))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: linalg::identity(dim) / c(dim as f64, 0.0) }
    }

    /// `|index⟩⟨index|`
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut matrix = CMat::zeros(dim, dim);
        matrix[(index, index)] = linalg::ONE;
        Self { matrix }
    }

    /// Internal results that are states by construction, up to rounding.
    pub(crate) fn from_trusted(matrix: CMat) -> Self {
        Self { matrix: linalg::hermitian_part(&matrix) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(Self::from_trusted(&self.matrix * c(w, 0.0) + &other.matrix * c(1.0 - w, 0.0)))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }
}

/// A state on `ℋ^A ⊗ ℋ^B`, B index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    state: DensityOperator,
}

impl BipartiteState {
    pub fn new(dim_a: usize, dim_b: usize, state: DensityOperator) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidParameter("subsystem dimensions must be positive".into()));
        }
        if state.dim() != dim_a * dim_b {
            return Err(Error::DimensionMismatch { expected: dim_a * dim_b, actual: state.dim() });
        }
        Ok(Self { dim_a, dim_b, state })
    }

    pub fn from_matrix(dim_a: usize, dim_b: usize, matrix: CMat) -> Result<Self> {
        Self::new(dim_a, dim_b, DensityOperator::new(matrix)?)
    }

    pub fn product(a: &DensityOperator, b: &DensityOperator) -> Self {
        Self { dim_a: a.dim(), dim_b: b.dim(), state: tensor(a, b) }
    }

    pub(crate) fn from_trusted(dim_a: usize, dim_b: usize, matrix: CMat) -> Self {
        debug_assert_eq!(matrix.nrows(), dim_a * dim_b);
        Self { dim_a, dim_b, state: DensityOperator::from_trusted(matrix) }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_a, self.dim_b)
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }

    pub fn matrix(&self) -> &CMat {
        self.state.matrix()
    }

    pub fn reduced(&self, keep: Subsystem) -> DensityOperator {
        partial_trace(self, keep)
    }

    /// `w·self + (1−w)·other`
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch { expected: self.state.dim(), actual: other.state.dim() });
        }
        Ok(Self { dim_a: self.dim_a, dim_b: self.dim_b, state: self.state.mix(&other.state, w)? })
    }
}

/// Kronecker product of two states.
pub fn tensor(x: &DensityOperator, y: &DensityOperator) -> DensityOperator {
    DensityOperator::from_trusted(linalg::kron(x.matrix(), y.matrix()))
}

pub fn partial_trace(rho: &BipartiteState, keep: Subsystem) -> DensityOperator {
    DensityOperator::from_trusted(partial_trace_matrix(rho.matrix(), rho.dim_a, rho.dim_b, keep))
}

/// Partial trace of an arbitrary operator on `ℋ^A ⊗ ℋ^B`.
pub fn partial_trace_matrix(m: &CMat, dim_a: usize, dim_b: usize, keep: Subsystem) -> CMat {
    assert_eq!(m.nrows(), dim_a * dim_b, "partial trace: dimension mismatch");
    match keep {
        Subsystem::A => CMat::from_fn(dim_a, dim_a, |i, j| (0..dim_b).map(|b| m[(i * dim_b + b, j * dim_b + b)]).sum()),
        Subsystem::B => CMat::from_fn(dim_b, dim_b, |i, j| (0..dim_a).map(|a| m[(a * dim_b + i, a * dim_b + j)]).sum()),
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(rho.matrix())
}

pub(crate) fn entropy_of_matrix(m: &CMat) -> f64 {
    shannon_bits(&linalg::eigvalsh(m))
}

pub(crate) fn shannon_bits(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|&&x| x > ENTROPY_CUTOFF).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn bell() -> BipartiteState {
        let s = 0.5f64.sqrt();
        let v = CVec::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        BipartiteState::new(2, 2, DensityOperator::pure(&v).unwrap()).unwrap()
    }

    #[test]
    fn tensor_of_maximally_mixed() {
        let m = tensor(&DensityOperator::maximally_mixed(2), &DensityOperator::maximally_mixed(2));
        assert!((m.matrix() - linalg::identity(4) * c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_of_basis_states() {
        let m = tensor(&DensityOperator::basis_state(2, 0), &DensityOperator::basis_state(2, 1));
        assert_eq!(m.matrix()[(1, 1)], ONE);
        assert!((m.matrix().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let r = bell().reduced(Subsystem::A);
        assert!(r.distance(&DensityOperator::maximally_mixed(2)) < 1e-15);
    }

    #[test]
    fn entropy_values() {
        assert!(von_neumann_entropy(&DensityOperator::basis_state(3, 1)).abs() < 1e-15);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(2)) - 1.0).abs() < 1e-14);
        let d = DensityOperator::new(CMat::from_diagonal(&CVec::from_vec(vec![c(0.25, 0.0), c(0.75, 0.0)]))).unwrap();
        let direct = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((von_neumann_entropy(&d) - direct).abs() < 1e-14);
        assert!((direct - 0.811_278_124_459_132_9).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let not_herm = CMat::from_row_slice(2, 2, &[c(0.5, 0.0), ONE, ZERO, c(0.5, 0.0)]);
        assert!(matches!(DensityOperator::new(not_herm), Err(Error::NotHermitian { .. })));
        let bad_trace = linalg::identity(2);
        assert!(matches!(DensityOperator::new(bad_trace), Err(Error::NotUnitTrace { .. })));
        let negative = CMat::from_diagonal(&CVec::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(matches!(DensityOperator::new(negative), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0 + 1e-10, 0.0), c(-1e-10, 0.0)]));
        let rho = DensityOperator::new(m).unwrap();
        assert!(rho.eigenvalues()[0] >= 0.0);
        assert!((linalg::trace_re(rho.matrix()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bipartite_dimension_mismatch() {
        let err = BipartiteState::new(2, 3, DensityOperator::maximally_mixed(4)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 6, actual: 4 }));
    }
}
