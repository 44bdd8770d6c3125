//! CPTP maps in Kraus, Choi and real-transfer form.
//!
//! Choi convention: `J(Φ) = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input slot first and
//! unnormalized, so `tr_out J = 𝟙_in` for trace-preserving maps. Kraus
//! operators are the stored representation; the Choi matrix and the real
//! transfer matrix are computed once on demand and cached.

use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::HermitianBasis;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, RMat};
use crate::state::{BipartiteState, DensityOperator, Subsystem};

/// Default tolerance for trace preservation and Choi positivity.
pub const CPTP_TOL: f64 = 1e-9;

/// Singular values below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-8;

/// Choi eigenvalues below this (relative) are dropped when extracting Kraus operators.
const KRAUS_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelForm {
    Kraus,
    Choi,
    RealTransfer,
}

#[derive(Debug, Clone)]
pub struct QuantumChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMat>,
    choi: OnceLock<CMat>,
    transfer: OnceLock<TransferMatrix>,
}

impl QuantumChannel {
    pub fn from_kraus(d_in: usize, d_out: usize, kraus: Vec<CMat>) -> Result<Self> {
        Self::from_kraus_with_tol(d_in, d_out, kraus, CPTP_TOL)
    }

    pub fn from_kraus_with_tol(d_in: usize, d_out: usize, kraus: Vec<CMat>, tol: f64) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidParameter("channel dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("empty Kraus set".into()));
        }
        for k in &kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch { expected: d_out * d_in, actual: k.nrows() * k.ncols() });
            }
        }
        let total = kraus.iter().fold(CMat::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k);
        let defect = (total - linalg::identity(d_in)).norm();
        if !(defect <= tol) {
            return Err(Error::NotTracePreserving { defect });
        }
        Ok(Self::from_kraus_unchecked(d_in, d_out, kraus))
    }

    pub(crate) fn from_kraus_unchecked(d_in: usize, d_out: usize, kraus: Vec<CMat>) -> Self {
        Self { d_in, d_out, kraus, choi: OnceLock::new(), transfer: OnceLock::new() }
    }

    /// Channel from its Choi matrix; Kraus operators come from the Choi
    /// eigendecomposition in descending eigenvalue order.
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMat) -> Result<Self> {
        Self::from_choi_with_tol(d_in, d_out, choi, CPTP_TOL)
    }

    pub fn from_choi_with_tol(d_in: usize, d_out: usize, choi: CMat, tol: f64) -> Result<Self> {
        let n = d_in * d_out;
        if choi.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n * n, actual: choi.nrows() * choi.ncols() });
        }
        let scale = choi.norm().max(1.0);
        let defect = linalg::hermitian_defect(&choi);
        if !(defect <= tol * scale) {
            return Err(Error::NotHermitian { defect });
        }
        let tp_defect = (crate::state::partial_trace_matrix(&choi, d_in, d_out, Subsystem::A) - linalg::identity(d_in)).norm();
        if !(tp_defect <= tol) {
            return Err(Error::NotTracePreserving { defect: tp_defect });
        }
        let (values, vectors) = linalg::eigh(&choi);
        if values[0] < -tol * scale {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: values[0] });
        }
        let kraus = kraus_from_eigen(d_in, d_out, &values, &vectors);
        let channel = Self::from_kraus_unchecked(d_in, d_out, kraus);
        let _ = channel.choi.set(linalg::hermitian_part(&choi));
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_kraus_unchecked(dim, dim, vec![linalg::identity(dim)])
    }

    pub fn unitary(u: &CMat) -> Result<Self> {
        let defect = linalg::orthonormality_defect(u);
        if !u.is_square() || defect > CPTP_TOL {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Self::from_kraus_unchecked(u.ncols(), u.nrows(), vec![u.clone()]))
    }

    /// Replacement channel `X ↦ tr[X]·σ` on a `d_in`-dimensional input.
    pub fn point(d_in: usize, sigma: &DensityOperator) -> Self {
        let d_out = sigma.dim();
        let (values, vectors) = linalg::eigh(sigma.matrix());
        let mut kraus = Vec::new();
        for (m, &mu) in values.iter().enumerate().rev() {
            if mu <= KRAUS_CUTOFF {
                continue;
            }
            for n in 0..d_in {
                let mut k = CMat::zeros(d_out, d_in);
                for a in 0..d_out {
                    k[(a, n)] = vectors[(a, m)] * mu.sqrt();
                }
                kraus.push(k);
            }
        }
        Self::from_kraus_unchecked(d_in, d_out, kraus)
    }

    /// Quantum-classical channel `X ↦ Σ_k tr[F_k X] |k⟩⟨k|`.
    pub fn quantum_classical(povm: &[CMat], basis: &[CVec]) -> Result<Self> {
        if povm.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        if povm.len() != basis.len() {
            return Err(Error::InvalidPovm(format!("{} elements but {} basis vectors", povm.len(), basis.len())));
        }
        let d_in = povm[0].nrows();
        let d_out = basis[0].len();
        let mut total = CMat::zeros(d_in, d_in);
        for (k, f) in povm.iter().enumerate() {
            if f.shape() != (d_in, d_in) {
                return Err(Error::InvalidPovm(format!("element {k} has shape {:?}", f.shape())));
            }
            if !linalg::is_hermitian(f) {
                return Err(Error::InvalidPovm(format!("element {k} is not Hermitian")));
            }
            let min = linalg::min_eigenvalue(f);
            if min < -CPTP_TOL {
                return Err(Error::InvalidPovm(format!("element {k} has eigenvalue {min:.3e}")));
            }
            total += f;
        }
        let defect = (total - linalg::identity(d_in)).norm();
        if defect > CPTP_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {defect:.3e}")));
        }
        if basis.iter().any(|v| v.len() != d_out) {
            return Err(Error::InvalidParameter("basis vectors have different lengths".into()));
        }
        let frame = CMat::from_columns(basis);
        let defect = linalg::orthonormality_defect(&frame);
        if defect > CPTP_TOL {
            return Err(Error::NotOrthonormal { defect });
        }
        let mut kraus = Vec::new();
        for (f, v) in povm.iter().zip(basis) {
            let (values, vectors) = linalg::eigh(f);
            for (m, &mu) in values.iter().enumerate() {
                if mu <= KRAUS_CUTOFF {
                    continue;
                }
                let u = vectors.column(m);
                kraus.push(v * u.adjoint() * c(mu.sqrt(), 0.0));
            }
        }
        Ok(Self::from_kraus_unchecked(d_in, d_out, kraus))
    }

    /// Complete dephasing in the computational basis.
    pub fn dephasing(dim: usize) -> Self {
        let kraus = (0..dim).map(|k| linalg::outer(&linalg::basis_vector(dim, k))).collect();
        Self::from_kraus_unchecked(dim, dim, kraus)
    }

    /// `X ↦ λX + (1−λ) tr[X] 𝟙/d`, CPTP for `−1/(d²−1) ≤ λ ≤ 1`.
    pub fn depolarizing(dim: usize, lambda: f64) -> Result<Self> {
        let d = dim as f64;
        let choi = choi_of_linear_map(dim, dim, |x| x * c(lambda, 0.0) + linalg::identity(dim) * (x.trace() * ((1.0 - lambda) / d)));
        Self::from_choi(dim, dim, choi)
    }

    pub fn unital_qubit(params: UnitalQubitParams) -> Result<Self> {
        if !params.is_cptp(1e-12) {
            return Err(Error::OutsideTetrahedron(params.l1, params.l2, params.l3));
        }
        let paulis = linalg::paulis();
        let lambdas = [1.0, params.l1, params.l2, params.l3];
        let choi = choi_of_linear_map(2, 2, |x| {
            paulis.iter().zip(lambdas).fold(CMat::zeros(2, 2), |acc, (p, l)| acc + p * ((p * x).trace() * (0.5 * l)))
        });
        Self::from_choi(2, 2, choi)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn choi(&self) -> &CMat {
        self.choi.get_or_init(|| {
            let n = self.d_in * self.d_out;
            let mut j = CMat::zeros(n, n);
            for k in &self.kraus {
                let v = vectorize(k);
                j += &v * v.adjoint();
            }
            j
        })
    }

    /// Real transfer matrix `T_ab = tr[G_a Φ(G_b)]` in the generalized Gell-Mann bases.
    pub fn real_transfer(&self) -> &TransferMatrix {
        self.transfer.get_or_init(|| {
            let basis_in = HermitianBasis::new(self.d_in);
            let basis_out = HermitianBasis::new(self.d_out);
            let images: Vec<CMat> = basis_in.elements().iter().map(|g| self.apply_matrix(g)).collect();
            let matrix = RMat::from_fn(basis_out.len(), basis_in.len(), |a, b| (&basis_out.elements()[a] * &images[b]).trace().re);
            TransferMatrix::new(matrix)
        })
    }

    /// Kraus operators recomputed from the Choi eigendecomposition,
    /// eigenvalue-descending.
    pub fn canonical_kraus(&self) -> Vec<CMat> {
        let (values, vectors) = linalg::eigh(self.choi());
        kraus_from_eigen(self.d_in, self.d_out, &values, &vectors)
    }

    pub fn representation(&self, form: ChannelForm) -> Representation {
        match form {
            ChannelForm::Kraus => Representation::Kraus(self.kraus.clone()),
            ChannelForm::Choi => Representation::Choi(self.choi().clone()),
            ChannelForm::RealTransfer => Representation::RealTransfer(self.real_transfer().matrix.clone()),
        }
    }

    /// `Σ_k K_k X K_k†` for any operator `X`.
    pub fn apply_matrix(&self, x: &CMat) -> CMat {
        assert_eq!(x.nrows(), self.d_in, "apply: dimension mismatch");
        self.kraus.iter().fold(CMat::zeros(self.d_out, self.d_out), |acc, k| acc + k * x * k.adjoint())
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, actual: rho.dim() });
        }
        DensityOperator::new(self.apply_matrix(rho.matrix()))
    }

    /// Apply a channel on `ℋ^A⊗ℋ^B` that keeps the bipartite dimensions.
    pub fn apply_bipartite(&self, rho: &BipartiteState) -> Result<BipartiteState> {
        if self.d_out != self.d_in {
            return Err(Error::DimensionMismatch { expected: self.d_in, actual: self.d_out });
        }
        BipartiteState::new(rho.dim_a(), rho.dim_b(), self.apply(rho.state())?)
    }

    /// `outer ∘ inner`
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self> {
        if outer.d_in != inner.d_out {
            return Err(Error::DimensionMismatch { expected: outer.d_in, actual: inner.d_out });
        }
        let mut kraus = Vec::with_capacity(outer.kraus.len() * inner.kraus.len());
        for k2 in &outer.kraus {
            for k1 in &inner.kraus {
                kraus.push(k2 * k1);
            }
        }
        Ok(Self::from_kraus_unchecked(inner.d_in, outer.d_out, kraus).compressed())
    }

    /// `then ∘ self`
    pub fn then(&self, then: &Self) -> Result<Self> {
        Self::compose(then, self)
    }

    /// `Φ ⊗ 𝒥` (side A) or `𝒥 ⊗ Φ` (side B) on a bipartite system.
    pub fn extend(&self, side: Subsystem, d_other: usize) -> Self {
        let id = linalg::identity(d_other);
        let kraus = self
            .kraus
            .iter()
            .map(|k| match side {
                Subsystem::A => linalg::kron(k, &id),
                Subsystem::B => linalg::kron(&id, k),
            })
            .collect();
        let (d_in, d_out) = match side {
            Subsystem::A => (self.d_in * d_other, self.d_out * d_other),
            Subsystem::B => (d_other * self.d_in, d_other * self.d_out),
        };
        Self::from_kraus_unchecked(d_in, d_out, kraus)
    }

    /// `a ⊗ b`
    pub fn tensor(a: &Self, b: &Self) -> Self {
        let mut kraus = Vec::with_capacity(a.kraus.len() * b.kraus.len());
        for ka in &a.kraus {
            for kb in &b.kraus {
                kraus.push(linalg::kron(ka, kb));
            }
        }
        Self::from_kraus_unchecked(a.d_in * b.d_in, a.d_out * b.d_out, kraus).compressed()
    }

    /// Convex mixture `Σ w_i Φ_i`; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &Self)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidParameter("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > CPTP_TOL {
            return Err(Error::InvalidParameter("mixture weights must be a probability vector".into()));
        }
        let mut kraus = Vec::new();
        for (w, ch) in parts {
            if (ch.d_in, ch.d_out) != (first.d_in, first.d_out) {
                return Err(Error::DimensionMismatch { expected: first.d_in * first.d_out, actual: ch.d_in * ch.d_out });
            }
            kraus.extend(ch.kraus.iter().map(|k| k * c(w.sqrt(), 0.0)));
        }
        Ok(Self::from_kraus_unchecked(first.d_in, first.d_out, kraus).compressed())
    }

    /// Frobenius distance between Choi matrices.
    pub fn choi_distance(&self, other: &Self) -> f64 {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return f64::INFINITY;
        }
        (self.choi() - other.choi()).norm()
    }

    /// Trace-preservation and complete-positivity defects.
    pub fn cptp_defects(&self) -> (f64, f64) {
        let j = self.choi();
        let tp = (crate::state::partial_trace_matrix(j, self.d_in, self.d_out, Subsystem::A) - linalg::identity(self.d_in)).norm();
        let min = linalg::min_eigenvalue(j);
        (tp, (-min).max(0.0))
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        let (tp, cp) = self.cptp_defects();
        tp <= tol && cp <= tol
    }

    /// Reduce the Kraus count to the Choi rank once it exceeds `d_in·d_out`.
    fn compressed(self) -> Self {
        if self.kraus.len() <= self.d_in * self.d_out {
            return self;
        }
        let kraus = self.canonical_kraus();
        Self::from_kraus_unchecked(self.d_in, self.d_out, kraus)
    }
}

/// The representation requested through [`QuantumChannel::representation`].
#[derive(Debug, Clone)]
pub enum Representation {
    Kraus(Vec<CMat>),
    Choi(CMat),
    RealTransfer(RMat),
}

fn kraus_from_eigen(d_in: usize, d_out: usize, values: &[f64], vectors: &CMat) -> Vec<CMat> {
    let top = values.last().copied().unwrap_or(0.0).max(1.0);
    let mut kraus = Vec::new();
    for m in (0..values.len()).rev() {
        let mu = values[m];
        if mu <= KRAUS_CUTOFF * top {
            continue;
        }
        let s = mu.sqrt();
        kraus.push(CMat::from_fn(d_out, d_in, |a, i| vectors[(i * d_out + a, m)] * s));
    }
    if kraus.is_empty() {
        kraus.push(CMat::zeros(d_out, d_in));
    }
    kraus
}

/// `vec(K)_{(i,a)} = K_{a,i}` so that `J = Σ vec(K) vec(K)†`.
fn vectorize(k: &CMat) -> CVec {
    let (d_out, d_in) = k.shape();
    CVec::from_fn(d_in * d_out, |r, _| k[(r % d_out, r / d_out)])
}

/// Choi matrix of an arbitrary linear map given as a closure.
pub fn choi_of_linear_map(d_in: usize, d_out: usize, map: impl Fn(&CMat) -> CMat) -> CMat {
    let n = d_in * d_out;
    let mut j = CMat::zeros(n, n);
    for i in 0..d_in {
        for k in 0..d_in {
            let mut unit = CMat::zeros(d_in, d_in);
            unit[(i, k)] = linalg::ONE;
            let image = map(&unit);
            for a in 0..d_out {
                for b in 0..d_out {
                    j[(i * d_out + a, k * d_out + b)] = image[(a, b)];
                }
            }
        }
    }
    j
}

/// Real transfer matrix with its singular values and a log-domain determinant.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: RMat,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// `+1`, `-1`, or `0` when LU hits an exact zero pivot. Only meaningful for square matrices.
    pub det_sign: f64,
    /// `Σ log σ_i`.
    pub log_abs_det: f64,
}

impl TransferMatrix {
    pub fn new(matrix: RMat) -> Self {
        let mut singular_values: Vec<f64> = matrix.clone().singular_values().iter().copied().collect();
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let top = singular_values.first().copied().unwrap_or(0.0);
        let rank = singular_values.iter().filter(|&&s| s >= RANK_TOL * top).count();
        let log_abs_det = singular_values.iter().map(|s| s.ln()).sum();
        let det_sign = if matrix.is_square() { matrix.clone().lu().determinant().signum() } else { 0.0 };
        let det_sign = if det_sign.is_nan() { 0.0 } else { det_sign };
        Self { matrix, singular_values, rank, det_sign, log_abs_det }
    }

    pub fn min_singular_value(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn max_singular_value(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// `σ_min < RANK_TOL · σ_max`
    pub fn is_singular(&self) -> bool {
        self.min_singular_value() < RANK_TOL * self.max_singular_value()
    }

    pub fn is_full_rank(&self) -> bool {
        self.matrix.is_square() && self.rank == self.matrix.nrows()
    }

    pub fn determinant(&self) -> f64 {
        if !self.is_full_rank() {
            return 0.0;
        }
        self.det_sign * self.log_abs_det.exp()
    }

    pub fn singular_values_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.singular_values.clone())
    }
}

/// Bloch contraction factors of a unital qubit channel in Pauli form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitalQubitParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl UnitalQubitParams {
    pub fn new(l1: f64, l2: f64, l3: f64) -> Self {
        Self { l1, l2, l3 }
    }

    /// Inside the tetrahedron with vertices (1,1,1), (1,−1,−1), (−1,1,−1), (−1,−1,1).
    pub fn is_cptp(&self, tol: f64) -> bool {
        let Self { l1, l2, l3 } = *self;
        (l1 + l2).abs() <= 1.0 + l3 + tol && (l1 - l2).abs() <= 1.0 - l3 + tol
    }
}
