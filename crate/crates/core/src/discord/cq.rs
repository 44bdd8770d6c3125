use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::random;
use crate::state::{BipartiteState, DensityOperator, Subsystem};

/// Default relative tolerance for [`is_cq_exact`].
pub const CQ_TOL: f64 = 1e-8;

const DECOMPOSE_ATTEMPTS: usize = 5;
const DECOMPOSE_SEED: u64 = 0x0c0f_fee5;

/// `‖[ρ, ρ_A⊗𝟙]‖_F / max(1, ‖ρ‖_F)`.
///
/// Vanishes on every classical-quantum state but is only a necessary
/// condition: it also vanishes whenever `ρ_A` is maximally mixed.
pub fn cq_commutator_residual(rho: &BipartiteState) -> f64 {
    let rho_a = rho.reduced(Subsystem::A);
    let lifted = linalg::kron(rho_a.matrix(), &linalg::identity(rho.dim_b()));
    linalg::commutator(rho.matrix(), &lifted).norm() / rho.matrix().norm().max(1.0)
}

/// B-indexed blocks `A_ij = ⟨i|_B ρ |j⟩_B`, each `dim_a × dim_a`, row-major over `(i, j)`.
pub fn blocks_over_b(rho: &BipartiteState) -> Vec<CMat> {
    blocks_of(rho.matrix(), rho.dim_a(), rho.dim_b())
}

pub(crate) fn blocks_of(m: &CMat, da: usize, db: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(db * db);
    for i in 0..db {
        for j in 0..db {
            out.push(CMat::from_fn(da, da, |a, a2| m[(a * db + i, a2 * db + j)]));
        }
    }
    out
}

/// Which block condition failed worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqWitness {
    /// `‖[A_first, A_second]‖` is the largest defect.
    NonCommuting { first: (usize, usize), second: (usize, usize) },
    /// `‖[A_ij, A_ij†]‖` is the largest defect.
    NonNormal { block: (usize, usize) },
}

#[derive(Debug, Clone)]
pub struct CqCheck {
    pub is_cq: bool,
    /// Largest block defect divided by `‖ρ‖_F`.
    pub residual: f64,
    /// The worst-offending pair, present whenever the residual is nonzero.
    pub witness: Option<CqWitness>,
}

/// Exact classical-quantum test: the blocks `A_ij` must be mutually commuting
/// normal operators.
pub fn is_cq_exact(rho: &BipartiteState, tol: f64) -> CqCheck {
    is_cq_matrix(rho.matrix(), rho.dim_a(), rho.dim_b(), tol)
}

pub(crate) fn is_cq_matrix(m: &CMat, da: usize, db: usize, tol: f64) -> CqCheck {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let blocks = blocks_of(m, da, db);
    let index = |k: usize| (k / db, k % db);
    let mut worst = 0.0f64;
    let mut witness = None;
    for (k, x) in blocks.iter().enumerate() {
        let normal = linalg::commutator(x, &x.adjoint()).norm();
        if normal > worst {
            worst = normal;
            witness = Some(CqWitness::NonNormal { block: index(k) });
        }
        for (l, y) in blocks.iter().enumerate().skip(k + 1) {
            let d = linalg::commutator(x, y).norm();
            if d > worst {
                worst = d;
                witness = Some(CqWitness::NonCommuting { first: index(k), second: index(l) });
            }
        }
    }
    let residual = worst / scale;
    CqCheck { is_cq: residual <= tol, residual, witness }
}

/// `ρ = Σ_k p_k |ψ_k⟩⟨ψ_k| ⊗ ρ_B|k`.
#[derive(Debug, Clone)]
pub struct CqDecomposition {
    /// Columns are the orthonormal `|ψ_k⟩`.
    pub basis: CMat,
    pub probabilities: Vec<f64>,
    /// Maximally mixed placeholders for zero-probability outcomes.
    pub conditionals: Vec<DensityOperator>,
    pub residual: f64,
}

impl CqDecomposition {
    pub fn reconstruct(&self) -> CMat {
        let da = self.basis.nrows();
        let db = self.conditionals.first().map_or(1, |s| s.dim());
        let mut out = CMat::zeros(da * db, da * db);
        for (k, (p, cond)) in self.probabilities.iter().zip(&self.conditionals).enumerate() {
            let v = self.basis.column(k).into_owned();
            out += linalg::kron(&linalg::outer(&v), cond.matrix()) * c(*p, 0.0);
        }
        out
    }
}

/// Recover the classical basis on A and the conditional states on B.
///
/// The common eigenbasis of the blocks is taken from a random real
/// combination of their Hermitian parts; a failed attempt (unresolved
/// near-degeneracy) is retried with a fresh combination.
pub fn cq_decompose(rho: &BipartiteState) -> Result<CqDecomposition> {
    let check = is_cq_exact(rho, CQ_TOL);
    if !check.is_cq {
        return Err(Error::NotClassicalQuantum { residual: check.residual });
    }
    let da = rho.dim_a();
    let blocks = blocks_over_b(rho);
    let scale = rho.matrix().norm();
    let mut rng = random::seeded(DECOMPOSE_SEED);
    for _attempt in 0..DECOMPOSE_ATTEMPTS {
        let mut mix = CMat::zeros(da, da);
        for x in &blocks {
            let herm = linalg::hermitian_part(x);
            let anti = (x - x.adjoint()) * c(0.0, -0.5);
            mix += herm * c(rng.sample(StandardNormal), 0.0) + anti * c(rng.sample(StandardNormal), 0.0);
        }
        let (_, basis) = linalg::eigh(&mix);
        let Some(decomposition) = assemble(rho, &basis) else { continue };
        if decomposition.residual <= 1e-8 * scale.max(1.0) {
            return Ok(decomposition);
        }
    }
    Err(Error::DecompositionFailed { attempts: DECOMPOSE_ATTEMPTS })
}

fn assemble(rho: &BipartiteState, basis: &CMat) -> Option<CqDecomposition> {
    let (da, db) = rho.dims();
    let m = rho.matrix();
    let mut probabilities = Vec::with_capacity(da);
    let mut conditionals = Vec::with_capacity(da);
    for k in 0..da {
        let v: CMat = basis.columns(k, 1).into_owned();
        let lift = linalg::kron(&v, &linalg::identity(db));
        let block = lift.adjoint() * m * &lift;
        let p = linalg::trace_re(&block);
        if p > 1e-12 {
            probabilities.push(p);
            conditionals.push(DensityOperator::from_trusted(block / c(p, 0.0)));
        } else {
            probabilities.push(p.max(0.0));
            conditionals.push(DensityOperator::maximally_mixed(db));
        }
    }
    let mut d = CqDecomposition { basis: basis.clone(), probabilities, conditionals, residual: 0.0 };
    let residual = (d.reconstruct() - m).norm();
    if !residual.is_finite() {
        return None;
    }
    d.residual = residual;
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use crate::random::{random_density, random_unitary, seeded, Ensemble};

    fn cq_state(seed: u64) -> (BipartiteState, DensityOperator, DensityOperator) {
        let mut rng = seeded(seed);
        let s1 = random_density(2, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        let s2 = random_density(2, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        let m = linalg::kron(DensityOperator::basis_state(2, 0).matrix(), s1.matrix()) * c(0.5, 0.0)
            + linalg::kron(DensityOperator::basis_state(2, 1).matrix(), s2.matrix()) * c(0.5, 0.0);
        (BipartiteState::from_matrix(2, 2, m).unwrap(), s1, s2)
    }

    fn ket(v: &[f64]) -> CVec {
        CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn cq_state_passes() {
        let (rho, _, _) = cq_state(3);
        let check = is_cq_exact(&rho, CQ_TOL);
        assert!(check.is_cq && check.residual < 1e-14);
        assert!(cq_commutator_residual(&rho) < 1e-10);
    }

    #[test]
    fn bell_fails_with_witness_but_passes_commutator_prefilter() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = BipartiteState::new(2, 2, DensityOperator::pure(&ket(&[s, 0.0, 0.0, s])).unwrap()).unwrap();
        let check = is_cq_exact(&bell, CQ_TOL);
        assert!(!check.is_cq);
        assert!(check.witness.is_some());
        assert!(cq_commutator_residual(&bell) < 1e-12);
    }

    #[test]
    fn nondegenerate_discordant_state_has_commutator_residual() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = DensityOperator::basis_state(2, 0);
        let one = DensityOperator::basis_state(2, 1);
        let plus = DensityOperator::pure(&ket(&[s, s])).unwrap();
        let m = linalg::kron(zero.matrix(), zero.matrix()) * c(0.5, 0.0) + linalg::kron(plus.matrix(), one.matrix()) * c(0.5, 0.0);
        let rho = BipartiteState::from_matrix(2, 2, m).unwrap();
        assert!(cq_commutator_residual(&rho) > 1e-2);
        assert!(!is_cq_exact(&rho, CQ_TOL).is_cq);
    }

    #[test]
    fn decompose_recovers_z_basis() {
        let (rho, s1, s2) = cq_state(5);
        let d = cq_decompose(&rho).unwrap();
        assert!(d.residual < 1e-10);
        for (k, target) in [(0usize, &s1), (1, &s2)] {
            let col = (0..2).find(|&j| d.basis[(k, j)].norm() > 0.9).unwrap();
            assert!((d.probabilities[col] - 0.5).abs() < 1e-10);
            assert!(d.conditionals[col].distance(target) < 1e-9);
        }
    }

    #[test]
    fn decompose_follows_local_rotation() {
        let (rho, _, _) = cq_state(6);
        let u = random_unitary(2, &mut seeded(7));
        let big = linalg::kron(&u, &linalg::identity(2));
        let rotated = BipartiteState::from_matrix(2, 2, &big * rho.matrix() * big.adjoint()).unwrap();
        let d = cq_decompose(&rotated).unwrap();
        for k in 0..2 {
            let target = u.column(k).into_owned();
            let best = (0..2).map(|j| (d.basis.column(j).adjoint() * &target)[(0, 0)].norm()).fold(0.0, f64::max);
            assert!(best >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn decompose_product_uses_eigenbasis_of_a() {
        let a = DensityOperator::new(CMat::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.1), c(0.1, -0.1), c(0.3, 0.0)])).unwrap();
        let b = random_density(3, Ensemble::HilbertSchmidt, &mut seeded(8)).unwrap();
        let rho = BipartiteState::product(&a, &b);
        let d = cq_decompose(&rho).unwrap();
        let (_, eig) = linalg::eigh(a.matrix());
        for k in 0..2 {
            let best = (0..2).map(|j| (d.basis.column(j).adjoint() * eig.column(k))[(0, 0)].norm()).fold(0.0, f64::max);
            assert!(best > 1.0 - 1e-8);
        }
    }

    #[test]
    fn decompose_rejects_non_cq() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = BipartiteState::new(2, 2, DensityOperator::pure(&ket(&[s, 0.0, 0.0, s])).unwrap()).unwrap();
        assert!(matches!(cq_decompose(&bell), Err(Error::NotClassicalQuantum { .. })));
    }

    #[test]
    fn maximally_mixed_is_cq_and_decomposes() {
        let rho = BipartiteState::product(&DensityOperator::maximally_mixed(3), &DensityOperator::maximally_mixed(2));
        let d = cq_decompose(&rho).unwrap();
        assert!(d.residual < 1e-12);
    }
}
