//! Convex families of classical-quantum states.
//!
//! A [`ConvexCqSubsetSpec`] splits the A space into mutually orthogonal pieces.
//! Each piece is one of three kinds:
//!
//! * `both`: a fixed vector `|ψ⟩` paired with a fixed B state `R`
//! * `fixed`: a fixed vector `|ψ⟩` whose B conditional ranges over a convex hull
//! * `point`: a subspace of rank ≥ 2 holding any A state, paired with a fixed B state `R`
//!
//! Every state built from one spec is classical-quantum, and so is every
//! mixture of two such states.

use rand::Rng;

use crate::discord::is_cq_exact;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, RMat};
use crate::random::{self, Ensemble};
use crate::state::{partial_trace_matrix, BipartiteState, DensityOperator, Subsystem};
use crate::HermitianBasis;

/// Tolerance on overlaps between declared subspaces.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Tolerance on block residuals in [`membership`].
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BothEntry {
    pub vector: CVec,
    pub state: DensityOperator,
}

/// An empty generator list leaves the conditional unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEntry {
    pub vector: CVec,
    pub generators: Vec<DensityOperator>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEntry {
    pub projector: CMat,
    pub state: DensityOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCqSubsetSpec {
    pub dim_a: usize,
    pub dim_b: usize,
    pub both: Vec<BothEntry>,
    pub fixed: Vec<FixedEntry>,
    pub point: Vec<PointEntry>,
}

/// Kind of a spec entry, used in diagnostics and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    Both,
    Fixed,
    Point,
}

impl EntryKind {
    fn label(self) -> &'static str {
        match self {
            EntryKind::Both => "both",
            EntryKind::Fixed => "fixed",
            EntryKind::Point => "point",
        }
    }
}

impl ConvexCqSubsetSpec {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self { dim_a, dim_b, both: Vec::new(), fixed: Vec::new(), point: Vec::new() }
    }

    /// `{ρ_A ⊗ R}`: one point entry covering all of A.
    pub fn fixed_b(dim_a: usize, r: DensityOperator) -> Self {
        let mut s = Self::new(dim_a, r.dim());
        if dim_a == 1 {
            s.both.push(BothEntry { vector: linalg::basis_vector(1, 0), state: r });
        } else {
            s.point.push(PointEntry { projector: linalg::identity(dim_a), state: r });
        }
        s
    }

    /// `{Σ p_i |i⟩⟨i| ⊗ ρ_B|i}` over the computational basis, one generator set per index.
    pub fn diag_a(dim_b: usize, generators: Vec<Vec<DensityOperator>>) -> Self {
        let dim_a = generators.len();
        let mut s = Self::new(dim_a, dim_b);
        for (i, g) in generators.into_iter().enumerate() {
            s.fixed.push(FixedEntry { vector: linalg::basis_vector(dim_a, i), generators: g });
        }
        s
    }

    pub fn len(&self) -> usize {
        self.both.len() + self.fixed.len() + self.point.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Projector of every entry, in the order both, fixed, point.
    pub fn projectors(&self) -> Vec<(EntryKind, usize, CMat)> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.both.iter().enumerate().map(|(i, e)| (EntryKind::Both, i, linalg::outer(&e.vector))));
        out.extend(self.fixed.iter().enumerate().map(|(i, e)| (EntryKind::Fixed, i, linalg::outer(&e.vector))));
        out.extend(self.point.iter().enumerate().map(|(i, e)| (EntryKind::Point, i, e.projector.clone())));
        out
    }

    pub fn validate(&self) -> Result<()> {
        validate_spec(self)
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidSubsetSpec(msg)
}

/// Check the spec's structural clauses, reporting the first one violated.
pub fn validate_spec(s: &ConvexCqSubsetSpec) -> Result<()> {
    if s.dim_a == 0 || s.dim_b == 0 {
        return Err(invalid(format!("dimensions must be positive, got {}x{}", s.dim_a, s.dim_b)));
    }
    if s.is_empty() {
        return Err(invalid("spec has no entries".into()));
    }
    let check_vector = |kind: &str, i: usize, v: &CVec| -> Result<()> {
        if v.len() != s.dim_a {
            return Err(invalid(format!("{kind}[{i}]: vector has length {}, expected {}", v.len(), s.dim_a)));
        }
        let defect = (v.norm() - 1.0).abs();
        if defect > ORTHOGONALITY_TOL {
            return Err(invalid(format!("{kind}[{i}]: vector norm deviates from 1 by {defect:.3e}")));
        }
        Ok(())
    };
    let check_state = |kind: &str, i: usize, r: &DensityOperator| -> Result<()> {
        if r.dim() != s.dim_b {
            return Err(invalid(format!("{kind}[{i}]: B state has dimension {}, expected {}", r.dim(), s.dim_b)));
        }
        Ok(())
    };
    for (i, e) in s.both.iter().enumerate() {
        check_vector("both", i, &e.vector)?;
        check_state("both", i, &e.state)?;
    }
    for (i, e) in s.fixed.iter().enumerate() {
        check_vector("fixed", i, &e.vector)?;
        for g in &e.generators {
            check_state("fixed", i, g)?;
        }
    }
    for (i, e) in s.point.iter().enumerate() {
        let p = &e.projector;
        if p.shape() != (s.dim_a, s.dim_a) {
            return Err(invalid(format!("point[{i}]: projector has shape {:?}, expected {}x{}", p.shape(), s.dim_a, s.dim_a)));
        }
        let defect = linalg::hermitian_defect(p) + (p * p - p).norm();
        if defect > ORTHOGONALITY_TOL {
            return Err(invalid(format!("point[{i}]: not an orthogonal projector (defect {defect:.3e})")));
        }
        let rank = linalg::trace_re(p).round() as usize;
        if rank < 2 {
            return Err(invalid(format!("point[{i}]: projector rank {rank} < 2")));
        }
        check_state("point", i, &e.state)?;
    }
    let projectors = s.projectors();
    for (k, (kind_k, i, p)) in projectors.iter().enumerate() {
        for (kind_l, j, q) in projectors.iter().skip(k + 1) {
            let overlap = (p * q).norm();
            if overlap > ORTHOGONALITY_TOL {
                return Err(invalid(format!(
                    "{}[{i}] and {}[{j}] overlap (‖PQ‖ = {overlap:.3e})",
                    kind_k.label(),
                    kind_l.label()
                )));
            }
        }
    }
    Ok(())
}

/// Orthonormal columns spanning the range of a projector.
pub(crate) fn range_basis(p: &CMat) -> CMat {
    linalg::projector_range(p)
}

/// Draw a state of the family.
///
/// `weights` are the `t_i` in the order both, fixed, point and are
/// renormalized; when absent they are Dirichlet-distributed.
pub fn sample_state<R: Rng + ?Sized>(s: &ConvexCqSubsetSpec, weights: Option<&[f64]>, rng: &mut R) -> Result<BipartiteState> {
    validate_spec(s)?;
    let n = s.len();
    let t = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::InvalidParameter(format!("{} weights for {n} entries", w.len())));
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) {
                return Err(Error::InvalidParameter("weights must be non-negative with positive sum".into()));
            }
            w.iter().map(|x| x / total).collect()
        }
        None => random::dirichlet(n, rng),
    };
    let d = s.dim_a * s.dim_b;
    let mut m = CMat::zeros(d, d);
    let mut k = 0;
    for e in &s.both {
        m += linalg::kron(&linalg::outer(&e.vector), e.state.matrix()) * c(t[k], 0.0);
        k += 1;
    }
    for e in &s.fixed {
        let sigma = hull_sample(&e.generators, s.dim_b, rng)?;
        m += linalg::kron(&linalg::outer(&e.vector), &sigma) * c(t[k], 0.0);
        k += 1;
    }
    for e in &s.point {
        let v = range_basis(&e.projector);
        let local = random::random_density(v.ncols(), Ensemble::HilbertSchmidt, rng)?;
        let rho_a = &v * local.matrix() * v.adjoint();
        m += linalg::kron(&rho_a, e.state.matrix()) * c(t[k], 0.0);
        k += 1;
    }
    BipartiteState::from_matrix(s.dim_a, s.dim_b, m)
}

fn hull_sample<R: Rng + ?Sized>(generators: &[DensityOperator], dim_b: usize, rng: &mut R) -> Result<CMat> {
    if generators.is_empty() {
        return Ok(random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)?.into_matrix());
    }
    let w = random::dirichlet(generators.len(), rng);
    Ok(generators.iter().zip(w).fold(CMat::zeros(dim_b, dim_b), |acc, (g, w)| acc + g.matrix() * c(w, 0.0)))
}

/// Outcome of [`membership`].
#[derive(Debug, Clone)]
pub struct Membership {
    pub is_member: bool,
    /// Largest violated block residual (Frobenius norm).
    pub residual: f64,
    /// The clause with the largest residual.
    pub worst: String,
}

pub fn membership(s: &ConvexCqSubsetSpec, rho: &BipartiteState) -> Membership {
    membership_with_tol(s, rho, MEMBERSHIP_TOL)
}

pub fn membership_with_tol(s: &ConvexCqSubsetSpec, rho: &BipartiteState, tol: f64) -> Membership {
    let mut report = Membership { is_member: false, residual: 0.0, worst: String::new() };
    if rho.dims() != (s.dim_a, s.dim_b) || validate_spec(s).is_err() {
        report.residual = f64::INFINITY;
        report.worst = "spec or dimensions invalid".into();
        return report;
    }
    let mut note = |residual: f64, what: String| {
        if residual > report.residual {
            report.residual = residual;
            report.worst = what;
        }
    };
    let m = rho.matrix();
    let id_b = linalg::identity(s.dim_b);
    let projectors = s.projectors();
    let lifts: Vec<CMat> = projectors.iter().map(|(_, _, p)| linalg::kron(p, &id_b)).collect();

    let total = lifts.iter().fold(CMat::zeros(m.nrows(), m.nrows()), |acc, l| acc + l);
    note((m - &total * m * &total).norm(), "support outside declared subspaces".into());

    for (k, lk) in lifts.iter().enumerate() {
        for (l, ll) in lifts.iter().enumerate().skip(k + 1) {
            let (kind_k, i, _) = &projectors[k];
            let (kind_l, j, _) = &projectors[l];
            note((lk * m * ll).norm(), format!("coherence between {}[{i}] and {}[{j}]", kind_k.label(), kind_l.label()));
        }
    }

    let mut k = 0;
    for (i, e) in s.both.iter().enumerate() {
        let block = &lifts[k] * m * &lifts[k];
        let t = linalg::trace_re(&block);
        let target = linalg::kron(&projectors[k].2, e.state.matrix()) * c(t, 0.0);
        note((block - target).norm(), format!("both[{i}] conditional differs from R"));
        k += 1;
    }
    let basis_b = HermitianBasis::new(s.dim_b);
    for (i, e) in s.fixed.iter().enumerate() {
        if !e.generators.is_empty() {
            let lift = linalg::kron(&CMat::from_column_slice(s.dim_a, 1, e.vector.as_slice()), &id_b);
            let cond = lift.adjoint() * m * &lift;
            let cols: Vec<Vec<f64>> = e.generators.iter().map(|g| basis_b.coordinates(g.matrix())).collect();
            let a = RMat::from_fn(basis_b.len(), cols.len(), |r, col| cols[col][r]);
            let (_, residual) = linalg::nnls(&a, &basis_b.coordinates(&cond));
            note(residual, format!("fixed[{i}] conditional outside generator hull"));
        }
        k += 1;
    }
    for (i, e) in s.point.iter().enumerate() {
        let block = &lifts[k] * m * &lifts[k];
        let rho_a = partial_trace_matrix(&block, s.dim_a, s.dim_b, Subsystem::A);
        let target = linalg::kron(&rho_a, e.state.matrix());
        note((block - target).norm(), format!("point[{i}] block is not ρ_A ⊗ R"));
        k += 1;
    }
    report.is_member = report.residual <= tol;
    report
}

#[derive(Debug, Clone)]
pub struct ClosureFailure {
    pub pair: usize,
    pub weight: f64,
    pub cq_residual: f64,
    pub membership_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ClosureReport {
    pub pairs: usize,
    pub failures: Vec<ClosureFailure>,
    pub worst_cq_residual: f64,
    pub worst_membership_residual: f64,
}

impl ClosureReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Mix random pairs of samples and check each mixture stays CQ and inside the family.
/// Pair `k` draws from `random::derived(seed, k)`.
pub fn mixing_closure_check(s: &ConvexCqSubsetSpec, n_pairs: usize, seed: u64) -> Result<ClosureReport> {
    validate_spec(s)?;
    let mut report = ClosureReport { pairs: n_pairs, failures: Vec::new(), worst_cq_residual: 0.0, worst_membership_residual: 0.0 };
    for k in 0..n_pairs {
        let mut rng = random::derived(seed, k as u64);
        let x = sample_state(s, None, &mut rng)?;
        let y = sample_state(s, None, &mut rng)?;
        let w: f64 = rng.random();
        let mixed = x.mix(&y, w)?;
        let cq = is_cq_exact(&mixed, crate::discord::CQ_TOL);
        let member = membership(s, &mixed);
        report.worst_cq_residual = report.worst_cq_residual.max(cq.residual);
        report.worst_membership_residual = report.worst_membership_residual.max(member.residual);
        if !cq.is_cq || !member.is_member {
            report.failures.push(ClosureFailure {
                pair: k,
                weight: w,
                cq_residual: cq.residual,
                membership_residual: member.residual,
            });
        }
    }
    Ok(report)
}

/// Whether a mixture of `|ψ⟩⟨ψ|⊗σ` and `|φ⟩⟨φ|⊗τ` with both weights positive
/// is classical-quantum: the projectors commute or the conditionals agree.
pub fn dichotomy_predicts_cq(psi: &CVec, sigma: &DensityOperator, phi: &CVec, tau: &DensityOperator) -> bool {
    let commutes = linalg::commutator(&linalg::outer(psi), &linalg::outer(phi)).norm() <= ORTHOGONALITY_TOL;
    let same = (sigma.matrix() - tau.matrix()).norm() <= ORTHOGONALITY_TOL;
    commutes || same
}

/// Random partition of `dim` into block sizes (each ≥ 1), in random order.
pub(crate) fn random_block_sizes<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut left = dim;
    while left > 0 {
        let size = rng.random_range(1..=left);
        sizes.push(size);
        left -= size;
    }
    sizes
}

/// A random spec whose entries cover all of A.
///
/// A is split into blocks of a random unitary frame. Rank-1 blocks become
/// `both` or `fixed` entries (the latter with 1–3 HS-random generators).
/// Larger blocks become `point` entries.
pub fn random_spec<R: Rng + ?Sized>(dim_a: usize, dim_b: usize, rng: &mut R) -> Result<ConvexCqSubsetSpec> {
    let u = random::random_unitary(dim_a, rng);
    let mut s = ConvexCqSubsetSpec::new(dim_a, dim_b);
    let mut col = 0;
    for size in random_block_sizes(dim_a, rng) {
        let frame = u.columns(col, size).into_owned();
        col += size;
        if size == 1 {
            let vector = frame.column(0).into_owned();
            if rng.random_bool(0.5) {
                let state = random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)?;
                s.both.push(BothEntry { vector, state });
            } else {
                let count = rng.random_range(1..=3);
                let generators =
                    (0..count).map(|_| random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)).collect::<Result<_>>()?;
                s.fixed.push(FixedEntry { vector, generators });
            }
        } else {
            let state = random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)?;
            s.point.push(PointEntry { projector: &frame * frame.adjoint(), state });
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_spec() -> ConvexCqSubsetSpec {
        let mut s = ConvexCqSubsetSpec::new(2, 2);
        s.both.push(BothEntry { vector: linalg::basis_vector(2, 0), state: DensityOperator::basis_state(2, 0) });
        s.both.push(BothEntry { vector: linalg::basis_vector(2, 1), state: DensityOperator::maximally_mixed(2) });
        s
    }

    #[test]
    fn z_basis_both_entries_valid() {
        assert!(validate_spec(&z_spec()).is_ok());
    }

    #[test]
    fn overlapping_points_named() {
        let mut s = ConvexCqSubsetSpec::new(3, 2);
        let mut p = CMat::zeros(3, 3);
        p[(0, 0)] = linalg::ONE;
        p[(1, 1)] = linalg::ONE;
        let mut q = CMat::zeros(3, 3);
        q[(1, 1)] = linalg::ONE;
        q[(2, 2)] = linalg::ONE;
        s.point.push(PointEntry { projector: p, state: DensityOperator::maximally_mixed(2) });
        s.point.push(PointEntry { projector: q, state: DensityOperator::maximally_mixed(2) });
        let err = validate_spec(&s).unwrap_err().to_string();
        assert!(err.contains("point[0] and point[1]"), "{err}");
    }

    #[test]
    fn rank_one_point_rejected() {
        let mut s = ConvexCqSubsetSpec::new(2, 2);
        s.point.push(PointEntry { projector: linalg::outer(&linalg::basis_vector(2, 0)), state: DensityOperator::maximally_mixed(2) });
        assert!(validate_spec(&s).unwrap_err().to_string().contains("rank"));
    }

    #[test]
    fn fixed_b_samples_are_products() {
        let r = DensityOperator::basis_state(2, 1);
        let s = ConvexCqSubsetSpec::fixed_b(3, r.clone());
        assert!(validate_spec(&s).is_ok());
        let mut rng = random::seeded(1);
        let x = sample_state(&s, None, &mut rng).unwrap();
        let rho_a = x.reduced(Subsystem::A);
        let product = linalg::kron(rho_a.matrix(), r.matrix());
        assert!((x.matrix() - product).norm() < 1e-12);
    }

    #[test]
    fn samples_are_members_and_cq() {
        let mut rng = random::seeded(3);
        for _ in 0..20 {
            let s = random_spec(3, 2, &mut rng).unwrap();
            let x = sample_state(&s, None, &mut rng).unwrap();
            assert!(is_cq_exact(&x, 1e-8).is_cq);
            let m = membership(&s, &x);
            assert!(m.is_member, "{} {}", m.residual, m.worst);
        }
    }

    #[test]
    fn perturbed_point_state_rejected() {
        let r = DensityOperator::maximally_mixed(2);
        let s = ConvexCqSubsetSpec::fixed_b(2, r);
        let mut rng = random::seeded(5);
        let x = sample_state(&s, None, &mut rng).unwrap();
        let shifted = DensityOperator::new(CMat::from_row_slice(2, 2, &[c(0.51, 0.0), linalg::ZERO, linalg::ZERO, c(0.49, 0.0)])).unwrap();
        let wrong = sample_state(&ConvexCqSubsetSpec::fixed_b(2, shifted), None, &mut rng).unwrap();
        assert!(membership(&s, &x).is_member);
        assert!(!membership(&s, &wrong).is_member);
    }

    #[test]
    fn coherence_between_subspaces_rejected() {
        let s = z_spec();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = CVec::from_vec(vec![c(h, 0.0), c(h, 0.0)]);
        let x = BipartiteState::product(&DensityOperator::pure(&plus).unwrap(), &DensityOperator::basis_state(2, 0));
        let m = membership(&s, &x);
        assert!(!m.is_member);
    }

    #[test]
    fn fixed_hull_membership() {
        let g0 = DensityOperator::basis_state(2, 0);
        let g1 = DensityOperator::basis_state(2, 1);
        let s = ConvexCqSubsetSpec::diag_a(2, vec![vec![g0.clone(), g1.clone()], vec![g0.clone()]]);
        let inside = BipartiteState::from_matrix(
            2,
            2,
            linalg::kron(&linalg::outer(&linalg::basis_vector(2, 0)), DensityOperator::maximally_mixed(2).matrix()),
        )
        .unwrap();
        assert!(membership(&s, &inside).is_member);
        let outside = BipartiteState::product(&DensityOperator::basis_state(2, 1), &g1);
        assert!(!membership(&s, &outside).is_member);
    }

    #[test]
    fn closure_holds() {
        let mut rng = random::seeded(11);
        let s = random_spec(3, 2, &mut rng).unwrap();
        let report = mixing_closure_check(&s, 30, 4).unwrap();
        assert!(report.passed(), "{:?}", report.failures.first());
    }

    #[test]
    fn block_sizes_partition() {
        let mut rng = random::seeded(2);
        for d in 1..6 {
            assert_eq!(random_block_sizes(d, &mut rng).iter().sum::<usize>(), d);
        }
    }
}
