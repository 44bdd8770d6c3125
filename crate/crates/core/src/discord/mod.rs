//! Quantum discord `D^A = I(A:B) − J(B|A)` with `J` maximized over rank-one
//! projective measurements on A, plus exact classical-quantum structure tests.
//!
//! The optimizer only ever returns a value attained at an explicit
//! measurement, so `J` is a certified lower bound and the reported discord an
//! upper bound. Use [`is_cq_exact`] to certify zero discord.

pub(crate) mod cq;

pub use cq::{blocks_over_b, cq_commutator_residual, cq_decompose, is_cq_exact, CqCheck, CqDecomposition, CqWitness, CQ_TOL};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::optimize::{self, NelderMeadOptions};
use crate::random;
use crate::state::{self, BipartiteState, DensityOperator, Subsystem};

/// Outcomes with lower probability are dropped from conditional sums.
pub const OUTCOME_CUTOFF: f64 = 1e-12;

/// Coarse grid used by [`Strategy::Hybrid`] on qubits.
pub const HYBRID_GRID: (usize, usize) = (32, 64);
/// Number of best grid points refined by the simplex search.
pub const HYBRID_REFINEMENTS: usize = 5;
/// Random restarts used by [`Strategy::Hybrid`] when `dim_a > 2`.
pub const HYBRID_STARTS: usize = 20;
const HYBRID_SEED: u64 = 0x00d1_5c0d;

/// A rank-one von Neumann measurement, stored as the unitary whose columns
/// are the measurement vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    basis: CMat,
}

impl ProjectiveMeasurement {
    pub fn new(basis: CMat) -> Result<Self> {
        if !basis.is_square() {
            return Err(Error::NotSquare { rows: basis.nrows(), cols: basis.ncols() });
        }
        let defect = linalg::orthonormality_defect(&basis);
        if defect > 1e-10 {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Self { basis })
    }

    pub fn computational(dim: usize) -> Self {
        Self { basis: linalg::identity(dim) }
    }

    /// Qubit measurement along the Bloch direction `(θ, φ)`.
    pub fn from_bloch_angles(theta: f64, phi: f64) -> Self {
        let (s, co) = (0.5 * theta).sin_cos();
        let e = c(phi.cos(), phi.sin());
        let basis = CMat::from_row_slice(2, 2, &[c(co, 0.0), -e.conj() * s, e * s, c(co, 0.0)]);
        Self { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<CVec> {
        (0..self.dim()).map(|k| self.basis.column(k).into_owned()).collect()
    }

    pub fn projectors(&self) -> Vec<CMat> {
        self.vectors().iter().map(linalg::outer).collect()
    }

    /// Bloch vector of the first projector (qubits only).
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let p = linalg::outer(&self.basis.column(0).into_owned());
        let paulis = linalg::paulis();
        Some([1, 2, 3].map(|k| (&paulis[k] * &p).trace().re))
    }
}

/// `I(A:B) = S(A) + S(B) − S(AB)` in bits.
pub fn mutual_information(rho: &BipartiteState) -> f64 {
    state::von_neumann_entropy(&rho.reduced(Subsystem::A)) + state::von_neumann_entropy(&rho.reduced(Subsystem::B))
        - state::von_neumann_entropy(rho.state())
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub index: usize,
    pub probability: f64,
    pub conditional: DensityOperator,
}

/// Measure A and return `(p_a, ρ_B|a)` for every outcome with `p_a ≥ 1e-12`.
pub fn measure_and_condition(rho: &BipartiteState, m: &ProjectiveMeasurement) -> Result<Vec<Outcome>> {
    if m.dim() != rho.dim_a() {
        return Err(Error::DimensionMismatch { expected: rho.dim_a(), actual: m.dim() });
    }
    let blocks = blocks_over_a(rho);
    let mut out = Vec::new();
    for (index, v) in m.vectors().iter().enumerate() {
        let cond = conditional_block(&blocks, rho.dim_a(), rho.dim_b(), v);
        let p = linalg::trace_re(&cond);
        if p >= OUTCOME_CUTOFF {
            out.push(Outcome { index, probability: p, conditional: DensityOperator::from_trusted(cond / c(p, 0.0)) });
        }
    }
    Ok(out)
}

/// How to search for the measurement maximizing `J(B|A)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    /// Bloch-angle grid with `θ = πi/n_theta` (inclusive) and `φ = 2πj/n_phi`; qubits only.
    Grid { n_theta: usize, n_phi: usize },
    /// Simplex search over Givens-parametrized unitaries from the `ρ_A`
    /// eigenbasis plus `starts` seeded Haar-random unitaries.
    MultiStart { starts: usize, seed: u64 },
    /// Qubits: 32×64 grid, then simplex refinement from the best five points.
    /// Larger `dim_a`: twenty seeded restarts.
    Hybrid,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Hybrid
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub restarts: usize,
    pub best_per_restart: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct DiscordResult {
    /// Bits; an upper bound on the true discord.
    pub value: f64,
    pub optimal_measurement: ProjectiveMeasurement,
    pub mutual_information: f64,
    /// Bits; attained at `optimal_measurement`.
    pub classical_correlation: f64,
    pub optimizer_trace: OptimizerTrace,
}

/// `J(B|A)` and the measurement attaining it.
pub fn classical_correlation(rho: &BipartiteState, strategy: Strategy) -> Result<(f64, ProjectiveMeasurement)> {
    let (j, m, _) = optimize_measurement(rho, strategy)?;
    Ok((j, m))
}

pub fn discord(rho: &BipartiteState, strategy: Strategy) -> Result<DiscordResult> {
    let (j, m, trace) = optimize_measurement(rho, strategy)?;
    let i = mutual_information(rho);
    Ok(DiscordResult { value: i - j, optimal_measurement: m, mutual_information: i, classical_correlation: j, optimizer_trace: trace })
}

/// `S(B) − Σ_a p_a S(ρ_B|a)` at a fixed measurement.
pub fn classical_correlation_at(rho: &BipartiteState, m: &ProjectiveMeasurement) -> Result<f64> {
    if m.dim() != rho.dim_a() {
        return Err(Error::DimensionMismatch { expected: rho.dim_a(), actual: m.dim() });
    }
    Ok(Objective::new(rho).eval_basis(m.basis()))
}

/// Precomputed pieces of the measurement objective for one state.
struct Objective {
    dim_a: usize,
    dim_b: usize,
    blocks: Vec<CMat>,
    entropy_b: f64,
}

impl Objective {
    fn new(rho: &BipartiteState) -> Self {
        Self {
            dim_a: rho.dim_a(),
            dim_b: rho.dim_b(),
            blocks: blocks_over_a(rho),
            entropy_b: state::von_neumann_entropy(&rho.reduced(Subsystem::B)),
        }
    }

    fn eval_vectors<'a>(&self, vectors: impl Iterator<Item = CVec>) -> f64 {
        let mut conditional_entropy = 0.0;
        for v in vectors {
            let cond = conditional_block(&self.blocks, self.dim_a, self.dim_b, &v);
            let p = linalg::trace_re(&cond);
            if p < OUTCOME_CUTOFF {
                continue;
            }
            let eig: Vec<f64> = linalg::eigvalsh(&cond).into_iter().map(|x| x / p).collect();
            conditional_entropy += p * state::shannon_bits(&eig);
        }
        self.entropy_b - conditional_entropy
    }

    fn eval_basis(&self, u: &CMat) -> f64 {
        self.eval_vectors((0..u.ncols()).map(|k| u.column(k).into_owned()))
    }

    fn eval_angles(&self, theta: f64, phi: f64) -> f64 {
        self.eval_basis(ProjectiveMeasurement::from_bloch_angles(theta, phi).basis())
    }
}

/// A-indexed blocks `⟨a|ρ|a'⟩_A` (each `dim_b × dim_b`), row-major over `(a, a')`.
fn blocks_over_a(rho: &BipartiteState) -> Vec<CMat> {
    let (da, db) = rho.dims();
    let m = rho.matrix();
    let mut out = Vec::with_capacity(da * da);
    for a in 0..da {
        for a2 in 0..da {
            out.push(m.view((a * db, a2 * db), (db, db)).into_owned());
        }
    }
    out
}

/// `(⟨v|⊗𝟙) ρ (|v⟩⊗𝟙)`, unnormalized.
fn conditional_block(blocks: &[CMat], da: usize, db: usize, v: &CVec) -> CMat {
    let mut out = CMat::zeros(db, db);
    for a in 0..da {
        for a2 in 0..da {
            let w = v[a].conj() * v[a2];
            if w.norm_sqr() > 0.0 {
                out += &blocks[a * da + a2] * w;
            }
        }
    }
    out
}

fn optimize_measurement(rho: &BipartiteState, strategy: Strategy) -> Result<(f64, ProjectiveMeasurement, OptimizerTrace)> {
    let objective = Objective::new(rho);
    match strategy {
        Strategy::Grid { n_theta, n_phi } => {
            if rho.dim_a() != 2 {
                return Err(Error::InvalidStrategy(format!("grid search needs a qubit A, got dim_a = {}", rho.dim_a())));
            }
            if n_theta == 0 || n_phi == 0 {
                return Err(Error::InvalidStrategy("grid sizes must be positive".into()));
            }
            let points = grid_values(&objective, n_theta, n_phi);
            let (theta, phi, value) = points.iter().copied().fold((0.0, 0.0, f64::NEG_INFINITY), |best, p| if p.2 > best.2 { p } else { best });
            let trace = OptimizerTrace { restarts: 0, best_per_restart: vec![value], evaluations: points.len() };
            Ok((value, ProjectiveMeasurement::from_bloch_angles(theta, phi), trace))
        }
        Strategy::Hybrid if rho.dim_a() == 2 => Ok(hybrid_qubit(&objective)),
        Strategy::Hybrid => Ok(multistart(&objective, rho, HYBRID_STARTS, HYBRID_SEED)),
        Strategy::MultiStart { starts, seed } => Ok(multistart(&objective, rho, starts, seed)),
    }
}

fn grid_values(objective: &Objective, n_theta: usize, n_phi: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity((n_theta + 1) * n_phi);
    for i in 0..=n_theta {
        let theta = PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            out.push((theta, phi, objective.eval_angles(theta, phi)));
        }
    }
    out
}

fn hybrid_qubit(objective: &Objective) -> (f64, ProjectiveMeasurement, OptimizerTrace) {
    let (n_theta, n_phi) = HYBRID_GRID;
    let mut points = grid_values(objective, n_theta, n_phi);
    let mut evaluations = points.len();
    // stable sort keeps the lowest grid index first among ties
    points.sort_by(|a, b| b.2.total_cmp(&a.2));
    let (mut best_theta, mut best_phi, mut best) = points[0];

    let opts = NelderMeadOptions { initial_step: PI / n_theta as f64, max_evaluations: 400, ..Default::default() };
    let mut trace = OptimizerTrace::default();
    for &(theta, phi, _) in points.iter().take(HYBRID_REFINEMENTS) {
        let r = optimize::maximize(|x| objective.eval_angles(x[0], x[1]), &[theta, phi], &opts);
        evaluations += r.evaluations;
        trace.best_per_restart.push(r.value);
        if r.value > best {
            best = r.value;
            best_theta = r.x[0];
            best_phi = r.x[1];
        }
    }
    trace.restarts = trace.best_per_restart.len();
    trace.evaluations = evaluations;
    (best, ProjectiveMeasurement::from_bloch_angles(best_theta, best_phi), trace)
}

/// `U0 · Π_{p<q} G_pq(θ, φ)`; the identity at zero parameters.
fn givens_unitary(u0: &CMat, params: &[f64]) -> CMat {
    let d = u0.nrows();
    let mut u = u0.clone();
    let mut k = 0;
    for p in 0..d {
        for q in (p + 1)..d {
            let (s, co) = params[k].sin_cos();
            let e = c(params[k + 1].cos(), params[k + 1].sin());
            k += 2;
            // right-multiply by the rotation acting on columns p, q
            for r in 0..d {
                let up = u[(r, p)];
                let uq = u[(r, q)];
                u[(r, p)] = up * co + uq * e * s;
                u[(r, q)] = -up * e.conj() * s + uq * co;
            }
        }
    }
    u
}

fn multistart(objective: &Objective, rho: &BipartiteState, starts: usize, seed: u64) -> (f64, ProjectiveMeasurement, OptimizerTrace) {
    let d = rho.dim_a();
    let n_params = d * (d - 1);
    let mut initial = Vec::with_capacity(starts + 1);
    let (_, eigvecs) = linalg::eigh(rho.reduced(Subsystem::A).matrix());
    initial.push(eigvecs);
    for k in 0..starts {
        initial.push(random::random_unitary(d, &mut random::derived(seed, k as u64)));
    }

    let opts = NelderMeadOptions { initial_step: 0.2, max_evaluations: 300 * (n_params + 1), ..Default::default() };
    let mut trace = OptimizerTrace::default();
    let mut best = (f64::NEG_INFINITY, initial[0].clone());
    for u0 in &initial {
        let r = optimize::maximize(|x| objective.eval_basis(&givens_unitary(u0, x)), &vec![0.0; n_params], &opts);
        trace.evaluations += r.evaluations;
        trace.best_per_restart.push(r.value);
        if r.value > best.0 {
            best = (r.value, givens_unitary(u0, &r.x));
        }
    }
    trace.restarts = initial.len();
    // re-orthonormalize against accumulated rounding before handing it out
    let q = best.1.qr().q();
    let value = objective.eval_basis(&q);
    (value, ProjectiveMeasurement { basis: q }, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::random::{random_density, seeded, Ensemble};

    fn bell() -> BipartiteState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        BipartiteState::new(2, 2, DensityOperator::pure(&v).unwrap()).unwrap()
    }

    fn classical_zz() -> BipartiteState {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(0.5, 0.0), ZERO, ZERO, c(0.5, 0.0)]));
        BipartiteState::from_matrix(2, 2, m).unwrap()
    }

    #[test]
    fn mutual_information_values() {
        assert!((mutual_information(&bell()) - 2.0).abs() < 1e-12);
        assert!((mutual_information(&classical_zz()) - 1.0).abs() < 1e-12);
        let mut rng = seeded(1);
        let a = random_density(2, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        let b = random_density(3, Ensemble::HilbertSchmidt, &mut rng).unwrap();
        assert!(mutual_information(&BipartiteState::product(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn bell_measured_in_z() {
        let out = measure_and_condition(&bell(), &ProjectiveMeasurement::computational(2)).unwrap();
        assert_eq!(out.len(), 2);
        for (k, o) in out.iter().enumerate() {
            assert!((o.probability - 0.5).abs() < 1e-14);
            assert!(o.conditional.distance(&DensityOperator::basis_state(2, k)) < 1e-14);
        }
    }

    #[test]
    fn measurement_dimension_checked() {
        let err = measure_and_condition(&bell(), &ProjectiveMeasurement::computational(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn grid_rejects_qutrit() {
        let rho = BipartiteState::product(&DensityOperator::maximally_mixed(3), &DensityOperator::maximally_mixed(2));
        let err = classical_correlation(&rho, Strategy::Grid { n_theta: 4, n_phi: 4 }).unwrap_err();
        assert!(matches!(err, Error::InvalidStrategy(_)));
    }

    #[test]
    fn bell_discord_is_one_bit() {
        let r = discord(&bell(), Strategy::Hybrid).unwrap();
        assert!((r.value - 1.0).abs() < 1e-3);
        assert!((r.classical_correlation - 1.0).abs() < 1e-3);
        assert!((r.value - (r.mutual_information - r.classical_correlation)).abs() < 1e-12);
    }

    #[test]
    fn classical_state_prefers_z() {
        let (j, m) = classical_correlation(&classical_zz(), Strategy::Hybrid).unwrap();
        assert!((j - 1.0).abs() < 1e-6);
        let b = m.bloch_vector().unwrap();
        assert!(b[2].abs() >= 1.0 - 1e-3);
    }

    #[test]
    fn bloch_measurement_is_orthonormal() {
        let m = ProjectiveMeasurement::from_bloch_angles(1.1, 2.3);
        assert!(linalg::orthonormality_defect(m.basis()) < 1e-14);
        let b = m.bloch_vector().unwrap();
        assert!(((b[0] * b[0] + b[1] * b[1] + b[2] * b[2]) - 1.0).abs() < 1e-12);
        assert!((b[2] - 1.1f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn givens_is_unitary() {
        let u0 = random::random_unitary(3, &mut seeded(2));
        let u = givens_unitary(&u0, &[0.3, 1.0, -0.4, 0.2, 2.0, -1.0]);
        assert!(linalg::orthonormality_defect(&u) < 1e-12);
        assert!((givens_unitary(&u0, &[0.0; 6]) - u0).norm() < 1e-15);
    }

    #[test]
    fn qutrit_multistart_is_lower_bound_of_mutual_info() {
        let rho = random_density(6, Ensemble::HilbertSchmidt, &mut seeded(4)).unwrap();
        let rho = BipartiteState::new(3, 2, rho).unwrap();
        let r = discord(&rho, Strategy::Hybrid).unwrap();
        assert!(r.value >= -1e-9);
        assert_eq!(r.optimizer_trace.restarts, HYBRID_STARTS + 1);
        let check = classical_correlation_at(&rho, &r.optimal_measurement).unwrap();
        assert!((check - r.classical_correlation).abs() < 1e-12);
    }

    #[test]
    fn pure_product_measurement_gives_identity_basis() {
        let m = ProjectiveMeasurement::new(CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE])).unwrap();
        assert_eq!(m.projectors().len(), 2);
        assert!(ProjectiveMeasurement::new(CMat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE])).is_err());
    }
}
