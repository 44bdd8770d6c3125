//! Discord-annihilating channels on `A⊗B`.
//!
//! Every such channel is a pre-channel on AB followed by a pinching of A
//! into mutually orthogonal pieces. Each piece then acts on B:
//!
//! * a rank-1 piece either replaces B by a fixed state or leaves B alone
//! * a piece of rank ≥ 2 must replace B by a fixed state

use std::cmp::Ordering;

use rand::Rng;

use crate::classify::{self, VerdictKind};
use crate::discord::{self, is_cq_exact, CqCheck};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::probes::{self, DiscordantOutput};
use crate::random::{self, Ensemble};
use crate::state::{partial_trace_matrix, BipartiteState, DensityOperator, Subsystem};
use crate::structures::{self, BothEntry, ConvexCqSubsetSpec, FixedEntry, PointEntry};
use crate::QuantumChannel;

/// Completeness and orthogonality tolerance for partitions.
pub const PARTITION_TOL: f64 = 1e-10;
/// Largest spread of conditional B states still read as a fixed point.
pub const POINT_SPREAD_TOL: f64 = 1e-7;
/// Choi distance below which a recovered spec counts as reproducing the channel.
pub const MATCH_TOL: f64 = 1e-7;

const MATCH_SEED: u64 = 0x00da_5eed;

#[derive(Debug, Clone, PartialEq)]
pub enum BAction {
    PointTo(DensityOperator),
    Identity,
}

impl BAction {
    pub fn is_identity(&self) -> bool {
        matches!(self, BAction::Identity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PartitionEntry {
    Rank1 { vector: CVec, action: BAction },
    Multi { projector: CMat, action: BAction },
}

impl PartitionEntry {
    pub fn projector(&self) -> CMat {
        match self {
            PartitionEntry::Rank1 { vector, .. } => linalg::outer(vector),
            PartitionEntry::Multi { projector, .. } => projector.clone(),
        }
    }

    pub fn action(&self) -> &BAction {
        match self {
            PartitionEntry::Rank1 { action, .. } | PartitionEntry::Multi { action, .. } => action,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            PartitionEntry::Rank1 { .. } => 1,
            PartitionEntry::Multi { projector, .. } => linalg::trace_re(projector).round() as usize,
        }
    }

    /// `(rank, is_identity)`, the part of an entry that survives unitary equivalence.
    pub fn signature(&self) -> (usize, bool) {
        (self.rank(), self.action().is_identity())
    }
}

#[derive(Debug, Clone)]
pub struct DaChannelSpec {
    pub dim_a: usize,
    pub dim_b: usize,
    /// Channel on AB applied before the pinching.
    pub pre_channel: QuantumChannel,
    pub partition: Vec<PartitionEntry>,
}

fn invalid(msg: String) -> Error {
    Error::InvalidDaSpec(msg)
}

impl DaChannelSpec {
    /// Spec with the identity pre-channel.
    pub fn with_partition(dim_a: usize, dim_b: usize, partition: Vec<PartitionEntry>) -> Self {
        Self { dim_a, dim_b, pre_channel: QuantumChannel::identity(dim_a * dim_b), partition }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim_a * self.dim_b;
        if self.dim_a == 0 || self.dim_b == 0 {
            return Err(invalid("dimensions must be positive".into()));
        }
        if (self.pre_channel.d_in(), self.pre_channel.d_out()) != (d, d) {
            return Err(invalid(format!(
                "pre-channel maps {} → {}, expected {d} → {d}",
                self.pre_channel.d_in(),
                self.pre_channel.d_out()
            )));
        }
        if self.partition.is_empty() {
            return Err(invalid("partition is empty".into()));
        }
        for (i, e) in self.partition.iter().enumerate() {
            match e {
                PartitionEntry::Rank1 { vector, .. } => {
                    if vector.len() != self.dim_a {
                        return Err(invalid(format!("entry {i}: vector has length {}, expected {}", vector.len(), self.dim_a)));
                    }
                    let defect = (vector.norm() - 1.0).abs();
                    if defect > PARTITION_TOL {
                        return Err(invalid(format!("entry {i}: vector norm deviates from 1 by {defect:.3e}")));
                    }
                }
                PartitionEntry::Multi { projector, action } => {
                    if projector.shape() != (self.dim_a, self.dim_a) {
                        return Err(invalid(format!("entry {i}: projector has shape {:?}", projector.shape())));
                    }
                    let defect = linalg::hermitian_defect(projector) + (projector * projector - projector).norm();
                    if defect > PARTITION_TOL {
                        return Err(invalid(format!("entry {i}: not an orthogonal projector (defect {defect:.3e})")));
                    }
                    if e.rank() < 2 {
                        return Err(invalid(format!("entry {i}: multi-dimensional entry has rank {}", e.rank())));
                    }
                    if action.is_identity() {
                        return Err(invalid(format!(
                            "entry {i}: a subspace of rank {} must map B to a fixed state; \
                             only rank-1 entries may leave B unchanged",
                            e.rank()
                        )));
                    }
                }
            }
            if let BAction::PointTo(r) = e.action() {
                if r.dim() != self.dim_b {
                    return Err(invalid(format!("entry {i}: B state has dimension {}, expected {}", r.dim(), self.dim_b)));
                }
            }
        }
        let projectors: Vec<CMat> = self.partition.iter().map(PartitionEntry::projector).collect();
        for (i, p) in projectors.iter().enumerate() {
            for (j, q) in projectors.iter().enumerate().skip(i + 1) {
                let overlap = (p * q).norm();
                if overlap > PARTITION_TOL {
                    return Err(invalid(format!("entries {i} and {j} overlap (‖PQ‖ = {overlap:.3e})")));
                }
            }
        }
        let total = projectors.iter().fold(CMat::zeros(self.dim_a, self.dim_a), |acc, p| acc + p);
        let defect = (total - linalg::identity(self.dim_a)).norm();
        if defect > PARTITION_TOL {
            return Err(invalid(format!("projectors do not sum to the identity on A (defect {defect:.3e})")));
        }
        Ok(())
    }

    /// The convex CQ family containing every output of the built channel.
    pub fn induced_subset_spec(&self) -> ConvexCqSubsetSpec {
        let mut s = ConvexCqSubsetSpec::new(self.dim_a, self.dim_b);
        for e in &self.partition {
            match (e, e.action()) {
                (PartitionEntry::Rank1 { vector, .. }, BAction::PointTo(r)) => {
                    s.both.push(BothEntry { vector: vector.clone(), state: r.clone() })
                }
                (PartitionEntry::Rank1 { vector, .. }, BAction::Identity) => {
                    s.fixed.push(FixedEntry { vector: vector.clone(), generators: Vec::new() })
                }
                (PartitionEntry::Multi { projector, .. }, BAction::PointTo(r)) => {
                    s.point.push(PointEntry { projector: projector.clone(), state: r.clone() })
                }
                (PartitionEntry::Multi { .. }, BAction::Identity) => {}
            }
        }
        s
    }

    /// Entry signatures sorted, for comparison up to unitary equivalence.
    pub fn signature(&self) -> Vec<(usize, bool)> {
        let mut sig: Vec<_> = self.partition.iter().map(PartitionEntry::signature).collect();
        sig.sort();
        sig
    }
}

/// The pinching and conditional B actions, without the pre-channel.
fn post_map(spec: &DaChannelSpec) -> QuantumChannel {
    let mut kraus = Vec::new();
    for e in &spec.partition {
        let p = e.projector();
        match e.action() {
            BAction::Identity => kraus.push(linalg::kron(&p, &linalg::identity(spec.dim_b))),
            BAction::PointTo(r) => {
                for k in QuantumChannel::point(spec.dim_b, r).kraus() {
                    kraus.push(linalg::kron(&p, k));
                }
            }
        }
    }
    let d = spec.dim_a * spec.dim_b;
    QuantumChannel::from_kraus_unchecked(d, d, kraus)
}

/// `Σ_i Π_i ⊗ Φ_i ∘ ℰ`
pub fn build_da_channel(spec: &DaChannelSpec) -> Result<QuantumChannel> {
    spec.validate()?;
    let post = post_map(spec);
    let channel = QuantumChannel::compose(&post, &spec.pre_channel)?;
    let (tp, cp) = channel.cptp_defects();
    if tp > crate::channel::CPTP_TOL {
        return Err(Error::NotTracePreserving { defect: tp });
    }
    if cp > crate::channel::CPTP_TOL {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: -cp });
    }
    Ok(channel)
}

/// A random spec: random frame on A, random block sizes, random B states,
/// and a random pre-channel of Kraus rank 1–3.
pub fn random_da_spec<R: Rng + ?Sized>(dim_a: usize, dim_b: usize, rng: &mut R) -> Result<DaChannelSpec> {
    let u = random::random_unitary(dim_a, rng);
    let mut partition = Vec::new();
    let mut col = 0;
    for size in structures::random_block_sizes(dim_a, rng) {
        let frame = u.columns(col, size).into_owned();
        col += size;
        if size == 1 {
            let action = if rng.random_bool(0.5) {
                BAction::Identity
            } else {
                BAction::PointTo(random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)?)
            };
            partition.push(PartitionEntry::Rank1 { vector: frame.column(0).into_owned(), action });
        } else {
            let r = random::random_density(dim_b, Ensemble::HilbertSchmidt, rng)?;
            partition.push(PartitionEntry::Multi { projector: &frame * frame.adjoint(), action: BAction::PointTo(r) });
        }
    }
    let d = dim_a * dim_b;
    let rank = rng.random_range(1..=3);
    let pre_channel = QuantumChannel::from_kraus(d, d, random::random_kraus(d, d, rank, rng))?;
    Ok(DaChannelSpec { dim_a, dim_b, pre_channel, partition })
}

#[derive(Debug, Clone)]
pub struct CertifyFailure {
    pub sample: String,
    pub input: BipartiteState,
    pub output: BipartiteState,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct CertifyReport {
    pub samples: usize,
    pub worst_residual: f64,
    pub failures: usize,
    /// The failing input with the largest residual.
    pub worst_failure: Option<CertifyFailure>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Boundary inputs tried before the random ones.
fn boundary_inputs(dim_a: usize, dim_b: usize) -> Vec<(String, BipartiteState)> {
    let mut out = Vec::new();
    let zero_a = DensityOperator::basis_state(dim_a, 0);
    let zero_b = DensityOperator::basis_state(dim_b, 0);
    out.push(("|0⟩|0⟩".to_string(), BipartiteState::product(&zero_a, &zero_b)));
    out.push((
        "maximally mixed".to_string(),
        BipartiteState::product(&DensityOperator::maximally_mixed(dim_a), &DensityOperator::maximally_mixed(dim_b)),
    ));
    if let Some(bell) = probes::deterministic_probes(dim_a, dim_b).into_iter().find(|p| p.name.starts_with("bell")) {
        out.push(("maximally entangled".to_string(), bell.state));
    }
    out
}

/// Apply `Φ` to boundary inputs and `n_samples` seeded random inputs and
/// test each output with [`is_cq_exact`]. Sample `k` uses `random::derived(seed, k)`.
pub fn apply_and_certify(
    channel: &QuantumChannel,
    dim_a: usize,
    dim_b: usize,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<CertifyReport> {
    let d = dim_a * dim_b;
    if channel.d_in() != d || channel.d_out() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: channel.d_in().max(channel.d_out()) });
    }
    let mut report = CertifyReport { samples: 0, worst_residual: 0.0, failures: 0, worst_failure: None };
    let random_inputs = (0..n_samples).map(|k| -> Result<(String, BipartiteState)> {
        let mut rng = random::derived(seed, k as u64);
        let ensemble = match k % 4 {
            1 => Ensemble::HaarPure,
            3 if d >= 2 => Ensemble::Rank(2),
            _ => Ensemble::HilbertSchmidt,
        };
        let rho = random::random_density(d, ensemble, &mut rng)?;
        Ok((format!("random#{k}"), BipartiteState::new(dim_a, dim_b, rho)?))
    });
    for item in boundary_inputs(dim_a, dim_b).into_iter().map(Ok).chain(random_inputs) {
        let (name, input) = item?;
        let output = BipartiteState::from_matrix(dim_a, dim_b, channel.apply_matrix(input.matrix()))?;
        let CqCheck { is_cq, residual, .. } = is_cq_exact(&output, tol);
        report.samples += 1;
        if !is_cq {
            report.failures += 1;
            if residual > report.worst_residual {
                report.worst_failure = Some(CertifyFailure { sample: name, input, output, residual });
            }
        }
        report.worst_residual = report.worst_residual.max(residual);
    }
    Ok(report)
}

/// Result of [`structural_match`].
#[derive(Debug, Clone)]
pub enum MatchOutcome {
    Matched {
        spec: DaChannelSpec,
        /// Choi distance between the rebuilt channel and the input channel.
        residual: f64,
    },
    NoMatch {
        reason: String,
        counterexample: Option<CertifyFailure>,
    },
}

impl MatchOutcome {
    pub fn spec(&self) -> Option<&DaChannelSpec> {
        match self {
            MatchOutcome::Matched { spec, .. } => Some(spec),
            MatchOutcome::NoMatch { .. } => None,
        }
    }
}

/// Basis of the commutant of a set of matrices closed under adjoints.
fn commutant(generators: &[CMat], n: usize) -> Vec<CMat> {
    let n2 = n * n;
    let id = linalg::identity(n);
    let mut gram = CMat::zeros(n2, n2);
    for a in generators {
        for x in [a.clone(), a.adjoint()] {
            // Column-major vec: vec(XA − AX) = (Aᵀ⊗𝟙 − 𝟙⊗A) vec(X).
            let l = linalg::kron(&x.transpose(), &id) - linalg::kron(&id, &x);
            gram += l.adjoint() * l;
        }
    }
    let (values, vectors) = linalg::eigh(&gram);
    let top = values.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    (0..n2)
        .filter(|&k| values[k] <= 1e-9 * top)
        .map(|k| CMat::from_column_slice(n, n, vectors.column(k).as_slice()))
        .collect()
}

/// Spectral projectors of a Hermitian matrix, grouping eigenvalues closer than `gap`.
fn eigen_clusters(h: &CMat, gap: f64) -> Vec<CMat> {
    let (values, vectors) = linalg::eigh(h);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..values.len() {
        match clusters.last_mut() {
            Some(last) if values[k] - values[*last.last().unwrap()] <= gap => last.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
        .into_iter()
        .map(|idx| {
            let v = CMat::from_fn(h.nrows(), idx.len(), |r, col| vectors[(r, idx[col])]);
            &v * v.adjoint()
        })
        .collect()
}

/// Ordering key: rank, then the projector entries.
fn canonical_order(a: &PartitionEntry, b: &PartitionEntry) -> Ordering {
    let key = |e: &PartitionEntry| -> Vec<f64> {
        e.projector().iter().flat_map(|z| [(z.re * 1e9).round(), (z.im * 1e9).round()]).collect()
    };
    a.rank().cmp(&b.rank()).then_with(|| {
        key(a).iter().zip(key(b).iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
    })
}

/// Recover a discord-annihilating form for `Φ`.
///
/// `Φ` is certified first. It is then probed with the maximally mixed input
/// and `4·dim_a²` inputs `½·𝟙/d + ½·ρ` with `ρ` Hilbert–Schmidt random. The
/// orthogonal pieces of A come from the commutant of all B-indexed blocks of
/// the outputs. Each piece is then typed by the spread of its conditional
/// B states. The recovered spec uses `Φ` itself as pre-channel, since the
/// pinching leaves the outputs of a discord-annihilating channel unchanged.
pub fn structural_match(channel: &QuantumChannel, dim_a: usize, dim_b: usize, n_samples: usize, seed: u64) -> Result<MatchOutcome> {
    let certify = apply_and_certify(channel, dim_a, dim_b, n_samples, seed, discord::CQ_TOL)?;
    if !certify.passed() {
        return Ok(MatchOutcome::NoMatch {
            reason: format!("{} of {} sampled outputs are not classical-quantum", certify.failures, certify.samples),
            counterexample: certify.worst_failure,
        });
    }
    let d = dim_a * dim_b;
    let mut rng = random::seeded(MATCH_SEED);
    let mixed = linalg::identity(d) * c(1.0 / d as f64, 0.0);
    let mut outputs = vec![channel.apply_matrix(&mixed)];
    for _ in 0..4 * dim_a * dim_a {
        let rho = random::random_density(d, Ensemble::HilbertSchmidt, &mut rng)?;
        outputs.push(channel.apply_matrix(&((&mixed + rho.matrix()) * c(0.5, 0.0))));
    }

    let mut generators = Vec::new();
    for y in &outputs {
        for block in discord::blocks_over_b(&BipartiteState::from_trusted(dim_a, dim_b, y.clone())) {
            let norm = block.norm();
            if norm > 1e-12 {
                generators.push(block / c(norm, 0.0));
            }
        }
    }
    let basis = commutant(&generators, dim_a);
    let mut element = CMat::zeros(dim_a, dim_a);
    for x in &basis {
        element += x * c(rng.random_range(-1.0..1.0), 0.0);
    }
    let element = linalg::hermitian_part(&element);
    let spread = element.norm().max(1e-300);
    let mut pieces = eigen_clusters(&(element / c(spread, 0.0)), 1e-6);

    // Directions never populated by any output can carry any action; lump them together.
    let id_b = linalg::identity(dim_b);
    let weight = |q: &CMat| -> f64 {
        let lift = linalg::kron(q, &id_b);
        outputs.iter().map(|y| linalg::trace_re(&(&lift * y))).fold(0.0, f64::max)
    };
    let (populated, empty): (Vec<CMat>, Vec<CMat>) = pieces.drain(..).partition(|q| weight(q) > 1e-10);
    let mut pieces = populated;
    if !empty.is_empty() {
        pieces.push(empty.iter().fold(CMat::zeros(dim_a, dim_a), |acc, q| acc + q));
    }

    let mut partition = Vec::new();
    for q in pieces {
        let rank = linalg::trace_re(&q).round() as usize;
        let lift = linalg::kron(&q, &id_b);
        let mut conditionals = Vec::new();
        for y in &outputs {
            let block = &lift * y * &lift;
            let t = linalg::trace_re(&block);
            if t > 1e-9 {
                conditionals.push(partial_trace_matrix(&block, dim_a, dim_b, Subsystem::B) / c(t, 0.0));
            }
        }
        let action = if conditionals.is_empty() {
            BAction::PointTo(DensityOperator::maximally_mixed(dim_b))
        } else {
            let mean = conditionals.iter().fold(CMat::zeros(dim_b, dim_b), |acc, x| acc + x) / c(conditionals.len() as f64, 0.0);
            let spread = conditionals.iter().map(|x| (x - &mean).norm()).fold(0.0, f64::max);
            if spread <= POINT_SPREAD_TOL {
                BAction::PointTo(DensityOperator::from_trusted(mean))
            } else if rank == 1 {
                BAction::Identity
            } else {
                return Ok(MatchOutcome::NoMatch {
                    reason: format!("subspace of rank {rank} has input-dependent B conditionals (spread {spread:.3e})"),
                    counterexample: None,
                });
            }
        };
        let entry = if rank == 1 {
            let v = linalg::projector_range(&q).column(0).into_owned();
            PartitionEntry::Rank1 { vector: linalg::canonical_phase(&v), action }
        } else {
            PartitionEntry::Multi { projector: q, action }
        };
        partition.push(entry);
    }
    partition.sort_by(canonical_order);

    let spec = DaChannelSpec { dim_a, dim_b, pre_channel: channel.clone(), partition };
    let rebuilt = build_da_channel(&spec)?;
    let residual = rebuilt.choi_distance(channel);
    if residual > MATCH_TOL {
        return Ok(MatchOutcome::NoMatch {
            reason: format!("recovered form reproduces the channel only within {residual:.3e}"),
            counterexample: None,
        });
    }
    Ok(MatchOutcome::Matched { spec, residual })
}

/// Verdict of [`is_local_da`].
#[derive(Debug, Clone)]
pub enum LocalDa {
    /// The A channel is quantum-classical.
    ViaA,
    /// The B channel is a point channel.
    ViaB,
    NotDa(Box<DiscordantOutput>),
    /// Neither form applies but no discordant output was found.
    Inconclusive,
}

/// Decide whether `ℰ_A ⊗ ℱ_B` annihilates discord.
pub fn is_local_da(on_a: &QuantumChannel, on_b: &QuantumChannel, seed: u64) -> Result<LocalDa> {
    if classify::is_qc_channel(on_a).kind == VerdictKind::Yes {
        return Ok(LocalDa::ViaA);
    }
    if classify::is_point_channel(on_b).kind == VerdictKind::Yes {
        return Ok(LocalDa::ViaB);
    }
    let joint = QuantumChannel::tensor(on_a, on_b);
    let found = probes::find_discordant_output(
        &joint,
        (on_a.d_in(), on_b.d_in()),
        (on_a.d_out(), on_b.d_out()),
        probes::WITNESS_BUDGET,
        seed,
    )?;
    Ok(match found {
        Some(w) => LocalDa::NotDa(Box::new(w)),
        None => LocalDa::Inconclusive,
    })
}
