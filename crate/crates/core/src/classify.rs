//! Decision procedures for channel families.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annihilators::{self, DaChannelSpec, MatchOutcome};
use crate::discord::{self, cq::is_cq_matrix, is_cq_exact, Strategy};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::probes::{self, DiscordantOutput};
use crate::state::{partial_trace_matrix, BipartiteState, DensityOperator, Subsystem};
use crate::{QuantumChannel, UnitalQubitParams};

/// Tolerance on Choi residuals for the point and quantum-classical tests.
pub const STRUCTURE_TOL: f64 = 1e-8;
/// Partial-transpose eigenvalues below `−PPT_TOL` count as negative.
pub const PPT_TOL: f64 = 1e-9;
/// Output discord below this counts as zero in sweeps.
pub const SWEEP_ZERO: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone)]
pub enum Witness {
    /// Two inputs mapped to outputs `distance` apart (Frobenius).
    DistinctOutputs { first: DensityOperator, second: DensityOperator, distance: f64 },
    /// Two inputs whose outputs have commutator norm `commutator`.
    NoncommutingOutputs { first: DensityOperator, second: DensityOperator, commutator: f64 },
    /// Eigenvector of the partially transposed normalized Choi matrix.
    NegativeEigenvector { vector: CVec, eigenvalue: f64 },
    /// An input on the composite system whose output is not classical-quantum.
    DiscordantOutput(Box<DiscordantOutput>),
    /// Real transfer matrix with `σ_min/σ_max = ratio`, too large for a discord-annihilating channel.
    FullRankTransfer { ratio: f64 },
}

impl Witness {
    /// The violation this witness records.
    pub fn magnitude(&self) -> f64 {
        match self {
            Witness::DistinctOutputs { distance, .. } => *distance,
            Witness::NoncommutingOutputs { commutator, .. } => *commutator,
            Witness::NegativeEigenvector { eigenvalue, .. } => -eigenvalue,
            Witness::DiscordantOutput(w) => w.cq_residual,
            Witness::FullRankTransfer { ratio } => *ratio,
        }
    }

    /// Recompute the violation from scratch.
    ///
    /// `channel` is the map the witness was found for: the local channel for
    /// the first three kinds, the composite map for a discordant output.
    pub fn recheck(&self, channel: &QuantumChannel) -> Result<f64> {
        Ok(match self {
            Witness::DistinctOutputs { first, second, .. } => {
                (channel.apply(first)?.matrix() - channel.apply(second)?.matrix()).norm()
            }
            Witness::NoncommutingOutputs { first, second, .. } => {
                linalg::commutator(channel.apply(first)?.matrix(), channel.apply(second)?.matrix()).norm()
            }
            Witness::NegativeEigenvector { vector, .. } => {
                let pt = partial_transpose_output(channel);
                -(vector.adjoint() * pt * vector)[(0, 0)].re
            }
            Witness::DiscordantOutput(w) => {
                let (da, db) = w.output.dims();
                is_cq_matrix(&channel.apply_matrix(w.input.matrix()), da, db, discord::CQ_TOL).residual
            }
            Witness::FullRankTransfer { .. } => {
                let t = channel.real_transfer();
                t.min_singular_value() / t.max_singular_value()
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Witness>,
    pub residual: f64,
    pub notes: String,
}

impl Verdict {
    fn yes(residual: f64, notes: impl Into<String>) -> Self {
        Self { kind: VerdictKind::Yes, witness: None, residual, notes: notes.into() }
    }

    fn no(residual: f64, witness: Witness, notes: impl Into<String>) -> Self {
        Self { kind: VerdictKind::No, witness: Some(witness), residual, notes: notes.into() }
    }

    fn unknown(residual: f64, notes: impl Into<String>) -> Self {
        Self { kind: VerdictKind::Unknown, witness: None, residual, notes: notes.into() }
    }
}

/// States `|i⟩⟨i|`, `|+_ij⟩⟨+_ij|`, `|+i_ij⟩⟨+i_ij|` spanning the Hermitian operators.
fn spanning_inputs(dim: usize) -> Vec<DensityOperator> {
    let mut out: Vec<DensityOperator> = (0..dim).map(|i| DensityOperator::basis_state(dim, i)).collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i + 1..dim {
            for phase in [c(h, 0.0), c(0.0, h)] {
                let mut v = CVec::zeros(dim);
                v[i] = c(h, 0.0);
                v[j] = phase;
                out.push(DensityOperator::from_trusted(linalg::outer(&v)));
            }
        }
    }
    out
}

/// Point channel test: `J = 𝟙 ⊗ σ` with `σ = tr_in J / d_in`.
pub fn is_point_channel(channel: &QuantumChannel) -> Verdict {
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let j = channel.choi();
    let sigma = partial_trace_matrix(j, d_in, d_out, Subsystem::B) / c(d_in as f64, 0.0);
    let residual = (j - linalg::kron(&linalg::identity(d_in), &sigma)).norm();
    if residual <= STRUCTURE_TOL * j.norm().max(1.0) {
        return Verdict::yes(residual, "Choi matrix factorizes as 𝟙 ⊗ σ");
    }
    let inputs = spanning_inputs(d_in);
    let outputs: Vec<CMat> = inputs.iter().map(|x| channel.apply_matrix(x.matrix())).collect();
    let (k, distance) = outputs
        .iter()
        .enumerate()
        .map(|(k, y)| (k, (y - &outputs[0]).norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let witness = Witness::DistinctOutputs { first: inputs[0].clone(), second: inputs[k].clone(), distance };
    Verdict::no(residual, witness, "two inputs have different outputs")
}

/// `J` with the slots swapped: output first, input second.
fn swapped_choi(channel: &QuantumChannel) -> CMat {
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let j = channel.choi();
    CMat::from_fn(d_in * d_out, d_in * d_out, |r, s| {
        let (a, i) = (r / d_in, r % d_in);
        let (b, jj) = (s / d_in, s % d_in);
        j[(i * d_out + a, jj * d_out + b)]
    })
}

fn partial_transpose_output(channel: &QuantumChannel) -> CMat {
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let j = channel.choi();
    CMat::from_fn(d_in * d_out, d_in * d_out, |r, s| {
        let (i, a) = (r / d_out, r % d_out);
        let (jj, b) = (s / d_out, s % d_out);
        j[(i * d_out + b, jj * d_out + a)]
    }) / c(d_in as f64, 0.0)
}

/// `X ↦ Σ_k tr[F_k X] |k⟩⟨k|`
#[derive(Debug, Clone)]
pub struct QcForm {
    pub povm: Vec<CMat>,
    pub basis: Vec<CVec>,
    /// Choi distance between the rebuilt channel and the original.
    pub residual: f64,
}

/// Recover `{F_k, |k⟩}` from a quantum-classical channel.
pub fn qc_form(channel: &QuantumChannel) -> Result<QcForm> {
    let d_in = channel.d_in();
    let state = BipartiteState::from_matrix(channel.d_out(), d_in, swapped_choi(channel) / c(d_in as f64, 0.0))?;
    let dec = discord::cq_decompose(&state)?;
    let mut povm = Vec::new();
    let mut basis = Vec::new();
    for (k, (p, cond)) in dec.probabilities.iter().zip(&dec.conditionals).enumerate() {
        povm.push(cond.matrix().transpose() * c(d_in as f64 * p, 0.0));
        basis.push(dec.basis.column(k).into_owned());
    }
    // Absorb rounding so the elements sum to the identity exactly.
    let total = povm.iter().fold(CMat::zeros(d_in, d_in), |acc, f| acc + f);
    let correction = (linalg::identity(d_in) - total) / c(povm.len() as f64, 0.0);
    for f in &mut povm {
        *f = linalg::hermitian_part(&(&*f + &correction));
    }
    let rebuilt = QuantumChannel::quantum_classical(&povm, &basis)?;
    let residual = rebuilt.choi_distance(channel);
    Ok(QcForm { povm, basis, residual })
}

/// Quantum-classical test: the slot-swapped normalized Choi matrix is classical on the output slot.
pub fn is_qc_channel(channel: &QuantumChannel) -> Verdict {
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let swapped = swapped_choi(channel) / c(d_in as f64, 0.0);
    let check = is_cq_matrix(&swapped, d_out, d_in, discord::CQ_TOL);
    if !check.is_cq {
        let inputs = spanning_inputs(d_in);
        let outputs: Vec<CMat> = inputs.iter().map(|x| channel.apply_matrix(x.matrix())).collect();
        let mut best = (0, 0, 0.0);
        for a in 0..outputs.len() {
            for b in a + 1..outputs.len() {
                let norm = linalg::commutator(&outputs[a], &outputs[b]).norm();
                if norm > best.2 {
                    best = (a, b, norm);
                }
            }
        }
        let witness =
            Witness::NoncommutingOutputs { first: inputs[best.0].clone(), second: inputs[best.1].clone(), commutator: best.2 };
        return Verdict::no(check.residual, witness, "two outputs do not commute");
    }
    match qc_form(channel) {
        Ok(form) if form.residual <= STRUCTURE_TOL => {
            Verdict::yes(check.residual.max(form.residual), "outputs share one eigenbasis; measure-and-prepare form recovered")
        }
        Ok(form) => Verdict::unknown(form.residual, "Choi test passed but the recovered form does not reproduce the channel"),
        Err(e) => Verdict::unknown(check.residual, format!("Choi test passed but decomposition failed: {e}")),
    }
}

/// PPT test on the normalized Choi matrix. Exact when `d_in·d_out ≤ 6`;
/// in larger dimensions a classical-quantum Choi matrix still gives Yes.
pub fn is_entanglement_breaking(channel: &QuantumChannel) -> Verdict {
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let pt = partial_transpose_output(channel);
    let (values, vectors) = linalg::eigh(&pt);
    let min = values.first().copied().unwrap_or(0.0);
    if min < -PPT_TOL {
        let witness = Witness::NegativeEigenvector { vector: vectors.column(0).into_owned(), eigenvalue: min };
        return Verdict::no(-min, witness, "partial transpose of the Choi matrix is not positive");
    }
    let residual = min.min(0.0).abs();
    if d_in == 1 || d_out == 1 || d_in * d_out <= 6 {
        return Verdict::yes(residual, "PPT, which suffices in these dimensions");
    }
    // Classical-quantum Choi matrices (in either slot) are separable.
    let choi = channel.choi() / c(d_in as f64, 0.0);
    let swapped = swapped_choi(channel) / c(d_in as f64, 0.0);
    if is_cq_matrix(&choi, d_in, d_out, discord::CQ_TOL).is_cq || is_cq_matrix(&swapped, d_out, d_in, discord::CQ_TOL).is_cq {
        return Verdict::yes(residual, "Choi matrix is classical-quantum, hence separable");
    }
    Verdict::unknown(residual, "PPT, which does not decide separability in these dimensions")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "acts_on", rename_all = "snake_case")]
pub enum Context {
    /// Local channel on A; B has dimension `dim_b`.
    A { dim_b: usize },
    /// Local channel on B; A has dimension `dim_a`.
    B { dim_a: usize },
    /// Global channel on `dim_a ⊗ dim_b`.
    Ab { dim_a: usize, dim_b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    DbA,
    NotDbA,
    DbB,
    NotDbB,
    Da,
    NotDa,
    Inconclusive,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::DbA => "DB-A",
            Label::NotDbA => "not DB-A",
            Label::DbB => "DB-B",
            Label::NotDbB => "not DB-B",
            Label::Da => "DA",
            Label::NotDa => "not DA",
            Label::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub seed: u64,
    /// Random inputs for certification of global channels.
    pub samples: usize,
    /// States tried by witness searches.
    pub witness_budget: usize,
    pub tol_cq: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { seed: 42, samples: 200, witness_budget: probes::WITNESS_BUDGET, tol_cq: discord::CQ_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub context: Context,
    pub label: Label,
    /// The verdict the label rests on.
    pub verdict: Verdict,
    pub entanglement_breaking: Verdict,
    /// `σ_min/σ_max` of the real transfer matrix.
    pub transfer_ratio: f64,
    /// Recovered form, for global channels classified DA.
    pub recovered: Option<DaChannelSpec>,
}

fn discordant_witness(
    channel: &QuantumChannel,
    dims_in: (usize, usize),
    dims_out: (usize, usize),
    opts: &ClassifyOptions,
) -> Result<Option<Witness>> {
    Ok(probes::find_discordant_output(channel, dims_in, dims_out, opts.witness_budget, opts.seed)?
        .map(|w| Witness::DiscordantOutput(Box::new(w))))
}

/// Classify a channel in the given context.
///
/// Local channels are decided structurally: on A by the quantum-classical
/// test, on B by the point test. A negative answer comes with a discordant
/// output found by [`probes::find_discordant_output`]. Global channels go
/// through the transfer-matrix screen, certification, and structural recovery.
pub fn classify_channel(channel: &QuantumChannel, context: Context, opts: &ClassifyOptions) -> Result<ClassificationReport> {
    let t = channel.real_transfer();
    let transfer_ratio = t.min_singular_value() / t.max_singular_value().max(f64::MIN_POSITIVE);
    let entanglement_breaking = is_entanglement_breaking(channel);
    let (d_in, d_out) = (channel.d_in(), channel.d_out());
    let mut recovered = None;

    let (label, verdict) = match context {
        Context::A { dim_b } => {
            let mut v = is_qc_channel(channel);
            let label = match v.kind {
                VerdictKind::Yes => Label::DbA,
                VerdictKind::No => {
                    let extended = channel.extend(Subsystem::A, dim_b);
                    if let Some(w) = discordant_witness(&extended, (d_in, dim_b), (d_out, dim_b), opts)? {
                        v.witness = Some(w);
                    }
                    Label::NotDbA
                }
                VerdictKind::Unknown => Label::Inconclusive,
            };
            (label, v)
        }
        Context::B { dim_a } => {
            let mut v = is_point_channel(channel);
            let label = match v.kind {
                VerdictKind::Yes => Label::DbB,
                VerdictKind::No => {
                    let extended = channel.extend(Subsystem::B, dim_a);
                    if let Some(w) = discordant_witness(&extended, (dim_a, d_in), (dim_a, d_out), opts)? {
                        v.witness = Some(w);
                    }
                    Label::NotDbB
                }
                VerdictKind::Unknown => Label::Inconclusive,
            };
            (label, v)
        }
        Context::Ab { dim_a, dim_b } => {
            let d = dim_a * dim_b;
            if d_in != d || d_out != d {
                return Err(Error::DimensionMismatch { expected: d, actual: if d_in != d { d_in } else { d_out } });
            }
            classify_global(channel, dim_a, dim_b, transfer_ratio, opts, &mut recovered)?
        }
    };
    Ok(ClassificationReport { context, label, verdict, entanglement_breaking, transfer_ratio, recovered })
}

fn classify_global(
    channel: &QuantumChannel,
    dim_a: usize,
    dim_b: usize,
    transfer_ratio: f64,
    opts: &ClassifyOptions,
    recovered: &mut Option<DaChannelSpec>,
) -> Result<(Label, Verdict)> {
    if !channel.real_transfer().is_singular() {
        let witness = discordant_witness(channel, (dim_a, dim_b), (dim_a, dim_b), opts)?
            .unwrap_or(Witness::FullRankTransfer { ratio: transfer_ratio });
        return Ok((Label::NotDa, Verdict::no(transfer_ratio, witness, "real transfer matrix has full rank")));
    }
    let report = annihilators::apply_and_certify(channel, dim_a, dim_b, opts.samples, opts.seed, opts.tol_cq)?;
    if let Some(f) = report.worst_failure {
        let value = discord::discord(&f.output, Strategy::Hybrid)?.value;
        let w = DiscordantOutput {
            probe: f.sample,
            input: f.input,
            output: f.output,
            cq_residual: f.residual,
            discord: Some(value),
        };
        let notes = format!("{} of {} sampled outputs are not classical-quantum", report.failures, report.samples);
        return Ok((Label::NotDa, Verdict::no(report.worst_residual, Witness::DiscordantOutput(Box::new(w)), notes)));
    }
    match annihilators::structural_match(channel, dim_a, dim_b, opts.samples.min(50), opts.seed)? {
        MatchOutcome::Matched { spec, residual } => {
            *recovered = Some(spec);
            Ok((Label::Da, Verdict::yes(residual.max(report.worst_residual), "all sampled outputs CQ; pinching form recovered")))
        }
        MatchOutcome::NoMatch { reason, .. } => Ok((Label::Inconclusive, Verdict::unknown(report.worst_residual, reason))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub is_db: bool,
    pub is_eb: bool,
    pub max_discord: f64,
}

/// Grid values `−1, −1+step, …` up to 1, snapped near 0 and ±1.
pub fn sweep_axis(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!("step must lie in (0, 1], got {step}")));
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let mut x = -1.0 + k as f64 * step;
        if x > 1.0 + 1e-9 {
            break;
        }
        for snap in [-1.0, 0.0, 1.0] {
            if (x - snap).abs() < 1e-9 {
                x = snap;
            }
        }
        out.push(x);
        k += 1;
    }
    Ok(out)
}

/// Classify every unital qubit channel on the grid inside the CPTP tetrahedron.
///
/// Rows come in grid order (`l1` slowest). `is_db` uses the side rule:
/// quantum-classical on A, point on B. `max_discord` is the largest output
/// discord over the first `n_probes` states of [`probes::probe_sequence`].
pub fn tetrahedron_sweep(step: f64, side: Subsystem, dim_other: usize, n_probes: usize, seed: u64) -> Result<Vec<SweepRow>> {
    let axis = sweep_axis(step)?;
    let (dim_a, dim_b) = match side {
        Subsystem::A => (2, dim_other),
        Subsystem::B => (dim_other, 2),
    };
    let inputs: Vec<BipartiteState> = probes::probe_sequence(dim_a, dim_b, n_probes, seed).map(|p| p.state).collect();
    let mut rows = Vec::new();
    for &l1 in &axis {
        for &l2 in &axis {
            for &l3 in &axis {
                let params = UnitalQubitParams::new(l1, l2, l3);
                if !params.is_cptp(1e-12) {
                    continue;
                }
                let channel = QuantumChannel::unital_qubit(params)?;
                let is_db = match side {
                    Subsystem::A => is_qc_channel(&channel).kind == VerdictKind::Yes,
                    Subsystem::B => is_point_channel(&channel).kind == VerdictKind::Yes,
                };
                let is_eb = is_entanglement_breaking(&channel).kind == VerdictKind::Yes;
                let extended = channel.extend(side, dim_other);
                let mut max_discord = 0.0f64;
                for x in &inputs {
                    let y = BipartiteState::from_matrix(dim_a, dim_b, extended.apply_matrix(x.matrix()))?;
                    if is_cq_exact(&y, discord::CQ_TOL).residual <= 1e-12 {
                        continue;
                    }
                    max_discord = max_discord.max(discord::discord(&y, Strategy::Hybrid)?.value);
                }
                rows.push(SweepRow { l1, l2, l3, is_db, is_eb, max_discord });
            }
        }
    }
    Ok(rows)
}

/// `%.9g`-style formatting.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}"))
    }
}

pub const SWEEP_HEADER: &str = "l1,l2,l3,is_db,is_eb,max_discord";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig(r.l1, 9),
            format_sig(r.l2, 9),
            format_sig(r.l3, 9),
            r.is_db,
            r.is_eb,
            format_sig(r.max_discord, 9)
        ));
    }
    out
}
