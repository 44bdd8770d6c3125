//! Probe states for counterexample searches.
//!
//! The deterministic family comes first: maximally entangled states,
//! product extremes, and two-term mixtures pairing noncommuting A states
//! with distinct B states. Seeded random states follow.

use crate::discord::{self, is_cq_exact, Strategy};
use crate::error::Result;
use crate::linalg::{self, c, CMat, CVec};
use crate::random::{self, Ensemble};
use crate::state::{BipartiteState, DensityOperator};
use crate::QuantumChannel;

/// Total number of states tried by [`find_discordant_output`] by default.
pub const WITNESS_BUDGET: usize = 500;
/// An output counts as discordant when its CQ residual exceeds this.
pub const WITNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub state: BipartiteState,
}

fn ket(dim: usize, amplitudes: &[(usize, f64)]) -> CVec {
    let mut v = CVec::zeros(dim);
    for &(i, a) in amplitudes {
        v[i] += c(a, 0.0);
    }
    v.normalize()
}

fn plus(dim: usize) -> CVec {
    ket(dim, &[(0, 1.0), (1, 1.0)])
}

fn minus(dim: usize) -> CVec {
    ket(dim, &[(0, 1.0), (1, -1.0)])
}

fn plus_i(dim: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[0] = c(1.0, 0.0);
    v[1] = c(0.0, 1.0);
    v.normalize()
}

fn projector(v: &CVec) -> DensityOperator {
    DensityOperator::from_trusted(linalg::outer(v))
}

fn product(a: &CVec, b: &CVec) -> BipartiteState {
    BipartiteState::product(&projector(a), &projector(b))
}

fn half_mix(first: (&CVec, &CVec), second: (&CVec, &CVec)) -> BipartiteState {
    let m = (linalg::kron(&linalg::outer(first.0), &linalg::outer(first.1))
        + linalg::kron(&linalg::outer(second.0), &linalg::outer(second.1)))
        * c(0.5, 0.0);
    BipartiteState::from_trusted(first.0.len(), first.1.len(), m)
}

/// The deterministic probe family for `dim_a ⊗ dim_b`.
pub fn deterministic_probes(dim_a: usize, dim_b: usize) -> Vec<Probe> {
    let mut out = Vec::new();
    let d = dim_a.min(dim_b);
    if d >= 2 {
        // Generalized Bell basis Σ_j ω^{jk} |j⟩|j+m⟩ on the first d levels of each side.
        for m in 0..d {
            for k in 0..d {
                let mut v = CVec::zeros(dim_a * dim_b);
                for j in 0..d {
                    let phase = 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64;
                    v[j * dim_b + (j + m) % d] = c(phase.cos(), phase.sin()) / (d as f64).sqrt();
                }
                let state = BipartiteState::from_trusted(dim_a, dim_b, linalg::outer(&v));
                out.push(Probe { name: format!("bell(shift={m},phase={k})"), state });
            }
        }
    }
    for i in 0..dim_a {
        for j in 0..dim_b {
            let state = product(&linalg::basis_vector(dim_a, i), &linalg::basis_vector(dim_b, j));
            out.push(Probe { name: format!("|{i}⟩|{j}⟩"), state });
        }
    }
    let zero_a = linalg::basis_vector(dim_a, 0);
    let zero_b = linalg::basis_vector(dim_b, 0);
    if dim_a >= 2 && dim_b >= 2 {
        let (pa, pb) = (plus(dim_a), plus(dim_b));
        let one_a = linalg::basis_vector(dim_a, 1);
        let one_b = linalg::basis_vector(dim_b, 1);
        out.push(Probe { name: "|+⟩|+⟩".into(), state: product(&pa, &pb) });
        out.push(Probe { name: "|0⟩|+⟩".into(), state: product(&zero_a, &pb) });
        out.push(Probe { name: "|+⟩|0⟩".into(), state: product(&pa, &zero_b) });
        out.push(Probe { name: "½|0⟩|0⟩ + ½|+⟩|+⟩".into(), state: half_mix((&zero_a, &zero_b), (&pa, &pb)) });
        out.push(Probe { name: "½|0⟩|0⟩ + ½|+⟩|1⟩".into(), state: half_mix((&zero_a, &zero_b), (&pa, &one_b)) });
        out.push(Probe { name: "½|0⟩|0⟩ + ½|1⟩|+⟩".into(), state: half_mix((&zero_a, &zero_b), (&one_a, &pb)) });
        out.push(Probe { name: "½|+⟩|0⟩ + ½|+i⟩|1⟩".into(), state: half_mix((&pa, &zero_b), (&plus_i(dim_a), &one_b)) });
        out.push(Probe { name: "½|0⟩|+⟩ + ½|1⟩|+i⟩".into(), state: half_mix((&zero_a, &pb), (&one_a, &plus_i(dim_b))) });
        out.push(Probe { name: "½|+⟩|+⟩ + ½|−⟩|0⟩".into(), state: half_mix((&pa, &pb), (&minus(dim_a), &zero_b)) });
    }
    out
}

/// Seeded random probe number `index` (HS, Haar-pure and rank-2 in rotation).
pub fn random_probe(dim_a: usize, dim_b: usize, seed: u64, index: usize) -> Result<Probe> {
    let mut rng = random::derived(seed, index as u64);
    let d = dim_a * dim_b;
    let (ensemble, label) = match index % 3 {
        0 => (Ensemble::HilbertSchmidt, "hs"),
        1 => (Ensemble::HaarPure, "pure"),
        _ if d >= 2 => (Ensemble::Rank(2), "rank2"),
        _ => (Ensemble::HilbertSchmidt, "hs"),
    };
    let state = random::random_density(d, ensemble, &mut rng)?;
    Ok(Probe { name: format!("random-{label}#{index}"), state: BipartiteState::new(dim_a, dim_b, state)? })
}

/// Deterministic probes followed by seeded random ones, `budget` in total.
pub fn probe_sequence(dim_a: usize, dim_b: usize, budget: usize, seed: u64) -> impl Iterator<Item = Probe> {
    let fixed = deterministic_probes(dim_a, dim_b);
    let n_fixed = fixed.len().min(budget);
    let n_random = budget - n_fixed;
    fixed
        .into_iter()
        .take(n_fixed)
        .chain((0..n_random).filter_map(move |k| random_probe(dim_a, dim_b, seed, k).ok()))
}

/// An input whose output fails the classical-quantum test.
#[derive(Debug, Clone)]
pub struct DiscordantOutput {
    pub probe: String,
    pub input: BipartiteState,
    pub output: BipartiteState,
    pub cq_residual: f64,
    /// Discord of the output (bits), when computed.
    pub discord: Option<f64>,
}

/// Search for an input `ρ` with `Φ(ρ)` not classical-quantum.
///
/// `channel` acts on `dims_in.0 ⊗ dims_in.1` and its output is read as
/// `dims_out.0 ⊗ dims_out.1`. The probe with the largest CQ residual among
/// the first few failures is returned, together with its output discord.
pub fn find_discordant_output(
    channel: &QuantumChannel,
    dims_in: (usize, usize),
    dims_out: (usize, usize),
    budget: usize,
    seed: u64,
) -> Result<Option<DiscordantOutput>> {
    const KEEP_LOOKING: usize = 8;
    let mut best: Option<DiscordantOutput> = None;
    let mut hits = 0;
    for probe in probe_sequence(dims_in.0, dims_in.1, budget, seed) {
        let y: CMat = channel.apply_matrix(probe.state.matrix());
        let output = BipartiteState::from_matrix(dims_out.0, dims_out.1, y)?;
        let check = is_cq_exact(&output, discord::CQ_TOL);
        if check.residual > WITNESS_TOL {
            hits += 1;
            if best.as_ref().is_none_or(|b| check.residual > b.cq_residual) {
                best = Some(DiscordantOutput {
                    probe: probe.name,
                    input: probe.state,
                    output,
                    cq_residual: check.residual,
                    discord: None,
                });
            }
            if hits >= KEEP_LOOKING {
                break;
            }
        }
    }
    if let Some(w) = best.as_mut() {
        w.discord = Some(discord::discord(&w.output, Strategy::Hybrid)?.value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Subsystem;

    #[test]
    fn bell_family_is_maximally_entangled() {
        for p in deterministic_probes(2, 2).iter().take(4) {
            let rho_a = p.state.reduced(Subsystem::A);
            assert!((rho_a.matrix() - DensityOperator::maximally_mixed(2).matrix()).norm() < 1e-12);
            assert!((p.state.state().purity() - 1.0).abs() < 1e-12);
        }
        assert_eq!(deterministic_probes(3, 3).iter().filter(|p| p.name.starts_with("bell")).count(), 9);
    }

    #[test]
    fn sequence_respects_budget() {
        assert_eq!(probe_sequence(2, 2, 500, 1).count(), 500);
        assert_eq!(probe_sequence(2, 3, 5, 1).count(), 5);
        assert_eq!(probe_sequence(1, 2, 20, 1).count(), 20);
    }

    #[test]
    fn identity_has_witness_dephasing_on_a_has_none() {
        let id = QuantumChannel::identity(4);
        let w = find_discordant_output(&id, (2, 2), (2, 2), 50, 3).unwrap().unwrap();
        assert!(w.discord.unwrap() > 0.9);
        let deph = QuantumChannel::dephasing(2).extend(Subsystem::A, 2);
        assert!(find_discordant_output(&deph, (2, 2), (2, 2), 100, 3).unwrap().is_none());
    }

    #[test]
    fn dephasing_on_b_caught_by_mixture_probe() {
        let deph = QuantumChannel::dephasing(2).extend(Subsystem::B, 2);
        let w = find_discordant_output(&deph, (2, 2), (2, 2), 500, 3).unwrap().unwrap();
        assert!(w.cq_residual > 1e-3);
    }
}
