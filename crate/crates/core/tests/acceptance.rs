//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;

use discord_channels::annihilators::{self, BAction, DaChannelSpec, MatchOutcome, PartitionEntry};
use discord_channels::classify::{self, ClassifyOptions, Context, Label, VerdictKind, Witness};
use discord_channels::discord::{self, is_cq_exact, Strategy, CQ_TOL};
use discord_channels::linalg::{self, c, CMat, CVec};
use discord_channels::probes;
use discord_channels::random::{self, Ensemble};
use discord_channels::structures::{self, BothEntry, ConvexCqSubsetSpec};
use discord_channels::{BipartiteState, DensityOperator, QuantumChannel, Subsystem, UnitalQubitParams};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ket(v: &[(f64, f64)]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&(re, im)| c(re, im))).normalize()
}

fn pure(v: &CVec) -> DensityOperator {
    DensityOperator::pure(v).expect("unit vector")
}

fn zero_count(l: [f64; 3]) -> usize {
    l.iter().filter(|x| **x == 0.0).count()
}

fn max_probe_discord(channel: &QuantumChannel, side: Subsystem, probes: &[BipartiteState]) -> Result<f64, String> {
    let extended = channel.extend(side, 2);
    let mut best = 0.0f64;
    for x in probes {
        let y = BipartiteState::from_matrix(2, 2, extended.apply_matrix(x.matrix())).map_err(err)?;
        best = best.max(discord::discord(&y, Strategy::Hybrid).map_err(err)?.value);
    }
    Ok(best)
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let rows = classify::tetrahedron_sweep(0.125, Subsystem::A, 2, 20, 42).map_err(err)?;
    let mut flagged = 0;
    let mut worst_flagged = 0.0f64;
    for r in &rows {
        let axis = zero_count([r.l1, r.l2, r.l3]) >= 2;
        ensure(r.is_db == axis, || format!("({}, {}, {}) has is_db = {}", r.l1, r.l2, r.l3, r.is_db))?;
        if r.is_db {
            flagged += 1;
            worst_flagged = worst_flagged.max(r.max_discord);
            ensure(r.max_discord <= classify::SWEEP_ZERO, || {
                format!("axis point ({}, {}, {}) has output discord {:.3e}", r.l1, r.l2, r.l3, r.max_discord)
            })?;
        }
    }
    let probe_states: Vec<BipartiteState> = probes::probe_sequence(2, 2, 20, 42).map(|p| p.state).collect();
    let mut rng = random::seeded(101);
    let mut weakest = f64::INFINITY;
    let mut accepted = 0;
    while accepted < 50 {
        let l: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let inside = (l[0] + l[1]).abs() < 1.0 + l[2] - 1e-3 && (l[0] - l[1]).abs() < 1.0 - l[2] - 1e-3;
        // Interior: strictly inside and at least 0.1 away from every axis.
        if !inside || l.iter().filter(|x| x.abs() < 0.1).count() >= 2 {
            continue;
        }
        accepted += 1;
        let ch = QuantumChannel::unital_qubit(UnitalQubitParams::new(l[0], l[1], l[2])).map_err(err)?;
        let d = max_probe_discord(&ch, Subsystem::A, &probe_states)?;
        weakest = weakest.min(d);
        ensure(d >= 1e-3, || format!("interior point {l:?} has max output discord {d:.3e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 300.0, || format!("took {secs:.0}s"))?;
    Ok(format!(
        "{} grid points, {flagged} on axes (max discord {worst_flagged:.1e}); 50 interior points, weakest max discord {weakest:.3}",
        rows.len()
    ))
}

fn criterion_2() -> Check {
    let rows = classify::tetrahedron_sweep(0.125, Subsystem::B, 2, 20, 42).map_err(err)?;
    let flagged: Vec<_> = rows.iter().filter(|r| r.is_db).collect();
    ensure(flagged.len() == 1 && zero_count([flagged[0].l1, flagged[0].l2, flagged[0].l3]) == 3, || {
        format!("flagged rows: {:?}", flagged.iter().map(|r| (r.l1, r.l2, r.l3)).collect::<Vec<_>>())
    })?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zero = ket(&[(1.0, 0.0), (0.0, 0.0)]);
    let plus = ket(&[(h, 0.0), (h, 0.0)]);
    let m = (linalg::kron(&linalg::outer(&zero), &linalg::outer(&zero)) + linalg::kron(&linalg::outer(&plus), &linalg::outer(&plus)))
        * c(0.5, 0.0);
    let input = BipartiteState::from_matrix(2, 2, m).map_err(err)?;
    let deph_b = QuantumChannel::dephasing(2).extend(Subsystem::B, 2);
    let output = deph_b.apply_bipartite(&input).map_err(err)?;
    let check = is_cq_exact(&output, CQ_TOL);
    ensure(!check.is_cq && check.residual >= 1e-3, || format!("output CQ residual {:.3e}", check.residual))?;
    let report = classify::classify_channel(&QuantumChannel::dephasing(2), Context::B { dim_a: 2 }, &ClassifyOptions::default())
        .map_err(err)?;
    ensure(report.label == Label::NotDbB, || format!("dephasing on B labelled {}", report.label))?;
    Ok(format!("{} side-B rows, only the origin flagged; witness output CQ residual {:.3e}", rows.len(), check.residual))
}

fn criterion_3() -> Check {
    let mut rng = random::seeded(303);
    let mut kinds = [0usize; 3];
    let mut worst = 0.0f64;
    for k in 0..30 {
        let (da, db) = if k % 2 == 0 { (2, 2) } else { (3, 2) };
        let spec = annihilators::random_da_spec(da, db, &mut rng).map_err(err)?;
        for e in &spec.partition {
            match (e, e.action()) {
                (PartitionEntry::Rank1 { .. }, BAction::PointTo(_)) => kinds[0] += 1,
                (PartitionEntry::Rank1 { .. }, BAction::Identity) => kinds[1] += 1,
                _ => kinds[2] += 1,
            }
        }
        let ch = annihilators::build_da_channel(&spec).map_err(err)?;
        let t = ch.real_transfer();
        let ratio = t.min_singular_value() / t.max_singular_value();
        worst = worst.max(ratio);
        ensure(ratio < 1e-8, || format!("channel {k} ({da}x{db}) has σ_min/σ_max = {ratio:.3e}"))?;
    }
    ensure(kinds.iter().all(|&n| n > 0), || format!("entry kinds (both, fixed, point) = {kinds:?}"))?;
    let id = QuantumChannel::identity(4);
    let s = id.real_transfer().min_singular_value();
    ensure((s - 1.0).abs() < 1e-12, || format!("identity σ_min = {s}"))?;
    Ok(format!("30 channels, largest σ_min/σ_max {worst:.1e}; entries both/fixed/point = {kinds:?}; identity σ_min = {s:.12}"))
}

fn criterion_4() -> Check {
    let mut rng = random::seeded(404);
    let dims = [(2, 2), (3, 2), (2, 3)];
    let mut worst_residual = 0.0f64;
    for k in 0..20 {
        let (da, db) = dims[k % 3];
        let spec = annihilators::random_da_spec(da, db, &mut rng).map_err(err)?;
        let ch = annihilators::build_da_channel(&spec).map_err(err)?;
        let report = annihilators::apply_and_certify(&ch, da, db, 200, k as u64, CQ_TOL).map_err(err)?;
        ensure(report.passed(), || format!("spec {k}: {} failures, worst {:.3e}", report.failures, report.worst_residual))?;
        match annihilators::structural_match(&ch, da, db, 50, k as u64).map_err(err)? {
            MatchOutcome::Matched { spec: got, residual } => {
                worst_residual = worst_residual.max(residual);
                ensure(got.signature() == spec.signature(), || {
                    format!("spec {k}: recovered {:?}, built {:?}", got.signature(), spec.signature())
                })?;
            }
            MatchOutcome::NoMatch { reason, .. } => return Err(format!("spec {k}: no match ({reason})")),
        }
    }
    Ok(format!("20 specs certified on 200 samples each; signatures recovered, worst Choi residual {worst_residual:.1e}"))
}

fn criterion_5() -> Check {
    let mut rng = random::seeded(505);
    let dims = [(2, 2), (3, 2), (3, 3), (2, 3)];
    for k in 0..10 {
        let (da, db) = dims[k % dims.len()];
        let spec = structures::random_spec(da, db, &mut rng).map_err(err)?;
        let report = structures::mixing_closure_check(&spec, 200, k as u64).map_err(err)?;
        ensure(report.passed(), || format!("spec {k}: {} of 200 mixtures failed", report.failures.len()))?;
    }

    let mut non_cq = 0;
    for _ in 0..200 {
        let s1 = structures::random_spec(2, 2, &mut rng).map_err(err)?;
        let s2 = structures::random_spec(2, 2, &mut rng).map_err(err)?;
        let x = structures::sample_state(&s1, None, &mut rng).map_err(err)?;
        let y = structures::sample_state(&s2, None, &mut rng).map_err(err)?;
        let mixed = x.mix(&y, rng.random_range(0.1..0.9)).map_err(err)?;
        if !is_cq_exact(&mixed, CQ_TOL).is_cq {
            non_cq += 1;
        }
    }
    ensure(non_cq >= 190, || format!("only {non_cq} of 200 cross-spec mixtures fail the CQ test"))?;

    let mut agree = 0;
    let mut predicted_cq = 0;
    for k in 0..500 {
        let da = 2 + k % 2;
        let db = 2;
        let psi = random::random_pure_vector(da, &mut rng);
        let sigma = random::random_density(db, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?;
        let (phi, tau) = match k % 4 {
            0 => (&psi * c(0.0, 1.0), random::random_density(db, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?),
            1 => {
                let r = random::random_pure_vector(da, &mut rng);
                let orth = &r - &psi * psi.dotc(&r);
                (orth.normalize(), random::random_density(db, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?)
            }
            2 => (random::random_pure_vector(da, &mut rng), sigma.clone()),
            _ => (
                random::random_pure_vector(da, &mut rng),
                random::random_density(db, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?,
            ),
        };
        let single = |v: &CVec, s: &DensityOperator| {
            let mut spec = ConvexCqSubsetSpec::new(da, db);
            spec.both.push(BothEntry { vector: v.clone(), state: s.clone() });
            spec
        };
        let x = structures::sample_state(&single(&psi, &sigma), None, &mut rng).map_err(err)?;
        let y = structures::sample_state(&single(&phi, &tau), None, &mut rng).map_err(err)?;
        let mixed = x.mix(&y, rng.random_range(0.1..0.9)).map_err(err)?;
        let predicted = structures::dichotomy_predicts_cq(&psi, &sigma, &phi, &tau);
        predicted_cq += predicted as usize;
        if predicted == is_cq_exact(&mixed, CQ_TOL).is_cq {
            agree += 1;
        }
    }
    ensure(agree == 500, || format!("dichotomy held on {agree} of 500 pairs"))?;
    Ok(format!(
        "10 specs closed under 200 mixtures; {non_cq}/200 cross-spec mixtures non-CQ; dichotomy 500/500 ({predicted_cq} predicted CQ)"
    ))
}

fn discordant_witness_value(report: &classify::ClassificationReport) -> Result<(f64, f64), String> {
    match &report.verdict.witness {
        Some(Witness::DiscordantOutput(w)) => {
            let lib = w.discord.ok_or("witness lacks discord")?;
            let (da, db) = w.output.dims();
            if da != 2 {
                return Ok((lib, lib));
            }
            Ok((lib, common::grid_discord(w.output.matrix(), db, 64, 128)))
        }
        other => Err(format!("expected a discordant-output witness, got {other:?}")),
    }
}

fn criterion_6() -> Check {
    let mut rng = random::seeded(606);
    let opts = ClassifyOptions { samples: 50, ..Default::default() };
    let random_channel = |rng: &mut random::SeededRng| -> Result<QuantumChannel, String> {
        let rank = rng.random_range(1..=4);
        QuantumChannel::from_kraus(2, 2, random::random_kraus(2, 2, rank, rng)).map_err(err)
    };
    let random_qc = |rng: &mut random::SeededRng| -> Result<QuantumChannel, String> {
        let outcomes = rng.random_range(2..=4);
        let povm = random::random_povm(2, outcomes, rng);
        let u = random::random_unitary(outcomes, rng);
        let basis: Vec<CVec> = (0..outcomes).map(|k| u.column(k).into_owned()).collect();
        QuantumChannel::quantum_classical(&povm, &basis).map_err(err)
    };
    let random_point = |rng: &mut random::SeededRng| -> Result<QuantumChannel, String> {
        let sigma = random::random_density(2, Ensemble::HilbertSchmidt, rng).map_err(err)?;
        Ok(QuantumChannel::point(2, &sigma))
    };
    let label = |ch: &QuantumChannel, ctx: Context| classify::classify_channel(ch, ctx, &opts).map(|r| r.label).map_err(err);

    for k in 0..50 {
        let qc = random_qc(&mut rng)?;
        let d_out = qc.d_out();
        ensure(label(&qc, Context::A { dim_b: 2 })? == Label::DbA, || format!("random q-c channel {k} not DB-A"))?;
        let point = random_point(&mut rng)?;
        ensure(label(&point, Context::B { dim_a: 2 })? == Label::DbB, || format!("random point channel {k} not DB-B"))?;

        let f = random_channel(&mut rng)?;
        let after = QuantumChannel::compose(&qc, &f).map_err(err)?;
        ensure(label(&after, Context::A { dim_b: 2 })? == Label::DbA, || format!("q-c ∘ F #{k} ({d_out} outcomes) not DB-A"))?;
        let f_after_point = QuantumChannel::compose(&f, &point).map_err(err)?;
        ensure(label(&f_after_point, Context::B { dim_a: 2 })? == Label::DbB, || format!("F ∘ point #{k} not DB-B"))?;
        let point_after_f = QuantumChannel::compose(&point, &f).map_err(err)?;
        ensure(label(&point_after_f, Context::B { dim_a: 2 })? == Label::DbB, || format!("point ∘ F #{k} not DB-B"))?;
    }

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = [ket(&[(1.0, 0.0), (0.0, 0.0)]), ket(&[(0.0, 0.0), (1.0, 0.0)])];
    let x = [ket(&[(h, 0.0), (h, 0.0)]), ket(&[(h, 0.0), (-h, 0.0)])];
    let qc_in = |b: &[CVec; 2]| QuantumChannel::quantum_classical(&[linalg::outer(&b[0]), linalg::outer(&b[1])], b);
    let z_qc = qc_in(&z).map_err(err)?;
    let x_qc = qc_in(&x).map_err(err)?;
    let mixed_qc = QuantumChannel::mixture(&[(0.5, &z_qc), (0.5, &x_qc)]).map_err(err)?;
    let report = classify::classify_channel(&mixed_qc, Context::A { dim_b: 2 }, &opts).map_err(err)?;
    ensure(report.label == Label::NotDbA, || format!("½(z q-c) + ½(x q-c) labelled {}", report.label))?;
    let (qc_mix_lib, qc_mix_oracle) = discordant_witness_value(&report)?;
    ensure(qc_mix_lib >= 1e-3 && qc_mix_oracle >= 1e-3, || format!("mixed q-c witness discord {qc_mix_lib:.3e} / oracle {qc_mix_oracle:.3e}"))?;

    let da_in = |b: &[CVec; 2], states: [&CVec; 2]| -> Result<QuantumChannel, String> {
        let partition = (0..2)
            .map(|i| PartitionEntry::Rank1 { vector: b[i].clone(), action: BAction::PointTo(pure(states[i])) })
            .collect();
        annihilators::build_da_channel(&DaChannelSpec::with_partition(2, 2, partition)).map_err(err)
    };
    let da_z = da_in(&z, [&z[0], &z[1]])?;
    let da_x = da_in(&x, [&x[0], &x[1]])?;
    for (name, ch) in [("z", &da_z), ("x", &da_x)] {
        let r = annihilators::apply_and_certify(ch, 2, 2, 50, 1, CQ_TOL).map_err(err)?;
        ensure(r.passed(), || format!("{name}-basis DA channel fails certification"))?;
    }
    let mixed_da = QuantumChannel::mixture(&[(0.5, &da_z), (0.5, &da_x)]).map_err(err)?;
    let report = classify::classify_channel(&mixed_da, Context::Ab { dim_a: 2, dim_b: 2 }, &opts).map_err(err)?;
    ensure(report.label == Label::NotDa, || format!("½ DA_z + ½ DA_x labelled {}", report.label))?;
    let (da_mix_lib, da_mix_oracle) = discordant_witness_value(&report)?;
    ensure(da_mix_lib >= 1e-3 && da_mix_oracle >= 1e-3, || format!("mixed DA witness discord {da_mix_lib:.3e} / oracle {da_mix_oracle:.3e}"))?;

    Ok(format!(
        "150 compositions and 100 random q-c/point channels classified as expected; \
         mixed q-c witness D = {qc_mix_lib:.3} (oracle {qc_mix_oracle:.3}); mixed DA witness D = {da_mix_lib:.3} (oracle {da_mix_oracle:.3})"
    ))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let mut rng = random::seeded(707);
    let mut worst_product = 0.0f64;
    for _ in 0..20 {
        let a = random::random_density(2, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?;
        let b = random::random_density(2, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?;
        let d = discord::discord(&BipartiteState::product(&a, &b), Strategy::Hybrid).map_err(err)?.value;
        worst_product = worst_product.max(d.abs());
    }
    ensure(worst_product <= 1e-6, || format!("product state discord {worst_product:.3e}"))?;

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = BipartiteState::new(2, 2, pure(&ket(&[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)]))).map_err(err)?;
    let bell_lib = discord::discord(&bell, Strategy::Hybrid).map_err(err)?.value;
    let bell_oracle = common::grid_discord(bell.matrix(), 2, 128, 256);
    ensure((bell_lib - 1.0).abs() <= 1e-3 && (bell_oracle - 1.0).abs() <= 1e-3, || {
        format!("Bell discord {bell_lib} (oracle {bell_oracle})")
    })?;

    let mut worst_cq = 0.0f64;
    for _ in 0..20 {
        let spec = structures::random_spec(2, 2, &mut rng).map_err(err)?;
        let x = structures::sample_state(&spec, None, &mut rng).map_err(err)?;
        worst_cq = worst_cq.max(discord::discord(&x, Strategy::Hybrid).map_err(err)?.value);
    }
    ensure(worst_cq <= 5e-3, || format!("CQ sample discord {worst_cq:.3e}"))?;

    let mut worst_gap = 0.0f64;
    for k in 0..50 {
        let rho = random::random_density(4, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?;
        let state = BipartiteState::new(2, 2, rho).map_err(err)?;
        let lib = discord::discord(&state, Strategy::Hybrid).map_err(err)?.value;
        let oracle = common::grid_discord(state.matrix(), 2, 128, 256);
        let gap = (lib - oracle).abs();
        worst_gap = worst_gap.max(gap);
        ensure(gap <= 1e-3, || format!("state {k}: hybrid {lib:.6} vs grid oracle {oracle:.6}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 120.0, || format!("took {secs:.0}s"))?;
    Ok(format!(
        "products ≤ {worst_product:.1e}; Bell {bell_lib:.6} (oracle {bell_oracle:.6}); CQ samples ≤ {worst_cq:.1e}; \
         hybrid vs 128x256 oracle max gap {worst_gap:.1e} on 50 states"
    ))
}

fn criterion_8() -> Check {
    // Oracle: bisect the sign change of the independently built PPT eigenvalue.
    let (mut lo, mut hi) = (0.0, 1.0);
    ensure(common::depolarizing_ppt_min(lo) >= 0.0 && common::depolarizing_ppt_min(hi) < 0.0, || "no crossing in [0, 1]".into())?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if common::depolarizing_ppt_min(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = 0.5 * (lo + hi);
    ensure((crossing - 1.0 / 3.0).abs() <= 1e-6, || format!("oracle crossing at {crossing}"))?;
    let verdict = |l: f64| -> Result<VerdictKind, String> {
        Ok(classify::is_entanglement_breaking(&QuantumChannel::depolarizing(2, l).map_err(err)?).kind)
    };
    ensure(verdict(crossing - 1e-6)? == VerdictKind::Yes, || "EB verdict below the crossing is not Yes".into())?;
    ensure(verdict(crossing + 1e-6)? == VerdictKind::No, || "EB verdict above the crossing is not No".into())?;
    for k in 0..=40 {
        let l = -1.0 / 3.0 + k as f64 / 30.0;
        if l > 1.0 {
            break;
        }
        let expected = if common::depolarizing_ppt_min(l) < -1e-9 { VerdictKind::No } else { VerdictKind::Yes };
        ensure(verdict(l)? == expected, || format!("λ = {l}: verdict disagrees with oracle"))?;
    }
    let mut rng = random::seeded(808);
    for k in 0..30 {
        let d_in = 1 + k % 4;
        let d_out = 2 + k % 3;
        let sigma = random::random_density(d_out, Ensemble::HilbertSchmidt, &mut rng).map_err(err)?;
        let v = classify::is_entanglement_breaking(&QuantumChannel::point(d_in, &sigma));
        ensure(v.kind == VerdictKind::Yes, || format!("point channel {d_in}→{d_out} gave {:?}", v.kind))?;
    }
    Ok(format!("oracle crossing λ* = {crossing:.12}; verdicts flip within ±1e-6; 30 point channels EB"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("unital-qubit axis law (side A)", criterion_1),
        ("point law (side B)", criterion_2),
        ("singular transfer matrix of DA channels", criterion_3),
        ("DA construction round trip", criterion_4),
        ("convex CQ subsets closed under mixing", criterion_5),
        ("composition closure and nonconvexity", criterion_6),
        ("discord engine calibration", criterion_7),
        ("EB boundary of the depolarizing family", criterion_8),
    ];
    let _ = CMat::zeros(0, 0);
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} [PRIMARY] {name}: PASS ({detail}) [{secs:.1}s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} [PRIMARY] {name}: FAIL ({why}) [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
