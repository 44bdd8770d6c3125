//! wasm-bindgen entry points for the static demo page in `www/`.
//! Every export returns a JSON string; errors come back as `{"error": …}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use discord_channels::annihilators;
use discord_channels::classify;
use discord_channels::discord::{self, Strategy};
use discord_channels::io;
use discord_channels::linalg::c;
use discord_channels::random;
use discord_channels::{is_cq_exact, BipartiteState, DensityOperator, QuantumChannel, UnitalQubitParams};

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn verdict_name(v: &classify::Verdict) -> &'static str {
    match v.kind {
        classify::VerdictKind::Yes => "yes",
        classify::VerdictKind::No => "no",
        classify::VerdictKind::Unknown => "unknown",
    }
}

/// One horizontal slice `λ₃ = l3` of the unital-qubit tetrahedron on an
/// `n × n` grid over `(λ₁, λ₂) ∈ [−1, 1]²`. Cells outside the CPTP region
/// are `null`; inside cells carry the DB-A, DB-B and EB flags.
pub fn tetra_slice_value(l3: f64, n: usize) -> Result<Value, String> {
    if !(2..=201).contains(&n) {
        return Err(format!("grid size must lie in 2..=201, got {n}"));
    }
    let coord = |k: usize| -1.0 + 2.0 * k as f64 / (n - 1) as f64;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = UnitalQubitParams::new(coord(i), coord(j), l3);
            if !p.is_cptp(1e-12) {
                cells.push(Value::Null);
                continue;
            }
            let ch = QuantumChannel::unital_qubit(p).map_err(|e| e.to_string())?;
            cells.push(json!({
                "db_a": classify::is_qc_channel(&ch).kind == classify::VerdictKind::Yes,
                "db_b": classify::is_point_channel(&ch).kind == classify::VerdictKind::Yes,
                "eb": verdict_name(&classify::is_entanglement_breaking(&ch)),
            }));
        }
    }
    Ok(json!({ "l3": l3, "n": n, "cells": cells }))
}

#[wasm_bindgen]
pub fn tetra_slice(l3: f64, n: usize) -> String {
    respond(tetra_slice_value(l3, n))
}

/// Full classification of one unital qubit channel in the A and B contexts.
pub fn classify_unital_value(l1: f64, l2: f64, l3: f64) -> Result<Value, String> {
    let ch = QuantumChannel::unital_qubit(UnitalQubitParams::new(l1, l2, l3)).map_err(|e| e.to_string())?;
    let opts = classify::ClassifyOptions { witness_budget: 60, ..Default::default() };
    let a = classify::classify_channel(&ch, classify::Context::A { dim_b: 2 }, &opts).map_err(|e| e.to_string())?;
    let b = classify::classify_channel(&ch, classify::Context::B { dim_a: 2 }, &opts).map_err(|e| e.to_string())?;
    Ok(json!({ "side_a": io::report_to_json(&a), "side_b": io::report_to_json(&b) }))
}

#[wasm_bindgen]
pub fn classify_unital(l1: f64, l2: f64, l3: f64) -> String {
    respond(classify_unital_value(l1, l2, l3))
}

/// Discord of the two-qubit Bell-diagonal state with correlation vector
/// `(c1, c2, c3)`, plus `J(B|A)` along `n_theta` polar angles at φ = 0.
pub fn discord_landscape_value(c1: f64, c2: f64, c3: f64, n_theta: usize) -> Result<Value, String> {
    let paulis = discord_channels::linalg::paulis();
    let mut m = discord_channels::linalg::identity(4);
    for (k, ck) in [c1, c2, c3].into_iter().enumerate() {
        m += discord_channels::linalg::kron(&paulis[k + 1], &paulis[k + 1]) * c(ck, 0.0);
    }
    let rho = DensityOperator::new(m * c(0.25, 0.0)).map_err(|_| "correlations lie outside the state tetrahedron".to_string())?;
    let state = BipartiteState::new(2, 2, rho).map_err(|e| e.to_string())?;
    let result = discord::discord(&state, Strategy::Hybrid).map_err(|e| e.to_string())?;
    let steps = n_theta.clamp(2, 720);
    let curve = (0..steps)
        .map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (steps - 1) as f64;
            let pm = discord::ProjectiveMeasurement::from_bloch_angles(theta, 0.0);
            discord::classical_correlation_at(&state, &pm).map(|j| json!([theta, j]))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut v = io::discord_result_to_json(&result);
    v["cq_exact"] = json!(is_cq_exact(&state, discord::CQ_TOL).is_cq);
    v["curve"] = Value::Array(curve);
    Ok(v)
}

#[wasm_bindgen]
pub fn discord_landscape(c1: f64, c2: f64, c3: f64, n_theta: usize) -> String {
    respond(discord_landscape_value(c1, c2, c3, n_theta))
}

/// Random discord-annihilating channel on `dA ⊗ dB`: its spec, the singular
/// values of its real transfer matrix and a certification summary.
pub fn da_demo_value(dim_a: usize, dim_b: usize, seed: u64) -> Result<Value, String> {
    if !(2..=3).contains(&dim_a) || !(2..=3).contains(&dim_b) {
        return Err("dimensions must be 2 or 3".into());
    }
    let mut rng = random::seeded(seed);
    let spec = annihilators::random_da_spec(dim_a, dim_b, &mut rng).map_err(|e| e.to_string())?;
    let ch = annihilators::build_da_channel(&spec).map_err(|e| e.to_string())?;
    let sv: Vec<f64> = ch.real_transfer().singular_values_vector().iter().copied().collect();
    let cert = annihilators::apply_and_certify(&ch, dim_a, dim_b, 40, seed, discord::CQ_TOL).map_err(|e| e.to_string())?;
    let identity = QuantumChannel::identity(dim_a * dim_b);
    let control = annihilators::apply_and_certify(&identity, dim_a, dim_b, 40, seed, discord::CQ_TOL).map_err(|e| e.to_string())?;
    Ok(json!({
        "signature": spec.signature(),
        "spec": io::da_spec_to_json(&spec),
        "singular_values": sv,
        "certify": { "samples": cert.samples, "failures": cert.failures, "worst_cq_residual": cert.worst_residual },
        "identity_control": { "samples": control.samples, "failures": control.failures, "worst_cq_residual": control.worst_residual },
    }))
}

#[wasm_bindgen]
pub fn da_demo(dim_a: usize, dim_b: usize, seed: u64) -> String {
    respond(da_demo_value(dim_a, dim_b, seed))
}
