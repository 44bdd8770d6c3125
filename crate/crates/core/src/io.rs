//! JSON file formats.
//!
//! Complex matrices are arrays of `[re, im]` pairs in row-major order. Readers
//! also accept a nested array of rows. Writers always emit the flat form.
//!
//! * state: `{"dims": [dA, dB] | [d], "matrix": …}`
//! * channel: `{"type": "kraus" | "choi", "d_in", "d_out", "data", "dims"?}`
//!   where `data` is a list of `d_out × d_in` matrices for Kraus form and one
//!   matrix for Choi form. `dims` optionally records `[dA, dB]` for a channel on AB.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::annihilators::{BAction, DaChannelSpec, PartitionEntry};
use crate::classify::{ClassificationReport, Verdict, Witness};
use crate::discord::DiscordResult;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::probes::DiscordantOutput;
use crate::state::{BipartiteState, DensityOperator};
use crate::structures::{BothEntry, ConvexCqSubsetSpec, FixedEntry, PointEntry};
use crate::QuantumChannel;

fn format_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("{field}: {msg}"))
}

/// Flat or nested `[re, im]` array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ComplexArray {
    Flat(Vec<[f64; 2]>),
    Nested(Vec<Vec<[f64; 2]>>),
}

fn parse_matrix(value: &Value, field: &str, shape: Option<(usize, usize)>) -> Result<CMat> {
    let array: ComplexArray = serde_json::from_value(value.clone())
        .map_err(|_| format_err(field, "expected an array of [re, im] pairs or an array of rows"))?;
    let (entries, nested_shape) = match array {
        ComplexArray::Flat(v) => (v, None),
        ComplexArray::Nested(rows) => {
            let r = rows.len();
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|row| row.len() != cols) {
                return Err(format_err(field, "rows have different lengths"));
            }
            (rows.into_iter().flatten().collect(), Some((r, cols)))
        }
    };
    let (rows, cols) = match (shape, nested_shape) {
        (Some(s), Some(n)) if s != n => {
            return Err(format_err(field, format!("matrix is {}x{}, expected {}x{}", n.0, n.1, s.0, s.1)));
        }
        (Some(s), _) | (None, Some(s)) => s,
        (None, None) => {
            let n = (entries.len() as f64).sqrt().round() as usize;
            if n * n != entries.len() {
                return Err(format_err(field, format!("{} entries do not form a square matrix", entries.len())));
            }
            (n, n)
        }
    };
    if entries.len() != rows * cols {
        return Err(format_err(field, format!("{} entries, expected {rows}x{cols} = {}", entries.len(), rows * cols)));
    }
    if entries.iter().flatten().any(|x| !x.is_finite()) {
        return Err(format_err(field, "non-finite entry"));
    }
    Ok(CMat::from_row_iterator(rows, cols, entries.into_iter().map(|[re, im]| c(re, im))))
}

fn parse_vector(value: &Value, field: &str, dim: usize) -> Result<CVec> {
    let m = parse_matrix(value, field, Some((dim, 1)))?;
    Ok(m.column(0).into_owned())
}

pub fn matrix_to_json(m: &CMat) -> Value {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            let z = m[(r, col)];
            out.push(json!([z.re, z.im]));
        }
    }
    Value::Array(out)
}

pub fn vector_to_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

fn field<'a>(obj: &'a Value, name: &str, path: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| format_err(path, format!("missing field \"{name}\"")))
}

fn usize_field(obj: &Value, name: &str, path: &str) -> Result<usize> {
    field(obj, name, path)?
        .as_u64()
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| format_err(&format!("{path}.{name}"), "expected a positive integer"))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))
}

fn density(value: &Value, path: &str, dim: usize) -> Result<DensityOperator> {
    let m = parse_matrix(value, path, Some((dim, dim)))?;
    DensityOperator::new(m).map_err(|e| format_err(path, e))
}

/// A state file, bipartite or single-system.
#[derive(Debug, Clone)]
pub enum StateFile {
    Single(DensityOperator),
    Bipartite(BipartiteState),
}

pub fn read_state(text: &str) -> Result<StateFile> {
    let v = parse_json(text)?;
    let dims: Vec<usize> = serde_json::from_value(field(&v, "dims", "state")?.clone())
        .map_err(|_| format_err("dims", "expected [d] or [dA, dB] with positive integers"))?;
    if dims.is_empty() || dims.len() > 2 || dims.contains(&0) {
        return Err(format_err("dims", "expected [d] or [dA, dB] with positive integers"));
    }
    let d: usize = dims.iter().product();
    let rho = density(field(&v, "matrix", "state")?, "matrix", d)?;
    Ok(match dims[..] {
        [_] => StateFile::Single(rho),
        [a, b] => StateFile::Bipartite(BipartiteState::new(a, b, rho)?),
        _ => unreachable!(),
    })
}

pub fn read_bipartite_state(text: &str) -> Result<BipartiteState> {
    match read_state(text)? {
        StateFile::Bipartite(s) => Ok(s),
        StateFile::Single(_) => Err(format_err("dims", "a bipartite state needs dims [dA, dB]")),
    }
}

pub fn state_to_json(rho: &BipartiteState) -> Value {
    json!({ "dims": [rho.dim_a(), rho.dim_b()], "matrix": matrix_to_json(rho.matrix()) })
}

pub fn single_state_to_json(rho: &DensityOperator) -> Value {
    json!({ "dims": [rho.dim()], "matrix": matrix_to_json(rho.matrix()) })
}

/// A channel file; `dims` is present when the file declares a bipartite split.
#[derive(Debug, Clone)]
pub struct ChannelFile {
    pub channel: QuantumChannel,
    pub dims: Option<(usize, usize)>,
}

fn parse_channel_value(v: &Value, path: &str, tol: f64) -> Result<ChannelFile> {
    let kind = field(v, "type", path)?.as_str().ok_or_else(|| format_err(&format!("{path}.type"), "expected a string"))?;
    let d_in = usize_field(v, "d_in", path)?;
    let d_out = usize_field(v, "d_out", path)?;
    let data = field(v, "data", path)?;
    let data_path = format!("{path}.data");
    let channel = match kind {
        "kraus" => {
            let list = data.as_array().ok_or_else(|| format_err(&data_path, "expected a list of Kraus matrices"))?;
            if list.is_empty() {
                return Err(format_err(&data_path, "no Kraus operators"));
            }
            let kraus = list
                .iter()
                .enumerate()
                .map(|(k, m)| parse_matrix(m, &format!("{data_path}[{k}]"), Some((d_out, d_in))))
                .collect::<Result<Vec<_>>>()?;
            QuantumChannel::from_kraus_with_tol(d_in, d_out, kraus, tol).map_err(|e| format_err(&data_path, e))?
        }
        "choi" => {
            let n = d_in * d_out;
            let j = parse_matrix(data, &data_path, Some((n, n)))?;
            QuantumChannel::from_choi_with_tol(d_in, d_out, j, tol).map_err(|e| format_err(&data_path, e))?
        }
        other => return Err(format_err(&format!("{path}.type"), format!("unknown channel type \"{other}\""))),
    };
    let dims = match v.get("dims") {
        None | Some(Value::Null) => None,
        Some(d) => {
            let pair: [usize; 2] =
                serde_json::from_value(d.clone()).map_err(|_| format_err(&format!("{path}.dims"), "expected [dA, dB]"))?;
            if pair[0] * pair[1] != d_in || d_in != d_out {
                return Err(format_err(
                    &format!("{path}.dims"),
                    format!("{}x{} does not match d_in = {d_in}, d_out = {d_out}", pair[0], pair[1]),
                ));
            }
            Some((pair[0], pair[1]))
        }
    };
    Ok(ChannelFile { channel, dims })
}

pub fn read_channel(text: &str, tol: f64) -> Result<ChannelFile> {
    parse_channel_value(&parse_json(text)?, "channel", tol)
}

/// Canonical Kraus form: Choi eigendecomposition, eigenvalue-descending.
pub fn channel_to_json(channel: &QuantumChannel, dims: Option<(usize, usize)>) -> Value {
    let data: Vec<Value> = channel.canonical_kraus().iter().map(matrix_to_json).collect();
    let mut v = json!({ "type": "kraus", "d_in": channel.d_in(), "d_out": channel.d_out(), "data": data });
    if let Some((a, b)) = dims {
        v["dims"] = json!([a, b]);
    }
    v
}

pub fn read_subset_spec(text: &str) -> Result<ConvexCqSubsetSpec> {
    let v = parse_json(text)?;
    let dim_a = usize_field(&v, "dim_a", "spec")?;
    let dim_b = usize_field(&v, "dim_b", "spec")?;
    let list = |name: &str| -> Result<Vec<Value>> {
        match v.get(name) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(a)) => Ok(a.clone()),
            Some(_) => Err(format_err(name, "expected a list")),
        }
    };
    let mut s = ConvexCqSubsetSpec::new(dim_a, dim_b);
    for (i, e) in list("both")?.iter().enumerate() {
        let p = format!("both[{i}]");
        s.both.push(BothEntry {
            vector: parse_vector(field(e, "vector", &p)?, &format!("{p}.vector"), dim_a)?,
            state: density(field(e, "state", &p)?, &format!("{p}.state"), dim_b)?,
        });
    }
    for (i, e) in list("fixed")?.iter().enumerate() {
        let p = format!("fixed[{i}]");
        let generators = match e.get("generators") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(g)) => g
                .iter()
                .enumerate()
                .map(|(k, m)| density(m, &format!("{p}.generators[{k}]"), dim_b))
                .collect::<Result<_>>()?,
            Some(_) => return Err(format_err(&format!("{p}.generators"), "expected a list")),
        };
        s.fixed.push(FixedEntry { vector: parse_vector(field(e, "vector", &p)?, &format!("{p}.vector"), dim_a)?, generators });
    }
    for (i, e) in list("point")?.iter().enumerate() {
        let p = format!("point[{i}]");
        s.point.push(PointEntry {
            projector: parse_matrix(field(e, "projector", &p)?, &format!("{p}.projector"), Some((dim_a, dim_a)))?,
            state: density(field(e, "state", &p)?, &format!("{p}.state"), dim_b)?,
        });
    }
    Ok(s)
}

pub fn subset_spec_to_json(s: &ConvexCqSubsetSpec) -> Value {
    json!({
        "dim_a": s.dim_a,
        "dim_b": s.dim_b,
        "both": s.both.iter().map(|e| json!({ "vector": vector_to_json(&e.vector), "state": matrix_to_json(e.state.matrix()) })).collect::<Vec<_>>(),
        "fixed": s.fixed.iter().map(|e| json!({
            "vector": vector_to_json(&e.vector),
            "generators": e.generators.iter().map(|g| matrix_to_json(g.matrix())).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "point": s.point.iter().map(|e| json!({ "projector": matrix_to_json(&e.projector), "state": matrix_to_json(e.state.matrix()) })).collect::<Vec<_>>(),
    })
}

/// DA spec; `pre_channel` may be omitted, meaning the identity.
pub fn read_da_spec(text: &str, tol: f64) -> Result<DaChannelSpec> {
    let v = parse_json(text)?;
    let dim_a = usize_field(&v, "dim_a", "spec")?;
    let dim_b = usize_field(&v, "dim_b", "spec")?;
    let pre_channel = match v.get("pre_channel") {
        None | Some(Value::Null) => QuantumChannel::identity(dim_a * dim_b),
        Some(ch) => parse_channel_value(ch, "pre_channel", tol)?.channel,
    };
    let entries = field(&v, "partition", "spec")?.as_array().ok_or_else(|| format_err("partition", "expected a list"))?;
    let mut partition = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let p = format!("partition[{i}]");
        let action_v = field(e, "action", &p)?;
        let action = match field(action_v, "type", &format!("{p}.action"))?.as_str() {
            Some("identity") => BAction::Identity,
            Some("point") => BAction::PointTo(density(field(action_v, "state", &format!("{p}.action"))?, &format!("{p}.action.state"), dim_b)?),
            _ => return Err(format_err(&format!("{p}.action.type"), "expected \"point\" or \"identity\"")),
        };
        let entry = match field(e, "kind", &p)?.as_str() {
            Some("rank1") => PartitionEntry::Rank1 { vector: parse_vector(field(e, "vector", &p)?, &format!("{p}.vector"), dim_a)?, action },
            Some("multi") => PartitionEntry::Multi {
                projector: parse_matrix(field(e, "projector", &p)?, &format!("{p}.projector"), Some((dim_a, dim_a)))?,
                action,
            },
            _ => return Err(format_err(&format!("{p}.kind"), "expected \"rank1\" or \"multi\"")),
        };
        partition.push(entry);
    }
    Ok(DaChannelSpec { dim_a, dim_b, pre_channel, partition })
}

pub fn da_spec_to_json(s: &DaChannelSpec) -> Value {
    let action = |a: &BAction| match a {
        BAction::Identity => json!({ "type": "identity" }),
        BAction::PointTo(r) => json!({ "type": "point", "state": matrix_to_json(r.matrix()) }),
    };
    let partition: Vec<Value> = s
        .partition
        .iter()
        .map(|e| match e {
            PartitionEntry::Rank1 { vector, action: a } => json!({ "kind": "rank1", "vector": vector_to_json(vector), "action": action(a) }),
            PartitionEntry::Multi { projector, action: a } => {
                json!({ "kind": "multi", "projector": matrix_to_json(projector), "action": action(a) })
            }
        })
        .collect();
    json!({
        "dim_a": s.dim_a,
        "dim_b": s.dim_b,
        "pre_channel": channel_to_json(&s.pre_channel, Some((s.dim_a, s.dim_b))),
        "partition": partition,
    })
}

pub fn discord_result_to_json(r: &DiscordResult) -> Value {
    let m = &r.optimal_measurement;
    let mut measurement = json!({ "vectors": m.vectors().iter().map(vector_to_json).collect::<Vec<_>>() });
    if let Some(b) = m.bloch_vector() {
        measurement["bloch_vector"] = json!(b);
    }
    json!({
        "discord": r.value,
        "mutual_information": r.mutual_information,
        "classical_correlation": r.classical_correlation,
        "optimal_measurement": measurement,
        "optimizer_trace": r.optimizer_trace,
    })
}

pub fn discordant_output_to_json(w: &DiscordantOutput) -> Value {
    json!({
        "probe": w.probe,
        "input": state_to_json(&w.input),
        "output": state_to_json(&w.output),
        "cq_residual": w.cq_residual,
        "output_discord": w.discord,
    })
}

pub fn witness_to_json(w: &Witness) -> Value {
    match w {
        Witness::DistinctOutputs { first, second, distance } => json!({
            "type": "distinct_outputs",
            "first": single_state_to_json(first),
            "second": single_state_to_json(second),
            "distance": distance,
        }),
        Witness::NoncommutingOutputs { first, second, commutator } => json!({
            "type": "noncommuting_outputs",
            "first": single_state_to_json(first),
            "second": single_state_to_json(second),
            "commutator_norm": commutator,
        }),
        Witness::NegativeEigenvector { vector, eigenvalue } => json!({
            "type": "negative_partial_transpose",
            "vector": vector_to_json(vector),
            "eigenvalue": eigenvalue,
        }),
        Witness::DiscordantOutput(d) => {
            let mut v = discordant_output_to_json(d);
            v["type"] = json!("discordant_output");
            v
        }
        Witness::FullRankTransfer { ratio } => json!({ "type": "full_rank_transfer", "sigma_ratio": ratio }),
    }
}

pub fn verdict_to_json(v: &Verdict) -> Value {
    json!({
        "kind": v.kind,
        "residual": v.residual,
        "notes": v.notes,
        "witness": v.witness.as_ref().map(witness_to_json),
    })
}

pub fn report_to_json(r: &ClassificationReport) -> Value {
    json!({
        "context": r.context,
        "label": r.label.to_string(),
        "verdict": verdict_to_json(&r.verdict),
        "entanglement_breaking": verdict_to_json(&r.entanglement_breaking),
        "transfer_sigma_ratio": r.transfer_ratio,
        "recovered_spec": r.recovered.as_ref().map(da_spec_to_json),
    })
}
