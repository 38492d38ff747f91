//! State snapshots as JSON with decimal-free hex float encoding: every f64
//! travels as its IEEE-754 bit pattern, so round trips are bit-exact.

use super::{FieldError, FieldState, Model};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use std::str::FromStr;

fn f64_hex(x: f64) -> String {
    format!("{:#018x}", x.to_bits())
}

fn f64_from_hex(s: &str) -> Result<f64, FieldError> {
    let body = s
        .strip_prefix("0x")
        .ok_or_else(|| FieldError::Snapshot(format!("bad hex float {s:?}")))?;
    u64::from_str_radix(body, 16)
        .map(f64::from_bits)
        .map_err(|e| FieldError::Snapshot(format!("bad hex float {s:?}: {e}")))
}

fn rational_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn rational_from_str(s: &str) -> Result<BigRational, FieldError> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| FieldError::Snapshot(format!("bad rational {s:?}")))?;
    let n = BigInt::from_str(n).map_err(|e| FieldError::Snapshot(e.to_string()))?;
    let d = BigInt::from_str(d).map_err(|e| FieldError::Snapshot(e.to_string()))?;
    Ok(BigRational::new(n, d))
}

fn model_json(model: &Model) -> Value {
    match model {
        Model::Nls {
            dim,
            box_size,
            delta,
        } => json!({
            "kind": "nls",
            "dim": dim,
            "box_size": rational_str(box_size),
            "delta": f64_hex(*delta),
        }),
        Model::Chm { rho, froude } => json!({
            "kind": "chm",
            "rho": rational_str(rho),
            "froude": rational_str(froude),
        }),
    }
}

fn model_from_json(v: &Value) -> Result<Model, FieldError> {
    let kind = v["kind"]
        .as_str()
        .ok_or_else(|| FieldError::Snapshot("missing model.kind".into()))?;
    match kind {
        "nls" => Ok(Model::Nls {
            dim: v["dim"]
                .as_u64()
                .ok_or_else(|| FieldError::Snapshot("missing model.dim".into()))?
                as usize,
            box_size: rational_from_str(
                v["box_size"]
                    .as_str()
                    .ok_or_else(|| FieldError::Snapshot("missing model.box_size".into()))?,
            )?,
            delta: f64_from_hex(
                v["delta"]
                    .as_str()
                    .ok_or_else(|| FieldError::Snapshot("missing model.delta".into()))?,
            )?,
        }),
        "chm" => Ok(Model::Chm {
            rho: rational_from_str(
                v["rho"]
                    .as_str()
                    .ok_or_else(|| FieldError::Snapshot("missing model.rho".into()))?,
            )?,
            froude: rational_from_str(
                v["froude"]
                    .as_str()
                    .ok_or_else(|| FieldError::Snapshot("missing model.froude".into()))?,
            )?,
        }),
        other => Err(FieldError::Snapshot(format!("unknown model kind {other:?}"))),
    }
}

/// Serialize a state plus its model block:
/// `{model, cutoff, tau, reality, modes: [[k…, re, im], …]}`.
pub fn snapshot_to_json(state: &FieldState, model: &Model) -> String {
    let modes: Vec<Value> = state
        .grid()
        .iter()
        .enumerate()
        .map(|(idx, k)| {
            let z = state.amp_at(idx);
            let mut row: Vec<Value> = k.comps().iter().map(|&c| json!(c)).collect();
            row.push(json!(f64_hex(z.re)));
            row.push(json!(f64_hex(z.im)));
            Value::Array(row)
        })
        .collect();
    let doc = json!({
        "model": model_json(model),
        "cutoff": state.grid().cutoff(),
        "tau": f64_hex(state.tau),
        "reality": state.reality,
        "modes": modes,
    });
    serde_json::to_string_pretty(&doc).expect("snapshot serializes")
}

pub fn snapshot_from_json(text: &str) -> Result<(FieldState, Model), FieldError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| FieldError::Snapshot(e.to_string()))?;
    let model = model_from_json(&doc["model"])?;
    let cutoff = doc["cutoff"]
        .as_i64()
        .ok_or_else(|| FieldError::Snapshot("missing cutoff".into()))? as i32;
    let reality = doc["reality"].as_bool().unwrap_or(model.reality());
    let mut state = FieldState::zero(model.dim(), cutoff, false);
    state.reality = reality;
    state.tau = f64_from_hex(
        doc["tau"]
            .as_str()
            .ok_or_else(|| FieldError::Snapshot("missing tau".into()))?,
    )?;
    let modes = doc["modes"]
        .as_array()
        .ok_or_else(|| FieldError::Snapshot("missing modes".into()))?;
    let dim = model.dim();
    for row in modes {
        let row = row
            .as_array()
            .ok_or_else(|| FieldError::Snapshot("mode row must be an array".into()))?;
        if row.len() != dim + 2 {
            return Err(FieldError::Snapshot(format!(
                "mode row has {} entries, expected {}",
                row.len(),
                dim + 2
            )));
        }
        let comps: Vec<i32> = row[..dim]
            .iter()
            .map(|v| {
                v.as_i64()
                    .map(|c| c as i32)
                    .ok_or_else(|| FieldError::Snapshot("bad mode component".into()))
            })
            .collect::<Result<_, _>>()?;
        let re = f64_from_hex(
            row[dim]
                .as_str()
                .ok_or_else(|| FieldError::Snapshot("bad re".into()))?,
        )?;
        let im = f64_from_hex(
            row[dim + 1]
                .as_str()
                .ok_or_else(|| FieldError::Snapshot("bad im".into()))?,
        )?;
        let k = crate::lattice::WaveVector::new(&comps);
        let idx = state
            .grid()
            .index(&k)
            .ok_or_else(|| FieldError::Snapshot(format!("mode {k} outside cutoff")))?;
        state.amps_mut()[idx] = num_complex::Complex64::new(re, im);
    }
    Ok((state, model))
}
