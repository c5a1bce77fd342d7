use hofa::codim;
use hofa::famodel::{dims, projection_sufficient, ModelSpec};
use hofa::jacobian::{verify_dimension, RankMethod, VerifyOptions};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

// keeps a single click under a second or two in the browser
const MAX_ENTRIES: usize = 400_000;

pub fn dims_value(k: usize, p: usize, m: usize) -> Result<Value, String> {
    let spec = ModelSpec::new(p, m, k).map_err(|e| e.to_string())?;
    let d = dims(&spec);
    let h = codim::h_value(k, m, p);
    Ok(json!({
        "k": k,
        "p": p,
        "m": m,
        "dims": d,
        "h_value": h.to_string(),
        "projection": projection_sufficient(&spec),
    }))
}

pub fn regime_value(k: usize, m: usize, p_max: f64) -> Result<Value, String> {
    let report = codim::regime(k, m).map_err(|e| e.to_string())?;
    let p_max = if p_max.is_finite() && p_max > 0.0 { p_max } else { (report.p0 as f64 + 2.0).max(8.0) };
    let curve: Vec<[f64; 2]> = codim::h_curve(k, m, p_max, 200).into_iter().map(|(p, h)| [p, h]).collect();
    let certificate = codim::polya_certificate(k, m).ok().flatten().map(|b| b.to_string());
    Ok(json!({
        "regime": report.view(),
        "curve": curve,
        "certificate_b": certificate,
    }))
}

pub fn rank_value(k: usize, p: usize, m: usize, seed: u64) -> Result<Value, String> {
    let spec = ModelSpec::new(p, m, k).map_err(|e| e.to_string())?;
    let d = dims(&spec);
    let entries = (d.params.max(0) as usize).saturating_mul(d.ambient.max(0) as usize);
    if entries > MAX_ENTRIES {
        return Err(format!("Jacobian has {entries} entries; the demo stops at {MAX_ENTRIES}"));
    }
    let opts = VerifyOptions {
        trials: 1,
        seed,
        methods: vec![RankMethod::Svd, RankMethod::Modp],
        ..VerifyOptions::default()
    };
    let summary = verify_dimension(&spec, &opts).map_err(|e| e.to_string())?;
    let observed: Vec<usize> = summary.reports.iter().map(|r| r.computed_rank).collect();
    let mut v = serde_json::to_value(&summary).map_err(|e| e.to_string())?;
    v["observed"] = json!(observed);
    v["passed"] = json!(summary.passed());
    Ok(v)
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dims_json(k: usize, p: usize, m: usize) -> Result<String, JsValue> {
    to_js(dims_value(k, p, m))
}

/// Pass `p_max <= 0` to pick a range from the last root.
#[wasm_bindgen]
pub fn regime_json(k: usize, m: usize, p_max: f64) -> Result<String, JsValue> {
    to_js(regime_value(k, m, p_max))
}

#[wasm_bindgen]
pub fn rank_json(k: usize, p: usize, m: usize, seed: u32) -> Result<String, JsValue> {
    to_js(rank_value(k, p, m, seed as u64))
}
