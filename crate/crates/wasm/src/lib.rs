//! Browser bindings: each export returns a JSON string or throws a message.

use serde_json::json;
use wasm_bindgen::prelude::*;

use summa_core::catalog::{builtin_catalog, index_set, Catalog};
use summa_core::convergence::f_density;
use summa_core::counterexamples::{
    build_gap_sequence, build_reciproco_sequence, build_sparse_block_sequence, build_th3_sequence,
    EpsSchedule,
};
use summa_core::format::to_json;
use summa_core::modulus::phi_estimate;

/// Largest horizon accepted from the page.
pub const MAX_HORIZON: u64 = 10_000_000;

fn catalog() -> Catalog {
    builtin_catalog()
}

fn horizon(h: f64) -> Result<u64, String> {
    if h >= 10.0 && h.fract() == 0.0 && h <= MAX_HORIZON as f64 {
        Ok(h as u64)
    } else {
        Err(format!("horizon must be an integer in [10, {MAX_HORIZON}]"))
    }
}

fn optional(name: &str) -> Option<&str> {
    let n = name.trim();
    (!n.is_empty() && n != "none").then_some(n)
}

pub fn phi_curve_json(modulus: &str, eps: f64, h: f64, theta: &str) -> Result<String, String> {
    let c = catalog();
    let f = c.modulus(modulus).map_err(|e| e.to_string())?;
    let t = optional(theta)
        .map(|t| c.theta(t))
        .transpose()
        .map_err(|e| e.to_string())?;
    let e = phi_estimate(f, eps, horizon(h)?, t).map_err(|e| e.to_string())?;
    Ok(to_json(&json!({
        "modulus": f.name(),
        "epsilon": e.epsilon,
        "value": e.value,
        "plateau": e.plateau,
        "trajectory": e.trajectory,
    })))
}

pub fn density_trajectory_json(
    set: &str,
    modulus: &str,
    theta: &str,
    h: f64,
) -> Result<String, String> {
    let c = catalog();
    let s = index_set(set).map_err(|e| e.to_string())?;
    let f = c.modulus(modulus).map_err(|e| e.to_string())?;
    let t = optional(theta)
        .map(|t| c.theta(t))
        .transpose()
        .map_err(|e| e.to_string())?;
    let e = f_density(f, &s, horizon(h)?, t);
    Ok(to_json(&json!({
        "set": set,
        "modulus": f.name(),
        "value": e.value,
        "plateau": e.plateau,
        "trajectory": e.trajectory,
    })))
}

pub fn counterexample_json(kind: &str, modulus: &str, theta: &str) -> Result<String, String> {
    let c = catalog();
    let t = c.theta(theta).map_err(|e| e.to_string())?;
    let f = || c.modulus(modulus).map_err(|e| e.to_string());
    let w = match kind {
        "reciproco" => build_reciproco_sequence(f()?, t, &EpsSchedule::InvK, 5),
        "th3" => build_th3_sequence(f()?, t, &EpsSchedule::InvK, 5),
        "sember" => build_gap_sequence(t, 1.0, 4),
        "sparse" => build_sparse_block_sequence(t, MAX_HORIZON),
        o => return Err(format!("unknown construction `{o}`")),
    }
    .map_err(|e| e.to_string())?;
    Ok(to_json(&json!({
        "kind": w.kind.as_str(),
        "theta": w.theta,
        "separation_c": w.separation_c,
        "desk_horizon": w.desk_horizon,
        "witnesses": w.witnesses,
    })))
}

#[wasm_bindgen]
pub fn phi_curve(modulus: &str, eps: f64, horizon: f64, theta: &str) -> Result<String, JsValue> {
    phi_curve_json(modulus, eps, horizon, theta).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn density_trajectory(
    set: &str,
    modulus: &str,
    theta: &str,
    horizon: f64,
) -> Result<String, JsValue> {
    density_trajectory_json(set, modulus, theta, horizon).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterexample(kind: &str, modulus: &str, theta: &str) -> Result<String, JsValue> {
    counterexample_json(kind, modulus, theta).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn phi_identity_is_epsilon() {
        let v = parse(&phi_curve_json("identity", 0.25, 1e5, "").unwrap());
        assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn density_of_evens() {
        let v = parse(&density_trajectory_json("evens", "identity", "none", 1e5).unwrap());
        assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-4);
        assert!(!v["trajectory"].as_array().unwrap().is_empty());
    }

    #[test]
    fn reciproco_witnesses() {
        let v = parse(&counterexample_json("reciproco", "log1p", "geo2").unwrap());
        assert_eq!(v["witnesses"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(phi_curve_json("nope", 0.1, 1e5, "").is_err());
        assert!(density_trajectory_json("evens", "identity", "", 1e12).is_err());
        assert!(counterexample_json("reciproco", "identity", "geo2").is_err());
    }
}
