//! Browser bindings: run scenarios from TOML text and hand back SVG plots
//! plus metric summaries as JSON strings.
//!
//! Build with `wasm-pack build --target web crates/wasm` and serve `www/`.

pub mod api;

use wasm_bindgen::prelude::*;

fn err_js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

/// Run the scenario's configured controller; returns JSON with an `svg` plot
/// and the run metrics.
#[wasm_bindgen]
pub fn run_scenario(toml_text: &str) -> Result<String, JsValue> {
    api::run_scenario(toml_text).map_err(err_js)
}

/// Run all three avoidance laws on the identical world; returns a JSON array
/// of per-controller results.
#[wasm_bindgen]
pub fn compare_controllers(toml_text: &str) -> Result<String, JsValue> {
    api::compare_controllers(toml_text).map_err(err_js)
}

/// Run the formation protocol; returns JSON with the trajectory SVG, the
/// convergence time, pair errors, and the anonymous assignment trace.
#[wasm_bindgen]
pub fn run_formation(toml_text: &str, seed: u32) -> Result<String, JsValue> {
    api::run_formation(toml_text, seed as u64).map_err(err_js)
}
