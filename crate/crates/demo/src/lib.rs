//! Browser demo: three small operations over `wetting-core`, exported with
//! `wasm-bindgen`. The plain functions carry the logic so they can be tested
//! natively; the exported wrappers only convert errors.

use wasm_bindgen::prelude::*;
use wetting_core::lattice::{BoundaryCondition, Region};
use wetting_core::model::{CouplingSpec, FieldSpec, ModelInstance};
use wetting_core::quadrature::QuadratureRule;
use wetting_core::spin_mc::{estimate_profile, snapshot, ProfileScope, Schedule};
use wetting_core::thermo::{tau_curve, Estimator, FieldFamily, ThermoSetup};

/// Largest half-width accepted for Monte Carlo runs in the page.
pub const MAX_HALF_WIDTH: i64 = 64;
/// Largest box side for the exact curve, small enough for the column
/// transfer matrix to answer instantly.
pub const MAX_EXACT_SIDE: i64 = 8;

fn instance(n: i64, m: i64, beta: f64, lambda: f64, delta: f64) -> Result<ModelInstance, String> {
    if !(0..=MAX_HALF_WIDTH).contains(&n) || !(1..=2 * MAX_HALF_WIDTH).contains(&m) {
        return Err(format!("box must satisfy 0 <= n <= {MAX_HALF_WIDTH} and 1 <= m <= {}", 2 * MAX_HALF_WIDTH));
    }
    let inst = ModelInstance::new(Region::semi_box(2, n, m), BoundaryCondition::Minus, CouplingSpec::uniform(1.0), FieldSpec::decay(lambda, delta))
        .with_beta(beta);
    inst.validate().map_err(|e| e.to_string())?;
    Ok(inst)
}

/// Final heat-bath state as row-major pixels, `1` for a minus spin; the
/// width is `2n + 1` and the top row is the highest layer.
pub fn snapshot_pixels(n: i64, m: i64, beta: f64, lambda: f64, delta: f64, sweeps: u32, seed: u64) -> Result<Vec<u8>, String> {
    let s = snapshot(&instance(n, m, beta, lambda, delta)?, sweeps as u64, seed).map_err(|e| e.to_string())?;
    Ok(s.raster.pixels)
}

/// Layer magnetisations `m_1, ..., m_m`, then their standard errors.
pub fn profile(n: i64, m: i64, beta: f64, lambda: f64, delta: f64, sweeps: u32, seed: u64) -> Result<Vec<f64>, String> {
    let sweeps = sweeps as u64;
    let schedule = Schedule::new(sweeps, sweeps / 4, 1);
    let p = estimate_profile(&instance(n, m, beta, lambda, delta)?, schedule, ProfileScope::Layer, seed).map_err(|e| e.to_string())?;
    Ok(p.layers.iter().map(|s| s.mean).chain(p.layers.iter().map(|s| s.stderr)).collect())
}

/// Exact wall free energy of the decaying field at `points` strengths
/// evenly spaced in `[0, lambda_max]`, on `SemiBox(side, side)`.
pub fn exact_tau(side: i64, beta: f64, delta: f64, lambda_max: f64, points: u32) -> Result<Vec<f64>, String> {
    if !(1..=MAX_EXACT_SIDE).contains(&side) {
        return Err(format!("side must be between 1 and {MAX_EXACT_SIDE}"));
    }
    if points < 2 || !(lambda_max > 0.0) {
        return Err("need at least two points and a positive lambda_max".into());
    }
    let grid: Vec<f64> = (0..points).map(|k| lambda_max * k as f64 / (points - 1) as f64).collect();
    let setup = ThermoSetup::new(side, 1.0, FieldFamily::Decay { delta }).with_beta(beta);
    let curve = tau_curve(&setup, &grid, &QuadratureRule::Gauss(8), &Estimator::Exact).map_err(|e| e.to_string())?;
    Ok(curve.taus)
}

#[wasm_bindgen(js_name = snapshot)]
pub fn snapshot_js(n: i32, m: i32, beta: f64, lambda: f64, delta: f64, sweeps: u32, seed: u32) -> Result<Vec<u8>, JsError> {
    snapshot_pixels(n as i64, m as i64, beta, lambda, delta, sweeps, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = profile)]
pub fn profile_js(n: i32, m: i32, beta: f64, lambda: f64, delta: f64, sweeps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    profile(n as i64, m as i64, beta, lambda, delta, sweeps, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = exactTau)]
pub fn exact_tau_js(side: i32, beta: f64, delta: f64, lambda_max: f64, points: u32) -> Result<Vec<f64>, JsError> {
    exact_tau(side as i64, beta, delta, lambda_max, points).map_err(|e| JsError::new(&e))
}
