//! Browser bindings for the demo page. Each export returns a flat `Float64Array`
//! of fixed-width records; the record layout is given on each function.

use mckean_mlp::brownian::GridPath;
use mckean_mlp::mlp::{l2_error_estimate, mlp_evaluate, root_key, DEFAULT_COST_CEILING};
use mckean_mlp::models::{Builtin, Problem};
use mckean_mlp::recursion::{
    cost_bound, cost_budget, log_cost_bound, log_error_bound, BoundInputs,
};
use mckean_mlp::CostLedger;
use wasm_bindgen::prelude::*;

/// Largest level the page may request; keeps a single call well under a second.
pub const MAX_LEVEL: u32 = 4;

fn law_only_linear(b: f64, xi: f64) -> Result<Problem, String> {
    Problem::builtin(Builtin::LawOnlyLinear { b }, 1.0, vec![xi]).map_err(|e| e.to_string())
}

fn check_level(name: &str, v: u32) -> Result<(), String> {
    if (1..=MAX_LEVEL).contains(&v) {
        Ok(())
    } else {
        Err(format!("{name} must lie in 1..={MAX_LEVEL}, got {v}"))
    }
}

/// Records `[t, estimate, exact]` over the level-`n` grid of one realization
/// on `μ(x, y) = b·y`, `T = 1`, `d = 1`.
pub fn trajectory_points(n: u32, m: u32, b: f64, xi: f64, seed: u32) -> Result<Vec<f64>, String> {
    check_level("n", n)?;
    check_level("m", m)?;
    let problem = law_only_linear(b, xi)?;
    let key = root_key(seed as u64);
    let mut ledger = CostLedger::disabled();
    let path = GridPath::generate(&key, n, m, 1.0, 1, &mut ledger).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * (path.cells() as usize + 1));
    for t in path.times() {
        let x = mlp_evaluate(&problem, &key, n, m, t, Some(&path), &mut ledger)
            .map_err(|e| e.to_string())?;
        let exact = problem
            .oracle_pathwise(&path, t)
            .map_err(|e| e.to_string())?;
        out.extend([t, x[0], exact[0]]);
    }
    Ok(out)
}

/// Records `[k, rmse, ci_half_width, ln error_bound]` for `n = m = k ≤ k_max`.
pub fn convergence_points(
    k_max: u32,
    reps: usize,
    b: f64,
    xi: f64,
    seed: u32,
) -> Result<Vec<f64>, String> {
    check_level("k_max", k_max)?;
    let problem = law_only_linear(b, xi)?;
    let inputs = BoundInputs::of(&problem);
    let mut out = Vec::with_capacity(4 * k_max as usize);
    for k in 1..=k_max {
        let e = l2_error_estimate(&problem, k, k, reps, seed as u64, DEFAULT_COST_CEILING)
            .map_err(|e| e.to_string())?;
        let lb = log_error_bound(k, k, 1.0, &inputs).map_err(|e| e.to_string())?;
        out.extend([k as f64, e.rmse, e.ci_half_width, lb]);
    }
    Ok(out)
}

/// Records `[n, ln budget, ln bound]` for `n = 1..=n_max` at branching `m`
/// and dimension `d`, with draws and evaluations both counted.
pub fn cost_points(n_max: u32, m: u32, d: u32) -> Result<Vec<f64>, String> {
    if !(1..=10).contains(&n_max) || !(1..=10).contains(&m) || d == 0 {
        return Err("need 1 ≤ n_max ≤ 10, 1 ≤ m ≤ 10 and d ≥ 1".into());
    }
    let d = d as u64;
    let mut out = Vec::with_capacity(3 * n_max as usize);
    for n in 1..=n_max {
        let budget = cost_budget(n, m, d, true, true).map_err(|e| e.to_string())?;
        let bound = match cost_bound(n, m, d, true, true) {
            Ok(b) => (b as f64).ln(),
            Err(_) => log_cost_bound(n, m, d, true, true),
        };
        out.extend([n as f64, (budget as f64).ln(), bound]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn trajectory(n: u32, m: u32, b: f64, xi: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    trajectory_points(n, m, b, xi, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn convergence(
    k_max: u32,
    reps: usize,
    b: f64,
    xi: f64,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    convergence_points(k_max, reps, b, xi, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn costs(n_max: u32, m: u32, d: u32) -> Result<Vec<f64>, JsError> {
    cost_points(n_max, m, d).map_err(|e| JsError::new(&e))
}
