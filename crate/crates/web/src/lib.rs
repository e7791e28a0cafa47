//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export runs a paired engine-on/engine-off simulation and returns a
//! JSON string, which the page parses and draws. The `*_json` functions hold
//! the logic and are callable from native code.

use serde_json::json;
use wasm_bindgen::prelude::*;

use searchnet::metrics::{degree_histogram, diameter_bounded};
use searchnet::rng;
use searchnet::sir::{run_sir, SirConfig};
use searchnet::{new_seed_graph, run_evolution, BipartiteGraph, EvolutionConfig, Side};

/// Largest run the page may request; keeps the tab responsive.
pub const MAX_STEPS: u64 = 200_000;

fn check_steps(steps: u64) -> Result<(), String> {
    if steps > MAX_STEPS {
        return Err(format!("at most {MAX_STEPS} steps, got {steps}"));
    }
    Ok(())
}

fn seed_graph(config: &EvolutionConfig) -> Result<BipartiteGraph, String> {
    let mut r = rng::stream(config.seed, &[0x5745_4253]);
    new_seed_graph(10, 10, config.c_u, config.c_t, true, &mut r).map_err(|e| e.to_string())
}

fn grow(config: &EvolutionConfig) -> Result<BipartiteGraph, String> {
    let mut g = seed_graph(config)?;
    run_evolution(&mut g, config, &mut []).map_err(|e| e.to_string())?;
    Ok(g)
}

fn config(steps: u64, beta: f64, p_search: f64, copies: usize, seed: u64) -> Result<EvolutionConfig, String> {
    check_steps(steps)?;
    let c = EvolutionConfig { beta, p_search, c_u: copies, c_t: copies, steps, seed, ..Default::default() };
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

/// User-degree histograms with and without the engine:
/// `{"on": [[d, count], ...], "off": [...]}`.
pub fn degree_curves_json(steps: u64, beta: f64, p_search: f64, copies: usize, seed: u64) -> Result<String, String> {
    let on = config(steps, beta, p_search, copies, seed)?;
    let curve = |c: &EvolutionConfig| -> Result<Vec<(usize, usize)>, String> {
        let g = grow(c)?;
        Ok(degree_histogram(&g, Side::User, 1).counts.into_iter().collect())
    };
    Ok(json!({ "on": curve(&on)?, "off": curve(&on.without_engine())? }).to_string())
}

/// Diameter every `interval` steps: `{"t": [...], "on": [...], "off": [...]}`.
pub fn diameter_trace_json(steps: u64, interval: u64, p_search: f64, seed: u64) -> Result<String, String> {
    if interval == 0 {
        return Err("interval must be positive".into());
    }
    let on = config(steps, 0.5, p_search, 2, seed)?;
    let trace = |c: &EvolutionConfig| -> Result<(Vec<u64>, Vec<usize>), String> {
        let mut g = seed_graph(c)?;
        let mut ts = vec![0];
        let mut ds = vec![diameter_bounded(&g).lower];
        let mut record = |g: &BipartiteGraph, r: &searchnet::StepReport| {
            if r.time % interval == 0 {
                ts.push(r.time);
                ds.push(diameter_bounded(g).lower);
            }
            Ok::<(), String>(())
        };
        run_evolution(&mut g, c, &mut [&mut record]).map_err(|e| e.to_string())?;
        Ok((ts, ds))
    };
    let (t, d_on) = trace(&on)?;
    let (_, d_off) = trace(&on.without_engine())?;
    Ok(json!({ "t": t, "on": d_on, "off": d_off }).to_string())
}

/// Rumor coverage per slot on one grown graph, with and without the
/// search channel: `{"users": n, "on": [...], "off": [...]}`.
pub fn rumor_curves_json(steps: u64, lambda: f64, mu: f64, xi: f64, slots: u64, seed: u64) -> Result<String, String> {
    let graph = grow(&config(steps, 0.5, 0.1, 1, seed)?)?;
    let sir = SirConfig { lambda_adj: lambda, mu, xi, max_steps: slots, seed, ..Default::default() };
    sir.validate().map_err(|e| e.to_string())?;
    let curve = |enabled: bool| -> Result<Vec<f64>, String> {
        let trace = run_sir(&graph, &SirConfig { engine_enabled: enabled, ..sir.clone() }).map_err(|e| e.to_string())?;
        Ok((0..=slots).map(|t| trace.coverage_at(t)).collect())
    };
    Ok(json!({ "users": graph.num_users(), "on": curve(true)?, "off": curve(false)? }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn degree_curves(steps: u32, beta: f64, p_search: f64, copies: u32, seed: u32) -> Result<String, JsError> {
    js(degree_curves_json(steps.into(), beta, p_search, copies as usize, seed.into()))
}

#[wasm_bindgen]
pub fn diameter_trace(steps: u32, interval: u32, p_search: f64, seed: u32) -> Result<String, JsError> {
    js(diameter_trace_json(steps.into(), interval.into(), p_search, seed.into()))
}

#[wasm_bindgen]
pub fn rumor_curves(steps: u32, lambda: f64, mu: f64, xi: f64, slots: u32, seed: u32) -> Result<String, JsError> {
    js(rumor_curves_json(steps.into(), lambda, mu, xi, slots.into(), seed.into()))
}
