//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Vec<f64>` of fixed-width rows so the page can
//! read it as a `Float64Array` without any serialization layer.

use feedback_lab::analysis::{bounds_table, typeset_count_bound};
use feedback_lab::channel::{channel_info, DEFAULT_TOLERANCE};
use feedback_lab::harness::{run_experiment, run_trials, CensusAggregate, CodecKind, ExperimentConfig};
use feedback_lab::{ArrivalKind, ArrivalModel, Dmc, Error};
use wasm_bindgen::prelude::*;

fn js_err(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn arrivals_for(q: f64) -> ArrivalKind {
    if q >= 1.0 {
        ArrivalKind::Periodic
    } else {
        ArrivalKind::bernoulli(q)
    }
}

/// Rows `(n, rate, ci, error_rate)` of the type-set codec on `BSC(p)` for
/// `n = n_step, 2 n_step, ..., <= n_max`.
pub fn rate_curve_native(p: f64, q: f64, epsilon: f64, n_max: u32, n_step: u32, trials: u32, seed: u64) -> Result<Vec<f64>, Error> {
    if n_step == 0 || n_max < n_step {
        return Err(Error::InvalidParameter("need 0 < n_step <= n_max".into()));
    }
    let channel = Dmc::bsc(p)?;
    let mut out = Vec::new();
    for n in (n_step..=n_max).step_by(n_step as usize) {
        let mut cfg = ExperimentConfig::new(CodecKind::Typeset, channel.clone(), arrivals_for(q), n);
        cfg.epsilon = epsilon;
        cfg.trials = trials as u64;
        cfg.master_seed = seed;
        cfg.validate()?;
        let s = run_experiment(&cfg)?;
        out.extend([n as f64, s.point.rate, s.point.ci_halfwidth, s.point.error_rate]);
    }
    Ok(out)
}

/// Rows `(t, mean N_B, mean N_A, bound N_B, bound N_A, P[E_t fails])` for `t = 1..=t_max`.
pub fn census_curve_native(p: f64, q: f64, t_max: u32, trials: u32, seed: u64) -> Result<Vec<f64>, Error> {
    let t_max = t_max.max(1) as u64;
    let mut cfg = ExperimentConfig::new(CodecKind::Typeset, Dmc::bsc(p)?, arrivals_for(q), 64);
    cfg.trials = trials as u64;
    cfg.master_seed = seed;
    cfg.record_census = true;
    cfg.run_until = Some(t_max + 1);
    cfg.time_cap = Some(t_max + 1);
    cfg.validate()?;
    let (_, records) = run_trials(&cfg)?;
    let agg = CensusAggregate::from_records(q.min(1.0), &records);
    let mut out = Vec::new();
    for t in 1..=t_max {
        let Some(row) = agg.at(t + 1) else { break };
        let (nb, na) = typeset_count_bound(q.min(1.0), t as f64)?;
        out.extend([t as f64, row.mean_before, row.mean_after, nb, na, row.event_failure]);
    }
    Ok(out)
}

/// Rows `(R, instantaneous bound, buffer bound)` over `points` rates in `[0, C]`.
/// Bounds are NaN when the arrival process has no finite slack.
pub fn bounds_curve_native(p: f64, q: f64, h_limit: f64, points: u32) -> Result<Vec<f64>, Error> {
    let info = channel_info(&Dmc::bsc(p)?, DEFAULT_TOLERANCE)?;
    let n = feedback_lab::strings::MAX_LEN;
    let stats = ArrivalModel::new(arrivals_for(q), n)?.arrival_stats();
    let points = points.max(2);
    let rates: Vec<f64> = (0..points)
        .map(|k| info.capacity * k as f64 / (points - 1) as f64)
        .collect();
    let rows = bounds_table(info.capacity, info.c1, h_limit, stats.tau_bar / n as f64, stats.slack.is_some(), &rates)?;
    let v = |b: Option<feedback_lab::analysis::BoundValue>| b.map_or(f64::NAN, |b| b.value);
    Ok(rows
        .iter()
        .flat_map(|r| [r.rate, v(r.lb_instantaneous), v(r.lb_buffer)])
        .collect())
}

#[wasm_bindgen]
pub fn rate_curve(p: f64, q: f64, epsilon: f64, n_max: u32, n_step: u32, trials: u32, seed: u64) -> Result<Vec<f64>, JsValue> {
    rate_curve_native(p, q, epsilon, n_max, n_step, trials, seed).map_err(js_err)
}

#[wasm_bindgen]
pub fn census_curve(p: f64, q: f64, t_max: u32, trials: u32, seed: u64) -> Result<Vec<f64>, JsValue> {
    census_curve_native(p, q, t_max, trials, seed).map_err(js_err)
}

#[wasm_bindgen]
pub fn bounds_curve(p: f64, q: f64, h_limit: f64, points: u32) -> Result<Vec<f64>, JsValue> {
    bounds_curve_native(p, q, h_limit, points).map_err(js_err)
}
