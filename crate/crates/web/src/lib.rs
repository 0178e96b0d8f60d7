//! Three operations for the browser page: convergence traces, the argmax
//! search and the rank-1 truncation of the counterexample matrix. Each takes
//! plain numbers and returns a JSON string.

use htmax::arith::truncate;
use htmax::construct::{adversarial_tensor, cheb_tensor, counterexample_matrix, random_ht};
use htmax::maxnorm::Truncation;
use htmax::oracle::{dense_maxnorm_argmax, densify_with_cap};
use htmax::{
    binary_search_argmax, search_iteration_bound, Algorithm, HtTensor, IterationConfig, RankTarget,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest tensor the page densifies for reference values.
const PAGE_DENSE_CAP: u128 = 200_000;

fn tensor(family: &str, d: usize, n: usize, r: usize, seed: u64) -> Result<HtTensor, String> {
    let t = match family {
        "rand" => random_ht(d, n, r, seed),
        "cheb" => cheb_tensor(d, n),
        "adversarial" => adversarial_tensor(d, n, seed),
        other => return Err(format!("unknown family {other:?}")),
    };
    t.map_err(|e| e.to_string())
}

fn config(rank: usize, iters: usize) -> IterationConfig {
    let truncation = match rank {
        0 => Truncation::Exact,
        r => Truncation::Ranks(RankTarget::Uniform(r)),
    };
    IterationConfig {
        max_iters: iters,
        truncation,
        ..IterationConfig::default()
    }
}

/// The known maximum norm, or the dense one where affordable.
fn reference(family: &str, a: &HtTensor) -> Option<f64> {
    match family {
        "cheb" => Some(1.0),
        "adversarial" => Some(htmax::construct::SPIKE),
        _ => densify_with_cap(a, PAGE_DENSE_CAP)
            .ok()
            .and_then(|x| dense_maxnorm_argmax(&x).ok())
            .map(|(m, _)| m),
    }
}

#[derive(Serialize)]
struct TraceOut {
    algorithm: String,
    estimates: Vec<f64>,
    truth: Option<f64>,
    status: &'static str,
}

/// Estimates per iteration for each algorithm in the comma-separated `algs`
/// (`pi`, `ritz`, `squaring`, `adaptive`). A `rank` of 0 disables truncation.
#[allow(clippy::too_many_arguments)]
pub fn trace_json(
    family: &str,
    d: usize,
    n: usize,
    r: usize,
    seed: u64,
    algs: &str,
    rank: usize,
    iters: usize,
) -> Result<String, String> {
    let a = tensor(family, d, n, r, seed)?;
    let truth = reference(family, &a);
    let cfg = IterationConfig {
        ritz_every_step: true,
        ..config(rank, iters)
    };
    let mut out = Vec::new();
    for name in algs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let alg = match name {
            "pi" => Algorithm::PowerIteration,
            "ritz" => Algorithm::Ritz,
            "squaring" => Algorithm::Squaring,
            "adaptive" => Algorithm::Adaptive,
            other => return Err(format!("unknown algorithm {other:?}")),
        };
        let est = alg.run(&a, &cfg).map_err(|e| e.to_string())?;
        out.push(TraceOut {
            algorithm: name.to_string(),
            estimates: est.trace.estimates(),
            truth,
            status: est.trace.status.as_str(),
        });
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ArgmaxOut {
    index: Vec<usize>,
    value: f64,
    estimated_maxnorm: f64,
    iterations: usize,
    bound: usize,
    truth: Option<f64>,
}

/// Binary search for a maximizing index.
pub fn argmax_json(
    family: &str,
    d: usize,
    n: usize,
    r: usize,
    seed: u64,
    rank: usize,
) -> Result<String, String> {
    let a = tensor(family, d, n, r, seed)?;
    let res = binary_search_argmax(&a, &config(rank, 40)).map_err(|e| e.to_string())?;
    let out = ArgmaxOut {
        index: res.index.as_slice().to_vec(),
        value: res.value,
        estimated_maxnorm: res.estimated_maxnorm,
        iterations: res.iterations_used,
        bound: search_iteration_bound(a.mode_sizes()),
        truth: reference(family, &a),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct CounterexampleOut {
    max_entry: f64,
    truncated_max_entry: f64,
    rel_error: f64,
    entries: Vec<Vec<f64>>,
    truncated: Vec<Vec<f64>>,
}

fn rows(a: &HtTensor, n: usize) -> Result<Vec<Vec<f64>>, String> {
    let x = densify_with_cap(a, PAGE_DENSE_CAP).map_err(|e| e.to_string())?;
    Ok((1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| {
                    x.get(&htmax::MultiIndex::new(vec![i, j]))
                        .unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect())
}

/// The counterexample matrix and its best rank-1 approximation.
pub fn counterexample_json(n: usize, sigma1: f64, sigma2: f64) -> Result<String, String> {
    let m = counterexample_matrix(n, sigma1, sigma2).map_err(|e| e.to_string())?;
    let (t, rep) = truncate(&m, &RankTarget::Uniform(1)).map_err(|e| e.to_string())?;
    let max_of = |v: &[Vec<f64>]| v.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let (entries, truncated) = (rows(&m, n)?, rows(&t, n)?);
    let out = CounterexampleOut {
        max_entry: max_of(&entries),
        truncated_max_entry: max_of(&truncated),
        rel_error: rep.rel_error,
        entries,
        truncated,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn convergence_trace(
    family: &str,
    d: usize,
    n: usize,
    r: usize,
    seed: u32,
    algs: &str,
    rank: usize,
    iters: usize,
) -> Result<String, JsValue> {
    trace_json(family, d, n, r, seed.into(), algs, rank, iters).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn argmax(
    family: &str,
    d: usize,
    n: usize,
    r: usize,
    seed: u32,
    rank: usize,
) -> Result<String, JsValue> {
    argmax_json(family, d, n, r, seed.into(), rank).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn counterexample(n: usize, sigma1: f64, sigma2: f64) -> Result<String, JsValue> {
    counterexample_json(n, sigma1, sigma2).map_err(|e| JsValue::from_str(&e))
}
