#![allow(dead_code)]

use htmax::construct::{cheb_tensor, from_elementary, random_ht, seeded_rng};
use htmax::oracle::{dense_maxnorm_argmax, densify, DenseTensor};
use htmax::HtTensor;
use rand::Rng;
use std::sync::{Mutex, MutexGuard};

static SERIAL: Mutex<()> = Mutex::new(());

/// Held for the duration of a test so timings never overlap.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Small instance number `i` of a mixed rand / cheb / elementary family with
/// at most `max_entries` entries.
pub fn mixed_instance(i: u64, max_entries: usize) -> HtTensor {
    let mut rng = seeded_rng(1000 + i);
    let d = rng.gen_range(2..=4usize);
    let n_max = (1..)
        .take_while(|n: &usize| n.pow(d as u32) <= max_entries)
        .last()
        .unwrap();
    let n = rng.gen_range(2..=n_max.max(2));
    match i % 3 {
        0 => random_ht(d, n, rng.gen_range(1..=3), i).unwrap(),
        1 => cheb_tensor(d, n).unwrap(),
        _ => {
            let vs: Vec<Vec<f64>> = (0..d)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            from_elementary(&vs).unwrap()
        }
    }
}

pub fn dense(a: &HtTensor) -> DenseTensor {
    densify(a).unwrap()
}

pub fn dense_max(a: &HtTensor) -> f64 {
    dense_maxnorm_argmax(&densify(a).unwrap()).unwrap().0
}

/// `‖x - y‖ / ‖y‖` over dense arrays.
pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let num: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn report(n: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {n:>2} [{name}]: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}
