//! Runtime sweeps over cheb(d, n) for the adaptive estimator and the
//! argmax search.

use std::time::Instant;

use htmax::construct::cheb_tensor;
use htmax::{adaptive_maxnorm, binary_search_argmax, IterationConfig, Result};

pub const HEADER: &str = "family,d,n,alg,seconds,rel_err";

/// Median wall time of `reps` runs and the value of the last run.
fn timed(reps: usize, mut f: impl FnMut() -> Result<f64>) -> Result<(f64, f64)> {
    let mut times = Vec::with_capacity(reps);
    let mut value = 0.0;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        value = f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok((times[times.len() / 2], value))
}

/// CSV rows for one `(d, n)` point. The max norm of cheb is 1.
pub fn point(d: usize, n: usize, reps: usize, cfg: &IterationConfig) -> Result<Vec<String>> {
    let a = cheb_tensor(d, n)?;
    let (t5, v5) = timed(reps, || adaptive_maxnorm(&a, cfg).map(|e| e.value))?;
    let (t6, v6) = timed(reps, || {
        binary_search_argmax(&a, cfg).map(|r| r.value.abs())
    })?;
    Ok(vec![
        format!("cheb,{d},{n},adaptive,{t5:.6},{:.3e}", (v5 - 1.0).abs()),
        format!("cheb,{d},{n},argmax,{t6:.6},{:.3e}", (v6 - 1.0).abs()),
    ])
}
