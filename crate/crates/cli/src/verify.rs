//! Oracle checks on one tensor: each HT operation against its dense
//! counterpart.

use htmax::arith::{
    add, dot, hadamard, ht_qr, norm, remove_zero_rows, scale, slice, truncate, truncate_eps,
};
use htmax::io::{from_json, to_json};
use htmax::oracle::{dense_dot, dense_hadamard, densify_with_cap, DenseTensor};
use htmax::{HtTensor, MultiIndex, RankTarget, Result};

pub const TOL: f64 = 1e-10;

pub struct Check {
    pub name: String,
    pub error: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tol
    }
}

fn rel_diff(got: &[f64], want: &[f64]) -> f64 {
    let num: f64 = got
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

struct Checker {
    cap: u128,
    checks: Vec<Check>,
}

impl Checker {
    fn dense(&self, x: &HtTensor) -> Result<DenseTensor> {
        densify_with_cap(x, self.cap)
    }

    fn push(&mut self, name: &str, got: &[f64], want: &[f64]) {
        self.checks.push(Check {
            name: name.into(),
            error: rel_diff(got, want),
            tol: TOL,
        });
    }

    fn tensor(&mut self, name: &str, got: &HtTensor, want: &DenseTensor) -> Result<()> {
        let g = self.dense(got)?;
        self.push(name, g.values(), want.values());
        Ok(())
    }
}

/// Runs every check; fails only when the tensor cannot be densified or an
/// operation errors.
pub fn run(x: &HtTensor, cap: u128) -> Result<Vec<Check>> {
    let mut c = Checker {
        cap,
        checks: Vec::new(),
    };
    let dx = c.dense(x)?;

    let by_entry: Vec<f64> = (0..dx.len())
        .map(|lin| x.entry(&dx.multi_index(lin)))
        .collect::<Result<_>>()?;
    c.push("entry", &by_entry, dx.values());

    let y = add(x, &hadamard(x, x)?)?;
    let dy = c.dense(&y)?;
    c.push("dot", &[dot(x, &y)?], &[dense_dot(&dx, &dy)?]);
    c.push("norm", &[norm(x)], &[dense_dot(&dx, &dx)?.sqrt()]);
    c.tensor("hadamard", &hadamard(x, &y)?, &dense_hadamard(&dx, &dy)?)?;
    c.tensor("add", &add(x, &y)?, &dx.add(&dy)?)?;
    c.tensor("scale", &scale(x, -1.5), &dx.scale(-1.5))?;
    for mu in 1..=x.order() {
        let n = x.mode_sizes()[mu - 1];
        let hi = n.div_ceil(2);
        c.tensor(
            &format!("slice mode {mu}"),
            &slice(x, mu, 1, hi)?,
            &dx.slice(mu, 1, hi)?,
        )?;
    }
    c.tensor("truncate_eps", &truncate_eps(&y, 1e-13)?.0, &dy)?;
    c.tensor(
        "truncate",
        &truncate(&add(x, x)?, &RankTarget::Uniform(x.max_rank()))?.0,
        &dx.scale(2.0),
    )?;

    let inputs = [x.clone(), y.clone()];
    let qr = ht_qr(&inputs)?;
    for (col, want) in [&dx, &dy].into_iter().enumerate() {
        let mut acc = DenseTensor::new(x.mode_sizes().to_vec(), vec![0.0; dx.len()])?;
        for (row, q) in qr.q.iter().enumerate() {
            acc = acc.add(&c.dense(q)?.scale(qr.r[(row, col)]))?;
        }
        c.push(
            &format!("ht_qr column {}", col + 1),
            acc.values(),
            want.values(),
        );
    }

    if norm(x) > 0.0 {
        let (reduced, maps) = remove_zero_rows(x, 0.0)?;
        let restricted = DenseTensor::from_fn(reduced.mode_sizes().to_vec(), |idx| {
            let orig: Vec<usize> = idx.iter().zip(&maps).map(|(&i, m)| m[i - 1]).collect();
            dx.get(&MultiIndex::new(orig)).unwrap_or(f64::NAN)
        })?;
        c.tensor("remove_zero_rows", &reduced, &restricted)?;
    }

    let back = from_json(&to_json(x))?;
    c.tensor("json round trip", &back, &dx)?;
    Ok(c.checks)
}

/// Closed-form rank-1 truncation error of the counterexample matrix.
pub fn counterexample(x: &HtTensor, sigma1: f64, sigma2: f64) -> Result<Check> {
    let (_, rep) = truncate(x, &RankTarget::Uniform(1))?;
    let want = (sigma2 * sigma2 / (sigma1 * sigma1 + sigma2 * sigma2)).sqrt();
    Ok(Check {
        name: "counterexample rank-1 error".into(),
        error: (rep.rel_error - want).abs(),
        tol: TOL,
    })
}
