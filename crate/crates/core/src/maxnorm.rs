//! Max-norm estimators: power iteration with the Rayleigh quotient and the
//! improved estimator, Rayleigh-Ritz acceleration, squaring, and the
//! adaptive combination of the last two.
//!
//! Every estimator treats `a` as the diagonal operator `x -> a ∘ x`. Without
//! truncation the improved estimator is a lower bound on `‖a‖∞` that never
//! decreases.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::arith::{
    distance, dot, hadamard_compressed, ht_qr, root_norm, scale, stable_norm, truncate,
    truncate_eps, truncate_eps_orthogonal, truncate_orthogonal, RankTarget,
};
use crate::error::{HtError, Result};
use crate::linalg::{sym_eigen, Mat};
use crate::tensor::HtTensor;

/// Relative tolerance of the recompression applied in exact mode. Without it
/// ranks would multiply at every product.
pub const LOSSLESS_TOL: f64 = 1e-14;

/// What happens to every Hadamard product before it becomes the next iterate.
#[derive(Debug, Clone, PartialEq)]
pub enum Truncation {
    /// Recompression at [`LOSSLESS_TOL`] only.
    Exact,
    /// Fixed working ranks.
    Ranks(RankTarget),
    /// Relative accuracy per truncation.
    Tolerance(f64),
}

impl Truncation {
    fn apply(&self, y: &HtTensor) -> Result<(HtTensor, f64)> {
        let (z, rep) = match self {
            Truncation::Exact => truncate_eps(y, LOSSLESS_TOL)?,
            Truncation::Ranks(target) => truncate(y, target)?,
            Truncation::Tolerance(eps) => truncate_eps(y, *eps)?,
        };
        Ok((z, rep.rel_error))
    }

    /// [`Truncation::apply`] for a product fresh from `hadamard_compressed`.
    fn apply_to_product(&self, y: &HtTensor) -> Result<(HtTensor, f64)> {
        let (z, rep) = match self {
            Truncation::Exact => truncate_eps_orthogonal(y, LOSSLESS_TOL)?,
            Truncation::Ranks(target) => truncate_orthogonal(y, target)?,
            Truncation::Tolerance(eps) => truncate_eps_orthogonal(y, *eps)?,
        };
        Ok((z, rep.rel_error))
    }

    fn is_exact(&self) -> bool {
        matches!(self, Truncation::Exact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    /// Steps for the fixed-length iterations; step budget of one squaring run.
    pub max_iters: usize,
    pub truncation: Truncation,
    /// Rayleigh-Ritz window size `k`.
    pub subspace: usize,
    /// Squaring stops once the relative iterate change drops below this.
    pub squaring_tol: f64,
    /// A squaring run whose truncation errors all stay below `trunc_cap` is
    /// trusted by the adaptive loop.
    pub trunc_cap: f64,
    /// Rayleigh-Ritz steps per adaptive cycle.
    pub ritz_steps: usize,
    pub max_cycles: usize,
    /// Evaluate Ritz values after every step instead of only at the end.
    pub ritz_every_step: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            max_iters: 40,
            truncation: Truncation::Exact,
            subspace: 5,
            squaring_tol: 1e-13,
            trunc_cap: 1e-8,
            ritz_steps: 10,
            max_cycles: 50,
            ritz_every_step: false,
        }
    }
}

impl IterationConfig {
    /// Default settings with a uniform working rank.
    pub fn with_rank(rank: usize) -> Self {
        Self {
            truncation: Truncation::Ranks(RankTarget::Uniform(rank)),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HtError::InvalidParameter(m.into()));
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1");
        }
        if self.subspace == 0 {
            return bad("subspace size must be >= 1");
        }
        if self.ritz_steps == 0 {
            return bad("ritz_steps must be >= 1");
        }
        if self.max_cycles == 0 {
            return bad("max_cycles must be >= 1");
        }
        if !(self.squaring_tol > 0.0) || !(self.trunc_cap > 0.0) {
            return bad("tolerances must be positive");
        }
        match &self.truncation {
            Truncation::Ranks(RankTarget::Uniform(0)) => bad("working rank must be >= 1"),
            Truncation::Ranks(RankTarget::PerNode(v)) if v.contains(&0) => {
                bad("working ranks must be >= 1")
            }
            Truncation::Tolerance(e) if !(*e > 0.0) => bad("truncation tolerance must be positive"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    Stagnated,
    MaxIters,
    TruncationCapExceeded,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Stagnated => "stagnated",
            Status::MaxIters => "max-iters",
            Status::TruncationCapExceeded => "truncation-cap-exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub estimate: f64,
    /// Rayleigh quotient of the same step, where the algorithm has one.
    pub rayleigh: Option<f64>,
    pub rel_trunc_err: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
    pub status: Status,
    /// Some truncation error exceeded the configured cap.
    pub cap_exceeded: bool,
}

impl ConvergenceTrace {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            status: Status::MaxIters,
            cap_exceeded: false,
        }
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.estimate).collect()
    }

    /// CSV with header `iter,estimate,rel_trunc_err,elapsed_s`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,estimate,rel_trunc_err,elapsed_s\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.iter, r.estimate, r.rel_trunc_err, r.elapsed_s
            );
        }
        s
    }

    /// As [`to_csv`](Self::to_csv) with an extra `rel_err` column against a
    /// known max-norm.
    pub fn to_csv_with_truth(&self, truth: f64) -> String {
        let mut s = String::from("iter,estimate,rel_trunc_err,elapsed_s,rel_err\n");
        for r in &self.records {
            let err = (truth - r.estimate).abs() / truth;
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.iter, r.estimate, r.rel_trunc_err, r.elapsed_s, err
            );
        }
        s
    }

    /// `error_j / error_{j-1}` at the last step whose relative error against
    /// `truth` exceeds `1e-12`. `None` when no such step has a predecessor.
    pub fn convergence_rate(&self, truth: f64) -> Option<f64> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .map(|r| (truth - r.estimate).abs() / truth)
            .collect();
        let j = errs.iter().rposition(|&e| e > 1e-12)?;
        if j == 0 || errs[j - 1] == 0.0 {
            return None;
        }
        Some(errs[j] / errs[j - 1])
    }
}

#[derive(Debug, Clone)]
pub struct MaxNormEstimate {
    pub value: f64,
    pub trace: ConvergenceTrace,
    /// Last normalized iterate.
    pub final_iterate: HtTensor,
}

/// Wall clock for trace timestamps. `wasm32-unknown-unknown` has no clock,
/// so timestamps there are zero.
struct Clock {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Clock {
    fn new() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// An iterate kept at norm within a factor `sqrt 2` of one by exact
/// power-of-two scaling; estimates divide by `norm`, so quotients of equal
/// norms stay exact.
#[derive(Clone)]
struct Iterate {
    x: HtTensor,
    norm: f64,
}

impl Iterate {
    fn new(z: &HtTensor) -> Result<Self> {
        Self::with_norm(z, stable_norm(z))
    }

    /// For `z` with orthonormal non-root frames.
    fn from_orthogonal(z: &HtTensor) -> Result<Self> {
        Self::with_norm(z, root_norm(z))
    }

    fn with_norm(z: &HtTensor, n: f64) -> Result<Self> {
        if !n.is_finite() {
            return Err(HtError::NonFinite("iterate norm".into()));
        }
        if n == 0.0 {
            return Err(HtError::TruncationDestroyedIterate);
        }
        let s = 2f64.powi(-(n.log2().round() as i32));
        Ok(Self {
            x: scale(z, s),
            norm: n * s,
        })
    }

    fn normalized(&self) -> HtTensor {
        scale(&self.x, 1.0 / self.norm)
    }
}

fn start(a: &HtTensor, cfg: &IterationConfig) -> Result<Iterate> {
    cfg.validate()?;
    if !a.is_finite() {
        return Err(HtError::NonFinite("input tensor".into()));
    }
    if stable_norm(a) == 0.0 {
        return Err(HtError::ZeroTensor);
    }
    Iterate::new(a)
}

struct PowerStep {
    alpha: f64,
    lambda: f64,
    next: Iterate,
    rel_err: f64,
}

/// One step: `α = ‖a ∘ x‖ / ‖x‖` and `λ = ⟨x, a ∘ x⟩ / ‖x‖²`, both taken
/// before truncation.
fn power_step(a: &HtTensor, it: &Iterate, trunc: &Truncation) -> Result<PowerStep> {
    let y = hadamard_compressed(a, &it.x)?;
    let alpha = root_norm(&y) / it.norm;
    if !alpha.is_finite() {
        return Err(HtError::NonFinite("Hadamard product".into()));
    }
    if alpha == 0.0 {
        return Err(HtError::ZeroTensor);
    }
    let lambda = dot(&it.x, &y)? / (it.norm * it.norm);
    let (z, rel_err) = trunc.apply_to_product(&y)?;
    Ok(PowerStep {
        alpha,
        lambda,
        next: Iterate::from_orthogonal(&z)?,
        rel_err,
    })
}

fn mark_cap(trace: &mut ConvergenceTrace, rel_err: f64, cfg: &IterationConfig) {
    if rel_err > cfg.trunc_cap {
        trace.cap_exceeded = true;
    }
}

fn settle(trace: &mut ConvergenceTrace) {
    let e = trace.estimates();
    if let [.., p, l] = e[..] {
        if (l - p).abs() <= 1e-14 * l.abs() {
            trace.status = Status::Converged;
        }
    }
}

/// Power iteration traced with both estimators. Each record holds
/// `α^{(j)} = ‖a ∘ a^{(j-1)}‖` as the estimate and the Rayleigh quotient
/// `λ^{(j)} = ⟨a^{(j-1)}, a ∘ a^{(j-1)}⟩` beside it.
fn power_iteration(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    let clock = Clock::new();
    let mut x = start(a, cfg)?;
    let mut trace = ConvergenceTrace::new();
    for iter in 1..=cfg.max_iters {
        let step = power_step(a, &x, &cfg.truncation)?;
        mark_cap(&mut trace, step.rel_err, cfg);
        trace.records.push(TraceRecord {
            iter,
            estimate: step.alpha,
            rayleigh: Some(step.lambda),
            rel_trunc_err: step.rel_err,
            elapsed_s: clock.elapsed(),
        });
        x = step.next;
    }
    settle(&mut trace);
    let value = trace.records.last().map_or(0.0, |r| r.estimate);
    Ok(MaxNormEstimate {
        value,
        trace,
        final_iterate: x.normalized(),
    })
}

/// Power iteration estimating by `|λ|`, the absolute Rayleigh quotient.
/// Kept for comparison: it fails whenever the dominant entries cancel.
pub fn power_iteration_rayleigh(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    let mut est = power_iteration(a, cfg)?;
    for r in &mut est.trace.records {
        let lambda = r.rayleigh.expect("power iteration records λ");
        r.rayleigh = Some(r.estimate);
        r.estimate = lambda.abs();
    }
    settle(&mut est.trace);
    est.value = est.trace.records.last().map_or(0.0, |r| r.estimate);
    Ok(est)
}

/// Power iteration estimating by `α = ‖a ∘ x‖`. Records also carry `λ`.
pub fn power_iteration_improved(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    power_iteration(a, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RitzEstimate {
    /// Largest absolute Ritz value.
    pub alpha: f64,
    /// Ritz values, descending.
    pub values: Vec<f64>,
    /// Subspace dimension actually used.
    pub dim: usize,
}

/// Rayleigh-Ritz projection of `x -> a ∘ x` onto the span of `iterates`
/// (oldest first). Dependent directions are dropped.
pub fn rayleigh_ritz_estimate(a: &HtTensor, iterates: &[HtTensor]) -> Result<RitzEstimate> {
    rayleigh_ritz_truncated(a, iterates, &Truncation::Exact)
}

/// As [`rayleigh_ritz_estimate`], with the orthonormal basis truncated like
/// the iterates. The lost orthogonality is compensated by solving the
/// projected problem against the basis Gram matrix.
pub fn rayleigh_ritz_truncated(
    a: &HtTensor,
    iterates: &[HtTensor],
    trunc: &Truncation,
) -> Result<RitzEstimate> {
    if iterates.is_empty() {
        return Err(HtError::InvalidParameter(
            "Rayleigh-Ritz needs at least one iterate".into(),
        ));
    }
    let newest_first: Vec<HtTensor> = iterates.iter().rev().cloned().collect();
    let qr = ht_qr(&newest_first)?;
    let diag_max = (0..qr.r.rows()).fold(0.0f64, |m, i| m.max(qr.r[(i, i)].abs()));
    if diag_max == 0.0 {
        return Err(HtError::ZeroTensor);
    }
    let mut basis = Vec::new();
    for (i, q) in qr.q.into_iter().enumerate() {
        if qr.r[(i, i)].abs() > 1e-12 * diag_max {
            basis.push(if trunc.is_exact() {
                q
            } else {
                trunc.apply(&q)?.0
            });
        }
    }
    let m = basis.len();
    let images = basis
        .iter()
        .map(|q| hadamard_compressed(a, q))
        .collect::<Result<Vec<_>>>()?;
    let mut g = Mat::zeros(m, m);
    let mut b = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            g[(i, j)] = dot(&basis[i], &basis[j])?;
            b[(i, j)] = dot(&basis[i], &images[j])?;
        }
    }
    let (g, b) = (g.symmetrized(), b.symmetrized());
    // Canonical orthogonalization: X = V Λ^{-1/2} over the well-conditioned
    // part of G, then the standard problem XᵀBX.
    let ge = sym_eigen(&g);
    let top = ge.values.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..m).filter(|&i| ge.values[i] > 1e-12 * top).collect();
    if keep.is_empty() {
        return Err(HtError::TruncationDestroyedIterate);
    }
    let x = Mat::from_fn(m, keep.len(), |r, c| {
        ge.vectors[(r, keep[c])] / ge.values[keep[c]].sqrt()
    });
    let projected = x.tr_matmul(&b.matmul(&x)).symmetrized();
    let values = sym_eigen(&projected).values;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(HtError::NonFinite("Ritz values".into()));
    }
    let alpha = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(RitzEstimate {
        alpha,
        values,
        dim: keep.len(),
    })
}

/// Runs `steps` improved power steps from `x0` with a window of the last
/// `k` iterates. Records carry the Ritz estimate where computed, the
/// improved estimate elsewhere.
fn ritz_phase(
    a: &HtTensor,
    x0: Iterate,
    steps: usize,
    cfg: &IterationConfig,
    trace: &mut ConvergenceTrace,
    clock: &Clock,
) -> Result<(f64, Iterate)> {
    let mut window: VecDeque<HtTensor> = VecDeque::from([x0.x.clone()]);
    let mut x = x0;
    let mut value = 0.0;
    for s in 1..=steps {
        let step = power_step(a, &x, &cfg.truncation)?;
        mark_cap(trace, step.rel_err, cfg);
        window.push_back(step.next.x.clone());
        if window.len() > cfg.subspace {
            window.pop_front();
        }
        let estimate = if cfg.ritz_every_step || s == steps {
            let iterates: Vec<HtTensor> = window.iter().cloned().collect();
            value = rayleigh_ritz_truncated(a, &iterates, &cfg.truncation)?.alpha;
            value
        } else {
            step.alpha
        };
        trace.records.push(TraceRecord {
            iter: trace.records.len() + 1,
            estimate,
            rayleigh: Some(step.lambda),
            rel_trunc_err: step.rel_err,
            elapsed_s: clock.elapsed(),
        });
        x = step.next;
    }
    Ok((value, x))
}

/// Power iteration accelerated by Rayleigh-Ritz projection onto the last
/// `k` iterates; runs `max_iters` steps.
pub fn power_iteration_ritz(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    let clock = Clock::new();
    let x0 = start(a, cfg)?;
    let mut trace = ConvergenceTrace::new();
    let (value, x) = ritz_phase(a, x0, cfg.max_iters, cfg, &mut trace, &clock)?;
    settle(&mut trace);
    Ok(MaxNormEstimate {
        value,
        trace,
        final_iterate: x.normalized(),
    })
}

/// Squaring from the normalized `x0`: the first record is `‖a ∘ x0‖`, each
/// later one follows a squaring `x <- trunc(x ∘ x) / ‖·‖`.
fn squaring_phase(
    a: &HtTensor,
    x0: Iterate,
    cfg: &IterationConfig,
    trace: &mut ConvergenceTrace,
    clock: &Clock,
) -> Result<(f64, Iterate)> {
    let estimate = |it: &Iterate| -> Result<f64> {
        let alpha = root_norm(&hadamard_compressed(a, &it.x)?) / it.norm;
        if alpha.is_finite() {
            Ok(alpha)
        } else {
            Err(HtError::NonFinite("squaring estimate".into()))
        }
    };
    let mut x = x0;
    let mut alpha = estimate(&x)?;
    trace.records.push(TraceRecord {
        iter: trace.records.len() + 1,
        estimate: alpha,
        rayleigh: None,
        rel_trunc_err: 0.0,
        elapsed_s: clock.elapsed(),
    });
    trace.status = Status::MaxIters;
    let mut best_change = f64::INFINITY;
    let mut best_alpha = alpha;
    let mut since_progress = 0;
    for _ in 1..cfg.max_iters {
        let y = hadamard_compressed(&x.x, &x.x)?;
        if !root_norm(&y).is_finite() {
            return Err(HtError::NonFinite("squared iterate".into()));
        }
        if root_norm(&y) == 0.0 {
            return Err(HtError::TruncationDestroyedIterate);
        }
        let (z, rel_err) = cfg.truncation.apply_to_product(&y)?;
        mark_cap(trace, rel_err, cfg);
        let next = Iterate::from_orthogonal(&z)?;
        let change = distance(&next.normalized(), &x.normalized())?;
        alpha = estimate(&next)?;
        trace.records.push(TraceRecord {
            iter: trace.records.len() + 1,
            estimate: alpha,
            rayleigh: None,
            rel_trunc_err: rel_err,
            elapsed_s: clock.elapsed(),
        });
        x = next;
        if change < cfg.squaring_tol {
            trace.status = Status::Converged;
            break;
        }
        // Progress is a smaller change or a larger estimate; early squarings
        // can move the iterate further while the estimate still climbs.
        let climbed = alpha > best_alpha * (1.0 + 4.0 * f64::EPSILON);
        best_alpha = best_alpha.max(alpha);
        if change < best_change || climbed {
            best_change = best_change.min(change);
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= 5 {
                trace.status = Status::Stagnated;
                break;
            }
        }
    }
    Ok((alpha, x))
}

/// Squaring iteration: the iterate after `j` squarings is the normalized
/// `2^j`-th Hadamard power of `a`. Stops on a relative iterate change below
/// `squaring_tol`, after five steps in which neither the change shrank nor
/// the estimate grew, or after `max_iters`
/// records. Truncation errors above `trunc_cap` are flagged in the trace.
pub fn power_iteration_squaring(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    let clock = Clock::new();
    let x0 = start(a, cfg)?;
    let mut trace = ConvergenceTrace::new();
    let (value, x) = squaring_phase(a, x0, cfg, &mut trace, &clock)?;
    if trace.cap_exceeded {
        trace.status = Status::TruncationCapExceeded;
    }
    Ok(MaxNormEstimate {
        value,
        trace,
        final_iterate: x.normalized(),
    })
}

/// Alternates `ritz_steps` Rayleigh-Ritz steps with a squaring run started
/// from the last Ritz iterate. Returns the squaring result of the first cycle
/// whose truncation errors all stay within `trunc_cap`; after `max_cycles`
/// cycles, the last Ritz estimate and iterate.
pub fn adaptive_maxnorm(a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
    let clock = Clock::new();
    let mut x = start(a, cfg)?;
    let mut trace = ConvergenceTrace::new();
    let mut last_ritz = 0.0;
    for _ in 0..cfg.max_cycles {
        let (value, next) = ritz_phase(a, x, cfg.ritz_steps, cfg, &mut trace, &clock)?;
        last_ritz = value;
        x = next;
        let mut squaring = ConvergenceTrace::new();
        squaring.records = std::mem::take(&mut trace.records);
        let (alpha, y) = squaring_phase(a, x.clone(), cfg, &mut squaring, &clock)?;
        trace.records = squaring.records;
        if !squaring.cap_exceeded {
            trace.status = squaring.status;
            return Ok(MaxNormEstimate {
                value: alpha,
                trace,
                final_iterate: y.normalized(),
            });
        }
        trace.cap_exceeded = true;
    }
    trace.status = Status::TruncationCapExceeded;
    Ok(MaxNormEstimate {
        value: last_ritz,
        trace,
        final_iterate: x.normalized(),
    })
}

/// Estimator selector for front ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Rayleigh,
    PowerIteration,
    Ritz,
    Squaring,
    Adaptive,
}

impl Algorithm {
    pub fn run(self, a: &HtTensor, cfg: &IterationConfig) -> Result<MaxNormEstimate> {
        match self {
            Algorithm::Rayleigh => power_iteration_rayleigh(a, cfg),
            Algorithm::PowerIteration => power_iteration_improved(a, cfg),
            Algorithm::Ritz => power_iteration_ritz(a, cfg),
            Algorithm::Squaring => power_iteration_squaring(a, cfg),
            Algorithm::Adaptive => adaptive_maxnorm(a, cfg),
        }
    }
}
