//! Constructors for the tensor families used throughout the crate:
//! elementary tensors, seeded random HT tensors, the discretized Chebyshev
//! polynomial `T_4`, the rank-2 counterexample matrix and the spiked
//! elementary tensor on which truncated power iterations fail.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HtError, Result};
use crate::linalg::Mat;
use crate::tensor::{HtTensor, MultiIndex, NodeData, Transfer};
use crate::tree::DimensionTree;

/// Portable seeded generator used by every random constructor.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `u^(1) ⊗ ... ⊗ u^(d)` on the balanced tree.
pub fn from_elementary(vectors: &[Vec<f64>]) -> Result<HtTensor> {
    let tree = Arc::new(DimensionTree::balanced(vectors.len())?);
    from_elementary_with_tree(tree, vectors)
}

pub fn from_elementary_with_tree(
    tree: Arc<DimensionTree>,
    vectors: &[Vec<f64>],
) -> Result<HtTensor> {
    if vectors.is_empty() {
        return Err(HtError::InvalidParameter(
            "need at least one factor vector".into(),
        ));
    }
    if vectors.len() != tree.order() {
        return Err(HtError::InvalidParameter(format!(
            "{} factors for a tree of order {}",
            vectors.len(),
            tree.order()
        )));
    }
    if let Some(mu) = vectors.iter().position(Vec::is_empty) {
        return Err(HtError::InvalidParameter(format!(
            "factor {} is empty",
            mu + 1
        )));
    }
    let nodes = (0..tree.num_nodes())
        .map(|id| {
            if tree.is_leaf(id) {
                let u = &vectors[tree.mode_of_leaf(id) - 1];
                NodeData::Leaf(Mat::from_vec(u.len(), 1, u.clone()))
            } else {
                NodeData::Interior(Transfer::from_vec(1, 1, 1, vec![1.0]).expect("1x1x1"))
            }
        })
        .collect();
    let sizes = vectors.iter().map(Vec::len).collect();
    HtTensor::new(tree, sizes, nodes)
}

/// `rand(d, n, r)`: all non-root ranks `r`, HT data uniform in `[-1.5, 1.5]`,
/// and every leaf frame made of two random rows, each of the `n` rows picking
/// one of them at random. The tensor therefore takes at most `2^d` values.
pub fn random_ht(d: usize, n: usize, r: usize, seed: u64) -> Result<HtTensor> {
    let tree = Arc::new(DimensionTree::balanced(d)?);
    random_ht_with_tree(tree, n, r, seed)
}

pub fn random_ht_with_tree(
    tree: Arc<DimensionTree>,
    n: usize,
    r: usize,
    seed: u64,
) -> Result<HtTensor> {
    if n == 0 || r == 0 {
        return Err(HtError::InvalidParameter(
            "rand(d,n,r) needs d, n, r >= 1".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut sample = move || rng.gen_range(-1.5..=1.5);
    let rank_of = |id: usize| if id == tree.root() { 1 } else { r };
    let mut nodes = Vec::with_capacity(tree.num_nodes());
    for id in 0..tree.num_nodes() {
        let rt = rank_of(id);
        match tree.children(id) {
            None => {
                let rows: [Vec<f64>; 2] = [
                    (0..rt).map(|_| sample()).collect(),
                    (0..rt).map(|_| sample()).collect(),
                ];
                let mut u = Mat::zeros(n, rt);
                for i in 0..n {
                    let pick = if sample() >= 0.0 { 1 } else { 0 };
                    u.row_mut(i).copy_from_slice(&rows[pick]);
                }
                nodes.push(NodeData::Leaf(u));
            }
            Some((l, rr)) => {
                let (r1, r2) = (rank_of(l), rank_of(rr));
                let data = (0..rt * r1 * r2).map(|_| sample()).collect();
                nodes.push(NodeData::Interior(Transfer::from_vec(rt, r1, r2, data)?));
            }
        }
    }
    let d = tree.order();
    HtTensor::new(tree, vec![n; d], nodes)
}

/// Coefficients of `T_4(x) = 8x^4 - 8x^2 + 1` in the monomial basis.
const T4_COEFFS: [f64; 5] = [1.0, 0.0, -8.0, 0.0, 8.0];

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Grid point of the linearized index (1-based) on `N` equidistant points in `[-1, 1]`.
pub fn cheb_grid_point(lin: f64, total: f64) -> f64 {
    -1.0 + 2.0 * (lin - 1.0) / (total - 1.0)
}

pub fn chebyshev_t4(x: f64) -> f64 {
    let x2 = x * x;
    8.0 * x2 * x2 - 8.0 * x2 + 1.0
}

/// `cheb(d, n)`: `a[i] = T_4(x_lin(i))` with `lin = 1 + sum (i_mu - 1) n^(d-mu)`.
///
/// Each node `t` carries the frame `[1, s_t, s_t^2, s_t^3, s_t^4]` of its
/// partial affine sum `s_t = sum_{mu in t} c_mu (i_mu - 1)`; transfer
/// tensors recombine powers binomially and the root applies `T_4(-1 + s)`.
pub fn cheb_tensor(d: usize, n: usize) -> Result<HtTensor> {
    let tree = Arc::new(DimensionTree::balanced(d)?);
    cheb_tensor_with_tree(tree, n)
}

pub fn cheb_tensor_with_tree(tree: Arc<DimensionTree>, n: usize) -> Result<HtTensor> {
    let d = tree.order();
    if d < 2 || n < 2 {
        return Err(HtError::InvalidParameter(
            "cheb(d,n) needs d >= 2 and n >= 2".into(),
        ));
    }
    let total = (n as f64).powi(d as i32);
    if !total.is_finite() {
        return Err(HtError::InvalidParameter(format!(
            "n^d = {n}^{d} overflows"
        )));
    }
    let step = |mu: usize| 2.0 * (n as f64).powi((d - mu) as i32) / (total - 1.0);
    const P: usize = 5;

    let mut interior = Transfer::zeros(P, P, P);
    for p in 0..P {
        for q in 0..=p {
            interior.set(p, q, p - q, binom(p, q));
        }
    }
    // T_4(c0 + s) = sum_q g_q s^q with c0 = -1.
    let c0 = -1.0f64;
    let g: Vec<f64> = (0..P)
        .map(|q| {
            (q..P)
                .map(|m| T4_COEFFS[m] * binom(m, q) * c0.powi((m - q) as i32))
                .sum()
        })
        .collect();
    let mut root = Transfer::zeros(1, P, P);
    for q1 in 0..P {
        for q2 in 0..P - q1 {
            root.set(0, q1, q2, g[q1 + q2] * binom(q1 + q2, q1));
        }
    }

    let nodes = (0..tree.num_nodes())
        .map(|id| {
            if tree.is_leaf(id) {
                let c = step(tree.mode_of_leaf(id));
                NodeData::Leaf(Mat::from_fn(n, P, |i, p| (c * i as f64).powi(p as i32)))
            } else if id == tree.root() {
                NodeData::Interior(root.clone())
            } else {
                NodeData::Interior(interior.clone())
            }
        })
        .collect();
    HtTensor::new(tree, vec![n; d], nodes)
}

/// The `n x n` matrix `M = M1 + M2` with `M1` equal to `sigma1 / (n - 1)` on
/// the lower-right `(n-1) x (n-1)` block and `M2` equal to `sigma2` at the
/// corner `(1, 1)`. Singular values are `sigma1 > sigma2`.
pub fn counterexample_matrix(n: usize, sigma1: f64, sigma2: f64) -> Result<HtTensor> {
    if n < 2 {
        return Err(HtError::InvalidParameter(
            "counterexample needs n >= 2".into(),
        ));
    }
    if !(sigma1 > sigma2 && sigma2 >= 0.0) {
        return Err(HtError::InvalidParameter(format!(
            "need sigma1 > sigma2 >= 0, got {sigma1}, {sigma2}"
        )));
    }
    let tree = Arc::new(DimensionTree::balanced(2)?);
    let (l, r) = tree.children(tree.root()).expect("order 2");
    let block = sigma1 / (n as f64 - 1.0);
    let (frame, root) = if sigma2 == 0.0 {
        let f = Mat::from_fn(n, 1, |i, _| if i == 0 { 0.0 } else { 1.0 });
        (f, Transfer::from_vec(1, 1, 1, vec![block])?)
    } else {
        let f = Mat::from_fn(n, 2, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (_, 0) => 0.0,
            (0, 1) => 0.0,
            _ => 1.0,
        });
        (
            f,
            Transfer::from_vec(1, 2, 2, vec![sigma2, 0.0, 0.0, block])?,
        )
    };
    let mut nodes = vec![NodeData::Leaf(Mat::zeros(0, 0)); 3];
    nodes[l] = NodeData::Leaf(frame.clone());
    nodes[r] = NodeData::Leaf(frame);
    nodes[tree.root()] = NodeData::Interior(root);
    HtTensor::new(tree, vec![n, n], nodes)
}

/// Value of the spike at `(1, ..., 1)`.
pub const SPIKE: f64 = 1.9;

/// Elementary tensor with factors uniform in `[0.91, 1.0]` whose entry
/// `(1, ..., 1)` is overwritten with exactly [`SPIKE`]; representation
/// rank 2.
pub fn adversarial_tensor(d: usize, n: usize, seed: u64) -> Result<HtTensor> {
    if d < 2 || n == 0 {
        return Err(HtError::InvalidParameter(
            "adversarial tensor needs d >= 2, n >= 1".into(),
        ));
    }
    let tree = Arc::new(DimensionTree::balanced(d)?);
    let mut rng = seeded_rng(seed);
    let factors: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.gen_range(0.91..=1.0)).collect())
        .collect();
    let build = |spike: f64| -> Result<HtTensor> {
        let nodes = (0..tree.num_nodes())
            .map(|id| {
                if tree.is_leaf(id) {
                    let u = &factors[tree.mode_of_leaf(id) - 1];
                    NodeData::Leaf(Mat::from_fn(n, 2, |i, j| match j {
                        0 => u[i],
                        _ => (i == 0) as u8 as f64,
                    }))
                } else if id == tree.root() {
                    NodeData::Interior(
                        Transfer::from_vec(1, 2, 2, vec![1.0, 0.0, 0.0, spike]).expect("1x2x2"),
                    )
                } else {
                    NodeData::Interior(
                        Transfer::from_vec(2, 2, 2, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
                            .expect("2x2x2"),
                    )
                }
            })
            .collect();
        HtTensor::new(tree.clone(), vec![n; d], nodes)
    };
    // The corner as `entry` rounds it; nudge the spike coefficient until the
    // evaluated sum is exactly 1.9.
    let ones = MultiIndex::new(vec![1; d]);
    let corner = build(0.0)?.entry(&ones)?;
    let mut spike = SPIKE - corner;
    for _ in 0..8 {
        let got = corner + spike;
        if got == SPIKE {
            break;
        }
        spike = if got < SPIKE {
            spike.next_up()
        } else {
            spike.next_down()
        };
    }
    let a = build(spike)?;
    debug_assert_eq!(a.entry(&ones)?, SPIKE);
    Ok(a)
}
