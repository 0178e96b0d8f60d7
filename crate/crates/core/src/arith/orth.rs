//! Orthogonalization toward the root and joint orthonormal bases (HT-QR).

use super::{add, interior, leaf, scale};
use crate::error::{HtError, Result};
use crate::linalg::{householder_qr, Mat};
use crate::tensor::{HtTensor, NodeData, Transfer};

/// Equivalent representation whose non-root frames are orthonormal. Ranks
/// shrink where a frame has fewer rows than columns.
pub fn orthogonalize(x: &HtTensor) -> HtTensor {
    let tree = x.tree();
    let root = tree.root();
    let mut nodes = x.nodes().to_vec();
    let mut pushed: Vec<Option<Mat>> = vec![None; tree.num_nodes()];
    for &id in tree.postorder() {
        match tree.children(id) {
            None if id == root => {}
            None => {
                let (q, r) = householder_qr(leaf(&nodes[id]));
                nodes[id] = NodeData::Leaf(q);
                pushed[id] = Some(r);
            }
            Some((l, r)) => {
                let rl = pushed[l].take().expect("child factor");
                let rr = pushed[r].take().expect("child factor");
                let b = interior(&nodes[id]).apply_children(&rl, &rr);
                if id == root {
                    nodes[id] = NodeData::Interior(b);
                } else {
                    let (q, rf) = householder_qr(&b.to_columns());
                    nodes[id] = NodeData::Interior(Transfer::from_columns(b.left(), b.right(), &q));
                    pushed[id] = Some(rf);
                }
            }
        }
    }
    x.with_nodes(x.mode_sizes().to_vec(), nodes)
}

/// Frobenius norm of the root payload; equals the tensor norm when the
/// non-root frames are orthonormal.
pub(crate) fn root_norm(x: &HtTensor) -> f64 {
    match x.node(x.tree().root()) {
        NodeData::Leaf(u) => u.frobenius_norm(),
        NodeData::Interior(b) => b.to_rows().frobenius_norm(),
    }
}

/// Norm via orthogonalization; accurate to working precision relative to the
/// norm itself, also after cancellation.
pub fn stable_norm(x: &HtTensor) -> f64 {
    root_norm(&orthogonalize(x))
}

/// `‖x - y‖` without the cancellation of `sqrt(‖x‖² - 2⟨x,y⟩ + ‖y‖²)`.
pub fn distance(x: &HtTensor, y: &HtTensor) -> Result<f64> {
    Ok(stable_norm(&add(x, &scale(y, -1.0))?))
}

/// Orthonormal tensors sharing all non-root payloads, and the factor `r`
/// with `inputs[i] = sum_j r[j, i] * q[j]`.
#[derive(Debug, Clone)]
pub struct HtQrResult {
    pub q: Vec<HtTensor>,
    /// `min(m, k) x k` upper triangular, where `m` is the root coefficient
    /// dimension; square whenever `m >= k`.
    pub r: Mat,
    /// Set when fewer than `k` independent directions were found.
    pub rank_deficient: bool,
}

/// Joint QR of `k` tensors over a shared tree.
pub fn ht_qr(tensors: &[HtTensor]) -> Result<HtQrResult> {
    let first = tensors
        .first()
        .ok_or_else(|| HtError::InvalidParameter("ht_qr needs at least one tensor".into()))?;
    for t in &tensors[1..] {
        first.check_compatible(t, "ht_qr")?;
    }
    let k = tensors.len();
    let tree = first.tree();
    let root = tree.root();
    let mut shared: Vec<Option<NodeData>> = vec![None; tree.num_nodes()];
    // pushed[id][i]: factor carried from node id into its parent for tensor i.
    let mut pushed: Vec<Vec<Mat>> = vec![Vec::new(); tree.num_nodes()];
    let mut coeffs: Option<Mat> = None;

    for &id in tree.postorder() {
        // Stacked columns of every tensor's payload at this node.
        let (blocks, left, right): (Vec<Mat>, usize, usize) = match tree.children(id) {
            None => (
                tensors.iter().map(|t| leaf(t.node(id)).clone()).collect(),
                0,
                0,
            ),
            Some((l, r)) => {
                let rl = std::mem::take(&mut pushed[l]);
                let rr = std::mem::take(&mut pushed[r]);
                let bs: Vec<Transfer> = tensors
                    .iter()
                    .enumerate()
                    .map(|(i, t)| interior(t.node(id)).apply_children(&rl[i], &rr[i]))
                    .collect();
                let (p1, p2) = (bs[0].left(), bs[0].right());
                (bs.iter().map(Transfer::to_columns).collect(), p1, p2)
            }
        };
        let stacked = blocks[1..]
            .iter()
            .fold(blocks[0].clone(), |acc, b| acc.hstack(b));
        if id == root {
            coeffs = Some(stacked);
            continue;
        }
        let (q, rf) = householder_qr(&stacked);
        let mut offset = 0;
        for b in &blocks {
            let cols: Vec<usize> = (offset..offset + b.cols()).collect();
            pushed[id].push(rf.select_columns(&cols));
            offset += b.cols();
        }
        shared[id] = Some(match tree.children(id) {
            None => NodeData::Leaf(q),
            Some(_) => NodeData::Interior(Transfer::from_columns(left, right, &q)),
        });
    }

    let c = coeffs.expect("root visited");
    let (qc, r) = householder_qr(&c);
    let (p1, p2) = match tree.children(root) {
        Some((l, rr)) => (
            shared[l].as_ref().map_or(0, NodeData::rank),
            shared[rr].as_ref().map_or(0, NodeData::rank),
        ),
        None => (0, 0),
    };
    let q = (0..qc.cols())
        .map(|j| {
            let col = qc.select_columns(&[j]);
            let mut nodes: Vec<NodeData> = shared
                .iter()
                .map(|s| s.clone().unwrap_or(NodeData::Leaf(Mat::zeros(0, 0))))
                .collect();
            nodes[root] = match tree.children(root) {
                None => NodeData::Leaf(col),
                Some(_) => NodeData::Interior(Transfer::from_columns(p1, p2, &col)),
            };
            first.with_nodes(first.mode_sizes().to_vec(), nodes)
        })
        .collect::<Vec<_>>();
    let diag_max = (0..r.rows()).fold(0.0f64, |m, i| m.max(r[(i, i)].abs()));
    let rank_deficient = r.rows() < k || (0..r.rows()).any(|i| r[(i, i)].abs() <= 1e-12 * diag_max);
    Ok(HtQrResult {
        q,
        r,
        rank_deficient,
    })
}
