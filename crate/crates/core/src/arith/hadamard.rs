//! Entrywise products.

use super::{interior, leaf};
use crate::error::Result;
use crate::linalg::{householder_qr, Mat};
use crate::tensor::{HtTensor, NodeData, Transfer};

/// Row-wise Kronecker product: column `k * ry + l` is `ux[:,k] * uy[:,l]`.
fn face_split(ux: &Mat, uy: &Mat) -> Mat {
    let (rx, ry) = (ux.cols(), uy.cols());
    Mat::from_fn(ux.rows(), rx * ry, |i, c| ux[(i, c / ry)] * uy[(i, c % ry)])
}

/// `x ∘ y` with ranks multiplied at every node.
pub fn hadamard(x: &HtTensor, y: &HtTensor) -> Result<HtTensor> {
    x.check_compatible(y, "hadamard")?;
    let nodes = (0..x.tree().num_nodes())
        .map(|id| match (x.node(id), y.node(id)) {
            (NodeData::Leaf(ux), NodeData::Leaf(uy)) => NodeData::Leaf(face_split(ux, uy)),
            (NodeData::Interior(bx), NodeData::Interior(by)) => {
                let (ry, r1y, r2y) = (by.rank(), by.left(), by.right());
                let mut b = Transfer::zeros(bx.rank() * ry, bx.left() * r1y, bx.right() * r2y);
                for k in 0..bx.rank() {
                    for l in 0..ry {
                        for k1 in 0..bx.left() {
                            for k2 in 0..bx.right() {
                                let v = bx.get(k, k1, k2);
                                if v == 0.0 {
                                    continue;
                                }
                                for l1 in 0..r1y {
                                    for l2 in 0..r2y {
                                        b.set(
                                            k * ry + l,
                                            k1 * r1y + l1,
                                            k2 * r2y + l2,
                                            v * by.get(l, l1, l2),
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                NodeData::Interior(b)
            }
            _ => unreachable!("compatible tensors share node kinds"),
        })
        .collect();
    Ok(x.with_nodes(x.mode_sizes().to_vec(), nodes))
}

/// `x ∘ y`, orthogonalized while it is assembled: the product transfer
/// tensors are never formed, and ranks are capped by the frame dimensions
/// seen from the leaves. Represents the same tensor as [`hadamard`].
pub fn hadamard_compressed(x: &HtTensor, y: &HtTensor) -> Result<HtTensor> {
    x.check_compatible(y, "hadamard")?;
    let tree = x.tree();
    let root = tree.root();
    let mut nodes: Vec<Option<NodeData>> = vec![None; tree.num_nodes()];
    let mut pushed: Vec<Option<Mat>> = vec![None; tree.num_nodes()];
    for &id in tree.postorder() {
        let Some((l, r)) = tree.children(id) else {
            let w = face_split(leaf(x.node(id)), leaf(y.node(id)));
            if id == root {
                nodes[id] = Some(NodeData::Leaf(w));
            } else {
                let (q, rf) = householder_qr(&w);
                nodes[id] = Some(NodeData::Leaf(q));
                pushed[id] = Some(rf);
            }
            continue;
        };
        let r1 = pushed[l].take().expect("child factor");
        let r2 = pushed[r].take().expect("child factor");
        let c = contract_product(interior(x.node(id)), interior(y.node(id)), &r1, &r2);
        let (p1, p2) = (r1.rows(), r2.rows());
        if id == root {
            nodes[id] = Some(NodeData::Interior(Transfer::from_columns(p1, p2, &c)));
        } else {
            let (q, rf) = householder_qr(&c);
            nodes[id] = Some(NodeData::Interior(Transfer::from_columns(p1, p2, &q)));
            pushed[id] = Some(rf);
        }
    }
    let nodes = nodes
        .into_iter()
        .map(|n| n.expect("every node visited"))
        .collect();
    Ok(x.with_nodes(x.mode_sizes().to_vec(), nodes))
}

/// Columns `(k*ry + l)` of the matrix with rows `(j1*p2 + j2)`:
/// `sum r1[j1, k1*r1y+l1] bx[k,k1,k2] by[l,l1,l2] r2[j2, k2*r2y+l2]`.
fn contract_product(bx: &Transfer, by: &Transfer, r1: &Mat, r2: &Mat) -> Mat {
    let (rx, r1x, r2x) = (bx.rank(), bx.left(), bx.right());
    let (ry, r1y, r2y) = (by.rank(), by.left(), by.right());
    let (p1, p2) = (r1.rows(), r2.rows());
    // r1p[(j1, l1), k1]
    let r1p = Mat::from_fn(p1 * r1y, r1x, |row, k1| {
        r1[(row / r1y, k1 * r1y + row % r1y)]
    });
    // mby[l1, (l, l2)]
    let mby = Mat::from_fn(r1y, ry * r2y, |l1, c| by.get(c / r2y, l1, c % r2y));
    let r2t = r2.transpose();
    let mut out = Mat::zeros(p1 * p2, rx * ry);
    for k in 0..rx {
        // pk[(j1, l1), k2]
        let pk = r1p.matmul(&bx.slice(k));
        for j1 in 0..p1 {
            let block = Mat::from_fn(r1y, r2x, |l1, k2| pk[(j1 * r1y + l1, k2)]);
            // qm[k2, (l, l2)]
            let qm = block.tr_matmul(&mby);
            // v[l, (k2, l2)]
            let v = Mat::from_fn(ry, r2x * r2y, |l, c| qm[(c / r2y, l * r2y + c % r2y)]);
            let vals = v.matmul(&r2t);
            for l in 0..ry {
                for j2 in 0..p2 {
                    out[(j1 * p2 + j2, k * ry + l)] = vals[(l, j2)];
                }
            }
        }
    }
    out
}
