//! Exact HT arithmetic. Nothing here densifies.

mod hadamard;
mod orth;
mod truncate;

pub use hadamard::{hadamard, hadamard_compressed};
pub(crate) use orth::root_norm;
pub use orth::{distance, ht_qr, orthogonalize, stable_norm, HtQrResult};
pub use truncate::{truncate, truncate_eps, RankTarget, TruncationReport};
pub(crate) use truncate::{truncate_eps_orthogonal, truncate_orthogonal};

use crate::error::{HtError, Result};
use crate::linalg::Mat;
use crate::tensor::{HtTensor, NodeData, Transfer};

pub(crate) fn leaf(n: &NodeData) -> &Mat {
    match n {
        NodeData::Leaf(u) => u,
        NodeData::Interior(_) => unreachable!("expected a leaf payload"),
    }
}

pub(crate) fn interior(n: &NodeData) -> &Transfer {
    match n {
        NodeData::Interior(b) => b,
        NodeData::Leaf(_) => unreachable!("expected a transfer payload"),
    }
}

/// `M[k, l] = sum bx[k,k1,k2] m1[k1,l1] m2[k2,l2] by[l,l1,l2]`.
pub(crate) fn node_gram(bx: &Transfer, by: &Transfer, m1: &Mat, m2: &Mat) -> Mat {
    let t = by.apply_children(m1, m2);
    bx.to_rows().matmul(&t.to_rows().transpose())
}

/// Euclidean inner product, contracted leaves to root.
pub fn dot(x: &HtTensor, y: &HtTensor) -> Result<f64> {
    x.check_compatible(y, "dot")?;
    let tree = x.tree();
    let mut grams: Vec<Option<Mat>> = vec![None; tree.num_nodes()];
    for &id in tree.postorder() {
        let g = match tree.children(id) {
            None => leaf(x.node(id)).tr_matmul(leaf(y.node(id))),
            Some((l, r)) => {
                let m1 = grams[l].take().expect("child gram");
                let m2 = grams[r].take().expect("child gram");
                node_gram(interior(x.node(id)), interior(y.node(id)), &m1, &m2)
            }
        };
        grams[id] = Some(g);
    }
    Ok(grams[tree.root()].as_ref().expect("root gram")[(0, 0)])
}

/// `sqrt(max(dot(x, x), 0))`. Loses relative accuracy when `x` results from
/// cancellation; [`stable_norm`] does not.
pub fn norm(x: &HtTensor) -> f64 {
    dot(x, x)
        .expect("a tensor is compatible with itself")
        .max(0.0)
        .sqrt()
}

/// Entrywise sum. Ranks add at every node except the root.
pub fn add(x: &HtTensor, y: &HtTensor) -> Result<HtTensor> {
    x.check_compatible(y, "add")?;
    let tree = x.tree();
    let root = tree.root();
    let mut nodes = Vec::with_capacity(tree.num_nodes());
    for id in 0..tree.num_nodes() {
        let data = match (x.node(id), y.node(id)) {
            (NodeData::Leaf(ux), NodeData::Leaf(uy)) => {
                if id == root {
                    let sum: Vec<f64> = ux
                        .as_slice()
                        .iter()
                        .zip(uy.as_slice())
                        .map(|(a, b)| a + b)
                        .collect();
                    NodeData::Leaf(Mat::from_vec(ux.rows(), 1, sum))
                } else {
                    NodeData::Leaf(ux.hstack(uy))
                }
            }
            (NodeData::Interior(bx), NodeData::Interior(by)) => {
                let (l, r) = (bx.left() + by.left(), bx.right() + by.right());
                let rank = if id == root { 1 } else { bx.rank() + by.rank() };
                let shift = if id == root { 0 } else { bx.rank() };
                let mut b = Transfer::zeros(rank, l, r);
                for k in 0..bx.rank() {
                    for k1 in 0..bx.left() {
                        for k2 in 0..bx.right() {
                            b.set(k, k1, k2, bx.get(k, k1, k2));
                        }
                    }
                }
                for k in 0..by.rank() {
                    for k1 in 0..by.left() {
                        for k2 in 0..by.right() {
                            b.set(
                                shift + k,
                                bx.left() + k1,
                                bx.right() + k2,
                                by.get(k, k1, k2),
                            );
                        }
                    }
                }
                NodeData::Interior(b)
            }
            _ => unreachable!("compatible tensors share node kinds"),
        };
        nodes.push(data);
    }
    Ok(x.with_nodes(x.mode_sizes().to_vec(), nodes))
}

/// `c * x`, applied to the root payload.
pub fn scale(x: &HtTensor, c: f64) -> HtTensor {
    let root = x.tree().root();
    let mut nodes = x.nodes().to_vec();
    nodes[root] = match &nodes[root] {
        NodeData::Leaf(u) => {
            let mut u = u.clone();
            u.scale_in_place(c);
            NodeData::Leaf(u)
        }
        NodeData::Interior(b) => {
            let mut rows = b.to_rows();
            rows.scale_in_place(c);
            NodeData::Interior(Transfer::from_rows(b.left(), b.right(), rows))
        }
    };
    x.with_nodes(x.mode_sizes().to_vec(), nodes)
}

/// Restriction of mode `mu` to the 0-based positions `rows` (in that order).
pub fn select_rows(x: &HtTensor, mu: usize, rows: &[usize]) -> Result<HtTensor> {
    if mu == 0 || mu > x.order() {
        return Err(HtError::InvalidParameter(format!(
            "mode {mu} outside 1..={}",
            x.order()
        )));
    }
    if rows.is_empty() {
        return Err(HtError::InvalidParameter(format!(
            "empty row selection in mode {mu}"
        )));
    }
    let n = x.mode_sizes()[mu - 1];
    if let Some(&bad) = rows.iter().find(|&&i| i >= n) {
        return Err(HtError::InvalidParameter(format!(
            "row {} outside mode {mu} of size {n}",
            bad + 1
        )));
    }
    let id = x.tree().leaf_of_mode(mu);
    let mut nodes = x.nodes().to_vec();
    nodes[id] = NodeData::Leaf(leaf(x.node(id)).select_rows(rows));
    let mut sizes = x.mode_sizes().to_vec();
    sizes[mu - 1] = rows.len();
    Ok(x.with_nodes(sizes, nodes))
}

/// Restriction of mode `mu` to the 1-based inclusive range `lo..=hi`.
pub fn slice(x: &HtTensor, mu: usize, lo: usize, hi: usize) -> Result<HtTensor> {
    if lo == 0 || lo > hi {
        return Err(HtError::InvalidParameter(format!(
            "empty or invalid range {lo}..={hi}"
        )));
    }
    let rows: Vec<usize> = (lo - 1..hi).collect();
    select_rows(x, mu, &rows)
}

/// Drops mode slices that are numerically zero. A row counts as zero when
/// its weighted frame row `U[i,:] * Sᵀ` (with `SᵀS` the complementary Gram
/// matrix) has sup-norm at most `tol` times the largest weighted entry;
/// rows that are exactly zero in `x` always go.
/// Returns the reduced tensor and, per mode, the 1-based original index of
/// every kept row.
pub fn remove_zero_rows(x: &HtTensor, tol: f64) -> Result<(HtTensor, Vec<Vec<usize>>)> {
    if !(tol >= 0.0) {
        return Err(HtError::InvalidParameter(format!(
            "tolerance must be >= 0, got {tol}"
        )));
    }
    let y = orthogonalize(x);
    let factors = truncate::complement_factors(&y);
    let mut nodes = y.nodes().to_vec();
    let mut sizes = y.mode_sizes().to_vec();
    let mut maps = Vec::with_capacity(x.order());
    for mu in 1..=x.order() {
        let id = y.tree().leaf_of_mode(mu);
        let u = y.frame(mu);
        let weighted = u.matmul(&factors[id].transpose());
        let cutoff = tol * weighted.max_abs();
        let original = x.frame(mu);
        let kept: Vec<usize> = (0..u.rows())
            .filter(|&i| original.row(i).iter().any(|&v| v != 0.0))
            .filter(|&i| weighted.row(i).iter().any(|v| v.abs() > cutoff))
            .collect();
        if kept.is_empty() {
            return Err(HtError::EmptyMode(mu));
        }
        nodes[id] = NodeData::Leaf(u.select_rows(&kept));
        sizes[mu - 1] = kept.len();
        maps.push(kept.iter().map(|i| i + 1).collect());
    }
    Ok((y.with_nodes(sizes, nodes), maps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{from_elementary, random_ht};
    use crate::tensor::MultiIndex;

    #[test]
    fn elementary_dot_is_separable() {
        let u = from_elementary(&[vec![1.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let v = from_elementary(&[vec![3.0, 4.0], vec![2.0, 2.0]]).unwrap();
        assert_eq!(dot(&u, &v).unwrap(), 44.0);
    }

    #[test]
    fn all_ones_norm() {
        let x = from_elementary(&[vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]]).unwrap();
        assert!((norm(&x) - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn add_negation_cancels() {
        let x = random_ht(3, 3, 2, 5).unwrap();
        let z = add(&x, &scale(&x, -1.0)).unwrap();
        assert!(norm(&z) <= 1e-10 * norm(&x));
        assert!(stable_norm(&z) <= 1e-14 * norm(&x));
        assert_eq!(norm(&scale(&x, 0.0)), 0.0);
    }

    #[test]
    fn add_single_mode() {
        let x = from_elementary(&[vec![1.0, -1.0]]).unwrap();
        let y = from_elementary(&[vec![2.0, 5.0]]).unwrap();
        let s = add(&x, &y).unwrap();
        assert_eq!(s.entry(&MultiIndex::new(vec![2])).unwrap(), 4.0);
        assert_eq!(s.ranks(), vec![1]);
    }

    #[test]
    fn slice_and_zero_rows() {
        let x = from_elementary(&[vec![0.0, 3.0, 0.0], vec![1.0, 2.0]]).unwrap();
        let (y, maps) = remove_zero_rows(&x, 0.0).unwrap();
        assert_eq!(y.mode_sizes(), &[1, 2]);
        assert_eq!(maps, vec![vec![2], vec![1, 2]]);
        let full = slice(&x, 2, 1, 2).unwrap();
        assert_eq!(full, x);
        assert!(slice(&x, 1, 2, 1).is_err());
        let z = scale(&x, 0.0);
        assert_eq!(
            remove_zero_rows(&z, 0.0).unwrap_err(),
            HtError::EmptyMode(1)
        );
    }
}
