//! The HT tensor data structure and entry evaluation.

use std::fmt;
use std::sync::Arc;

use crate::error::{HtError, Result};
use crate::linalg::Mat;
use crate::tree::DimensionTree;

/// A 1-based multi-index `(i_1, ..., i_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    /// Converts 0-based positions to a 1-based multi-index.
    pub fn from_zero_based(indices: &[usize]) -> Self {
        Self(indices.iter().map(|i| i + 1).collect())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn check(&self, mode_sizes: &[usize]) -> Result<()> {
        let ok = self.0.len() == mode_sizes.len()
            && self
                .0
                .iter()
                .zip(mode_sizes)
                .all(|(&i, &n)| i >= 1 && i <= n);
        if ok {
            Ok(())
        } else {
            Err(HtError::IndexOutOfRange {
                index: self.0.clone(),
                mode_sizes: mode_sizes.to_vec(),
            })
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// Transfer tensor of shape `rank x left x right`, stored row-major in the
/// index order `[k, k1, k2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    rank: usize,
    left: usize,
    right: usize,
    data: Vec<f64>,
}

impl Transfer {
    pub fn zeros(rank: usize, left: usize, right: usize) -> Self {
        Self {
            rank,
            left,
            right,
            data: vec![0.0; rank * left * right],
        }
    }

    pub fn from_vec(rank: usize, left: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rank * left * right {
            return Err(HtError::InvalidTensor(format!(
                "transfer tensor {rank}x{left}x{right} needs {} values, got {}",
                rank * left * right,
                data.len()
            )));
        }
        Ok(Self {
            rank,
            left,
            right,
            data,
        })
    }

    /// Builds from a `rank x (left*right)` matrix (row `k` is the slice `b[k,:,:]`).
    pub fn from_rows(left: usize, right: usize, m: Mat) -> Self {
        assert_eq!(m.cols(), left * right);
        Self {
            rank: m.rows(),
            left,
            right,
            data: m.into_vec(),
        }
    }

    /// Builds from a `(left*right) x rank` matrix, the transpose of `from_rows`.
    pub fn from_columns(left: usize, right: usize, m: &Mat) -> Self {
        Self::from_rows(left, right, m.transpose())
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn left(&self) -> usize {
        self.left
    }

    #[inline]
    pub fn right(&self) -> usize {
        self.right
    }

    #[inline]
    pub fn get(&self, k: usize, k1: usize, k2: usize) -> f64 {
        self.data[(k * self.left + k1) * self.right + k2]
    }

    #[inline]
    pub fn set(&mut self, k: usize, k1: usize, k2: usize, v: f64) {
        self.data[(k * self.left + k1) * self.right + k2] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The slice `b[k, :, :]` as a `left x right` matrix.
    pub fn slice(&self, k: usize) -> Mat {
        let len = self.left * self.right;
        Mat::from_vec(
            self.left,
            self.right,
            self.data[k * len..(k + 1) * len].to_vec(),
        )
    }

    #[inline]
    pub fn slice_data(&self, k: usize) -> &[f64] {
        let len = self.left * self.right;
        &self.data[k * len..(k + 1) * len]
    }

    /// `rank x (left*right)` view as an owned matrix.
    pub fn to_rows(&self) -> Mat {
        Mat::from_vec(self.rank, self.left * self.right, self.data.clone())
    }

    /// `(left*right) x rank`: each column is one flattened slice.
    pub fn to_columns(&self) -> Mat {
        self.to_rows().transpose()
    }

    /// `b'[k, j1, j2] = sum b[k, k1, k2] * l[j1, k1] * r[j2, k2]`, i.e. the
    /// children's frames change from `U` to `U * lᵀ`-compatible bases.
    /// `l` is `new_left x left`, `r` is `new_right x right`.
    pub fn apply_children(&self, l: &Mat, r: &Mat) -> Transfer {
        assert_eq!(l.cols(), self.left);
        assert_eq!(r.cols(), self.right);
        let (nl, nr) = (l.rows(), r.rows());
        let rt = r.transpose();
        let mut out = Transfer::zeros(self.rank, nl, nr);
        for k in 0..self.rank {
            // l * B_k * rᵀ
            let tmp = l.matmul(&self.slice(k)).matmul(&rt);
            out.data[k * nl * nr..(k + 1) * nl * nr].copy_from_slice(tmp.as_slice());
        }
        out
    }

    /// `b'[j, k1, k2] = sum_k m[j, k] * b[k, k1, k2]` with `m` of shape `new_rank x rank`.
    pub fn apply_parent(&self, m: &Mat) -> Transfer {
        assert_eq!(m.cols(), self.rank);
        let rows = m.matmul(&self.to_rows());
        Transfer::from_rows(self.left, self.right, rows)
    }
}

/// Per-node payload of an HT tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeData {
    /// `n_mu x r_mu` frame.
    Leaf(Mat),
    Interior(Transfer),
}

impl NodeData {
    pub fn rank(&self) -> usize {
        match self {
            NodeData::Leaf(u) => u.cols(),
            NodeData::Interior(b) => b.rank(),
        }
    }
}

/// A tensor in Hierarchical Tucker representation. Values are immutable after
/// construction; all operations return new tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct HtTensor {
    tree: Arc<DimensionTree>,
    mode_sizes: Vec<usize>,
    nodes: Vec<NodeData>,
}

impl HtTensor {
    /// Assembles and validates a representation. `nodes[id]` must be a leaf
    /// frame for leaves and a transfer tensor for interior nodes.
    pub fn new(
        tree: Arc<DimensionTree>,
        mode_sizes: Vec<usize>,
        nodes: Vec<NodeData>,
    ) -> Result<Self> {
        let t = Self {
            tree,
            mode_sizes,
            nodes,
        };
        t.validate_structure()?;
        if let Some(id) = t.nodes.iter().position(b_is_nonfinite) {
            return Err(HtError::InvalidTensor(format!(
                "node {id} holds non-finite values"
            )));
        }
        Ok(t)
    }

    pub(crate) fn new_unchecked(
        tree: Arc<DimensionTree>,
        mode_sizes: Vec<usize>,
        nodes: Vec<NodeData>,
    ) -> Self {
        let t = Self {
            tree,
            mode_sizes,
            nodes,
        };
        debug_assert!(
            t.validate_structure().is_ok(),
            "{:?}",
            t.validate_structure()
        );
        t
    }

    fn validate_structure(&self) -> Result<()> {
        let tree = &self.tree;
        let bad = |m: String| Err(HtError::InvalidTensor(m));
        if self.mode_sizes.len() != tree.order() {
            return bad(format!(
                "{} mode sizes for a tree of order {}",
                self.mode_sizes.len(),
                tree.order()
            ));
        }
        if self.mode_sizes.contains(&0) {
            return bad("mode sizes must be positive".into());
        }
        if self.nodes.len() != tree.num_nodes() {
            return bad(format!(
                "{} node payloads for {} tree nodes",
                self.nodes.len(),
                tree.num_nodes()
            ));
        }
        for id in 0..tree.num_nodes() {
            let r = self.nodes[id].rank();
            if r == 0 {
                return bad(format!("node {id} has rank 0"));
            }
            match (&self.nodes[id], tree.children(id)) {
                (NodeData::Leaf(u), None) => {
                    let n = self.mode_sizes[tree.mode_of_leaf(id) - 1];
                    if u.rows() != n {
                        return bad(format!(
                            "leaf {id} frame has {} rows, mode size {n}",
                            u.rows()
                        ));
                    }
                }
                (NodeData::Interior(b), Some((l, rr))) => {
                    if b.left() != self.nodes[l].rank() || b.right() != self.nodes[rr].rank() {
                        return bad(format!(
                            "transfer tensor at node {id} is {}x{}x{}, children ranks {} and {}",
                            b.rank(),
                            b.left(),
                            b.right(),
                            self.nodes[l].rank(),
                            self.nodes[rr].rank()
                        ));
                    }
                }
                _ => return bad(format!("node {id} payload does not match tree structure")),
            }
        }
        if self.nodes[tree.root()].rank() != 1 {
            return bad(format!(
                "root rank is {}, must be 1",
                self.nodes[tree.root()].rank()
            ));
        }
        Ok(())
    }

    pub fn tree(&self) -> &DimensionTree {
        &self.tree
    }

    pub fn tree_arc(&self) -> &Arc<DimensionTree> {
        &self.tree
    }

    pub fn order(&self) -> usize {
        self.mode_sizes.len()
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn nodes(&self) -> &[NodeData] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &NodeData {
        &self.nodes[id]
    }

    /// Representation rank per node id.
    pub fn ranks(&self) -> Vec<usize> {
        self.nodes.iter().map(NodeData::rank).collect()
    }

    pub fn rank(&self, id: usize) -> usize {
        self.nodes[id].rank()
    }

    pub fn max_rank(&self) -> usize {
        self.nodes.iter().map(NodeData::rank).max().unwrap_or(1)
    }

    pub fn is_elementary(&self) -> bool {
        self.nodes.iter().all(|n| n.rank() == 1)
    }

    /// Leaf frame of mode `mu` (1-based).
    pub fn frame(&self, mu: usize) -> &Mat {
        match &self.nodes[self.tree.leaf_of_mode(mu)] {
            NodeData::Leaf(u) => u,
            NodeData::Interior(_) => unreachable!("leaf payload"),
        }
    }

    pub fn transfer(&self, id: usize) -> Option<&Transfer> {
        match &self.nodes[id] {
            NodeData::Interior(b) => Some(b),
            NodeData::Leaf(_) => None,
        }
    }

    /// Total number of stored reals.
    pub fn storage_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                NodeData::Leaf(u) => u.rows() * u.cols(),
                NodeData::Interior(b) => b.as_slice().len(),
            })
            .sum()
    }

    /// Number of entries `prod n_mu` (saturating).
    pub fn num_entries(&self) -> u128 {
        self.mode_sizes
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    /// Evaluates `a[i]` by the leaves-to-root recursion, O(d r^3).
    pub fn entry(&self, index: &MultiIndex) -> Result<f64> {
        index.check(&self.mode_sizes)?;
        Ok(self.entry_zero_based(&index.0.iter().map(|i| i - 1).collect::<Vec<_>>()))
    }

    /// Unchecked evaluation with 0-based positions.
    pub(crate) fn entry_zero_based(&self, idx: &[usize]) -> f64 {
        let tree = &self.tree;
        let mut vecs: Vec<Vec<f64>> = vec![Vec::new(); tree.num_nodes()];
        for &id in tree.postorder() {
            vecs[id] = match &self.nodes[id] {
                NodeData::Leaf(u) => u.row(idx[tree.mode_of_leaf(id) - 1]).to_vec(),
                NodeData::Interior(b) => {
                    let (l, r) = tree.children(id).expect("interior");
                    let (vl, vr) = (&vecs[l], &vecs[r]);
                    (0..b.rank())
                        .map(|k| {
                            let s = b.slice_data(k);
                            let mut acc = 0.0;
                            for (k1, &x) in vl.iter().enumerate() {
                                if x == 0.0 {
                                    continue;
                                }
                                let row = &s[k1 * b.right()..(k1 + 1) * b.right()];
                                acc += x * row.iter().zip(vr).map(|(p, q)| p * q).sum::<f64>();
                            }
                            acc
                        })
                        .collect()
                }
            };
        }
        vecs[tree.root()][0]
    }

    /// Replaces node payloads, keeping tree and sizes; used by arithmetic.
    pub(crate) fn with_nodes(&self, mode_sizes: Vec<usize>, nodes: Vec<NodeData>) -> Self {
        Self::new_unchecked(self.tree.clone(), mode_sizes, nodes)
    }

    /// True when every stored value is finite.
    pub fn is_finite(&self) -> bool {
        !self.nodes.iter().any(b_is_nonfinite)
    }

    /// Same mode sizes and structurally identical trees.
    pub fn same_structure(&self, other: &HtTensor) -> bool {
        self.mode_sizes == other.mode_sizes
            && (Arc::ptr_eq(&self.tree, &other.tree) || *self.tree == *other.tree)
    }

    pub(crate) fn check_compatible(&self, other: &HtTensor, op: &str) -> Result<()> {
        if self.same_structure(other) {
            Ok(())
        } else {
            Err(HtError::ShapeMismatch(format!(
                "{op}: mode sizes {:?} vs {:?} or trees differ",
                self.mode_sizes, other.mode_sizes
            )))
        }
    }
}

fn b_is_nonfinite(n: &NodeData) -> bool {
    match n {
        NodeData::Leaf(u) => u.as_slice().iter().any(|x| !x.is_finite()),
        NodeData::Interior(b) => b.as_slice().iter().any(|x| !x.is_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_root_rank() {
        let tree = Arc::new(DimensionTree::balanced(2).unwrap());
        let (l, r) = tree.children(tree.root()).unwrap();
        let mut nodes = vec![NodeData::Leaf(Mat::zeros(1, 1)); 3];
        nodes[l] = NodeData::Leaf(Mat::from_vec(2, 1, vec![1.0, 2.0]));
        nodes[r] = NodeData::Leaf(Mat::from_vec(2, 1, vec![3.0, 4.0]));
        nodes[tree.root()] =
            NodeData::Interior(Transfer::from_vec(2, 1, 1, vec![1.0, 1.0]).unwrap());
        let err = HtTensor::new(tree, vec![2, 2], nodes).unwrap_err();
        assert!(matches!(err, HtError::InvalidTensor(_)));
    }

    #[test]
    fn rejects_frame_shape_mismatch() {
        let tree = Arc::new(DimensionTree::balanced(2).unwrap());
        let (l, r) = tree.children(tree.root()).unwrap();
        let mut nodes = vec![NodeData::Leaf(Mat::zeros(1, 1)); 3];
        nodes[l] = NodeData::Leaf(Mat::from_vec(2, 1, vec![1.0, 2.0]));
        nodes[r] = NodeData::Leaf(Mat::from_vec(3, 1, vec![3.0, 4.0, 5.0]));
        nodes[tree.root()] = NodeData::Interior(Transfer::from_vec(1, 1, 1, vec![1.0]).unwrap());
        assert!(HtTensor::new(tree, vec![2, 2], nodes).is_err());
    }

    #[test]
    fn out_of_range_index() {
        let tree = Arc::new(DimensionTree::balanced(1).unwrap());
        let a = HtTensor::new(
            tree,
            vec![2],
            vec![NodeData::Leaf(Mat::from_vec(2, 1, vec![1.0, -1.0]))],
        )
        .unwrap();
        assert_eq!(a.entry(&MultiIndex::new(vec![2])).unwrap(), -1.0);
        assert!(matches!(
            a.entry(&MultiIndex::new(vec![3])),
            Err(HtError::IndexOutOfRange { .. })
        ));
        assert!(a.entry(&MultiIndex::new(vec![0])).is_err());
        assert!(a.entry(&MultiIndex::new(vec![1, 1])).is_err());
    }

    #[test]
    fn transfer_child_update_matches_definition() {
        let b = Transfer::from_vec(2, 2, 3, (0..12).map(|x| x as f64).collect()).unwrap();
        let l = Mat::from_vec(1, 2, vec![1.0, -1.0]);
        let r = Mat::from_vec(2, 3, vec![1.0, 0.0, 2.0, 0.0, 1.0, 0.0]);
        let out = b.apply_children(&l, &r);
        for k in 0..2 {
            for j1 in 0..1 {
                for j2 in 0..2 {
                    let mut want = 0.0;
                    for k1 in 0..2 {
                        for k2 in 0..3 {
                            want += b.get(k, k1, k2) * l[(j1, k1)] * r[(j2, k2)];
                        }
                    }
                    assert_eq!(out.get(k, j1, j2), want);
                }
            }
        }
    }
}
