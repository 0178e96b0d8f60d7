//! Dense brute-force reference. Slow by design and capped in size.

use crate::arith::{interior, leaf, select_rows};
use crate::error::{HtError, Result};
use crate::linalg::Mat;
use crate::tensor::{HtTensor, MultiIndex};

/// Densification refuses tensors with more entries than this unless a cap
/// is passed explicitly.
pub const DEFAULT_DENSE_CAP: u128 = 1_000_000;

/// Flat array in row-major order, mode 1 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    mode_sizes: Vec<usize>,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(mode_sizes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if mode_sizes.is_empty() || mode_sizes.contains(&0) {
            return Err(HtError::InvalidParameter(format!(
                "invalid mode sizes {mode_sizes:?}"
            )));
        }
        let len: usize = mode_sizes.iter().product();
        if values.len() != len {
            return Err(HtError::InvalidParameter(format!(
                "{} values for {len} entries",
                values.len()
            )));
        }
        Ok(Self { mode_sizes, values })
    }

    /// Evaluates `f` at every 1-based index.
    pub fn from_fn(mode_sizes: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len: usize = mode_sizes.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![1; mode_sizes.len()];
        for _ in 0..len {
            values.push(f(&idx));
            increment(&mut idx, &mode_sizes);
        }
        Self::new(mode_sizes, values)
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn linear_index(&self, index: &MultiIndex) -> Result<usize> {
        index.check(&self.mode_sizes)?;
        Ok(index
            .as_slice()
            .iter()
            .zip(&self.mode_sizes)
            .fold(0, |acc, (&i, &n)| acc * n + (i - 1)))
    }

    pub fn multi_index(&self, mut lin: usize) -> MultiIndex {
        let mut idx = vec![0; self.mode_sizes.len()];
        for (slot, &n) in idx.iter_mut().zip(&self.mode_sizes).rev() {
            *slot = lin % n + 1;
            lin /= n;
        }
        MultiIndex::new(idx)
    }

    pub fn get(&self, index: &MultiIndex) -> Result<f64> {
        Ok(self.values[self.linear_index(index)?])
    }

    /// Restriction of mode `mu` to the 1-based range `lo..=hi`.
    pub fn slice(&self, mu: usize, lo: usize, hi: usize) -> Result<DenseTensor> {
        if mu == 0
            || mu > self.mode_sizes.len()
            || lo == 0
            || lo > hi
            || hi > self.mode_sizes[mu - 1]
        {
            return Err(HtError::InvalidParameter(format!(
                "bad slice {lo}..={hi} of mode {mu}"
            )));
        }
        let mut sizes = self.mode_sizes.clone();
        sizes[mu - 1] = hi - lo + 1;
        DenseTensor::from_fn(sizes, |idx| {
            let mut orig = idx.to_vec();
            orig[mu - 1] += lo - 1;
            self.get(&MultiIndex::new(orig)).expect("in range")
        })
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        if self.mode_sizes != other.mode_sizes {
            return Err(HtError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.mode_sizes, other.mode_sizes
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        DenseTensor::new(self.mode_sizes.clone(), values)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        DenseTensor {
            mode_sizes: self.mode_sizes.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

fn increment(idx: &mut [usize], sizes: &[usize]) {
    for (i, &n) in idx.iter_mut().zip(sizes).rev() {
        if *i < n {
            *i += 1;
            return;
        }
        *i = 1;
    }
}

/// Materializes every entry with [`DEFAULT_DENSE_CAP`].
pub fn densify(a: &HtTensor) -> Result<DenseTensor> {
    densify_with_cap(a, DEFAULT_DENSE_CAP)
}

/// Materializes every entry by building full node frames bottom-up; shares
/// no code with per-entry evaluation.
pub fn densify_with_cap(a: &HtTensor, cap: u128) -> Result<DenseTensor> {
    let entries = a.num_entries();
    if entries > cap {
        return Err(HtError::DenseCapExceeded { entries, cap });
    }
    let tree = a.tree();
    // Full frame per node; rows follow the node's leaf order, left to right.
    let mut frames: Vec<Option<Mat>> = vec![None; tree.num_nodes()];
    for &id in tree.postorder() {
        let full = match tree.children(id) {
            None => leaf(a.node(id)).clone(),
            Some((l, r)) => {
                let ul = frames[l].take().expect("child frame");
                let ur = frames[r].take().expect("child frame");
                let b = interior(a.node(id));
                let urt = ur.transpose();
                let rows = ul.rows() * ur.rows();
                let mut full = Mat::zeros(rows, b.rank());
                for k in 0..b.rank() {
                    let block = ul.matmul(&b.slice(k)).matmul(&urt);
                    for (row, &v) in block.as_slice().iter().enumerate() {
                        full[(row, k)] = v;
                    }
                }
                full
            }
        };
        frames[id] = Some(full);
    }
    let flat = frames[tree.root()].take().expect("root frame").into_vec();
    let sequence = tree.leaf_sequence();
    let sizes = a.mode_sizes().to_vec();
    if sequence.iter().enumerate().all(|(p, &mu)| mu == p + 1) {
        return DenseTensor::new(sizes, flat);
    }
    let seq_sizes: Vec<usize> = sequence.iter().map(|&mu| sizes[mu - 1]).collect();
    DenseTensor::from_fn(sizes, |idx| {
        let lin = sequence
            .iter()
            .zip(&seq_sizes)
            .fold(0, |acc, (&mu, &n)| acc * n + (idx[mu - 1] - 1));
        flat[lin]
    })
}

/// Largest absolute entry and its index; the smallest index wins ties.
pub fn dense_maxnorm_argmax(x: &DenseTensor) -> Result<(f64, MultiIndex)> {
    let mut best: Option<(f64, usize)> = None;
    for (lin, v) in x.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(HtError::NonFinite(format!("dense entry {lin}")));
        }
        if best.is_none_or(|(m, _)| v.abs() > m) {
            best = Some((v.abs(), lin));
        }
    }
    let (m, lin) = best.ok_or_else(|| HtError::InvalidParameter("empty tensor".into()))?;
    Ok((m, x.multi_index(lin)))
}

/// `(sum |x|^p)^(1/p)`, scaled to avoid overflow; `p = ∞` gives the max-norm.
pub fn dense_pnorm(x: &DenseTensor, p: f64) -> f64 {
    let m = x.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 || p.is_infinite() {
        return m;
    }
    m * x
        .values
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

pub fn dense_hadamard(x: &DenseTensor, y: &DenseTensor) -> Result<DenseTensor> {
    x.zip_with(y, |a, b| a * b)
}

pub fn dense_dot(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    Ok(x.zip_with(y, |a, b| a * b)?.values.iter().sum())
}

/// Exact max-norm and argmax for tensors whose leaf frames repeat a few
/// distinct rows: only one representative per distinct row is densified.
/// The representative is the smallest index, so ties resolve to the
/// lexicographically smallest maximizer.
pub fn distinct_row_argmax(a: &HtTensor, cap: u128) -> Result<(f64, MultiIndex)> {
    let mut reduced = a.clone();
    let mut maps = Vec::with_capacity(a.order());
    for mu in 1..=a.order() {
        let u = a.frame(mu);
        let mut reps: Vec<usize> = Vec::new();
        for i in 0..u.rows() {
            if !reps.iter().any(|&j| u.row(j) == u.row(i)) {
                reps.push(i);
            }
        }
        reduced = select_rows(&reduced, mu, &reps)?;
        maps.push(reps);
    }
    let (m, idx) = dense_maxnorm_argmax(&densify_with_cap(&reduced, cap)?)?;
    let original = idx
        .as_slice()
        .iter()
        .zip(&maps)
        .map(|(&i, map)| map[i - 1] + 1)
        .collect();
    Ok((m, MultiIndex::new(original)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{
        cheb_grid_point, cheb_tensor, chebyshev_t4, from_elementary, random_ht,
    };

    #[test]
    fn elementary_two_by_two() {
        let a = from_elementary(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = densify(&a).unwrap();
        assert_eq!(x.values(), &[3.0, 4.0, 6.0, 8.0]);
        let (m, i) = dense_maxnorm_argmax(&x).unwrap();
        assert_eq!((m, i), (8.0, MultiIndex::new(vec![2, 2])));
    }

    #[test]
    fn cheb_grid_values() {
        let x = densify(&cheb_tensor(2, 4).unwrap()).unwrap();
        for (lin, v) in x.values().iter().enumerate() {
            let t = chebyshev_t4(cheb_grid_point(lin as f64 + 1.0, 16.0));
            assert!((v - t).abs() < 1e-12);
        }
        let (m, _) = dense_maxnorm_argmax(&densify(&cheb_tensor(2, 5).unwrap()).unwrap()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_entry_on_random() {
        let a = random_ht(3, 3, 2, 4).unwrap();
        let x = densify(&a).unwrap();
        for lin in 0..x.len() {
            let idx = x.multi_index(lin);
            assert!((x.values()[lin] - a.entry(&idx).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn custom_leaf_order_is_permuted_back() {
        use crate::tree::{DimensionTree, TreeNode};
        use std::sync::Arc;
        let nodes = vec![
            TreeNode {
                modes: vec![1, 2, 3],
                children: Some((1, 2)),
                parent: None,
            },
            TreeNode {
                modes: vec![1, 3],
                children: Some((3, 4)),
                parent: Some(0),
            },
            TreeNode {
                modes: vec![2],
                children: None,
                parent: Some(0),
            },
            TreeNode {
                modes: vec![1],
                children: None,
                parent: Some(1),
            },
            TreeNode {
                modes: vec![3],
                children: None,
                parent: Some(1),
            },
        ];
        let tree = Arc::new(DimensionTree::from_nodes(nodes).unwrap());
        let a = crate::construct::random_ht_with_tree(tree, 3, 2, 8).unwrap();
        let x = densify(&a).unwrap();
        for lin in 0..x.len() {
            let idx = x.multi_index(lin);
            assert!((x.values()[lin] - a.entry(&idx).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn cap_enforced() {
        let a = random_ht(4, 10, 2, 1).unwrap();
        assert!(matches!(
            densify_with_cap(&a, 9999),
            Err(HtError::DenseCapExceeded { .. })
        ));
    }

    #[test]
    fn pnorms() {
        let x = DenseTensor::new(vec![3], vec![3.0, -4.0, 0.0]).unwrap();
        assert!((dense_pnorm(&x, 2.0) - 5.0).abs() < 1e-15);
        assert_eq!(dense_pnorm(&x, f64::INFINITY), 4.0);
        let y = dense_hadamard(&x, &x).unwrap();
        assert!((dense_pnorm(&y, 2.0) - dense_pnorm(&x, 4.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn distinct_rows_agree_with_full_scan() {
        for seed in 0..5 {
            let a = random_ht(5, 4, 3, seed).unwrap();
            let full = dense_maxnorm_argmax(&densify(&a).unwrap()).unwrap();
            let fast = distinct_row_argmax(&a, DEFAULT_DENSE_CAP).unwrap();
            assert!((full.0 - fast.0).abs() < 1e-13);
            assert!((a.entry(&fast.1).unwrap().abs() - full.0).abs() < 1e-13);
        }
    }

    #[test]
    fn smallest_index_tie_break() {
        let x = densify(&from_elementary(&[vec![1.0; 3], vec![1.0; 2]]).unwrap()).unwrap();
        assert_eq!(
            dense_maxnorm_argmax(&x).unwrap().1,
            MultiIndex::new(vec![1, 1])
        );
    }
}
