//! HSVD truncation: orthogonalize toward the root, then project every node
//! onto the leading singular vectors of its matricization.

use super::orth::{orthogonalize, root_norm};
use super::{interior, leaf, norm};
use crate::error::{HtError, Result};
use crate::linalg::{qr_r, svd_right, Mat};
use crate::tensor::{HtTensor, NodeData};

/// Rank bound per node id, or one bound for all nodes. The root is always
/// kept at rank 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RankTarget {
    Uniform(usize),
    PerNode(Vec<usize>),
}

impl RankTarget {
    fn for_node(&self, id: usize) -> usize {
        match self {
            RankTarget::Uniform(r) => *r,
            RankTarget::PerNode(v) => v[id],
        }
    }

    fn validate(&self, num_nodes: usize) -> Result<()> {
        match self {
            RankTarget::Uniform(0) => {
                Err(HtError::InvalidParameter("target rank must be >= 1".into()))
            }
            RankTarget::Uniform(_) => Ok(()),
            RankTarget::PerNode(v) if v.len() != num_nodes => Err(HtError::InvalidParameter(
                format!("{} target ranks for {num_nodes} nodes", v.len()),
            )),
            RankTarget::PerNode(v) if v.contains(&0) => Err(HtError::InvalidParameter(
                "target ranks must be >= 1".into(),
            )),
            RankTarget::PerNode(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    /// Rank per node id after truncation.
    pub ranks: Vec<usize>,
    /// Sum of squared discarded singular values per node id (0 at the root).
    pub discarded: Vec<f64>,
    /// Error estimate relative to `norm`; the two root children share one
    /// spectrum and are counted once.
    pub rel_error: f64,
    /// Norm of the input.
    pub norm: f64,
}

impl TruncationReport {
    fn lossless(x: &HtTensor, norm: f64) -> Self {
        Self {
            ranks: x.ranks(),
            discarded: vec![0.0; x.tree().num_nodes()],
            rel_error: 0.0,
            norm,
        }
    }
}

/// Factors `S_t` with `S_tᵀ S_t` the Gram matrix of the complementary frame
/// at `t`, for a tensor with orthonormal non-root frames. Each factor has
/// `r_t` columns and at most `r_t` rows.
pub(crate) fn complement_factors(y: &HtTensor) -> Vec<Mat> {
    let tree = y.tree();
    let mut factors = vec![Mat::zeros(0, 0); tree.num_nodes()];
    factors[tree.root()] = Mat::identity(1);
    for id in tree.preorder() {
        let Some((l, r)) = tree.children(id) else {
            continue;
        };
        let b = interior(y.node(id));
        let (r1, r2) = (b.left(), b.right());
        let t = factors[id].matmul(&b.to_rows());
        let m = t.rows();
        let s1 = Mat::from_fn(m * r2, r1, |row, k1| t[(row / r2, k1 * r2 + row % r2)]);
        let s2 = Mat::from_fn(m * r1, r2, |row, k2| t[(row / r1, (row % r1) * r2 + k2)]);
        factors[l] = compress(s1);
        factors[r] = compress(s2);
    }
    factors
}

fn compress(s: Mat) -> Mat {
    if s.rows() > s.cols() {
        qr_r(&s)
    } else {
        s
    }
}

enum Rule<'a> {
    Ranks(&'a RankTarget),
    Tolerance(f64),
}

/// `orthogonal` promises that every non-root frame of `x` is orthonormal.
fn hsvd(x: &HtTensor, rule: Rule<'_>, orthogonal: bool) -> (HtTensor, TruncationReport) {
    let tree = x.tree();
    let root = tree.root();
    let y = if orthogonal {
        x.clone()
    } else {
        orthogonalize(x)
    };
    let nrm = root_norm(&y);
    let factors = complement_factors(&y);
    let counted = (2 * x.order()).saturating_sub(3).max(1) as f64;

    let mut bases: Vec<Option<Mat>> = vec![None; tree.num_nodes()];
    let mut discarded = vec![0.0; tree.num_nodes()];
    for id in 0..tree.num_nodes() {
        if id == root {
            continue;
        }
        let (sigma, v) = svd_right(&factors[id]);
        let energy: Vec<f64> = sigma.iter().map(|s| s * s).collect();
        let current = energy.len();
        let keep = match rule {
            Rule::Ranks(target) => target.for_node(id).min(current),
            Rule::Tolerance(eps) => {
                let budget = eps * eps * nrm * nrm / counted;
                let mut tail = 0.0;
                let mut keep = current;
                while keep > 1 && tail + energy[keep - 1] <= budget {
                    tail += energy[keep - 1];
                    keep -= 1;
                }
                keep
            }
        };
        discarded[id] = energy[keep..].iter().sum();
        bases[id] = Some(v.leading_columns(keep));
    }

    let mut nodes = Vec::with_capacity(tree.num_nodes());
    for id in 0..tree.num_nodes() {
        let data = match tree.children(id) {
            None if id == root => y.node(id).clone(),
            None => NodeData::Leaf(leaf(y.node(id)).matmul(bases[id].as_ref().expect("basis"))),
            Some((l, r)) => {
                let wl = bases[l].as_ref().expect("basis").transpose();
                let wr = bases[r].as_ref().expect("basis").transpose();
                let b = interior(y.node(id)).apply_children(&wl, &wr);
                match &bases[id] {
                    Some(w) => NodeData::Interior(b.apply_parent(&w.transpose())),
                    None => NodeData::Interior(b),
                }
            }
        };
        nodes.push(data);
    }
    let out = y.with_nodes(y.mode_sizes().to_vec(), nodes);

    let total = match tree.children(root) {
        Some((l, r)) => {
            let pair = discarded[l].max(discarded[r]);
            pair + discarded
                .iter()
                .enumerate()
                .filter(|&(id, _)| id != l && id != r)
                .map(|(_, e)| e)
                .sum::<f64>()
        }
        None => 0.0,
    };
    let rel_error = if nrm > 0.0 { total.sqrt() / nrm } else { 0.0 };
    let report = TruncationReport {
        ranks: out.ranks(),
        discarded,
        rel_error,
        norm: nrm,
    };
    (out, report)
}

/// Truncates to prescribed ranks. Inputs already within the targets come
/// back unchanged with a zero error estimate.
pub fn truncate(x: &HtTensor, target: &RankTarget) -> Result<(HtTensor, TruncationReport)> {
    let tree = x.tree();
    target.validate(tree.num_nodes())?;
    let within =
        (0..tree.num_nodes()).all(|id| id == tree.root() || x.rank(id) <= target.for_node(id));
    if within {
        return Ok((x.clone(), TruncationReport::lossless(x, norm(x))));
    }
    Ok(hsvd(x, Rule::Ranks(target), false))
}

/// Truncates to the smallest ranks whose error estimate stays within
/// `eps` relative to the norm of `x`.
pub fn truncate_eps(x: &HtTensor, eps: f64) -> Result<(HtTensor, TruncationReport)> {
    check_eps(eps)?;
    Ok(hsvd(x, Rule::Tolerance(eps), false))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(HtError::InvalidParameter(format!(
            "tolerance must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}

/// [`truncate`] for a tensor whose non-root frames are already orthonormal,
/// such as the output of `hadamard_compressed`.
pub(crate) fn truncate_orthogonal(
    y: &HtTensor,
    target: &RankTarget,
) -> Result<(HtTensor, TruncationReport)> {
    let tree = y.tree();
    target.validate(tree.num_nodes())?;
    let within =
        (0..tree.num_nodes()).all(|id| id == tree.root() || y.rank(id) <= target.for_node(id));
    if within {
        return Ok((y.clone(), TruncationReport::lossless(y, root_norm(y))));
    }
    Ok(hsvd(y, Rule::Ranks(target), true))
}

/// [`truncate_eps`] for a tensor whose non-root frames are already
/// orthonormal.
pub(crate) fn truncate_eps_orthogonal(
    y: &HtTensor,
    eps: f64,
) -> Result<(HtTensor, TruncationReport)> {
    check_eps(eps)?;
    Ok(hsvd(y, Rule::Tolerance(eps), true))
}
