//! JSON container: `d`, `mode_sizes`, `tree`, `ranks`, `leaf_frames` (per
//! mode, row-major) and `transfer_tensors` (per node id, `[k, k1, k2]`
//! row-major, `null` at leaves). Floats round-trip exactly.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HtError, Result};
use crate::linalg::Mat;
use crate::tensor::{HtTensor, NodeData, Transfer};
use crate::tree::{DimensionTree, TreeNode};

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    subset: Vec<usize>,
    children: Option<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Container {
    d: usize,
    mode_sizes: Vec<usize>,
    tree: Vec<NodeRecord>,
    ranks: Vec<usize>,
    leaf_frames: Vec<Vec<f64>>,
    transfer_tensors: Vec<Option<Vec<f64>>>,
}

pub fn to_json(a: &HtTensor) -> String {
    let tree = a.tree();
    let container = Container {
        d: a.order(),
        mode_sizes: a.mode_sizes().to_vec(),
        tree: tree
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| NodeRecord {
                id,
                subset: n.modes.clone(),
                children: n.children.map(|(l, r)| [l, r]),
            })
            .collect(),
        ranks: a.ranks(),
        leaf_frames: (1..=a.order())
            .map(|mu| a.frame(mu).as_slice().to_vec())
            .collect(),
        transfer_tensors: (0..tree.num_nodes())
            .map(|id| a.transfer(id).map(|b| b.as_slice().to_vec()))
            .collect(),
    };
    serde_json::to_string(&container).expect("container serializes")
}

pub fn from_json(text: &str) -> Result<HtTensor> {
    let c: Container = serde_json::from_str(text).map_err(|e| HtError::Container(e.to_string()))?;
    let bad = |m: String| Err(HtError::Container(m));
    if c.mode_sizes.len() != c.d {
        return bad(format!("d = {} but {} mode sizes", c.d, c.mode_sizes.len()));
    }
    let count = c.tree.len();
    if c.ranks.len() != count || c.transfer_tensors.len() != count {
        return bad(format!(
            "{count} tree nodes, {} ranks, {} transfer entries",
            c.ranks.len(),
            c.transfer_tensors.len()
        ));
    }
    if c.leaf_frames.len() != c.d {
        return bad(format!(
            "{} leaf frames for d = {}",
            c.leaf_frames.len(),
            c.d
        ));
    }
    let mut nodes: Vec<TreeNode> = Vec::with_capacity(count);
    for (pos, rec) in c.tree.iter().enumerate() {
        if rec.id != pos {
            return bad(format!("tree record {pos} has id {}", rec.id));
        }
        nodes.push(TreeNode {
            modes: rec.subset.clone(),
            children: rec.children.map(|[l, r]| (l, r)),
            parent: None,
        });
    }
    for id in 0..count {
        if let Some((l, r)) = nodes[id].children {
            for ch in [l, r] {
                if ch >= count || nodes[ch].parent.is_some() {
                    return bad(format!("node {id} lists invalid or shared child {ch}"));
                }
                nodes[ch].parent = Some(id);
            }
        }
    }
    let tree = Arc::new(DimensionTree::from_nodes(nodes)?);
    if tree.order() != c.d {
        return bad(format!("tree has order {}, d = {}", tree.order(), c.d));
    }
    let mut payload = Vec::with_capacity(count);
    for id in 0..count {
        let r = c.ranks[id];
        match (tree.children(id), &c.transfer_tensors[id]) {
            (None, None) => {
                let mu = tree.mode_of_leaf(id);
                let n = c.mode_sizes[mu - 1];
                let data = &c.leaf_frames[mu - 1];
                if data.len() != n * r {
                    return bad(format!(
                        "leaf frame of mode {mu} has {} values, expected {n}x{r}",
                        data.len()
                    ));
                }
                payload.push(NodeData::Leaf(Mat::from_vec(n, r, data.clone())));
            }
            (Some((l, rr)), Some(data)) => {
                let b = Transfer::from_vec(r, c.ranks[l], c.ranks[rr], data.clone())
                    .map_err(|e| HtError::Container(format!("node {id}: {e}")))?;
                payload.push(NodeData::Interior(b));
            }
            (None, Some(_)) => return bad(format!("leaf node {id} has a transfer tensor")),
            (Some(_), None) => return bad(format!("interior node {id} lacks a transfer tensor")),
        }
    }
    HtTensor::new(tree, c.mode_sizes, payload)
}

pub fn save(a: &HtTensor, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), to_json(a))
        .map_err(|e| HtError::Container(format!("writing {}: {e}", path.as_ref().display())))
}

pub fn load(path: impl AsRef<Path>) -> Result<HtTensor> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| HtError::Container(format!("reading {}: {e}", path.as_ref().display())))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{cheb_tensor, random_ht};

    #[test]
    fn round_trip_is_exact() {
        for a in [random_ht(4, 5, 3, 7).unwrap(), cheb_tensor(5, 3).unwrap()] {
            let b = from_json(&to_json(&a)).unwrap();
            assert_eq!(a, b);
            assert_eq!(to_json(&a), to_json(&b));
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = random_ht(3, 4, 2, 1).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&a)).unwrap();
        v["leaf_frames"][0].as_array_mut().unwrap().pop();
        assert!(matches!(
            from_json(&v.to_string()),
            Err(HtError::Container(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&a)).unwrap();
        v["ranks"][0] = serde_json::json!(2);
        assert!(from_json(&v.to_string()).is_err());
        assert!(from_json("{}").is_err());
    }
}
