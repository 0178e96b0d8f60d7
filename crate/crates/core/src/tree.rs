//! Dimension trees: binary trees over the mode set `{1, ..., d}`.

use crate::error::{HtError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    /// Sorted, 1-based modes.
    pub modes: Vec<usize>,
    pub children: Option<(usize, usize)>,
    pub parent: Option<usize>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// A dimension tree. Node ids index into `nodes()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionTree {
    nodes: Vec<TreeNode>,
    root: usize,
    /// `leaf_of_mode[mu - 1]` is the node id of leaf `{mu}`.
    leaf_of_mode: Vec<usize>,
    /// Children before parents.
    postorder: Vec<usize>,
}

impl DimensionTree {
    /// Balanced tree: every node sends its first `ceil(|t|/2)` modes left.
    pub fn balanced(d: usize) -> Result<Self> {
        Self::build(d, |m| m.div_ceil(2))
    }

    /// Degenerate tree: `{1}` vs `{2, ..., d}`, recursively.
    pub fn linear(d: usize) -> Result<Self> {
        Self::build(d, |_| 1)
    }

    fn build(d: usize, split: impl Fn(usize) -> usize) -> Result<Self> {
        if d == 0 {
            return Err(HtError::InvalidParameter(
                "tensor order d must be >= 1".into(),
            ));
        }
        let mut nodes: Vec<TreeNode> = Vec::with_capacity(2 * d - 1);
        let mut stack = vec![((1..=d).collect::<Vec<_>>(), None::<(usize, bool)>)];
        while let Some((modes, parent)) = stack.pop() {
            let id = nodes.len();
            if let Some((p, left)) = parent {
                let c: &mut (usize, usize) =
                    nodes[p].children.as_mut().expect("parent has children");
                if left {
                    c.0 = id;
                } else {
                    c.1 = id;
                }
            }
            let children = if modes.len() > 1 { Some((0, 0)) } else { None };
            if modes.len() > 1 {
                let cut = split(modes.len());
                // Push right first so the left subtree gets the smaller ids.
                stack.push((modes[cut..].to_vec(), Some((id, false))));
                stack.push((modes[..cut].to_vec(), Some((id, true))));
            }
            nodes.push(TreeNode {
                modes,
                children,
                parent: parent.map(|(p, _)| p),
            });
        }
        Self::from_nodes(nodes)
    }

    /// Validates a node list and builds the tree. The root is the unique
    /// node without a parent; parent links must agree with child links.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        let bad = |msg: String| Err(HtError::InvalidTree(msg));
        if nodes.is_empty() {
            return bad("no nodes".into());
        }
        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 {
            return bad(format!("expected exactly one root, found {}", roots.len()));
        }
        let root = roots[0];
        let d = nodes[root].modes.len();
        if nodes[root].modes != (1..=d).collect::<Vec<_>>() {
            return bad(format!(
                "root subset {:?} is not {{1..{d}}}",
                nodes[root].modes
            ));
        }
        if nodes.len() != 2 * d - 1 {
            return bad(format!("{} nodes, expected {}", nodes.len(), 2 * d - 1));
        }
        let mut leaf_of_mode = vec![usize::MAX; d];
        for (id, node) in nodes.iter().enumerate() {
            if node.modes.is_empty() || node.modes.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("node {id} subset is empty or not strictly sorted"));
            }
            match node.children {
                None => {
                    if node.modes.len() != 1 {
                        return bad(format!("leaf {id} has subset {:?}", node.modes));
                    }
                    let mu = node.modes[0];
                    if mu == 0 || mu > d || leaf_of_mode[mu - 1] != usize::MAX {
                        return bad(format!("leaf {id} mode {mu} invalid or repeated"));
                    }
                    leaf_of_mode[mu - 1] = id;
                }
                Some((l, r)) => {
                    if l >= nodes.len() || r >= nodes.len() || l == r {
                        return bad(format!("node {id} has invalid children ({l}, {r})"));
                    }
                    if nodes[l].parent != Some(id) || nodes[r].parent != Some(id) {
                        return bad(format!("children of node {id} do not point back to it"));
                    }
                    let mut union = nodes[l].modes.clone();
                    union.extend_from_slice(&nodes[r].modes);
                    union.sort_unstable();
                    let disjoint = union.windows(2).all(|w| w[0] != w[1]);
                    if !disjoint || union != node.modes {
                        return bad(format!(
                            "children of node {id} do not partition {:?}",
                            node.modes
                        ));
                    }
                }
            }
            if let Some(p) = node.parent {
                let ok = p < nodes.len()
                    && matches!(nodes[p].children, Some((l, r)) if l == id || r == id);
                if !ok {
                    return bad(format!("node {id} has inconsistent parent {p}"));
                }
            }
        }
        if leaf_of_mode.contains(&usize::MAX) {
            return bad("not every mode has a leaf".into());
        }

        let mut postorder = Vec::with_capacity(nodes.len());
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            match nodes[id].children {
                Some((l, r)) if !expanded => {
                    stack.push((id, true));
                    stack.push((r, false));
                    stack.push((l, false));
                }
                _ => postorder.push(id),
            }
        }
        if postorder.len() != nodes.len() {
            return bad("tree is not connected".into());
        }

        Ok(Self {
            nodes,
            root,
            leaf_of_mode,
            postorder,
        })
    }

    pub fn order(&self) -> usize {
        self.leaf_of_mode.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn children(&self, id: usize) -> Option<(usize, usize)> {
        self.nodes[id].children
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.nodes[id].is_leaf()
    }

    /// Node id of the leaf `{mu}`, `mu` 1-based.
    pub fn leaf_of_mode(&self, mu: usize) -> usize {
        self.leaf_of_mode[mu - 1]
    }

    /// The 1-based mode of a leaf node.
    pub fn mode_of_leaf(&self, id: usize) -> usize {
        debug_assert!(self.is_leaf(id));
        self.nodes[id].modes[0]
    }

    /// Node ids with every child listed before its parent.
    pub fn postorder(&self) -> &[usize] {
        &self.postorder
    }

    /// Node ids with every parent listed before its children.
    pub fn preorder(&self) -> impl Iterator<Item = usize> + '_ {
        self.postorder.iter().rev().copied()
    }

    /// Leaf modes in left-to-right order.
    pub fn leaf_sequence(&self) -> Vec<usize> {
        self.postorder
            .iter()
            .filter(|&&id| self.is_leaf(id))
            .map(|&id| self.mode_of_leaf(id))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn children_modes(t: &DimensionTree, id: usize) -> (Vec<usize>, Vec<usize>) {
        let (l, r) = t.children(id).unwrap();
        (t.node(l).modes.clone(), t.node(r).modes.clone())
    }

    #[test]
    fn balanced_four() {
        let t = DimensionTree::balanced(4).unwrap();
        assert_eq!(t.node(t.root()).modes, vec![1, 2, 3, 4]);
        assert_eq!(children_modes(&t, t.root()), (vec![1, 2], vec![3, 4]));
        let leaves: Vec<_> = (0..t.num_nodes()).filter(|&i| t.is_leaf(i)).collect();
        assert_eq!(leaves.len(), 4);
        assert_eq!(t.leaf_sequence(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn balanced_five_puts_three_left() {
        let t = DimensionTree::balanced(5).unwrap();
        assert_eq!(children_modes(&t, t.root()), (vec![1, 2, 3], vec![4, 5]));
        let (l, _) = t.children(t.root()).unwrap();
        assert_eq!(children_modes(&t, l), (vec![1, 2], vec![3]));
    }

    #[test]
    fn single_mode_tree() {
        let t = DimensionTree::balanced(1).unwrap();
        assert_eq!(t.num_nodes(), 1);
        assert!(t.is_leaf(t.root()));
        assert_eq!(t.leaf_of_mode(1), t.root());
    }

    #[test]
    fn linear_four() {
        let t = DimensionTree::linear(4).unwrap();
        let mut id = t.root();
        let mut seen = vec![];
        while let Some((l, r)) = t.children(id) {
            seen.push((t.node(l).modes.clone(), t.node(r).modes.clone()));
            id = r;
        }
        assert_eq!(
            seen,
            vec![
                (vec![1], vec![2, 3, 4]),
                (vec![2], vec![3, 4]),
                (vec![3], vec![4])
            ]
        );
    }

    #[test]
    fn linear_three_and_two() {
        let t = DimensionTree::linear(3).unwrap();
        assert_eq!(children_modes(&t, t.root()), (vec![1], vec![2, 3]));
        assert_eq!(
            DimensionTree::linear(2).unwrap(),
            DimensionTree::balanced(2).unwrap()
        );
    }

    #[test]
    fn zero_order_rejected() {
        assert!(DimensionTree::balanced(0).is_err());
        assert!(DimensionTree::linear(0).is_err());
    }

    #[test]
    fn well_formedness_holds_for_many_orders() {
        for d in 1..20 {
            for t in [
                DimensionTree::balanced(d).unwrap(),
                DimensionTree::linear(d).unwrap(),
            ] {
                assert_eq!(t.num_nodes(), 2 * d - 1);
                let leaves = (0..t.num_nodes()).filter(|&i| t.is_leaf(i)).count();
                assert_eq!(leaves, d);
                assert_eq!(t.postorder().last(), Some(&t.root()));
                // Revalidate through the checked constructor.
                DimensionTree::from_nodes(t.nodes().to_vec()).unwrap();
            }
        }
    }

    #[test]
    fn overlapping_children_rejected() {
        let nodes = vec![
            TreeNode {
                modes: vec![1, 2],
                children: Some((1, 2)),
                parent: None,
            },
            TreeNode {
                modes: vec![1],
                children: None,
                parent: Some(0),
            },
            TreeNode {
                modes: vec![1],
                children: None,
                parent: Some(0),
            },
        ];
        assert!(matches!(
            DimensionTree::from_nodes(nodes),
            Err(HtError::InvalidTree(_))
        ));
    }
}
