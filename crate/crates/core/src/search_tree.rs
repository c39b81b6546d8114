//! Arena-backed search tree with UCT selection and mean-value backpropagation.
//!
//! Nodes only carry the subquery that produced them plus visit statistics. The
//! checklist and the knowledge memory are single objects owned by the search,
//! not per-node copies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::RewardBundle;
use crate::text::normalize_key;

/// Dense index into [`SearchTree::nodes`].
pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("node {0} does not exist")]
    NotFound(NodeId),
    #[error("node {parent} is at the maximum depth {max_depth}")]
    DepthExceeded { parent: NodeId, max_depth: u32 },
    #[error("node {parent} already has a child for subquery {subquery:?}")]
    DuplicateChild { parent: NodeId, subquery: String },
    #[error("no expandable node left in the tree")]
    SearchExhausted,
}

/// What the evaluation phase recorded for a materialized node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    /// Memory snippet admitted from this node, if any.
    pub snippet_id: Option<usize>,
    pub rewards: RewardBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Empty at the root, whose state is the input query itself.
    pub subquery: String,
    pub depth: u32,
    pub visits: u64,
    pub value: f64,
    /// Set once the node has been expanded (successfully or not). Expanded
    /// nodes are never expanded again.
    #[serde(default)]
    pub expanded: bool,
    #[serde(default)]
    pub evaluation: Option<EvaluationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTree {
    pub input_query: String,
    pub root: NodeId,
    pub max_depth: u32,
    pub nodes: Vec<TreeNode>,
}

/// UCT score of a child given its parent's visit count.
///
/// Unvisited nodes score `f64::INFINITY` so every materialized child gets
/// visited before any sibling is revisited.
pub fn uct_score(
    node_value: f64,
    node_visits: u64,
    parent_visits: u64,
    w: f64,
) -> Result<f64, TreeError> {
    if !(w >= 0.0 && w.is_finite()) {
        return Err(TreeError::InvalidArgument(format!(
            "exploration weight must be finite and non-negative, got {w}"
        )));
    }
    if parent_visits < node_visits {
        return Err(TreeError::InvalidArgument(format!(
            "parent visits {parent_visits} below node visits {node_visits}"
        )));
    }
    if node_visits == 0 {
        return Ok(f64::INFINITY);
    }
    let exploration = ((parent_visits as f64).ln() / node_visits as f64).sqrt();
    Ok(node_value + w * exploration)
}

impl SearchTree {
    pub fn new(input_query: &str, max_depth: u32) -> Result<Self, TreeError> {
        if input_query.trim().is_empty() {
            return Err(TreeError::InvalidArgument("input query is empty".into()));
        }
        if max_depth == 0 {
            return Err(TreeError::InvalidArgument("max_depth must be positive".into()));
        }
        Ok(Self {
            input_query: input_query.to_string(),
            root: 0,
            max_depth,
            nodes: vec![TreeNode {
                id: 0,
                parent: None,
                children: Vec::new(),
                subquery: String::new(),
                depth: 0,
                visits: 0,
                value: 0.0,
                expanded: false,
                evaluation: None,
            }],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&TreeNode, TreeError> {
        self.nodes.get(id).ok_or(TreeError::NotFound(id))
    }

    pub fn root_node(&self) -> &TreeNode {
        &self.nodes[self.root]
    }

    /// A node can be expanded if it has not been expanded yet and still has
    /// room below it.
    pub fn is_expandable(&self, id: NodeId) -> bool {
        self.nodes
            .get(id)
            .is_some_and(|n| !n.expanded && n.depth < self.max_depth)
    }

    pub fn mark_expanded(&mut self, id: NodeId) -> Result<(), TreeError> {
        let node = self.nodes.get_mut(id).ok_or(TreeError::NotFound(id))?;
        node.expanded = true;
        Ok(())
    }

    pub fn set_evaluation(&mut self, id: NodeId, record: EvaluationRecord) -> Result<(), TreeError> {
        let node = self.nodes.get_mut(id).ok_or(TreeError::NotFound(id))?;
        node.evaluation = Some(record);
        Ok(())
    }

    /// Subqueries on the path from the root down to `id`, root excluded.
    pub fn path_subqueries(&self, id: NodeId) -> Result<Vec<String>, TreeError> {
        let mut out = Vec::new();
        let mut cursor = Some(id);
        while let Some(cur) = cursor {
            let node = self.node(cur)?;
            if node.parent.is_some() {
                out.push(node.subquery.clone());
            }
            cursor = node.parent;
        }
        out.reverse();
        Ok(out)
    }

    /// Descend from the root by maximal UCT score until an expandable node
    /// is reached.
    ///
    /// Only children whose subtree still holds an expandable node are
    /// candidates, so the descent cannot strand itself in a finished branch.
    /// Ties go to the earliest created child.
    pub fn select(&self, w: f64) -> Result<NodeId, TreeError> {
        let live = self.live_subtrees();
        if !live[self.root] {
            return Err(TreeError::SearchExhausted);
        }
        let mut current = self.root;
        loop {
            if self.is_expandable(current) {
                return Ok(current);
            }
            let parent = &self.nodes[current];
            let mut best: Option<(NodeId, f64)> = None;
            for &child in &parent.children {
                if !live[child] {
                    continue;
                }
                let c = &self.nodes[child];
                let score = uct_score(c.value, c.visits, parent.visits, w)?;
                match best {
                    Some((_, s)) if score <= s => {}
                    _ => best = Some((child, score)),
                }
            }
            // live[current] guarantees a live child exists when current is not expandable
            current = best.ok_or(TreeError::SearchExhausted)?.0;
        }
    }

    /// `live[i]` is true when node i or one of its descendants is expandable.
    fn live_subtrees(&self) -> Vec<bool> {
        let mut live: Vec<bool> = (0..self.nodes.len()).map(|i| self.is_expandable(i)).collect();
        // children always have larger ids than their parent
        for id in (0..self.nodes.len()).rev() {
            if live[id] {
                if let Some(p) = self.nodes[id].parent {
                    live[p] = true;
                }
            }
        }
        live
    }

    pub fn add_child(&mut self, parent: NodeId, subquery: &str) -> Result<NodeId, TreeError> {
        if subquery.trim().is_empty() {
            return Err(TreeError::InvalidArgument("subquery is empty".into()));
        }
        let parent_node = self.node(parent)?;
        if parent_node.depth >= self.max_depth {
            return Err(TreeError::DepthExceeded {
                parent,
                max_depth: self.max_depth,
            });
        }
        let key = normalize_key(subquery);
        if parent_node
            .children
            .iter()
            .any(|&c| normalize_key(&self.nodes[c].subquery) == key)
        {
            return Err(TreeError::DuplicateChild {
                parent,
                subquery: subquery.to_string(),
            });
        }
        let id = self.nodes.len();
        let depth = parent_node.depth + 1;
        self.nodes.push(TreeNode {
            id,
            parent: Some(parent),
            children: Vec::new(),
            subquery: subquery.to_string(),
            depth,
            visits: 0,
            value: 0.0,
            expanded: false,
            evaluation: None,
        });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    /// Route `reward` from `from` up to the root, updating each node's visit
    /// count and incremental mean.
    pub fn backpropagate(&mut self, from: NodeId, reward: f64) -> Result<(), TreeError> {
        if !reward.is_finite() {
            return Err(TreeError::InvalidArgument(format!("reward {reward} is not finite")));
        }
        self.node(from)?;
        let mut cursor = Some(from);
        while let Some(id) = cursor {
            let node = &mut self.nodes[id];
            let old_visits = node.visits as f64;
            node.visits += 1;
            node.value = (node.value * old_visits + reward) / node.visits as f64;
            cursor = node.parent;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_tree_has_single_fresh_root() {
        let tree = SearchTree::new("Q", 6).unwrap();
        assert_eq!(tree.len(), 1);
        let root = tree.root_node();
        assert_eq!(root.visits, 0);
        assert_eq!(root.value, 0.0);
        assert_eq!(root.depth, 0);
        assert!(root.parent.is_none());
    }

    #[test]
    fn new_tree_rejects_empty_query() {
        assert!(matches!(SearchTree::new("", 6), Err(TreeError::InvalidArgument(_))));
        assert!(matches!(SearchTree::new("  ", 6), Err(TreeError::InvalidArgument(_))));
    }

    #[test]
    fn uct_examples() {
        assert_eq!(uct_score(0.5, 1, 1, 0.2).unwrap(), 0.5);
        // 1 + 0.2 * sqrt(ln 10 / 2), evaluated at 30 digits
        let expected = 1.214_596_602_628_934_7;
        assert!((uct_score(1.0, 2, 10, 0.2).unwrap() - expected).abs() < 1e-12);
        assert_eq!(uct_score(0.0, 0, 5, 0.2).unwrap(), f64::INFINITY);
    }

    #[test]
    fn uct_rejects_bad_arguments() {
        assert!(uct_score(0.0, 3, 2, 0.2).is_err());
        assert!(uct_score(0.0, 1, 2, -0.1).is_err());
        assert!(uct_score(0.0, 1, 2, f64::NAN).is_err());
    }

    #[test]
    fn select_fresh_tree_returns_root() {
        let tree = SearchTree::new("Q", 6).unwrap();
        assert_eq!(tree.select(0.2).unwrap(), tree.root);
    }

    #[test]
    fn select_breaks_ties_by_creation_order() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let a = tree.add_child(0, "a").unwrap();
        let b = tree.add_child(0, "b").unwrap();
        tree.mark_expanded(0).unwrap();
        tree.backpropagate(a, 0.5).unwrap();
        tree.backpropagate(b, 0.5).unwrap();
        assert_eq!(tree.select(0.2).unwrap(), a);
    }

    #[test]
    fn select_prefers_unvisited_child() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let a = tree.add_child(0, "a").unwrap();
        let b = tree.add_child(0, "b").unwrap();
        tree.mark_expanded(0).unwrap();
        tree.backpropagate(a, 2.0).unwrap();
        assert_eq!(tree.select(0.2).unwrap(), b);
    }

    #[test]
    fn select_skips_exhausted_branches() {
        let mut tree = SearchTree::new("Q", 1).unwrap();
        let a = tree.add_child(0, "a").unwrap();
        tree.mark_expanded(0).unwrap();
        tree.backpropagate(a, 2.0).unwrap();
        // a sits at max depth, nothing left
        assert_eq!(tree.select(0.2), Err(TreeError::SearchExhausted));

        let mut tree = SearchTree::new("Q", 2).unwrap();
        let a = tree.add_child(0, "a").unwrap();
        let b = tree.add_child(0, "b").unwrap();
        tree.mark_expanded(0).unwrap();
        tree.backpropagate(a, 2.0).unwrap();
        tree.backpropagate(b, 0.0).unwrap();
        tree.mark_expanded(a).unwrap(); // failed expansion, no children
        assert_eq!(tree.select(0.2).unwrap(), b);
    }

    #[test]
    fn add_child_sets_depth_and_order() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let c = tree.add_child(0, "q1").unwrap();
        let node = tree.node(c).unwrap();
        assert_eq!(node.depth, 1);
        assert_eq!(node.parent, Some(0));
        assert_eq!(node.visits, 0);
        assert_eq!(tree.root_node().children, vec![c]);
    }

    #[test]
    fn add_child_beyond_max_depth_fails() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let mut cur = 0;
        for i in 0..6 {
            cur = tree.add_child(cur, &format!("q{i}")).unwrap();
        }
        assert_eq!(tree.node(cur).unwrap().depth, 6);
        assert!(matches!(
            tree.add_child(cur, "q"),
            Err(TreeError::DepthExceeded { max_depth: 6, .. })
        ));
    }

    #[test]
    fn add_child_rejects_duplicate_siblings() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        tree.add_child(0, "q1").unwrap();
        assert!(matches!(tree.add_child(0, "q1"), Err(TreeError::DuplicateChild { .. })));
        assert!(matches!(tree.add_child(0, " Q1 "), Err(TreeError::DuplicateChild { .. })));
        assert!(matches!(tree.add_child(0, ""), Err(TreeError::InvalidArgument(_))));
        assert!(matches!(tree.add_child(9, "x"), Err(TreeError::NotFound(9))));
    }

    #[test]
    fn backpropagate_incremental_mean() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let c = tree.add_child(0, "q").unwrap();
        tree.nodes[c].visits = 2;
        tree.nodes[c].value = 0.5;
        tree.nodes[0].visits = 2;
        tree.nodes[0].value = 0.5;
        tree.backpropagate(c, 2.0).unwrap();
        assert_eq!(tree.nodes[c].visits, 3);
        assert!((tree.nodes[c].value - 1.0).abs() < 1e-15);

        let d = tree.add_child(0, "zero").unwrap();
        tree.backpropagate(d, 0.0).unwrap();
        assert_eq!(tree.nodes[d].visits, 1);
        assert_eq!(tree.nodes[d].value, 0.0);
    }

    #[test]
    fn backpropagate_unknown_node() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        assert_eq!(tree.backpropagate(4, 1.0), Err(TreeError::NotFound(4)));
        assert!(tree.backpropagate(0, f64::NAN).is_err());
    }

    #[test]
    fn path_subqueries_follow_tree() {
        let mut tree = SearchTree::new("Q", 6).unwrap();
        let a = tree.add_child(0, "a").unwrap();
        let b = tree.add_child(a, "b").unwrap();
        assert_eq!(tree.path_subqueries(b).unwrap(), vec!["a", "b"]);
        assert!(tree.path_subqueries(0).unwrap().is_empty());
    }
}
