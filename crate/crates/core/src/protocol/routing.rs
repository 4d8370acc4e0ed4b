use std::collections::BTreeMap;

use crate::orbital::NodeId;

use super::ProtocolError;

/// Aggregation tree of one plane, rooted at the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    pub plane: usize,
    pub sink: NodeId,
    parent_of: BTreeMap<NodeId, NodeId>,
    children_of: BTreeMap<NodeId, Vec<NodeId>>,
}

/// Hop count between ring positions `a` and `b` on a ring of `k` nodes.
pub fn ring_distance(a: usize, b: usize, k: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(k - d)
}

/// Every node routes over the neighbour on a hop-minimal path to the sink;
/// at the antipodal tie of an even ring the smaller-id neighbour wins.
pub fn build_routing_tree(plane: usize, ring: &[NodeId], sink: NodeId) -> Result<RoutingTree, ProtocolError> {
    let k = ring.len();
    let s = ring
        .iter()
        .position(|&n| n == sink)
        .ok_or(ProtocolError::SinkNotInPlane { sink, plane })?;
    let mut parent_of = BTreeMap::new();
    let mut children_of: BTreeMap<NodeId, Vec<NodeId>> = ring.iter().map(|&n| (n, Vec::new())).collect();
    for (i, &node) in ring.iter().enumerate() {
        if i == s {
            continue;
        }
        let forward = (s + k - i) % k; // hops going to higher positions
        let backward = (i + k - s) % k;
        let next = ring[(i + 1) % k];
        let prev = ring[(i + k - 1) % k];
        let parent = match forward.cmp(&backward) {
            std::cmp::Ordering::Less => next,
            std::cmp::Ordering::Greater => prev,
            std::cmp::Ordering::Equal => next.min(prev),
        };
        parent_of.insert(node, parent);
        children_of.get_mut(&parent).expect("parent in ring").push(node);
    }
    for c in children_of.values_mut() {
        c.sort();
    }
    Ok(RoutingTree { plane, sink, parent_of, children_of })
}

impl RoutingTree {
    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.parent_of.get(&node).copied()
    }

    /// Children sorted by id; empty for leaves and unknown nodes.
    pub fn children(&self, node: NodeId) -> &[NodeId] {
        self.children_of.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children_of.keys().copied()
    }

    /// Hops from `node` to the sink, `None` if the walk leaves the tree.
    pub fn depth_of(&self, node: NodeId) -> Option<usize> {
        let mut cur = node;
        let mut hops = 0;
        while cur != self.sink {
            cur = self.parent(cur)?;
            hops += 1;
            if hops > self.children_of.len() {
                return None;
            }
        }
        Some(hops)
    }

    pub fn depth(&self) -> usize {
        self.nodes().filter_map(|n| self.depth_of(n)).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(k: u32) -> Vec<NodeId> {
        (1..=k).map(NodeId).collect()
    }

    #[test]
    fn reference_tree_for_sink_eight() {
        let t = build_routing_tree(0, &ring(8), NodeId(8)).unwrap();
        assert_eq!(t.children(NodeId(8)), &[NodeId(1), NodeId(7)]);
        for (child, parent) in [(5, 6), (6, 7), (7, 8), (4, 3), (3, 2), (2, 1), (1, 8)] {
            assert_eq!(t.parent(NodeId(child)), Some(NodeId(parent)), "node {child}");
        }
        assert_eq!(t.depth(), 4);
    }

    #[test]
    fn two_node_ring() {
        let t = build_routing_tree(0, &ring(2), NodeId(1)).unwrap();
        assert_eq!(t.parent(NodeId(2)), Some(NodeId(1)));
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn single_node_ring() {
        let t = build_routing_tree(0, &ring(1), NodeId(1)).unwrap();
        assert!(t.children(NodeId(1)).is_empty());
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn sink_must_be_in_plane() {
        assert!(matches!(
            build_routing_tree(3, &ring(4), NodeId(9)),
            Err(ProtocolError::SinkNotInPlane { .. })
        ));
    }
}
