//! Minimum-hop routing towards the sink over the undirected link graph.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use super::node::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("node {0} has no path to the sink")]
    Unreachable(NodeId),
    #[error("node {0} is not part of the topology")]
    UnknownNode(NodeId),
}

/// Undirected adjacency with deterministic (ascending id) neighbour order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topology {
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    sink: Option<NodeId>,
}

impl Topology {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>, sink: NodeId) -> Self {
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            nodes.into_iter().map(|id| (id, BTreeSet::new())).collect();
        adjacency.entry(sink).or_default();
        Self {
            adjacency,
            sink: Some(sink),
        }
    }

    pub fn link(&mut self, a: NodeId, b: NodeId) {
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    pub fn sink(&self) -> Option<NodeId> {
        self.sink
    }

    pub fn neighbours(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.get(&id).into_iter().flatten().copied()
    }

    /// Hop distance of every reachable node to the sink.
    pub fn sink_distances(&self) -> BTreeMap<NodeId, usize> {
        let mut dist = BTreeMap::new();
        let Some(sink) = self.sink else {
            return dist;
        };
        let mut queue = VecDeque::from([sink]);
        dist.insert(sink, 0);
        while let Some(cur) = queue.pop_front() {
            let next = dist[&cur] + 1;
            for n in self.neighbours(cur) {
                if let Entry::Vacant(slot) = dist.entry(n) {
                    slot.insert(next);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Minimum-hop path from `from` to the sink, inclusive of both ends.
    ///
    /// Among equally short paths, each hop goes to the smallest-id neighbour
    /// that is one step closer to the sink, which yields the lexicographically
    /// smallest shortest path.
    pub fn route_to_sink(&self, from: NodeId) -> Result<Vec<NodeId>, RoutingError> {
        if !self.adjacency.contains_key(&from) {
            return Err(RoutingError::UnknownNode(from));
        }
        let dist = self.sink_distances();
        let Some(&d0) = dist.get(&from) else {
            return Err(RoutingError::Unreachable(from));
        };
        let mut path = Vec::with_capacity(d0 + 1);
        path.push(from);
        let mut cur = from;
        for remaining in (0..d0).rev() {
            cur = self
                .neighbours(cur)
                .find(|n| dist.get(n) == Some(&remaining))
                .expect("BFS distances guarantee a closer neighbour");
            path.push(cur);
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn sink_routes_to_itself() {
        let t = Topology::new(ids(&[0]), NodeId(0));
        assert_eq!(t.route_to_sink(NodeId(0)).unwrap(), ids(&[0]));
    }

    #[test]
    fn line_topology() {
        let mut t = Topology::new(ids(&[1, 2, 9]), NodeId(9));
        t.link(NodeId(1), NodeId(2));
        t.link(NodeId(2), NodeId(9));
        assert_eq!(t.route_to_sink(NodeId(1)).unwrap(), ids(&[1, 2, 9]));
    }

    #[test]
    fn disconnected_node_is_reported() {
        let mut t = Topology::new(ids(&[0, 1, 2]), NodeId(0));
        t.link(NodeId(0), NodeId(1));
        assert_eq!(
            t.route_to_sink(NodeId(2)),
            Err(RoutingError::Unreachable(NodeId(2)))
        );
        assert_eq!(
            t.route_to_sink(NodeId(7)),
            Err(RoutingError::UnknownNode(NodeId(7)))
        );
    }
}
