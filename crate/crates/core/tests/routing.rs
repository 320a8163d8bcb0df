//! Routing checked against exhaustive simple-path enumeration.

use proptest::prelude::*;
use wmsn_stereo::sim::{NodeId, RoutingError, Topology};

fn all_simple_paths(t: &Topology, from: NodeId, to: NodeId) -> Vec<Vec<NodeId>> {
    fn walk(t: &Topology, cur: NodeId, to: NodeId, path: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur == to {
            out.push(path.clone());
            return;
        }
        let next: Vec<NodeId> = t.neighbours(cur).collect();
        for n in next {
            if !path.contains(&n) {
                path.push(n);
                walk(t, n, to, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(t, from, to, &mut vec![from], &mut out);
    out
}

/// Shortest simple path, lexicographically smallest among equals.
fn oracle_route(t: &Topology, from: NodeId, sink: NodeId) -> Option<Vec<NodeId>> {
    let paths = all_simple_paths(t, from, sink);
    let min = paths.iter().map(Vec::len).min()?;
    paths.into_iter().filter(|p| p.len() == min).min()
}

fn grid(n: u32) -> Topology {
    // Node id = row * n + col; sink is node 0.
    let mut t = Topology::new((0..n * n).map(NodeId), NodeId(0));
    for r in 0..n {
        for c in 0..n {
            let id = r * n + c;
            if c + 1 < n {
                t.link(NodeId(id), NodeId(id + 1));
            }
            if r + 1 < n {
                t.link(NodeId(id), NodeId(id + n));
            }
        }
    }
    t
}

#[test]
fn grid_tie_break_matches_enumeration() {
    let t = grid(3);
    // From the far corner there are six shortest paths; the smallest-id
    // next hop each time gives 8 -> 5 -> 2 -> 1 -> 0.
    let route = t.route_to_sink(NodeId(8)).unwrap();
    assert_eq!(route, [8, 5, 2, 1, 0].map(NodeId).to_vec());
    let shortest = all_simple_paths(&t, NodeId(8), NodeId(0))
        .into_iter()
        .filter(|p| p.len() == 5)
        .count();
    assert_eq!(shortest, 6);
    for id in 0..9 {
        assert_eq!(Some(t.route_to_sink(NodeId(id)).unwrap()), oracle_route(&t, NodeId(id), NodeId(0)));
    }
}

proptest! {
    #[test]
    fn random_graphs_match_enumeration(
        n in 2u32..8,
        edges in prop::collection::vec((0u32..8, 0u32..8), 0..16),
    ) {
        let mut t = Topology::new((0..n).map(NodeId), NodeId(0));
        for (a, b) in edges {
            if a < n && b < n && a != b {
                t.link(NodeId(a), NodeId(b));
            }
        }
        for id in 0..n {
            match oracle_route(&t, NodeId(id), NodeId(0)) {
                Some(expected) => prop_assert_eq!(t.route_to_sink(NodeId(id)).unwrap(), expected),
                None => prop_assert_eq!(t.route_to_sink(NodeId(id)), Err(RoutingError::Unreachable(NodeId(id)))),
            }
        }
    }
}
