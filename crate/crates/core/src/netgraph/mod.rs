//! Acyclic single-source, single-receiver networks and their flow structure.
//!
//! Edges are `(tail, head, k)` triples so parallel edges are first-class. Edge
//! ids are positions in the edge list, and that order is significant: the
//! order of the receiver's incoming edges fixes the coordinates of every
//! impulse response vector, and the order of the source's outgoing edges fixes
//! the rows of the source mixing matrix.

mod flow;
mod format;
mod generate;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use flow::FlowGraph;
pub use format::{parse_network, render_network};
pub use generate::{random_network, NetworkParams};

pub type NodeId = usize;
pub type EdgeId = usize;
pub type EdgeSet = BTreeSet<EdgeId>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("duplicate node label {0:?}")]
    DuplicateNode(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("graph has a cycle")]
    Cyclic,
    #[error("invalid network: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("network generation failed after {0} attempts")]
    GenerationFailed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub tail: NodeId,
    pub head: NodeId,
    /// Parallel index among edges with the same endpoints, starting at 0.
    pub k: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    labels: Vec<String>,
    edges: Vec<Edge>,
    source: NodeId,
    receiver: NodeId,
    #[serde(skip)]
    out_edges: Vec<Vec<EdgeId>>,
    #[serde(skip)]
    in_edges: Vec<Vec<EdgeId>>,
    #[serde(skip)]
    topo: Vec<NodeId>,
}

impl Network {
    /// Build and check every network invariant: acyclic, each node reaches the
    /// receiver, and |Out(s)| = |In(r)| = min-cut.
    pub fn new(
        labels: Vec<String>,
        edges: Vec<Edge>,
        source: NodeId,
        receiver: NodeId,
    ) -> Result<Self, GraphError> {
        let net = Network::relaxed(labels, edges, source, receiver)?;
        let violations = net.violations();
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(GraphError::Invalid(violations))
        }
    }

    /// Build a possibly partial graph; only acyclicity and well-formed edges are checked.
    pub fn relaxed(
        labels: Vec<String>,
        edges: Vec<Edge>,
        source: NodeId,
        receiver: NodeId,
    ) -> Result<Self, GraphError> {
        let n = labels.len();
        let mut seen_labels = HashMap::new();
        for l in &labels {
            if seen_labels.insert(l.as_str(), ()).is_some() {
                return Err(GraphError::DuplicateNode(l.clone()));
            }
        }
        for id in [source, receiver] {
            if id >= n {
                return Err(GraphError::UnknownNode(format!("#{id}")));
            }
        }
        let mut seen = BTreeSet::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (id, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return Err(GraphError::UnknownNode(format!("#{}", e.tail.max(e.head))));
            }
            if !seen.insert(*e) {
                return Err(GraphError::DuplicateEdge(format!(
                    "{}->{}#{}",
                    labels[e.tail], labels[e.head], e.k
                )));
            }
            out_edges[e.tail].push(id);
            in_edges[e.head].push(id);
        }
        let topo = topological_order(n, &edges, &out_edges).ok_or(GraphError::Cyclic)?;
        Ok(Network {
            labels,
            edges,
            source,
            receiver,
            out_edges,
            in_edges,
            topo,
        })
    }

    /// Rebuild the derived adjacency after deserialization.
    pub fn reindex(self) -> Result<Self, GraphError> {
        Network::relaxed(self.labels, self.edges, self.source, self.receiver)
    }

    /// Human-readable list of violated network invariants.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let reach = self.reaches_receiver();
        for (node, ok) in reach.iter().enumerate() {
            if !ok {
                v.push(format!(
                    "node {} has no path to the receiver",
                    self.labels[node]
                ));
            }
        }
        let out_s = self.out_edges[self.source].len();
        let in_r = self.in_edges[self.receiver].len();
        if out_s != in_r {
            v.push(format!(
                "source out-degree {out_s} differs from receiver in-degree {in_r}"
            ));
        }
        let cut = min_cut(self);
        if cut != in_r {
            v.push(format!(
                "min-cut {cut} differs from receiver in-degree {in_r}"
            ));
        }
        if !self.in_edges[self.source].is_empty() {
            v.push("source has incoming edges".into());
        }
        if !self.out_edges[self.receiver].is_empty() {
            v.push("receiver has outgoing edges".into());
        }
        v
    }

    fn reaches_receiver(&self) -> Vec<bool> {
        let mut ok = vec![false; self.labels.len()];
        ok[self.receiver] = true;
        for &v in self.topo.iter().rev() {
            if self.out_edges[v].iter().any(|&e| ok[self.edges[e].head]) {
                ok[v] = true;
            }
        }
        ok
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    pub fn find_edge(&self, tail: NodeId, head: NodeId, k: u32) -> Option<EdgeId> {
        self.out_edges[tail]
            .iter()
            .copied()
            .find(|&e| self.edges[e].head == head && self.edges[e].k == k)
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn receiver(&self) -> NodeId {
        self.receiver
    }

    pub fn out_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: NodeId) -> &[EdgeId] {
        &self.in_edges[v]
    }

    /// Number of edges entering the receiver (the network capacity C for valid networks).
    pub fn capacity(&self) -> usize {
        self.in_edges[self.receiver].len()
    }

    /// Nodes in topological order, upstream first.
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len()).filter(move |&v| v != self.source && v != self.receiver)
    }

    /// True if there is a directed path from `from` to `to` (including `from == to`).
    pub fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut seen = vec![false; self.labels.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(u) = queue.pop_front() {
            if u == to {
                return true;
            }
            for &e in &self.out_edges[u] {
                let h = self.edges[e].head;
                if !seen[h] {
                    seen[h] = true;
                    queue.push_back(h);
                }
            }
        }
        false
    }

    pub fn edge_name(&self, id: EdgeId) -> String {
        let e = self.edges[id];
        if e.k == 0 {
            format!("{}->{}", self.labels[e.tail], self.labels[e.head])
        } else {
            format!("{}->{}#{}", self.labels[e.tail], self.labels[e.head], e.k)
        }
    }

    /// Edge multiset as label triples, sorted; two networks over the same
    /// labels are the same topology iff these agree.
    pub fn edge_signature(&self) -> Vec<(String, String, u32)> {
        let mut sig: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                (
                    self.labels[e.tail].clone(),
                    self.labels[e.head].clone(),
                    e.k,
                )
            })
            .collect();
        sig.sort();
        sig
    }

    pub fn same_topology(&self, other: &Network) -> bool {
        self.edge_signature() == other.edge_signature()
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_network(self))
    }
}

fn topological_order(n: usize, edges: &[Edge], out_edges: &[Vec<EdgeId>]) -> Option<Vec<NodeId>> {
    let mut indeg = vec![0usize; n];
    for e in edges {
        indeg[e.head] += 1;
    }
    let mut ready: VecDeque<NodeId> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_front() {
        order.push(u);
        for &e in &out_edges[u] {
            let h = edges[e].head;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                ready.push_back(h);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Unit-capacity max-flow from the source to the receiver.
pub fn min_cut(net: &Network) -> usize {
    let mut g = FlowGraph::new(net.node_count());
    for e in net.edges() {
        g.add_arc(e.tail, e.head, 1);
    }
    g.max_flow(net.source(), net.receiver())
}

/// Max-flow from the edges in `set` to the receiver, with flow forced
/// through each designated edge.
///
/// Each designated edge is split at a midpoint; a super-source feeds the
/// midpoint and only the downstream half is kept, so a designated edge can
/// carry flow that starts on it but no flow from further upstream.
pub fn flow_rank(net: &Network, set: &EdgeSet) -> usize {
    if set.is_empty() {
        return 0;
    }
    let mut g = FlowGraph::new(net.node_count());
    let super_source = g.add_node();
    for (id, e) in net.edges().iter().enumerate() {
        if set.contains(&id) {
            let mid = g.add_node();
            g.add_arc(super_source, mid, 1);
            g.add_arc(mid, e.head, 1);
        } else {
            g.add_arc(e.tail, e.head, 1);
        }
    }
    g.max_flow(super_source, net.receiver())
}

/// Max-flow from the source into the edges in `set`, each edge absorbing at
/// most one unit. This is the generic rank of the global encoding vectors of `set`.
pub fn source_flow_rank(net: &Network, set: &EdgeSet) -> usize {
    if set.is_empty() {
        return 0;
    }
    let mut g = FlowGraph::new(net.node_count());
    let sink = g.add_node();
    for (id, e) in net.edges().iter().enumerate() {
        if set.contains(&id) {
            let mid = g.add_node();
            g.add_arc(e.tail, mid, 1);
            g.add_arc(mid, sink, 1);
        } else {
            g.add_arc(e.tail, e.head, 1);
        }
    }
    g.max_flow(net.source(), sink)
}

/// True iff flow-rank is additive over the collection.
pub fn flow_independent(net: &Network, sets: &[EdgeSet]) -> bool {
    let union: EdgeSet = sets.iter().flatten().copied().collect();
    let total: usize = sets.iter().map(|s| flow_rank(net, s)).sum();
    flow_rank(net, &union) == total
}

/// The maximal superset of `set` with the same flow-rank.
pub fn extended_set(net: &Network, set: &EdgeSet) -> EdgeSet {
    extended_set_in_order(net, set, &(0..net.edge_count()).collect::<Vec<_>>())
}

/// Greedy fixpoint of [`extended_set`] scanning edges in the given order.
pub fn extended_set_in_order(net: &Network, set: &EdgeSet, order: &[EdgeId]) -> EdgeSet {
    let mut ext = set.clone();
    if ext.is_empty() {
        return ext;
    }
    let rank = flow_rank(net, &ext);
    loop {
        let mut grew = false;
        for &e in order {
            if ext.contains(&e) {
                continue;
            }
            ext.insert(e);
            if flow_rank(net, &ext) == rank {
                grew = true;
            } else {
                ext.remove(&e);
            }
        }
        if !grew {
            return ext;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Weak,
    Strong,
    LocateAdv,
}

/// Degree requirements on internal nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityProfile {
    pub min_out_degree: usize,
    pub min_in_degree: usize,
    pub kind: ProfileKind,
}

impl ConnectivityProfile {
    /// Out-degree at least 2, needed for random-error topology estimation.
    pub fn weak() -> Self {
        ConnectivityProfile {
            min_out_degree: 2,
            min_in_degree: 1,
            kind: ProfileKind::Weak,
        }
    }

    /// In- and out-degree at least `2z + 1`, needed against `z` adversarial edges.
    pub fn strong(z: usize) -> Self {
        ConnectivityProfile {
            min_out_degree: 2 * z + 1,
            min_in_degree: 2 * z + 1,
            kind: ProfileKind::Strong,
        }
    }

    /// Out-degree at least `2z`, so any `2z` edges are flow-independent.
    pub fn locate_adv(z: usize) -> Self {
        ConnectivityProfile {
            min_out_degree: 2 * z,
            min_in_degree: 1,
            kind: ProfileKind::LocateAdv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileCheck {
    pub ok: bool,
    pub violations: Vec<String>,
}

pub fn check_profile(net: &Network, profile: &ConnectivityProfile) -> ProfileCheck {
    let mut violations = Vec::new();
    for v in net.internal_nodes() {
        let out = net.out_edges(v).len();
        let inn = net.in_edges(v).len();
        if out < profile.min_out_degree {
            violations.push(format!(
                "node {} has out-degree {out} < {}",
                net.label(v),
                profile.min_out_degree
            ));
        }
        if inn < profile.min_in_degree {
            violations.push(format!(
                "node {} has in-degree {inn} < {}",
                net.label(v),
                profile.min_in_degree
            ));
        }
    }
    ProfileCheck {
        ok: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn build(labels: &[&str], edges: &[(&str, &str)]) -> Network {
        let labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let id = |l: &str| labels.iter().position(|x| x == l).unwrap();
        let mut list: Vec<Edge> = Vec::new();
        for &(t, h) in edges {
            let (t, h) = (id(t), id(h));
            let k = list.iter().filter(|e| e.tail == t && e.head == h).count() as u32;
            list.push(Edge {
                tail: t,
                head: h,
                k,
            });
        }
        let s = id("s");
        let r = id("r");
        Network::new(labels, list, s, r).unwrap()
    }

    /// s=>u twice (e1, e2), u=>r twice (e3, e4).
    pub fn toy() -> Network {
        build(
            &["s", "u", "r"],
            &[("s", "u"), ("s", "u"), ("u", "r"), ("u", "r")],
        )
    }

    /// Five-edge example: e1 s->v, e2 s->w, e3 v->w, e4 v->r, e5 w->r.
    pub fn five_edge() -> Network {
        build(
            &["s", "v", "w", "r"],
            &[("s", "v"), ("s", "w"), ("v", "w"), ("v", "r"), ("w", "r")],
        )
    }
}
