//! Topology estimation: candidate matching under adversarial errors, and
//! growth from the receiver using IRV lines under random errors.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use super::{find_irv, CandidateLines, PairSet, TomographyError};
use crate::codes::{assign_rlnc, axpy, transfer_matrix, Codebook, IdTable};
use crate::field::Gf;
use crate::linalg::{vandermonde, Matrix};
use crate::netgraph::{check_profile, ConnectivityProfile, Edge, Network, NodeId};

/// What the receiver knows without inference: the node labels, which nodes
/// are source and receiver, and its own incoming edges in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiverView {
    pub labels: Vec<String>,
    pub source: NodeId,
    pub receiver: NodeId,
    pub receiver_in: Vec<Edge>,
}

impl ReceiverView {
    pub fn of(net: &Network) -> Self {
        ReceiverView {
            labels: net.labels().to_vec(),
            source: net.source(),
            receiver: net.receiver(),
            receiver_in: net
                .in_edges(net.receiver())
                .iter()
                .map(|&e| net.edge(e))
                .collect(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.receiver_in.len()
    }

    fn receiver_ids(&self, ids: &IdTable) -> Result<Vec<u64>, TomographyError> {
        Ok(self
            .receiver_in
            .iter()
            .map(|e| ids.id(e.tail, e.head, e.k))
            .collect::<Result<_, _>>()?)
    }

    /// `Φ(In(r), depth)`.
    pub fn receiver_virm(&self, ids: &IdTable, depth: usize) -> Result<Matrix, TomographyError> {
        Ok(vandermonde(ids.field(), &self.receiver_ids(ids)?, depth)?)
    }
}

/// First candidate whose transfer matrix is within rank `z` of `t_e`.
///
/// Returns the index into `candidates`.
pub fn topo_adv_rlnc(
    t_e: &Matrix,
    cb: &Codebook,
    z: usize,
    candidates: &[Network],
) -> Result<usize, TomographyError> {
    for (i, g) in candidates.iter().enumerate() {
        if g.capacity() != t_e.rows() {
            continue;
        }
        let t = transfer_matrix(g, &assign_rlnc(g, cb));
        if t.sub(t_e)?.rank() <= z {
            return Ok(i);
        }
    }
    Err(TomographyError::NoMatch)
}

/// Exhaustive candidate space for [`topo_adv_rlnc`] on a tiny node set.
#[derive(Debug, Clone)]
pub struct EnumerationSpec {
    pub labels: Vec<String>,
    pub source: NodeId,
    pub receiver: NodeId,
    pub capacity: usize,
    pub profile: ConnectivityProfile,
    /// Maximum number of parallel edges between an ordered pair.
    pub max_multiplicity: u32,
    pub max_nodes: usize,
    pub max_graphs: u64,
}

/// Every valid network on the node set satisfying the profile, sorted by edge
/// count and then by edge list.
pub fn enumerate_candidates(spec: &EnumerationSpec) -> Result<Vec<Network>, TomographyError> {
    let n = spec.labels.len();
    if n > spec.max_nodes {
        return Err(TomographyError::ScaleCap(format!(
            "{n} nodes exceeds enumeration cap {}",
            spec.max_nodes
        )));
    }
    let slots: Vec<(NodeId, NodeId)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| u != v && v != spec.source && u != spec.receiver)
        .collect();
    let base = spec.max_multiplicity as u64 + 1;
    let total = (0..slots.len()).try_fold(1u64, |acc, _| acc.checked_mul(base));
    match total {
        Some(t) if t <= spec.max_graphs => {}
        _ => {
            return Err(TomographyError::ScaleCap(format!(
                "{base}^{} graphs exceeds cap {}",
                slots.len(),
                spec.max_graphs
            )))
        }
    }
    let mut counts = vec![0u32; slots.len()];
    let mut out = Vec::new();
    loop {
        let out_s: u32 = slots
            .iter()
            .zip(&counts)
            .filter(|((u, _), _)| *u == spec.source)
            .map(|(_, &c)| c)
            .sum();
        let in_r: u32 = slots
            .iter()
            .zip(&counts)
            .filter(|((_, v), _)| *v == spec.receiver)
            .map(|(_, &c)| c)
            .sum();
        if out_s as usize == spec.capacity && in_r as usize == spec.capacity {
            let edges: Vec<Edge> = slots
                .iter()
                .zip(&counts)
                .flat_map(|(&(tail, head), &c)| (0..c).map(move |k| Edge { tail, head, k }))
                .collect();
            if let Ok(net) = Network::new(spec.labels.clone(), edges, spec.source, spec.receiver) {
                if check_profile(&net, &spec.profile).ok {
                    out.push(net);
                }
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == counts.len() {
                out.sort_by_key(|g| (g.edge_count(), g.edge_signature()));
                return Ok(out);
            }
            counts[i] += 1;
            if counts[i] <= spec.max_multiplicity {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// IRVs of a partial graph, from weak-codebook coefficients.
fn partial_irvs(net: &Network, cb: &Codebook, field: Gf) -> Vec<Vec<u64>> {
    let c = net.capacity();
    let mut theta = vec![vec![0u64; c]; net.edge_count()];
    for (j, &e) in net.in_edges(net.receiver()).iter().enumerate() {
        theta[e][j] = 1;
    }
    for &v in net.topo_order().iter().rev() {
        if v == net.receiver() {
            continue;
        }
        for &e in net.in_edges(v) {
            let mut acc = vec![0u64; c];
            for &o in net.out_edges(v) {
                axpy(field, &mut acc, cb.coefficient(net, e, o), &theta[o]);
            }
            theta[e] = acc;
        }
    }
    theta
}

/// Grow a graph from the receiver, accepting an edge `(u, v, k)` when the IRV
/// it would have, computed from the codebook and the out-edges of `v` found
/// so far, spans a candidate line.
pub fn find_topo(
    cand: &CandidateLines,
    cb: &Codebook,
    view: &ReceiverView,
) -> Result<Network, TomographyError> {
    let field = cb.field();
    let n = view.labels.len();
    let mut known = vec![false; n];
    known[view.receiver] = true;
    known[view.source] = true;
    for e in &view.receiver_in {
        known[e.tail] = true;
    }
    let mut edges = view.receiver_in.clone();
    let build = |edges: &[Edge]| {
        Network::relaxed(
            view.labels.clone(),
            edges.to_vec(),
            view.source,
            view.receiver,
        )
    };
    let mut net = build(&edges)?;
    let mut theta = partial_irvs(&net, cb, field);

    loop {
        let mut grew = false;
        let order: Vec<NodeId> = net
            .topo_order()
            .iter()
            .rev()
            .copied()
            .filter(|&v| known[v] && v != view.source)
            .collect();
        for v in order {
            let outs: Vec<usize> = net.out_edges(v).to_vec();
            if outs.is_empty() {
                continue;
            }
            let cols: Vec<Vec<u64>> = outs.iter().map(|&o| theta[o].clone()).collect();
            if Matrix::from_columns(field, view.capacity(), &cols)?.rank() <= 1 {
                continue;
            }
            for u in 0..n {
                if u == v || u == view.receiver || net.reaches(v, u) {
                    continue;
                }
                let mut k = 0u32;
                loop {
                    if net.find_edge(u, v, k).is_some() {
                        k += 1;
                        continue;
                    }
                    let mut trial = edges.clone();
                    trial.push(Edge {
                        tail: u,
                        head: v,
                        k,
                    });
                    let trial_net = build(&trial)?;
                    let e = trial.len() - 1;
                    let mut guess = vec![0u64; view.capacity()];
                    for &o in trial_net.out_edges(v) {
                        axpy(
                            field,
                            &mut guess,
                            cb.coefficient(&trial_net, e, o),
                            &theta[o],
                        );
                    }
                    if !cand.contains_vector(field, &guess) {
                        break;
                    }
                    edges = trial;
                    net = trial_net;
                    known[u] = true;
                    theta = partial_irvs(&net, cb, field);
                    grew = true;
                    k += 1;
                }
            }
        }
        if !grew {
            return Ok(net);
        }
    }
}

/// Outcome of [`find_topo_rs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopoRsOutcome {
    pub pairs: PairSet,
    /// Rank-one intersections skipped because the first VIRV coordinate was zero.
    pub skipped: usize,
}

/// Edges of an NRSC network from pairwise rank-one intersections: for a line
/// `<h>`, the ratio of the two coordinates of `Φ(In(r), 2) h` is an edge ID.
pub fn find_topo_rs(
    matrices: &[Matrix],
    ids: &IdTable,
    view: &ReceiverView,
) -> Result<TopoRsOutcome, TomographyError> {
    let field = ids.field();
    let phi = view.receiver_virm(ids, 2)?;
    let by_id: HashMap<u64, usize> = ids
        .locators()
        .iter()
        .enumerate()
        .map(|(i, &h)| (h, i))
        .collect();
    let cand = find_irv(matrices)?;
    let mut pairs = BTreeSet::new();
    let mut skipped = 0;
    for line in cand.iter() {
        let h = phi.mul_vec(line.as_slice())?;
        if h[0] == 0 {
            skipped += 1;
            continue;
        }
        let ratio = field.mul(h[1], field.inv(h[0]).expect("nonzero"));
        if let Some(&i) = by_id.get(&ratio) {
            pairs.insert(ids.pairs()[i]);
        }
    }
    Ok(TopoRsOutcome { pairs, skipped })
}

/// Pairwise header differences `Y(i1)_h - Y(i2)_h`, nonzero ones only.
pub fn header_differences(
    headers: &[Matrix],
) -> Result<Vec<((usize, usize), Matrix)>, TomographyError> {
    let mut out = Vec::new();
    for i in 0..headers.len() {
        for j in i + 1..headers.len() {
            let d = headers[i].sub(&headers[j])?;
            if !d.is_zero() {
                out.push(((i, j), d));
            }
        }
    }
    Ok(out)
}

/// IRV lines under erasures: header differences stand in for error matrices.
/// A rank-one difference is itself a line.
pub fn find_irv_erasure(headers: &[Matrix]) -> Result<CandidateLines, TomographyError> {
    let diffs = header_differences(headers)?;
    let mats: Vec<Matrix> = diffs.iter().map(|(_, d)| d.clone()).collect();
    let mut cand = find_irv(&mats)?;
    let singles: Vec<((usize, usize), Option<Vec<u64>>)> = diffs
        .par_iter()
        .map(|(p, d)| {
            let b = d.col_space_basis();
            (*p, (b.cols() == 1).then(|| b.column(0)))
        })
        .collect();
    for (p, v) in singles {
        if let Some(v) = v {
            cand.insert_vector(mats[0].field(), &v, p);
        }
    }
    Ok(cand)
}
