//! One source generation pushed through a coded network.
//!
//! Packets are row vectors of length `n`. Edges are processed in topological
//! order: each edge carries the coefficient-weighted sum of what its tail
//! received, then the error model adds `z(e)` on top. The receiver sees one
//! row of `Y` per incoming edge, in `In(r)` order.
//!
//! What the receiver may use is split from what only the test harness may
//! use. [`GenerationTrace::observed`] is free to read. [`GenerationTrace::truth`]
//! counts its reads in a per-thread counter so the harness can assert that
//! inference code never touched it.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{axpy, compute_irvs, CodingAssignment, IrvTable};
use crate::field::Gf;
use crate::linalg::{LinalgError, Matrix};
use crate::netgraph::{EdgeId, EdgeSet, Network};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChannelError {
    #[error("block length {n} must exceed capacity {c}")]
    BlockTooShort { c: usize, n: usize },
    #[error("error model inconsistent with network: {0}")]
    InconsistentModel(String),
    #[error("generation is undecodable: {0} faulty edges exceed the threshold for capacity {1}")]
    Undecodable(usize, usize),
    #[error("column spaces intersect trivially; no confusion attack exists")]
    AttackImpossible,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ErrorModel {
    None,
    /// Each edge fails independently with probability `p_f`; a failing edge
    /// gets exactly `sparsity` nonzero uniform symbols at uniform positions.
    Random {
        p_f: f64,
        sparsity: usize,
    },
    /// Random error packets on a fixed edge set.
    PlantedRandom {
        edges: EdgeSet,
        sparsity: usize,
    },
    /// Arbitrary nonzero packets chosen by an adversary.
    Adversarial {
        packets: BTreeMap<EdgeId, Vec<u64>>,
    },
    ErasureRandom {
        p_f: f64,
    },
    ErasureAdversarial {
        edges: EdgeSet,
    },
    /// Each listed edge carries its packet from the previous generation.
    Delay {
        edges: EdgeSet,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    None,
    Random,
    Adversarial,
    Erasure,
    Delay,
}

impl ErrorModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            ErrorModel::None => ModelKind::None,
            ErrorModel::Random { .. } | ErrorModel::PlantedRandom { .. } => ModelKind::Random,
            ErrorModel::Adversarial { .. } => ModelKind::Adversarial,
            ErrorModel::ErasureRandom { .. } | ErrorModel::ErasureAdversarial { .. } => {
                ModelKind::Erasure
            }
            ErrorModel::Delay { .. } => ModelKind::Delay,
        }
    }

    fn validate(&self, net: &Network, n: usize) -> Result<(), ChannelError> {
        let bad = |m: String| Err(ChannelError::InconsistentModel(m));
        let check_edges = |edges: &EdgeSet| match edges.iter().find(|&&e| e >= net.edge_count()) {
            Some(e) => bad(format!("edge {e} does not exist")),
            None => Ok(()),
        };
        match self {
            ErrorModel::None => Ok(()),
            ErrorModel::Random { p_f, sparsity } => {
                if !(0.0..=1.0).contains(p_f) {
                    return bad(format!("p_f = {p_f} outside [0, 1]"));
                }
                check_sparsity(*sparsity, n)
            }
            ErrorModel::PlantedRandom { edges, sparsity } => {
                check_edges(edges)?;
                check_sparsity(*sparsity, n)
            }
            ErrorModel::Adversarial { packets } => {
                for (&e, p) in packets {
                    if e >= net.edge_count() {
                        return bad(format!("edge {e} does not exist"));
                    }
                    if p.len() != n {
                        return bad(format!("packet on edge {e} has length {} != {n}", p.len()));
                    }
                    if p.iter().all(|&v| v == 0) {
                        return bad(format!("packet on edge {e} is zero"));
                    }
                }
                Ok(())
            }
            ErrorModel::ErasureRandom { p_f } => {
                if !(0.0..=1.0).contains(p_f) {
                    return bad(format!("p_f = {p_f} outside [0, 1]"));
                }
                Ok(())
            }
            ErrorModel::ErasureAdversarial { edges } | ErrorModel::Delay { edges } => {
                check_edges(edges)
            }
        }
    }
}

fn check_sparsity(s: usize, n: usize) -> Result<(), ChannelError> {
    if s == 0 || s > n {
        return Err(ChannelError::InconsistentModel(format!(
            "sparsity {s} outside [1, {n}]"
        )));
    }
    Ok(())
}

/// Uniform nonzero adversarial packets on `edges`.
pub fn adversarial_uniform<R: Rng + ?Sized>(
    field: Gf,
    edges: &EdgeSet,
    n: usize,
    rng: &mut R,
) -> ErrorModel {
    let packets = edges
        .iter()
        .map(|&e| (e, nonzero_packet(field, n, rng)))
        .collect();
    ErrorModel::Adversarial { packets }
}

fn nonzero_packet<R: Rng + ?Sized>(field: Gf, n: usize, rng: &mut R) -> Vec<u64> {
    loop {
        let p: Vec<u64> = (0..n).map(|_| field.sample(rng)).collect();
        if p.iter().any(|&v| v != 0) {
            return p;
        }
    }
}

/// Receiver-observable part of a generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub index: u64,
    /// `C x n`, one row per edge entering the receiver.
    pub y: Matrix,
}

/// What actually happened inside the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: ModelKind,
    pub x: Matrix,
    pub error_edges: EdgeSet,
    /// `z(e)` for every faulty edge.
    pub injected: BTreeMap<EdgeId, Vec<u64>>,
    /// `y(e)` for every edge, used as history by the delay model.
    pub outputs: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTrace {
    observed: Observation,
    truth: GroundTruth,
}

thread_local! {
    static TRUTH_READS: Cell<u64> = const { Cell::new(0) };
}

/// Number of ground-truth reads on this thread so far.
pub fn truth_reads() -> u64 {
    TRUTH_READS.with(|c| c.get())
}

impl GenerationTrace {
    pub fn observed(&self) -> &Observation {
        &self.observed
    }

    pub fn y(&self) -> &Matrix {
        &self.observed.y
    }

    pub fn index(&self) -> u64 {
        self.observed.index
    }

    /// Ground truth; every call is counted by [`truth_reads`].
    pub fn truth(&self) -> &GroundTruth {
        TRUTH_READS.with(|c| c.set(c.get() + 1));
        &self.truth
    }
}

/// `[I_C | uniform payload]`.
pub fn make_message<R: Rng + ?Sized>(
    field: Gf,
    c: usize,
    n: usize,
    rng: &mut R,
) -> Result<Matrix, ChannelError> {
    if n <= c {
        return Err(ChannelError::BlockTooShort { c, n });
    }
    let mut x = Matrix::zeros(field, c, n);
    for i in 0..c {
        x.set(i, i, 1);
        for j in c..n {
            x.set(i, j, field.sample(rng));
        }
    }
    Ok(x)
}

pub fn transmit<R: Rng + ?Sized>(
    net: &Network,
    asg: &CodingAssignment,
    x: &Matrix,
    model: &ErrorModel,
    index: u64,
    rng: &mut R,
) -> Result<GenerationTrace, ChannelError> {
    transmit_after(net, asg, x, model, index, None, rng)
}

/// Like [`transmit`], with the previous generation available to the delay model.
pub fn transmit_after<R: Rng + ?Sized>(
    net: &Network,
    asg: &CodingAssignment,
    x: &Matrix,
    model: &ErrorModel,
    index: u64,
    previous: Option<&GenerationTrace>,
    rng: &mut R,
) -> Result<GenerationTrace, ChannelError> {
    let field = asg.field();
    let n = x.cols();
    let s = net.source();
    if x.rows() != asg.source_mixing().cols() {
        return Err(ChannelError::InconsistentModel(format!(
            "message has {} rows, code expects {}",
            x.rows(),
            asg.source_mixing().cols()
        )));
    }
    model.validate(net, n)?;

    // fault draws happen up front in edge order, so they do not depend on payloads
    let m = net.edge_count();
    let mut faulty: Vec<bool> = vec![false; m];
    let mut planned: BTreeMap<EdgeId, Vec<u64>> = BTreeMap::new();
    match model {
        ErrorModel::None => {}
        ErrorModel::Random { p_f, sparsity } => {
            for e in 0..m {
                if rng.gen_bool(*p_f) {
                    faulty[e] = true;
                    planned.insert(e, sparse_packet(field, n, *sparsity, rng));
                }
            }
        }
        ErrorModel::PlantedRandom { edges, sparsity } => {
            for &e in edges {
                faulty[e] = true;
                planned.insert(e, sparse_packet(field, n, *sparsity, rng));
            }
        }
        ErrorModel::Adversarial { packets } => {
            for (&e, p) in packets {
                faulty[e] = true;
                planned.insert(e, p.iter().map(|&v| field.reduce(v)).collect());
            }
        }
        ErrorModel::ErasureRandom { p_f } => {
            for f in faulty.iter_mut() {
                *f = rng.gen_bool(*p_f);
            }
        }
        ErrorModel::ErasureAdversarial { edges } | ErrorModel::Delay { edges } => {
            for &e in edges {
                faulty[e] = true;
            }
        }
    }

    let mut outputs: Vec<Vec<u64>> = vec![Vec::new(); m];
    let mut injected = BTreeMap::new();
    let mut emit = |e: EdgeId, carried: Vec<u64>, outputs: &mut Vec<Vec<u64>>| {
        let mut y = carried.clone();
        if faulty[e] {
            let z: Vec<u64> = match model.kind() {
                ModelKind::Erasure => carried.iter().map(|&v| field.neg(v)).collect(),
                ModelKind::Delay => {
                    let old = previous
                        .map(|p| p.truth.outputs[e].clone())
                        .unwrap_or_else(|| vec![0; n]);
                    old.iter()
                        .zip(&carried)
                        .map(|(&o, &c)| field.sub(o, c))
                        .collect()
                }
                _ => planned[&e].clone(),
            };
            for (yi, &zi) in y.iter_mut().zip(&z) {
                *yi = field.add(*yi, zi);
            }
            injected.insert(e, z);
        }
        outputs[e] = y;
    };

    let mix = asg.source_mixing();
    for (i, &e) in net.out_edges(s).iter().enumerate() {
        let mut carried = vec![0u64; n];
        for row in 0..x.rows() {
            axpy(field, &mut carried, mix.get(i, row), x.row(row));
        }
        emit(e, carried, &mut outputs);
    }
    for &v in net.topo_order() {
        if v == s {
            continue;
        }
        let b = asg.node_matrix(v);
        for (j, &o) in net.out_edges(v).iter().enumerate() {
            let mut carried = vec![0u64; n];
            for (i, &e) in net.in_edges(v).iter().enumerate() {
                axpy(field, &mut carried, b.get(i, j), &outputs[e]);
            }
            emit(o, carried, &mut outputs);
        }
    }

    let rows: Vec<Vec<u64>> = net
        .in_edges(net.receiver())
        .iter()
        .map(|&e| outputs[e].clone())
        .collect();
    let y = if rows.is_empty() {
        Matrix::zeros(field, 0, n)
    } else {
        Matrix::from_rows(field, &rows)?
    };
    // a delayed edge that happened to carry the same packet is not faulty
    injected.retain(|_, z: &mut Vec<u64>| z.iter().any(|&v| v != 0));
    let error_edges = injected.keys().copied().collect();
    Ok(GenerationTrace {
        observed: Observation { index, y },
        truth: GroundTruth {
            kind: model.kind(),
            x: x.clone(),
            error_edges,
            injected,
            outputs,
        },
    })
}

fn sparse_packet<R: Rng + ?Sized>(field: Gf, n: usize, s: usize, rng: &mut R) -> Vec<u64> {
    let mut p = vec![0u64; n];
    for pos in sample(rng, n, s) {
        p[pos] = field.sample_nonzero(rng);
    }
    p
}

/// Stand-in for network error-correcting decoding: returns the true message
/// when the generation is within the correction threshold for its model.
pub fn genie_decode(trace: &GenerationTrace) -> Result<Matrix, ChannelError> {
    let t = &trace.truth;
    let c = t.x.rows();
    let z = t.error_edges.len();
    let ok = match t.kind {
        ModelKind::None => true,
        ModelKind::Adversarial => 2 * z < c,
        ModelKind::Random | ModelKind::Erasure | ModelKind::Delay => z < c,
    };
    if ok {
        Ok(t.x.clone())
    } else {
        Err(ChannelError::Undecodable(z, c))
    }
}

/// `Z_r = Y_m - Y_h M` for a decoded message `[I | M]`.
pub fn error_matrix(y: &Matrix, x_decoded: &Matrix) -> Result<Matrix, ChannelError> {
    let c = x_decoded.rows();
    let n = x_decoded.cols();
    if y.cols() != n || n <= c || y.rows() != c {
        return Err(ChannelError::Linalg(LinalgError::DimensionMismatch(
            format!("Y is {}x{}, X is {c}x{n}", y.rows(), y.cols()),
        )));
    }
    let yh = y.column_range(0, c);
    let ym = y.column_range(c, n);
    let m = x_decoded.column_range(c, n);
    Ok(ym.sub(&yh.mul(&m)?)?)
}

/// Full error matrix `Ẑ = Y - T X`.
pub fn full_error_matrix(y: &Matrix, t: &Matrix, x: &Matrix) -> Result<Matrix, ChannelError> {
    Ok(y.sub(&t.mul(x)?)?)
}

/// Adversarial packets on (a subset of) `e1` whose error matrix lies in
/// `col(Θ(e2))`, so the receiver cannot tell which set was faulty.
pub fn confusion_attack<R: Rng + ?Sized>(
    net: &Network,
    asg: &CodingAssignment,
    e1: &EdgeSet,
    e2: &EdgeSet,
    n: usize,
    rng: &mut R,
) -> Result<ErrorModel, ChannelError> {
    let irv = compute_irvs(net, asg);
    confusion_attack_with(&irv, e1, e2, asg.field(), n, rng)
}

pub fn confusion_attack_with<R: Rng + ?Sized>(
    irv: &IrvTable,
    e1: &EdgeSet,
    e2: &EdgeSet,
    field: Gf,
    n: usize,
    rng: &mut R,
) -> Result<ErrorModel, ChannelError> {
    let l1: Vec<EdgeId> = e1.iter().copied().collect();
    let l2: Vec<EdgeId> = e2.iter().copied().collect();
    let a = irv.irm(&l1);
    let shared = a.col_space_intersect(&irv.irm(&l2))?;
    if shared.cols() == 0 {
        return Err(ChannelError::AttackImpossible);
    }
    let w = shared.column(0);
    let coeffs = a.solve(&w)?.ok_or(ChannelError::AttackImpossible)?;
    let payload = nonzero_packet(field, n, rng);
    let packets = l1
        .iter()
        .zip(&coeffs)
        .filter(|(_, &c)| c != 0)
        .map(|(&e, &c)| (e, payload.iter().map(|&p| field.mul(c, p)).collect()))
        .collect();
    Ok(ErrorModel::Adversarial { packets })
}

/// Text record for one generation; the ground-truth section is optional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDump {
    pub index: u64,
    pub q: u64,
    pub y: Vec<Vec<u64>>,
    /// Genie-decoded message, present when the generation was decodable.
    pub x: Option<Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthDump {
    pub error_edges: Vec<EdgeId>,
    pub injected: BTreeMap<EdgeId, Vec<u64>>,
}

impl TraceDump {
    pub fn from_trace(trace: &GenerationTrace, include_truth: bool) -> Self {
        let y = trace.y();
        TraceDump {
            index: trace.index(),
            q: y.field().modulus(),
            y: y.to_rows(),
            x: genie_decode(trace).ok().map(|x| x.to_rows()),
            truth: include_truth.then(|| {
                let t = trace.truth();
                TruthDump {
                    error_edges: t.error_edges.iter().copied().collect(),
                    injected: t.injected.clone(),
                }
            }),
        }
    }

    pub fn y_matrix(&self) -> Result<Matrix, ChannelError> {
        let f = Gf::new(self.q).map_err(|e| ChannelError::InconsistentModel(e.to_string()))?;
        Ok(Matrix::from_rows(f, &self.y)?)
    }

    pub fn x_matrix(&self) -> Result<Option<Matrix>, ChannelError> {
        let f = Gf::new(self.q).map_err(|e| ChannelError::InconsistentModel(e.to_string()))?;
        self.x
            .as_ref()
            .map(|x| Matrix::from_rows(f, x).map_err(ChannelError::from))
            .transpose()
    }
}

/// Edge set helper.
pub fn edge_set(ids: &[EdgeId]) -> EdgeSet {
    ids.iter().copied().collect::<BTreeSet<_>>()
}
