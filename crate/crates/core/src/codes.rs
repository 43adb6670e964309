//! Local coding coefficients and the impulse response vectors they induce.
//!
//! Two families of codes are supported. RLNC draws every coefficient from a
//! codebook shared with the receiver. NRSC derives coefficients from node-pair
//! IDs so that every edge's IRV, seen through the receiver's Vandermonde
//! matrix, collapses to the power column of its own ID.
//!
//! Codebook and ID lookups are pure functions of `(seed, key)`. Keys are built
//! from node labels, not indices, so graphs that share labels also share
//! coefficients.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Gf;
use crate::linalg::{vandermonde, LinalgError, Matrix};
use crate::netgraph::{EdgeId, Network, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodesError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("zero ID")]
    ZeroId,
    #[error("outgoing edges of node {0} share an ID")]
    IdCollision(String),
    #[error("no ID for node pair {0}")]
    UnknownPair(String),
    #[error("field of size {0} has too few nonzero elements for {1} distinct IDs")]
    IdSpaceExhausted(u64, usize),
    #[error("ID table expects {0} entries, got {1}")]
    IdCount(usize, usize),
    #[error("coefficient given for non-adjacent edges {0} and {1}")]
    NotAdjacent(EdgeId, EdgeId),
}

/// Keyed pseudo-random function over length-prefixed byte strings.
#[derive(Clone)]
pub(crate) struct Prf {
    key: [u8; 32],
}

impl Prf {
    pub(crate) fn new(domain: &str, seed: u64) -> Self {
        let mut h = blake3::Hasher::new_derive_key("nettomo prf v1");
        h.update(&(domain.len() as u64).to_le_bytes());
        h.update(domain.as_bytes());
        h.update(&seed.to_le_bytes());
        Prf {
            key: *h.finalize().as_bytes(),
        }
    }

    pub(crate) fn element(&self, field: Gf, parts: &[&[u8]]) -> u64 {
        let mut h = blake3::Hasher::new_keyed(&self.key);
        for p in parts {
            h.update(&(p.len() as u64).to_le_bytes());
            h.update(p);
        }
        let mut xof = h.finalize_xof();
        field.uniform_from_words(|| {
            let mut w = [0u8; 8];
            xof.fill(&mut w);
            u64::from_le_bytes(w)
        })
    }
}

/// Deterministic 64-bit seed derived from a master seed, a tag and an index.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = blake3::Hasher::new_derive_key("nettomo seed v1");
    h.update(&master.to_le_bytes());
    h.update(&(tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    h.update(&index.to_le_bytes());
    let mut w = [0u8; 8];
    w.copy_from_slice(&h.finalize().as_bytes()[..8]);
    u64::from_le_bytes(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookKind {
    Weak,
    Strong,
}

/// Common randomness shared by every node and the receiver.
#[derive(Clone)]
pub struct Codebook {
    kind: CodebookKind,
    seed: u64,
    field: Gf,
    prf: Prf,
}

impl std::fmt::Debug for Codebook {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Codebook")
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .field("q", &self.field.modulus())
            .finish()
    }
}

fn kbytes(k: u32) -> [u8; 4] {
    k.to_le_bytes()
}

impl Codebook {
    pub fn new(kind: CodebookKind, seed: u64, field: Gf) -> Self {
        let domain = match kind {
            CodebookKind::Weak => "codebook/weak",
            CodebookKind::Strong => "codebook/strong",
        };
        Codebook {
            kind,
            seed,
            field,
            prf: Prf::new(domain, seed),
        }
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    /// `R_v(u, w, i, j)`: packet from `(u, v, i)` into `(v, w, j)`.
    pub fn weak_entry(&self, v: &str, u: &str, i: u32, w: &str, j: u32) -> u64 {
        self.prf.element(
            self.field,
            &[
                b"w",
                v.as_bytes(),
                u.as_bytes(),
                &kbytes(i),
                w.as_bytes(),
                &kbytes(j),
            ],
        )
    }

    /// `R_v(u, w, w', i, j, j')`, summed over the actual outgoing edges `(v, w', j')`.
    pub fn strong_entry(
        &self,
        v: &str,
        u: &str,
        i: u32,
        w: &str,
        j: u32,
        w2: &str,
        j2: u32,
    ) -> u64 {
        self.prf.element(
            self.field,
            &[
                b"s",
                v.as_bytes(),
                u.as_bytes(),
                &kbytes(i),
                w.as_bytes(),
                &kbytes(j),
                w2.as_bytes(),
                &kbytes(j2),
            ],
        )
    }

    /// Source mixing weight of message row `row` on the source edge `(s, w, j)`.
    pub fn mixing_entry(&self, s: &str, w: &str, j: u32, row: usize) -> u64 {
        self.prf.element(
            self.field,
            &[
                b"m",
                s.as_bytes(),
                w.as_bytes(),
                &kbytes(j),
                &(row as u64).to_le_bytes(),
            ],
        )
    }

    /// Coefficient `β(e_in, v, e_out)` as node `v` of `net` would compute it.
    pub fn coefficient(&self, net: &Network, e_in: EdgeId, e_out: EdgeId) -> u64 {
        let a = net.edge(e_in);
        let b = net.edge(e_out);
        debug_assert_eq!(a.head, b.tail);
        let v = net.label(a.head);
        let u = net.label(a.tail);
        let w = net.label(b.head);
        match self.kind {
            CodebookKind::Weak => self.weak_entry(v, u, a.k, w, b.k),
            CodebookKind::Strong => net.out_edges(a.head).iter().fold(0, |acc, &o| {
                let o = net.edge(o);
                let r = self.strong_entry(v, u, a.k, w, b.k, net.label(o.head), o.k);
                self.field.add(acc, r)
            }),
        }
    }
}

/// Node-pair IDs for network Reed-Solomon coding.
///
/// IDs cover every ordered pair of distinct nodes and every parallel index
/// below `max_parallel`. All IDs are nonzero and pairwise distinct; zeros and
/// collisions are resampled in a fixed key order, so the table is a pure
/// function of the seed and the label list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdTable {
    field: Gf,
    seed: u64,
    labels: Vec<String>,
    max_parallel: u32,
    pairs: Vec<(NodeId, NodeId, u32)>,
    ids: Vec<u64>,
    index: HashMap<(NodeId, NodeId, u32), usize>,
}

impl IdTable {
    pub fn new(
        field: Gf,
        seed: u64,
        labels: &[String],
        max_parallel: u32,
    ) -> Result<Self, CodesError> {
        let prf = Prf::new("ids", seed);
        let keys = pair_keys(labels.len(), max_parallel);
        if keys.len() as u64 >= field.modulus() {
            return Err(CodesError::IdSpaceExhausted(field.modulus(), keys.len()));
        }
        let mut ids = Vec::with_capacity(keys.len());
        let mut used = HashSet::new();
        for &(u, v, k) in &keys {
            let mut attempt = 0u64;
            let id = loop {
                let x = prf.element(
                    field,
                    &[
                        labels[u].as_bytes(),
                        labels[v].as_bytes(),
                        &kbytes(k),
                        &attempt.to_le_bytes(),
                    ],
                );
                if x != 0 && !used.contains(&x) {
                    break x;
                }
                attempt += 1;
            };
            used.insert(id);
            ids.push(id);
        }
        Ok(IdTable::assemble(
            field,
            seed,
            labels,
            max_parallel,
            keys,
            ids,
        ))
    }

    /// Table with given IDs in [`IdTable::pairs`] order; IDs must be nonzero
    /// but need not be distinct.
    pub fn from_ids(
        field: Gf,
        labels: &[String],
        max_parallel: u32,
        ids: Vec<u64>,
    ) -> Result<Self, CodesError> {
        let keys = pair_keys(labels.len(), max_parallel);
        if keys.len() != ids.len() {
            return Err(CodesError::IdCount(keys.len(), ids.len()));
        }
        if ids.iter().any(|&x| x % field.modulus() == 0) {
            return Err(CodesError::ZeroId);
        }
        Ok(IdTable::assemble(field, 0, labels, max_parallel, keys, ids))
    }

    fn assemble(
        field: Gf,
        seed: u64,
        labels: &[String],
        max_parallel: u32,
        pairs: Vec<(NodeId, NodeId, u32)>,
        ids: Vec<u64>,
    ) -> Self {
        let index = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        IdTable {
            field,
            seed,
            labels: labels.to_vec(),
            max_parallel,
            pairs,
            ids,
            index,
        }
    }

    /// Table covering every parallel index present in `net`.
    pub fn for_network(field: Gf, seed: u64, net: &Network) -> Result<Self, CodesError> {
        let mp = net.edges().iter().map(|e| e.k + 1).max().unwrap_or(1);
        IdTable::new(field, seed, net.labels(), mp)
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn max_parallel(&self) -> u32 {
        self.max_parallel
    }

    pub fn id(&self, u: NodeId, v: NodeId, k: u32) -> Result<u64, CodesError> {
        self.index
            .get(&(u, v, k))
            .map(|&i| self.ids[i])
            .ok_or_else(|| CodesError::UnknownPair(format!("({u},{v},{k})")))
    }

    pub fn edge_id(&self, net: &Network, e: EdgeId) -> Result<u64, CodesError> {
        let e = net.edge(e);
        self.id(e.tail, e.head, e.k)
    }

    /// Locator universe: every keyed node pair, in table order.
    pub fn pairs(&self) -> &[(NodeId, NodeId, u32)] {
        &self.pairs
    }

    pub fn locators(&self) -> &[u64] {
        &self.ids
    }
}

fn pair_keys(n: usize, max_parallel: u32) -> Vec<(NodeId, NodeId, u32)> {
    let mut keys = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                keys.extend((0..max_parallel).map(|k| (u, v, k)));
            }
        }
    }
    keys
}

/// `φ = [id, id², .., id^depth]`.
pub fn virv(field: Gf, id: u64, depth: usize) -> Result<Vec<u64>, CodesError> {
    if id % field.modulus() == 0 {
        return Err(CodesError::ZeroId);
    }
    Ok((1..=depth as u64).map(|p| field.pow(id, p)).collect())
}

/// `Φ(edges, depth)`: VIRVs of `edges` as columns.
pub fn virm(
    net: &Network,
    ids: &IdTable,
    edges: &[EdgeId],
    depth: usize,
) -> Result<Matrix, CodesError> {
    let list = edges
        .iter()
        .map(|&e| ids.edge_id(net, e))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vandermonde(ids.field(), &list, depth)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rlnc(CodebookKind),
    Nrsc,
    Explicit,
}

/// Local coefficients for every node plus the source mixing matrix.
///
/// `beta[v]` is `|In(v)| x |Out(v)|` with rows and columns in the order of
/// `Network::in_edges(v)` and `Network::out_edges(v)`. The source mixing
/// matrix has one row per source edge and one column per message row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingAssignment {
    pub scheme: Scheme,
    field: Gf,
    beta: Vec<Matrix>,
    source_mixing: Matrix,
}

impl CodingAssignment {
    /// Hand-specified coefficients; pairs not listed are zero.
    pub fn explicit(
        net: &Network,
        field: Gf,
        source_mixing: Matrix,
        coeffs: &[(EdgeId, EdgeId, u64)],
    ) -> Result<Self, CodesError> {
        let mut beta = empty_beta(net, field);
        for &(a, b, val) in coeffs {
            let v = net.edge(a).head;
            if net.edge(b).tail != v {
                return Err(CodesError::NotAdjacent(a, b));
            }
            let i = position(net.in_edges(v), a);
            let j = position(net.out_edges(v), b);
            beta[v].set(i, j, field.reduce(val));
        }
        Ok(CodingAssignment {
            scheme: Scheme::Explicit,
            field,
            beta,
            source_mixing,
        })
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn source_mixing(&self) -> &Matrix {
        &self.source_mixing
    }

    pub fn node_matrix(&self, v: NodeId) -> &Matrix {
        &self.beta[v]
    }

    pub fn beta(&self, net: &Network, e_in: EdgeId, e_out: EdgeId) -> Option<u64> {
        let v = net.edge(e_in).head;
        if net.edge(e_out).tail != v {
            return None;
        }
        Some(self.beta[v].get(
            position(net.in_edges(v), e_in),
            position(net.out_edges(v), e_out),
        ))
    }

    /// One line per adjacent edge pair: `beta <in-edge> <node> <out-edge> <value>`.
    pub fn export(&self, net: &Network) -> String {
        let mut out = String::new();
        for v in 0..net.node_count() {
            for &a in net.in_edges(v) {
                for &b in net.out_edges(v) {
                    let val = self.beta(net, a, b).unwrap_or(0);
                    let _ = writeln!(
                        out,
                        "beta {} {} {} {}",
                        net.edge_name(a),
                        net.label(v),
                        net.edge_name(b),
                        val
                    );
                }
            }
        }
        out
    }
}

fn position(list: &[EdgeId], e: EdgeId) -> usize {
    list.iter()
        .position(|&x| x == e)
        .expect("edge adjacent to node")
}

fn empty_beta(net: &Network, field: Gf) -> Vec<Matrix> {
    (0..net.node_count())
        .map(|v| Matrix::zeros(field, net.in_edges(v).len(), net.out_edges(v).len()))
        .collect()
}

/// Random linear network code drawn from the codebook.
pub fn assign_rlnc(net: &Network, cb: &Codebook) -> CodingAssignment {
    let field = cb.field();
    let mut beta = empty_beta(net, field);
    for v in 0..net.node_count() {
        for (i, &a) in net.in_edges(v).iter().enumerate() {
            for (j, &b) in net.out_edges(v).iter().enumerate() {
                beta[v].set(i, j, cb.coefficient(net, a, b));
            }
        }
    }
    let s = net.source();
    let c = net.capacity();
    let mut mix = Matrix::zeros(field, net.out_edges(s).len(), c);
    for (i, &e) in net.out_edges(s).iter().enumerate() {
        let ed = net.edge(e);
        for row in 0..c {
            mix.set(
                i,
                row,
                cb.mixing_entry(net.label(s), net.label(ed.head), ed.k, row),
            );
        }
    }
    CodingAssignment {
        scheme: Scheme::Rlnc(cb.kind()),
        field,
        beta,
        source_mixing: mix,
    }
}

/// Network Reed-Solomon code: node `v` with `d` outgoing edges sets
/// `b(e) = Φ(Out(v), d)^{-1} φ(e, d)` for each incoming `e`.
pub fn assign_nrsc(net: &Network, ids: &IdTable) -> Result<CodingAssignment, CodesError> {
    let field = ids.field();
    let mut beta = empty_beta(net, field);
    for v in 0..net.node_count() {
        let outs = net.out_edges(v);
        if v == net.source() || outs.is_empty() || net.in_edges(v).is_empty() {
            continue;
        }
        let d = outs.len();
        let phi_inv = invert_virm(net, ids, outs, d, v)?;
        for (i, &e) in net.in_edges(v).iter().enumerate() {
            let b = phi_inv.mul_vec(&virv(field, ids.edge_id(net, e)?, d)?)?;
            for (j, &x) in b.iter().enumerate() {
                beta[v].set(i, j, x);
            }
        }
    }
    let s = net.source();
    let mix = invert_virm(net, ids, net.out_edges(s), net.capacity(), s)?;
    Ok(CodingAssignment {
        scheme: Scheme::Nrsc,
        field,
        beta,
        source_mixing: mix,
    })
}

fn invert_virm(
    net: &Network,
    ids: &IdTable,
    edges: &[EdgeId],
    depth: usize,
    v: NodeId,
) -> Result<Matrix, CodesError> {
    let phi = virm(net, ids, edges, depth).map_err(|e| match e {
        CodesError::Linalg(LinalgError::InvalidId(_)) => {
            CodesError::IdCollision(net.label(v).to_string())
        }
        other => other,
    })?;
    phi.invert().map_err(|e| match e {
        LinalgError::Singular => CodesError::IdCollision(net.label(v).to_string()),
        other => other.into(),
    })
}

/// IRVs `θ(e)` and global encoding vectors `ĝ(e)` of every edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrvTable {
    field: Gf,
    capacity: usize,
    theta: Vec<Vec<u64>>,
    global: Vec<Vec<u64>>,
}

impl IrvTable {
    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn edge_count(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self, e: EdgeId) -> &[u64] {
        &self.theta[e]
    }

    pub fn global(&self, e: EdgeId) -> &[u64] {
        &self.global[e]
    }

    /// `Θ(edges)`: IRVs as columns.
    pub fn irm(&self, edges: &[EdgeId]) -> Matrix {
        let cols: Vec<Vec<u64>> = edges.iter().map(|&e| self.theta[e].clone()).collect();
        Matrix::from_columns(self.field, self.capacity, &cols).expect("IRVs have length C")
    }
}

/// Reverse-topological IRV recursion and forward global-vector recursion.
pub fn compute_irvs(net: &Network, asg: &CodingAssignment) -> IrvTable {
    let field = asg.field();
    let c = net.capacity();
    let m = net.edge_count();
    let mut theta = vec![vec![0u64; c]; m];
    for (j, &e) in net.in_edges(net.receiver()).iter().enumerate() {
        theta[e][j] = 1;
    }
    for &v in net.topo_order().iter().rev() {
        if v == net.receiver() {
            continue;
        }
        let b = asg.node_matrix(v);
        for (i, &e) in net.in_edges(v).iter().enumerate() {
            let mut acc = vec![0u64; c];
            for (j, &o) in net.out_edges(v).iter().enumerate() {
                axpy(field, &mut acc, b.get(i, j), &theta[o]);
            }
            theta[e] = acc;
        }
    }

    let width = asg.source_mixing().cols();
    let mut global = vec![vec![0u64; width]; m];
    for (i, &e) in net.out_edges(net.source()).iter().enumerate() {
        global[e] = asg.source_mixing().row(i).to_vec();
    }
    for &v in net.topo_order() {
        if v == net.source() {
            continue;
        }
        let b = asg.node_matrix(v);
        for (j, &o) in net.out_edges(v).iter().enumerate() {
            let mut acc = vec![0u64; width];
            for (i, &e) in net.in_edges(v).iter().enumerate() {
                axpy(field, &mut acc, b.get(i, j), &global[e]);
            }
            global[o] = acc;
        }
    }
    IrvTable {
        field,
        capacity: c,
        theta,
        global,
    }
}

pub(crate) fn axpy(field: Gf, acc: &mut [u64], a: u64, x: &[u64]) {
    if a == 0 {
        return;
    }
    for (y, &xi) in acc.iter_mut().zip(x) {
        *y = field.add(*y, field.mul(a, xi));
    }
}

/// `T = Θ(Out(s)) · S`, so error-free transmission gives `Y = T X`.
pub fn transfer_matrix(net: &Network, asg: &CodingAssignment) -> Matrix {
    let irv = compute_irvs(net, asg);
    transfer_from_irvs(net, asg, &irv)
}

pub fn transfer_from_irvs(net: &Network, asg: &CodingAssignment, irv: &IrvTable) -> Matrix {
    irv.irm(net.out_edges(net.source()))
        .mul(asg.source_mixing())
        .expect("source mixing has one row per source edge")
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::netgraph::fixtures::{five_edge, toy};

    /// x3 = x1 + 2 x2, x4 = x1 + x2, identity source mixing.
    pub fn toy_assignment(field: Gf) -> (Network, CodingAssignment) {
        let net = toy();
        let asg = CodingAssignment::explicit(
            &net,
            field,
            Matrix::identity(field, 2),
            &[(0, 2, 1), (1, 2, 2), (0, 3, 1), (1, 3, 1)],
        )
        .unwrap();
        (net, asg)
    }

    /// β(e1,v,e4)=3, β(e1,v,e3)=2, β(e2,w,e5)=2, β(e3,w,e5)=1.
    pub fn five_edge_assignment(field: Gf) -> (Network, CodingAssignment) {
        let net = five_edge();
        let asg = CodingAssignment::explicit(
            &net,
            field,
            Matrix::identity(field, 2),
            &[(0, 3, 3), (0, 2, 2), (1, 4, 2), (2, 4, 1)],
        )
        .unwrap();
        (net, asg)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::netgraph::{random_network, ConnectivityProfile, NetworkParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf7() -> Gf {
        Gf::new(7).unwrap()
    }

    #[test]
    fn codebook_is_deterministic() {
        let f = Gf::default_field();
        let a = Codebook::new(CodebookKind::Weak, 1, f);
        let b = Codebook::new(CodebookKind::Weak, 1, f);
        let c = Codebook::new(CodebookKind::Weak, 2, f);
        assert_eq!(
            a.weak_entry("v", "u", 0, "w", 0),
            b.weak_entry("v", "u", 0, "w", 0)
        );
        assert_ne!(
            a.weak_entry("v", "u", 0, "w", 0),
            c.weak_entry("v", "u", 0, "w", 0)
        );
        let s = Codebook::new(CodebookKind::Strong, 1, gf7());
        assert!(s.strong_entry("v", "u", 0, "w", 0, "x", 0) < 7);
        // label boundaries are unambiguous
        assert_ne!(
            a.weak_entry("ab", "c", 0, "w", 0),
            a.weak_entry("a", "bc", 0, "w", 0)
        );
    }

    #[test]
    fn toy_irvs_and_transfer() {
        let f = gf7();
        let (net, asg) = toy_assignment(f);
        let irv = compute_irvs(&net, &asg);
        assert_eq!(irv.theta(0), &[1, 1]);
        assert_eq!(irv.theta(1), &[2, 1]);
        assert_eq!(irv.theta(2), &[1, 0]);
        assert_eq!(irv.theta(3), &[0, 1]);
        let t = transfer_matrix(&net, &asg);
        assert_eq!(t.to_rows(), vec![vec![1, 2], vec![1, 1]]);
        for (j, &e) in net.in_edges(net.receiver()).iter().enumerate() {
            assert_eq!(irv.global(e), t.row(j));
        }
    }

    #[test]
    fn five_edge_irvs() {
        let (net, asg) = five_edge_assignment(gf7());
        let irv = compute_irvs(&net, &asg);
        let expect = [[3, 2], [0, 2], [0, 1], [1, 0], [0, 1]];
        for (e, want) in expect.iter().enumerate() {
            assert_eq!(irv.theta(e), want, "edge e{}", e + 1);
        }
        // θ(e2), θ(e3) both lie on the line of θ(e5)
        assert!(irv.irm(&[1, 2]).col_space_contains(irv.theta(4)).unwrap());
    }

    #[test]
    fn explicit_rejects_non_adjacent() {
        let f = gf7();
        let net = crate::netgraph::fixtures::five_edge();
        let r = CodingAssignment::explicit(&net, f, Matrix::identity(f, 2), &[(0, 4, 1)]);
        assert_eq!(r, Err(CodesError::NotAdjacent(0, 4)));
    }

    #[test]
    fn virv_examples() {
        let f = gf7();
        assert_eq!(virv(f, 2, 3).unwrap(), vec![2, 4, 1]);
        assert_eq!(virv(f, 1, 4).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(virv(f, 0, 2), Err(CodesError::ZeroId));
    }

    #[test]
    fn nrsc_local_solve_matches_hand_computation() {
        // Φ = [[2,3],[4,2]] over GF(7), det = 4 - 12 = -8 ≡ 6, Φ^{-1} = 6^{-1} [[2,-3],[-4,2]]
        let f = gf7();
        let phi = vandermonde(f, &[2, 3], 2).unwrap();
        let b = phi
            .invert()
            .unwrap()
            .mul_vec(&virv(f, 4, 2).unwrap())
            .unwrap();
        let det_inv = f.inv(6).unwrap();
        let oracle = [
            f.mul(det_inv, f.sub(f.mul(2, 4), f.mul(3, 2))),
            f.mul(det_inv, f.sub(f.mul(2, 2), f.mul(4, 4))),
        ];
        assert_eq!(b, oracle);
        assert_eq!(phi.mul_vec(&b).unwrap(), virv(f, 4, 2).unwrap());
    }

    #[test]
    fn nrsc_duplicate_outgoing_ids_rejected() {
        let f = gf7();
        let net = crate::netgraph::fixtures::toy();
        // pairs in order: (s,u,0) (s,u,1) (s,r,*) (u,s,*) (u,r,0) (u,r,1) (r,*)
        let mut ids = vec![1u64; 12];
        ids[0] = 2;
        ids[1] = 3;
        ids[6] = 5;
        ids[7] = 5;
        let table = IdTable::from_ids(f, net.labels(), 2, ids.clone()).unwrap();
        assert_eq!(table.id(1, 2, 1).unwrap(), 5);
        assert_eq!(
            assign_nrsc(&net, &table),
            Err(CodesError::IdCollision("u".into()))
        );
        ids[7] = 6;
        let table = IdTable::from_ids(f, net.labels(), 2, ids).unwrap();
        assert!(assign_nrsc(&net, &table).is_ok());
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert!(matches!(
            IdTable::new(Gf::new(3).unwrap(), 0, &labels, 1),
            Err(CodesError::IdSpaceExhausted(3, 6))
        ));
    }

    #[test]
    fn id_table_properties() {
        let f = gf7();
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let ids = IdTable::new(f, 9, &labels, 1).unwrap();
        // 6 ordered pairs fill all six nonzero residues of GF(7)
        let mut all: Vec<u64> = ids.locators().to_vec();
        all.sort();
        assert_eq!(all, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(ids, IdTable::new(f, 9, &labels, 1).unwrap());
    }

    #[test]
    fn strong_coefficients_depend_on_out_edges() {
        let f = Gf::default_field();
        let cb = Codebook::new(CodebookKind::Strong, 4, f);
        let weak = Codebook::new(CodebookKind::Weak, 4, f);
        let full = crate::netgraph::fixtures::build(
            &["s", "v", "a", "b", "r"],
            &[
                ("s", "v"),
                ("s", "a"),
                ("v", "a"),
                ("v", "b"),
                ("a", "r"),
                ("b", "r"),
            ],
        );
        let less = crate::netgraph::fixtures::build(
            &["s", "v", "a", "b", "r"],
            &[("s", "v"), ("s", "b"), ("v", "a"), ("a", "r"), ("b", "r")],
        );
        // β(s->v, v, v->a) in both graphs
        assert_ne!(cb.coefficient(&full, 0, 2), cb.coefficient(&less, 0, 2));
        assert_eq!(weak.coefficient(&full, 0, 2), weak.coefficient(&less, 0, 2));
    }

    #[test]
    fn rlnc_transfer_matches_simulation_of_identity() {
        let f = Gf::default_field();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = random_network(
            &NetworkParams::new(8, 3, ConnectivityProfile::weak()),
            &mut rng,
        )
        .unwrap();
        let asg = assign_rlnc(&net, &Codebook::new(CodebookKind::Weak, 1, f));
        assert_eq!(
            asg.clone(),
            assign_rlnc(&net, &Codebook::new(CodebookKind::Weak, 1, f))
        );
        let irv = compute_irvs(&net, &asg);
        let t = transfer_matrix(&net, &asg);
        for (j, &e) in net.in_edges(net.receiver()).iter().enumerate() {
            assert_eq!(irv.global(e), t.row(j));
        }
        assert_eq!(t.rank(), 3);
        assert!(asg.export(&net).lines().all(|l| l.starts_with("beta ")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn nrsc_virv_identity(seed in any::<u64>(), d in 2usize..5) {
            let f = Gf::default_field();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let profile = ConnectivityProfile { min_out_degree: d, min_in_degree: 1, kind: crate::netgraph::ProfileKind::LocateAdv };
            let net = random_network(&NetworkParams::new(9, d + 1, profile), &mut rng).unwrap();
            let ids = IdTable::for_network(f, seed, &net).unwrap();
            let asg = assign_nrsc(&net, &ids).unwrap();
            let irv = compute_irvs(&net, &asg);
            let phi = virm(&net, &ids, net.in_edges(net.receiver()), d).unwrap();
            for e in 0..net.edge_count() {
                prop_assert_eq!(phi.mul_vec(irv.theta(e)).unwrap(), virv(f, ids.edge_id(&net, e).unwrap(), d).unwrap());
            }
            // recursion invariant at every internal node
            for v in net.internal_nodes() {
                let outs = net.out_edges(v);
                let phi_out = virm(&net, &ids, outs, outs.len()).unwrap();
                for &e in net.in_edges(v) {
                    let b: Vec<u64> = outs.iter().map(|&o| asg.beta(&net, e, o).unwrap()).collect();
                    prop_assert_eq!(phi_out.mul_vec(&b).unwrap(), virv(f, ids.edge_id(&net, e).unwrap(), outs.len()).unwrap());
                }
            }
        }

        #[test]
        fn irv_rank_bounded_by_flow_rank(seed in any::<u64>()) {
            let f = Gf::default_field();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = random_network(&NetworkParams::new(8, 3, ConnectivityProfile::weak()), &mut rng).unwrap();
            let asg = assign_rlnc(&net, &Codebook::new(CodebookKind::Weak, seed, f));
            let irv = compute_irvs(&net, &asg);
            for a in 0..net.edge_count() {
                for b in a + 1..net.edge_count() {
                    let set: crate::netgraph::EdgeSet = [a, b].into_iter().collect();
                    let fr = crate::netgraph::flow_rank(&net, &set);
                    let rk = irv.irm(&[a, b]).rank();
                    prop_assert!(rk <= fr);
                    // equality w.h.p. at this field size
                    prop_assert_eq!(rk, fr);
                }
            }
        }
    }
}
