//! Inference from what the receiver sees: topology estimation and fault
//! localization.
//!
//! Every function here takes receiver-observable inputs only: received
//! matrices, decoded messages, codebooks, ID tables and the receiver's own
//! incoming edges. Ground truth never enters.

mod locate;
mod topology;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::CodesError;
use crate::field::Gf;
use crate::linalg::{canonical_line, LinalgError, LineRep, Matrix};
use crate::netgraph::GraphError;
use crate::rscode::RsError;

pub use locate::{
    locate_adversary_rlnc, locate_adversary_rs, locate_delays, locate_erasures, locate_random_rlnc,
    locate_random_rs, minimal_explanations, nrsc_residual, LocateCap,
};
pub use topology::{
    enumerate_candidates, find_irv_erasure, find_topo, find_topo_rs, header_differences,
    topo_adv_rlnc, EnumerationSpec, ReceiverView, TopoRsOutcome,
};

/// Node pair with parallel index, as used by NRSC IDs.
pub type NodePair = (usize, usize, u32);
pub type PairSet = BTreeSet<NodePair>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TomographyError {
    #[error("no candidate graph matches the received transform")]
    NoMatch,
    #[error("search exceeds configured cap: {0}")]
    ScaleCap(String),
    #[error("model assumptions violated: {0}")]
    ModelViolation(String),
    #[error("need at least {0} traces")]
    TooFewTraces(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Codes(#[from] CodesError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<RsError> for TomographyError {
    fn from(e: RsError) -> Self {
        TomographyError::ModelViolation(e.to_string())
    }
}

/// Deduplicated one-dimensional subspaces with the trace pairs that produced them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLines {
    lines: BTreeMap<LineRep, Vec<(usize, usize)>>,
}

impl CandidateLines {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, line: LineRep, provenance: (usize, usize)) {
        self.lines.entry(line).or_default().push(provenance);
    }

    /// Insert the line spanned by `v`; zero vectors are ignored.
    pub fn insert_vector(&mut self, field: Gf, v: &[u64], provenance: (usize, usize)) {
        if let Ok(line) = canonical_line(field, v) {
            self.insert(line, provenance);
        }
    }

    pub fn contains(&self, line: &LineRep) -> bool {
        self.lines.contains_key(line)
    }

    pub fn contains_vector(&self, field: Gf, v: &[u64]) -> bool {
        canonical_line(field, v).is_ok_and(|l| self.contains(&l))
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LineRep> {
        self.lines.keys()
    }

    pub fn provenance(&self, line: &LineRep) -> Option<&[(usize, usize)]> {
        self.lines.get(line).map(|v| v.as_slice())
    }
}

/// All rank-one pairwise intersections of the column spaces of `matrices`.
pub fn find_irv(matrices: &[Matrix]) -> Result<CandidateLines, TomographyError> {
    let bases: Vec<Matrix> = matrices.iter().map(|m| m.col_space_basis()).collect();
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|i| (i + 1..bases.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| bases[i].cols() > 0 && bases[j].cols() > 0)
        .collect();
    let hits: Vec<((usize, usize), Option<Vec<u64>>)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let shared = bases[i].col_space_intersect(&bases[j])?;
            Ok(((i, j), (shared.cols() == 1).then(|| shared.column(0))))
        })
        .collect::<Result<_, LinalgError>>()?;
    let mut cand = CandidateLines::new();
    for (prov, v) in hits {
        if let (Some(v), Some(m)) = (v, matrices.first()) {
            cand.insert_vector(m.field(), &v, prov);
        }
    }
    Ok(cand)
}

/// Fraction of pairs of nonzero error matrices whose column spaces meet only
/// in zero; an estimate of how often two generations fail independently.
pub fn estimate_dependence(matrices: &[Matrix]) -> Result<f64, TomographyError> {
    if matrices.len() < 2 {
        return Err(TomographyError::TooFewTraces(2));
    }
    let bases: Vec<Matrix> = matrices
        .iter()
        .map(|m| m.col_space_basis())
        .filter(|b| b.cols() > 0)
        .collect();
    if bases.len() < 2 {
        return Err(TomographyError::TooFewTraces(2));
    }
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|i| (i + 1..bases.len()).map(move |j| (i, j)))
        .collect();
    let independent = pairs
        .par_iter()
        .map(|&(i, j)| {
            bases[i]
                .col_space_intersect(&bases[j])
                .map(|m| m.cols() == 0)
        })
        .collect::<Result<Vec<bool>, _>>()?
        .into_iter()
        .filter(|&b| b)
        .count();
    Ok(independent as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Recovered {
    Topology { network: String },
    EdgeSet { edges: Vec<String> },
    PairSet { pairs: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub traces: usize,
    pub candidate_lines: Option<usize>,
    pub dependence_estimate: Option<f64>,
    pub decode_failures: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub recovered: Recovered,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::compute_irvs;
    use crate::codes::fixtures::five_edge_assignment;

    fn gf7() -> Gf {
        Gf::new(7).unwrap()
    }

    #[test]
    fn find_irv_fake_candidate() {
        // t1 = t2 + 2 t3 - t4 with t2, t3, t4 independent
        let f = gf7();
        let t2 = vec![1, 0, 0];
        let t3 = vec![0, 1, 0];
        let t4 = vec![0, 0, 1];
        let t1: Vec<u64> = (0..3)
            .map(|i| f.sub(f.add(t2[i], f.mul(2, t3[i])), t4[i]))
            .collect();
        let a = Matrix::from_columns(f, 3, &[t2.clone(), t3.clone()]).unwrap();
        let b = Matrix::from_columns(f, 3, &[t1, t4]).unwrap();
        let cand = find_irv(&[a, b]).unwrap();
        assert_eq!(cand.len(), 1);
        assert!(cand.contains_vector(f, &[1, 2, 0]));
        assert_eq!(
            cand.provenance(&canonical_line(f, &[1, 2, 0]).unwrap()),
            Some(&[(0, 1)][..])
        );
    }

    #[test]
    fn find_irv_single_or_zero() {
        let f = gf7();
        assert!(find_irv(&[Matrix::identity(f, 2)]).unwrap().is_empty());
        assert!(find_irv(&[]).unwrap().is_empty());
        let z = Matrix::zeros(f, 2, 3);
        assert!(find_irv(&[z.clone(), z]).unwrap().is_empty());
    }

    #[test]
    fn find_irv_shared_edge() {
        let f = Gf::default_field();
        let (net, asg) = five_edge_assignment(f);
        let irv = compute_irvs(&net, &asg);
        // θ(e2) and θ(e3) coincide; single failures on each yield that line
        let a = irv
            .irm(&[1])
            .mul(&Matrix::from_rows(f, &[vec![1, 5, 9]]).unwrap())
            .unwrap();
        let b = irv
            .irm(&[2])
            .mul(&Matrix::from_rows(f, &[vec![4, 4]]).unwrap())
            .unwrap();
        let cand = find_irv(&[a, b, irv.irm(&[0, 3])]).unwrap();
        assert_eq!(cand.len(), 1);
        assert!(cand.contains_vector(f, irv.theta(4)));
        assert_eq!(net.edge_count(), 5);
    }

    #[test]
    fn dependence_estimates() {
        let f = gf7();
        let e1 = Matrix::column_vector(f, &[1, 0]);
        let e2 = Matrix::column_vector(f, &[0, 1]);
        assert_eq!(estimate_dependence(&[e1.clone(), e2.clone()]).unwrap(), 1.0);
        assert_eq!(
            estimate_dependence(&[e1.clone(), e1.clone(), e1.clone()]).unwrap(),
            0.0
        );
        assert_eq!(
            estimate_dependence(&[e1.clone()]),
            Err(TomographyError::TooFewTraces(2))
        );
    }
}
