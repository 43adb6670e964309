//! Fault localization from error matrices.

use std::collections::BTreeSet;

use super::topology::ReceiverView;
use super::{PairSet, TomographyError};
use crate::codes::{virv, IdTable, IrvTable};
use crate::linalg::Matrix;
use crate::netgraph::{EdgeId, EdgeSet};
use crate::rscode::{rs_decode, RsParitySpec};

/// Bounds on the exhaustive search in [`locate_adversary_rlnc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocateCap {
    pub z_max: usize,
    /// Largest number of edge subsets the search may visit per column.
    pub max_subsets: u64,
}

impl LocateCap {
    pub fn new(z_max: usize) -> Self {
        LocateCap {
            z_max,
            max_subsets: 5_000_000,
        }
    }
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    (0..k).try_fold(1u64, |acc, i| acc.checked_mul(n - i).map(|x| x / (i + 1)))
}

/// Search state: an edge prefix whose IRVs are independent, kept in RREF form
/// so membership and extension checks stay cheap.
struct Search<'a> {
    irv: &'a IrvTable,
    target: &'a [u64],
    chosen: Vec<EdgeId>,
    all: bool,
    found: Vec<EdgeSet>,
}

impl Search<'_> {
    fn run(&mut self, start: usize, size: usize) {
        if !self.all && !self.found.is_empty() {
            return;
        }
        if self.chosen.len() == size {
            if self
                .irv
                .irm(&self.chosen)
                .col_space_contains(self.target)
                .unwrap_or(false)
            {
                self.found.push(self.chosen.iter().copied().collect());
            }
            return;
        }
        for e in start..self.irv.edge_count() {
            self.chosen.push(e);
            // a dependent prefix never appears in a minimal explanation
            if self.irv.irm(&self.chosen).rank() == self.chosen.len() {
                self.run(e + 1, size);
            }
            self.chosen.pop();
            if !self.all && !self.found.is_empty() {
                return;
            }
        }
    }
}

fn explain(
    irv: &IrvTable,
    column: &[u64],
    cap: &LocateCap,
    all: bool,
) -> Result<Vec<EdgeSet>, TomographyError> {
    if column.iter().all(|&v| v == 0) {
        return Ok(vec![EdgeSet::new()]);
    }
    let m = irv.edge_count() as u64;
    let visits = (1..=cap.z_max as u64).try_fold(0u64, |acc, k| {
        binomial(m, k).and_then(|b| acc.checked_add(b))
    });
    if visits.is_none_or(|v| v > cap.max_subsets) {
        return Err(TomographyError::ScaleCap(format!(
            "subset search over {m} edges up to size {} exceeds {}",
            cap.z_max, cap.max_subsets
        )));
    }
    for size in 1..=cap.z_max {
        let mut s = Search {
            irv,
            target: column,
            chosen: Vec::new(),
            all,
            found: Vec::new(),
        };
        s.run(0, size);
        if !s.found.is_empty() {
            return Ok(s.found);
        }
    }
    Err(TomographyError::ModelViolation(format!(
        "error column not explained by {} or fewer edges",
        cap.z_max
    )))
}

/// Every minimum-size edge set whose IRVs span `column`.
pub fn minimal_explanations(
    irv: &IrvTable,
    column: &[u64],
    cap: &LocateCap,
) -> Result<Vec<EdgeSet>, TomographyError> {
    explain(irv, column, cap, true)
}

/// Union of a minimum-size explanation for each of `rank(Ẑ)` independent columns.
pub fn locate_adversary_rlnc(
    zhat: &Matrix,
    irv: &IrvTable,
    cap: &LocateCap,
) -> Result<EdgeSet, TomographyError> {
    let (_, pivots) = zhat.rref();
    if pivots.len() > cap.z_max {
        return Err(TomographyError::ModelViolation(format!(
            "error matrix has rank {} > {}",
            pivots.len(),
            cap.z_max
        )));
    }
    let mut out = EdgeSet::new();
    for &c in &pivots {
        let found = explain(irv, &zhat.column(c), cap, false)?;
        out.extend(found[0].iter().copied());
    }
    Ok(out)
}

/// Every edge whose IRV lies in the column space of `z`.
pub fn locate_random_rlnc(z: &Matrix, irv: &IrvTable) -> Result<EdgeSet, TomographyError> {
    let basis = z.col_space_basis();
    if basis.cols() == 0 {
        return Ok(EdgeSet::new());
    }
    let mut out = EdgeSet::new();
    for e in 0..irv.edge_count() {
        if basis.col_space_contains(irv.theta(e))? {
            out.insert(e);
        }
    }
    Ok(out)
}

/// Erasure localization on the full error matrix `Ẑ = Y - T X`.
pub fn locate_erasures(
    y: &Matrix,
    x: &Matrix,
    t: &Matrix,
    irv: &IrvTable,
) -> Result<EdgeSet, TomographyError> {
    let zhat = y.sub(&t.mul(x)?)?;
    locate_random_rlnc(&zhat, irv)
}

/// Delay localization; `y_d` is the delay error matrix `Y - T X`, treated
/// exactly like an erasure error matrix.
pub fn locate_delays(y_d: &Matrix, irv: &IrvTable) -> Result<EdgeSet, TomographyError> {
    locate_random_rlnc(y_d, irv)
}

/// `L = Φ(In(r), d) Y - X_d`.
pub fn nrsc_residual(
    x: &Matrix,
    y: &Matrix,
    ids: &IdTable,
    d: usize,
    view: &ReceiverView,
) -> Result<Matrix, TomographyError> {
    if d > x.rows() {
        return Err(TomographyError::ModelViolation(format!(
            "depth {d} exceeds capacity {}",
            x.rows()
        )));
    }
    let phi = view.receiver_virm(ids, d)?;
    Ok(phi.mul(y)?.sub(&x.row_range(0, d))?)
}

/// Sparse recovery on each column of `L`; the union of supports are the
/// faulty node pairs. Exact when at most `d / 2` edges are faulty.
pub fn locate_adversary_rs(
    x: &Matrix,
    y: &Matrix,
    ids: &IdTable,
    d: usize,
    view: &ReceiverView,
) -> Result<PairSet, TomographyError> {
    let l = nrsc_residual(x, y, ids, d, view)?;
    let spec = RsParitySpec::new(ids.field(), ids.locators().to_vec(), d)?;
    let mut out = BTreeSet::new();
    for c in 0..l.cols() {
        let col = l.column(c);
        if col.iter().all(|&v| v == 0) {
            continue;
        }
        for (i, _) in rs_decode(&spec, &col, d / 2)? {
            out.insert(ids.pairs()[i]);
        }
    }
    Ok(out)
}

/// Every node pair whose depth-`d` VIRV lies in the column space of `L`.
pub fn locate_random_rs(
    x: &Matrix,
    y: &Matrix,
    ids: &IdTable,
    d: usize,
    view: &ReceiverView,
) -> Result<PairSet, TomographyError> {
    let l = nrsc_residual(x, y, ids, d, view)?;
    let basis = l.col_space_basis();
    let mut out = BTreeSet::new();
    if basis.cols() == 0 {
        return Ok(out);
    }
    for (i, &h) in ids.locators().iter().enumerate() {
        if basis.col_space_contains(&virv(ids.field(), h, d)?)? {
            out.insert(ids.pairs()[i]);
        }
    }
    Ok(out)
}
