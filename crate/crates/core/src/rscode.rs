//! Sparse recovery against a Vandermonde parity-check matrix.
//!
//! `H` has one column `[h, h², .., h^l1]` per locator `h`. Given `e = H b` with
//! `b` at most `floor(l1 / 2)`-sparse, [`rs_decode`] recovers `b` by syndrome
//! decoding. Powers start at 1, so `S_j = Σ (b_i h_i) h_i^{j-1}` and the
//! magnitudes found by the key equation are `b_i h_i`; they are recovered
//! directly from a small Vandermonde solve instead.

use std::collections::HashSet;

use thiserror::Error;

use crate::field::Gf;
use crate::linalg::{vandermonde, LinalgError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RsError {
    #[error("invalid parity spec: {0}")]
    InvalidSpec(String),
    #[error("z_max = {z_max} exceeds floor(l1 / 2) for l1 = {l1}")]
    Precondition { z_max: usize, l1: usize },
    #[error("syndrome has length {0}, expected {1}")]
    LengthMismatch(usize, usize),
    #[error("support index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("decode failure: {0}")]
    DecodeFailure(String),
}

impl From<LinalgError> for RsError {
    fn from(e: LinalgError) -> Self {
        RsError::DecodeFailure(e.to_string())
    }
}

/// Locators `h_1..h_l2` and depth `l1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsParitySpec {
    field: Gf,
    locators: Vec<u64>,
    inverses: Vec<u64>,
    depth: usize,
}

/// Sparse vector as `(index, value)` pairs, sorted by index, values nonzero.
pub type SparseVec = Vec<(usize, u64)>;

impl RsParitySpec {
    pub fn new(field: Gf, locators: Vec<u64>, depth: usize) -> Result<Self, RsError> {
        let mut seen = HashSet::new();
        for &h in &locators {
            if h % field.modulus() == 0 {
                return Err(RsError::InvalidSpec("zero locator".into()));
            }
            if !seen.insert(h % field.modulus()) {
                return Err(RsError::InvalidSpec(format!("repeated locator {h}")));
            }
        }
        if locators.len() <= depth {
            return Err(RsError::InvalidSpec(format!(
                "need more locators ({}) than depth ({depth})",
                locators.len()
            )));
        }
        let inverses = locators
            .iter()
            .map(|&h| field.inv(h).expect("nonzero"))
            .collect();
        Ok(RsParitySpec {
            field,
            locators,
            inverses,
            depth,
        })
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn locators(&self) -> &[u64] {
        &self.locators
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

/// `H b`.
pub fn rs_syndrome(spec: &RsParitySpec, b: &[(usize, u64)]) -> Result<Vec<u64>, RsError> {
    let f = spec.field;
    let mut e = vec![0u64; spec.depth];
    for &(i, v) in b {
        let h = *spec.locators.get(i).ok_or(RsError::IndexOutOfRange(i))?;
        let mut p = h;
        for ej in e.iter_mut() {
            *ej = f.add(*ej, f.mul(v, p));
            p = f.mul(p, h);
        }
    }
    Ok(e)
}

/// The unique `z_max`-sparse `b` with `H b = e`.
pub fn rs_decode(spec: &RsParitySpec, e: &[u64], z_max: usize) -> Result<SparseVec, RsError> {
    let f = spec.field;
    let l1 = spec.depth;
    if z_max > l1 / 2 {
        return Err(RsError::Precondition { z_max, l1 });
    }
    if e.len() != l1 {
        return Err(RsError::LengthMismatch(e.len(), l1));
    }
    let e: Vec<u64> = e.iter().map(|&v| f.reduce(v)).collect();
    if e.iter().all(|&v| v == 0) {
        return Ok(Vec::new());
    }

    let lambda = berlekamp_massey(f, &e);
    let nu = lambda.len() - 1;
    if nu > z_max {
        return Err(RsError::DecodeFailure(format!(
            "locator degree {nu} exceeds {z_max}"
        )));
    }
    let support: Vec<usize> = (0..spec.locators.len())
        .filter(|&i| eval(f, &lambda, spec.inverses[i]) == 0)
        .collect();
    if support.len() != nu {
        return Err(RsError::DecodeFailure(format!(
            "locator polynomial of degree {nu} has {} roots among the locators",
            support.len()
        )));
    }

    let hs: Vec<u64> = support.iter().map(|&i| spec.locators[i]).collect();
    let v = vandermonde(f, &hs, nu)?;
    let values = v
        .solve(&e[..nu])?
        .ok_or_else(|| RsError::DecodeFailure("singular magnitude system".into()))?;
    let b: SparseVec = support.into_iter().zip(values).collect();
    if b.iter().any(|&(_, v)| v == 0) || rs_syndrome(spec, &b)? != e {
        return Err(RsError::DecodeFailure(
            "no sparse solution reproduces the syndrome".into(),
        ));
    }
    Ok(b)
}

/// Shortest LFSR `Λ` (with `Λ_0 = 1`) generating `s`.
fn berlekamp_massey(f: Gf, s: &[u64]) -> Vec<u64> {
    let mut c = vec![1u64];
    let mut b = vec![1u64];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut bb = 1u64;
    for n in 0..s.len() {
        let mut d = s[n];
        for i in 1..=l.min(c.len() - 1) {
            d = f.add(d, f.mul(c[i], s[n - i]));
        }
        if d == 0 {
            m += 1;
            continue;
        }
        let coef = f.mul(d, f.inv(bb).expect("bb nonzero"));
        let prev = c.clone();
        if c.len() < b.len() + m {
            c.resize(b.len() + m, 0);
        }
        for (i, &bi) in b.iter().enumerate() {
            c[i + m] = f.sub(c[i + m], f.mul(coef, bi));
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            bb = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    c.truncate(l + 1);
    c.resize(l + 1, 0);
    c
}

fn eval(f: Gf, poly: &[u64], x: u64) -> u64 {
    poly.iter().rev().fold(0, |acc, &c| f.add(f.mul(acc, x), c))
}
