//! Dense matrices over GF(q).
//!
//! Everything here is exact modular elimination. Column spaces are the main
//! currency of the tomography code, so there are helpers for canonical bases,
//! membership and intersection.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, Gf};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid locator id: {0}")]
    InvalidId(String),
    #[error("zero vector has no line representative")]
    ZeroVector,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Row-major dense matrix over a prime field.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matrix {
    field: Gf,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Matrix[{}x{} mod {}]",
            self.rows,
            self.cols,
            self.field.modulus()
        )?;
        for r in 0..self.rows {
            write!(f, "\n  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: Gf, rows: usize, cols: usize) -> Self {
        Matrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Gf, n: usize) -> Self {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Build from rows; entries are reduced mod q.
    pub fn from_rows(field: Gf, rows: &[Vec<u64>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            field,
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().map(|&v| field.reduce(v)).collect(),
        })
    }

    /// Build from columns, each of length `rows`.
    pub fn from_columns(field: Gf, rows: usize, columns: &[Vec<u64>]) -> Result<Self, LinalgError> {
        let mut m = Matrix::zeros(field, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(LinalgError::DimensionMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            for (i, &v) in c.iter().enumerate() {
                m.data[i * m.cols + j] = field.reduce(v);
            }
        }
        Ok(m)
    }

    pub fn column_vector(field: Gf, v: &[u64]) -> Self {
        Matrix::from_columns(field, v.len(), &[v.to_vec()]).expect("single column")
    }

    pub fn field(&self) -> Gf {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = self.field.reduce(v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<u64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    fn check_field(&self, other: &Matrix) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(
                FieldError::ModulusMismatch(self.field.modulus(), other.field.modulus()).into(),
            );
        }
        Ok(())
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = Matrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = f.add(*o, f.mul(a, b));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u64]) -> Result<Vec<u64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect())
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: impl Fn(u64, u64) -> u64,
    ) -> Result<Matrix, LinalgError> {
        self.check_field(other)?;
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        let f = self.field;
        self.zip_with(other, |a, b| f.add(a, b))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        let f = self.field;
        self.zip_with(other, |a, b| f.sub(a, b))
    }

    pub fn scale(&self, s: u64) -> Matrix {
        let f = self.field;
        Matrix {
            field: f,
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f.mul(v, s)).collect(),
        }
    }

    /// Columns `[start, end)`.
    pub fn column_range(&self, start: usize, end: usize) -> Matrix {
        assert!(
            start <= end && end <= self.cols,
            "column range out of bounds"
        );
        let mut m = Matrix::zeros(self.field, self.rows, end - start);
        for r in 0..self.rows {
            m.data[r * m.cols..(r + 1) * m.cols].copy_from_slice(&self.row(r)[start..end]);
        }
        m
    }

    /// Rows `[start, end)`.
    pub fn row_range(&self, start: usize, end: usize) -> Matrix {
        assert!(start <= end && end <= self.rows, "row range out of bounds");
        Matrix {
            field: self.field,
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let cols: Vec<Vec<u64>> = idx.iter().map(|&c| self.column(c)).collect();
        Matrix::from_columns(self.field, self.rows, &cols).expect("consistent column lengths")
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut m = Matrix::zeros(self.field, self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            let dst = &mut m.data[r * m.cols..(r + 1) * m.cols];
            dst[..self.cols].copy_from_slice(self.row(r));
            dst[self.cols..].copy_from_slice(other.row(r));
        }
        Ok(m)
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        (m, pivots)
    }

    fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field;
        let (rows, cols) = (self.rows, self.cols);
        let mut pivots = Vec::new();
        let mut pr = 0;
        for c in 0..cols {
            if pr == rows {
                break;
            }
            let Some(p) = (pr..rows).find(|&r| self.data[r * cols + c] != 0) else {
                continue;
            };
            if p != pr {
                for j in 0..cols {
                    self.data.swap(p * cols + j, pr * cols + j);
                }
            }
            let inv = f.inv(self.data[pr * cols + c]).expect("pivot is nonzero");
            for j in c..cols {
                let v = &mut self.data[pr * cols + j];
                *v = f.mul(*v, inv);
            }
            for r in 0..rows {
                if r == pr {
                    continue;
                }
                let factor = self.data[r * cols + c];
                if factor == 0 {
                    continue;
                }
                for j in c..cols {
                    let sub = f.mul(factor, self.data[pr * cols + j]);
                    let v = &mut self.data[r * cols + j];
                    *v = f.sub(*v, sub);
                }
            }
            pivots.push(c);
            pr += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    pub fn invert(&self) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot invert {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let aug = self.hstack(&Matrix::identity(self.field, n))?;
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(LinalgError::Singular);
        }
        Ok(r.column_range(n, 2 * n))
    }

    /// Some `x` with `self * x = b`, or `None` if `b` is outside the column space.
    pub fn solve(&self, b: &[u64]) -> Result<Option<Vec<u64>>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "rhs of length {} for {} rows",
                b.len(),
                self.rows
            )));
        }
        let aug = self.hstack(&Matrix::column_vector(self.field, b))?;
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![0; self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get(row, self.cols);
        }
        Ok(Some(x))
    }

    /// Canonical basis of the column space: the nonzero rows of `rref(selfᵀ)`,
    /// returned as columns. Two matrices span the same space iff their
    /// canonical bases are equal.
    pub fn col_space_basis(&self) -> Matrix {
        let (r, pivots) = self.transpose().rref();
        r.row_range(0, pivots.len()).transpose()
    }

    pub fn col_space_contains(&self, v: &[u64]) -> Result<bool, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against {} rows",
                v.len(),
                self.rows
            )));
        }
        let with = self.hstack(&Matrix::column_vector(self.field, v))?;
        Ok(with.rank() == self.rank())
    }

    /// Basis of `col(self) ∩ col(other)` by Zassenhaus elimination.
    ///
    /// Rows `[a | a]` for each column `a` of `self` and `[b | 0]` for each
    /// column `b` of `other` are row-reduced; the right halves of the rows whose
    /// left half vanished span the intersection. A trivial intersection comes
    /// back as a matrix with zero columns.
    pub fn col_space_intersect(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "intersect spaces in dimensions {} and {}",
                self.rows, other.rows
            )));
        }
        let f = self.field;
        let n = self.rows;
        let a = self.col_space_basis();
        let b = other.col_space_basis();
        let mut z = Matrix::zeros(f, a.cols + b.cols, 2 * n);
        for j in 0..a.cols {
            for i in 0..n {
                let v = a.get(i, j);
                z.data[j * 2 * n + i] = v;
                z.data[j * 2 * n + n + i] = v;
            }
        }
        for j in 0..b.cols {
            let r = a.cols + j;
            for i in 0..n {
                z.data[r * 2 * n + i] = b.get(i, j);
            }
        }
        let pivots = z.rref_in_place();
        let cols: Vec<Vec<u64>> = pivots
            .iter()
            .enumerate()
            .filter(|(_, &pc)| pc >= n)
            .map(|(r, _)| z.row(r)[n..].to_vec())
            .collect();
        Matrix::from_columns(f, n, &cols)
    }
}

/// `depth x ids.len()` matrix whose column j is `[id_j, id_j^2, ..., id_j^depth]`.
pub fn vandermonde(field: Gf, ids: &[u64], depth: usize) -> Result<Matrix, LinalgError> {
    for (i, &id) in ids.iter().enumerate() {
        if field.reduce(id) == 0 {
            return Err(LinalgError::InvalidId(format!(
                "id at position {i} is zero"
            )));
        }
        if ids[..i]
            .iter()
            .any(|&o| field.reduce(o) == field.reduce(id))
        {
            return Err(LinalgError::InvalidId(format!("id {id} repeated")));
        }
    }
    let mut m = Matrix::zeros(field, depth, ids.len());
    for (j, &id) in ids.iter().enumerate() {
        let mut p = field.reduce(id);
        for i in 0..depth {
            m.data[i * ids.len() + j] = p;
            p = field.mul(p, id);
        }
    }
    Ok(m)
}

/// Canonical representative of a one-dimensional subspace: the spanning
/// vector scaled so its first nonzero coordinate is 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LineRep(Vec<u64>);

impl LineRep {
    pub fn new(field: Gf, v: &[u64]) -> Result<Self, LinalgError> {
        let lead = v
            .iter()
            .map(|&x| field.reduce(x))
            .find(|&x| x != 0)
            .ok_or(LinalgError::ZeroVector)?;
        let s = field.inv(lead)?;
        Ok(LineRep(
            v.iter().map(|&x| field.mul(field.reduce(x), s)).collect(),
        ))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

pub fn canonical_line(field: Gf, v: &[u64]) -> Result<LineRep, LinalgError> {
    LineRep::new(field, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf7() -> Gf {
        Gf::new(7).unwrap()
    }

    fn m7(rows: &[&[u64]]) -> Matrix {
        Matrix::from_rows(gf7(), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::identity(gf7(), 2).rank(), 2);
        assert_eq!(Matrix::zeros(gf7(), 3, 2).rank(), 0);
        assert_eq!(m7(&[&[1, 2], &[2, 4]]).rank(), 1);
    }

    #[test]
    fn invert_examples() {
        let id = Matrix::identity(gf7(), 3);
        assert_eq!(id.invert().unwrap(), id);
        assert_eq!(
            m7(&[&[2, 0], &[0, 1]]).invert().unwrap(),
            m7(&[&[4, 0], &[0, 1]])
        );
        assert_eq!(m7(&[&[1, 1], &[2, 2]]).invert(), Err(LinalgError::Singular));
        assert!(matches!(
            Matrix::zeros(gf7(), 2, 3).invert(),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn membership_examples() {
        assert!(Matrix::identity(gf7(), 2)
            .col_space_contains(&[3, 4])
            .unwrap());
        assert!(!m7(&[&[1], &[0]]).col_space_contains(&[0, 1]).unwrap());
        // IRVs of e2 and e3 in the five-edge example network are both multiples of [0,1]
        let theta_e2_e3 = m7(&[&[0, 0], &[2, 1]]);
        assert!(theta_e2_e3.col_space_contains(&[0, 1]).unwrap());
    }

    #[test]
    fn intersection_examples() {
        let id = Matrix::identity(gf7(), 2);
        assert_eq!(id.col_space_intersect(&id).unwrap().rank(), 2);
        let e1 = m7(&[&[1], &[0]]);
        let e2 = m7(&[&[0], &[1]]);
        let empty = e1.col_space_intersect(&e2).unwrap();
        assert_eq!((empty.rows(), empty.cols()), (2, 0));
    }

    #[test]
    fn fake_candidate_intersection() {
        // Three independent IRVs t2, t3, t4 in GF(7)^3 and t1 = t2 + 2 t3 - t4,
        // so span(t1, t4) meets span(t2, t3) exactly in <t2 + 2 t3>.
        let f = gf7();
        let t2 = vec![1, 0, 0];
        let t3 = vec![0, 1, 0];
        let t4 = vec![0, 0, 1];
        let t1: Vec<u64> = (0..3)
            .map(|i| f.sub(f.add(t2[i], f.mul(2, t3[i])), t4[i]))
            .collect();
        let a = Matrix::from_columns(f, 3, &[t2.clone(), t3.clone()]).unwrap();
        let b = Matrix::from_columns(f, 3, &[t1, t4]).unwrap();
        let inter = a.col_space_intersect(&b).unwrap();
        assert_eq!(inter.cols(), 1);
        let expected: Vec<u64> = (0..3).map(|i| f.add(t2[i], f.mul(2, t3[i]))).collect();
        assert_eq!(
            LineRep::new(f, &inter.column(0)).unwrap(),
            LineRep::new(f, &expected).unwrap()
        );
    }

    #[test]
    fn vandermonde_examples() {
        let v = vandermonde(gf7(), &[2, 3], 2).unwrap();
        assert_eq!(v, m7(&[&[2, 3], &[4, 2]]));
        assert!(v.invert().is_ok());
        assert!(matches!(
            vandermonde(gf7(), &[2, 2], 2),
            Err(LinalgError::InvalidId(_))
        ));
        assert!(matches!(
            vandermonde(gf7(), &[0, 2], 2),
            Err(LinalgError::InvalidId(_))
        ));
    }

    #[test]
    fn canonical_line_examples() {
        let f = gf7();
        assert_eq!(canonical_line(f, &[0, 2]).unwrap().as_slice(), &[0, 1]);
        assert_eq!(canonical_line(f, &[3, 2]).unwrap().as_slice(), &[1, 3]);
        assert_eq!(canonical_line(f, &[0, 0]), Err(LinalgError::ZeroVector));
    }

    #[test]
    fn solve_finds_preimage() {
        let a = m7(&[&[1, 2, 0], &[0, 1, 1]]);
        let x = a.solve(&[3, 5]).unwrap().unwrap();
        assert_eq!(a.mul_vec(&x).unwrap(), vec![3, 5]);
        assert_eq!(m7(&[&[1], &[0]]).solve(&[0, 1]).unwrap(), None);
    }

    fn random_matrix(f: Gf, rows: usize, cols: usize, rank_cap: usize, seed: u64) -> Matrix {
        // product of rows x k and k x cols has rank <= k, which gives
        // interesting intersections in small dimensions
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rank_cap.max(1);
        let mut a = Matrix::zeros(f, rows, k);
        let mut b = Matrix::zeros(f, k, cols);
        for v in a.data.iter_mut().chain(b.data.iter_mut()) {
            *v = f.sample(&mut rng);
        }
        a.mul(&b).unwrap()
    }

    proptest! {
        #[test]
        fn dimension_formula(seed in any::<u64>(), n in 1usize..6, ca in 1usize..5, cb in 1usize..5,
                             ka in 1usize..5, kb in 1usize..5, q in prop::sample::select(vec![2u64, 3, 7, 13])) {
            let f = Gf::new(q).unwrap();
            let a = random_matrix(f, n, ca, ka, seed);
            let b = random_matrix(f, n, cb, kb, seed ^ 0x9e37);
            let inter = a.col_space_intersect(&b).unwrap();
            prop_assert_eq!(a.rank() + b.rank(), a.hstack(&b).unwrap().rank() + inter.rank());
            for c in inter.columns() {
                prop_assert!(a.col_space_contains(&c).unwrap());
                prop_assert!(b.col_space_contains(&c).unwrap());
            }
        }

        #[test]
        fn inverse_is_two_sided(seed in any::<u64>(), n in 1usize..6) {
            let f = Gf::new(13).unwrap();
            let m = random_matrix(f, n, n, n, seed);
            if let Ok(inv) = m.invert() {
                prop_assert_eq!(inv.mul(&m).unwrap(), Matrix::identity(f, n));
                prop_assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(f, n));
            } else {
                prop_assert!(m.rank() < n);
            }
        }

        #[test]
        fn square_vandermonde_invertible(k in 1usize..7, start in 1u64..6) {
            let f = Gf::new(13).unwrap();
            let ids: Vec<u64> = (0..k as u64).map(|i| (start + i - 1) % 12 + 1).collect();
            prop_assert!(vandermonde(f, &ids, k).unwrap().invert().is_ok());
        }

        #[test]
        fn canonical_line_is_scale_invariant(v in prop::collection::vec(0u64..13, 1..6), alpha in 1u64..13) {
            let f = Gf::new(13).unwrap();
            prop_assume!(v.iter().any(|&x| x != 0));
            let scaled: Vec<u64> = v.iter().map(|&x| f.mul(x, alpha)).collect();
            prop_assert_eq!(LineRep::new(f, &v).unwrap(), LineRep::new(f, &scaled).unwrap());
        }
    }
}
