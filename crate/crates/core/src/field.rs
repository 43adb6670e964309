//! Prime-field arithmetic.
//!
//! [`Gf`] is the field descriptor (just the modulus) and is what the matrix and
//! coding code works with on raw `u64` residues. [`FieldElement`] carries its
//! modulus along, so mixing elements of different fields is caught at runtime.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The Mersenne prime 2^31 - 1.
pub const DEFAULT_MODULUS: u64 = (1 << 31) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is too large (must be below 2^32)")]
    ModulusTooLarge(u64),
    #[error("mismatched moduli {0} and {1}")]
    ModulusMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
}

/// A prime field GF(q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Gf {
    q: u64,
}

impl Gf {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q >= 1 << 32 {
            return Err(FieldError::ModulusTooLarge(q));
        }
        if !is_prime(q) {
            return Err(FieldError::NotPrime(q));
        }
        Ok(Gf { q })
    }

    pub fn default_field() -> Self {
        Gf { q: DEFAULT_MODULUS }
    }

    #[inline]
    pub fn modulus(self) -> u64 {
        self.q
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u64 {
        v % self.q
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        a * b % self.q
    }

    /// `a^k` by square-and-multiply; `pow(0, 0) = 1`.
    pub fn pow(self, a: u64, mut k: u64) -> u64 {
        let mut base = a % self.q;
        let mut acc = 1 % self.q;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self, a: u64) -> Result<u64, FieldError> {
        if a % self.q == 0 {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.pow(a, self.q - 2))
    }

    /// Uniform draw from `[0, q)`.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.q)
    }

    /// Uniform draw from `[1, q)`.
    pub fn sample_nonzero<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        rng.gen_range(1..self.q)
    }

    /// Map an arbitrary `u64` stream onto a uniform residue by rejection.
    ///
    /// `next` is called until it yields a value below the largest multiple of q.
    pub fn uniform_from_words(self, mut next: impl FnMut() -> u64) -> u64 {
        let zone = u64::MAX - (u64::MAX % self.q);
        loop {
            let w = next();
            if w < zone {
                return w % self.q;
            }
        }
    }

    pub fn elem(self, v: u64) -> FieldElement {
        FieldElement {
            value: v % self.q,
            modulus: self.q,
        }
    }
}

impl TryFrom<u64> for Gf {
    type Error = FieldError;
    fn try_from(q: u64) -> Result<Self, FieldError> {
        Gf::new(q)
    }
}

impl From<Gf> for u64 {
    fn from(f: Gf) -> u64 {
        f.q
    }
}

impl Default for Gf {
    fn default() -> Self {
        Gf::default_field()
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A residue tagged with its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl FieldElement {
    pub fn value(self) -> u64 {
        self.value
    }

    pub fn field(self) -> Gf {
        Gf { q: self.modulus }
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    fn same_field(self, other: FieldElement) -> Result<Gf, FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.field())
    }

    pub fn arith(self, op: ArithOp, other: FieldElement) -> Result<FieldElement, FieldError> {
        let f = self.same_field(other)?;
        let v = match op {
            ArithOp::Add => f.add(self.value, other.value),
            ArithOp::Sub => f.sub(self.value, other.value),
            ArithOp::Mul => f.mul(self.value, other.value),
        };
        Ok(f.elem(v))
    }

    pub fn add(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.arith(ArithOp::Add, other)
    }

    pub fn sub(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.arith(ArithOp::Sub, other)
    }

    pub fn mul(self, other: FieldElement) -> Result<FieldElement, FieldError> {
        self.arith(ArithOp::Mul, other)
    }

    pub fn inv(self) -> Result<FieldElement, FieldError> {
        let f = self.field();
        Ok(f.elem(f.inv(self.value)?))
    }

    pub fn pow(self, k: u64) -> FieldElement {
        let f = self.field();
        f.elem(f.pow(self.value, k))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
