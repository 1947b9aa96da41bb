//! GF(2^8) arithmetic, fixed-length packet payloads, random linear
//! combination and Gaussian elimination.
//!
//! Elements are bytes; addition is XOR and multiplication reduces modulo
//! x^8 + x^4 + x^3 + x + 1 (`0x11B`). Multiplication goes through log/exp
//! tables generated at compile time from the primitive element `0x03`
//! (`0x02` is not a generator for this polynomial).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub};

use rand::Rng;
use thiserror::Error;

/// Reduction polynomial, including the x^8 term.
pub const REDUCTION_POLY: u16 = 0x11B;

static EXP: [u8; 512] = build_exp_table();
static LOG: [u8; 256] = build_log_table();

const fn xtime(v: u8) -> u8 {
    let shifted = (v as u16) << 1;
    if shifted & 0x100 != 0 {
        (shifted ^ REDUCTION_POLY) as u8
    } else {
        shifted as u8
    }
}

// multiply by the generator 0x03 = x + 1
const fn times_generator(v: u8) -> u8 {
    xtime(v) ^ v
}

const fn build_exp_table() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val: u8 = 1;
    let mut i = 0usize;
    while i < 255 {
        table[i] = val;
        table[i + 255] = val;
        val = times_generator(val);
        i += 1;
    }
    table[510] = table[0];
    table[511] = table[1];
    table
}

const fn build_log_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut val: u8 = 1;
    let mut i = 0usize;
    while i < 255 {
        table[val as usize] = i as u8;
        val = times_generator(val);
        i += 1;
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("empty input")]
    Empty,
    #[error("singular system: rank {rank} < {unknowns} unknowns")]
    Singular { rank: usize, unknowns: usize },
}

/// An element of GF(2^8).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElem(pub u8);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inv(self) -> Result<FieldElem, GfError> {
        if self.0 == 0 {
            return Err(GfError::ZeroInverse);
        }
        let log = LOG[self.0 as usize] as usize;
        Ok(FieldElem(EXP[(255 - log) % 255]))
    }

    /// Uniformly random nonzero element.
    pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> FieldElem {
        FieldElem(rng.random_range(1..=255u8))
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for FieldElem {
    fn from(v: u8) -> Self {
        FieldElem(v)
    }
}

impl Add for FieldElem {
    type Output = FieldElem;
    #[inline]
    fn add(self, rhs: FieldElem) -> FieldElem {
        FieldElem(self.0 ^ rhs.0)
    }
}

impl Sub for FieldElem {
    type Output = FieldElem;
    #[inline]
    fn sub(self, rhs: FieldElem) -> FieldElem {
        FieldElem(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElem {
    #[inline]
    fn add_assign(&mut self, rhs: FieldElem) {
        self.0 ^= rhs.0;
    }
}

impl Mul for FieldElem {
    type Output = FieldElem;
    #[inline]
    fn mul(self, rhs: FieldElem) -> FieldElem {
        if self.0 == 0 || rhs.0 == 0 {
            return FieldElem(0);
        }
        let idx = LOG[self.0 as usize] as usize + LOG[rhs.0 as usize] as usize;
        FieldElem(EXP[idx])
    }
}

impl MulAssign for FieldElem {
    #[inline]
    fn mul_assign(&mut self, rhs: FieldElem) {
        *self = *self * rhs;
    }
}

/// A packet body: `P` symbols of GF(2^8).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Payload(Vec<u8>);

impl Payload {
    pub fn zeroed(len: usize) -> Self {
        Payload(vec![0; len])
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Payload(bytes)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; len];
        rng.fill(&mut bytes[..]);
        Payload(bytes)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// `self += coeff * other`, symbol-wise.
    pub fn add_scaled(&mut self, coeff: FieldElem, other: &Payload) {
        debug_assert_eq!(self.len(), other.len());
        match coeff.0 {
            0 => {}
            1 => {
                for (a, b) in self.0.iter_mut().zip(&other.0) {
                    *a ^= b;
                }
            }
            c => {
                let log_c = LOG[c as usize] as usize;
                for (a, &b) in self.0.iter_mut().zip(&other.0) {
                    if b != 0 {
                        *a ^= EXP[log_c + LOG[b as usize] as usize];
                    }
                }
            }
        }
    }

    /// `self *= coeff`, symbol-wise.
    pub fn scale(&mut self, coeff: FieldElem) {
        match coeff.0 {
            0 => self.0.iter_mut().for_each(|b| *b = 0),
            1 => {}
            c => {
                let log_c = LOG[c as usize] as usize;
                for b in self.0.iter_mut() {
                    if *b != 0 {
                        *b = EXP[log_c + LOG[*b as usize] as usize];
                    }
                }
            }
        }
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payload(")?;
        for b in self.0.iter().take(8) {
            write!(f, "{b:02x}")?;
        }
        if self.0.len() > 8 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

/// Symbol-wise `sum_i coeffs[i] * payloads[i]`.
pub fn combine(payloads: &[&Payload], coeffs: &[FieldElem]) -> Result<Payload, GfError> {
    if payloads.is_empty() {
        return Err(GfError::Empty);
    }
    if payloads.len() != coeffs.len() {
        return Err(GfError::LengthMismatch {
            expected: payloads.len(),
            found: coeffs.len(),
        });
    }
    let len = payloads[0].len();
    let mut out = Payload::zeroed(len);
    for (p, &c) in payloads.iter().zip(coeffs) {
        if p.len() != len {
            return Err(GfError::LengthMismatch {
                expected: len,
                found: p.len(),
            });
        }
        out.add_scaled(c, p);
    }
    Ok(out)
}

/// One equation: coefficients over the unknowns and the observed payload.
pub type Equation = (Vec<FieldElem>, Payload);

/// Solves `A x = b` over GF(2^8) for `unknowns` payload-valued unknowns.
///
/// Gauss-Jordan elimination, pivoting on the first row with a nonzero entry
/// in the current column. Extra (redundant) rows are allowed.
pub fn solve_linear_system(rows: Vec<Equation>, unknowns: usize) -> Result<Vec<Payload>, GfError> {
    if unknowns == 0 {
        return Ok(Vec::new());
    }
    if rows.is_empty() {
        return Err(GfError::Singular { rank: 0, unknowns });
    }
    let payload_len = rows[0].1.len();
    for (coeffs, rhs) in &rows {
        if coeffs.len() != unknowns {
            return Err(GfError::LengthMismatch {
                expected: unknowns,
                found: coeffs.len(),
            });
        }
        if rhs.len() != payload_len {
            return Err(GfError::LengthMismatch {
                expected: payload_len,
                found: rhs.len(),
            });
        }
    }

    let mut rows = rows;
    let mut rank = 0;
    for col in 0..unknowns {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r].0[col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = rows[rank].0[col].inv()?;
        {
            let (coeffs, rhs) = &mut rows[rank];
            for c in coeffs.iter_mut() {
                *c *= inv;
            }
            rhs.scale(inv);
        }
        let (head, tail) = rows.split_at_mut(rank);
        let (pivot_row, rest) = tail.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(rest.iter_mut()) {
            let factor = row.0[col];
            if factor.is_zero() {
                continue;
            }
            for (c, &p) in row.0.iter_mut().zip(&pivot_row.0) {
                *c += factor * p;
            }
            row.1.add_scaled(factor, &pivot_row.1);
        }
        rank += 1;
    }

    if rank < unknowns {
        return Err(GfError::Singular { rank, unknowns });
    }
    rows.truncate(unknowns);
    Ok(rows.into_iter().map(|(_, rhs)| rhs).collect())
}
