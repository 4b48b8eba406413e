//! Arithmetic over GF(2^8) and GF(2^16) and dense matrices over them.
//!
//! Every random linear code in the crate is built on these types. Elements are
//! plain integers; addition is XOR and multiplication goes through log/antilog
//! tables generated from a primitive polynomial:
//!
//! ```text
//! GF(2^8):  x^8 + x^4 + x^3 + x^2 + 1        (0x11d)
//! GF(2^16): x^16 + x^12 + x^3 + x + 1        (0x1100b)
//! ```
//!
//! Payloads are streams of field symbols. A coded symbol stream is a linear
//! combination of source streams with one coefficient per source, applied at
//! every symbol position.

use std::fmt::Debug;
use std::hash::Hash;
use std::sync::LazyLock;

use rand::Rng;

use crate::error::{Error, Result};

/// Log/antilog tables for a binary extension field with generator `x`.
struct LogTables {
    exp: Vec<u16>,
    log: Vec<u16>,
    order: usize,
}

impl LogTables {
    fn build(bits: usize, poly: u32) -> Self {
        let size = 1usize << bits;
        let order = size - 1;
        let mut exp = vec![0u16; order * 2];
        let mut log = vec![0u16; size];
        let mut x: u32 = 1;
        for (i, e) in exp.iter_mut().take(order).enumerate() {
            *e = x as u16;
            log[x as usize] = i as u16;
            x <<= 1;
            if x & (1 << bits) != 0 {
                x ^= poly;
            }
        }
        exp.copy_within(0..order, order);
        LogTables { exp, log, order }
    }

    #[inline]
    fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    #[inline]
    fn inv(&self, a: u16) -> u16 {
        debug_assert!(a != 0);
        self.exp[self.order - self.log[a as usize] as usize]
    }
}

static GF256_TABLES: LazyLock<LogTables> = LazyLock::new(|| LogTables::build(8, Gf256::POLY));
/// Full GF(2^8) product table, `GF256_MUL[a][b] = a * b`.
static GF256_MUL: LazyLock<Box<[[u8; 256]; 256]>> = LazyLock::new(|| {
    let mut m = Box::new([[0u8; 256]; 256]);
    for a in 1..256 {
        for b in 1..256 {
            m[a][b] = GF256_TABLES.mul(a as u16, b as u16) as u8;
        }
    }
    m
});
static GF65536_TABLES: LazyLock<LogTables> = LazyLock::new(|| LogTables::build(16, Gf65536::POLY));

/// A binary extension field GF(2^w).
pub trait Field: Copy + Debug + Default + Send + Sync + 'static {
    type Elem: Copy + Eq + Default + Debug + Hash + Send + Sync + 'static;

    /// Word size `w`.
    const BITS: usize;
    /// Irreducible (primitive) polynomial including the `x^w` term.
    const POLY: u32;
    const NAME: &'static str;

    fn zero() -> Self::Elem {
        Self::Elem::default()
    }
    fn one() -> Self::Elem {
        Self::from_u32(1)
    }
    fn from_u32(v: u32) -> Self::Elem;
    fn to_u32(e: Self::Elem) -> u32;

    #[inline]
    fn add(a: Self::Elem, b: Self::Elem) -> Self::Elem {
        Self::from_u32(Self::to_u32(a) ^ Self::to_u32(b))
    }
    fn mul(a: Self::Elem, b: Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; `None` for zero.
    fn inv(a: Self::Elem) -> Option<Self::Elem>;

    fn is_zero(a: Self::Elem) -> bool {
        a == Self::zero()
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self::Elem {
        Self::from_u32(rng.random::<u32>() & ((1u32 << Self::BITS) - 1))
    }

    /// `dst[i] += c * src[i]` over the overlapping prefix.
    fn mul_add_slice(dst: &mut [Self::Elem], src: &[Self::Elem], c: Self::Elem) {
        if Self::is_zero(c) {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = Self::add(*d, Self::mul(c, s));
        }
    }

    fn scale_slice(dst: &mut [Self::Elem], c: Self::Elem) {
        for d in dst.iter_mut() {
            *d = Self::mul(c, *d);
        }
    }
}

/// GF(2^8) with polynomial `x^8 + x^4 + x^3 + x^2 + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Gf256;

impl Field for Gf256 {
    type Elem = u8;
    const BITS: usize = 8;
    const POLY: u32 = 0x11d;
    const NAME: &'static str = "GF(2^8)";

    #[inline]
    fn from_u32(v: u32) -> u8 {
        v as u8
    }
    #[inline]
    fn to_u32(e: u8) -> u32 {
        e as u32
    }
    #[inline]
    fn add(a: u8, b: u8) -> u8 {
        a ^ b
    }
    #[inline]
    fn mul(a: u8, b: u8) -> u8 {
        GF256_MUL[a as usize][b as usize]
    }
    fn inv(a: u8) -> Option<u8> {
        (a != 0).then(|| GF256_TABLES.inv(a as u16) as u8)
    }

    fn mul_add_slice(dst: &mut [u8], src: &[u8], c: u8) {
        match c {
            0 => {}
            1 => {
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
            _ => {
                let row = &GF256_MUL[c as usize];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d ^= row[s as usize];
                }
            }
        }
    }
}

/// GF(2^16) with polynomial `x^16 + x^12 + x^3 + x + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Gf65536;

impl Field for Gf65536 {
    type Elem = u16;
    const BITS: usize = 16;
    const POLY: u32 = 0x1100b;
    const NAME: &'static str = "GF(2^16)";

    #[inline]
    fn from_u32(v: u32) -> u16 {
        v as u16
    }
    #[inline]
    fn to_u32(e: u16) -> u32 {
        e as u32
    }
    #[inline]
    fn add(a: u16, b: u16) -> u16 {
        a ^ b
    }
    #[inline]
    fn mul(a: u16, b: u16) -> u16 {
        GF65536_TABLES.mul(a, b)
    }
    fn inv(a: u16) -> Option<u16> {
        (a != 0).then(|| GF65536_TABLES.inv(a))
    }
}

/// Runtime selector for the coding field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    #[default]
    Gf256,
    Gf65536,
}

impl FieldKind {
    pub fn bits(self) -> usize {
        match self {
            FieldKind::Gf256 => Gf256::BITS,
            FieldKind::Gf65536 => Gf65536::BITS,
        }
    }
}

/// Number of `F` symbols needed to hold `bits` bits.
pub fn symbols_for_bits<F: Field>(bits: usize) -> usize {
    bits.div_ceil(F::BITS)
}

/// Packs a bit stream MSB-first into field symbols; the last symbol is zero padded.
pub fn pack_bits<F: Field>(bits: impl IntoIterator<Item = bool>) -> Vec<F::Elem> {
    let mut out = Vec::new();
    let mut acc = 0u32;
    let mut n = 0;
    for b in bits {
        acc = (acc << 1) | b as u32;
        n += 1;
        if n == F::BITS {
            out.push(F::from_u32(acc));
            acc = 0;
            n = 0;
        }
    }
    if n > 0 {
        out.push(F::from_u32(acc << (F::BITS - n)));
    }
    out
}

/// Inverse of [`pack_bits`]: the first `bits` bits of a symbol stream.
pub fn unpack_bits<F: Field>(symbols: &[F::Elem], bits: usize) -> impl Iterator<Item = bool> + '_ {
    (0..bits).map(move |i| {
        let s = F::to_u32(symbols[i / F::BITS]);
        (s >> (F::BITS - 1 - i % F::BITS)) & 1 == 1
    })
}

/// Dense row-major matrix over `F`.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix<F: Field> {
    rows: usize,
    cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> Debug for FieldMatrix<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "FieldMatrix<{}> {}x{}", F::NAME, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl<F: Field> FieldMatrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F::Elem>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let n = rows.len();
        Ok(FieldMatrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    /// Uniformly random entries.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| F::random(rng)).collect();
        FieldMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> F::Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: F::Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[F::Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                m.set(r, j, self.get(r, c));
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                F::mul_add_slice(dst, other.row(k), self.get(r, k));
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[F::Elem]) -> Result<Vec<F::Elem>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!("{} columns, vector of {}", self.cols, x.len())));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).fold(F::zero(), |acc, (&a, &b)| F::add(acc, F::mul(a, b))))
            .collect())
    }

    /// Applies the matrix to symbol streams: row `r` of the output is
    /// `sum_c self[r][c] * sources[c]`, padded to `len` symbols.
    pub fn combine(&self, sources: &[&[F::Elem]], len: usize) -> Result<Vec<Vec<F::Elem>>> {
        if sources.len() != self.cols {
            return Err(Error::Dimension(format!("{} columns, {} sources", self.cols, sources.len())));
        }
        Ok((0..self.rows)
            .map(|r| {
                let mut out = vec![F::zero(); len];
                for (c, src) in sources.iter().enumerate() {
                    F::mul_add_slice(&mut out, src, self.get(r, c));
                }
                out
            })
            .collect())
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.reduce(None).len()
    }

    /// Solves `self * x = b` for a square-or-tall matrix with full column rank.
    pub fn solve(&self, b: &[F::Elem]) -> Result<Vec<F::Elem>> {
        let rhs: Vec<Vec<F::Elem>> = b.iter().map(|&v| vec![v]).collect();
        Ok(self.solve_streams(rhs)?.into_iter().map(|v| v[0]).collect())
    }

    /// Solves `self * X = rhs` where every row of `rhs` is a symbol stream.
    /// Returns one stream per column of `self`.
    pub fn solve_streams(&self, mut rhs: Vec<Vec<F::Elem>>) -> Result<Vec<Vec<F::Elem>>> {
        if rhs.len() != self.rows {
            return Err(Error::Dimension(format!("{} rows, {} right-hand sides", self.rows, rhs.len())));
        }
        let mut m = self.clone();
        let pivots = m.reduce(Some(&mut rhs));
        if pivots.len() < self.cols {
            return Err(Error::RankDeficient { rank: pivots.len(), needed: self.cols });
        }
        // Surplus equations must reduce to 0 = 0.
        if rhs[pivots.len()..].iter().any(|r| r.iter().any(|&v| !F::is_zero(v))) {
            return Err(Error::Inconsistent);
        }
        rhs.truncate(self.cols);
        Ok(rhs)
    }

    /// Gauss-Jordan elimination to reduced row echelon form, mirroring every row
    /// operation on `rhs`. Returns the pivot column of each leading row.
    fn reduce(&mut self, mut rhs: Option<&mut Vec<Vec<F::Elem>>>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut lead = 0;
        for col in 0..self.cols {
            if lead == self.rows {
                break;
            }
            let Some(p) = (lead..self.rows).find(|&r| !F::is_zero(self.get(r, col))) else {
                continue;
            };
            self.swap_rows(p, lead);
            if let Some(rhs) = rhs.as_deref_mut() {
                rhs.swap(p, lead);
            }
            let inv = F::inv(self.get(lead, col)).expect("pivot is nonzero");
            let cols = self.cols;
            F::scale_slice(&mut self.data[lead * cols..(lead + 1) * cols], inv);
            if let Some(rhs) = rhs.as_deref_mut() {
                F::scale_slice(&mut rhs[lead], inv);
            }
            for r in 0..self.rows {
                if r == lead {
                    continue;
                }
                let factor = self.get(r, col);
                if F::is_zero(factor) {
                    continue;
                }
                let (pivot_row, target) = two_rows(&mut self.data, cols, lead, r);
                F::mul_add_slice(target, pivot_row, factor);
                if let Some(rhs) = rhs.as_deref_mut() {
                    let (src, dst) = two_rows_vec(rhs, lead, r);
                    F::mul_add_slice(dst, src, factor);
                }
            }
            pivots.push(col);
            lead += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

fn two_rows<T>(data: &mut [T], cols: usize, src: usize, dst: usize) -> (&[T], &mut [T]) {
    if src < dst {
        let (lo, hi) = data.split_at_mut(dst * cols);
        (&lo[src * cols..(src + 1) * cols], &mut hi[..cols])
    } else {
        let (lo, hi) = data.split_at_mut(src * cols);
        (&hi[..cols], &mut lo[dst * cols..(dst + 1) * cols])
    }
}

fn two_rows_vec<T>(rows: &mut [Vec<T>], src: usize, dst: usize) -> (&[T], &mut [T]) {
    if src < dst {
        let (lo, hi) = rows.split_at_mut(dst);
        (&lo[src], &mut hi[0])
    } else {
        let (lo, hi) = rows.split_at_mut(src);
        (&hi[0], &mut lo[dst])
    }
}
