//! Arithmetic over the small binary-extension fields GF(2), GF(4), GF(16) and
//! GF(256), and incremental maintenance of a reduced row-echelon basis of
//! coded equations.
//!
//! Every supported field has characteristic 2, so subtraction is addition
//! (XOR) throughout. GF(2) rows are packed 64 coefficients per word; the
//! extension fields store one byte per coefficient and multiply through
//! log/antilog tables.

use std::fmt::Debug;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A field element, always in `[0, q)` for the owning field.
pub type FieldElement = u8;

/// The field sizes the simulator supports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(try_from = "u32", into = "u32")]
pub enum FieldOrder {
    Q2,
    Q4,
    Q16,
    Q256,
}

impl FieldOrder {
    pub const ALL: [FieldOrder; 4] = [FieldOrder::Q2, FieldOrder::Q4, FieldOrder::Q16, FieldOrder::Q256];

    pub fn size(self) -> u16 {
        match self {
            FieldOrder::Q2 => 2,
            FieldOrder::Q4 => 4,
            FieldOrder::Q16 => 16,
            FieldOrder::Q256 => 256,
        }
    }

    /// Extension degree m, with q = 2^m.
    pub fn degree(self) -> u32 {
        self.size().trailing_zeros()
    }
}

impl TryFrom<u32> for FieldOrder {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        match q {
            2 => Ok(FieldOrder::Q2),
            4 => Ok(FieldOrder::Q4),
            16 => Ok(FieldOrder::Q16),
            256 => Ok(FieldOrder::Q256),
            other => Err(Error::UnsupportedField(other)),
        }
    }
}

impl From<FieldOrder> for u32 {
    fn from(q: FieldOrder) -> u32 {
        q.size() as u32
    }
}

impl FromStr for FieldOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let q: u32 = s.trim().parse().map_err(|_| Error::Parameter(format!("field order {s:?}")))?;
        FieldOrder::try_from(q)
    }
}

impl std::fmt::Display for FieldOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.size())
    }
}

/// Scalar and row arithmetic for one finite field.
///
/// `Row` is the storage for a coefficient vector of fixed length.
pub trait Field: Copy + Debug + Send + Sync + 'static {
    type Row: Clone + Debug + PartialEq + Eq + Send + Sync;

    fn order(&self) -> u16;

    fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a ^ b
    }

    fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a ^ b
    }

    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement;

    fn inv(&self, a: FieldElement) -> Result<FieldElement>;

    fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        rng.random_range(0..self.order()) as FieldElement
    }

    /// Fills `out` with independent uniform elements.
    fn fill_random<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [FieldElement]) {
        for x in out {
            *x = self.random_element(rng);
        }
    }

    fn zero_row(&self, len: usize) -> Self::Row;
    fn row_len(&self, row: &Self::Row) -> usize;
    fn get(&self, row: &Self::Row, i: usize) -> FieldElement;
    fn set(&self, row: &mut Self::Row, i: usize, v: FieldElement);
    /// Column of the first nonzero coefficient.
    fn leading(&self, row: &Self::Row) -> Option<usize>;
    /// `dst += c * src`.
    fn axpy(&self, dst: &mut Self::Row, src: &Self::Row, c: FieldElement);
    fn scale(&self, row: &mut Self::Row, c: FieldElement);

    fn is_zero(&self, row: &Self::Row) -> bool {
        self.leading(row).is_none()
    }

    fn unit_row(&self, len: usize, i: usize) -> Self::Row {
        let mut r = self.zero_row(len);
        self.set(&mut r, i, 1);
        r
    }

    fn row_from_symbols(&self, symbols: &[FieldElement]) -> Self::Row {
        let mut r = self.zero_row(symbols.len());
        for (i, &s) in symbols.iter().enumerate() {
            self.set(&mut r, i, s);
        }
        r
    }

    fn row_to_symbols(&self, row: &Self::Row) -> Vec<FieldElement> {
        (0..self.row_len(row)).map(|i| self.get(row, i)).collect()
    }

    /// `dst += c * src` on plain symbol vectors (payloads).
    fn symbols_axpy(&self, dst: &mut [FieldElement], src: &[FieldElement], c: FieldElement) {
        if c == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            *d ^= self.mul(c, s);
        }
    }

    fn symbols_scale(&self, v: &mut [FieldElement], c: FieldElement) {
        for x in v.iter_mut() {
            *x = self.mul(*x, c);
        }
    }
}

/// Packed coefficient vector over GF(2).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitRow {
    len: usize,
    words: Vec<u64>,
}

impl BitRow {
    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// GF(2) with bit-packed rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Gf2;

impl Field for Gf2 {
    type Row = BitRow;

    fn order(&self) -> u16 {
        2
    }

    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        a & b
    }

    fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a == 0 {
            Err(Error::ZeroInverse(2))
        } else {
            Ok(1)
        }
    }

    fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        rng.random::<bool>() as FieldElement
    }

    fn fill_random<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [FieldElement]) {
        for chunk in out.chunks_mut(64) {
            let mut w: u64 = rng.random();
            for x in chunk {
                *x = (w & 1) as FieldElement;
                w >>= 1;
            }
        }
    }

    fn zero_row(&self, len: usize) -> BitRow {
        BitRow { len, words: vec![0; len.div_ceil(64)] }
    }

    fn row_len(&self, row: &BitRow) -> usize {
        row.len
    }

    fn get(&self, row: &BitRow, i: usize) -> FieldElement {
        debug_assert!(i < row.len);
        ((row.words[i / 64] >> (i % 64)) & 1) as FieldElement
    }

    fn set(&self, row: &mut BitRow, i: usize, v: FieldElement) {
        debug_assert!(i < row.len && v < 2);
        let mask = 1u64 << (i % 64);
        if v & 1 == 1 {
            row.words[i / 64] |= mask;
        } else {
            row.words[i / 64] &= !mask;
        }
    }

    fn leading(&self, row: &BitRow) -> Option<usize> {
        row.words
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    fn axpy(&self, dst: &mut BitRow, src: &BitRow, c: FieldElement) {
        if c & 1 == 1 {
            for (d, s) in dst.words.iter_mut().zip(&src.words) {
                *d ^= s;
            }
        }
    }

    fn scale(&self, row: &mut BitRow, c: FieldElement) {
        if c & 1 == 0 {
            row.words.iter_mut().for_each(|w| *w = 0);
        }
    }

    fn is_zero(&self, row: &BitRow) -> bool {
        row.words.iter().all(|w| *w == 0)
    }
}

#[derive(Debug)]
struct Tables {
    q: u16,
    /// exp[i] = g^i, doubled so that log a + log b never needs a reduction.
    exp: Vec<u8>,
    log: Vec<u8>,
}

impl Tables {
    fn build(m: u32, poly: u16) -> Tables {
        let q = 1u16 << m;
        let order = (q - 1) as usize;
        let mut exp = vec![0u8; 2 * order.max(1)];
        let mut log = vec![0u8; q as usize];
        let mut x: u16 = 1;
        for i in 0..order {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & q != 0 {
                x ^= poly;
            }
        }
        for i in order..exp.len() {
            exp[i] = exp[i - order];
        }
        Tables { q, exp, log }
    }
}

/// GF(2^m) for m in {1, 2, 4, 8} with byte-per-symbol rows.
///
/// m = 1 is supported so GF(2) can be cross-checked against the packed
/// representation.
#[derive(Clone, Copy, Debug)]
pub struct Gf2m {
    t: &'static Tables,
}

impl PartialEq for Gf2m {
    fn eq(&self, other: &Self) -> bool {
        self.t.q == other.t.q
    }
}

impl Eq for Gf2m {}

impl Gf2m {
    pub fn new(order: FieldOrder) -> Gf2m {
        static T2: OnceLock<Tables> = OnceLock::new();
        static T4: OnceLock<Tables> = OnceLock::new();
        static T16: OnceLock<Tables> = OnceLock::new();
        static T256: OnceLock<Tables> = OnceLock::new();
        // Primitive polynomials: x+1, x^2+x+1, x^4+x+1, x^8+x^4+x^3+x^2+1.
        let t = match order {
            FieldOrder::Q2 => T2.get_or_init(|| Tables::build(1, 0b11)),
            FieldOrder::Q4 => T4.get_or_init(|| Tables::build(2, 0b111)),
            FieldOrder::Q16 => T16.get_or_init(|| Tables::build(4, 0b1_0011)),
            FieldOrder::Q256 => T256.get_or_init(|| Tables::build(8, 0x11d)),
        };
        Gf2m { t }
    }

    /// g^i for the table's generator.
    pub fn exp(&self, i: usize) -> FieldElement {
        self.t.exp[i % (self.t.q as usize - 1)]
    }
}

impl Field for Gf2m {
    type Row = Vec<FieldElement>;

    fn order(&self) -> u16 {
        self.t.q
    }

    fn fill_random<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [FieldElement]) {
        rng.fill_bytes(out);
        let mask = (self.t.q - 1) as FieldElement;
        out.iter_mut().for_each(|x| *x &= mask);
    }

    fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a == 0 || b == 0 {
            return 0;
        }
        self.t.exp[self.t.log[a as usize] as usize + self.t.log[b as usize] as usize]
    }

    fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a == 0 {
            return Err(Error::ZeroInverse(self.t.q));
        }
        let order = self.t.q as usize - 1;
        Ok(self.t.exp[(order - self.t.log[a as usize] as usize) % order])
    }

    fn zero_row(&self, len: usize) -> Vec<FieldElement> {
        vec![0; len]
    }

    fn row_len(&self, row: &Vec<FieldElement>) -> usize {
        row.len()
    }

    fn get(&self, row: &Vec<FieldElement>, i: usize) -> FieldElement {
        row[i]
    }

    fn set(&self, row: &mut Vec<FieldElement>, i: usize, v: FieldElement) {
        debug_assert!((v as u16) < self.t.q);
        row[i] = v;
    }

    fn leading(&self, row: &Vec<FieldElement>) -> Option<usize> {
        row.iter().position(|&x| x != 0)
    }

    fn axpy(&self, dst: &mut Vec<FieldElement>, src: &Vec<FieldElement>, c: FieldElement) {
        self.symbols_axpy(dst, src, c);
    }

    fn scale(&self, row: &mut Vec<FieldElement>, c: FieldElement) {
        self.symbols_scale(row, c);
    }
}

/// One linear equation: coefficients over the k unknown messages, plus the
/// matching combination of the payloads when payloads are simulated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedMessage<F: Field> {
    pub coeffs: F::Row,
    pub payload: Option<Vec<FieldElement>>,
}

impl<F: Field> CodedMessage<F> {
    pub fn new(coeffs: F::Row, payload: Option<Vec<FieldElement>>) -> Self {
        CodedMessage { coeffs, payload }
    }

    /// The initial equation "x_i" for a node holding message `i`.
    pub fn unit(field: &F, k: usize, i: usize, payload: Option<Vec<FieldElement>>) -> Self {
        CodedMessage { coeffs: field.unit_row(k, i), payload }
    }

    fn axpy(&mut self, field: &F, src: &Self, c: FieldElement) {
        field.axpy(&mut self.coeffs, &src.coeffs, c);
        if let (Some(dst), Some(s)) = (self.payload.as_mut(), src.payload.as_ref()) {
            field.symbols_axpy(dst, s, c);
        }
    }

    fn scale(&mut self, field: &F, c: FieldElement) {
        field.scale(&mut self.coeffs, c);
        if let Some(p) = self.payload.as_mut() {
            field.symbols_scale(p, c);
        }
    }
}

/// Reduced row-echelon basis of the equations a node has stored.
///
/// Rows are sorted by pivot column, every pivot is 1, and every other row is
/// zero in each pivot column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationBasis<F: Field> {
    field: F,
    width: usize,
    rows: Vec<CodedMessage<F>>,
    pivots: Vec<usize>,
}

impl<F: Field> EquationBasis<F> {
    pub fn new(field: F, width: usize) -> Self {
        EquationBasis { field, width, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.width
    }

    pub fn rows(&self) -> &[CodedMessage<F>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn check_len(&self, row: &F::Row) -> Result<()> {
        let got = self.field.row_len(row);
        if got != self.width {
            return Err(Error::LengthMismatch { expected: self.width, got });
        }
        Ok(())
    }

    fn reduce(&self, msg: &mut CodedMessage<F>) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = self.field.get(&msg.coeffs, p);
            if c != 0 {
                msg.axpy(&self.field, row, c);
            }
        }
    }

    /// Whether `coeffs` lies in the span of the stored rows.
    pub fn contains(&self, coeffs: &F::Row) -> Result<bool> {
        self.check_len(coeffs)?;
        let mut m = CodedMessage::<F>::new(coeffs.clone(), None);
        self.reduce(&mut m);
        Ok(self.field.is_zero(&m.coeffs))
    }

    /// Inserts `msg` if it is linearly independent of the stored rows.
    ///
    /// Returns whether the message was helpful. A message that is not helpful
    /// leaves the basis untouched.
    pub fn try_insert(&mut self, mut msg: CodedMessage<F>) -> Result<bool> {
        self.check_len(&msg.coeffs)?;
        self.reduce(&mut msg);
        let Some(lead) = self.field.leading(&msg.coeffs) else {
            return Ok(false);
        };
        let c = self.field.get(&msg.coeffs, lead);
        if c != 1 {
            msg.scale(&self.field, self.field.inv(c)?);
        }
        for row in self.rows.iter_mut() {
            let c = self.field.get(&row.coeffs, lead);
            if c != 0 {
                row.axpy(&self.field, &msg, c);
            }
        }
        let at = self.pivots.partition_point(|&p| p < lead);
        self.pivots.insert(at, lead);
        self.rows.insert(at, msg);
        Ok(true)
    }

    /// A uniformly random linear combination of the stored rows.
    pub fn random_combination<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CodedMessage<F>> {
        let first = self.rows.first().ok_or(Error::EmptyBasis)?;
        let mut out = CodedMessage {
            coeffs: self.field.zero_row(self.width),
            payload: first.payload.as_ref().map(|p| vec![0; p.len()]),
        };
        let mut cs = [0; 64];
        for rows in self.rows.chunks(64) {
            let cs = &mut cs[..rows.len()];
            self.field.fill_random(rng, cs);
            for (row, &c) in rows.iter().zip(cs.iter()) {
                out.axpy(&self.field, row, c);
            }
        }
        Ok(out)
    }

    /// Recovers the k original payloads once the basis has full rank.
    ///
    /// At full rank the reduced form is the identity, so row i already holds
    /// x_i and back-substitution is complete.
    pub fn decode(&self) -> Result<Vec<Vec<FieldElement>>> {
        if !self.is_full() {
            return Err(Error::NotDecodable { rank: self.rank(), k: self.width });
        }
        debug_assert!(self.pivots.iter().enumerate().all(|(i, &p)| i == p));
        self.rows.iter().map(|r| r.payload.clone().ok_or(Error::NoPayload)).collect()
    }
}
