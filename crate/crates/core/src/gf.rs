//! Arithmetic in the binary extension fields GF(2^w), 2 <= w <= 16.
//!
//! Every share, key and signal symbol in this crate is one element of such a
//! field. Multiplication goes through log/antilog tables built once per field;
//! [`Field::mul_reference`] is the plain shift-and-reduce product and serves as
//! the exact reference path the tables are checked against.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One field element. Only the low `w` bits are ever set.
pub type Symbol = u16;

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 16;

/// Field width used when nothing else is requested.
pub const DEFAULT_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("unsupported field width {0}; expected {MIN_BITS}..={MAX_BITS} bits")]
    UnsupportedWidth(u32),
    #[error("polynomial {poly:#x} is not an irreducible polynomial of degree {bits}")]
    NotIrreducible { bits: u32, poly: u32 },
    #[error("element {value:#x} does not fit in GF(2^{bits})")]
    OutOfRange { value: u32, bits: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

/// Width and reduction polynomial of a field. The polynomial includes the
/// leading `x^w` term, e.g. `0x11b` for x^8+x^4+x^3+x+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub bits: u32,
    pub poly: u32,
}

impl FieldSpec {
    /// Field of the given width with the crate's default primitive polynomial.
    pub fn new(bits: u32) -> Result<Self, FieldError> {
        let poly = default_poly(bits).ok_or(FieldError::UnsupportedWidth(bits))?;
        Ok(FieldSpec { bits, poly })
    }

    pub fn with_poly(bits: u32, poly: u32) -> Result<Self, FieldError> {
        if !(MIN_BITS..=MAX_BITS).contains(&bits) {
            return Err(FieldError::UnsupportedWidth(bits));
        }
        if !is_irreducible(poly, bits) {
            return Err(FieldError::NotIrreducible { bits, poly });
        }
        Ok(FieldSpec { bits, poly })
    }

    pub fn order(&self) -> u32 {
        1 << self.bits
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::new(DEFAULT_BITS).expect("default width is supported")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#x}", self.bits, self.poly)
    }
}

fn default_poly(bits: u32) -> Option<u32> {
    let poly = match bits {
        2 => 0x7,
        3 => 0xb,
        4 => 0x13,
        5 => 0x25,
        6 => 0x43,
        7 => 0x83,
        8 => 0x11d,
        9 => 0x211,
        10 => 0x409,
        11 => 0x805,
        12 => 0x1053,
        13 => 0x201b,
        14 => 0x4443,
        15 => 0x8003,
        16 => 0x1100b,
        _ => return None,
    };
    Some(poly)
}

fn degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of GF(2)[x] polynomial division.
fn poly_mod(mut a: u32, b: u32) -> u32 {
    let db = degree(b);
    while a != 0 && degree(a) >= db {
        a ^= b << (degree(a) - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=bits/2.
pub fn is_irreducible(poly: u32, bits: u32) -> bool {
    if degree(poly) != bits as i32 || poly & 1 == 0 {
        return false;
    }
    for d in 1..=bits / 2 {
        for low in 0..(1u32 << d) {
            let divisor = (1 << d) | low;
            if poly_mod(poly, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

struct Tables {
    /// exp[i] = g^i for i in 0..2(q-1), doubled so log sums never need a modulo.
    exp: Vec<Symbol>,
    /// log[a] for a != 0; log[0] is unused.
    log: Vec<u32>,
}

/// A concrete field with precomputed tables. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    tables: Arc<Tables>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("spec", &self.spec).finish()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Self, FieldError> {
        let spec = FieldSpec::with_poly(spec.bits, spec.poly)?;
        let q = spec.order();
        let group = q - 1;
        let generator = (2..q)
            .find(|&g| multiplicative_order(g, spec) == group)
            .expect("the multiplicative group of a finite field is cyclic");

        let mut exp = vec![0 as Symbol; 2 * group as usize];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..group {
            exp[i as usize] = x as Symbol;
            exp[(i + group) as usize] = x as Symbol;
            log[x as usize] = i;
            x = clmul_reduce(x, generator, spec);
        }
        Ok(Field {
            spec,
            tables: Arc::new(Tables { exp, log }),
        })
    }

    pub fn with_bits(bits: u32) -> Result<Self, FieldError> {
        Field::new(FieldSpec::new(bits)?)
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn bits(&self) -> u32 {
        self.spec.bits
    }

    pub fn order(&self) -> u32 {
        self.spec.order()
    }

    pub fn contains(&self, a: u32) -> bool {
        a < self.order()
    }

    pub fn check(&self, a: u32) -> Result<Symbol, FieldError> {
        if self.contains(a) {
            Ok(a as Symbol)
        } else {
            Err(FieldError::OutOfRange {
                value: a,
                bits: self.spec.bits,
            })
        }
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.tables;
        t.exp[(t.log[a as usize] + t.log[b as usize]) as usize]
    }

    /// Carry-less multiplication followed by reduction, without tables.
    pub fn mul_reference(&self, a: Symbol, b: Symbol) -> Symbol {
        clmul_reduce(a as u32, b as u32, self.spec) as Symbol
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let t = &self.tables;
        let group = self.order() - 1;
        Ok(t.exp[((group - t.log[a as usize]) % group) as usize])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Symbol, e: u64) -> Symbol {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let group = (self.order() - 1) as u64;
        let l = self.tables.log[a as usize] as u64;
        self.tables.exp[((l * (e % group)) % group) as usize]
    }

    /// `dst[i] ^= factor * src[i]` for every i.
    pub fn mul_add_slice(&self, dst: &mut [Symbol], src: &[Symbol], factor: Symbol) {
        debug_assert_eq!(dst.len(), src.len());
        if factor == 0 {
            return;
        }
        let t = &self.tables;
        let lf = t.log[factor as usize];
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= t.exp[(t.log[s as usize] + lf) as usize];
            }
        }
    }

    pub fn scale_slice(&self, row: &mut [Symbol], factor: Symbol) {
        if factor == 0 {
            row.iter_mut().for_each(|x| *x = 0);
            return;
        }
        let t = &self.tables;
        let lf = t.log[factor as usize];
        for x in row.iter_mut().filter(|x| **x != 0) {
            *x = t.exp[(t.log[*x as usize] + lf) as usize];
        }
    }

    /// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
    pub fn eval_poly(&self, coeffs: &[Symbol], x: Symbol) -> Symbol {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.mul(acc, x) ^ c)
    }
}

fn clmul_reduce(a: u32, b: u32, spec: FieldSpec) -> u32 {
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    let top = 1u32 << spec.bits;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= spec.poly;
        }
    }
    acc
}

fn multiplicative_order(g: u32, spec: FieldSpec) -> u32 {
    let mut x = g;
    let mut k = 1;
    while x != 1 {
        x = clmul_reduce(x, g, spec);
        k += 1;
        if k > spec.order() {
            return 0;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Shift-and-reduce written out independently of `clmul_reduce`.
    fn school_mul(a: u32, b: u32, bits: u32, poly: u32) -> u32 {
        let mut wide = 0u64;
        for i in 0..bits {
            if (b >> i) & 1 == 1 {
                wide ^= (a as u64) << i;
            }
        }
        for i in (bits..2 * bits).rev() {
            if (wide >> i) & 1 == 1 {
                wide ^= (poly as u64) << (i - bits);
            }
        }
        wide as u32
    }

    #[test]
    fn default_polynomials_are_irreducible() {
        for bits in MIN_BITS..=MAX_BITS {
            let spec = FieldSpec::new(bits).unwrap();
            assert!(is_irreducible(spec.poly, bits), "w={bits}");
        }
    }

    #[test]
    fn rejects_reducible_polynomial() {
        // x^4 + x^2 + 1 = (x^2 + x + 1)^2
        assert_eq!(
            FieldSpec::with_poly(4, 0x15),
            Err(FieldError::NotIrreducible { bits: 4, poly: 0x15 })
        );
        assert_eq!(FieldSpec::new(1), Err(FieldError::UnsupportedWidth(1)));
        assert_eq!(FieldSpec::new(17), Err(FieldError::UnsupportedWidth(17)));
    }

    #[test]
    fn aes_polynomial_example() {
        let f = Field::new(FieldSpec::with_poly(8, 0x11b).unwrap()).unwrap();
        assert_eq!(school_mul(0x80, 0x02, 8, 0x11b), 0x1b);
        assert_eq!(f.mul(0x80, 0x02), 0x1b);
        assert_eq!(f.mul_reference(0x80, 0x02), 0x1b);
        // x+1 is a generator for the AES polynomial, x is not; tables still work
        assert_eq!(f.mul(0x53, 0xca), 0x01);
    }

    #[test]
    fn add_is_xor_and_self_inverse() {
        let f = Field::with_bits(8).unwrap();
        for a in 0..=255u16 {
            assert_eq!(f.add(a, a), 0);
            assert_eq!(f.mul(a, 1), a);
        }
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        let f = Field::with_bits(4).unwrap();
        assert_eq!(f.inv(0), Err(FieldError::ZeroInverse));
        assert_eq!(f.div(3, 0), Err(FieldError::ZeroInverse));
        assert!(f.check(16).is_err());
        assert_eq!(f.check(15), Ok(15));
    }

    #[test]
    fn field_axioms_exhaustive_small_widths() {
        for bits in 2..=4 {
            let f = Field::with_bits(bits).unwrap();
            let q = f.order() as Symbol;
            for a in 0..q {
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
                for b in 0..q {
                    let ab = f.mul(a, b);
                    assert_eq!(ab, school_mul(a as u32, b as u32, bits, f.spec().poly) as Symbol);
                    assert_eq!(ab, f.mul(b, a));
                    for c in 0..q {
                        assert_eq!(f.mul(ab, c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.mul(a, b ^ c), ab ^ f.mul(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn field_axioms_sampled_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for bits in [8, 16] {
            let f = Field::with_bits(bits).unwrap();
            let q = f.order();
            for _ in 0..10_000 {
                let a = rng.gen_range(0..q) as Symbol;
                let b = rng.gen_range(0..q) as Symbol;
                let c = rng.gen_range(0..q) as Symbol;
                assert_eq!(f.mul(a, b), f.mul_reference(a, b));
                assert_eq!(
                    f.mul(a, b) as u32,
                    school_mul(a as u32, b as u32, bits, f.spec().poly)
                );
                assert_eq!(f.mul(a, b ^ c), f.mul(a, b) ^ f.mul(a, c));
                assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                    assert_eq!(f.div(f.mul(a, b), a).unwrap(), b);
                }
            }
        }
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let f = Field::with_bits(5).unwrap();
        for a in 0..32u16 {
            let mut acc = 1;
            for e in 0..70u64 {
                assert_eq!(f.pow(a, e), acc, "a={a} e={e}");
                acc = f.mul(acc, a);
            }
        }
    }

    #[test]
    fn eval_poly_examples() {
        let f = Field::with_bits(4).unwrap();
        for x in 0..16 {
            assert_eq!(f.eval_poly(&[9], x), 9);
            assert_eq!(f.eval_poly(&[0, 1], x), x);
        }
        // 1 + 2 + 2*2 = 1 ^ 2 ^ 4
        assert_eq!(f.eval_poly(&[1, 1, 1], 2), 7);
    }

    #[test]
    fn slice_helpers_agree_with_scalar_ops() {
        let f = Field::with_bits(16).unwrap();
        let src: Vec<Symbol> = (0..50).map(|i| (i * 1237 + 5) as Symbol).collect();
        let mut dst: Vec<Symbol> = (0..50).map(|i| (i * 31) as Symbol).collect();
        let expect: Vec<Symbol> = dst
            .iter()
            .zip(&src)
            .map(|(&d, &s)| d ^ f.mul(s, 0xbeef))
            .collect();
        f.mul_add_slice(&mut dst, &src, 0xbeef);
        assert_eq!(dst, expect);
        let mut row = src.clone();
        f.scale_slice(&mut row, 3);
        assert!(row.iter().zip(&src).all(|(&r, &s)| r == f.mul(s, 3)));
    }
}
