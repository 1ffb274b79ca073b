//! (m, n) ramp (non-perfect) secret sharing over GF(2^w).
//!
//! A secret block of `n - m` symbols becomes the high-order coefficients of
//! the sharing polynomial
//!
//! ```text
//! f(x) = r_0 + ... + r_{m-1} x^{m-1} + s_0 x^m + ... + s_{n-m-1} x^{n-1}
//! ```
//!
//! whose low-order coefficients are uniform randomness. Share `i` is
//! `f(x_i)` at the i-th nonzero field element. Any `m` shares see an
//! invertible Vandermonde minor on the random columns and therefore reveal
//! nothing; all `n` shares determine every coefficient.

use std::sync::OnceLock;

use thiserror::Error;

use crate::gf::{Field, Symbol};
use crate::matrix::SymbolMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RampError {
    #[error("invalid ramp parameters (m={m}, n={n}); need 1 <= m < n")]
    InvalidThreshold { m: usize, n: usize },
    #[error("GF(2^{bits}) has too few nonzero points for {n} shares; need at least {min_bits} bits")]
    FieldTooSmall { n: usize, bits: u32, min_bits: u32 },
    #[error("{what}: expected {expected} symbols, got {got}")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("reconstruction needs all {expected} shares, got {got}")]
    IncompleteShares { expected: usize, got: usize },
}

/// Smallest `w` with `2^w - 1 >= n` (and at least 2).
pub fn min_field_bits(n: usize) -> u32 {
    let mut w = crate::gf::MIN_BITS;
    while ((1usize << w) - 1) < n {
        w += 1;
    }
    w
}

#[derive(Debug, Clone)]
pub struct RampScheme {
    m: usize,
    n: usize,
    field: Field,
    points: Vec<Symbol>,
    /// Rows m..n of the inverse Vandermonde matrix.
    decoder: OnceLock<SymbolMatrix>,
}

impl RampScheme {
    pub fn new(m: usize, n: usize, field: &Field) -> Result<Self, RampError> {
        if m < 1 || m >= n {
            return Err(RampError::InvalidThreshold { m, n });
        }
        if n as u64 > field.order() as u64 - 1 {
            return Err(RampError::FieldTooSmall {
                n,
                bits: field.bits(),
                min_bits: min_field_bits(n),
            });
        }
        Ok(RampScheme {
            m,
            n,
            field: field.clone(),
            points: (1..=n as u32).map(|x| x as Symbol).collect(),
            decoder: OnceLock::new(),
        })
    }

    /// Leakage threshold: any `m` shares reveal nothing.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symbols per secret block.
    pub fn secret_len(&self) -> usize {
        self.n - self.m
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn points(&self) -> &[Symbol] {
        &self.points
    }

    pub fn share_block(&self, secret: &[Symbol], randomness: &[Symbol]) -> Result<Vec<Symbol>, RampError> {
        if secret.len() != self.secret_len() {
            return Err(RampError::Arity {
                what: "secret block",
                expected: self.secret_len(),
                got: secret.len(),
            });
        }
        if randomness.len() != self.m {
            return Err(RampError::Arity {
                what: "randomness",
                expected: self.m,
                got: randomness.len(),
            });
        }
        let coeffs: Vec<Symbol> = randomness.iter().chain(secret).copied().collect();
        Ok(self
            .points
            .iter()
            .map(|&x| self.field.eval_poly(&coeffs, x))
            .collect())
    }

    pub fn reconstruct(&self, shares: &[Symbol]) -> Result<Vec<Symbol>, RampError> {
        if shares.len() != self.n {
            return Err(RampError::IncompleteShares {
                expected: self.n,
                got: shares.len(),
            });
        }
        let decoder = self.decoder.get_or_init(|| {
            let v = SymbolMatrix::vandermonde(&self.field, &self.points, self.n);
            let inv = v
                .inverse(&self.field)
                .expect("Vandermonde matrix on distinct points is invertible");
            let rows: Vec<usize> = (self.m..self.n).collect();
            inv.select_rows(&rows)
        });
        Ok(decoder
            .mul_vec(&self.field, shares)
            .expect("decoder has n columns"))
    }

    /// The sharing map as matrices: `shares = a_secret * secret + b_random * randomness`.
    pub fn sharing_matrix(&self) -> (SymbolMatrix, SymbolMatrix) {
        let full = SymbolMatrix::vandermonde(&self.field, &self.points, self.n);
        let random_cols: Vec<usize> = (0..self.m).collect();
        let secret_cols: Vec<usize> = (self.m..self.n).collect();
        (full.select_cols(&secret_cols), full.select_cols(&random_cols))
    }
}
