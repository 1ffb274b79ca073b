//! Dense row-major matrices over GF(2^w) with exact elimination.

use std::fmt;

use thiserror::Error;

use crate::gf::{Field, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular; the system is not reconstructible")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct SymbolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Symbol>,
}

impl fmt::Debug for SymbolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymbolMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl SymbolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SymbolMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Symbol>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(SymbolMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Symbol>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Ok(SymbolMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// `points.len() x cols` matrix with entries `points[i]^j`.
    pub fn vandermonde(field: &Field, points: &[Symbol], cols: usize) -> Self {
        let mut m = Self::zeros(points.len(), cols);
        for (i, &x) in points.iter().enumerate() {
            let mut p = 1;
            for j in 0..cols {
                m.set(i, j, p);
                p = field.mul(p, x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Symbol {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Symbol) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Symbol] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Symbol] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[Symbol]) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend_from_slice(row);
        self.rows += 1;
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

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(0, self.cols);
        for &r in idx {
            out.push_row(self.row(r));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &SymbolMatrix) -> Result<Self, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::Dimension(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(SymbolMatrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn mul_vec(&self, field: &Field, v: &[Symbol]) -> Result<Vec<Symbol>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::Dimension(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &x)| acc ^ field.mul(a, x))
            })
            .collect())
    }

    pub fn mul(&self, field: &Field, other: &SymbolMatrix) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a != 0 {
                    let (dst, src) = (r * other.cols, k * other.cols);
                    field.mul_add_slice(
                        &mut out.data[dst..dst + other.cols],
                        &other.data[src..src + other.cols],
                        a,
                    );
                }
            }
        }
        Ok(out)
    }

    /// Rank by forward elimination on a copy.
    pub fn rank(&self, field: &Field) -> usize {
        let mut work = self.clone();
        work.echelon(field)
    }

    /// Reduces `self` in place to row echelon form and returns the rank.
    fn echelon(&mut self, field: &Field) -> usize {
        let cols = self.cols;
        let mut rank = 0;
        for c in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| self.get(r, c) != 0) else {
                continue;
            };
            self.swap_rows(p, rank);
            let inv = field.inv(self.get(rank, c)).expect("pivot is nonzero");
            field.scale_slice(self.row_mut(rank), inv);
            let pivot: Vec<Symbol> = self.row(rank)[c..].to_vec();
            for r in rank + 1..self.rows {
                let f = self.get(r, c);
                if f != 0 {
                    field.mul_add_slice(&mut self.row_mut(r)[c..], &pivot, f);
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * cols);
        head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
    }

    /// Solves `self * x = b` for square invertible `self`.
    pub fn solve(&self, field: &Field, b: &[Symbol]) -> Result<Vec<Symbol>, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension("solve needs a square matrix".into()));
        }
        if b.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "right-hand side of length {} for {} equations",
                b.len(),
                self.rows
            )));
        }
        let rhs = SymbolMatrix::from_vec(b.len(), 1, b.to_vec())?;
        let x = self.solve_many(field, &rhs)?;
        Ok(x.data)
    }

    pub fn inverse(&self, field: &Field) -> Result<Self, LinalgError> {
        self.solve_many(field, &SymbolMatrix::identity(self.rows))
    }

    /// Gauss-Jordan on `[self | rhs]`.
    fn solve_many(&self, field: &Field, rhs: &SymbolMatrix) -> Result<Self, LinalgError> {
        if self.rows != self.cols || rhs.rows != self.rows {
            return Err(LinalgError::Dimension("solve needs a square system".into()));
        }
        let n = self.rows;
        let mut aug = self.hstack(rhs)?;
        for c in 0..n {
            let p = (c..n)
                .find(|&r| aug.get(r, c) != 0)
                .ok_or(LinalgError::Singular)?;
            aug.swap_rows(p, c);
            let inv = field.inv(aug.get(c, c)).expect("pivot is nonzero");
            field.scale_slice(aug.row_mut(c), inv);
            let pivot = aug.row(c).to_vec();
            for r in 0..n {
                if r != c {
                    let f = aug.get(r, c);
                    if f != 0 {
                        field.mul_add_slice(aug.row_mut(r), &pivot, f);
                    }
                }
            }
        }
        let cols: Vec<usize> = (n..n + rhs.cols).collect();
        Ok(aug.select_cols(&cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, field: &Field, r: usize, c: usize) -> SymbolMatrix {
        let data = (0..r * c)
            .map(|_| rng.gen_range(0..field.order()) as Symbol)
            .collect();
        SymbolMatrix::from_vec(r, c, data).unwrap()
    }

    /// Rank by counting distinct vectors in the row span; only feasible for
    /// tiny fields and few rows, but shares nothing with `echelon`.
    fn span_rank(field: &Field, m: &SymbolMatrix) -> usize {
        use std::collections::HashSet;
        let mut span: HashSet<Vec<Symbol>> = HashSet::new();
        span.insert(vec![0; m.cols()]);
        for r in 0..m.rows() {
            let mut next = HashSet::new();
            for v in &span {
                for a in 0..field.order() as Symbol {
                    let w: Vec<Symbol> = v
                        .iter()
                        .zip(m.row(r))
                        .map(|(&x, &y)| x ^ field.mul(a, y))
                        .collect();
                    next.insert(w);
                }
            }
            span = next;
        }
        let q = field.order() as usize;
        let mut rank = 0;
        let mut size = 1;
        while size < span.len() {
            size *= q;
            rank += 1;
        }
        rank
    }

    #[test]
    fn identity_and_zero_ranks() {
        let f = Field::with_bits(8).unwrap();
        assert_eq!(SymbolMatrix::identity(7).rank(&f), 7);
        assert_eq!(SymbolMatrix::zeros(4, 9).rank(&f), 0);
        assert_eq!(SymbolMatrix::zeros(0, 0).rank(&f), 0);
    }

    #[test]
    fn vandermonde_three_points() {
        let f = Field::with_bits(4).unwrap();
        let v = SymbolMatrix::vandermonde(&f, &[1, 2, 3], 3);
        assert_eq!(span_rank(&f, &v), 3);
        assert_eq!(v.rank(&f), 3);
    }

    #[test]
    fn elimination_matches_span_counting() {
        let f = Field::with_bits(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = rng.gen_range(1..5);
            let c = rng.gen_range(1..5);
            let m = random_matrix(&mut rng, &f, r, c);
            assert_eq!(m.rank(&f), span_rank(&f, &m), "{m:?}");
        }
    }

    #[test]
    fn vandermonde_square_minors_are_invertible() {
        let f = Field::with_bits(8).unwrap();
        for m in 1..=12 {
            let points: Vec<Symbol> = (1..=m as Symbol).map(|x| f.mul(x, 29)).collect();
            assert_eq!(SymbolMatrix::vandermonde(&f, &points, m).rank(&f), m);
        }
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let f = Field::with_bits(8).unwrap();
        let b = vec![5, 0, 250, 17];
        assert_eq!(SymbolMatrix::identity(4).solve(&f, &b).unwrap(), b);
        let d = [3, 9, 200, 1];
        let mut a = SymbolMatrix::zeros(4, 4);
        for (i, &x) in d.iter().enumerate() {
            a.set(i, i, x);
        }
        let x = a.solve(&f, &b).unwrap();
        for i in 0..4 {
            assert_eq!(x[i], f.mul(f.inv(d[i]).unwrap(), b[i]));
        }
    }

    #[test]
    fn solve_round_trip_random_invertible() {
        let f = Field::with_bits(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut solved = 0;
        while solved < 50 {
            let a = random_matrix(&mut rng, &f, 4, 4);
            if a.rank(&f) < 4 {
                assert_eq!(a.solve(&f, &[1, 2, 3, 4]), Err(LinalgError::Singular));
                continue;
            }
            let b: Vec<Symbol> = (0..4).map(|_| rng.gen_range(0..256)).collect();
            let x = a.solve(&f, &b).unwrap();
            assert_eq!(a.mul_vec(&f, &x).unwrap(), b);
            let inv = a.inverse(&f).unwrap();
            assert_eq!(a.mul(&f, &inv).unwrap(), SymbolMatrix::identity(4));
            solved += 1;
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let f = Field::with_bits(4).unwrap();
        let a = SymbolMatrix::from_rows(&[vec![1, 2], vec![2, f.mul(2, 2)]]).unwrap();
        assert_eq!(a.solve(&f, &[1, 1]), Err(LinalgError::Singular));
    }

    #[test]
    fn shape_errors() {
        let f = Field::with_bits(4).unwrap();
        assert!(SymbolMatrix::from_rows(&[vec![1, 2], vec![3]]).is_err());
        assert!(SymbolMatrix::from_vec(2, 2, vec![1]).is_err());
        let a = SymbolMatrix::identity(2);
        assert!(a.mul_vec(&f, &[1, 2, 3]).is_err());
        assert!(a.hstack(&SymbolMatrix::zeros(3, 1)).is_err());
    }

    proptest! {
        #[test]
        fn rank_is_transpose_invariant(seed in any::<u64>(), r in 1usize..9, c in 1usize..9) {
            let f = Field::with_bits(4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = random_matrix(&mut rng, &f, r, c);
            // sprinkle zeros so low-rank cases show up
            for i in 0..r {
                if rng.gen_bool(0.3) {
                    m.row_mut(i).iter_mut().for_each(|x| *x = 0);
                }
            }
            prop_assert_eq!(m.rank(&f), m.transpose().rank(&f));
        }
    }
}
