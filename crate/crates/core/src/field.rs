//! Exact arithmetic over the prime fields F_2, F_3, F_5 and F_7, plus the
//! row-reduction primitives the geometry code is built on.
//!
//! Field elements are stored as `u8` values in `[0, q)`; a [`PrimeField`]
//! carries the modulus and a small inverse table. Vectors are plain slices
//! of elements and matrices are dense row-major grids.

use std::fmt;

use crate::error::{Error, Result};

/// A prime field F_q with q in {2, 3, 5, 7}.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u8,
    inv: [u8; 8],
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.q)
    }
}

impl PrimeField {
    pub fn new(q: u32) -> Result<Self> {
        if !matches!(q, 2 | 3 | 5 | 7) {
            return Err(Error::UnsupportedField(q));
        }
        let q = q as u8;
        let mut inv = [0u8; 8];
        for a in 1..q {
            inv[a as usize] = (1..q).find(|&b| (a as u32 * b as u32) % q as u32 == 1).unwrap();
        }
        Ok(Self { q, inv })
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.q as u32
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.q as u16) as u8
    }

    /// Multiplicative inverse; `a` must be nonzero.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        debug_assert!(a != 0 && a < self.q);
        self.inv[a as usize]
    }

    /// Reduce an arbitrary integer into the field.
    pub fn reduce(&self, v: i64) -> u8 {
        v.rem_euclid(self.q as i64) as u8
    }

    pub fn dot(&self, a: &[u8], b: &[u8]) -> u8 {
        let s: u32 = a.iter().zip(b).map(|(&x, &y)| x as u32 * y as u32).sum();
        (s % self.q as u32) as u8
    }

    /// `acc += c * v`, coordinatewise.
    pub fn axpy(&self, acc: &mut [u8], c: u8, v: &[u8]) {
        if c == 0 {
            return;
        }
        for (a, &x) in acc.iter_mut().zip(v) {
            *a = self.add(*a, self.mul(c, x));
        }
    }

    /// Scale `v` so that its first nonzero coordinate is 1.
    ///
    /// Two nonzero vectors span the same projective point exactly when
    /// their normalizations coincide.
    pub fn normalize_projective(&self, v: &[u8]) -> Result<Vec<u8>> {
        let lead = v.iter().copied().find(|&x| x != 0).ok_or(Error::ZeroVector)?;
        let s = self.inv(lead);
        Ok(v.iter().map(|&x| self.mul(s, x)).collect())
    }
}

/// Dense matrix over a prime field, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {:?} {}x{}", self.field, self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: String = self.row(r).iter().map(|d| char::from(b'0' + d)).collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        Self { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Build from rows of arbitrary integers, reducing entries mod q.
    pub fn from_rows<R: AsRef<[i64]>>(field: PrimeField, rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend(r.iter().map(|&x| field.reduce(x)));
        }
        Ok(Self { field, rows: rows.len(), cols, data })
    }

    /// Build from already-reduced row-major data.
    pub fn from_data(field: PrimeField, rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        if let Some(&bad) = data.iter().find(|&&x| x as u32 >= field.order()) {
            return Err(Error::InvalidDimension(format!("entry {bad} not reduced mod {}", field.order())));
        }
        Ok(Self { field, rows, cols, data })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(field: PrimeField, height: usize, columns: &[Vec<u8>]) -> Result<Self> {
        let mut m = Self::zeros(field, height, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != height {
                return Err(Error::DimensionMismatch { expected: height, got: c.len() });
            }
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v;
    }
    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<u8> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn push_row(&mut self, row: &[u8]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: row.len() });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form and rank. The shape is preserved; zero rows
    /// end up at the bottom.
    pub fn rref(&self) -> (Matrix, usize) {
        let f = self.field;
        let mut m = self.clone();
        let mut rank = 0;
        for col in 0..m.cols {
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(rank, p);
            let s = f.inv(m.get(rank, col));
            for c in 0..m.cols {
                let v = f.mul(s, m.get(rank, c));
                m.set(rank, c, v);
            }
            let pivot_row: Vec<u8> = m.row(rank).to_vec();
            for r in 0..m.rows {
                if r != rank {
                    let factor = m.get(r, col);
                    if factor != 0 {
                        let start = r * m.cols;
                        let neg = f.neg(factor);
                        f.axpy(&mut m.data[start..start + m.cols], neg, &pivot_row);
                    }
                }
            }
            rank += 1;
            if rank == m.rows {
                break;
            }
        }
        (m, rank)
    }

    /// RREF with the zero rows dropped: a canonical basis of the row space.
    pub fn row_basis(&self) -> Matrix {
        let (mut m, rank) = self.rref();
        m.data.truncate(rank * m.cols);
        m.rows = rank;
        m
    }

    pub fn rank(&self) -> usize {
        self.rref().1
    }

    /// Pivot columns of a matrix already in RREF.
    pub fn pivots(&self) -> Vec<usize> {
        (0..self.rows)
            .filter_map(|r| self.row(r).iter().position(|&x| x != 0))
            .collect()
    }

    /// Whether `v` lies in the row space of `self`, which must be in RREF.
    pub fn in_span(&self, v: &[u8]) -> Result<bool> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let f = self.field;
        let mut rest = v.to_vec();
        for r in 0..self.rows {
            let row = self.row(r);
            let Some(p) = row.iter().position(|&x| x != 0) else { continue };
            let c = rest[p];
            if c != 0 {
                f.axpy(&mut rest, f.neg(c), row);
            }
        }
        Ok(rest.iter().all(|&x| x == 0))
    }

    /// Row vector times matrix: `v * self`.
    pub fn left_mul(&self, v: &[u8]) -> Vec<u8> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0u8; self.cols];
        for (r, &c) in v.iter().enumerate() {
            self.field.axpy(&mut out, c, self.row(r));
        }
        out
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(self.field, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, 1);
        }
        let (red, rank) = aug.rref();
        if rank < n || (0..n).any(|i| red.get(i, i) != 1) {
            return None;
        }
        let mut out = Matrix::zeros(self.field, n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, red.get(r, n + c));
            }
        }
        Some(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

/// Visit every `m x k` matrix in reduced row echelon form of full rank `m`,
/// i.e. one canonical basis per `m`-dimensional subspace of F_q^k.
///
/// Pivot sets are visited in lexicographic order; for each pivot set the
/// free entries count up in base q with the last free entry fastest.
pub fn for_each_rref_basis<F: FnMut(&[u8])>(q: u32, m: usize, k: usize, mut visit: F) {
    if m > k {
        return;
    }
    let q = q as u8;
    let mut pivots: Vec<usize> = (0..m).collect();
    let mut buf = vec![0u8; m * k];
    loop {
        let free: Vec<usize> = (0..m)
            .flat_map(|i| {
                let pivots = &pivots;
                (pivots[i] + 1..k).filter(move |c| !pivots.contains(c)).map(move |c| i * k + c)
            })
            .collect();
        buf.iter_mut().for_each(|x| *x = 0);
        for (i, &p) in pivots.iter().enumerate() {
            buf[i * k + p] = 1;
        }
        loop {
            visit(&buf);
            let mut advanced = false;
            for &slot in free.iter().rev() {
                if buf[slot] + 1 < q {
                    buf[slot] += 1;
                    advanced = true;
                    break;
                }
                buf[slot] = 0;
            }
            if !advanced {
                break;
            }
        }
        if m == 0 {
            return;
        }
        // next pivot combination
        let Some(i) = (0..m).rev().find(|&i| pivots[i] < k - m + i) else {
            return;
        };
        pivots[i] += 1;
        for j in i + 1..m {
            pivots[j] = pivots[j - 1] + 1;
        }
    }
}
