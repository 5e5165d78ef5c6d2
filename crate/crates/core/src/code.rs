//! Linear codes, their associated point multisets and generalized weights.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{for_each_rref_basis, Matrix, PrimeField};
use crate::geometry::{gaussian_binomial, ProjectiveSpace};
use crate::multiset::Multiset;

/// Default cap on the number of subcodes enumerated by
/// [`LinearCode::weight_direct`].
pub const DEFAULT_SUBCODE_BUDGET: u128 = 5_000_000;

const BATCH: usize = 1 << 14;

/// A linear [n, k]_q code given by a full-rank generator matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    gen: Matrix,
}

/// d_1 < d_2 < ... < d_k; `d[r-1]` holds d_r.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightHierarchy {
    pub d: Vec<u64>,
}

impl WeightHierarchy {
    pub fn d(&self, r: usize) -> u64 {
        self.d[r - 1]
    }
    pub fn is_strictly_increasing(&self) -> bool {
        self.d.windows(2).all(|w| w[0] < w[1])
    }
}

impl LinearCode {
    pub fn new(gen: Matrix) -> Result<Self> {
        if gen.rows() == 0 || gen.cols() < gen.rows() {
            return Err(Error::InvalidDimension(format!("{}x{} is not a generator matrix shape", gen.rows(), gen.cols())));
        }
        let rank = gen.rank();
        if rank < gen.rows() {
            return Err(Error::RankDeficient { rank, expected: gen.rows() });
        }
        Ok(Self { gen })
    }

    pub fn generator(&self) -> &Matrix {
        &self.gen
    }
    pub fn field(&self) -> PrimeField {
        self.gen.field()
    }
    pub fn q(&self) -> u32 {
        self.gen.field().order()
    }
    pub fn k(&self) -> usize {
        self.gen.rows()
    }
    pub fn n(&self) -> usize {
        self.gen.cols()
    }

    /// Index of the first zero column, if any.
    pub fn zero_column(&self) -> Option<usize> {
        (0..self.n()).find(|&j| (0..self.k()).all(|i| self.gen.get(i, j) == 0))
    }

    pub fn is_full_length(&self) -> bool {
        self.zero_column().is_none()
    }

    /// The multiset of points of PG(k-1, q) spanned by the columns.
    pub fn to_multiset(&self) -> Result<Multiset> {
        if let Some(j) = self.zero_column() {
            return Err(Error::NotFullLength(j));
        }
        if self.k() < 2 {
            return Err(Error::InvalidDimension("codes of dimension 1 have no projective space of dimension ≥ 1".into()));
        }
        let space = ProjectiveSpace::shared(self.q(), self.k() - 1)?;
        let mut ms = Multiset::empty(Arc::clone(&space));
        for j in 0..self.n() {
            ms.add(space.point_index(&self.gen.column(j))?, 1);
        }
        Ok(ms)
    }

    /// Columns are the canonical points repeated by multiplicity, in point order.
    pub fn from_multiset(ms: &Multiset) -> Result<Self> {
        let span_dim = ms.span_dim();
        let space = ms.space();
        if span_dim != space.dim() as isize {
            return Err(Error::NotSpanning { span_dim });
        }
        let cols: Vec<Vec<u8>> = ms.expanded().into_iter().map(|p| space.coords(p).to_vec()).collect();
        Self::new(Matrix::from_columns(space.field(), space.vector_dim(), &cols)?)
    }

    /// d_r = n − w_{k−r−1}, with w taken from the associated multiset.
    pub fn hierarchy_geometric(&self) -> Result<WeightHierarchy> {
        let n = self.n() as u64;
        if self.k() == 1 {
            if let Some(j) = self.zero_column() {
                return Err(Error::NotFullLength(j));
            }
            return Ok(WeightHierarchy { d: vec![n] });
        }
        let prof = self.to_multiset()?.arc_profile()?;
        let k = self.k();
        let d = (1..=k).map(|r| if r == k { n } else { n - prof.w[k - r - 1] }).collect();
        Ok(WeightHierarchy { d })
    }

    /// d_r by enumerating every r-dimensional subcode and taking the
    /// smallest support.
    pub fn weight_direct(&self, r: usize, budget: u128) -> Result<u64> {
        let (k, n) = (self.k(), self.n());
        if r == 0 || r > k {
            return Err(Error::InvalidQuery(format!("subcode dimension {r} outside 1..={k}")));
        }
        let count = gaussian_binomial(k as u32, r as u32, self.q() as u64);
        if count > budget {
            return Err(Error::BudgetExceeded(format!("{count} subcodes of dimension {r} exceed budget {budget}")));
        }
        let f = self.field();
        let cols: Vec<Vec<u8>> = (0..n).map(|j| self.gen.column(j)).collect();
        let support = |basis: &[u8]| -> u64 {
            cols.iter().filter(|g| basis.chunks(k).any(|b| f.dot(b, g) != 0)).count() as u64
        };
        let stride = r * k;
        let mut best = u64::MAX;
        let mut batch: Vec<u8> = Vec::with_capacity(BATCH * stride);
        let flush = |batch: &mut Vec<u8>, best: &mut u64| {
            let m = batch.par_chunks(stride).map(support).min().unwrap_or(u64::MAX);
            *best = (*best).min(m);
            batch.clear();
        };
        for_each_rref_basis(self.q(), r, k, |b| {
            batch.extend_from_slice(b);
            if batch.len() == BATCH * stride {
                flush(&mut batch, &mut best);
            }
        });
        flush(&mut batch, &mut best);
        Ok(best)
    }

    /// The full hierarchy by direct enumeration.
    pub fn hierarchy_direct(&self, budget: u128) -> Result<WeightHierarchy> {
        let d = (1..=self.k()).map(|r| self.weight_direct(r, budget)).collect::<Result<_>>()?;
        Ok(WeightHierarchy { d })
    }

    /// Serializes in the matrix file format.
    pub fn to_matrix_string(&self) -> String {
        let mut s = format!("{} {} {}\n", self.q(), self.k(), self.n());
        for i in 0..self.k() {
            for &x in self.gen.row(i) {
                write!(s, "{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Parses the matrix file format: `q k n` followed by k rows of n digits.
    pub fn from_matrix_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse { line: hl + 1, msg: format!("bad header field {t:?}") }))
            .collect::<Result<_>>()?;
        let [q, k, n] = h[..] else {
            return Err(Error::Parse { line: hl + 1, msg: "header must be `q k n`".into() });
        };
        let field = PrimeField::new(q as u32)?;
        let mut data = Vec::with_capacity(k * n);
        for _ in 0..k {
            let (i, line) = lines.next().ok_or(Error::Parse { line: hl + 1, msg: format!("expected {k} rows") })?;
            let row = line.trim();
            if row.len() != n {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {n} digits, found {}", row.len()) });
            }
            for ch in row.chars() {
                match ch.to_digit(10) {
                    Some(x) if x < q as u32 => data.push(x as u8),
                    _ => return Err(Error::Parse { line: i + 1, msg: format!("invalid symbol {ch:?}") }),
                }
            }
        }
        if let Some((i, _)) = lines.next() {
            return Err(Error::Parse { line: i + 1, msg: "trailing content".into() });
        }
        Self::new(Matrix::from_data(field, k, n, data)?)
    }
}
