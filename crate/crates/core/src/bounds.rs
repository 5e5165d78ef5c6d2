//! Griesmer-type functions and upper bounds on m_q^(r)(K, w), the largest
//! size of a multiset in PG(K,q) meeting every r-subspace in at most w points.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::gaussian_v;
use crate::oracle::Oracle;

#[inline]
fn ceil_div(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

/// Σ_{i<k} ⌈d/q^i⌉.
pub fn griesmer_g(q: u32, k: u32, d: u64) -> u64 {
    let mut qi = 1u64;
    let mut total = 0;
    for _ in 0..k {
        total += ceil_div(d, qi);
        qi = qi.saturating_mul(q as u64);
    }
    total
}

/// d + Σ_{i=1}^{k−r} ⌈d/(q^i v_r)⌉, the Griesmer bound for the r-th
/// generalized weight. Zero for d = 0.
pub fn griesmer_g_r(q: u32, k: u32, r: u32, d: u64) -> u64 {
    if d == 0 {
        return 0;
    }
    let vr = gaussian_v(r, q as u64);
    let mut qi = vr;
    let mut total = d;
    for _ in 1..=(k - r) {
        qi = qi.saturating_mul(q as u64);
        total += ceil_div(d, qi);
    }
    total
}

/// d = σ q^{k−1} − Σ_{i=0}^{k−2} ε_i q^i with 0 ≤ ε_i < q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaEps {
    pub sigma: u64,
    pub eps: Vec<u64>,
}

impl SigmaEps {
    pub fn decompose(q: u32, k: u32, d: u64) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidQuery("decomposition needs d ≥ 1 and k ≥ 1".into()));
        }
        let top = (q as u64).pow(k - 1);
        let sigma = ceil_div(d, top);
        let mut deficit = sigma * top - d;
        let mut eps = Vec::with_capacity(k as usize - 1);
        for _ in 0..k - 1 {
            eps.push(deficit % q as u64);
            deficit /= q as u64;
        }
        Ok(Self { sigma, eps })
    }

    pub fn reconstruct(&self, q: u32) -> u64 {
        let k = self.eps.len() as u32 + 1;
        let neg: u64 = self.eps.iter().enumerate().map(|(i, &e)| e * (q as u64).pow(i as u32)).sum();
        self.sigma * (q as u64).pow(k - 1) - neg
    }

    #[inline]
    fn e(&self, i: i64) -> u64 {
        if i < 0 {
            0
        } else {
            self.eps.get(i as usize).copied().unwrap_or(0)
        }
    }
}

/// w_j = t + Σ_{i=k−1−j}^{k−1} ⌈d/q^i⌉ for an arc of a Griesmer code of
/// length g_q(k,d) + t.
pub fn griesmer_code_w(q: u32, k: u32, d: u64, t: u64, j: u32) -> u64 {
    let mut total = t;
    for i in (k - 1 - j)..k {
        total += ceil_div(d, (q as u64).pow(i));
    }
    total
}

/// The r-th generalized weight of any [g_q(k,d), k, d]_q Griesmer code.
pub fn griesmer_code_dr(q: u32, k: u32, d: u64, r: u32) -> Result<u64> {
    if r == 0 || r > k {
        return Err(Error::InvalidQuery(format!("r={r} outside 1..={k}")));
    }
    let se = SigmaEps::decompose(q, k, d)?;
    let q64 = q as u64;
    let inner: u64 = (r..k).map(|i| se.e(i as i64 - 1) * q64.pow(i - r)).sum();
    let tail: u64 = (1..r).map(|i| se.e(i as i64 - 1) * gaussian_v(i, q64)).sum();
    Ok(gaussian_v(r, q64) * (se.sigma * q64.pow(k - r) - inner) - tail)
}

/// A question about m_q^(r)(K, w).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundQuery {
    pub q: u32,
    /// Ambient projective dimension.
    pub big_k: u32,
    /// Dimension of the subspaces whose multiplicity is capped.
    pub r: u32,
    pub w: u64,
}

impl BoundQuery {
    pub fn new(q: u32, big_k: u32, r: u32, w: u64) -> Result<Self> {
        crate::field::PrimeField::new(q)?;
        if r == 0 || r > big_k {
            return Err(Error::InvalidQuery(format!("need 1 ≤ r ≤ K, got r={r}, K={big_k}")));
        }
        if w == 0 {
            return Err(Error::InvalidQuery("w must be positive".into()));
        }
        Ok(Self { q, big_k, r, w })
    }

    fn nontrivial(&self) -> Result<()> {
        if self.r == self.big_k {
            Err(Error::InvalidQuery("trivial query: r = K caps the whole space".into()))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for BoundQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m_{}^({})({},{})", self.q, self.r, self.big_k, self.w)
    }
}

/// Whether an (n, w)-arc could exist by the generalized Griesmer bound.
pub fn griesmer_admits(query: &BoundQuery, n: u64) -> bool {
    let k = query.big_k + 1;
    n < query.w || n >= griesmer_g_r(query.q, k, query.big_k - query.r, n - query.w)
}

/// The largest n ≥ w with n ≥ g_q^{(K−r)}(K+1, n−w).
pub fn griesmer_upper_bound(query: &BoundQuery) -> Result<u64> {
    query.nontrivial()?;
    let ceiling = query.w * gaussian_v(query.big_k + 1, query.q as u64);
    let mut n = query.w;
    while n < ceiling && griesmer_admits(query, n + 1) {
        n += 1;
    }
    Ok(n)
}

/// ⌊w v_{K+1} / v_{r+1}⌋: each point lies on the same number of r-subspaces.
pub fn counting_bound(query: &BoundQuery) -> u64 {
    let q = query.q as u64;
    query.w * gaussian_v(query.big_k + 1, q) / gaussian_v(query.r + 1, q)
}

/// The value of one step of the coding recursion and how it was settled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodingStep {
    /// Dimension of the codes consulted.
    pub k: u32,
    pub s_in: u64,
    pub s_out: u64,
    /// Why no [s_out+1, k, s_out+1−s_in] code exists.
    pub nonexistence: NonexistenceReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonexistenceReason {
    Griesmer,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodingBound {
    Known { value: u64, steps: Vec<CodingStep> },
    /// The oracle lacks an exact entry for this (q, n, k).
    Unknown { missing: (u32, u64, u32), steps: Vec<CodingStep> },
}

impl CodingBound {
    pub fn value(&self) -> Option<u64> {
        match self {
            Self::Known { value, .. } => Some(*value),
            Self::Unknown { .. } => None,
        }
    }

    /// s_r, s_{r+1}, ..., as far as the recursion got.
    pub fn chain(&self) -> Vec<u64> {
        let steps = match self {
            Self::Known { steps, .. } | Self::Unknown { steps, .. } => steps,
        };
        let mut out: Vec<u64> = steps.first().map(|s| vec![s.s_in]).unwrap_or_default();
        out.extend(steps.iter().map(|s| s.s_out));
        out
    }
}

enum StepOutcome {
    Settled(u64, NonexistenceReason),
    Missing(u64),
}

/// Largest n such that an [n, k, n−s]_q code exists.
fn coding_step(q: u32, k: u32, s: u64, oracle: &Oracle) -> StepOutcome {
    // [n,k,1] for n ≥ k and the parity-extended [n,k,2] for n > k.
    let exists_trivially = |n: u64| (n - s == 1 && n >= k as u64) || (n - s == 2 && n > k as u64);
    let mut lo = s;
    let mut n = s + 1;
    loop {
        let d = n - s;
        if griesmer_g(q, k, d) > n {
            return if lo == n - 1 { StepOutcome::Settled(lo, NonexistenceReason::Griesmer) } else { StepOutcome::Missing(lo + 1) };
        }
        let entry = oracle.get(q, n, k);
        match entry {
            Some(e) if e.d >= d => lo = n,
            Some(e) if e.exact => {
                return if lo == n - 1 { StepOutcome::Settled(lo, NonexistenceReason::Oracle) } else { StepOutcome::Missing(lo + 1) };
            }
            _ if exists_trivially(n) => lo = n,
            _ => {}
        }
        n += 1;
    }
}

/// Bounds m_q^(r)(K, w) through optimal code lengths: s_r = w and s_{j+1} is
/// the largest n admitting an [n, j+2, n − s_j]_q code; the answer is s_K.
pub fn coding_upper_bound(query: &BoundQuery, oracle: &Oracle) -> Result<CodingBound> {
    query.nontrivial()?;
    let mut s = query.w;
    let mut steps = Vec::new();
    for j in query.r..query.big_k {
        let k = j + 2;
        match coding_step(query.q, k, s, oracle) {
            StepOutcome::Settled(v, why) => {
                steps.push(CodingStep { k, s_in: s, s_out: v, nonexistence: why });
                s = v;
            }
            StepOutcome::Missing(n) => return Ok(CodingBound::Unknown { missing: (query.q, n, k), steps }),
        }
    }
    Ok(CodingBound::Known { value: s, steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundSource {
    Griesmer,
    Coding,
    Counting,
}

impl fmt::Display for BoundSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Griesmer => "griesmer",
            Self::Coding => "coding",
            Self::Counting => "counting",
        })
    }
}

/// The smallest applicable bound. Ties prefer Griesmer, then coding.
pub fn best_upper_bound(query: &BoundQuery, oracle: &Oracle) -> Result<(u64, BoundSource)> {
    let mut best = (griesmer_upper_bound(query)?, BoundSource::Griesmer);
    if let Some(c) = coding_upper_bound(query, oracle)?.value() {
        if c < best.0 {
            best = (c, BoundSource::Coding);
        }
    }
    let cnt = counting_bound(query);
    if cnt < best.0 {
        best = (cnt, BoundSource::Counting);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bq(q: u32, k: u32, r: u32, w: u64) -> BoundQuery {
        BoundQuery::new(q, k, r, w).unwrap()
    }

    #[test]
    fn griesmer_values() {
        assert_eq!(griesmer_g(2, 4, 8), 15);
        assert_eq!(griesmer_g(2, 6, 18), 38);
        assert_eq!(griesmer_g(2, 7, 60), 120);
        assert_eq!(griesmer_g_r(2, 7, 2, 60), 81);
        assert_eq!(griesmer_g_r(2, 7, 2, 61), 84);
        assert_eq!(griesmer_g_r(3, 5, 5, 17), 17);
    }

    #[test]
    fn decompositions() {
        assert_eq!(SigmaEps::decompose(2, 7, 60).unwrap(), SigmaEps { sigma: 1, eps: vec![0, 0, 1, 0, 0, 0] });
        assert_eq!(SigmaEps::decompose(2, 4, 8).unwrap().eps, vec![0, 0, 0]);
        assert_eq!(SigmaEps::decompose(3, 5, 54).unwrap(), SigmaEps { sigma: 1, eps: vec![0, 0, 0, 1] });
    }

    #[test]
    fn griesmer_code_weights() {
        assert_eq!(griesmer_code_w(2, 4, 8, 0, 1), 3);
        assert_eq!(griesmer_code_w(2, 4, 8, 2, 3), 17);
        assert_eq!(griesmer_code_w(2, 7, 60, 0, 0), 1);
        assert_eq!(griesmer_code_dr(2, 4, 8, 2).unwrap(), 12);
        assert_eq!(griesmer_code_dr(2, 4, 8, 3).unwrap(), 14);
        assert_eq!(griesmer_code_dr(2, 7, 60, 2).unwrap(), 90);
        assert_eq!(griesmer_g_r(2, 7, 2, 90), 120);
        assert_eq!(griesmer_code_dr(3, 5, 40, 1).unwrap(), 40);
    }

    #[test]
    fn griesmer_upper_bounds() {
        assert_eq!(griesmer_upper_bound(&bq(2, 6, 4, 21)).unwrap(), 81);
        assert_eq!(griesmer_upper_bound(&bq(2, 3, 1, 2)).unwrap(), 8);
        assert_eq!(griesmer_upper_bound(&bq(2, 4, 2, 7)).unwrap(), 31);
        assert!(griesmer_upper_bound(&bq(2, 3, 3, 5)).is_err());
    }

    #[test]
    fn counting_bounds() {
        assert_eq!(counting_bound(&bq(2, 3, 1, 2)), 10);
        assert_eq!(counting_bound(&bq(2, 3, 3, 9)), 9);
        assert_eq!(counting_bound(&bq(3, 3, 1, 2)), 20);
    }

    #[test]
    fn coding_chain_of_the_worked_example() {
        let o = Oracle::builtin();
        let c = coding_upper_bound(&bq(2, 6, 4, 21), &o).unwrap();
        assert_eq!(c.chain(), vec![21, 39, 75]);
        assert_eq!(c.value(), Some(75));
    }

    #[test]
    fn coding_bound_reports_missing_data() {
        let c = coding_upper_bound(&bq(2, 6, 4, 21), &Oracle::default()).unwrap();
        assert_eq!(c, CodingBound::Unknown { missing: (2, 24, 6), steps: vec![] });
    }

    #[test]
    fn single_step_recursion() {
        let o = Oracle::builtin();
        let c = coding_upper_bound(&bq(3, 3, 2, 4), &o).unwrap();
        // [n,4,n−4]_3: Griesmer rules out n = 11 and [10,4,6]_3 exists.
        assert_eq!(c.chain(), vec![4, 10]);
    }

    #[test]
    fn best_bounds() {
        let o = Oracle::builtin();
        assert_eq!(best_upper_bound(&bq(2, 6, 4, 21), &o).unwrap(), (75, BoundSource::Coding));
        assert_eq!(best_upper_bound(&bq(2, 4, 2, 7), &o).unwrap(), (31, BoundSource::Griesmer));
        assert_eq!(best_upper_bound(&bq(2, 3, 1, 3), &o).unwrap(), (15, BoundSource::Griesmer));
        assert_eq!(best_upper_bound(&bq(3, 3, 1, 2), &o).unwrap(), (10, BoundSource::Coding));
    }
}
