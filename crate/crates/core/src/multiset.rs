//! Multisets of points in PG(K, q) and their subspace statistics.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Matrix;
use crate::geometry::{gaussian_v, Projection, ProjectiveSpace, Subspace};

/// Number of candidate points sampled by [`Multiset::add_generic_point`]
/// when the subspace family is too large to enumerate.
pub const GENERIC_POINT_SAMPLES: usize = 1000;
const GENERIC_POINT_SEED: u64 = 0x5eed;

/// A map from the points of a projective space to non-negative integers.
#[derive(Clone)]
pub struct Multiset {
    space: Arc<ProjectiveSpace>,
    mult: Vec<u32>,
    n: u64,
}

impl std::fmt::Debug for Multiset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Multiset({:?}, n={})", self.space, self.n)
    }
}

impl PartialEq for Multiset {
    fn eq(&self, other: &Self) -> bool {
        *self.space == *other.space && self.mult == other.mult
    }
}
impl Eq for Multiset {}

/// Maximum (`w`) and minimum (`u`) multiplicity of r-subspaces, r = 0..=K.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcProfile {
    pub w: Vec<u64>,
    pub u: Vec<u64>,
}

impl Multiset {
    pub fn empty(space: Arc<ProjectiveSpace>) -> Self {
        let mult = vec![0; space.num_points()];
        Self { space, mult, n: 0 }
    }

    pub fn from_multiplicities(space: Arc<ProjectiveSpace>, mult: Vec<u32>) -> Result<Self> {
        if mult.len() != space.num_points() {
            return Err(Error::DimensionMismatch { expected: space.num_points(), got: mult.len() });
        }
        let n = mult.iter().map(|&m| m as u64).sum();
        Ok(Self { space, mult, n })
    }

    /// Each listed point index counted once per occurrence.
    pub fn from_points(space: Arc<ProjectiveSpace>, points: &[usize]) -> Self {
        let mut ms = Self::empty(space);
        for &p in points {
            ms.add(p, 1);
        }
        ms
    }

    /// Multiplicity `s` at every point.
    pub fn full(space: Arc<ProjectiveSpace>, s: u32) -> Self {
        let mult = vec![s; space.num_points()];
        let n = s as u64 * mult.len() as u64;
        Self { space, mult, n }
    }

    /// The characteristic function of a subspace.
    pub fn characteristic(space: Arc<ProjectiveSpace>, s: &Subspace) -> Self {
        let pts = space.points_of(s);
        Self::from_points(space, &pts)
    }

    pub fn space(&self) -> &Arc<ProjectiveSpace> {
        &self.space
    }
    pub fn cardinality(&self) -> u64 {
        self.n
    }
    pub fn multiplicities(&self) -> &[u32] {
        &self.mult
    }
    pub fn get(&self, p: usize) -> u32 {
        self.mult[p]
    }
    pub fn max_multiplicity(&self) -> u32 {
        self.mult.iter().copied().max().unwrap_or(0)
    }

    pub fn add(&mut self, p: usize, c: u32) {
        self.mult[p] += c;
        self.n += c as u64;
    }

    /// Lowers the multiplicity of `p` by `c`; fails if it would go negative.
    pub fn remove(&mut self, p: usize, c: u32) -> Result<()> {
        if self.mult[p] < c {
            return Err(Error::InvalidQuery(format!("point {p} has multiplicity {} < {c}", self.mult[p])));
        }
        self.mult[p] -= c;
        self.n -= c as u64;
        Ok(())
    }

    /// Points with nonzero multiplicity, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.mult.len()).filter(|&p| self.mult[p] > 0).collect()
    }

    /// Points listed with repetition, ascending.
    pub fn expanded(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n as usize);
        for (p, &m) in self.mult.iter().enumerate() {
            out.extend(std::iter::repeat(p).take(m as usize));
        }
        out
    }

    /// Projective dimension of the span of the support (-1 when empty).
    pub fn span_dim(&self) -> isize {
        let k = self.space.vector_dim();
        let rows: Vec<u8> = self.support().iter().flat_map(|&p| self.space.coords(p).to_vec()).collect();
        let m = Matrix::from_data(self.space.field(), rows.len() / k, k, rows).unwrap();
        m.rank() as isize - 1
    }

    pub fn spans(&self) -> bool {
        self.span_dim() == self.space.dim() as isize
    }

    /// 𝒦(S): the sum of multiplicities over the points of `s`.
    pub fn subspace_multiplicity(&self, s: &Subspace) -> u64 {
        if let Ok(fam) = self.space.family(s.dim()) {
            if let Some(i) = s.index().or_else(|| fam.index_of(s)) {
                return self.sum_over(fam.points(i));
            }
        }
        self.space.points_of(s).iter().map(|&p| self.mult[p] as u64).sum()
    }

    #[inline]
    fn sum_over(&self, pts: &[u32]) -> u64 {
        pts.iter().map(|&p| self.mult[p as usize] as u64).sum()
    }

    /// 𝒦(S) for every r-subspace S, in family order.
    pub fn subspace_values(&self, r: usize) -> Result<Vec<u64>> {
        let fam = self.space.family(r)?;
        Ok((0..fam.len()).into_par_iter().map(|s| self.sum_over(fam.points(s))).collect())
    }

    /// (max, argmax) of 𝒦 over r-subspaces; ties go to the lowest index.
    pub fn max_subspace(&self, r: usize) -> Result<(u64, usize)> {
        let vals = self.subspace_values(r)?;
        let mut best = (0, 0);
        for (i, &v) in vals.iter().enumerate() {
            if v > best.0 || i == 0 {
                best = (v, i);
            }
        }
        Ok(best)
    }

    /// w_r: the maximum multiplicity of an r-subspace.
    pub fn w(&self, r: usize) -> Result<u64> {
        if r == self.space.dim() {
            return Ok(self.n);
        }
        if r == 0 {
            return Ok(self.max_multiplicity() as u64);
        }
        Ok(self.subspace_values(r)?.into_iter().max().unwrap_or(0))
    }

    /// w_r and u_r for all r = 0..=K.
    pub fn arc_profile(&self) -> Result<ArcProfile> {
        let kk = self.space.dim();
        let mut w = Vec::with_capacity(kk + 1);
        let mut u = Vec::with_capacity(kk + 1);
        for r in 0..=kk {
            let vals = self.subspace_values(r)?;
            w.push(vals.iter().copied().max().unwrap_or(0));
            u.push(vals.iter().copied().min().unwrap_or(0));
        }
        Ok(ArcProfile { w, u })
    }

    /// s - 𝒦.
    pub fn complement(&self, s: u32) -> Result<Self> {
        let max = self.max_multiplicity();
        if s < max {
            return Err(Error::ComplementLevel { level: s, max });
        }
        let mult: Vec<u32> = self.mult.iter().map(|&m| s - m).collect();
        Self::from_multiplicities(Arc::clone(&self.space), mult)
    }

    /// Pointwise sum.
    pub fn msum(&self, other: &Self) -> Result<Self> {
        if *self.space != *other.space {
            return Err(Error::SpaceMismatch);
        }
        let mult = self.mult.iter().zip(&other.mult).map(|(a, b)| a + b).collect();
        Ok(Self { space: Arc::clone(&self.space), mult, n: self.n + other.n })
    }

    /// The multiset induced on the screen `pi` by projecting from `delta`.
    ///
    /// The result lives in PG(dim pi, q), with coordinates taken relative to
    /// the RREF basis of `pi`.
    pub fn induced_projection(&self, delta: &Subspace, pi: &Subspace) -> Result<Self> {
        let proj = Projection::new(&self.space, delta, pi)?;
        if pi.dim() == 0 {
            return Err(Error::InvalidProjection("screen must have dimension at least 1".into()));
        }
        let screen = ProjectiveSpace::shared(self.space.q(), pi.dim())?;
        let mut out = Self::empty(Arc::clone(&screen));
        for p in self.support() {
            match proj.project_to_screen(&self.space, &screen, p) {
                Ok(img) => out.add(img, self.mult[p]),
                Err(Error::ProjectionOnCenter) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Adds one point chosen to keep w_r as small as possible, ties to the
    /// lowest point index.
    ///
    /// If the r-subspaces cannot be enumerated under the space's cap, a fixed
    /// sample of points is scanned instead and a point of least multiplicity
    /// is taken.
    pub fn add_generic_point(&self, r: usize) -> Result<Self> {
        let p = self.generic_point(r)?;
        let mut out = self.clone();
        out.add(p, 1);
        Ok(out)
    }

    /// The point [`Multiset::add_generic_point`] would add.
    pub fn generic_point(&self, r: usize) -> Result<usize> {
        let npts = self.space.num_points();
        if r > self.space.dim() {
            return Err(Error::InvalidDimension(format!("subspace dimension {r} exceeds {}", self.space.dim())));
        }
        if r == self.space.dim() {
            return Ok(0);
        }
        match self.space.family(r) {
            Ok(fam) => {
                let vals = self.subspace_values(r)?;
                let best = (0..npts)
                    .into_par_iter()
                    .map(|p| {
                        let m = fam.through(p).iter().map(|&s| vals[s as usize]).max().unwrap_or(0);
                        (m, p)
                    })
                    .min()
                    .unwrap();
                Ok(best.1)
            }
            Err(Error::TooManySubspaces { .. }) => {
                let mut rng = ChaCha8Rng::seed_from_u64(GENERIC_POINT_SEED);
                let take = GENERIC_POINT_SAMPLES.min(npts);
                let mut cand: Vec<usize> = sample(&mut rng, npts, take).into_iter().collect();
                cand.sort_unstable();
                Ok(cand.into_iter().min_by_key(|&p| (self.mult[p], p)).unwrap())
            }
            Err(e) => Err(e),
        }
    }

    /// Serializes in the arc file format.
    pub fn to_arc_string(&self) -> String {
        let mut s = format!("{} {} {}\n", self.space.q(), self.space.dim(), self.n);
        for p in self.support() {
            for c in self.space.coords(p) {
                write!(s, "{c} ").unwrap();
            }
            writeln!(s, "{}", self.mult[p]).unwrap();
        }
        s
    }

    /// Parses the arc file format. Point lines may repeat and need not be
    /// canonical; their multiplicities are accumulated.
    pub fn from_arc_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let h = parse_ints(header, hl + 1)?;
        if h.len() != 3 {
            return Err(Error::Parse { line: hl + 1, msg: "header must be `q K n`".into() });
        }
        let space = ProjectiveSpace::shared(h[0] as u32, h[1] as usize)?;
        let k = space.vector_dim();
        let mut ms = Self::empty(Arc::clone(&space));
        for (i, line) in lines {
            let v = parse_ints(line, i + 1)?;
            if v.len() != k + 1 {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} coordinates and a multiplicity", k) });
            }
            let coords: Vec<u8> = v[..k].iter().map(|&c| space.field().reduce(c as i64)).collect();
            let p = space.point_index(&coords).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            ms.add(p, v[k] as u32);
        }
        if ms.n != h[2] {
            return Err(Error::Parse { line: hl + 1, msg: format!("header says n={} but points sum to {}", h[2], ms.n) });
        }
        Ok(ms)
    }

    /// Reference value of w_r straight from incidence tests, for cross-checks.
    pub fn w_naive(&self, r: usize) -> Result<u64> {
        let subs = self.space.enumerate_subspaces(r)?;
        Ok(subs
            .iter()
            .map(|s| (0..self.mult.len()).filter(|&p| self.space.incident(p, s)).map(|p| self.mult[p] as u64).sum())
            .max()
            .unwrap_or(0))
    }
}

fn parse_ints(line: &str, lineno: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| t.parse::<u64>().map_err(|e| Error::Parse { line: lineno, msg: format!("{t:?}: {e}") }))
        .collect()
}

/// Cardinality of σ copies of PG(K,q) minus subspaces of the given dimensions.
pub fn solomon_stiffler_cardinality(q: u32, kk: usize, sigma: u64, removed: &[usize]) -> i64 {
    let full = sigma * gaussian_v(kk as u32 + 1, q as u64);
    full as i64 - removed.iter().map(|&d| gaussian_v(d as u32 + 1, q as u64) as i64).sum::<i64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(q: u32, k: usize) -> Arc<ProjectiveSpace> {
        ProjectiveSpace::shared(q, k).unwrap()
    }

    #[test]
    fn full_space_profile() {
        let ms = Multiset::full(space(2, 3), 1);
        let p = ms.arc_profile().unwrap();
        assert_eq!(p.w, vec![1, 3, 7, 15]);
        assert_eq!(p.u, vec![1, 3, 7, 15]);
    }

    #[test]
    fn plane_values() {
        let s = space(2, 4);
        let plane = s.span(&[&[1, 0, 0, 0, 0], &[0, 1, 0, 0, 0], &[0, 0, 1, 0, 0]]).unwrap();
        let ms = Multiset::characteristic(Arc::clone(&s), &plane);
        assert_eq!(ms.subspace_multiplicity(&plane), 7);
        assert_eq!(Multiset::empty(Arc::clone(&s)).subspace_multiplicity(&plane), 0);
        let c = ms.complement(1).unwrap();
        assert_eq!(c.cardinality(), 24);
        assert_eq!(c.arc_profile().unwrap().u[2], 0);
    }

    #[test]
    fn complement_edge_cases() {
        assert_eq!(Multiset::full(space(2, 2), 1).complement(1).unwrap().cardinality(), 0);
        assert_eq!(Multiset::empty(space(2, 1)).complement(2).unwrap().cardinality(), 6);
        assert_eq!(
            Multiset::full(space(2, 2), 2).complement(1),
            Err(Error::ComplementLevel { level: 1, max: 2 })
        );
    }

    #[test]
    fn doubled_solid() {
        let a = Multiset::full(space(2, 3), 1);
        let b = a.msum(&a).unwrap();
        assert_eq!(b.w(1).unwrap(), 6);
        assert_eq!(a.msum(&Multiset::empty(space(2, 3))).unwrap(), a);
        assert_eq!(a.msum(&Multiset::empty(space(3, 3))), Err(Error::SpaceMismatch));
    }

    #[test]
    fn projection_of_plane() {
        let s = space(2, 2);
        let ms = Multiset::full(Arc::clone(&s), 1);
        let delta = s.span(&[&[0, 0, 1]]).unwrap();
        let pi = s.span(&[&[1, 0, 0], &[0, 1, 0]]).unwrap();
        let img = ms.induced_projection(&delta, &pi).unwrap();
        assert_eq!(img.cardinality(), 6);
        assert!(img.multiplicities().iter().all(|&m| m == 2));
    }

    #[test]
    fn generic_points() {
        let s = space(2, 3);
        let e = Multiset::empty(Arc::clone(&s)).add_generic_point(1).unwrap();
        assert_eq!(e.cardinality(), 1);
        assert_eq!(e.support(), vec![0]);
        let solid = Multiset::full(Arc::clone(&s), 1).add_generic_point(1).unwrap();
        assert_eq!(solid.cardinality(), 16);
        assert_eq!(solid.w(1).unwrap(), 4);
        let big = Multiset::full(space(2, 4), 1).add_generic_point(2).unwrap();
        assert_eq!((big.cardinality(), big.w(2).unwrap()), (32, 8));
    }

    #[test]
    fn generic_point_fallback_is_deterministic() {
        let s = Arc::new(ProjectiveSpace::with_cap(2, 4, 10).unwrap());
        let mut ms = Multiset::full(Arc::clone(&s), 1);
        ms.add(0, 1);
        let p = ms.generic_point(2).unwrap();
        assert_eq!(p, ms.generic_point(2).unwrap());
        assert_ne!(p, 0);
    }

    #[test]
    fn arc_file_round_trip() {
        let s = space(3, 2);
        let mut ms = Multiset::empty(Arc::clone(&s));
        ms.add(3, 2);
        ms.add(7, 1);
        let text = ms.to_arc_string();
        assert_eq!(Multiset::from_arc_str(&text).unwrap(), ms);
        assert!(Multiset::from_arc_str("3 2 5\n1 0 0 2\n").is_err());
        assert!(Multiset::from_arc_str("3 2 1\n0 0 0 1\n").is_err());
        let noncanon = Multiset::from_arc_str("3 2 1\n0 2 1 1\n").unwrap();
        assert_eq!(noncanon.support(), vec![s.point_index(&[0, 1, 2]).unwrap()]);
    }

    #[test]
    fn span_dimension() {
        let s = space(2, 3);
        assert_eq!(Multiset::empty(Arc::clone(&s)).span_dim(), -1);
        assert!(Multiset::full(Arc::clone(&s), 1).spans());
        let ms = Multiset::from_points(Arc::clone(&s), &[0, 1, 2]);
        assert_eq!(ms.span_dim(), 1);
    }

    #[test]
    fn ss_cardinality() {
        assert_eq!(solomon_stiffler_cardinality(2, 5, 2, &[4, 3]), 80);
        assert_eq!(solomon_stiffler_cardinality(2, 4, 1, &[3]), 16);
    }
}
