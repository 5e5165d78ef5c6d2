//! Solomon–Stiffler type arcs and a few special point sets.
//!
//! A type string such as `2[5]-[4]-[3]+[0]` denotes two copies of PG(5,q)
//! minus a 4-space and a 3-space, plus one extra point. `[j]` always means a
//! projective j-dimensional subspace.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{gaussian_v, ProjectiveSpace, SubspaceFamily};
use crate::multiset::Multiset;

/// How removed subspaces are placed relative to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// Nested: each removed subspace lies inside the previous one.
    Chain,
    /// Greedy: each removed subspace meets the earlier ones as little as possible.
    Spread,
    /// Chain when the number of removed subspaces is at most σ, otherwise spread.
    Auto,
}

impl FromStr for Placement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Self::Chain),
            "spread" => Ok(Self::Spread),
            "auto" => Ok(Self::Auto),
            _ => Err(Error::InvalidQuery(format!("unknown placement {s:?}"))),
        }
    }
}

/// σ[K] − Σ[d_i] + c[0].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsType {
    pub sigma: u32,
    pub dim: usize,
    /// Dimensions of the removed subspaces, non-increasing.
    pub removed: Vec<usize>,
    /// Number of extra points added after the subtraction.
    pub extra_points: u32,
}

impl SsType {
    pub fn new(sigma: u32, dim: usize, mut removed: Vec<usize>, extra_points: u32) -> Result<Self> {
        removed.sort_unstable_by(|a, b| b.cmp(a));
        let t = Self { sigma, dim, removed, extra_points };
        t.validate(&t.to_string())?;
        Ok(t)
    }

    fn validate(&self, text: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidType { text: text.to_string(), msg: msg.to_string() });
        if self.sigma == 0 {
            return bad("σ must be positive");
        }
        if self.dim == 0 {
            return bad("ambient dimension must be positive");
        }
        if self.removed.iter().any(|&d| d >= self.dim) {
            return bad("removed subspaces must be proper");
        }
        Ok(())
    }

    /// ε_i = number of removed i-dimensional subspaces, i = 0..K-1.
    pub fn eps(&self) -> Vec<u32> {
        let mut e = vec![0u32; self.dim];
        for &d in &self.removed {
            e[d] += 1;
        }
        e
    }

    /// σ v_{K+1} − Σ v_{d_i + 1} + extra points.
    pub fn cardinality(&self, q: u32) -> u64 {
        let q = q as u64;
        let removed: u64 = self.removed.iter().map(|&d| gaussian_v(d as u32 + 1, q)).sum();
        self.sigma as u64 * gaussian_v(self.dim as u32 + 1, q) - removed + self.extra_points as u64
    }

    /// σ v_{l+1} − Σ v_{l+d_i+1−K} (terms with nonpositive index vanish): the
    /// largest multiplicity an l-space can have when the removed subspaces
    /// cover no point more than σ times. Extra points are not counted.
    pub fn formula_w(&self, q: u32, level: usize) -> u64 {
        let q = q as u64;
        let kk = self.dim as i64;
        let cut: u64 = self
            .removed
            .iter()
            .map(|&d| {
                let m = level as i64 + d as i64 + 1 - kk;
                if m > 0 {
                    gaussian_v(m as u32, q)
                } else {
                    0
                }
            })
            .sum();
        self.sigma as u64 * gaussian_v(level as u32 + 1, q) - cut
    }

    /// Builds the multiset. Extra points are added one at a time, each
    /// minimizing w at `level`.
    pub fn build(&self, space: &Arc<ProjectiveSpace>, placement: Placement, level: usize) -> Result<Multiset> {
        if space.dim() != self.dim {
            return Err(Error::InvalidType {
                text: self.to_string(),
                msg: format!("type lives in dimension {} but the space is PG({},{})", self.dim, space.dim(), space.q()),
            });
        }
        let placement = match placement {
            Placement::Auto if self.removed.len() as u32 <= self.sigma => Placement::Chain,
            Placement::Auto => Placement::Spread,
            p => p,
        };
        let placed = match placement {
            Placement::Chain => place_chain(space, &self.removed)?,
            _ => place_spread(space, &self.removed)?,
        };
        let mut cover = vec![0u32; space.num_points()];
        for (fam, s) in &placed {
            for &p in fam.points(*s) {
                cover[p as usize] += 1;
            }
        }
        if let Some(p) = (0..cover.len()).find(|&p| cover[p] > self.sigma) {
            let holders: Vec<usize> = (0..placed.len()).filter(|&i| placed[i].0.contains(placed[i].1, p)).collect();
            let (a, b) = (holders[0], holders[1]);
            return Err(Error::InfeasiblePlacement(format!(
                "removed subspaces #{a} [{}] and #{b} [{}] together cover point {:?} {} times, more than σ={}",
                self.removed[a],
                self.removed[b],
                space.coords(p),
                cover[p],
                self.sigma
            )));
        }
        let mult: Vec<u32> = cover.iter().map(|&c| self.sigma - c).collect();
        let mut ms = Multiset::from_multiplicities(Arc::clone(space), mult)?;
        for _ in 0..self.extra_points {
            ms = ms.add_generic_point(level)?;
        }
        Ok(ms)
    }
}

type Placed = Vec<(Arc<SubspaceFamily>, usize)>;

fn place_chain(space: &ProjectiveSpace, dims: &[usize]) -> Result<Placed> {
    let mut placed: Placed = Vec::with_capacity(dims.len());
    for &d in dims {
        let fam = space.family(d)?;
        let idx = match placed.last() {
            None => 0,
            Some((pf, ps)) => (0..fam.len())
                .find(|&s| fam.points(s).iter().all(|&p| pf.contains(*ps, p as usize)))
                .expect("every subspace contains subspaces of each smaller dimension"),
        };
        placed.push((fam, idx));
    }
    Ok(placed)
}

fn place_spread(space: &ProjectiveSpace, dims: &[usize]) -> Result<Placed> {
    let mut placed: Placed = Vec::with_capacity(dims.len());
    let mut cover = vec![0u32; space.num_points()];
    for &d in dims {
        let fam = space.family(d)?;
        let mut best: Option<((u32, usize, u64), usize)> = None;
        for s in 0..fam.len() {
            let pts = fam.points(s);
            let max_cov = pts.iter().map(|&p| cover[p as usize] + 1).max().unwrap();
            let total: u64 = pts.iter().map(|&p| cover[p as usize] as u64).sum();
            let max_pair = placed
                .iter()
                .map(|(pf, ps)| pts.iter().filter(|&&p| pf.contains(*ps, p as usize)).count())
                .max()
                .unwrap_or(0);
            let key = (max_cov, max_pair, total);
            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                best = Some((key, s));
            }
        }
        let s = best.expect("families are nonempty").1;
        for &p in fam.points(s) {
            cover[p as usize] += 1;
        }
        placed.push((fam, s));
    }
    Ok(placed)
}

impl fmt::Display for SsType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sigma != 1 {
            write!(f, "{}", self.sigma)?;
        }
        write!(f, "[{}]", self.dim)?;
        let mut i = 0;
        while i < self.removed.len() {
            let d = self.removed[i];
            let c = self.removed[i..].iter().take_while(|&&x| x == d).count();
            if c == 1 {
                write!(f, "-[{d}]")?;
            } else {
                write!(f, "-{c}[{d}]")?;
            }
            i += c;
        }
        match self.extra_points {
            0 => Ok(()),
            1 => write!(f, "+[0]"),
            c => write!(f, "+{c}[0]"),
        }
    }
}

impl FromStr for SsType {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = |msg: String| Error::InvalidType { text: text.to_string(), msg };
        let s: String = text.chars().filter(|c| !c.is_whitespace()).map(|c| if c == '−' { '-' } else { c }).collect();
        let mut terms: Vec<(bool, u32, usize)> = Vec::new();
        let mut rest = s.as_str();
        let mut first = true;
        while !rest.is_empty() {
            let positive = match rest.as_bytes()[0] {
                b'+' => {
                    rest = &rest[1..];
                    true
                }
                b'-' => {
                    rest = &rest[1..];
                    false
                }
                _ if first => true,
                _ => return Err(err(format!("expected + or - before {rest:?}"))),
            };
            first = false;
            let open = rest.find('[').ok_or_else(|| err("missing '['".into()))?;
            let close = rest.find(']').ok_or_else(|| err("missing ']'".into()))?;
            if close < open {
                return Err(err("unbalanced brackets".into()));
            }
            let coef = match &rest[..open] {
                "" => 1,
                c => c.parse::<u32>().map_err(|_| err(format!("bad coefficient {c:?}")))?,
            };
            let dim = rest[open + 1..close].parse::<usize>().map_err(|_| err("bad dimension".into()))?;
            terms.push((positive, coef, dim));
            rest = &rest[close + 1..];
        }
        let (pos, sigma, dim) = *terms.first().ok_or_else(|| err("empty type".into()))?;
        if !pos {
            return Err(err("type must start with σ[K]".into()));
        }
        let mut removed = Vec::new();
        let mut extra_points = 0;
        for &(positive, c, d) in &terms[1..] {
            match (positive, d) {
                (true, 0) => extra_points += c,
                (true, _) => return Err(err(format!("only points may be added, got [{d}]"))),
                (false, _) => removed.extend(std::iter::repeat(d).take(c as usize)),
            }
        }
        removed.sort_unstable_by(|a, b| b.cmp(a));
        let t = SsType { sigma, dim, removed, extra_points };
        t.validate(text)?;
        Ok(t)
    }
}

/// The K+1 unit points together with the all-ones point.
pub fn projective_base(space: &Arc<ProjectiveSpace>) -> Multiset {
    Multiset::from_points(Arc::clone(space), &space.frame())
}

/// PG(K,q) minus the hyperplane x_0 = 0.
pub fn affine_space(space: &Arc<ProjectiveSpace>) -> Multiset {
    let pts: Vec<usize> = (0..space.num_points()).filter(|&p| space.coords(p)[0] != 0).collect();
    Multiset::from_points(Arc::clone(space), &pts)
}

/// An elliptic quadric of PG(3,q): q²+1 points, no three collinear.
pub fn ovoid(space: &Arc<ProjectiveSpace>) -> Result<Multiset> {
    if space.dim() != 3 {
        return Err(Error::InvalidDimension("ovoids live in PG(3,q)".into()));
    }
    let f = space.field();
    let q = f.order() as u8;
    // x0 x1 + g(x2, x3) with g anisotropic.
    let g: Box<dyn Fn(u8, u8) -> u8> = if q == 2 {
        Box::new(move |a, b| f.add(f.add(f.mul(a, a), f.mul(a, b)), f.mul(b, b)))
    } else {
        let nonsquare = (1..q).find(|&x| (1..q).all(|y| f.mul(y, y) != x)).unwrap();
        Box::new(move |a, b| f.sub(f.mul(a, a), f.mul(nonsquare, f.mul(b, b))))
    };
    let pts: Vec<usize> = (0..space.num_points())
        .filter(|&p| {
            let c = space.coords(p);
            f.add(f.mul(c[0], c[1]), g(c[2], c[3])) == 0
        })
        .collect();
    Ok(Multiset::from_points(Arc::clone(space), &pts))
}
