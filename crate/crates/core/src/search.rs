//! Exact branch and bound for m_q^(r)(K, w).
//!
//! Points are decided one at a time in a fixed order, trying multiplicities
//! from high to low. Loads of every tracked subspace level are maintained
//! incrementally together with the largest multiplicity each undecided point
//! could still receive. Two bounds prune the tree:
//!
//! * the current size plus the sum of those allowances, and
//! * for a t-subspace T, the (t+1)-subspaces through T cover every point and
//!   T itself v_{K−t} times, so n ≤ v_{K−t}·c_{t+1} − (v_{K−t} − 1)·𝒦(T)
//!   whenever every (t+1)-subspace is capped at c_{t+1}.
//!
//! [`solve`] removes most symmetry: an arc either spans PG(K,q), and then
//! may be assumed to contain the K+1 unit points, or it lies in a hyperplane
//! and is an arc of PG(K−1,q).

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bounds::{counting_bound, griesmer_upper_bound, BoundQuery};
use crate::error::{Error, Result};
use crate::geometry::{gaussian_v, ProjectiveSpace, SubspaceFamily};
use crate::multiset::Multiset;

const CHECK_EVERY: u64 = 1024;

/// One branch-and-bound run over a fixed space.
#[derive(Clone, Debug)]
pub struct SearchProblem {
    pub space: Arc<ProjectiveSpace>,
    pub r: usize,
    pub w: u32,
    /// Largest multiplicity of a single point.
    pub point_cap: u32,
    /// Points that must receive at least the given multiplicity.
    pub prescribed: Vec<(usize, u32)>,
    /// Optional caps for j-subspaces, j > r; index j.
    pub level_caps: Vec<Option<u32>>,
    /// Only arcs strictly larger than this are searched for.
    pub incumbent: u64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// 0 uses the rayon pool, 1 runs serially and deterministically.
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Optimal,
    /// A budget ran out; the value is only a lower bound.
    FeasibleOnly,
}

/// An improvement found during the search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLine {
    pub n: u64,
    pub nodes: u64,
    pub seconds: f64,
}

impl std::fmt::Display for LogLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {:.3}", self.n, self.nodes, self.seconds)
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_n: u64,
    /// `None` when nothing beat the incumbent.
    pub witness: Option<Multiset>,
    pub status: SearchStatus,
    pub nodes: u64,
    pub log: Vec<LogLine>,
    /// Whether point prescriptions restricted the search.
    pub prescribed: bool,
}

impl SearchProblem {
    pub fn new(space: Arc<ProjectiveSpace>, r: usize, w: u32) -> Self {
        let k = space.dim();
        Self {
            space,
            r,
            w,
            point_cap: w,
            prescribed: Vec::new(),
            level_caps: vec![None; k + 1],
            incumbent: 0,
            node_limit: None,
            time_limit: None,
            threads: 1,
        }
    }

    /// Requires each unit point with multiplicity at least one.
    pub fn prescribe_unit_frame(mut self) -> Result<Self> {
        for i in 0..self.space.vector_dim() {
            let p = self.space.unit_point(i);
            if !self.prescribed.iter().any(|&(q, _)| q == p) {
                self.prescribed.push((p, 1));
            }
        }
        self.check_prescription()?;
        Ok(self)
    }

    /// Fails if the prescribed multiplicities alone break a cap.
    pub fn check_prescription(&self) -> Result<()> {
        let mut ms = Multiset::empty(Arc::clone(&self.space));
        for &(p, m) in &self.prescribed {
            if m > self.point_cap {
                return Err(Error::Prescription(format!("point {:?} needs {m} > point cap {}", self.space.coords(p), self.point_cap)));
            }
            ms.add(p, m);
        }
        for j in self.r..self.space.dim() {
            let Some(cap) = self.cap(j) else { continue };
            let (v, s) = ms.max_subspace(j)?;
            if v > cap as u64 {
                let fam = self.space.family(j)?;
                let pts: Vec<Vec<u8>> = fam.points(s).iter().map(|&p| self.space.coords(p as usize).to_vec()).collect();
                return Err(Error::Prescription(format!("{j}-subspace through {pts:?} gets {v} > {cap}")));
            }
        }
        Ok(())
    }

    fn cap(&self, j: usize) -> Option<u32> {
        if j == self.r {
            Some(self.w)
        } else {
            self.level_caps.get(j).copied().flatten()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r >= self.space.dim() {
            return Err(Error::InvalidQuery(format!("search needs 1 ≤ r < K, got r={} K={}", self.r, self.space.dim())));
        }
        if self.w == 0 {
            return Err(Error::InvalidQuery("w must be positive".into()));
        }
        self.check_prescription()
    }
}

struct Level {
    dim: usize,
    fam: Arc<SubspaceFamily>,
    cap: Option<u32>,
    load: Vec<u32>,
    hist: Vec<u32>,
    max: u32,
}

struct Shared {
    best: AtomicU64,
    witness: Mutex<Option<(u64, Vec<u32>)>>,
    nodes: AtomicU64,
    stop: AtomicBool,
    start: Instant,
    log: Mutex<Vec<LogLine>>,
    node_limit: Option<u64>,
    time_limit: Option<Duration>,
}

impl Shared {
    fn offer(&self, n: u64, mult: &[u32]) {
        let mut w = self.witness.lock().unwrap();
        if w.as_ref().is_none_or(|(m, _)| n > *m) {
            *w = Some((n, mult.to_vec()));
            self.best.fetch_max(n, Ordering::SeqCst);
            let nodes = self.nodes.load(Ordering::Relaxed);
            self.log.lock().unwrap().push(LogLine { n, nodes, seconds: self.start.elapsed().as_secs_f64() });
        }
    }
}

/// Partition bound data: subspaces of dimension `t` (index into levels, or
/// points when `None`) and the cap of dimension t+1 through them.
struct Partition {
    level: Option<usize>,
    fan: u64,
    cap: u64,
}

struct Solver<'a> {
    shared: &'a Shared,
    order: Vec<usize>,
    pos: Vec<usize>,
    min_mult: Vec<u32>,
    point_cap: u32,
    levels: Vec<Level>,
    parts: Vec<Partition>,
    mult: Vec<u32>,
    allowed: Vec<u32>,
    future_sum: u64,
    n: u64,
    trail: Vec<(u32, u32)>,
    local_nodes: u64,
}

impl<'a> Solver<'a> {
    fn new(p: &SearchProblem, shared: &'a Shared) -> Result<Self> {
        let space = &p.space;
        let npts = space.num_points();
        let kk = space.dim();
        let mut min_mult = vec![0u32; npts];
        for &(pt, m) in &p.prescribed {
            min_mult[pt] = min_mult[pt].max(m);
        }
        let mut order: Vec<usize> = (0..npts).filter(|&q| min_mult[q] > 0).collect();
        order.extend((0..npts).filter(|&q| min_mult[q] == 0));
        let mut pos = vec![0; npts];
        for (i, &q) in order.iter().enumerate() {
            pos[q] = i;
        }
        let lowest = p.r.saturating_sub(1).max(1);
        let mut levels = Vec::new();
        for j in lowest..kk {
            let fam = space.family(j)?;
            let cap = p.cap(j);
            levels.push(Level { dim: j, load: vec![0; fam.len()], fam, cap, hist: vec![0; 1], max: 0 });
        }
        for l in &mut levels {
            l.hist[0] = l.load.len() as u32;
        }
        let mut parts = Vec::new();
        for t in p.r.saturating_sub(1)..kk.saturating_sub(1) {
            if let Some(c) = p.cap(t + 1) {
                let level = if t == 0 { None } else { levels.iter().position(|l| l.dim == t) };
                parts.push(Partition { level, fan: gaussian_v((kk - t) as u32, space.q() as u64), cap: c as u64 });
            }
        }
        let allowed = vec![p.point_cap; npts];
        let future_sum = p.point_cap as u64 * npts as u64;
        Ok(Self {
            shared,
            order,
            pos,
            min_mult,
            point_cap: p.point_cap,
            levels,
            parts,
            mult: vec![0; npts],
            allowed,
            future_sum,
            n: 0,
            trail: Vec::new(),
            local_nodes: 0,
        })
    }

    fn assign(&mut self, p: usize, c: u32, depth: usize) {
        self.mult[p] += c;
        self.n += c as u64;
        for l in &mut self.levels {
            for &s in l.fam.through(p) {
                let s = s as usize;
                let old = l.load[s];
                let new = old + c;
                l.load[s] = new;
                l.hist[old as usize] -= 1;
                if l.hist.len() <= new as usize {
                    l.hist.resize(new as usize + 1, 0);
                }
                l.hist[new as usize] += 1;
                l.max = l.max.max(new);
                if let Some(cap) = l.cap {
                    let resid = cap - new;
                    for &q in l.fam.points(s) {
                        let q = q as usize;
                        if self.pos[q] > depth && self.allowed[q] > resid {
                            self.trail.push((q as u32, self.allowed[q]));
                            self.future_sum -= (self.allowed[q] - resid) as u64;
                            self.allowed[q] = resid;
                        }
                    }
                }
            }
        }
    }

    fn unassign(&mut self, p: usize, c: u32, mark: usize) {
        while self.trail.len() > mark {
            let (q, old) = self.trail.pop().unwrap();
            let q = q as usize;
            self.future_sum += (old - self.allowed[q]) as u64;
            self.allowed[q] = old;
        }
        for l in &mut self.levels {
            for &s in l.fam.through(p) {
                let s = s as usize;
                let old = l.load[s];
                let new = old - c;
                l.load[s] = new;
                l.hist[old as usize] -= 1;
                l.hist[new as usize] += 1;
                while l.max > 0 && l.hist[l.max as usize] == 0 {
                    l.max -= 1;
                }
            }
        }
        self.mult[p] -= c;
        self.n -= c as u64;
    }

    fn max_point(&self) -> u32 {
        // Points are few; a scan is cheaper than another histogram.
        self.mult.iter().copied().max().unwrap_or(0)
    }

    fn bound(&self) -> u64 {
        let mut b = self.n + self.future_sum;
        for part in &self.parts {
            let load = match part.level {
                Some(i) => self.levels[i].max,
                None => self.max_point(),
            } as u64;
            let v = (part.fan * part.cap).saturating_sub((part.fan - 1) * load);
            b = b.min(v);
        }
        b
    }

    fn best(&self) -> u64 {
        self.shared.best.load(Ordering::Relaxed)
    }

    fn tick(&mut self) -> bool {
        self.local_nodes += 1;
        if self.local_nodes % CHECK_EVERY == 0 {
            let total = self.shared.nodes.fetch_add(CHECK_EVERY, Ordering::Relaxed) + CHECK_EVERY;
            if self.shared.node_limit.is_some_and(|l| total > l)
                || self.shared.time_limit.is_some_and(|t| self.shared.start.elapsed() > t)
            {
                self.shared.stop.store(true, Ordering::Relaxed);
            }
        }
        !self.shared.stop.load(Ordering::Relaxed)
    }

    /// Choices at `depth`, high to low, or empty if the prescription fails.
    fn choices(&self, depth: usize) -> std::iter::Rev<std::ops::RangeInclusive<u32>> {
        let p = self.order[depth];
        let lo = self.min_mult[p];
        let hi = self.allowed[p].min(self.point_cap);
        if lo > hi {
            #[allow(clippy::reversed_empty_ranges)]
            return (1..=0).rev();
        }
        (lo..=hi).rev()
    }

    fn dfs(&mut self, depth: usize) {
        if !self.tick() {
            return;
        }
        if self.n > self.best() {
            self.shared.offer(self.n, &self.mult);
        }
        if depth == self.order.len() || self.bound() <= self.best() {
            return;
        }
        let p = self.order[depth];
        let a = self.allowed[p];
        self.future_sum -= a as u64;
        for c in self.choices(depth) {
            if c == 0 {
                self.dfs(depth + 1);
            } else {
                let mark = self.trail.len();
                self.assign(p, c, depth);
                self.dfs(depth + 1);
                self.unassign(p, c, mark);
            }
            if self.bound() <= self.best() {
                break;
            }
        }
        self.future_sum += a as u64;
    }

    /// Frontier assignments (prefixes) after deciding the first `depth` points.
    fn frontier(&mut self, depth: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if self.n > self.best() {
            self.shared.offer(self.n, &self.mult);
        }
        if self.bound() <= self.best() {
            return;
        }
        if depth == prefix.capacity().min(self.order.len()) {
            out.push(prefix.clone());
            return;
        }
        let p = self.order[depth];
        let a = self.allowed[p];
        self.future_sum -= a as u64;
        for c in self.choices(depth) {
            prefix.push(c);
            if c == 0 {
                self.frontier(depth + 1, prefix, out);
            } else {
                let mark = self.trail.len();
                self.assign(p, c, depth);
                self.frontier(depth + 1, prefix, out);
                self.unassign(p, c, mark);
            }
            prefix.pop();
        }
        self.future_sum += a as u64;
    }

    fn replay(&mut self, prefix: &[u32]) {
        for (depth, &c) in prefix.iter().enumerate() {
            let p = self.order[depth];
            self.future_sum -= self.allowed[p] as u64;
            if c > 0 {
                self.assign(p, c, depth);
            }
        }
    }
}

/// Runs the branch and bound.
pub fn max_arc_size(problem: &SearchProblem) -> Result<SearchResult> {
    problem.validate()?;
    let shared = Shared {
        best: AtomicU64::new(problem.incumbent),
        witness: Mutex::new(None),
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
        start: Instant::now(),
        log: Mutex::new(Vec::new()),
        node_limit: problem.node_limit,
        time_limit: problem.time_limit,
    };
    let mut root = Solver::new(problem, &shared)?;
    let mut local = root.local_nodes;
    if problem.threads == 1 {
        root.dfs(0);
        local = root.local_nodes;
    } else {
        let workers = if problem.threads == 0 { rayon::current_num_threads() } else { problem.threads };
        let mut tasks = Vec::new();
        let mut depth = 1;
        while depth <= root.order.len() {
            tasks.clear();
            let mut prefix = Vec::with_capacity(depth);
            root.frontier(0, &mut prefix, &mut tasks);
            if tasks.len() >= 8 * workers || depth == root.order.len() {
                break;
            }
            depth += 2;
        }
        let run = |prefix: &Vec<u32>| -> Result<u64> {
            let mut s = Solver::new(problem, &shared)?;
            s.replay(prefix);
            s.dfs(prefix.len());
            Ok(s.local_nodes)
        };
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Error::InvalidQuery(e.to_string()))?;
        let counts: Vec<u64> = pool.install(|| tasks.par_iter().map(run).collect::<Result<_>>())?;
        local += counts.iter().sum::<u64>();
    }
    drop(root);
    let status = if shared.stop.load(Ordering::Relaxed) { SearchStatus::FeasibleOnly } else { SearchStatus::Optimal };
    let best = shared.witness.into_inner().unwrap();
    let witness = match best {
        Some((_, mult)) => Some(Multiset::from_multiplicities(Arc::clone(&problem.space), mult)?),
        None => None,
    };
    if let Some(w) = &witness {
        debug_assert!(verify_witness(w, problem.r, problem.w as u64)?);
    }
    let best_n = witness.as_ref().map_or(problem.incumbent, |w| w.cardinality());
    let mut log = shared.log.into_inner().unwrap();
    log.sort_by(|a, b| a.n.cmp(&b.n));
    Ok(SearchResult {
        best_n,
        witness,
        status,
        nodes: local.max(shared.nodes.load(Ordering::Relaxed)),
        log,
        prescribed: !problem.prescribed.is_empty(),
    })
}

/// Every r-subspace has multiplicity at most w, checked by span membership
/// of each point rather than precomputed incidence.
pub fn verify_witness(ms: &Multiset, r: usize, w: u64) -> Result<bool> {
    Ok(ms.w_naive(r)? <= w)
}

/// Settings for [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub point_cap: Option<u32>,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub threads: usize,
    /// A known arc used as the starting incumbent.
    pub warm_start: Option<Multiset>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { point_cap: None, node_limit: None, time_limit: None, threads: 1, warm_start: None }
    }
}

/// Result of [`solve`]: the best arc found and, per dimension j = r..=K, the
/// value of m_q^(r)(j, w) established on the way.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub best_n: u64,
    pub witness: Multiset,
    pub status: SearchStatus,
    pub nodes: u64,
    pub log: Vec<LogLine>,
    pub by_dim: Vec<(usize, u64, SearchStatus)>,
}

/// m_q^(r)(K, w) without prescription assumptions.
pub fn solve(q: u32, big_k: usize, r: usize, w: u32, opts: &SolveOptions) -> Result<SolveResult> {
    if r == 0 || r > big_k || w == 0 {
        return Err(Error::InvalidQuery(format!("need 1 ≤ r ≤ K and w ≥ 1, got r={r} K={big_k} w={w}")));
    }
    let cap = opts.point_cap.unwrap_or(w).min(w);
    let space = ProjectiveSpace::shared(q, big_k)?;
    if let Some(ws) = &opts.warm_start {
        if **ws.space() != *space || !verify_witness(ws, r, w as u64)? || ws.max_multiplicity() > cap {
            return Err(Error::InvalidQuery("warm start is not an arc for this query".into()));
        }
    }
    if r >= big_k - 1 {
        // Either the whole space or, for a non-spanning arc, a hyperplane is capped.
        let hyper = if r == big_k { space.num_points() } else { gaussian_v(big_k as u32, q as u64) as usize };
        let pts: Vec<usize> = (0..space.num_points()).filter(|&p| r == big_k || space.coords(p)[big_k] == 0).collect();
        debug_assert_eq!(pts.len(), hyper);
        let mut ms = Multiset::empty(Arc::clone(&space));
        let mut left = w;
        for &p in &pts {
            let c = left.min(cap);
            ms.add(p, c);
            left -= c;
        }
        if r == big_k {
            let n = ms.cardinality();
            return Ok(SolveResult { best_n: n, witness: ms, status: SearchStatus::Optimal, nodes: 0, log: vec![], by_dim: vec![(r, n, SearchStatus::Optimal)] });
        }
        return spanning_step(&space, r, w, cap, ms, vec![(r, w as u64, SearchStatus::Optimal)], opts);
    }
    let sub = solve(q, big_k - 1, r, w, &SolveOptions { warm_start: None, ..opts.clone() })?;
    let embedded = embed(&sub.witness, &space)?;
    let mut res = spanning_step(&space, r, w, cap, embedded, sub.by_dim.clone(), opts)?;
    res.nodes += sub.nodes;
    Ok(res)
}

/// Maps an arc of PG(K−1,q) into the hyperplane x_K = 0 of PG(K,q).
fn embed(ms: &Multiset, space: &Arc<ProjectiveSpace>) -> Result<Multiset> {
    let mut out = Multiset::empty(Arc::clone(space));
    for p in ms.support() {
        let mut v = ms.space().coords(p).to_vec();
        v.push(0);
        out.add(space.point_index(&v)?, ms.get(p));
    }
    Ok(out)
}

fn spanning_step(
    space: &Arc<ProjectiveSpace>,
    r: usize,
    w: u32,
    cap: u32,
    flat: Multiset,
    mut by_dim: Vec<(usize, u64, SearchStatus)>,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let big_k = space.dim();
    let q = space.q();
    let mut problem = SearchProblem::new(Arc::clone(space), r, w);
    problem.point_cap = cap;
    problem.node_limit = opts.node_limit;
    problem.time_limit = opts.time_limit;
    problem.threads = opts.threads;
    for j in r + 1..big_k {
        let query = BoundQuery::new(q, j as u32, r as u32, w as u64)?;
        let mut c = griesmer_upper_bound(&query)?.min(counting_bound(&query));
        if let Some(&(_, v, SearchStatus::Optimal)) = by_dim.iter().find(|(d, _, _)| *d == j) {
            c = c.min(v);
        }
        problem.level_caps[j] = Some(c as u32);
    }
    let mut best = flat;
    if let Some(ws) = &opts.warm_start {
        if ws.cardinality() > best.cardinality() {
            best = ws.clone();
        }
    }
    problem.incumbent = best.cardinality();
    let mut status = by_dim.iter().map(|d| d.2).fold(SearchStatus::Optimal, worse);
    let (nodes, log) = match problem.prescribe_unit_frame() {
        Ok(p) => {
            let res = max_arc_size(&p)?;
            status = worse(status, res.status);
            if let Some(wit) = res.witness {
                best = wit;
            }
            (res.nodes, res.log)
        }
        // No spanning arc exists when the unit points alone break a cap.
        Err(Error::Prescription(_)) => (0, vec![]),
        Err(e) => return Err(e),
    };
    by_dim.push((big_k, best.cardinality(), status));
    Ok(SolveResult { best_n: best.cardinality(), witness: best, status, nodes, log, by_dim })
}

fn worse(a: SearchStatus, b: SearchStatus) -> SearchStatus {
    if a == SearchStatus::FeasibleOnly || b == SearchStatus::FeasibleOnly {
        SearchStatus::FeasibleOnly
    } else {
        SearchStatus::Optimal
    }
}
