//! Lookup table of maximal minimum distances of linear codes.

use std::collections::BTreeMap;

use crate::bounds::griesmer_g;
use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../data/oracle.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleEntry {
    /// Largest known d for an [n,k]_q code.
    pub d: u64,
    /// Whether `d` is proven maximal.
    pub exact: bool,
}

/// Maps (q, n, k) to the largest minimum distance of an [n,k]_q code.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Oracle {
    entries: BTreeMap<(u32, u64, u32), OracleEntry>,
}

impl Oracle {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("builtin oracle parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(err("expected `q n k d exact|bkn`".into()));
            }
            let num = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad number {s:?}")));
            let (q, n, k, d) = (num(f[0])? as u32, num(f[1])?, num(f[2])? as u32, num(f[3])?);
            let exact = match f[4] {
                "exact" => true,
                "bkn" => false,
                other => return Err(err(format!("flag must be exact or bkn, got {other:?}"))),
            };
            if k == 0 || n < k as u64 {
                return Err(err(format!("[{n},{k}] is not a valid code shape")));
            }
            if entries.insert((q, n, k), OracleEntry { d, exact }).is_some() {
                return Err(err(format!("duplicate entry for q={q} n={n} k={k}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, q: u32, n: u64, k: u32) -> Option<OracleEntry> {
        self.entries.get(&(q, n, k)).copied()
    }

    pub fn insert(&mut self, q: u32, n: u64, k: u32, entry: OracleEntry) {
        self.entries.insert((q, n, k), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u32, u64, u32), OracleEntry)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Violations of the Griesmer bound and of the length monotonicity
    /// d(n,k) <= d(n+1,k) <= d(n,k) + 1 between adjacent exact entries.
    pub fn consistency_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&(q, n, k), e) in &self.entries {
            if e.d > 0 && griesmer_g(q, k, e.d) > n {
                out.push(format!("[{n},{k},{}]_{q} violates the Griesmer bound", e.d));
            }
            if let Some(next) = self.get(q, n + 1, k) {
                if e.exact && next.exact && (next.d < e.d || next.d > e.d + 1) {
                    out.push(format!("d({n},{k})={} and d({},{k})={} are inconsistent over F_{q}", e.d, n + 1, next.d));
                }
            }
        }
        out
    }
}
