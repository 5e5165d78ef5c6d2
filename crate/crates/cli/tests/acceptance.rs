//! Acceptance checks. Each test prints one `PASS` or `FAIL` line.
//!
//! Criteria whose published values could not be reproduced are listed in
//! `EXPECTED_FAIL`. Their tests still print `FAIL`, and they assert that the
//! failure is exactly the recorded one, so a change in either direction is
//! noticed.

use std::collections::HashMap;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pgarc::bounds::{griesmer_code_dr, griesmer_g, griesmer_g_r, griesmer_upper_bound, BoundQuery, SigmaEps};
use pgarc::code::{LinearCode, DEFAULT_SUBCODE_BUDGET};
use pgarc::field::{Matrix, PrimeField};
use pgarc::geometry::{gaussian_v, Projection, ProjectiveSpace, Subspace};
use pgarc::multiset::Multiset;
use pgarc::search::{max_arc_size, solve, verify_witness, SearchProblem, SearchStatus, SolveOptions};
use pgarc::tables::{verify_matrix, ClaimedBound, Construction, Dataset, TableValue};

const BOUNDS_LIMIT: Duration = Duration::from_secs(1);
const GRIESMER_LIMIT: Duration = Duration::from_secs(10);
const DUALITY_LIMIT: Duration = Duration::from_secs(120);
const CONSTRUCTION_LIMIT: Duration = Duration::from_secs(300);
const MATRIX_LIMIT: Duration = Duration::from_secs(300);
const SMALL_SEARCH_LIMIT: Duration = Duration::from_secs(60);
const FRAME_SEARCH_LIMIT: Duration = Duration::from_secs(600);
const PROPERTY_LIMIT: Duration = Duration::from_secs(120);

const DUALITY_CODES: usize = 500;
const PROPERTY_INSTANCES: usize = 200;

/// Criterion number and the failure it is pinned to.
const EXPECTED_FAIL: &[(u32, &str)] = &[
    (1, "coding 75 (chain 21 -> 39 -> 75), expected 77 (chain 21 -> 39 -> 77)"),
    (5, "m2-5-3-11: d_1=17 (w_4=21), expected d_1=18; m2-6-3-11: zero column"),
];

fn report(id: u32, name: &str, failures: &[String], elapsed: Duration, limit: Duration) {
    let mut failures = failures.to_vec();
    if elapsed > limit {
        failures.push(format!("took {elapsed:.1?}, limit {limit:?}"));
    }
    let detail = failures.join("; ");
    if failures.is_empty() {
        println!("PASS {id} {name} ({elapsed:.1?})");
    } else {
        println!("FAIL {id} {name} ({elapsed:.1?}): {detail}");
    }
    match EXPECTED_FAIL.iter().find(|(c, _)| *c == id) {
        Some((_, why)) => assert_eq!(detail, *why, "criterion {id} no longer fails as recorded"),
        None => assert!(failures.is_empty(), "criterion {id}: {detail}"),
    }
}

fn field_value<'a>(out: &'a str, key: &str) -> Option<&'a str> {
    out.lines().find_map(|l| l.trim().strip_prefix(key).map(str::trim))
}

#[test]
fn criterion_1_bound_arithmetic() {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_pgarc"))
        .args(["bounds", "--q", "2", "--K", "6", "--r", "4", "--w", "21"])
        .output()
        .expect("pgarc runs");
    let elapsed = start.elapsed();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut failures = Vec::new();
    let griesmer = field_value(&text, "griesmer ");
    if griesmer != Some("81") {
        failures.push(format!("griesmer {griesmer:?}, expected 81"));
    }
    for (line, want) in [("g_2^(2)(7,60) = ", "81"), ("g_2^(2)(7,61) = ", "84")] {
        let got = field_value(&text, line).and_then(|v| v.split_whitespace().next());
        if got != Some(want) {
            failures.push(format!("{line}{got:?}, expected {want}"));
        }
    }
    let coding = field_value(&text, "coding ").unwrap_or("?");
    let chain = field_value(&text, "chain ").unwrap_or("?");
    if coding != "77" || chain != "21 -> 39 -> 77" {
        failures.push(format!("coding {coding} (chain {chain}), expected 77 (chain 21 -> 39 -> 77)"));
    }
    report(1, "bound arithmetic", &failures, elapsed, BOUNDS_LIMIT);
}

#[test]
fn criterion_2_griesmer_identities() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0u64;
    for q in [2u32, 3] {
        for k in 1..=8u32 {
            for d in 1..=200u64 {
                let n = griesmer_g(q, k, d);
                let se = SigmaEps::decompose(q, k, d).unwrap();
                let q64 = q as u64;
                let removed: u64 = se.eps.iter().enumerate().map(|(i, &e)| e * gaussian_v(i as u32 + 1, q64)).sum();
                if se.sigma * gaussian_v(k, q64) - removed != n {
                    failures.push(format!("length identity fails at q={q} k={k} d={d}"));
                }
                for r in 1..=k {
                    let dr = griesmer_code_dr(q, k, d, r).unwrap();
                    let direct: u64 = (0..r).map(|i| d.div_ceil(q64.pow(i))).sum();
                    if dr != direct {
                        failures.push(format!("d_{r} = {dr}, expected {direct} at q={q} k={k} d={d}"));
                    }
                    if griesmer_g_r(q, k, r, dr) != n {
                        failures.push(format!("g^({r})(k,d_r) != g(k,d) at q={q} k={k} d={d}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    failures.truncate(5);
    println!("  {checked} (q,k,d,r) cases");
    report(2, "Griesmer-code identities", &failures, start.elapsed(), GRIESMER_LIMIT);
}

/// A random full-rank k×n generator matrix without zero columns.
fn random_code(rng: &mut ChaCha8Rng, q: u32, k: usize, n: usize) -> LinearCode {
    let f = PrimeField::new(q).unwrap();
    loop {
        let mut data = vec![0u8; k * n];
        for j in 0..n {
            loop {
                let col: Vec<u8> = (0..k).map(|_| rng.gen_range(0..q) as u8).collect();
                if col.iter().any(|&x| x != 0) {
                    for i in 0..k {
                        data[i * n + j] = col[i];
                    }
                    break;
                }
            }
        }
        if let Ok(c) = LinearCode::new(Matrix::from_data(f, k, n, data).unwrap()) {
            return c;
        }
    }
}

#[test]
fn criterion_3_duality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    for i in 0..DUALITY_CODES {
        let q = [2, 3][i % 2];
        let k = rng.gen_range(1..=5usize);
        let n = rng.gen_range(k..=20usize);
        let c = random_code(&mut rng, q, k, n);
        let g = c.hierarchy_geometric().unwrap();
        let d = c.hierarchy_direct(DEFAULT_SUBCODE_BUDGET).unwrap();
        if g != d || !g.is_strictly_increasing() {
            failures.push(format!("[{n},{k}]_{q}: geometric {:?}, direct {:?}", g.d, d.d));
        }
    }
    failures.truncate(5);
    println!("  {DUALITY_CODES} random codes");
    report(3, "duality oracle equivalence", &failures, start.elapsed(), DUALITY_LIMIT);
}

#[test]
fn criterion_4_constructions() {
    let start = Instant::now();
    let ds = Dataset::default_set().unwrap();
    let mut failures = Vec::new();
    let (mut built, mut bounded) = (0, 0);
    let mut memos: HashMap<(u32, usize, usize), HashMap<_, _>> = HashMap::new();
    for e in ds.entries.iter().filter(|e| e.q == 2) {
        let label = format!("m_2^({})({},{})={}", e.r, e.big_k, e.w, e.value);
        let TableValue::Exact(value) = e.value else { continue };
        if matches!(e.construction, Construction::Type(_) | Construction::PlusPoint) {
            if ds.rests_on_missing(e) {
                failures.push(format!("{label}: {} rests on the w={} row, which has no construction", e.construction, e.w - 1));
                continue;
            }
            let memo = memos.entry((e.q, e.big_k, e.r)).or_default();
            match ds.build(e, memo) {
                Ok(ms) => {
                    let w_r = ms.w(e.r).unwrap();
                    if ms.cardinality() != value || w_r > e.w as u64 {
                        failures.push(format!("{label}: {} gives n={} w_r={w_r}", e.construction, ms.cardinality()));
                    }
                    built += 1;
                }
                Err(err) => failures.push(format!("{label}: {err}")),
            }
        }
        if e.bound_source == ClaimedBound::Griesmer {
            let g = griesmer_upper_bound(&BoundQuery::new(2, e.big_k as u32, e.r as u32, e.w as u64).unwrap()).unwrap();
            if g != value {
                failures.push(format!("{label}: Griesmer bound {g}"));
            }
            bounded += 1;
        }
    }
    println!("  {built} constructions rebuilt, {bounded} Griesmer bounds evaluated");
    report(4, "construction certification", &failures, start.elapsed(), CONSTRUCTION_LIMIT);
}

#[test]
fn criterion_5_matrices() {
    let start = Instant::now();
    let ds = Dataset::default_set().unwrap();
    let named = [("m2-5-2-3", 8, 2, 3), ("m2-6-2-3", 11, 2, 3), ("m2-5-3-11", 38, 4, 20), ("m3-4-2-4", 20, 2, 4)];
    let mut failures = Vec::new();
    for (id, n, r, w) in named {
        let m = ds.matrix(id).unwrap_or_else(|| panic!("{id} ships"));
        assert_eq!(m.code.n(), n);
        assert!(m.claims.contains(&(r, w)), "{id} claims w_{r}={w}");
    }
    let mut unexplained = 0;
    for m in &ds.matrices {
        let rep = verify_matrix(m);
        println!("  {rep}");
        if rep.unexplained() {
            unexplained += 1;
        }
        if rep.ok() {
            continue;
        }
        if let Some(err) = &rep.error {
            assert!(err.starts_with("zero column"));
            failures.push(format!("{}: zero column", m.id));
        } else {
            let bad: Vec<String> = rep
                .claims
                .iter()
                .filter(|c| c.violating.is_some())
                .map(|c| {
                    if c.r + 2 == rep.k {
                        format!("d_1={} (w_{}={}), expected d_1={}", rep.n as u64 - c.actual, c.r, c.actual, rep.n as u64 - c.w)
                    } else {
                        format!("w_{}={}, expected {}", c.r, c.actual, c.w)
                    }
                })
                .collect();
            failures.push(format!("{}: {}", m.id, bad.join(", ")));
        }
    }
    if unexplained > 0 {
        failures.push(format!("{unexplained} unexplained mismatches"));
    }
    report(5, "matrix verification", &failures, start.elapsed(), MATRIX_LIMIT);
}

#[test]
fn criterion_6_exact_search() {
    let mut failures = Vec::new();
    let mut total = Duration::ZERO;
    let cases: [(u32, usize, usize, u32, u64, Option<u32>); 6] = [
        (2, 4, 2, 3, 6, None),
        (2, 5, 3, 4, 7, None),
        (2, 3, 1, 2, 8, None),
        (2, 3, 1, 3, 15, None),
        (2, 3, 1, 4, 16, None),
        (3, 3, 1, 2, 10, Some(1)),
    ];
    for (q, k, r, w, want, cap) in cases {
        let start = Instant::now();
        let opts = SolveOptions { point_cap: cap, ..Default::default() };
        let res = solve(q, k, r, w, &opts).unwrap();
        let elapsed = start.elapsed();
        total += elapsed;
        let ok = res.status == SearchStatus::Optimal
            && res.best_n == want
            && res.witness.cardinality() == want
            && verify_witness(&res.witness, r, w as u64).unwrap();
        println!("  m_{q}^({r})({k},{w}) = {} {:?} in {elapsed:.1?}", res.best_n, res.status);
        if !ok {
            failures.push(format!("m_{q}^({r})({k},{w}): {} {:?}, expected {want}", res.best_n, res.status));
        }
        if elapsed > SMALL_SEARCH_LIMIT {
            failures.push(format!("m_{q}^({r})({k},{w}) took {elapsed:.1?}"));
        }
    }
    let start = Instant::now();
    let p = SearchProblem::new(ProjectiveSpace::shared(2, 5).unwrap(), 2, 3).prescribe_unit_frame().unwrap();
    let res = max_arc_size(&p).unwrap();
    let elapsed = start.elapsed();
    total += elapsed;
    let wit = res.witness.expect("a witness");
    let frame_ok = (0..6).all(|i| wit.get(wit.space().unit_point(i)) >= 1);
    println!("  m_2^(2)(5,3) with the unit points = {} {:?} in {elapsed:.1?}", res.best_n, res.status);
    if res.status != SearchStatus::Optimal || res.best_n != 8 || !verify_witness(&wit, 2, 3).unwrap() || !frame_ok {
        failures.push(format!("prescribed m_2^(2)(5,3): {} {:?}, expected 8", res.best_n, res.status));
    }
    if elapsed > FRAME_SEARCH_LIMIT {
        failures.push(format!("prescribed m_2^(2)(5,3) took {elapsed:.1?}"));
    }
    report(6, "exact search", &failures, total, SMALL_SEARCH_LIMIT * 6 + FRAME_SEARCH_LIMIT);
}

fn random_multiset(rng: &mut ChaCha8Rng, space: &Arc<ProjectiveSpace>, max: u32) -> Multiset {
    let mult = (0..space.num_points()).map(|_| rng.gen_range(0..=max)).collect();
    Multiset::from_multiplicities(Arc::clone(space), mult).unwrap()
}

fn random_space(rng: &mut ChaCha8Rng) -> Arc<ProjectiveSpace> {
    let q = [2, 3][rng.gen_range(0..2)];
    ProjectiveSpace::shared(q, rng.gen_range(2..=4)).unwrap()
}

/// A random subspace of projective dimension `dim` and a complement
/// spanned by unit vectors.
fn center_and_screen(rng: &mut ChaCha8Rng, space: &ProjectiveSpace, dim: usize) -> (Subspace, Subspace) {
    let n = space.vector_dim();
    let q = space.q();
    loop {
        let vs: Vec<Vec<u8>> = (0..=dim).map(|_| (0..n).map(|_| rng.gen_range(0..q) as u8).collect()).collect();
        let refs: Vec<&[u8]> = vs.iter().map(Vec::as_slice).collect();
        let Ok(delta) = space.span(&refs) else { continue };
        if delta.dim() != dim {
            continue;
        }
        let mut rows: Vec<Vec<u8>> = (0..delta.basis().rows()).map(|i| delta.basis().row(i).to_vec()).collect();
        let mut screen = Vec::new();
        for i in 0..n {
            let mut e = vec![0u8; n];
            e[i] = 1;
            rows.push(e.clone());
            let refs: Vec<&[u8]> = rows.iter().map(Vec::as_slice).collect();
            if space.span(&refs).unwrap().dim() + 1 == rows.len() {
                screen.push(e);
            } else {
                rows.pop();
            }
        }
        let refs: Vec<&[u8]> = screen.iter().map(Vec::as_slice).collect();
        return (delta, space.span(&refs).unwrap());
    }
}

#[test]
fn criterion_7_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();

    for i in 0..PROPERTY_INSTANCES {
        let space = random_space(&mut rng);
        let s = rng.gen_range(1..=3);
        let ms = random_multiset(&mut rng, &space, s);
        let c = ms.complement(s).unwrap();
        let (p, pc) = (ms.arc_profile().unwrap(), c.arc_profile().unwrap());
        let qq = space.q() as u64;
        for r in 0..=space.dim() {
            if pc.u[r] != s as u64 * gaussian_v(r as u32 + 1, qq) - p.w[r] {
                failures.push(format!("complement instance {i}, r={r}"));
            }
        }
    }

    for i in 0..PROPERTY_INSTANCES {
        let space = random_space(&mut rng);
        let ms = random_multiset(&mut rng, &space, 2);
        let dim = rng.gen_range(0..space.dim() - 1);
        let (delta, pi) = center_and_screen(&mut rng, &space, dim);
        let t = ms.subspace_multiplicity(&delta);
        let img = ms.induced_projection(&delta, &pi).unwrap();
        let screen = img.space();
        let proj = Projection::new(&space, &delta, &pi).unwrap();
        if img.cardinality() != ms.cardinality() - t {
            failures.push(format!("projection instance {i}: cardinality"));
        }
        for sd in dim + 1..=space.dim() {
            for s in space.enumerate_subspaces(sd).unwrap() {
                if !delta_in(&space, &delta, &s) {
                    continue;
                }
                let images: Vec<usize> = space
                    .points_of(&s)
                    .into_iter()
                    .filter_map(|p| proj.project_to_screen(&space, screen, p).ok())
                    .collect();
                let phi = screen.span_points(&images).unwrap();
                if img.subspace_multiplicity(&phi) != ms.subspace_multiplicity(&s) - t {
                    failures.push(format!("projection instance {i}, subspace of dimension {sd}"));
                }
            }
        }
    }

    for i in 0..PROPERTY_INSTANCES {
        let space = random_space(&mut rng);
        let a = random_multiset(&mut rng, &space, 2);
        let b = random_multiset(&mut rng, &space, 2);
        let sum = a.msum(&b).unwrap();
        for r in 0..=space.dim() {
            if sum.w(r).unwrap() > a.w(r).unwrap() + b.w(r).unwrap() {
                failures.push(format!("msum instance {i}, r={r}"));
            }
        }
    }

    let mut round_trips = 0;
    while round_trips < PROPERTY_INSTANCES {
        let space = random_space(&mut rng);
        let ms = random_multiset(&mut rng, &space, 2);
        if !ms.spans() {
            continue;
        }
        let code = LinearCode::from_multiset(&ms).unwrap();
        let back = code.to_multiset().unwrap();
        let reparsed = LinearCode::from_matrix_str(&code.to_matrix_string()).unwrap();
        if back != ms || reparsed != code {
            failures.push(format!("round trip instance {round_trips}"));
        }
        round_trips += 1;
    }

    failures.truncate(5);
    println!("  {PROPERTY_INSTANCES} instances per property");
    report(7, "property suites", &failures, start.elapsed(), PROPERTY_LIMIT);
}

fn delta_in(space: &ProjectiveSpace, delta: &Subspace, s: &Subspace) -> bool {
    space.points_of(delta).iter().all(|&p| space.incident(p, s))
}
