use std::sync::Arc;

use pgarc::geometry::ProjectiveSpace;
use pgarc::search::{max_arc_size, solve, verify_witness, SearchProblem, SearchStatus, SolveOptions};

fn exact(q: u32, k: usize, r: usize, w: u32) -> u64 {
    let t = std::time::Instant::now();
    let res = solve(q, k, r, w, &SolveOptions::default()).unwrap();
    eprintln!("m_{q}^({r})({k},{w}) = {} in {} nodes, {:?}", res.best_n, res.nodes, t.elapsed());
    assert_eq!(res.status, SearchStatus::Optimal);
    assert!(verify_witness(&res.witness, r, w as u64).unwrap());
    assert_eq!(res.witness.cardinality(), res.best_n);
    res.best_n
}

#[test]
fn binary_plane_caps() {
    assert_eq!(exact(2, 4, 2, 3), 6);
}

#[test]
fn binary_solid_caps() {
    assert_eq!(exact(2, 5, 3, 4), 7);
}

#[test]
fn line_caps_in_pg32() {
    assert_eq!(exact(2, 3, 1, 2), 8);
    assert_eq!(exact(2, 3, 1, 3), 15);
    assert_eq!(exact(2, 3, 1, 4), 16);
}

#[test]
fn ternary_ovoid_size() {
    assert_eq!(exact(3, 3, 1, 2), 10);
}

#[test]
fn frame_prescribed_plane_caps() {
    let space = ProjectiveSpace::shared(2, 5).unwrap();
    let p = SearchProblem::new(Arc::clone(&space), 2, 3).prescribe_unit_frame().unwrap();
    let res = max_arc_size(&p).unwrap();
    assert_eq!(res.best_n, 8);
    assert!(res.prescribed);
    assert_eq!(res.status, SearchStatus::Optimal);
    let wit = res.witness.unwrap();
    for i in 0..6 {
        assert!(wit.get(space.unit_point(i)) >= 1);
    }
    assert!(verify_witness(&wit, 2, 3).unwrap());
}

#[test]
fn threads_agree() {
    let opts = SolveOptions { threads: 4, ..Default::default() };
    assert_eq!(solve(2, 3, 1, 4, &opts).unwrap().best_n, 16);
    assert_eq!(solve(3, 3, 1, 2, &opts).unwrap().best_n, 10);
}

/// Largest multiset by plain enumeration of multiplicity vectors.
fn brute(q: u32, k: usize, r: usize, w: u32, cap: u32) -> u64 {
    let space = ProjectiveSpace::shared(q, k).unwrap();
    let fam = space.family(r).unwrap();
    let n = space.num_points();
    let mut mult = vec![0u32; n];
    let mut best = 0;
    loop {
        let total: u64 = mult.iter().map(|&m| m as u64).sum();
        if total > best && (0..fam.len()).all(|s| fam.points(s).iter().map(|&p| mult[p as usize]).sum::<u32>() <= w) {
            best = total;
        }
        let mut i = 0;
        while i < n && mult[i] == cap {
            mult[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
        mult[i] += 1;
    }
}

#[test]
fn agrees_with_enumeration() {
    for w in 1..=4 {
        let b = brute(2, 2, 1, w, w);
        assert_eq!(exact(2, 2, 1, w), b, "w={w}");
        let s = ProjectiveSpace::shared(2, 2).unwrap();
        assert_eq!(max_arc_size(&SearchProblem::new(s, 1, w)).unwrap().best_n, b);
    }
    for w in 1..=3 {
        let b = brute(2, 3, 2, w, 1);
        let opts = SolveOptions { point_cap: Some(1), ..Default::default() };
        assert_eq!(solve(2, 3, 2, w, &opts).unwrap().best_n, b, "w={w}");
    }
    assert_eq!(brute(3, 2, 1, 2, 2), exact(3, 2, 1, 2));
}
