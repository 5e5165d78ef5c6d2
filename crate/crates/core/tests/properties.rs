use std::sync::Arc;

use proptest::prelude::*;

use pgarc::bounds::{best_upper_bound, griesmer_admits, griesmer_g, griesmer_upper_bound, BoundQuery, SigmaEps};
use pgarc::code::LinearCode;
use pgarc::constructions::{Placement, SsType};
use pgarc::geometry::{gaussian_v, Projection, ProjectiveSpace};
use pgarc::multiset::{solomon_stiffler_cardinality, Multiset};
use pgarc::oracle::Oracle;
use pgarc::search::{solve, verify_witness, SearchStatus, SolveOptions};

fn space(q: u32, k: usize) -> Arc<ProjectiveSpace> {
    ProjectiveSpace::shared(q, k).unwrap()
}

/// A multiset on PG(K,q), q ∈ {2,3}, K ≤ `max_k`, multiplicities ≤ `max`.
fn multiset(max_k: usize, max: u32) -> impl Strategy<Value = Multiset> {
    multiset_in(1, max_k, max)
}

fn multiset_in(min_k: usize, max_k: usize, max: u32) -> impl Strategy<Value = Multiset> {
    (prop_oneof![Just(2u32), Just(3u32)], min_k..=max_k).prop_flat_map(move |(q, k)| {
        let s = space(q, k);
        proptest::collection::vec(0..=max, s.num_points())
            .prop_map(move |m| Multiset::from_multiplicities(Arc::clone(&s), m).unwrap())
    })
}

fn pair(max_k: usize, max: u32) -> impl Strategy<Value = (Multiset, Multiset)> {
    multiset(max_k, max).prop_flat_map(move |a| {
        let s = Arc::clone(a.space());
        proptest::collection::vec(0..=max, s.num_points())
            .prop_map(move |m| (a.clone(), Multiset::from_multiplicities(Arc::clone(&s), m).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

    #[test]
    fn complement_identity(ms in multiset(3, 3), extra in 0u32..2) {
        let s = ms.max_multiplicity() + extra;
        let c = ms.complement(s).unwrap();
        let q = ms.space().q() as u64;
        let k = ms.space().dim();
        prop_assert_eq!(c.cardinality(), s as u64 * gaussian_v(k as u32 + 1, q) - ms.cardinality());
        let (p, pc) = (ms.arc_profile().unwrap(), c.arc_profile().unwrap());
        for r in 0..=k {
            prop_assert_eq!(pc.u[r], s as u64 * gaussian_v(r as u32 + 1, q) - p.w[r]);
        }
        prop_assert_eq!(c.complement(s).unwrap(), ms);
    }

    #[test]
    fn msum_is_superadditive((a, b) in pair(3, 2)) {
        let sum = a.msum(&b).unwrap();
        prop_assert_eq!(sum.cardinality(), a.cardinality() + b.cardinality());
        for r in 0..=a.space().dim() {
            prop_assert!(sum.w(r).unwrap() <= a.w(r).unwrap() + b.w(r).unwrap());
            prop_assert!(sum.w(r).unwrap() >= a.w(r).unwrap().max(b.w(r).unwrap()));
        }
    }

    #[test]
    fn profile_is_monotone(ms in multiset(3, 2)) {
        let p = ms.arc_profile().unwrap();
        let k = ms.space().dim();
        prop_assert_eq!(p.w[k], ms.cardinality());
        prop_assert_eq!(p.u[k], ms.cardinality());
        prop_assert!(p.w.windows(2).all(|x| x[0] <= x[1]));
        if ms.spans() {
            prop_assert!(p.w.windows(2).all(|x| x[0] < x[1]));
        }
        for r in 1..k {
            prop_assert_eq!(ms.w(r).unwrap(), ms.w_naive(r).unwrap());
        }
    }

    #[test]
    fn projection_conserves_fibers(ms in multiset_in(2, 3, 2), seed in any::<u64>()) {
        let s = ms.space();
        let n = s.num_points();
        let center = (seed as usize) % n;
        let delta = s.span_points(&[center]).unwrap();
        // Dropping a unit vector where the center is nonzero leaves a complement.
        let c = s.coords(center);
        let skip = c.iter().position(|&x| x != 0).unwrap();
        let units: Vec<Vec<u8>> = (0..s.vector_dim())
            .filter(|&i| i != skip)
            .map(|i| (0..s.vector_dim()).map(|j| u8::from(i == j)).collect())
            .collect();
        let refs: Vec<&[u8]> = units.iter().map(Vec::as_slice).collect();
        let pi = s.span(&refs).unwrap();
        let img = ms.induced_projection(&delta, &pi).unwrap();
        let proj = Projection::new(s, &delta, &pi).unwrap();
        prop_assert_eq!(img.cardinality(), ms.cardinality() - ms.get(center) as u64);
        // Lines through the center map to points.
        for p in 0..n {
            if p == center {
                continue;
            }
            let line = s.span_points(&[center, p]).unwrap();
            let want = ms.subspace_multiplicity(&line) - ms.get(center) as u64;
            let at = proj.project_to_screen(s, img.space(), p).unwrap();
            prop_assert_eq!(img.get(at) as u64, want);
        }
    }

    #[test]
    fn arc_file_round_trip(ms in multiset(3, 4)) {
        prop_assert_eq!(Multiset::from_arc_str(&ms.to_arc_string()).unwrap(), ms);
    }

    #[test]
    fn matrix_round_trip_and_duality(ms in multiset(3, 2)) {
        prop_assume!(ms.spans());
        let code = LinearCode::from_multiset(&ms).unwrap();
        prop_assert_eq!(code.n() as u64, ms.cardinality());
        prop_assert_eq!(code.to_multiset().unwrap(), ms.clone());
        prop_assert_eq!(LinearCode::from_matrix_str(&code.to_matrix_string()).unwrap(), code.clone());
        let h = code.hierarchy_geometric().unwrap();
        let k = ms.space().dim();
        for r in 0..k {
            prop_assert_eq!(ms.w(r).unwrap() + h.d(k - r), ms.cardinality());
        }
    }

    #[test]
    fn sigma_eps_round_trip(q in prop_oneof![Just(2u32), Just(3u32), Just(5u32)], k in 1u32..8, d in 1u64..500) {
        let se = SigmaEps::decompose(q, k, d).unwrap();
        prop_assert_eq!(se.reconstruct(q), d);
        prop_assert!(se.eps.iter().all(|&e| e < q as u64));
        let removed: u64 = se.eps.iter().enumerate().map(|(i, &e)| e * gaussian_v(i as u32 + 1, q as u64)).sum();
        prop_assert_eq!(se.sigma * gaussian_v(k, q as u64) - removed, griesmer_g(q, k, d));
    }

    #[test]
    fn griesmer_bound_is_a_threshold(q in prop_oneof![Just(2u32), Just(3u32)], kk in 2u32..6, r in 1u32..5, w in 1u64..40) {
        prop_assume!(r < kk);
        let query = BoundQuery::new(q, kk, r, w).unwrap();
        let g = griesmer_upper_bound(&query).unwrap();
        prop_assert!(griesmer_admits(&query, g));
        prop_assert!(!griesmer_admits(&query, g + 1));
        // w ≤ w' gives a bound at least as large.
        let g2 = griesmer_upper_bound(&BoundQuery::new(q, kk, r, w + 1).unwrap()).unwrap();
        prop_assert!(g2 >= g);
    }

    #[test]
    fn ss_cardinality_ignores_placement(sigma in 1u32..3, removed in proptest::collection::vec(1usize..3, 0..3)) {
        let t = SsType::new(sigma, 3, removed.clone(), 0).unwrap();
        let s = space(2, 3);
        for placement in [Placement::Chain, Placement::Spread] {
            if let Ok(ms) = t.build(&s, placement, 1) {
                prop_assert_eq!(ms.cardinality() as i64, solomon_stiffler_cardinality(2, 3, sigma as u64, &t.removed));
                prop_assert_eq!(ms.cardinality(), t.cardinality(2));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn search_respects_bounds_and_witnesses(
        q in prop_oneof![Just(2u32), Just(3u32)],
        kk in 2usize..4,
        r in 1usize..3,
        w in 1u32..5,
    ) {
        prop_assume!(r < kk && (q == 2 || kk == 2));
        let res = solve(q, kk, r, w, &SolveOptions::default()).unwrap();
        prop_assert_eq!(res.status, SearchStatus::Optimal);
        prop_assert_eq!(res.witness.cardinality(), res.best_n);
        prop_assert!(verify_witness(&res.witness, r, w as u64).unwrap());
        let (ub, _) = best_upper_bound(&BoundQuery::new(q, kk as u32, r as u32, w as u64).unwrap(), &Oracle::builtin()).unwrap();
        prop_assert!(res.best_n <= ub);
        // More room never hurts.
        let more = solve(q, kk, r, w + 1, &SolveOptions::default()).unwrap();
        prop_assert!(more.best_n >= res.best_n);
    }
}
