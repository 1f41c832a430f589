use proptest::prelude::*;

use colme::bernstein::{compose, moment_bound, tail_bound, z_threshold_exact, z_threshold_simple, BernsteinParams, TestSpec};
use colme::privacy::PrivacySpec;
use colme::rng::RandomStream;
use colme::rules::{bernstein_decide, optimistic_decide, PublicStats};
use colme::topology::{gen_random_regular, ClassStructure, Graph};

fn params() -> impl Strategy<Value = BernsteinParams> {
    (-5.0..5.0f64, 1e-3..10.0f64, 0.0..3.0f64).prop_map(|(mean, var, extra)| {
        let beta = var.sqrt() * (colme::bernstein::MIN_BETA_TO_SIGMA + extra);
        BernsteinParams::new(mean, var, beta).unwrap()
    })
}

proptest! {
    #[test]
    fn thresholds_fixed_point_and_order(sigma_sq in 1e-4..100.0f64, beta in 1e-4..100.0f64, theta in 1e-8..2.0f64) {
        let spec = TestSpec::new(sigma_sq, beta, theta).unwrap();
        let z = z_threshold_exact(&spec).unwrap();
        let p = BernsteinParams::new(0.0, sigma_sq, beta.max(sigma_sq.sqrt() * colme::bernstein::MIN_BETA_TO_SIGMA)).unwrap();
        let spec_p = TestSpec::new(p.variance, p.beta, theta).unwrap();
        let zp = z_threshold_exact(&spec_p).unwrap();
        prop_assert!((tail_bound(zp, &p).unwrap() - theta).abs() <= 1e-10 * theta.max(1.0));
        prop_assert!(z_threshold_simple(&spec).unwrap() >= z);
    }

    #[test]
    fn exact_threshold_nonincreasing_in_theta(sigma_sq in 1e-3..10.0f64, beta in 1e-3..10.0f64, a in 1e-6..2.0f64, b in 1e-6..2.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let z = |t| z_threshold_exact(&TestSpec::new(sigma_sq, beta, t).unwrap()).unwrap();
        prop_assert!(z(lo) >= z(hi));
    }

    #[test]
    fn compose_permutation_invariant(mut ps in prop::collection::vec(params(), 1..8), seed in any::<u64>()) {
        let before = compose(&ps).unwrap();
        let mut s = RandomStream::from_seed(seed);
        for i in (1..ps.len()).rev() {
            ps.swap(i, s.index(i + 1));
        }
        let after = compose(&ps).unwrap();
        prop_assert!((before.variance - after.variance).abs() <= 1e-12 * before.variance);
        prop_assert!((before.beta - after.beta).abs() <= 1e-12 * before.beta);
        prop_assert!((before.mean - after.mean).abs() <= 1e-12);
    }

    #[test]
    fn larger_beta_keeps_moment_bound(var in 1e-3..10.0f64, beta in 1e-3..10.0f64, extra in 0.0..5.0f64, k in 2u32..16) {
        prop_assert!(moment_bound(k, var, beta + extra) >= moment_bound(k, var, beta));
    }

    #[test]
    fn decisions_are_symmetric(xa in -2.0..2.0f64, xb in -2.0..2.0f64, t in 1u64..10_000, eps in 0.5..10.0f64, theta in 1e-3..2.0f64) {
        let l = 3f64.sqrt() / 2.0;
        let privacy = PrivacySpec::calibrate(eps, l).unwrap();
        let a = PublicStats::uniform(l);
        let b = PublicStats { sigma: 0.3, beta: 0.3 };
        prop_assert_eq!(
            bernstein_decide(xa, xb, t, &a, &b, &privacy, theta).unwrap(),
            bernstein_decide(xb, xa, t, &b, &a, &privacy, theta).unwrap()
        );
        prop_assert_eq!(
            optimistic_decide(xa, xb, t, &a, &b, &privacy, 1.0, 20, 200).unwrap(),
            optimistic_decide(xb, xa, t, &b, &a, &privacy, 1.0, 20, 200).unwrap()
        );
    }

    #[test]
    fn regular_graph_structure(half in 3usize..40, r in 1usize..6, seed in any::<u64>()) {
        let m = 2 * half;
        let g = gen_random_regular(m, r, &mut RandomStream::from_seed(seed)).unwrap();
        prop_assert_eq!(g.regular_degree(), Some(r));
        prop_assert_eq!(g.edge_count(), m * r / 2);
        for a in 0..m {
            prop_assert!(!g.has_edge(a, a));
            for &b in g.neighbors(a) {
                prop_assert!(g.has_edge(b, a));
            }
        }
        prop_assert_eq!(Graph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn components_invariant_under_relabeling(half in 3usize..20, seed in any::<u64>()) {
        let m = 2 * half;
        let mut s = RandomStream::from_seed(seed);
        let g = gen_random_regular(m, 3, &mut s).unwrap();
        let classes: Vec<usize> = (0..m).map(|_| s.index(3)).collect();
        let means = vec![0.2, 0.4, 0.8];
        let base = ClassStructure::build(&g, classes.clone(), means.clone()).unwrap();
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, s.index(i + 1));
        }
        let relabeled = Graph::from_edges(m, g.edges().map(|(a, b)| (perm[a], perm[b]))).unwrap();
        let mut new_classes = vec![0; m];
        for a in 0..m {
            new_classes[perm[a]] = classes[a];
        }
        let other = ClassStructure::build(&relabeled, new_classes, means).unwrap();
        for a in 0..m {
            prop_assert_eq!(base.component_size(a), other.component_size(perm[a]));
            let mut mapped: Vec<usize> = base.component(a).iter().map(|&b| perm[b]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, other.component(perm[a]));
        }
    }
}
