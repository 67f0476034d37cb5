//! Property suites over random trees.

mod common;

use common::*;
use proptest::prelude::*;
use rtree::independence::is_star_independent;
use rtree::realize::{delta_hyperbolicity, labeled_point, tree_to_matrix_labeled};
use rtree::types::{realize_type, type_of, types_equal, validate_descriptor};
use rtree::{realize_tree, tree_to_matrix, PointRef, TreeSkeleton};

fn tree_and_points(seed: u64, k: usize) -> (TreeSkeleton, Vec<PointRef>) {
    let mut g = rng(seed);
    let t = random_tree(&mut g, 8);
    let pts = (0..k).map(|_| random_point(&mut g, &t)).collect();
    (t, pts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_axioms(seed in any::<u64>()) {
        let (t, pts) = tree_and_points(seed, 4);
        for x in &pts {
            prop_assert!(t.distance(x, x).is_zero());
            for y in &pts {
                prop_assert_eq!(t.distance(x, y), t.distance(y, x));
                prop_assert_eq!(t.distance(x, y).is_zero(), x == y);
                for z in &pts {
                    prop_assert!(t.distance(x, z) <= t.distance(x, y) + t.distance(y, z));
                }
            }
        }
        prop_assert!(delta_hyperbolicity(&tree_to_matrix(&t, &pts)).is_zero());
    }

    #[test]
    fn median_lies_on_all_three_segments(seed in any::<u64>()) {
        let (t, pts) = tree_and_points(seed, 3);
        let m = t.median(&pts[0], &pts[1], &pts[2]);
        prop_assert!(t.is_between(&pts[0], &m, &pts[1]));
        prop_assert!(t.is_between(&pts[1], &m, &pts[2]));
        prop_assert!(t.is_between(&pts[0], &m, &pts[2]));
    }

    #[test]
    fn realization_is_exact(seed in any::<u64>()) {
        let (t, mut pts) = tree_and_points(seed, 5);
        pts.insert(0, t.base_point());
        let labels: Vec<String> = (0..pts.len()).map(|i| format!("x{i}")).collect();
        let m = tree_to_matrix_labeled(&t, &pts, labels.clone());
        let rt = realize_tree(&m, "x0").unwrap();
        let back: Vec<PointRef> = labels.iter().map(|l| labeled_point(&rt, l).unwrap()).collect();
        prop_assert_eq!(tree_to_matrix_labeled(&rt, &back, labels), m);
    }

    #[test]
    fn independence_is_symmetric(seed in any::<u64>()) {
        let (t, pts) = tree_and_points(seed, 5);
        let (a, b, c) = (&pts[0..2], &pts[2..4], &pts[4..5]);
        prop_assert_eq!(
            is_star_independent(&t, a, b, c).is_ok(),
            is_star_independent(&t, b, a, c).is_ok()
        );
        // B inside C adds nothing to the span.
        prop_assert!(is_star_independent(&t, a, c, c).is_ok());
    }

    #[test]
    fn descriptor_round_trip(seed in any::<u64>(), n in 1usize..4) {
        let (t, pts) = tree_and_points(seed, n + 2);
        let (a, b) = pts.split_at(2);
        let q = type_of(&t, a, b);
        prop_assert!(validate_descriptor(&q).is_ok());
        let real = realize_type(&q).unwrap();
        let params: Vec<PointRef> =
            q.context.generators()[1..].iter().map(|x| real.embedding.apply(&t, &real.tree, x)).collect();
        prop_assert!(types_equal(&q, &type_of(&real.tree, &params, &real.points)).unwrap());
    }
}
