mod common;

use common::*;
use rtree::formula::{psi_at, rb_deficiency};
use rtree::{rat, PointRef, Rat};

#[test]
fn tripod_matches_grid_oracle() {
    let t = tripod();
    let r = rat!(2);
    let mesh = Rat::new(1, 64);
    let pts = mesh_points(&t, &mesh);
    let scale = common_denominator(&t, &[&mesh]);
    for x in mesh_points(&t, &Rat::new(1, 8)) {
        let exact = psi_at(&t, &x, &r);
        let grid = psi_grid(&t, &x, &r, &pts, scale);
        assert!(exact <= grid && grid <= &exact + mesh.times(2), "x={} exact={exact} grid={grid}", t.describe(&x));
    }
}

#[test]
fn random_trees_match_grid_oracle() {
    let mut g = rng(7);
    for _ in 0..20 {
        let t = random_tree(&mut g, 6);
        let r = t.radius() + Rat::new(1, 2);
        let mesh = Rat::new(1, 12);
        let pts = mesh_points(&t, &mesh);
        let scale = 8 * common_denominator(&t, &[&mesh, &r]);
        let mut probes = vertices(&t);
        for _ in 0..4 {
            probes.push(random_point(&mut g, &t));
        }
        for x in probes {
            let exact = psi_at(&t, &x, &r);
            let grid = psi_grid(&t, &x, &r, &pts, scale);
            assert!(
                exact <= grid && grid <= &exact + mesh.times(2),
                "tree={:?} x={} exact={exact} grid={grid}",
                t.to_graph(),
                t.describe(&x)
            );
        }
        let sup = rb_deficiency(&t, &r);
        for x in mesh_points(&t, &mesh) {
            assert!(psi_at(&t, &x, &r) <= sup);
        }
        let _ = PointRef::Vertex(t.basepoint());
    }
}
