//! Subtrees spanned by finite point sets, and projections onto them.

use crate::rat::Rat;
use crate::realize::{realize_tree, tree_to_matrix_labeled};
use crate::tree::{NodeIx, PointRef, TreeSkeleton};

/// The union of all segments between points of `generators ∪ {p}`.
///
/// `realized` is that subtree as a skeleton of its own (basepoint `p`,
/// generator `i` labelled `g{i}`), built deterministically from the
/// generator distances alone, so two spanned subtrees with the same
/// generator matrix have identical skeletons.
#[derive(Clone, Debug)]
pub struct SpannedSubtree {
    ambient: TreeSkeleton,
    generators: Vec<PointRef>,
    realized: TreeSkeleton,
    gen_nodes: Vec<NodeIx>,
}

/// `E_{A ∪ {p}}` inside `tree`.
pub fn spanned_subtree(tree: &TreeSkeleton, a: &[PointRef]) -> SpannedSubtree {
    let mut generators = vec![tree.base_point()];
    for x in a {
        if !generators.contains(x) {
            generators.push(x.clone());
        }
    }
    let labels: Vec<String> =
        (0..generators.len()).map(|i| if i == 0 { "p".to_string() } else { format!("g{i}") }).collect();
    let m = tree_to_matrix_labeled(tree, &generators, labels.clone());
    let realized = realize_tree(&m, "p").expect("distances inside a tree are additive");
    let gen_nodes = labels.iter().map(|l| realized.labeled(l).expect("every label is placed")).collect();
    SpannedSubtree { ambient: tree.clone(), generators, realized, gen_nodes }
}

impl SpannedSubtree {
    pub fn ambient(&self) -> &TreeSkeleton {
        &self.ambient
    }

    /// Generators, the basepoint first.
    pub fn generators(&self) -> &[PointRef] {
        &self.generators
    }

    pub fn realized(&self) -> &TreeSkeleton {
        &self.realized
    }

    /// Node of the realized skeleton standing for generator `i`.
    pub fn generator_node(&self, i: usize) -> NodeIx {
        self.gen_nodes[i]
    }

    /// Total length of the subtree.
    pub fn length(&self) -> Rat {
        self.realized.total_length()
    }

    /// Carry a point of the realized skeleton into the ambient tree.
    pub fn to_ambient(&self, x: &PointRef) -> PointRef {
        let r = &self.realized;
        let n = self.generators.len();
        for i in 0..n {
            for j in i..n {
                let (gi, gj) = (PointRef::Vertex(self.gen_nodes[i]), PointRef::Vertex(self.gen_nodes[j]));
                if r.is_between(&gi, x, &gj) {
                    let t = r.distance(&gi, x);
                    return self.ambient.point_along(&self.generators[i], &self.generators[j], &t);
                }
            }
        }
        unreachable!("the realized skeleton is spanned by its generators")
    }

    /// Carry an ambient point into the realized skeleton, if it lies in the
    /// subtree.
    pub fn from_ambient(&self, x: &PointRef) -> Option<PointRef> {
        let n = self.generators.len();
        for i in 0..n {
            for j in i..n {
                if self.ambient.is_between(&self.generators[i], x, &self.generators[j]) {
                    let t = self.ambient.distance(&self.generators[i], x);
                    let r = &self.realized;
                    return Some(r.point_along(
                        &PointRef::Vertex(self.gen_nodes[i]),
                        &PointRef::Vertex(self.gen_nodes[j]),
                        &t,
                    ));
                }
            }
        }
        None
    }

    pub fn contains(&self, x: &PointRef) -> bool {
        self.project(x).1.is_zero()
    }

    /// Images in the ambient tree of every vertex of the realized skeleton.
    pub fn ambient_vertices(&self) -> Vec<PointRef> {
        self.realized.nodes().map(|v| self.to_ambient(&PointRef::Vertex(v))).collect()
    }

    /// Closest point of the subtree to the ambient point `a`, and the
    /// distance to it.
    pub fn project(&self, a: &PointRef) -> (PointRef, Rat) {
        let t = &self.ambient;
        let n = self.generators.len();
        let mut best: Option<(usize, usize, Rat)> = None;
        for i in 0..n {
            for j in i..n {
                let g = t.gromov_product(&self.generators[i], &self.generators[j], a);
                if best.as_ref().map_or(true, |(_, _, b)| &g < b) {
                    best = Some((i, j, g));
                }
            }
        }
        let (i, j, d) = best.expect("p is always a generator");
        let (gi, gj) = (&self.generators[i], &self.generators[j]);
        let along = t.gromov_product(a, gj, gi);
        (t.point_along(gi, gj, &along), d)
    }

    /// Same point set (as subsets of the ambient tree).
    pub fn same_subset(&self, other: &SpannedSubtree) -> bool {
        other.generators.iter().all(|g| self.contains(g)) && self.generators.iter().all(|g| other.contains(g))
    }
}

/// Closest point of `sub` to `a` in `tree`, with the distance.
pub fn project_to_subtree(tree: &TreeSkeleton, sub: &SpannedSubtree, a: &PointRef) -> (PointRef, Rat) {
    debug_assert_eq!(tree, sub.ambient());
    sub.project(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::tree::TreeGraph;

    fn tripod() -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        g.build().unwrap()
    }

    #[test]
    fn segment_spanned_by_a_leaf() {
        let t = tripod();
        let s = spanned_subtree(&t, &[t.at("a")]);
        assert_eq!(s.length(), rat!(2));
        assert!(s.contains(&t.at("y")));
        assert!(!s.contains(&t.at("b")));
    }

    #[test]
    fn basepoint_alone() {
        let t = tripod();
        let s = spanned_subtree(&t, &[t.at("p")]);
        assert_eq!(s.realized().node_count(), 1);
        assert_eq!(s.length(), rat!(0));
    }

    #[test]
    fn two_leaves_span_everything() {
        let t = tripod();
        let s = spanned_subtree(&t, &[t.at("a"), t.at("b")]);
        assert_eq!(s.length(), t.total_length());
        let mut amb = s.ambient_vertices();
        amb.sort();
        let mut all: Vec<PointRef> = t.nodes().map(PointRef::Vertex).collect();
        all.sort();
        assert_eq!(amb, all);
    }

    #[test]
    fn projections() {
        let t = tripod();
        let py = spanned_subtree(&t, &[t.at("y")]);
        assert_eq!(project_to_subtree(&t, &py, &t.at("a")), (t.at("y"), rat!(1)));
        assert_eq!(project_to_subtree(&t, &py, &t.at("y")), (t.at("y"), rat!(0)));
        let p = spanned_subtree(&t, &[]);
        assert_eq!(project_to_subtree(&t, &p, &t.at("a")), (t.at("p"), rat!(2)));
    }

    #[test]
    fn correspondence_round_trip() {
        let t = tripod();
        let x = t.point_on_edge_by_id("y", "b", &rat!(1 / 3)).unwrap();
        let s = spanned_subtree(&t, &[t.at("a"), x.clone()]);
        let inside = s.from_ambient(&x).unwrap();
        assert_eq!(s.to_ambient(&inside), x);
        assert!(s.from_ambient(&t.at("b")).is_none());
    }
}
