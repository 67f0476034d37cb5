//! Dedicated exact evaluators for the three axioms of pointed trees of
//! radius at most `r`: the radius bound, midpoints, and 0-hyperbolicity.

use std::fmt;
use std::sync::OnceLock;

use super::eval::{grid, CertifiedValue};
use super::{parse_formula, Formula};
use crate::rat::Rat;
use crate::realize::{delta_hyperbolicity, tree_to_matrix};
use crate::tree::{PointRef, TreeSkeleton};

/// `sup x. d(x,p)`; must be at most `r`.
pub const AXIOM1: &str = "sup x. d(x,p)";

/// Every pair has a midpoint.
pub const AXIOM2: &str = "sup x. sup y. inf z. max(abs(d(x,z) - 1/2 * d(x,y)), abs(d(y,z) - 1/2 * d(x,y)))";

/// Gromov's four-point condition with `δ = 0`.
pub const AXIOM3: &str = "sup x. sup y. sup z. sup w. \
    (min(1/2 * ((d(x,w) + d(z,w)) -. d(x,z)), 1/2 * ((d(y,w) + d(z,w)) -. d(y,z))) \
    -. 1/2 * ((d(x,w) + d(y,w)) -. d(x,y)))";

/// Above this many points the hyperbolicity scan falls back to vertices and
/// edge midpoints; the scan is quartic.
const DELTA_POINT_CAP: usize = 32;

fn parsed(slot: &'static OnceLock<Formula>, src: &str) -> &'static Formula {
    slot.get_or_init(|| parse_formula(src).expect("axiom text parses"))
}

pub(crate) fn axiom2() -> &'static Formula {
    static F: OnceLock<Formula> = OnceLock::new();
    parsed(&F, AXIOM2)
}

pub(crate) fn axiom3() -> &'static Formula {
    static F: OnceLock<Formula> = OnceLock::new();
    parsed(&F, AXIOM3)
}

/// Values of the three axioms on one tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomReport {
    pub r: Rat,
    pub radius: CertifiedValue,
    pub midpoint: CertifiedValue,
    pub hyperbolicity: CertifiedValue,
}

impl AxiomReport {
    pub fn radius_ok(&self) -> bool {
        self.radius.upper <= self.r
    }

    pub fn passes(&self) -> bool {
        self.radius_ok() && self.midpoint.upper.is_zero() && self.hyperbolicity.upper.is_zero()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmp = if self.radius_ok() { "≤" } else { ">" };
        write!(
            f,
            "axiom1={}{}{} axiom2={} axiom3={}",
            self.radius, cmp, self.r, self.midpoint, self.hyperbolicity
        )
    }
}

fn probe_points(tree: &TreeSkeleton, mesh: &Rat) -> Vec<PointRef> {
    let pts = grid(tree, mesh, &[]);
    if pts.len() <= DELTA_POINT_CAP {
        return pts;
    }
    let mut out: Vec<PointRef> = tree.nodes().map(PointRef::Vertex).collect();
    for e in tree.edge_ixs() {
        out.push(PointRef::Edge { edge: e, offset: tree.edge(e).len.half() });
    }
    out
}

/// Largest midpoint defect over pairs of probe points, each pair using the
/// constructed midpoint `interpolate(x, y, 1/2)`.
pub(crate) fn midpoint_defect(tree: &TreeSkeleton, mesh: &Rat) -> Rat {
    let pts = probe_points(tree, mesh);
    let half = Rat::new(1, 2);
    let mut worst = Rat::zero();
    for x in &pts {
        for y in &pts {
            let m = tree.interpolate(x, y, &half);
            let h = tree.distance(x, y).half();
            for d in [(tree.distance(x, &m) - &h).abs(), (tree.distance(y, &m) - &h).abs()] {
                if d > worst {
                    worst = d;
                }
            }
        }
    }
    worst
}

pub(crate) fn hyperbolicity(tree: &TreeSkeleton, mesh: &Rat) -> Rat {
    delta_hyperbolicity(&tree_to_matrix(tree, &probe_points(tree, mesh)))
}

/// Exact values of the named axioms when `f` is one of them.
pub(crate) fn named_exact(tree: &TreeSkeleton, f: &Formula, mesh: &Rat) -> Option<CertifiedValue> {
    if f == axiom3() {
        Some(CertifiedValue::exact(hyperbolicity(tree, mesh)))
    } else if f == axiom2() {
        Some(CertifiedValue::exact(midpoint_defect(tree, mesh)))
    } else {
        None
    }
}

/// Evaluate the three axioms exactly: the radius as a supremum over
/// vertices, the midpoint axiom through constructed midpoints, and
/// hyperbolicity as the four-point constant of vertices and grid points.
pub fn check_rt_axioms(tree: &TreeSkeleton, r: &Rat, mesh: &Rat) -> AxiomReport {
    AxiomReport {
        r: r.clone(),
        radius: CertifiedValue::exact(tree.radius()),
        midpoint: CertifiedValue::exact(midpoint_defect(tree, mesh)),
        hyperbolicity: CertifiedValue::exact(hyperbolicity(tree, mesh)),
    }
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
    fn tripod_passes_at_two() {
        let rep = check_rt_axioms(&tripod(), &rat!(2), &rat!(1 / 2));
        assert!(rep.passes());
        assert_eq!(rep.to_string(), "axiom1=2≤2 axiom2=0 axiom3=0");
    }

    #[test]
    fn tripod_fails_radius_at_three_halves() {
        let rep = check_rt_axioms(&tripod(), &rat!(3 / 2), &rat!(1 / 2));
        assert!(!rep.radius_ok());
        assert_eq!(rep.radius.upper, rat!(2));
    }

    #[test]
    fn single_point_is_all_zero() {
        let rep = check_rt_axioms(&TreeSkeleton::point("p"), &rat!(1), &rat!(1 / 2));
        assert_eq!(rep.to_string(), "axiom1=0≤1 axiom2=0 axiom3=0");
    }
}
