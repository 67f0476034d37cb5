//! The independence relation `A ⫫*_C B`, nonforking extensions and
//! canonical bases, all inside one finite ambient tree.
//!
//! `A ⫫*_C B` holds when every `a ∈ A` is as far from `E_{B∪C}` as from
//! `E_C`; equivalently the two closest points coincide.

use std::collections::BTreeMap;
use std::fmt;

use crate::rat::Rat;
use crate::subtree::spanned_subtree;
use crate::tree::{NodeIx, PointRef, TreeSkeleton};
use crate::types::{NTypeDescriptor, TypeError};

/// A point of `A` whose projection moves when `B` is added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependenceWitness {
    pub index: usize,
    pub point: PointRef,
    /// Projection onto `E_{B∪C}`.
    pub with_b: PointRef,
    pub dist_with_b: Rat,
    /// Projection onto `E_C`.
    pub without_b: PointRef,
    pub dist_without_b: Rat,
}

impl DependenceWitness {
    pub fn display<'a>(&'a self, tree: &'a TreeSkeleton) -> impl fmt::Display + 'a {
        struct D<'a>(&'a DependenceWitness, &'a TreeSkeleton);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let (w, t) = (self.0, self.1);
                write!(
                    f,
                    "witness={} proj_bc={} dist_bc={} proj_c={} dist_c={}",
                    t.describe(&w.point),
                    t.describe(&w.with_b),
                    w.dist_with_b,
                    t.describe(&w.without_b),
                    w.dist_without_b
                )
            }
        }
        D(self, tree)
    }
}

/// Decide `A ⫫*_C B`; `p` is always adjoined to `C`.
pub fn is_star_independent(
    tree: &TreeSkeleton,
    a: &[PointRef],
    b: &[PointRef],
    c: &[PointRef],
) -> Result<(), DependenceWitness> {
    let small = spanned_subtree(tree, c);
    let bc: Vec<PointRef> = b.iter().chain(c).cloned().collect();
    let big = spanned_subtree(tree, &bc);
    for (index, x) in a.iter().enumerate() {
        let (e_big, d_big) = big.project(x);
        let (e_small, d_small) = small.project(x);
        if d_big != d_small {
            return Err(DependenceWitness {
                index,
                point: x.clone(),
                with_b: e_big,
                dist_with_b: d_big,
                without_b: e_small,
                dist_without_b: d_small,
            });
        }
    }
    Ok(())
}

/// The nonforking extension of `q` to the parameters of `q` plus `b`, all
/// points of `q`'s ambient tree.
pub fn extend_nonforking(q: &NTypeDescriptor, b: &[PointRef]) -> NTypeDescriptor {
    let tree = q.context.ambient();
    let params: Vec<PointRef> = q.context.generators()[1..].iter().chain(b).cloned().collect();
    let ctx = spanned_subtree(tree, &params);
    let closest: Vec<PointRef> = (0..q.arity()).map(|i| q.closest_ambient(i)).collect();
    NTypeDescriptor::over(ctx, &closest, q.offsets.clone(), q.pairwise.clone(), q.radius.clone())
        .expect("the old context lies inside the new one")
}

/// Whether `big` is the nonforking extension of `small`.
pub fn is_nonforking_extension(small: &NTypeDescriptor, big: &NTypeDescriptor) -> Result<bool, TypeError> {
    if small.context.ambient() != big.context.ambient()
        || !small.context.generators().iter().all(|g| big.context.contains(g))
    {
        return Err(TypeError::ContextMismatch);
    }
    if small.arity() != big.arity() {
        return Err(TypeError::Arity(small.arity(), big.arity()));
    }
    Ok((0..small.arity()).all(|i| {
        let e = big.closest_ambient(i);
        small.context.contains(&e) && e == small.closest_ambient(i)
    }) && small.offsets == big.offsets
        && small.pairwise == big.pairwise)
}

/// The closest points `e_i`, deduplicated, in the ambient tree.
pub fn canonical_base(q: &NTypeDescriptor) -> Vec<PointRef> {
    let mut out: Vec<PointRef> = (0..q.arity()).map(|i| q.closest_ambient(i)).collect();
    out.sort();
    out.dedup();
    out
}

/// An isometry of a skeleton onto itself, as a permutation of nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isometry {
    images: Vec<NodeIx>,
}

impl Isometry {
    pub fn identity(tree: &TreeSkeleton) -> Self {
        Isometry { images: tree.nodes().collect() }
    }

    pub fn image(&self, v: NodeIx) -> NodeIx {
        self.images[v.0]
    }

    /// Edge lengths and adjacency are preserved. The basepoint may move.
    pub fn is_isometry(&self, tree: &TreeSkeleton) -> bool {
        let mut seen = vec![false; tree.node_count()];
        for &w in &self.images {
            if w.0 >= seen.len() || seen[w.0] {
                return false;
            }
            seen[w.0] = true;
        }
        tree.edges().iter().all(|e| {
            tree.find_edge(self.image(e.u), self.image(e.v)).is_some_and(|f| tree.edge(f).len == e.len)
        })
    }

    pub fn apply(&self, tree: &TreeSkeleton, x: &PointRef) -> PointRef {
        match x {
            PointRef::Vertex(v) => PointRef::Vertex(self.image(*v)),
            PointRef::Edge { edge, offset } => {
                let e = tree.edge(*edge);
                tree.point_on_edge(self.image(e.u), self.image(e.v), offset).expect("edges map to edges")
            }
        }
    }

    pub fn fixes(&self, tree: &TreeSkeleton, x: &PointRef) -> bool {
        &self.apply(tree, x) == x
    }
}

/// Shape of the branch at `root` away from `from`, ignoring labels.
fn shape(tree: &TreeSkeleton, root: NodeIx, from: NodeIx, memo: &mut BTreeMap<(NodeIx, NodeIx), String>) -> String {
    if let Some(s) = memo.get(&(root, from)) {
        return s.clone();
    }
    let mut parts: Vec<String> = tree
        .neighbors(root)
        .iter()
        .filter(|(c, _)| *c != from)
        .map(|&(c, e)| format!("{}:{}", tree.edge(e).len, shape(tree, c, root, memo)))
        .collect();
    parts.sort();
    let s = format!("({})", parts.join(","));
    memo.insert((root, from), s.clone());
    s
}

fn match_branches(
    tree: &TreeSkeleton,
    x: NodeIx,
    xf: NodeIx,
    y: NodeIx,
    yf: NodeIx,
    images: &mut [NodeIx],
    memo: &mut BTreeMap<(NodeIx, NodeIx), String>,
) {
    images[x.0] = y;
    let ys: Vec<(NodeIx, String)> = tree
        .neighbors(y)
        .iter()
        .filter(|(c, _)| *c != yf)
        .map(|&(c, e)| (c, format!("{}:{}", tree.edge(e).len, shape(tree, c, y, memo))))
        .collect();
    let mut used = vec![false; ys.len()];
    for &(c, e) in tree.neighbors(x) {
        if c == xf {
            continue;
        }
        let key = format!("{}:{}", tree.edge(e).len, shape(tree, c, x, memo));
        let k = (0..ys.len()).find(|&k| !used[k] && ys[k].1 == key).expect("shapes agree");
        used[k] = true;
        match_branches(tree, c, x, ys[k].0, y, images, memo);
    }
}

/// The isometry exchanging the branches at `at` through neighbours `n1` and
/// `n2` and fixing everything else, when the two branches are isometric
/// and neither contains the basepoint.
pub fn branch_swap(tree: &TreeSkeleton, at: NodeIx, n1: NodeIx, n2: NodeIx) -> Option<Isometry> {
    let e1 = tree.find_edge(at, n1)?;
    let e2 = tree.find_edge(at, n2)?;
    if n1 == n2 || tree.edge(e1).len != tree.edge(e2).len {
        return None;
    }
    let mut memo = BTreeMap::new();
    if shape(tree, n1, at, &mut memo) != shape(tree, n2, at, &mut memo) {
        return None;
    }
    let mut images: Vec<NodeIx> = tree.nodes().collect();
    match_branches(tree, n1, at, n2, at, &mut images, &mut memo);
    match_branches(tree, n2, at, n1, at, &mut images, &mut memo);
    // Pointed isometries only.
    if images[tree.basepoint().0] != tree.basepoint() {
        return None;
    }
    Some(Isometry { images })
}

/// Every pair of isometric branches at any node, as swaps.
pub fn all_branch_swaps(tree: &TreeSkeleton) -> Vec<(NodeIx, Isometry)> {
    let mut out = Vec::new();
    for v in tree.nodes() {
        let nb = tree.neighbors(v);
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                if let Some(iso) = branch_swap(tree, v, nb[i].0, nb[j].0) {
                    out.push((v, iso));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::tree::TreeGraph;
    use crate::types::{type_of, types_equal};

    fn tripod() -> TreeSkeleton {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1)).edge("y", "b", rat!(1));
        g.build().unwrap()
    }

    #[test]
    fn dependence_witness_on_tripod() {
        let t = tripod();
        let w = is_star_independent(&t, &[t.at("b")], &[t.at("a")], &[t.at("p")]).unwrap_err();
        assert_eq!(w.with_b, t.at("y"));
        assert_eq!(w.without_b, t.at("p"));
        assert_eq!(w.display(&t).to_string(), "witness=b proj_bc=y dist_bc=1 proj_c=p dist_c=2");
        assert!(is_star_independent(&t, &[t.at("a")], &[t.at("b")], &[t.at("p"), t.at("y")]).is_ok());
        assert!(is_star_independent(&t, &[t.at("y")], &[t.at("b")], &[t.at("a")]).is_ok());
    }

    #[test]
    fn nonforking_extension_keeps_data() {
        let t = tripod();
        let q = type_of(&t, &[], &[t.at("a")]);
        let big = extend_nonforking(&q, &[t.at("y")]);
        assert_eq!(big.closest_ambient(0), t.at("p"));
        assert_eq!(big.offsets, vec![rat!(2)]);
        assert!(is_nonforking_extension(&q, &big).unwrap());
        let forking = type_of(&t, &[t.at("a")], &[t.at("b")]);
        assert!(!is_nonforking_extension(&type_of(&t, &[], &[t.at("b")]), &forking).unwrap());
        let mut off = big.clone();
        off.offsets[0] = rat!(3 / 2);
        assert!(!is_nonforking_extension(&q, &off).unwrap());
    }

    #[test]
    fn canonical_base_and_swaps() {
        let t = tripod();
        let q = type_of(&t, &[t.at("y")], &[t.at("a"), t.at("b")]);
        assert_eq!(canonical_base(&q), vec![t.at("y")]);
        let y = t.node("y").unwrap();
        let swap = branch_swap(&t, y, t.node("a").unwrap(), t.node("b").unwrap()).unwrap();
        assert!(swap.is_isometry(&t));
        assert!(swap.fixes(&t, &t.at("y")));
        let moved: Vec<PointRef> = [t.at("a"), t.at("b")].iter().map(|x| swap.apply(&t, x)).collect();
        assert!(types_equal(&q, &type_of(&t, &[t.at("y")], &moved)).unwrap());
        assert!(branch_swap(&t, y, t.node("a").unwrap(), t.node("p").unwrap()).is_none());
        assert_eq!(all_branch_swaps(&t).len(), 1);
    }
}
