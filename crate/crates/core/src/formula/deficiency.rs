//! The richly-branching deficiency `ψ` and its supremum.
//!
//! For a point `x` with `l = r - d(p,x)`,
//!
//! ```text
//! ψ(x) = inf_{y1,y2,y3} max( max_i |d(x,y_i) - l|,
//!                            max_{i<j} d(x,y_i) + d(x,y_j) - d(y_i,y_j) ).
//! ```
//!
//! Witnesses may be taken on segments from `x` towards leaves. For a triple of
//! leaves with smallest depth `m` (seen from `x`) and largest pairwise
//! Gromov product `G` at `x`, the best placement along those segments costs
//! `max(0, l - m, min(2l/3, 2G))`: either every witness is pulled to depth
//! `l/3` so that the cross terms are at most `2l/3`, or they sit at depth
//! `l` and pay the shared prefix. So only the Pareto frontier of `(m, G)`
//! over leaf triples matters, and it is computed bottom-up over the tree
//! rooted at `x`. Along an edge every quantity is linear in the position,
//! which makes `ψ` piecewise linear there with computable breakpoints.

use super::pl::{rmax, rmin, Pl};
use crate::rat::Rat;
use std::collections::HashMap;

use crate::tree::{EdgeIx, NodeIx, PointRef, TreeSkeleton};

/// Pareto frontier of `(m, G)` pairs: larger `m` and smaller `G` are better.
type Frontier = Vec<(Rat, Rat)>;

fn prune(mut f: Frontier) -> Frontier {
    // Sort by m descending, then G ascending; keep strictly improving G.
    f.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out: Frontier = Vec::new();
    for (m, g) in f {
        if out.last().map_or(true, |(_, best)| &g < best) {
            out.push((m, g));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Sets {
    /// Largest leaf depth.
    reach: Rat,
    /// Leaf pairs (repetition allowed).
    pairs: Frontier,
    /// Leaf triples (repetition allowed).
    triples: Frontier,
}

impl Sets {
    fn leaf() -> Sets {
        let z = (Rat::zero(), Rat::zero());
        Sets { reach: Rat::zero(), pairs: vec![z.clone()], triples: vec![z] }
    }

    fn shifted(&self, by: &Rat) -> Sets {
        let sh = |f: &Frontier| f.iter().map(|(m, g)| (m + by, g + by)).collect();
        Sets { reach: &self.reach + by, pairs: sh(&self.pairs), triples: sh(&self.triples) }
    }

    /// Combine the (already shifted) sets of the branches at one vertex.
    fn join(children: &[Sets]) -> Sets {
        if children.is_empty() {
            return Sets::leaf();
        }
        let mut reaches: Vec<(Rat, usize)> = children.iter().enumerate().map(|(i, c)| (c.reach.clone(), i)).collect();
        reaches.sort_by(|a, b| b.0.cmp(&a.0));
        let reach = reaches[0].0.clone();
        let best_other = |i: usize| -> Option<&Rat> {
            reaches.iter().find(|(_, j)| *j != i).map(|(r, _)| r)
        };
        let mut pairs: Frontier = Vec::new();
        let mut triples: Frontier = Vec::new();
        for (i, c) in children.iter().enumerate() {
            pairs.extend(c.pairs.iter().cloned());
            triples.extend(c.triples.iter().cloned());
            if let Some(other) = best_other(i) {
                for (m, g) in &c.pairs {
                    triples.push((rmin(m, other), g.clone()));
                }
            }
        }
        if reaches.len() >= 2 {
            pairs.push((reaches[1].0.clone(), Rat::zero()));
        }
        if reaches.len() >= 3 {
            triples.push((reaches[2].0.clone(), Rat::zero()));
        }
        Sets { reach, pairs: prune(pairs), triples: prune(triples) }
    }
}

/// Sets of the component of `root` after removing the edge towards
/// `exclude`, with depths measured from `root`.
fn component_sets(tree: &TreeSkeleton, root: NodeIx, exclude: Option<NodeIx>) -> Sets {
    // Iterative post-order.
    let mut order: Vec<(NodeIx, Option<NodeIx>)> = Vec::new();
    let mut stack = vec![(root, exclude)];
    while let Some((w, from)) = stack.pop() {
        order.push((w, from));
        for &(c, _) in tree.neighbors(w) {
            if Some(c) != from {
                stack.push((c, Some(w)));
            }
        }
    }
    let mut done: std::collections::HashMap<NodeIx, Sets> = std::collections::HashMap::new();
    for &(w, from) in order.iter().rev() {
        let children: Vec<Sets> = tree
            .neighbors(w)
            .iter()
            .filter(|(c, _)| Some(*c) != from)
            .map(|&(c, e)| done.remove(&c).expect("child first").shifted(&tree.edge(e).len))
            .collect();
        done.insert(w, Sets::join(&children));
    }
    done.remove(&root).expect("root processed")
}

fn psi_from_sets(l: &Rat, s: &Sets, include_self: bool) -> Rat {
    let two_thirds = l.times(2).over(3);
    let mut best = rmax(&two_thirds, &(l - &s.reach));
    if include_self {
        best = rmin(&best, l);
    }
    for (m, g) in &s.triples {
        best = rmin(&best, &rmax(&(l - m), &g.times(2)));
    }
    rmax(&best, &Rat::zero())
}

fn psi_at_vertex(tree: &TreeSkeleton, x: NodeIx, r: &Rat) -> Rat {
    let l = r - tree.depth(x);
    psi_from_sets(&l, &component_sets(tree, x, None), true)
}

/// Sets of every branch component in one sweep: `down[v]` is the subtree
/// below `v`, `up[v]` the component of `v`'s parent after removing `v`'s
/// subtree, measured from the parent.
struct AllSets {
    down: Vec<Sets>,
    up: Vec<Option<Sets>>,
}

fn all_sets(tree: &TreeSkeleton) -> AllSets {
    let n = tree.node_count();
    let mut order = vec![tree.basepoint()];
    let mut i = 0;
    while i < order.len() {
        let w = order[i];
        for &(c, _) in tree.neighbors(w) {
            if tree.parent(w).map(|(q, _)| q) != Some(c) {
                order.push(c);
            }
        }
        i += 1;
    }
    let children = |w: NodeIx| -> Vec<(NodeIx, &Rat)> {
        let par = tree.parent(w).map(|(q, _)| q);
        tree.neighbors(w).iter().filter(|(c, _)| Some(*c) != par).map(|&(c, e)| (c, &tree.edge(e).len)).collect()
    };
    let mut down: Vec<Option<Sets>> = vec![None; n];
    for &w in order.iter().rev() {
        let kids: Vec<Sets> =
            children(w).iter().map(|&(c, len)| down[c.0].as_ref().expect("child first").shifted(len)).collect();
        down[w.0] = Some(Sets::join(&kids));
    }
    let down: Vec<Sets> = down.into_iter().map(|s| s.expect("all nodes reached")).collect();
    let mut up: Vec<Option<Sets>> = vec![None; n];
    for &w in &order {
        let kids = children(w);
        let mut parts: Vec<Sets> = kids.iter().map(|&(c, len)| down[c.0].shifted(len)).collect();
        if let Some((_, e)) = tree.parent(w) {
            parts.push(up[w.0].as_ref().expect("parent first").shifted(&tree.edge(e).len));
        }
        for (k, &(c, _)) in kids.iter().enumerate() {
            let others: Vec<Sets> =
                parts.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, s)| s.clone()).collect();
            up[c.0] = Some(Sets::join(&others));
        }
    }
    AllSets { down, up }
}

/// `ψ` along edge `e` as a function of the offset from its first endpoint.
fn psi_on_edge(tree: &TreeSkeleton, e: EdgeIx, r: &Rat) -> Pl {
    let edge = tree.edge(e);
    let su = component_sets(tree, edge.u, Some(edge.v));
    let sv = component_sets(tree, edge.v, Some(edge.u));
    psi_on_edge_with(tree, e, r, &su, &sv)
}

fn psi_on_edge_with(tree: &TreeSkeleton, e: EdgeIx, r: &Rat, su: &Sets, sv: &Sets) -> Pl {
    let edge = tree.edge(e);
    let (u, v, len) = (edge.u, edge.v, &edge.len);
    // l(t) = r - d(p, x_t) = l0 + sl·t.
    let towards_v_is_down = tree.parent(v).map(|(w, _)| w) == Some(u);
    let l0 = r - tree.depth(u);
    let sl = if towards_v_is_down { Rat::int(-1) } else { Rat::one() };
    let lin = |a: Rat, b: Rat| Pl::linear(len, a, b);
    let l = || lin(l0.clone(), sl.clone());
    // Linear pieces: depths on the u side grow with t, on the v side shrink.
    let u_depth = |m: &Rat| (m.clone(), Rat::one());
    let v_depth = |m: &Rat| (len + m, Rat::int(-1));
    let minus_l = |(a, b): (Rat, Rat)| lin(&l0 - &a, &sl - &b);
    let twice = |(a, b): (Rat, Rat)| lin(a.times(2), b.times(2));

    let mut cands: Vec<Pl> = vec![l()];
    let two_thirds = l().map(|x| x.times(2).over(3));
    let gap = minus_l(u_depth(&su.reach)).combine(&minus_l(v_depth(&sv.reach)), rmin);
    cands.push(two_thirds.combine(&gap, rmax));
    for (own, own_depth, other, other_depth) in
        [(su, &u_depth as &dyn Fn(&Rat) -> (Rat, Rat), sv, &v_depth as &dyn Fn(&Rat) -> (Rat, Rat)), (sv, &v_depth, su, &u_depth)]
    {
        for (m, g) in &own.triples {
            cands.push(minus_l(own_depth(m)).combine(&twice(own_depth(g)), rmax));
        }
        for (m, g) in &own.pairs {
            let far = minus_l(own_depth(m)).combine(&minus_l(other_depth(&other.reach)), rmax);
            cands.push(far.combine(&twice(own_depth(g)), rmax));
        }
    }
    let mut env = cands.pop().expect("nonempty");
    for c in &cands {
        env = env.combine(c, rmin);
    }
    env.combine(&Pl::constant(len, Rat::zero()), rmax)
}

/// An upper bound for `sup ψ` on edge `e`, from the same candidates as
/// [`psi_on_edge_with`]: a linear piece is bounded by its larger endpoint
/// value, and bounds pass through `max` and `min`.
fn psi_edge_bound(tree: &TreeSkeleton, e: EdgeIx, r: &Rat, su: &Sets, sv: &Sets) -> Rat {
    let edge = tree.edge(e);
    let (u, v, len) = (edge.u, edge.v, &edge.len);
    let towards_v_is_down = tree.parent(v).map(|(w, _)| w) == Some(u);
    let l0 = r - tree.depth(u);
    let sl = if towards_v_is_down { Rat::int(-1) } else { Rat::one() };
    let top = |a: Rat, b: Rat| rmax(&a, &(a.clone() + b * len));
    let u_depth = |m: &Rat| (m.clone(), Rat::one());
    let v_depth = |m: &Rat| (len + m, Rat::int(-1));
    let minus_l = |(a, b): (Rat, Rat)| top(&l0 - &a, &sl - &b);
    let twice = |(a, b): (Rat, Rat)| top(a.times(2), b.times(2));

    let l = top(l0.clone(), sl.clone());
    let mut best = l.clone();
    let gap = rmin(&minus_l(u_depth(&su.reach)), &minus_l(v_depth(&sv.reach)));
    best = rmin(&best, &rmax(&l.times(2).over(3), &gap));
    for (own, own_depth, other, other_depth) in
        [(su, &u_depth as &dyn Fn(&Rat) -> (Rat, Rat), sv, &v_depth as &dyn Fn(&Rat) -> (Rat, Rat)), (sv, &v_depth, su, &u_depth)]
    {
        for (m, g) in &own.triples {
            best = rmin(&best, &rmax(&minus_l(own_depth(m)), &twice(own_depth(g))));
        }
        for (m, g) in &own.pairs {
            let far = rmax(&minus_l(own_depth(m)), &minus_l(other_depth(&other.reach)));
            best = rmin(&best, &rmax(&far, &twice(own_depth(g))));
        }
    }
    rmax(&best, &Rat::zero())
}

/// Exact `ψ(x)` for a tree of radius at most `r`.
pub fn psi_at(tree: &TreeSkeleton, x: &PointRef, r: &Rat) -> Rat {
    match x {
        PointRef::Vertex(v) => psi_at_vertex(tree, *v, r),
        PointRef::Edge { edge, offset } => psi_on_edge(tree, *edge, r).at(offset),
    }
}

/// Exact `sup_x ψ(x)`, with a point attaining it.
pub fn rb_deficiency_witness(tree: &TreeSkeleton, r: &Rat) -> (Rat, PointRef) {
    if tree.edge_count() == 0 {
        return (psi_at_vertex(tree, tree.basepoint(), r), tree.base_point());
    }
    let sets = all_sets(tree);
    let oriented = |e: EdgeIx| {
        let edge = tree.edge(e);
        // Orient by the rooted structure: one endpoint is the other's parent.
        let (par, child) = if tree.parent(edge.v).map(|(q, _)| q) == Some(edge.u) { (edge.u, edge.v) } else { (edge.v, edge.u) };
        let (s_par, s_child) = (sets.up[child.0].as_ref().expect("non-root"), &sets.down[child.0]);
        if par == edge.u {
            (s_par, s_child)
        } else {
            (s_child, s_par)
        }
    };
    // ψ along an edge depends only on this key, and enriched trees repeat
    // keys heavily: each class is evaluated once, at its first edge.
    let mut classes: HashMap<(&Rat, bool, &Rat, &Sets, &Sets), EdgeIx> = HashMap::new();
    for e in tree.edge_ixs() {
        let edge = tree.edge(e);
        let down = tree.parent(edge.v).map(|(q, _)| q) == Some(edge.u);
        let (su, sv) = oriented(e);
        classes.entry((tree.depth(edge.u), down, &edge.len, su, sv)).or_insert(e);
    }
    // Most promising classes first; one whose bound cannot beat the current
    // best is skipped.
    let mut order: Vec<(Rat, EdgeIx)> = classes
        .into_values()
        .map(|e| {
            let (su, sv) = oriented(e);
            (psi_edge_bound(tree, e, r, su, sv), e)
        })
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1 .0.cmp(&b.1 .0)));
    let mut best: Option<(Rat, PointRef)> = None;
    for (bound, e) in order {
        if best.as_ref().is_some_and(|(b, _)| bound <= *b) {
            continue;
        }
        let (su, sv) = oriented(e);
        let (t, val) = psi_on_edge_with(tree, e, r, su, sv).max_value();
        if best.as_ref().map_or(true, |(b, _)| val > *b) {
            let at = tree.normalize(&PointRef::Edge { edge: e, offset: t }).expect("on edge");
            best = Some((val, at));
        }
    }
    best.expect("at least one edge")
}

/// Exact `sup_x ψ(x)`.
pub fn rb_deficiency(tree: &TreeSkeleton, r: &Rat) -> Rat {
    rb_deficiency_witness(tree, r).0
}

/// `ψ(x)` written in the formula language, for a given radius.
pub fn psi_formula_text(r: &Rat) -> String {
    let dev = |i: usize| format!("abs(d(x,y{i}) - ({r} -. d(p,x)))");
    let cross = |i: usize, j: usize| format!("((d(x,y{i}) + d(x,y{j})) -. d(y{i},y{j}))");
    format!(
        "inf y1. inf y2. inf y3. max(max({}, max({}, {})), max({}, max({}, {})))",
        dev(1),
        dev(2),
        dev(3),
        cross(1, 2),
        cross(1, 3),
        cross(2, 3)
    )
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
    fn tripod_values() {
        let t = tripod();
        let r = rat!(2);
        assert_eq!(psi_at(&t, &t.at("a"), &r), rat!(0));
        assert_eq!(psi_at(&t, &t.at("y"), &r), rat!(0));
        assert_eq!(psi_at(&t, &t.at("p"), &r), rat!(4 / 3));
        let mid = t.point_on_edge_by_id("p", "y", &rat!(1 / 2)).unwrap();
        assert_eq!(psi_at(&t, &mid, &r), rat!(1));
        let (val, at) = rb_deficiency_witness(&t, &r);
        assert_eq!(val, rat!(4 / 3));
        assert_eq!(at, t.at("p"));
    }

    #[test]
    fn edge_and_vertex_evaluations_agree() {
        let t = tripod();
        for e in t.edge_ixs() {
            let f = psi_on_edge(&t, e, &rat!(2));
            let edge = t.edge(e);
            assert_eq!(f.at(&rat!(0)), psi_at_vertex(&t, edge.u, &rat!(2)));
            assert_eq!(f.at(&edge.len), psi_at_vertex(&t, edge.v, &rat!(2)));
        }
    }

    #[test]
    fn sweep_matches_per_edge_components() {
        let mut g = TreeGraph::new();
        g.basepoint("p").node("y").node("a").node("b").node("c").node("z");
        g.edge("p", "y", rat!(1)).edge("y", "a", rat!(1 / 2)).edge("y", "z", rat!(1 / 3));
        g.edge("z", "b", rat!(1)).edge("p", "c", rat!(3 / 2));
        let t = g.build().unwrap();
        let sets = all_sets(&t);
        for e in t.edge_ixs() {
            let edge = t.edge(e);
            let (par, child) = if t.parent(edge.v).map(|(q, _)| q) == Some(edge.u) { (edge.u, edge.v) } else { (edge.v, edge.u) };
            let r = rat!(3);
            let via_sweep = {
                let (sp, sc) = (sets.up[child.0].as_ref().unwrap(), &sets.down[child.0]);
                let (su, sv) = if par == edge.u { (sp, sc) } else { (sc, sp) };
                psi_on_edge_with(&t, e, &r, su, sv)
            };
            let direct = psi_on_edge(&t, e, &r);
            for k in 0..=6 {
                let x = &edge.len * Rat::new(k, 6);
                assert_eq!(via_sweep.at(&x), direct.at(&x));
            }
            let su = component_sets(&t, edge.u, Some(edge.v));
            let sv = component_sets(&t, edge.v, Some(edge.u));
            assert!(psi_edge_bound(&t, e, &r, &su, &sv) >= direct.max_value().1);
        }
    }

    #[test]
    fn single_point_reports_radius() {
        let t = TreeSkeleton::point("p");
        assert_eq!(rb_deficiency(&t, &rat!(3)), rat!(3));
        assert_eq!(rb_deficiency(&t, &rat!(0)), rat!(0));
    }

    #[test]
    fn formula_text_parses() {
        let f = crate::formula::parse_formula(&psi_formula_text(&rat!(2))).unwrap();
        assert_eq!(f.free_vars().into_iter().collect::<Vec<_>>(), vec!["x"]);
    }
}

